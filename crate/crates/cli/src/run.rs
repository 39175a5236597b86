//! Model construction and analysis dispatch.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use limitcurve::analytic::{self, AnalyticModel, ScalarKind};
use limitcurve::continuation::{trace_ll_indirect, trace_ssr_indirect, ContinuationTrace, StopReason};
use limitcurve::fem::vtk::write_vtk;
use limitcurve::fem::{FemModel, Mesh, SlopeGeometry};
use limitcurve::limitanalysis::{
    bracket_t_star, brackets_from_trace, classify_solvability, ell_curve, find_lambda_star_via_ell, Verdict,
};
use limitcurve::solver::newton_solve;
use limitcurve::{LoadVector, ParamFamily, Potential};
use nalgebra::DMatrix;

use crate::config::{AnalysisConfig, ModelConfig, RunConfig};
use crate::report::{FosBracket, FosReport};

/// Process exit status with its message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Config(String),
    Solver(String),
    /// Outputs were written but the analysis did not settle.
    Partial(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Partial(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Partial(m) => m,
        }
    }
}

enum Model {
    Analytic(AnalyticModel),
    Fem(Box<FemModel>),
}

impl Model {
    fn potential(&self) -> &dyn Potential {
        match self {
            Model::Analytic(m) => m,
            Model::Fem(m) => m.as_ref(),
        }
    }

    fn family(&self) -> Option<&dyn ParamFamily> {
        match self {
            Model::Analytic(m) => m.as_family(),
            Model::Fem(m) => Some(m.as_ref()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Model::Analytic(m) => m.name(),
            Model::Fem(_) => "fem",
        }
    }
}

fn build_model(cfg: &ModelConfig) -> Result<(Model, LoadVector), Failure> {
    let cerr = |e: limitcurve::ModelError| Failure::Config(e.to_string());
    match cfg {
        ModelConfig::Analytic {
            name,
            load,
            lambda0,
            matrix,
        } => {
            let m = match name.as_str() {
                "quadratic1d" => analytic::make_scalar_example(ScalarKind::Quadratic),
                "capped_quadratic1d" => analytic::make_scalar_example(ScalarKind::CappedQuadratic),
                "exp1d" => analytic::make_scalar_example(ScalarKind::Exponential),
                "psd_quadratic" => {
                    let rows = matrix
                        .as_ref()
                        .ok_or_else(|| Failure::Config("psd_quadratic requires model.matrix".into()))?;
                    let n = rows.len();
                    if n == 0 || rows.iter().any(|r| r.len() != n) {
                        return Err(Failure::Config("model.matrix must be square".into()));
                    }
                    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                    analytic::make_psd_quadratic(DMatrix::from_row_slice(n, n, &flat)).map_err(cerr)?
                }
                "ball" => analytic::make_ball_family(*lambda0).map_err(cerr)?,
                "wedge" => analytic::make_wedge_family(*lambda0).map_err(cerr)?,
                other => return Err(Failure::Config(format!("unknown analytic model '{other}'"))),
            };
            let b = match load {
                Some(v) => {
                    if v.len() != m.dim() {
                        return Err(Failure::Config(format!(
                            "model.load has {} entries, model '{}' has dimension {}",
                            v.len(),
                            m.name(),
                            m.dim()
                        )));
                    }
                    LoadVector::new(v.clone(), "configured").map_err(cerr)?
                }
                None => m.default_load(),
            };
            Ok((Model::Analytic(m), b))
        }
        ModelConfig::FemFixture {
            geometry,
            material,
            lambda0,
        } => {
            let mut g = SlopeGeometry::new(geometry.height, geometry.inclination_deg, geometry.pad, geometry.h_mesh);
            if let Some(d) = geometry.depth {
                g.depth = d;
            }
            let mesh = g.mesh().map_err(cerr)?;
            fem_model(mesh, material.to_material(), *lambda0)
        }
        ModelConfig::FemMesh {
            mesh_path,
            material,
            lambda0,
        } => {
            let (mesh, warnings) = Mesh::load_native(mesh_path).map_err(|e| Failure::Config(format!("{}: {e}", mesh_path.display())))?;
            for w in warnings {
                eprintln!("WARNING: {}: {w}", mesh_path.display());
            }
            fem_model(mesh, material.to_material(), *lambda0)
        }
    }
}

fn fem_model(mesh: Mesh, material: limitcurve::fem::MohrCoulomb, lambda0: f64) -> Result<(Model, LoadVector), Failure> {
    let m = FemModel::new(mesh, material, lambda0).map_err(|e| Failure::Config(e.to_string()))?;
    let b = m.load().clone();
    Ok((Model::Fem(Box::new(m)), b))
}

fn stop_name(stop: StopReason) -> String {
    match stop {
        StopReason::Converged => "converged".into(),
        StopReason::MaxSteps => "max_steps".into(),
        StopReason::Ceiling => "ceiling".into(),
        StopReason::SolverFailure(r) => format!("solver_failure:{}", r.as_str()),
    }
}

struct Outputs {
    dir: PathBuf,
    prefix: String,
}

impl Outputs {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}_{suffix}", self.prefix))
    }

    fn write(&self, suffix: &str, text: &str) -> Result<(), Failure> {
        let p = self.path(suffix);
        fs::write(&p, text).map_err(|e| Failure::Solver(format!("cannot write {}: {e}", p.display())))
    }
}

/// Runs the analysis of `cfg` and writes its outputs. Returns the report on
/// success; on failure the report (when one was produced) is still written.
pub fn run(cfg: &RunConfig) -> Result<FosReport, Failure> {
    let start = Instant::now();
    cfg.validate().map_err(Failure::Config)?;
    let out = Outputs {
        dir: cfg.output.dir.clone(),
        prefix: cfg.output.prefix.clone(),
    };
    fs::create_dir_all(&out.dir).map_err(|e| Failure::Config(format!("output dir {} not writable: {e}", out.dir.display())))?;
    check_writable(&out.dir)?;
    let (model, b) = build_model(&cfg.model)?;
    let sched = cfg.schedule();

    let mut report = FosReport {
        method: cfg.analysis.name().into(),
        model: model.name().into(),
        fos: None,
        lower_bound: None,
        bracket: None,
        converged: false,
        steps: 0,
        stop_reason: String::new(),
        verdict: None,
        omega0: None,
        warnings: Vec::new(),
        wall_time_s: None,
        config_echo: cfg.clone(),
    };
    // Field output state, for finite element models.
    let mut fields: Option<Vec<f64>> = None;
    let mut outcome: Result<(), Failure> = Ok(());

    match &cfg.analysis {
        AnalysisConfig::LlTrace {} | AnalysisConfig::SsrTrace {} => {
            let trace = if matches!(cfg.analysis, AnalysisConfig::LlTrace {}) {
                trace_ll_indirect(model.potential(), &b, &sched)
            } else {
                let f = model
                    .family()
                    .ok_or_else(|| Failure::Config(format!("model '{}' has no strength reduction", model.name())))?;
                trace_ssr_indirect(f, &b, &sched)
            };
            out.write("trace.csv", &trace.to_csv())?;
            fill_from_trace(&mut report, &trace);
            if matches!(cfg.analysis, AnalysisConfig::LlTrace {}) {
                if let Some(last) = brackets_from_trace(&trace).last() {
                    report.bracket = Some(FosBracket {
                        lower: last.lower,
                        upper: last.upper,
                    });
                }
            }
            fields = (!trace.records.is_empty()).then(|| trace.last_u.clone());
            outcome = trace_outcome(&trace);
        }
        AnalysisConfig::LaBracket { omega } => match omega {
            Some(w) => {
                let br = bracket_t_star(model.potential(), &b, *w, &sched.newton);
                report.steps = 1;
                report.bracket = Some(FosBracket {
                    lower: br.lower,
                    upper: br.upper,
                });
                report.set_fos(br.upper, br.converged);
                report.stop_reason = if br.converged { "converged" } else { "solver_failure" }.into();
                if !br.converged {
                    outcome = Err(Failure::Solver(format!("saddle solve at omega={w} did not converge")));
                }
            }
            None => {
                let trace = trace_ll_indirect(model.potential(), &b, &sched);
                out.write("trace.csv", &trace.to_csv())?;
                fill_from_trace(&mut report, &trace);
                if let Some(last) = brackets_from_trace(&trace).last() {
                    report.bracket = Some(FosBracket {
                        lower: last.lower,
                        upper: last.upper,
                    });
                }
                fields = (!trace.records.is_empty()).then(|| trace.last_u.clone());
                outcome = trace_outcome(&trace);
            }
        },
        AnalysisConfig::EllCurve {
            lambda_grid,
            root_bracket,
            root_tol,
        } => {
            let f = model
                .family()
                .ok_or_else(|| Failure::Config(format!("model '{}' has no strength reduction", model.name())))?;
            let curve = ell_curve(f, &b, lambda_grid, &sched);
            out.write("ell.csv", &curve.to_csv())?;
            report.steps = curve.samples.len();
            for (lo, hi) in &curve.monotonicity_violations {
                report
                    .warnings
                    .push(format!("ell does not decrease between lambda={lo} and lambda={hi}"));
            }
            let mut lambda_star = curve.lambda_star;
            if let Some(br) = root_bracket {
                match find_lambda_star_via_ell(f, &b, *br, *root_tol, &sched) {
                    Ok(r) => {
                        report.steps += r.evaluations.len();
                        report.bracket = Some(FosBracket { lower: r.lo, upper: r.hi });
                        lambda_star = Some(r.lambda_star);
                    }
                    Err(e) => report.warnings.push(format!("root refinement failed: {e}")),
                }
            }
            match lambda_star {
                Some(l) => {
                    report.set_fos(l, true);
                    report.stop_reason = "converged".into();
                }
                None => {
                    let top = curve.samples.iter().filter(|s| s.ell > 1.0).map(|s| s.lambda).fold(f64::NAN, f64::max);
                    report.set_fos(top, false);
                    report.stop_reason = "no_crossing".into();
                    outcome = Err(Failure::Partial("ell does not cross one on the grid".into()));
                }
            }
        }
        AnalysisConfig::Classify { band } => {
            let v = classify_solvability(model.potential(), &b, *band, &sched);
            out.write("trace.csv", &v.trace.to_csv())?;
            fill_from_trace(&mut report, &v.trace);
            report.verdict = Some(v.verdict.as_str().into());
            // The verdict is the result; an unsettled trace above the band
            // still decides it.
            report.converged = v.verdict != Verdict::Inconclusive;
            if v.verdict == Verdict::Inconclusive {
                outcome = Err(Failure::Partial("classification inconclusive".into()));
            }
        }
        AnalysisConfig::Solve { t } => {
            let p = model.potential();
            let o = newton_solve(p, &b, *t, &vec![0.0; p.dim()], &sched.newton);
            report.steps = o.iterations;
            report.converged = o.converged;
            report.stop_reason = match o.failure {
                None => "converged".into(),
                Some(r) => format!("solver_failure:{}", r.as_str()),
            };
            if o.converged {
                fields = Some(o.u.clone());
                let mut csv = String::from("index,u\n");
                for (i, x) in o.u.iter().enumerate() {
                    csv.push_str(&format!("{i},{x:.16e}\n"));
                }
                out.write("solution.csv", &csv)?;
            } else {
                outcome = Err(Failure::Solver(format!("no equilibrium found at t={t}")));
            }
        }
    }

    if let (Model::Fem(m), Some(u), true) = (&model, &fields, cfg.output.write_vtk) {
        let text = write_vtk(&m.mesh, &m.full_displacement(u), &m.deviatoric_strain(u), &format!("limitcurve {}", report.method));
        out.write("fields.vtk", &text)?;
    }
    if cfg.output.record_wall_time {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    out.write("report.json", &report.to_json())?;
    outcome.map(|_| report)
}

fn fill_from_trace(report: &mut FosReport, trace: &ContinuationTrace) {
    let (est, conv) = trace.fos_estimate();
    report.steps = trace.records.len();
    report.stop_reason = stop_name(trace.stop);
    report.omega0 = trace.omega0;
    report.set_fos(est, conv);
    if trace.max_decrease() > 10.0 * trace.fos_rel_tol * est.abs() {
        report
            .warnings
            .push(format!("factor decreases by {:e} along the trace", trace.max_decrease()));
    }
}

fn trace_outcome(trace: &ContinuationTrace) -> Result<(), Failure> {
    match trace.stop {
        StopReason::Converged => Ok(()),
        StopReason::SolverFailure(r) if trace.records.is_empty() => {
            Err(Failure::Solver(format!("first step failed: {}", r.as_str())))
        }
        s => Err(Failure::Partial(format!("trace did not settle ({})", stop_name(s)))),
    }
}

fn check_writable(dir: &Path) -> Result<(), Failure> {
    let probe = dir.join(".limitcurve-write-check");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| Failure::Config(format!("output dir {} not writable: {e}", dir.display())))
}

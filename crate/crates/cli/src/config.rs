//! JSON run configuration.
//!
//! Every section except `model` and `analysis` may be omitted; missing
//! fields take the library defaults, and the resolved configuration is
//! echoed into the report.

use std::path::{Path, PathBuf};

use limitcurve::{NewtonOptions, ScheduleOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Analytic {
        name: String,
        /// Load vector; the model's default load when absent.
        #[serde(default)]
        load: Option<Vec<f64>>,
        #[serde(default = "default_lambda0")]
        lambda0: f64,
        /// Row-major square matrix of `psd_quadratic`.
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
    },
    FemFixture {
        geometry: GeometryConfig,
        #[serde(default)]
        material: MaterialConfig,
        #[serde(default = "default_lambda0")]
        lambda0: f64,
    },
    FemMesh {
        /// Resolved relative to the directory of the configuration file.
        mesh_path: PathBuf,
        #[serde(default)]
        material: MaterialConfig,
        #[serde(default = "default_lambda0")]
        lambda0: f64,
    },
}

fn default_lambda0() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub height: f64,
    pub inclination_deg: f64,
    pub pad: f64,
    /// Foundation depth below the toe; half the height when absent.
    #[serde(default)]
    pub depth: Option<f64>,
    pub h_mesh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    pub young: f64,
    pub poisson: f64,
    pub friction_deg: f64,
    pub cohesion: f64,
    pub unit_weight: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let m = limitcurve::fem::MohrCoulomb::default();
        Self {
            young: m.young,
            poisson: m.poisson,
            friction_deg: m.friction_deg,
            cohesion: m.cohesion,
            unit_weight: m.unit_weight,
        }
    }
}

impl MaterialConfig {
    pub fn to_material(&self) -> limitcurve::fem::MohrCoulomb {
        limitcurve::fem::MohrCoulomb {
            young: self.young,
            poisson: self.poisson,
            friction_deg: self.friction_deg,
            cohesion: self.cohesion,
            unit_weight: self.unit_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisConfig {
    LlTrace {},
    SsrTrace {},
    LaBracket {
        /// Work at which the bounds are computed; the end of a load factor
        /// trace when absent.
        #[serde(default)]
        omega: Option<f64>,
    },
    EllCurve {
        lambda_grid: Vec<f64>,
        /// Refines the crossing of one by root finding inside this interval.
        #[serde(default)]
        root_bracket: Option<(f64, f64)>,
        #[serde(default = "default_root_tol")]
        root_tol: f64,
    },
    Classify {
        #[serde(default = "default_band")]
        band: f64,
    },
    Solve {
        #[serde(default = "default_t")]
        t: f64,
    },
}

fn default_root_tol() -> f64 {
    1e-6
}

fn default_band() -> f64 {
    1e-3
}

fn default_t() -> f64 {
    1.0
}

impl AnalysisConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisConfig::LlTrace {} => "ll-trace",
            AnalysisConfig::SsrTrace {} => "ssr-trace",
            AnalysisConfig::LaBracket { .. } => "la-bracket",
            AnalysisConfig::EllCurve { .. } => "ell-curve",
            AnalysisConfig::Classify { .. } => "classify",
            AnalysisConfig::Solve { .. } => "solve",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub omega_start: Option<f64>,
    pub omega_step0: Option<f64>,
    pub growth_factor: f64,
    pub stall_threshold: f64,
    pub easy_newton_iters: usize,
    pub max_steps: usize,
    pub fos_window: usize,
    pub fos_rel_tol: f64,
    pub factor_ceiling: f64,
    pub max_step_cuts: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let s = ScheduleOptions::default();
        Self {
            omega_start: s.omega_start,
            omega_step0: s.omega_step0,
            growth_factor: s.growth_factor,
            stall_threshold: s.stall_threshold,
            easy_newton_iters: s.easy_newton_iters,
            max_steps: s.max_steps,
            fos_window: s.fos_window,
            fos_rel_tol: s.fos_rel_tol,
            factor_ceiling: s.factor_ceiling,
            max_step_cuts: s.max_step_cuts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iter: usize,
    pub backtrack: f64,
    pub min_step: f64,
    pub armijo: f64,
    pub reg_initial: f64,
    pub reg_max: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        let n = NewtonOptions::default();
        Self {
            tol_rel: n.tol_rel,
            tol_abs: n.tol_abs,
            max_iter: n.max_iter,
            backtrack: n.backtrack,
            min_step: n.min_step,
            armijo: n.armijo,
            reg_initial: n.reg_initial,
            reg_max: n.reg_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
    /// Field output for finite element models.
    pub write_vtk: bool,
    /// Records the elapsed time in the report, which makes it differ
    /// between runs.
    pub record_wall_time: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            prefix: "run".into(),
            write_vtk: true,
            record_wall_time: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => format!("config not found: {}", path.display()),
            _ => format!("cannot read config {}: {e}", path.display()),
        })?;
        let mut cfg = Self::parse(&text)?;
        if let ModelConfig::FemMesh { mesh_path, .. } = &mut cfg.model {
            if mesh_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh_path = dir.join(&*mesh_path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn schedule(&self) -> ScheduleOptions {
        let s = &self.schedule;
        ScheduleOptions {
            omega_start: s.omega_start,
            omega_step0: s.omega_step0,
            growth_factor: s.growth_factor,
            stall_threshold: s.stall_threshold,
            easy_newton_iters: s.easy_newton_iters,
            max_steps: s.max_steps,
            fos_window: s.fos_window,
            fos_rel_tol: s.fos_rel_tol,
            factor_ceiling: s.factor_ceiling,
            max_step_cuts: s.max_step_cuts,
            newton: self.newton_options(),
        }
    }

    pub fn newton_options(&self) -> NewtonOptions {
        let n = &self.newton;
        NewtonOptions {
            tol_rel: n.tol_rel,
            tol_abs: n.tol_abs,
            max_iter: n.max_iter,
            backtrack: n.backtrack,
            min_step: n.min_step,
            armijo: n.armijo,
            reg_initial: n.reg_initial,
            reg_max: n.reg_max,
        }
    }

    /// Checks the option ranges that the library assumes.
    pub fn validate(&self) -> Result<(), String> {
        let s = &self.schedule;
        if s.growth_factor <= 1.0 || !s.growth_factor.is_finite() {
            return Err("schedule.growth_factor must exceed 1".into());
        }
        if s.max_steps == 0 {
            return Err("schedule.max_steps must be positive".into());
        }
        if !(s.fos_rel_tol > 0.0) {
            return Err("schedule.fos_rel_tol must be positive".into());
        }
        for (v, name) in [(s.omega_start, "omega_start"), (s.omega_step0, "omega_step0")] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("schedule.{name} must be positive"));
                }
            }
        }
        let n = &self.newton;
        if !(n.tol_rel >= 0.0 && n.tol_abs >= 0.0 && n.max_iter > 0) {
            return Err("newton tolerances must be nonnegative and max_iter positive".into());
        }
        if !(n.backtrack > 0.0 && n.backtrack < 1.0) {
            return Err("newton.backtrack must lie in (0, 1)".into());
        }
        match &self.analysis {
            AnalysisConfig::EllCurve {
                lambda_grid,
                root_bracket,
                root_tol,
            } => {
                if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                    return Err("analysis.lambda_grid must hold positive values".into());
                }
                if let Some((lo, hi)) = root_bracket {
                    if !(lo < hi) {
                        return Err("analysis.root_bracket must be increasing".into());
                    }
                }
                if !(*root_tol > 0.0) {
                    return Err("analysis.root_tol must be positive".into());
                }
            }
            AnalysisConfig::LaBracket { omega: Some(w) } if !(*w > 0.0 && w.is_finite()) => {
                return Err("analysis.omega must be positive".into());
            }
            AnalysisConfig::Classify { band } if !(*band >= 0.0) => {
                return Err("analysis.band must be nonnegative".into());
            }
            AnalysisConfig::Solve { t } if !t.is_finite() => {
                return Err("analysis.t must be finite".into());
            }
            _ => {}
        }
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err("output.prefix must be a plain file name prefix".into());
        }
        Ok(())
    }
}

//! Closed-form checks of the analytic models and of every analysis routine
//! that runs on them.

use limitcurve::analytic::*;
use limitcurve::continuation::*;
use limitcurve::limitanalysis::*;
use limitcurve::linalg::SparseMat;
use limitcurve::potential::*;
use limitcurve::solver::*;
use nalgebra::DMatrix;

fn load(v: &[f64]) -> LoadVector {
    LoadVector::new(v.to_vec(), "test").unwrap()
}

fn capped() -> AnalyticModel {
    make_scalar_example(ScalarKind::CappedQuadratic)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn scaled_values() {
    let q = make_scalar_example(ScalarKind::Quadratic);
    assert_eq!(scaled_value(&q, &[1.0], 4.0), 2.0);
    assert_eq!(scaled_value(&q, &[0.3], 1.0), q.value(&[0.3]));
    assert!(close(scaled_value(&capped(), &[1.0], 10.0), 0.95, 1e-15));
}

#[test]
#[should_panic]
fn scaled_value_rejects_nonpositive_scaling() {
    scaled_value(&capped(), &[1.0], 0.0);
}

#[test]
fn model_values() {
    assert_eq!(capped().value(&[2.0]), 1.5);
    assert_eq!(make_scalar_example(ScalarKind::Exponential).grad(&[0.0]), vec![0.0]);
    assert!(make_scalar_example(ScalarKind::Quadratic).reference_t_star(&load(&[1.0])).is_infinite());

    let psd = make_psd_quadratic(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]))).unwrap();
    assert!(psd.reference_t_star(&load(&[1.0, 0.0])).is_infinite());
    assert_eq!(psd.reference_t_star(&load(&[0.0, 1.0])), Extended::Finite(0.0));
    let id = make_psd_quadratic(DMatrix::identity(2, 2)).unwrap();
    assert_eq!(id.grad(&[0.3, -0.7]), vec![0.3, -0.7]);

    let ball = make_ball_family(0.5).unwrap();
    let f = ball.as_family().unwrap();
    assert!(close(ball.reference_lambda_star(&load(&[0.6, 0.0])).unwrap(), 1.0 / 0.6, 1e-15));
    assert!(close(f.value_at(1.0, &[0.5, 0.0]), 0.125, 1e-15));
    assert_eq!(f.grad_at(1.0, &[2.0, 0.0]), vec![1.0, 0.0]);

    let wedge = make_wedge_family(0.5).unwrap();
    let f = wedge.as_family().unwrap();
    assert!(close(wedge.reference_lambda_star(&load(&[0.5, 1.0])).unwrap(), 1.5, 1e-15));
    assert!(close(f.value_at(1.0, &[2.0, 0.0]), 2.0, 1e-15));
    assert!(close(f.value_at(1.0, &[-5.0, 0.0]), 4.5, 1e-15));
}

#[test]
fn gradient_checks_on_smooth_points() {
    let q = make_scalar_example(ScalarKind::Quadratic);
    assert!(check_gradient(&q, &[0.7], 1e-5) <= 1e-8);
    let ball = make_ball_family(0.5).unwrap();
    assert!(check_gradient(&ball, &[0.3, -0.4], 1e-6) <= 1e-6);
}

/// Capped quadratic for every reduction factor.
struct Constant;
struct Inverted;

impl ParamFamily for Constant {
    fn dim(&self) -> usize {
        1
    }
    fn lambda0(&self) -> f64 {
        0.5
    }
    fn value_at(&self, _l: f64, v: &[f64]) -> f64 {
        capped().value(v)
    }
    fn grad_at(&self, _l: f64, v: &[f64]) -> Vec<f64> {
        capped().grad(v)
    }
    fn hessian_at(&self, _l: f64, v: &[f64]) -> SparseMat {
        capped().hessian(v)
    }
}

/// Strength grows with the reduction factor.
impl ParamFamily for Inverted {
    fn dim(&self) -> usize {
        1
    }
    fn lambda0(&self) -> f64 {
        0.5
    }
    fn value_at(&self, l: f64, v: &[f64]) -> f64 {
        0.5 * l * v[0] * v[0]
    }
    fn grad_at(&self, l: f64, v: &[f64]) -> Vec<f64> {
        vec![l * v[0]]
    }
    fn hessian_at(&self, l: f64, _v: &[f64]) -> SparseMat {
        SparseMat::diagonal(&[l])
    }
}

#[test]
fn monotone_family_check() {
    let ball = make_ball_family(0.5).unwrap();
    let pts = vec![vec![3.0, 0.0]];
    assert!(check_monotone_family(ball.as_family().unwrap(), &[0.5, 1.0, 2.0], &pts).is_ok());
    assert!(check_monotone_family(&Constant, &[0.5, 1.0, 2.0], &[vec![2.0]]).is_ok());
    assert!(matches!(
        check_monotone_family(&Inverted, &[0.5, 1.0, 2.0], &[vec![2.0]]),
        Err(MonotoneError::Violation { .. })
    ));
    assert_eq!(check_monotone_family(&Constant, &[], &pts), Err(MonotoneError::EmptySample));
}

#[test]
fn newton_examples() {
    let opts = NewtonOptions::default();
    let b = load(&[1.0]);
    let o = newton_solve(&capped(), &b, 0.5, &[0.0], &opts);
    assert!(o.converged && close(o.u[0], 0.5, 1e-10));
    let o = newton_solve(&capped(), &b, 0.0, &[0.0], &opts);
    assert!(o.converged && o.u == vec![0.0] && o.iterations == 0);
    let o = newton_solve(&make_scalar_example(ScalarKind::Exponential), &b, 0.9, &[0.0], &opts);
    assert!(o.converged && close(o.u[0], -(0.1f64).ln(), 1e-9), "{:?}", o.u);
}

#[test]
fn bordered_examples() {
    let id = SparseMat::diagonal(&[1.0, 1.0]);
    let (du, ds) = solve_bordered_system(&id, &[1.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], 0.0).unwrap();
    assert!(close(ds, 1.0, 1e-14) && close(du[0], 0.0, 1e-14) && close(du[1], 1.0, 1e-14));
    let (du, ds) = solve_bordered_system(&id, &[1.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], 0.0).unwrap();
    assert_eq!((du, ds), (vec![0.0, 0.0], 0.0));
}

#[test]
fn ll_saddle_examples() {
    let opts = NewtonOptions::default();
    let b = load(&[1.0]);
    let o = saddle_solve_ll(&capped(), &b, 0.5, (&[0.0], 0.0), &opts);
    assert!(o.converged && close(o.u[0], 0.5, 1e-10) && close(o.factor, 0.5, 1e-10));
    let o = saddle_solve_ll(&capped(), &b, 2.0, (&[0.0], 0.0), &opts);
    assert!(o.converged && close(o.u[0], 2.0, 1e-10) && close(o.factor, 1.0, 1e-10));
    let o = saddle_solve_ll(&capped(), &b, 0.0, (&[0.0], 0.0), &opts);
    assert!(o.converged && o.u == vec![0.0] && o.factor == 0.0);
}

#[test]
fn ssr_saddle_examples() {
    let opts = NewtonOptions::default();
    let ball = make_ball_family(0.5).unwrap();
    let b = load(&[0.6, 0.0]);
    let o = saddle_solve_ssr(ball.as_family().unwrap(), &b, 1.0, (&[0.6, 0.0], 0.5), &opts);
    assert!(o.converged && close(o.factor, 1.0 / 0.6, 1e-8), "{o:?}");
    // at omega0 every lambda up to the limit solves the system
    let o = saddle_solve_ssr(ball.as_family().unwrap(), &b, 0.36, (&[0.6, 0.0], 0.5), &opts);
    assert!(o.converged && o.factor >= 0.5 - 1e-12 && o.factor <= 1.0 / 0.6 + 1e-8);
    assert!(close(o.u[0], 0.6, 1e-10));

    let wedge = make_wedge_family(0.5).unwrap();
    let b = load(&[0.5, 1.0]);
    let t = trace_ssr_indirect(wedge.as_family().unwrap(), &b, &ScheduleOptions::default());
    let u0 = t.last_u.clone();
    let o = saddle_solve_ssr(wedge.as_family().unwrap(), &b, 10.0, (&u0, 1.4), &opts);
    assert!(o.converged && close(o.factor, 1.5, 1e-8), "{o:?}");
}

#[test]
fn capped_trace_doubles_past_saturation() {
    let sched = ScheduleOptions {
        omega_start: Some(0.25),
        omega_step0: Some(0.25),
        easy_newton_iters: 0,
        ..Default::default()
    };
    let t = trace_ll_indirect(&capped(), &load(&[1.0]), &sched);
    assert!(t.converged);
    let om: Vec<f64> = t.records.iter().map(|r| r.omega).collect();
    for r in &t.records {
        assert!(close(r.factor, r.omega.min(1.0), 1e-9), "{r:?}");
    }
    // once flat, each increment is twice the previous one
    let flat: Vec<f64> = om.windows(2).filter(|w| w[0] >= 1.0).map(|w| w[1] - w[0]).collect();
    assert!(flat.len() >= 3);
    for w in flat.windows(2) {
        assert!(close(w[1], 2.0 * w[0], 1e-12), "{flat:?}");
    }
    assert_eq!(t.fos_estimate(), (1.0, true));
}

#[test]
fn steady_growth_keeps_the_step() {
    let q = make_scalar_example(ScalarKind::Quadratic);
    let sched = ScheduleOptions {
        omega_start: Some(1.0),
        omega_step0: Some(1.0),
        easy_newton_iters: 0,
        max_steps: 10,
        ..Default::default()
    };
    let t = trace_ll_indirect(&q, &load(&[1.0]), &sched);
    let steps: Vec<f64> = t.records.windows(2).map(|w| w[1].omega - w[0].omega).collect();
    assert!(steps.iter().all(|s| close(*s, 1.0, 1e-12)), "{steps:?}");
    assert_eq!(t.stop, StopReason::MaxSteps);
    assert_eq!(t.fos_estimate(), (t.records.last().unwrap().factor, false));
}

#[test]
fn exp_trace_follows_closed_form() {
    let m = make_scalar_example(ScalarKind::Exponential);
    let t = trace_ll_indirect(&m, &load(&[1.0]), &ScheduleOptions::default());
    assert!(t.converged);
    for r in &t.records {
        assert!(close(r.factor, 1.0 - (-r.omega).exp(), 1e-9), "{r:?}");
    }
    assert!(t.max_decrease() == 0.0);
    assert!(close(t.fos_estimate().0, 1.0, 1e-4));
}

#[test]
fn quadratic_trace_never_saturates() {
    let q = make_scalar_example(ScalarKind::Quadratic);
    let t = trace_ll_indirect(&q, &load(&[1.0]), &ScheduleOptions::default());
    assert!(!t.converged);
    for r in &t.records {
        assert!(close(r.factor, r.omega, 1e-8 * r.omega.max(1.0)));
    }
}

#[test]
fn direct_trace() {
    let opts = NewtonOptions::default();
    let b = load(&[1.0]);
    let t = trace_ll_direct(&capped(), &b, &[0.5, 0.9, 0.99], &opts);
    assert!(t.converged && t.records.len() == 3);
    for (r, u) in t.records.iter().zip([0.5, 0.9, 0.99]) {
        assert!(close(r.work, u, 1e-10));
    }
    let t = trace_ll_direct(&capped(), &b, &[0.5, 1.5], &opts);
    assert!(!t.converged && t.records.len() == 1);
    let t = trace_ll_direct(&capped(), &b, &[0.0], &opts);
    assert_eq!(t.records[0].u_norm, 0.0);
}

#[test]
fn fos_estimate_of_short_traces() {
    let r = TraceRecord {
        omega: 1.0,
        factor: 0.7,
        work: 1.0,
        u_norm: 1.0,
        newton_iters: 1,
        residual: 0.0,
        potential: 0.5,
    };
    assert_eq!(estimate_fos(&[r], 5, 1e-4), (0.7, false));
}

#[test]
fn ssr_traces_of_families() {
    let sched = ScheduleOptions::default();
    let ball = make_ball_family(0.5).unwrap();
    let t = trace_ssr_indirect(ball.as_family().unwrap(), &load(&[0.6, 0.0]), &sched);
    assert!(t.converged);
    assert!(close(t.omega0.unwrap(), 0.36, 1e-10));
    // the factor jumps to the limit at the first work above omega0
    for r in &t.records[1..] {
        assert!(close(r.factor, 1.0 / 0.6, 1e-8), "{r:?}");
    }
    let wedge = make_wedge_family(0.5).unwrap();
    let t = trace_ssr_indirect(wedge.as_family().unwrap(), &load(&[0.5, 1.0]), &sched);
    assert!(t.converged && close(t.fos_estimate().0, 1.5, 1e-6));
    assert!(close(t.omega0.unwrap(), 1.25, 1e-10));
}

#[test]
fn brackets() {
    let opts = NewtonOptions::default();
    let b = load(&[1.0]);
    let br = bracket_t_star(&capped(), &b, 2.0, &opts);
    assert!(br.converged && close(br.lower, 0.75, 1e-10) && close(br.upper, 1.0, 1e-10));
    let br = bracket_t_star(&capped(), &b, 10.0, &opts);
    assert!(close(br.lower, 0.95, 1e-10) && close(br.upper, 1.0, 1e-10));
    let exp = make_scalar_example(ScalarKind::Exponential);
    for omega in [1.0, 5.0, 20.0] {
        let br = bracket_t_star(&exp, &b, omega, &opts);
        let lower = 1.0 - (1.0 - (-omega).exp()) / omega;
        assert!(close(br.lower, lower, 1e-9), "{br:?}");
        assert!(br.lower <= br.upper && br.upper <= 1.0);
    }
}

#[test]
fn recession_values() {
    let q = make_scalar_example(ScalarKind::Quadratic);
    assert!(recession_value(&q, &[1.0], 1e12, 1e6).value.is_infinite());
    let r = recession_value(&capped(), &[1.0], 1e12, 1e6);
    assert!(r.settled && close(r.value.finite().unwrap(), 1.0, 1e-7));
    let wedge = make_wedge_family(0.5).unwrap();
    let r = recession_value(&wedge, &[-1.0, 0.5], 1e12, 1e6);
    assert!(r.settled && close(r.value.finite().unwrap(), 1.0, 1e-7), "{r:?}");
}

#[test]
fn classifier_examples() {
    let sched = ScheduleOptions::default();
    let v = classify_solvability(&capped(), &load(&[0.5]), 1e-3, &sched);
    assert_eq!(v.verdict, Verdict::BoundedNonempty);
    let v = classify_solvability(&capped(), &load(&[1.0]), 1e-3, &sched);
    assert_eq!(v.verdict, Verdict::BoundaryCase);
    let psd = make_psd_quadratic(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]))).unwrap();
    let v = classify_solvability(&psd, &load(&[0.0, 1.0]), 1e-3, &sched);
    assert_eq!(v.verdict, Verdict::Unsolvable, "{:?}", v.t_inf_estimate);
}

#[test]
fn ell_values_and_roots() {
    let sched = ScheduleOptions::default();
    let ball = make_ball_family(0.5).unwrap();
    let fb = ball.as_family().unwrap();
    let bb = load(&[0.6, 0.0]);
    assert!(close(ell_value(fb, &bb, 1.0, &sched).ell, 1.0 / 0.6, 1e-6));
    let wedge = make_wedge_family(0.5).unwrap();
    let fw = wedge.as_family().unwrap();
    let bw = load(&[0.5, 1.0]);
    assert!(close(ell_value(fw, &bw, 1.0, &sched).ell, 2.0, 1e-6));
    assert!(close(ell_value(fw, &bw, 1.5, &sched).ell, 1.0, 1e-6));

    let r = find_lambda_star_via_ell(fw, &bw, (0.5, 3.0), 1e-6, &sched).unwrap();
    assert!(close(r.lambda_star, 1.5, 1e-6));
    let r = find_lambda_star_via_ell(fb, &bb, (0.5, 3.0), 1e-6, &sched).unwrap();
    assert!(close(r.lambda_star, 1.0 / 0.6, 1e-6));
    assert!(matches!(
        find_lambda_star_via_ell(fb, &bb, (2.0, 3.0), 1e-6, &sched),
        Err(limitcurve::AnalysisError::InvalidBracket { .. })
    ));
}

#[test]
fn ell_curves() {
    let sched = ScheduleOptions::default();
    let wedge = make_wedge_family(0.5).unwrap();
    let c = ell_curve(wedge.as_family().unwrap(), &load(&[0.5, 1.0]), &[0.5, 1.0, 1.5, 2.0], &sched);
    assert!(!c.samples[0].converged);
    for (s, e) in c.samples[1..].iter().zip([2.0, 1.0, 2.0 / 3.0]) {
        assert!(s.converged && close(s.ell, e, 1e-6), "{s:?}");
    }
    assert!(close(c.lambda_star.unwrap(), 1.5, 1e-6));
    assert!(c.monotonicity_violations.is_empty());

    let ball = make_ball_family(0.5).unwrap();
    let c = ell_curve(ball.as_family().unwrap(), &load(&[0.6, 0.0]), &[0.5, 1.0 / 0.6], &sched);
    assert!(close(c.samples[0].ell, 1.0 / 0.3, 1e-6) && close(c.samples[1].ell, 1.0, 1e-6));

    let c = ell_curve(&Constant, &load(&[1.0]), &[0.5, 1.0], &sched);
    assert_eq!(c.monotonicity_violations, vec![(0.5, 1.0)]);
}

//! Indirect continuation: the work `omega = b^T u` is prescribed and the
//! load factor (or the strength reduction factor) is a Lagrange multiplier.
//! The resulting curve `omega -> factor` is nondecreasing and saturates at
//! the limit value.

use std::fmt::Write as _;

use crate::potential::{model_at, norm, LoadVector, ParamFamily, Potential};
use crate::solver::{
    newton_solve, saddle_solve_ll, saddle_solve_ssr, FailureReason, NewtonOptions, SolveOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleOptions {
    /// First prescribed work. Chosen from the model when absent.
    pub omega_start: Option<f64>,
    /// Initial work increment. Chosen from the model when absent.
    pub omega_step0: Option<f64>,
    pub growth_factor: f64,
    /// The increment grows once the normalized slope
    /// `(d factor / d omega) * omega / factor` drops below this value.
    pub stall_threshold: f64,
    /// The increment also grows after a step whose Newton solve took at
    /// most this many iterations.
    pub easy_newton_iters: usize,
    pub max_steps: usize,
    pub fos_window: usize,
    pub fos_rel_tol: f64,
    /// Factors above this value are reported as an unbounded limit.
    pub factor_ceiling: f64,
    /// Number of times a failed step is retried with a halved increment.
    pub max_step_cuts: usize,
    pub newton: NewtonOptions,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self {
            omega_start: None,
            omega_step0: None,
            growth_factor: 2.0,
            stall_threshold: 1e-3,
            easy_newton_iters: 4,
            max_steps: 200,
            fos_window: 5,
            fos_rel_tol: 1e-4,
            factor_ceiling: 1e6,
            max_step_cuts: 6,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub omega: f64,
    pub factor: f64,
    /// `b^T u` of the converged state; equals `omega` up to the tolerance.
    pub work: f64,
    pub u_norm: f64,
    pub newton_iters: usize,
    pub residual: f64,
    /// Potential energy of the converged state.
    pub potential: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    LoadFactor,
    StrengthReduction,
    DirectLoad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxSteps,
    /// The factor exceeded the ceiling while still increasing.
    Ceiling,
    SolverFailure(FailureReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationTrace {
    pub method: TraceMethod,
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub stop: StopReason,
    /// Displacement of the last converged step.
    pub last_u: Vec<f64>,
    /// Work of the solution at `lambda0` for strength reduction traces.
    pub omega0: Option<f64>,
    pub fos_window: usize,
    pub fos_rel_tol: f64,
}

/// Estimate of the limit value from the tail of a trace.
///
/// Converged when the last `window` factors agree to `rel_tol` relative to
/// their maximum (with an absolute floor of `1e-12`).
pub fn estimate_fos(records: &[TraceRecord], window: usize, rel_tol: f64) -> (f64, bool) {
    let Some(last) = records.last() else {
        return (f64::NAN, false);
    };
    if window == 0 || records.len() < window {
        return (last.factor, false);
    }
    let tail = &records[records.len() - window..];
    let max = tail.iter().map(|r| r.factor).fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().map(|r| r.factor).fold(f64::INFINITY, f64::min);
    (last.factor, max - min <= rel_tol * max.abs() + 1e-12)
}

impl ContinuationTrace {
    pub fn fos_estimate(&self) -> (f64, bool) {
        let (v, _) = estimate_fos(&self.records, self.fos_window, self.fos_rel_tol);
        (v, self.converged)
    }

    /// Largest decrease between consecutive factors (zero for monotone traces).
    pub fn max_decrease(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[0].factor - w[1].factor).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,factor,work,u_norm,newton_iters,residual\n");
        for r in &self.records {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt17(r.omega),
                fmt17(r.factor),
                fmt17(r.work),
                fmt17(r.u_norm),
                r.newton_iters,
                fmt17(r.residual)
            )
            .unwrap();
        }
        s
    }
}

/// Seventeen significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn record(omega: f64, o: &SolveOutcome, b: &LoadVector, potential: f64) -> TraceRecord {
    TraceRecord {
        omega,
        factor: o.factor,
        work: b.work(&o.u),
        u_norm: norm(&o.u),
        newton_iters: o.iterations,
        residual: o.residual,
        potential,
    }
}

fn normalized_slope(prev: &TraceRecord, cur: &TraceRecord) -> f64 {
    let d_omega = cur.omega - prev.omega;
    if cur.factor.abs() <= 1e-12 || d_omega <= 0.0 {
        return 0.0;
    }
    (cur.factor - prev.factor) / d_omega * cur.omega / cur.factor
}

/// Default first work and increment for the load factor trace.
fn ll_defaults<P: Potential + ?Sized>(model: &P, b: &LoadVector, opts: &NewtonOptions) -> (f64, f64) {
    let bn = b.norm();
    let fallback = bn * 1e-2;
    let Some(hint) = model.growth_hint() else {
        return (fallback, fallback);
    };
    let zero = vec![0.0; model.dim()];
    let work_at = |t: f64| {
        let o = newton_solve(model, b, t, &zero, opts);
        let w = b.work(&o.u);
        (o.converged && w > 0.0).then_some(w)
    };
    let start = work_at(0.01 * hint.c1 / bn).unwrap_or(fallback);
    let step = work_at(0.5 * hint.c1 / bn).unwrap_or(start);
    (start, step)
}

struct Stepper<'a> {
    sched: &'a ScheduleOptions,
    b: &'a LoadVector,
    records: Vec<TraceRecord>,
}

impl<'a> Stepper<'a> {
    /// Predictor/corrector loop starting from the converged `state`
    /// `(u, factor, omega)`. `solve(omega, u_guess, factor_guess)` returns
    /// the outcome and the potential of the converged state.
    fn run<S>(&mut self, mut state: (Vec<f64>, f64, f64), omega_start: f64, step0: f64, solve: S) -> (StopReason, Vec<f64>)
    where
        S: Fn(f64, &[f64], f64) -> (SolveOutcome, f64),
    {
        let sched = self.sched;
        let mut step = step0;
        let mut omega = omega_start;
        for _ in 0..sched.max_steps {
            let omega_prev = state.2;
            let mut cuts = 0;
            let (outcome, pot) = loop {
                let guess: Vec<f64> = if omega_prev > 0.0 {
                    state.0.iter().map(|x| x * omega / omega_prev).collect()
                } else {
                    state.0.clone()
                };
                let (o, pot) = solve(omega, &guess, state.1);
                if o.converged {
                    break (o, pot);
                }
                if cuts >= sched.max_step_cuts {
                    let reason = o.failure.unwrap_or(FailureReason::MaxIter);
                    return (StopReason::SolverFailure(reason), state.0);
                }
                cuts += 1;
                step *= 0.5;
                omega = if omega_prev > 0.0 { omega_prev + step } else { 0.5 * omega };
            };
            self.records.push(record(omega, &outcome, self.b, pot));
            state = (outcome.u, outcome.factor, omega);
            if let Some(reason) = self.after_step(&mut step) {
                return (reason, state.0);
            }
            omega += step;
        }
        (StopReason::MaxSteps, state.0)
    }

    fn after_step(&mut self, step: &mut f64) -> Option<StopReason> {
        let sched = self.sched;
        let (_, conv) = estimate_fos(&self.records, sched.fos_window, sched.fos_rel_tol);
        let cur = *self.records.last().unwrap();
        if conv {
            return Some(StopReason::Converged);
        }
        if cur.factor > sched.factor_ceiling {
            return Some(StopReason::Ceiling);
        }
        if self.records.len() >= 2 {
            let prev = self.records[self.records.len() - 2];
            if normalized_slope(&prev, &cur) < sched.stall_threshold || cur.newton_iters <= sched.easy_newton_iters {
                *step *= sched.growth_factor;
            }
        }
        None
    }
}

fn finish(method: TraceMethod, stepper: Stepper<'_>, stop: StopReason, last_u: Vec<f64>, omega0: Option<f64>) -> ContinuationTrace {
    ContinuationTrace {
        method,
        converged: stop == StopReason::Converged,
        records: stepper.records,
        stop,
        last_u,
        omega0,
        fos_window: stepper.sched.fos_window,
        fos_rel_tol: stepper.sched.fos_rel_tol,
    }
}

/// Load factor curve `omega -> t_omega` of the problem `F(u) = t b`.
pub fn trace_ll_indirect<P: Potential + ?Sized>(model: &P, b: &LoadVector, sched: &ScheduleOptions) -> ContinuationTrace {
    let (d_start, d_step) = if sched.omega_start.is_none() || sched.omega_step0.is_none() {
        ll_defaults(model, b, &sched.newton)
    } else {
        (0.0, 0.0)
    };
    let omega_start = sched.omega_start.unwrap_or(d_start);
    let step0 = sched.omega_step0.unwrap_or(d_step);
    let mut stepper = Stepper {
        sched,
        b,
        records: Vec::new(),
    };
    let state = (vec![0.0; model.dim()], 0.0, 0.0);
    let (stop, last_u) = stepper.run(state, omega_start, step0, |omega, u, t| {
        let o = saddle_solve_ll(model, b, omega, (u, t), &sched.newton);
        let pot = if o.converged { model.value(&o.u) } else { f64::NAN };
        (o, pot)
    });
    finish(TraceMethod::LoadFactor, stepper, stop, last_u, None)
}

/// Strength reduction curve `omega -> lambda_omega` of `F_lambda(u) = b`.
///
/// The first record is the solution at `lambda0`; its work `omega0` is the
/// smallest admissible prescribed work.
pub fn trace_ssr_indirect<F: ParamFamily + ?Sized>(family: &F, b: &LoadVector, sched: &ScheduleOptions) -> ContinuationTrace {
    let lambda0 = family.lambda0();
    let m0 = model_at(family, lambda0);
    let zero = vec![0.0; family.dim()];
    let base = newton_solve(&m0, b, 1.0, &zero, &sched.newton);
    let mut stepper = Stepper {
        sched,
        b,
        records: Vec::new(),
    };
    if !base.converged {
        let reason = base.failure.unwrap_or(FailureReason::MaxIter);
        return finish(TraceMethod::StrengthReduction, stepper, StopReason::SolverFailure(reason), zero, None);
    }
    let omega0 = b.work(&base.u);
    let base = SolveOutcome { factor: lambda0, ..base };
    stepper.records.push(record(omega0, &base, b, m0.value(&base.u)));
    let step0 = sched.omega_step0.unwrap_or(omega0.abs().max(f64::MIN_POSITIVE));
    let omega_start = sched.omega_start.unwrap_or(omega0 + step0);
    let state = (base.u.clone(), lambda0, omega0);
    let (stop, last_u) = stepper.run(state, omega_start, step0, |omega, u, l| {
        let o = saddle_solve_ssr(family, b, omega, (u, l), &sched.newton);
        let pot = if o.converged { family.value_at(o.factor, &o.u) } else { f64::NAN };
        (o, pot)
    });
    finish(TraceMethod::StrengthReduction, stepper, stop, last_u, Some(omega0))
}

/// Direct load control: Newton solves of `F(u) = t b` along increasing `t`.
/// Stops at the first load factor without a solution.
pub fn trace_ll_direct<P: Potential + ?Sized>(model: &P, b: &LoadVector, t_grid: &[f64], opts: &NewtonOptions) -> ContinuationTrace {
    let mut records = Vec::new();
    let mut u = vec![0.0; model.dim()];
    let mut stop = StopReason::Converged;
    for &t in t_grid {
        let o = newton_solve(model, b, t, &u, opts);
        if !o.converged {
            stop = StopReason::SolverFailure(o.failure.unwrap_or(FailureReason::MaxIter));
            break;
        }
        let w = b.work(&o.u);
        records.push(record(w, &o, b, model.value(&o.u)));
        u = o.u;
    }
    ContinuationTrace {
        method: TraceMethod::DirectLoad,
        converged: stop == StopReason::Converged,
        records,
        stop,
        last_u: u,
        omega0: None,
        fos_window: 0,
        fos_rel_tol: 0.0,
    }
}

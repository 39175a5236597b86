//! Limit analysis built on top of the continuation traces: recession values,
//! two-sided bounds on the limit load factor, a solvability classifier and
//! the curve `lambda -> ell(lambda)` of limit load factors of a reduced
//! family, whose crossing of one is the strength reduction factor.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::continuation::{fmt17, trace_ll_indirect, ContinuationTrace, ScheduleOptions, StopReason};
use crate::error::AnalysisError;
use crate::potential::{model_at, scaled_value, Extended, LoadVector, ParamFamily, Potential};
use crate::solver::{saddle_solve_ll, NewtonOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecessionEstimate {
    pub value: Extended,
    /// False when the scaled values neither settled nor exceeded the cap.
    pub settled: bool,
    pub last_omega: f64,
}

/// Estimates `lim I(omega v) / omega` along a doubling sequence of scalings.
///
/// Settles once the increment falls below `1e-8 (1 + |value|)`; reports
/// `+inf` when the scaled value exceeds `cap`.
pub fn recession_value<P: Potential + ?Sized>(model: &P, v: &[f64], omega_max: f64, cap: f64) -> RecessionEstimate {
    let mut omega = 1.0;
    let mut prev = scaled_value(model, v, omega);
    loop {
        if prev > cap {
            return RecessionEstimate {
                value: Extended::PlusInfinity,
                settled: true,
                last_omega: omega,
            };
        }
        if omega * 2.0 > omega_max {
            return RecessionEstimate {
                value: Extended::Finite(prev),
                settled: false,
                last_omega: omega,
            };
        }
        omega *= 2.0;
        let cur = scaled_value(model, v, omega);
        if (cur - prev).abs() < 1e-8 * (1.0 + cur.abs()) {
            return RecessionEstimate {
                value: Extended::Finite(cur),
                settled: true,
                last_omega: omega,
            };
        }
        prev = cur;
    }
}

/// `lower <= t* ` and `lower <= upper = t_omega <= t*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub omega: f64,
    /// `I(u_omega) / omega`
    pub lower: f64,
    /// Load factor `t_omega` on the indirect path.
    pub upper: f64,
    pub converged: bool,
}

/// Bounds on the limit load factor from the state at work `omega`.
pub fn bracket_t_star<P: Potential + ?Sized>(model: &P, b: &LoadVector, omega: f64, opts: &NewtonOptions) -> Bracket {
    let zero = vec![0.0; model.dim()];
    let mut o = saddle_solve_ll(model, b, omega, (&zero, 0.0), opts);
    if !o.converged {
        // Walk up to omega along a geometric ramp.
        let mut state = (zero, 0.0);
        let mut w = omega / 64.0;
        let mut ok = true;
        while ok {
            let r = saddle_solve_ll(model, b, w, (&state.0, state.1), opts);
            ok = r.converged;
            if ok {
                state = (r.u.clone(), r.factor);
                o = r;
            }
            if w >= omega {
                break;
            }
            let next = (w * 2.0).min(omega);
            state.0.iter_mut().for_each(|x| *x *= next / w);
            w = next;
        }
        o.converged = ok && o.converged;
    }
    Bracket {
        omega,
        lower: model.value(&o.u) / omega,
        upper: o.factor,
        converged: o.converged,
    }
}

/// Bounds at every record of a load factor trace.
pub fn brackets_from_trace(trace: &ContinuationTrace) -> Vec<Bracket> {
    trace
        .records
        .iter()
        .map(|r| Bracket {
            omega: r.omega,
            lower: r.potential / r.omega,
            upper: r.factor,
            converged: true,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `t* > 1`: the unit load has a solution and the solution set is bounded.
    BoundedNonempty,
    /// `t* = 1` within the band.
    BoundaryCase,
    /// `t* < 1`: the unit load has no solution.
    Unsolvable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::BoundedNonempty => "bounded_nonempty",
            Verdict::BoundaryCase => "boundary_case",
            Verdict::Unsolvable => "unsolvable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityVerdict {
    pub verdict: Verdict,
    pub t_inf_estimate: f64,
    pub converged: bool,
    pub band: f64,
    pub trace: ContinuationTrace,
}

/// Decides whether `F(u) = b` is solvable by comparing the limit load
/// factor with one.
pub fn classify_solvability<P: Potential + ?Sized>(
    model: &P,
    b: &LoadVector,
    band: f64,
    sched: &ScheduleOptions,
) -> SolvabilityVerdict {
    let trace = trace_ll_indirect(model, b, sched);
    let (est, _) = trace.fos_estimate();
    let converged = trace.converged;
    let verdict = if est > 1.0 + band {
        // Nondecreasing curve: any value above the band settles the question.
        Verdict::BoundedNonempty
    } else if !converged || matches!(trace.stop, StopReason::SolverFailure(_)) {
        Verdict::Inconclusive
    } else if est < 1.0 - band {
        Verdict::Unsolvable
    } else {
        Verdict::BoundaryCase
    };
    SolvabilityVerdict {
        verdict,
        t_inf_estimate: est,
        converged,
        band,
        trace,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllSample {
    pub lambda: f64,
    pub ell: f64,
    pub converged: bool,
}

/// Limit load factor of the family member at `lambda`.
pub fn ell_value<F: ParamFamily + ?Sized>(family: &F, b: &LoadVector, lambda: f64, sched: &ScheduleOptions) -> EllSample {
    let trace = trace_ll_indirect(&model_at(family, lambda), b, sched);
    let (ell, converged) = trace.fos_estimate();
    EllSample {
        lambda,
        ell,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllCurve {
    pub samples: Vec<EllSample>,
    /// Linear interpolation of the crossing of one between two converged
    /// neighbouring samples.
    pub lambda_star: Option<f64>,
    /// Pairs of neighbouring converged samples that fail to decrease.
    pub monotonicity_violations: Vec<(f64, f64)>,
}

impl EllCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,ell,converged\n");
        for e in &self.samples {
            writeln!(s, "{},{},{}", fmt17(e.lambda), fmt17(e.ell), e.converged).unwrap();
        }
        match self.lambda_star {
            Some(l) => writeln!(s, "# lambda_star={}", fmt17(l)).unwrap(),
            None => writeln!(s, "# lambda_star=none").unwrap(),
        }
        s
    }
}

/// Samples `ell` on a grid; grid points are evaluated in parallel.
pub fn ell_curve<F: ParamFamily + ?Sized>(family: &F, b: &LoadVector, grid: &[f64], sched: &ScheduleOptions) -> EllCurve {
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite lambda grid"));
    let samples: Vec<EllSample> = grid.par_iter().map(|&l| ell_value(family, b, l, sched)).collect();
    let mut lambda_star = None;
    let mut violations = Vec::new();
    for w in samples.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p.converged && q.converged && q.ell >= p.ell {
            violations.push((p.lambda, q.lambda));
        }
        if lambda_star.is_none() && q.converged && p.ell > 1.0 && q.ell <= 1.0 {
            lambda_star = Some(if p.converged {
                p.lambda + (p.ell - 1.0) / (p.ell - q.ell) * (q.lambda - p.lambda)
            } else {
                q.lambda
            });
        }
    }
    EllCurve {
        samples,
        lambda_star,
        monotonicity_violations: violations,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaStar {
    pub lambda_star: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: Vec<EllSample>,
}

/// Root of `ell(lambda) = 1` inside `[lo, hi]` by bisection with
/// Illinois-type secant steps when both ends are converged.
pub fn find_lambda_star_via_ell<F: ParamFamily + ?Sized>(
    family: &F,
    b: &LoadVector,
    bracket: (f64, f64),
    root_tol: f64,
    sched: &ScheduleOptions,
) -> Result<LambdaStar, AnalysisError> {
    let (mut lo, mut hi) = bracket;
    let ends: Vec<EllSample> = [lo, hi].par_iter().map(|&l| ell_value(family, b, l, sched)).collect();
    let (e_lo, e_hi) = (ends[0], ends[1]);
    let mut evaluations = ends.clone();
    // A non-converged value is a lower bound: it settles `ell > 1` only.
    let valid_lo = e_lo.ell > 1.0;
    let valid_hi = e_hi.converged && e_hi.ell < 1.0;
    if !(lo < hi) || !valid_lo || !valid_hi {
        return Err(AnalysisError::InvalidBracket {
            lo,
            hi,
            ell_lo: e_lo.ell,
            ell_hi: e_hi.ell,
        });
    }
    let (mut f_lo, mut f_hi) = (e_lo.ell - 1.0, e_hi.ell - 1.0);
    let (mut conv_lo, mut conv_hi) = (e_lo.converged, e_hi.converged);
    let mut side = 0i32;
    let mut force_bisect = false;
    while hi - lo > root_tol {
        let width = hi - lo;
        let mut x = 0.5 * (lo + hi);
        let mut secant = false;
        if conv_lo && conv_hi && !force_bisect {
            let s = lo - f_lo * (hi - lo) / (f_hi - f_lo);
            if s.is_finite() && s > lo && s < hi {
                // Keep the trial point away from the ends so the bracket
                // closes from both sides.
                let guard = 0.25 * root_tol;
                x = s.clamp(lo + guard, hi - guard);
                secant = true;
            }
        }
        let e = ell_value(family, b, x, sched);
        evaluations.push(e);
        let f = e.ell - 1.0;
        if f > 0.0 {
            lo = x;
            f_lo = f;
            conv_lo = e.converged;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            if !e.converged {
                return Err(AnalysisError::EllNotConverged {
                    lambda: x,
                    estimate: e.ell,
                    lo,
                    hi,
                });
            }
            hi = x;
            f_hi = f;
            conv_hi = true;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        // A secant step that barely shrinks the bracket is followed by a
        // bisection.
        force_bisect = secant && hi - lo > 0.5 * width;
    }
    Ok(LambdaStar {
        lambda_star: 0.5 * (lo + hi),
        lo,
        hi,
        evaluations,
    })
}

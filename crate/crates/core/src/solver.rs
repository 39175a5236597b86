//! Damped semismooth Newton iterations for the equilibrium problem and the
//! two bordered systems of the indirect methods.
//!
//! The bordered systems append one scalar unknown (a load factor or a
//! reduction factor) and one linear constraint `b^T u = omega`. Each Newton
//! step solves
//!
//! ```text
//! [ H    col ] [du]   [r1]
//! [ row^T  0 ] [ds] = [r2]
//! ```
//!
//! by block elimination with a single factorization of `H`.

use crate::linalg::{Factor, LinalgError, LinearSolver, SparseMat};
use crate::potential::{dot, model_at, norm, LoadVector, ParamFamily, Potential};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iter: usize,
    pub backtrack: f64,
    pub min_step: f64,
    pub armijo: f64,
    pub reg_initial: f64,
    pub reg_max: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-10,
            tol_abs: 1e-12,
            max_iter: 100,
            backtrack: 0.5,
            min_step: 1e-8,
            armijo: 1e-4,
            reg_initial: 1e-8,
            reg_max: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    MaxIter,
    SingularTangent,
    LineSearchStall,
    Diverged,
    /// The reduction factor left the admissible range `lambda >= lambda0`.
    BelowLambda0,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::MaxIter => "max_iter",
            FailureReason::SingularTangent => "singular_tangent",
            FailureReason::LineSearchStall => "line_search_stall",
            FailureReason::Diverged => "diverged",
            FailureReason::BelowLambda0 => "below_lambda0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub u: Vec<f64>,
    /// Load factor or reduction factor; the prescribed load factor for
    /// plain equilibrium solves.
    pub factor: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub failure: Option<FailureReason>,
}

/// Regularization state shared by all Newton variants: the tangent is shifted
/// by `eps * scale * I` where `scale` is the largest diagonal entry.
struct Regularizer {
    eps: f64,
    opts: NewtonOptions,
}

impl Regularizer {
    fn new(opts: NewtonOptions) -> Self {
        Self { eps: 0.0, opts }
    }

    /// Moves to the next regularization level. Returns false once exhausted.
    fn escalate(&mut self) -> bool {
        self.eps = if self.eps == 0.0 {
            self.opts.reg_initial
        } else {
            2.0 * self.eps
        };
        self.eps <= self.opts.reg_max
    }

    fn reset(&mut self) {
        self.eps = 0.0;
    }

    /// Factorizes `h`, escalating the shift until the factorization succeeds.
    fn factorize(&mut self, solver: &mut LinearSolver, h: &SparseMat) -> Result<Factor, FailureReason> {
        loop {
            let f = if self.eps == 0.0 {
                solver.factorize(h)
            } else {
                let mut shifted = h.clone();
                let scale = h.max_abs_diag();
                let scale = if scale > 0.0 { scale } else { 1.0 };
                shifted.add_to_diagonal(self.eps * scale);
                solver.factorize(&shifted)
            };
            match f {
                Ok(f) => return Ok(f),
                Err(_) => {
                    if !self.escalate() {
                        return Err(FailureReason::SingularTangent);
                    }
                }
            }
        }
    }
}

/// Solves `[[H, col], [row^T, 0]] (du, ds) = (r1, r2)` by eliminating `du`.
///
/// `ds = (row^T H^-1 r1 - r2) / (row^T H^-1 col)` and
/// `du = H^-1 (r1 - col ds)`.
pub fn solve_bordered(
    factor: &Factor,
    col: &[f64],
    row: &[f64],
    r1: &[f64],
    r2: f64,
) -> Result<(Vec<f64>, f64), LinalgError> {
    let y = factor.solve(r1)?;
    let z = factor.solve(col)?;
    let schur = dot(row, &z);
    let num = dot(row, &y) - r2;
    let scale = norm(row) * norm(&z);
    if !(schur.abs() > 1e-14 * scale) || !schur.is_finite() {
        return Err(LinalgError::Singular(row.len()));
    }
    let ds = num / schur;
    let du: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b * ds).collect();
    Ok((du, ds))
}

/// Convenience wrapper factorizing a symmetric positive definite `h`.
pub fn solve_bordered_system(
    h: &SparseMat,
    col: &[f64],
    row: &[f64],
    r1: &[f64],
    r2: f64,
) -> Result<(Vec<f64>, f64), LinalgError> {
    let f = LinearSolver::new().factorize(h)?;
    solve_bordered(&f, col, row, r1, r2)
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solves `F(u) = t b` from the initial guess `u0`.
pub fn newton_solve<P: Potential + ?Sized>(
    model: &P,
    b: &LoadVector,
    t: f64,
    u0: &[f64],
    opts: &NewtonOptions,
) -> SolveOutcome {
    let rhs = b.scaled(t);
    let tol = opts.tol_abs + opts.tol_rel * norm(&rhs);
    let residual_of = |u: &[f64]| -> Vec<f64> {
        let g = model.grad(u);
        rhs.iter().zip(&g).map(|(a, b)| a - b).collect()
    };
    let mut u = u0.to_vec();
    let mut r = residual_of(&u);
    let mut res = norm(&r);
    let mut solver = LinearSolver::new();
    let mut reg = Regularizer::new(*opts);
    let finish = |u: Vec<f64>, it: usize, res: f64, fail: Option<FailureReason>| SolveOutcome {
        u,
        factor: t,
        iterations: it,
        residual: res,
        converged: fail.is_none(),
        failure: fail,
    };
    let mut it = 0;
    while it < opts.max_iter {
        if res <= tol {
            return finish(u, it, res, None);
        }
        if !res.is_finite() {
            return finish(u, it, res, Some(FailureReason::Diverged));
        }
        let h = model.hessian(&u);
        let factor = match reg.factorize(&mut solver, &h) {
            Ok(f) => f,
            Err(e) => return finish(u, it, res, Some(e)),
        };
        let du = match factor.solve(&r) {
            Ok(d) if all_finite(&d) => d,
            _ => {
                if reg.escalate() {
                    continue;
                }
                return finish(u, it, res, Some(FailureReason::SingularTangent));
            }
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= opts.min_step {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + alpha * d).collect();
            let rt = residual_of(&trial);
            let res_t = norm(&rt);
            if res_t.is_finite() && res_t <= (1.0 - opts.armijo * alpha) * res {
                accepted = Some((trial, rt, res_t));
                break;
            }
            alpha *= opts.backtrack;
        }
        it += 1;
        match accepted {
            Some((nu, nr, nres)) => {
                u = nu;
                r = nr;
                res = nres;
                reg.reset();
            }
            None => {
                if !reg.escalate() {
                    return finish(u, it, res, Some(FailureReason::LineSearchStall));
                }
            }
        }
    }
    if res <= tol {
        return finish(u, it, res, None);
    }
    finish(u, it, res, Some(FailureReason::MaxIter))
}

/// Residual of the bordered system: force balance and work constraint.
struct Bordered {
    r1: Vec<f64>,
    r2: f64,
}

impl Bordered {
    fn norm(&self) -> f64 {
        norm(&self.r1) + self.r2.abs()
    }
}

/// Generic damped Newton loop on the bordered system. `residual` returns the
/// residual at `(u, s)`; `linearize` returns the tangent and the border
/// column at `(u, s)`.
fn bordered_newton<R, L>(
    b: &LoadVector,
    omega: f64,
    u0: &[f64],
    s0: f64,
    tol: &dyn Fn(f64) -> f64,
    opts: &NewtonOptions,
    residual: R,
    linearize: L,
) -> SolveOutcome
where
    R: Fn(&[f64], f64) -> Bordered,
    L: Fn(&[f64], f64) -> (SparseMat, Vec<f64>),
{
    let row = b.as_slice();
    let mut u = u0.to_vec();
    let mut s = s0;
    let mut r = residual(&u, s);
    let mut res = r.norm();
    let mut solver = LinearSolver::new();
    let mut reg = Regularizer::new(*opts);
    let finish = |u: Vec<f64>, s: f64, it: usize, res: f64, fail: Option<FailureReason>| SolveOutcome {
        u,
        factor: s,
        iterations: it,
        residual: res,
        converged: fail.is_none(),
        failure: fail,
    };
    let _ = omega;
    let mut it = 0;
    while it < opts.max_iter {
        if res <= tol(s) {
            return finish(u, s, it, res, None);
        }
        if !res.is_finite() {
            return finish(u, s, it, res, Some(FailureReason::Diverged));
        }
        let (h, col) = linearize(&u, s);
        let factor = match reg.factorize(&mut solver, &h) {
            Ok(f) => f,
            Err(e) => return finish(u, s, it, res, Some(e)),
        };
        let (du, ds) = match solve_bordered(&factor, &col, row, &r.r1, r.r2) {
            Ok((du, ds)) if all_finite(&du) && ds.is_finite() => (du, ds),
            _ => {
                if reg.escalate() {
                    continue;
                }
                return finish(u, s, it, res, Some(FailureReason::SingularTangent));
            }
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= opts.min_step {
            let tu: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + alpha * d).collect();
            let ts = s + alpha * ds;
            let rt = residual(&tu, ts);
            let res_t = rt.norm();
            if res_t.is_finite() && res_t <= (1.0 - opts.armijo * alpha) * res {
                accepted = Some((tu, ts, rt, res_t));
                break;
            }
            alpha *= opts.backtrack;
        }
        it += 1;
        match accepted {
            Some((nu, ns, nr, nres)) => {
                u = nu;
                s = ns;
                r = nr;
                res = nres;
                reg.reset();
            }
            None => {
                if !reg.escalate() {
                    return finish(u, s, it, res, Some(FailureReason::LineSearchStall));
                }
            }
        }
    }
    if res <= tol(s) {
        return finish(u, s, it, res, None);
    }
    finish(u, s, it, res, Some(FailureReason::MaxIter))
}

/// Solves `F(u) = t b`, `b^T u = omega` for `(u, t)`.
pub fn saddle_solve_ll<P: Potential + ?Sized>(
    model: &P,
    b: &LoadVector,
    omega: f64,
    init: (&[f64], f64),
    opts: &NewtonOptions,
) -> SolveOutcome {
    let bs = b.as_slice();
    let bn = b.norm();
    let neg_b: Vec<f64> = bs.iter().map(|x| -x).collect();
    let tol = |t: f64| opts.tol_abs + opts.tol_rel * (t.abs() * bn + omega.abs());
    let residual = |u: &[f64], t: f64| {
        let g = model.grad(u);
        Bordered {
            r1: bs.iter().zip(&g).map(|(bi, gi)| t * bi - gi).collect(),
            r2: omega - dot(bs, u),
        }
    };
    let linearize = |u: &[f64], _t: f64| (model.hessian(u), neg_b.clone());
    bordered_newton(b, omega, init.0, init.1, &tol, opts, residual, linearize)
}

/// Finite difference step used for `dF/dlambda` when no closed form exists.
pub fn dlambda_step(lambda: f64) -> f64 {
    1e-6 * (1.0 + lambda.abs())
}

/// `dF_lambda/dlambda (v)`, analytic when the family provides it.
pub fn dlambda_grad<F: ParamFamily + ?Sized>(family: &F, lambda: f64, v: &[f64]) -> Vec<f64> {
    if let Some(d) = family.dlambda_grad(lambda, v) {
        return d;
    }
    let h = dlambda_step(lambda);
    let g1 = family.grad_at(lambda + h, v);
    let g0 = family.grad_at(lambda, v);
    g1.iter().zip(&g0).map(|(a, b)| (a - b) / h).collect()
}

/// Solves `F_lambda(u) = b`, `b^T u = omega` for `(u, lambda)`.
///
/// In the elastic range the internal force does not depend on `lambda` and
/// the border column vanishes. The iteration then raises `lambda`
/// geometrically until the force becomes sensitive to it.
pub fn saddle_solve_ssr<F: ParamFamily + ?Sized>(
    family: &F,
    b: &LoadVector,
    omega: f64,
    init: (&[f64], f64),
    opts: &NewtonOptions,
) -> SolveOutcome {
    let bs = b.as_slice();
    let bn = b.norm();
    let lambda0 = family.lambda0();
    let tol = |_l: f64| opts.tol_abs + opts.tol_rel * (bn + omega.abs());
    let residual = |u: &[f64], l: f64| {
        let g = family.grad_at(l, u);
        Bordered {
            r1: bs.iter().zip(&g).map(|(bi, gi)| bi - gi).collect(),
            r2: omega - dot(bs, u),
        }
    };
    let linearize = |u: &[f64], l: f64| {
        let col = dlambda_grad(family, l, u);
        (family.hessian_at(l, u), col)
    };

    let mut u = init.0.to_vec();
    let mut lambda = init.1.max(lambda0);
    let mut total_iters = 0;
    let mut out = None;
    for _attempt in 0..60 {
        // Newton step on u alone would leave lambda undetermined when the
        // column vanishes; nudge lambda first.
        let col = dlambda_grad(family, lambda, &u);
        let res0 = residual(&u, lambda);
        if norm(&col) <= 1e-12 * (1.0 + norm(&family.grad_at(lambda, &u))) && res0.norm() > tol(lambda) {
            let fixed = newton_solve_constrained(family, b, lambda, omega, &u, opts);
            match fixed {
                Some(v) => {
                    total_iters += 1;
                    let c = dlambda_grad(family, lambda, &v);
                    u = v;
                    if norm(&c) <= 1e-12 * (1.0 + norm(&family.grad_at(lambda, &u))) {
                        lambda *= 1.05;
                        continue;
                    }
                }
                None => {
                    lambda *= 1.05;
                    continue;
                }
            }
        }
        let o = bordered_newton(b, omega, &u, lambda, &tol, opts, residual, linearize);
        total_iters += o.iterations;
        out = Some(o);
        break;
    }
    let mut o = match out {
        Some(o) => o,
        None => {
            let res = residual(&u, lambda).norm();
            return SolveOutcome {
                u,
                factor: lambda,
                iterations: total_iters,
                residual: res,
                converged: false,
                failure: Some(FailureReason::SingularTangent),
            };
        }
    };
    o.iterations = total_iters;
    if o.converged && o.factor < lambda0 - 1e-8 * (1.0 + lambda0) {
        o.converged = false;
        o.failure = Some(FailureReason::BelowLambda0);
    }
    o
}

/// Projects the iterate onto `b^T u = omega` with a plain Newton solve of
/// the load factor problem at fixed `lambda`: returns `u` satisfying
/// `F_lambda(u) = t b`, `b^T u = omega`, or `None` on failure.
fn newton_solve_constrained<F: ParamFamily + ?Sized>(
    family: &F,
    b: &LoadVector,
    lambda: f64,
    omega: f64,
    u: &[f64],
    opts: &NewtonOptions,
) -> Option<Vec<f64>> {
    let m = model_at(family, lambda);
    let o = saddle_solve_ll(&m, b, omega, (u, 1.0), opts);
    if o.converged {
        Some(o.u)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{make_scalar_example, ScalarKind};

    #[test]
    fn bordered_two_by_two() {
        let h = SparseMat::diagonal(&[2.0, 2.0]);
        let (du, ds) = solve_bordered_system(&h, &[1.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], 0.0).unwrap();
        assert!((du[0]).abs() < 1e-15 && (du[1] - 0.5).abs() < 1e-15 && (ds - 1.0).abs() < 1e-15);
        let h = SparseMat::diagonal(&[1.0]);
        let (du, ds) = solve_bordered_system(&h, &[1.0], &[1.0], &[0.0], 1.0).unwrap();
        assert!((du[0] - 1.0).abs() < 1e-15 && (ds + 1.0).abs() < 1e-15);
        let (du, ds) = solve_bordered_system(&h, &[1.0], &[1.0], &[3.0], 2.0).unwrap();
        assert!((du[0] - 2.0).abs() < 1e-15 && (ds - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bordered_zero_right_side_with_offset_row() {
        let h = SparseMat::diagonal(&[2.0, 2.0]);
        let (du, ds) = solve_bordered_system(&h, &[0.0, 1.0], &[0.0, 1.0], &[0.0, 0.0], 1.0).unwrap();
        assert!(du[0].abs() < 1e-15 && (du[1] - 1.0).abs() < 1e-15 && (ds + 2.0).abs() < 1e-15);
    }

    #[test]
    fn newton_scalar_examples() {
        let b = LoadVector::new(vec![1.0], "").unwrap();
        let opts = NewtonOptions::default();
        let capped = make_scalar_example(ScalarKind::CappedQuadratic);
        let o = newton_solve(&capped, &b, 0.5, &[0.0], &opts);
        assert!(o.converged && (o.u[0] - 0.5).abs() < 1e-12);
        let o = newton_solve(&capped, &b, 1.5, &[0.0], &opts);
        assert!(!o.converged);
        let e = make_scalar_example(ScalarKind::Exponential);
        let o = newton_solve(&e, &b, 0.9, &[0.0], &opts);
        assert!(o.converged && (o.u[0] - 10f64.ln()).abs() < 1e-9);
        let o = newton_solve(&e, &b, 0.0, &[0.0], &opts);
        assert!(o.converged && o.iterations == 0 && o.u[0] == 0.0);
    }

    #[test]
    fn saddle_capped_saturates() {
        let b = LoadVector::new(vec![1.0], "").unwrap();
        let capped = make_scalar_example(ScalarKind::CappedQuadratic);
        let o = saddle_solve_ll(&capped, &b, 2.0, (&[0.0], 0.0), &NewtonOptions::default());
        assert!(o.converged);
        assert!((o.factor - 1.0).abs() < 1e-10 && (o.u[0] - 2.0).abs() < 1e-10);
        let o = saddle_solve_ll(&capped, &b, 0.0, (&[0.0], 0.0), &NewtonOptions::default());
        assert!(o.converged && o.iterations == 0 && o.factor == 0.0);
    }
}

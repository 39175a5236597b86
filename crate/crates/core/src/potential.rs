//! Convex potentials, parameterized families and load vectors.
//!
//! A model is a convex, continuously differentiable potential `I` on `R^n`
//! with `I(0) = 0`. Its gradient `F = grad I` is the internal force and the
//! generalized Hessian is the tangent used by Newton iterations. Hessians are
//! returned as sparse symmetric matrices with both triangles stored.

use crate::error::ModelError;
use crate::linalg::SparseMat;

/// Linear growth bound `I(v) >= c1 |v| - c2` used to pick default step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthHint {
    pub c1: f64,
    pub c2: f64,
}

pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, v: &[f64]) -> f64;
    fn grad(&self, v: &[f64]) -> Vec<f64>;
    fn hessian(&self, v: &[f64]) -> SparseMat;
    fn growth_hint(&self) -> Option<GrowthHint> {
        None
    }
}

/// A family of potentials `I_lambda` indexed by a strength reduction factor.
///
/// `lambda = 1` is the unreduced model. The admissible sets of the family
/// must shrink as `lambda` grows.
pub trait ParamFamily: Send + Sync {
    fn dim(&self) -> usize;
    /// Smallest parameter for which the family is analysed.
    fn lambda0(&self) -> f64;
    fn value_at(&self, lambda: f64, v: &[f64]) -> f64;
    fn grad_at(&self, lambda: f64, v: &[f64]) -> Vec<f64>;
    fn hessian_at(&self, lambda: f64, v: &[f64]) -> SparseMat;
    /// Derivative of the internal force with respect to `lambda`, when known
    /// in closed form. Callers fall back to finite differences otherwise.
    fn dlambda_grad(&self, _lambda: f64, _v: &[f64]) -> Option<Vec<f64>> {
        None
    }
    fn growth_hint_at(&self, _lambda: f64) -> Option<GrowthHint> {
        None
    }
}

/// Member of a family frozen at one parameter value.
pub struct AtLambda<'a, F: ParamFamily + ?Sized> {
    pub family: &'a F,
    pub lambda: f64,
}

pub fn model_at<F: ParamFamily + ?Sized>(family: &F, lambda: f64) -> AtLambda<'_, F> {
    AtLambda { family, lambda }
}

impl<F: ParamFamily + ?Sized> Potential for AtLambda<'_, F> {
    fn dim(&self) -> usize {
        self.family.dim()
    }
    fn value(&self, v: &[f64]) -> f64 {
        self.family.value_at(self.lambda, v)
    }
    fn grad(&self, v: &[f64]) -> Vec<f64> {
        self.family.grad_at(self.lambda, v)
    }
    fn hessian(&self, v: &[f64]) -> SparseMat {
        self.family.hessian_at(self.lambda, v)
    }
    fn growth_hint(&self) -> Option<GrowthHint> {
        self.family.growth_hint_at(self.lambda)
    }
}

/// A value in `[0, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PlusInfinity,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::PlusInfinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::PlusInfinity)
    }
}

/// External load direction `b`. Always nonzero and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    values: Vec<f64>,
    pub description: String,
}

impl LoadVector {
    pub fn new(values: Vec<f64>, description: impl Into<String>) -> Result<Self, ModelError> {
        if values.is_empty() || values.iter().any(|x| !x.is_finite()) || values.iter().all(|&x| x == 0.0) {
            return Err(ModelError::InvalidLoad);
        }
        Ok(Self {
            values,
            description: description.into(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// Work of the load on a displacement, `b^T u`.
    pub fn work(&self, u: &[f64]) -> f64 {
        dot(&self.values, u)
    }

    pub fn scaled(&self, factor: f64) -> Vec<f64> {
        self.values.iter().map(|x| x * factor).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `I(omega v) / omega`, nondecreasing in `omega` for convex `I` with `I(0) = 0`.
pub fn scaled_value<P: Potential + ?Sized>(model: &P, v: &[f64], omega: f64) -> f64 {
    assert!(omega > 0.0, "scaling factor must be positive");
    let w: Vec<f64> = v.iter().map(|x| x * omega).collect();
    model.value(&w) / omega
}

/// Largest componentwise mismatch between the gradient and a central
/// difference of the value, relative to `1 + |grad|`.
pub fn check_gradient<P: Potential + ?Sized>(model: &P, v: &[f64], h: f64) -> f64 {
    let g = model.grad(v);
    let mut w = v.to_vec();
    let mut worst = 0.0f64;
    for i in 0..v.len() {
        w[i] = v[i] + h;
        let fp = model.value(&w);
        w[i] = v[i] - h;
        let fm = model.value(&w);
        w[i] = v[i];
        let cd = (fp - fm) / (2.0 * h);
        worst = worst.max((cd - g[i]).abs() / (1.0 + g[i].abs()));
    }
    worst
}

/// Verifies that `lambda -> I_lambda(v)` is nonincreasing on the grid at
/// every sample point, within `1e-10 (1 + |value|)`.
pub fn check_monotone_family<F: ParamFamily + ?Sized>(
    family: &F,
    grid: &[f64],
    points: &[Vec<f64>],
) -> Result<(), MonotoneError> {
    if grid.is_empty() || points.is_empty() {
        return Err(MonotoneError::EmptySample);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    for (p, v) in points.iter().enumerate() {
        let vals: Vec<f64> = sorted.iter().map(|&l| family.value_at(l, v)).collect();
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let tol = 1e-10 * (1.0 + vals[i].abs().max(vals[j].abs()));
                if vals[j] > vals[i] + tol {
                    return Err(MonotoneError::Violation {
                        lambda_lo: sorted[i],
                        lambda_hi: sorted[j],
                        point: p,
                        value_lo: vals[i],
                        value_hi: vals[j],
                    });
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneError {
    EmptySample,
    /// The value at `lambda_hi` exceeds the value at `lambda_lo`.
    Violation {
        lambda_lo: f64,
        lambda_hi: f64,
        point: usize,
        value_lo: f64,
        value_hi: f64,
    },
}

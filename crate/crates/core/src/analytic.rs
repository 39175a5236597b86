//! Closed-form models with known limit values.
//!
//! Three scalar potentials (unbounded, capped and exponentially saturating
//! response), positive semidefinite quadratics, and two strength reduction
//! families obtained as Moreau envelopes of the indicator of a shrinking
//! convex set: a disk of radius `1/lambda` and the wedge
//! `{x : x1 - lambda |x2| + 1 >= 0}`.

use nalgebra::DMatrix;

use crate::error::ModelError;
use crate::linalg::SparseMat;
use crate::potential::{dot, norm, Extended, GrowthHint, LoadVector, ParamFamily, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    /// `v^2 / 2`
    Quadratic,
    /// `v^2 / 2` for `|v| <= 1`, `|v| - 1/2` beyond.
    CappedQuadratic,
    /// `exp(-v) + v - 1`
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExample {
    pub kind: ScalarKind,
}

impl ScalarExample {
    fn eval(&self, v: f64) -> (f64, f64, f64) {
        match self.kind {
            ScalarKind::Quadratic => (0.5 * v * v, v, 1.0),
            ScalarKind::CappedQuadratic => {
                if v.abs() <= 1.0 {
                    (0.5 * v * v, v, 1.0)
                } else {
                    (v.abs() - 0.5, v.signum(), 0.0)
                }
            }
            ScalarKind::Exponential => {
                let e = (-v).exp();
                (e + v - 1.0, 1.0 - e, e)
            }
        }
    }
}

impl Potential for ScalarExample {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, v: &[f64]) -> f64 {
        self.eval(v[0]).0
    }
    fn grad(&self, v: &[f64]) -> Vec<f64> {
        vec![self.eval(v[0]).1]
    }
    fn hessian(&self, v: &[f64]) -> SparseMat {
        SparseMat::diagonal(&[self.eval(v[0]).2])
    }
    fn growth_hint(&self) -> Option<GrowthHint> {
        Some(match self.kind {
            ScalarKind::Quadratic | ScalarKind::CappedQuadratic => GrowthHint { c1: 1.0, c2: 0.5 },
            ScalarKind::Exponential => GrowthHint { c1: 1.0, c2: 1.0 },
        })
    }
}

/// `v^T A v / 2` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdQuadratic {
    a: DMatrix<f64>,
    hessian: SparseMat,
}

impl PsdQuadratic {
    pub fn new(a: DMatrix<f64>) -> Result<Self, ModelError> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(ModelError::InvalidParameter("matrix must be square and nonempty".into()));
        }
        let scale = a.amax().max(1.0);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(ModelError::InvalidParameter("matrix must be symmetric".into()));
        }
        let eig = a.clone().symmetric_eigen();
        if eig.eigenvalues.min() < -1e-10 * scale {
            return Err(ModelError::InvalidParameter("matrix must be positive semidefinite".into()));
        }
        let hessian = SparseMat::from_dense(&a);
        Ok(Self { a, hessian })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// True when `b` is orthogonal to the kernel of `A`.
    pub fn load_in_range(&self, b: &[f64]) -> bool {
        let eig = self.a.clone().symmetric_eigen();
        let scale = self.a.amax().max(1.0);
        let bn = norm(b).max(f64::MIN_POSITIVE);
        (0..eig.eigenvalues.len()).all(|k| {
            eig.eigenvalues[k].abs() > 1e-10 * scale
                || dot(eig.eigenvectors.column(k).as_slice(), b).abs() <= 1e-10 * bn
        })
    }
}

impl Potential for PsdQuadratic {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn value(&self, v: &[f64]) -> f64 {
        0.5 * dot(v, &self.grad(v))
    }
    fn grad(&self, v: &[f64]) -> Vec<f64> {
        self.hessian.matvec(v)
    }
    fn hessian(&self, _v: &[f64]) -> SparseMat {
        self.hessian.clone()
    }
}

/// Moreau envelope of the indicator of the disk of radius `1/lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily {
    pub lambda0: f64,
}

impl ParamFamily for BallFamily {
    fn dim(&self) -> usize {
        2
    }
    fn lambda0(&self) -> f64 {
        self.lambda0
    }
    fn value_at(&self, lambda: f64, v: &[f64]) -> f64 {
        let r = norm(v);
        if r * lambda <= 1.0 {
            0.5 * r * r
        } else {
            r / lambda - 0.5 / (lambda * lambda)
        }
    }
    fn grad_at(&self, lambda: f64, v: &[f64]) -> Vec<f64> {
        let r = norm(v);
        if r * lambda <= 1.0 {
            v.to_vec()
        } else {
            v.iter().map(|x| x / (lambda * r)).collect()
        }
    }
    fn hessian_at(&self, lambda: f64, v: &[f64]) -> SparseMat {
        let r = norm(v);
        if r * lambda <= 1.0 {
            return SparseMat::diagonal(&[1.0, 1.0]);
        }
        let s = 1.0 / (lambda * r);
        let (x, y) = (v[0] / r, v[1] / r);
        SparseMat::from_dense(&DMatrix::from_row_slice(
            2,
            2,
            &[s * (1.0 - x * x), -s * x * y, -s * x * y, s * (1.0 - y * y)],
        ))
    }
    fn dlambda_grad(&self, lambda: f64, v: &[f64]) -> Option<Vec<f64>> {
        let r = norm(v);
        if r * lambda <= 1.0 {
            Some(vec![0.0, 0.0])
        } else {
            Some(v.iter().map(|x| -x / (lambda * lambda * r)).collect())
        }
    }
    fn growth_hint_at(&self, lambda: f64) -> Option<GrowthHint> {
        Some(GrowthHint {
            c1: 1.0 / lambda,
            c2: 0.5 / (lambda * lambda),
        })
    }
}

impl Potential for BallFamily {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, v: &[f64]) -> f64 {
        self.value_at(1.0, v)
    }
    fn grad(&self, v: &[f64]) -> Vec<f64> {
        self.grad_at(1.0, v)
    }
    fn hessian(&self, v: &[f64]) -> SparseMat {
        self.hessian_at(1.0, v)
    }
    fn growth_hint(&self) -> Option<GrowthHint> {
        self.growth_hint_at(1.0)
    }
}

/// Moreau envelope of the indicator of `{x : x1 - lambda |x2| + 1 >= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WedgeFamily {
    pub lambda0: f64,
}

enum WedgeRegion {
    Inside,
    Edge { q: f64, s: f64 },
    Apex,
}

fn wedge_region(lambda: f64, v: &[f64]) -> WedgeRegion {
    let a = v[1].abs();
    if v[0] - lambda * a + 1.0 >= 0.0 {
        WedgeRegion::Inside
    } else if v[0] + a / lambda + 1.0 <= 0.0 {
        WedgeRegion::Apex
    } else {
        let s = if v[1] < 0.0 { -1.0 } else { 1.0 };
        WedgeRegion::Edge {
            q: lambda * v[0] + a + lambda,
            s,
        }
    }
}

impl ParamFamily for WedgeFamily {
    fn dim(&self) -> usize {
        2
    }
    fn lambda0(&self) -> f64 {
        self.lambda0
    }
    fn value_at(&self, lambda: f64, v: &[f64]) -> f64 {
        match wedge_region(lambda, v) {
            WedgeRegion::Inside => 0.5 * (v[0] * v[0] + v[1] * v[1]),
            WedgeRegion::Edge { q, .. } => -v[0] - 0.5 + q * q / (2.0 * (lambda * lambda + 1.0)),
            WedgeRegion::Apex => -v[0] - 0.5,
        }
    }
    fn grad_at(&self, lambda: f64, v: &[f64]) -> Vec<f64> {
        match wedge_region(lambda, v) {
            WedgeRegion::Inside => v.to_vec(),
            WedgeRegion::Edge { q, s } => {
                let den = lambda * lambda + 1.0;
                vec![-1.0 + lambda * q / den, s * q / den]
            }
            WedgeRegion::Apex => vec![-1.0, 0.0],
        }
    }
    fn hessian_at(&self, lambda: f64, v: &[f64]) -> SparseMat {
        match wedge_region(lambda, v) {
            WedgeRegion::Inside => SparseMat::diagonal(&[1.0, 1.0]),
            WedgeRegion::Edge { s, .. } => {
                let den = lambda * lambda + 1.0;
                SparseMat::from_dense(&DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        lambda * lambda / den,
                        lambda * s / den,
                        lambda * s / den,
                        1.0 / den,
                    ],
                ))
            }
            WedgeRegion::Apex => SparseMat::diagonal(&[0.0, 0.0]),
        }
    }
    fn dlambda_grad(&self, lambda: f64, v: &[f64]) -> Option<Vec<f64>> {
        Some(match wedge_region(lambda, v) {
            WedgeRegion::Inside | WedgeRegion::Apex => vec![0.0, 0.0],
            WedgeRegion::Edge { q, s } => {
                let den = lambda * lambda + 1.0;
                let den2 = den * den;
                vec![
                    (q * (1.0 - lambda * lambda) + lambda * (v[0] + 1.0) * den) / den2,
                    s * ((v[0] + 1.0) * den - 2.0 * lambda * q) / den2,
                ]
            }
        })
    }
    fn growth_hint_at(&self, lambda: f64) -> Option<GrowthHint> {
        Some(GrowthHint {
            c1: 1.0 / (1.0 + lambda),
            c2: 1.0,
        })
    }
}

impl Potential for WedgeFamily {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, v: &[f64]) -> f64 {
        self.value_at(1.0, v)
    }
    fn grad(&self, v: &[f64]) -> Vec<f64> {
        self.grad_at(1.0, v)
    }
    fn hessian(&self, v: &[f64]) -> SparseMat {
        self.hessian_at(1.0, v)
    }
    fn growth_hint(&self) -> Option<GrowthHint> {
        self.growth_hint_at(1.0)
    }
}

/// Any of the closed-form models, with its known reference values.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticModel {
    Scalar(ScalarExample),
    Psd(PsdQuadratic),
    Ball(BallFamily),
    Wedge(WedgeFamily),
}

pub fn make_scalar_example(kind: ScalarKind) -> AnalyticModel {
    AnalyticModel::Scalar(ScalarExample { kind })
}

pub fn make_psd_quadratic(a: DMatrix<f64>) -> Result<AnalyticModel, ModelError> {
    Ok(AnalyticModel::Psd(PsdQuadratic::new(a)?))
}

pub fn make_ball_family(lambda0: f64) -> Result<AnalyticModel, ModelError> {
    check_lambda0(lambda0)?;
    Ok(AnalyticModel::Ball(BallFamily { lambda0 }))
}

pub fn make_wedge_family(lambda0: f64) -> Result<AnalyticModel, ModelError> {
    check_lambda0(lambda0)?;
    Ok(AnalyticModel::Wedge(WedgeFamily { lambda0 }))
}

fn check_lambda0(lambda0: f64) -> Result<(), ModelError> {
    if lambda0.is_finite() && lambda0 > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(format!("lambda0 must be positive, got {lambda0}")))
    }
}

impl AnalyticModel {
    fn inner(&self) -> &dyn Potential {
        match self {
            AnalyticModel::Scalar(m) => m,
            AnalyticModel::Psd(m) => m,
            AnalyticModel::Ball(m) => m,
            AnalyticModel::Wedge(m) => m,
        }
    }

    pub fn as_family(&self) -> Option<&dyn ParamFamily> {
        match self {
            AnalyticModel::Ball(m) => Some(m),
            AnalyticModel::Wedge(m) => Some(m),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticModel::Scalar(m) => match m.kind {
                ScalarKind::Quadratic => "quadratic1d",
                ScalarKind::CappedQuadratic => "capped_quadratic1d",
                ScalarKind::Exponential => "exp1d",
            },
            AnalyticModel::Psd(_) => "psd_quadratic",
            AnalyticModel::Ball(_) => "ball",
            AnalyticModel::Wedge(_) => "wedge",
        }
    }

    /// Load used by the shipped examples.
    pub fn default_load(&self) -> LoadVector {
        let v = match self {
            AnalyticModel::Scalar(_) => vec![1.0],
            AnalyticModel::Psd(p) => {
                let mut b = vec![0.0; p.dim()];
                b[0] = 1.0;
                b
            }
            AnalyticModel::Ball(_) => vec![0.6, 0.0],
            AnalyticModel::Wedge(_) => vec![0.5, 1.0],
        };
        LoadVector::new(v, "default").expect("nonzero default load")
    }

    /// Exact limit load factor for the unreduced model.
    pub fn reference_t_star(&self, b: &LoadVector) -> Extended {
        let b = b.as_slice();
        match self {
            AnalyticModel::Scalar(m) => match m.kind {
                ScalarKind::Quadratic => Extended::PlusInfinity,
                ScalarKind::CappedQuadratic => Extended::Finite(1.0 / b[0].abs()),
                ScalarKind::Exponential => {
                    if b[0] > 0.0 {
                        Extended::Finite(1.0 / b[0])
                    } else {
                        Extended::PlusInfinity
                    }
                }
            },
            AnalyticModel::Psd(p) => {
                if p.load_in_range(b) {
                    Extended::PlusInfinity
                } else {
                    Extended::Finite(0.0)
                }
            }
            AnalyticModel::Ball(_) | AnalyticModel::Wedge(_) => self.reference_ell(1.0, &LoadVector::new(b.to_vec(), "").unwrap()),
        }
    }

    /// Exact limit load factor of the family member at `lambda`.
    pub fn reference_ell(&self, lambda: f64, b: &LoadVector) -> Extended {
        let b = b.as_slice();
        match self {
            AnalyticModel::Ball(_) => Extended::Finite(1.0 / (lambda * norm(b))),
            AnalyticModel::Wedge(_) => {
                let d = lambda * b[1].abs() - b[0];
                if d > 0.0 {
                    Extended::Finite(1.0 / d)
                } else {
                    Extended::PlusInfinity
                }
            }
            _ => self.reference_t_star(&LoadVector::new(b.to_vec(), "").unwrap()),
        }
    }

    /// Exact strength reduction factor, when the model is a family.
    pub fn reference_lambda_star(&self, b: &LoadVector) -> Option<f64> {
        let b = b.as_slice();
        match self {
            AnalyticModel::Ball(_) => Some(1.0 / norm(b)),
            AnalyticModel::Wedge(_) => Some((1.0 + b[0]) / b[1].abs()),
            _ => None,
        }
    }

    /// Work `b^T u` of the solution of `F_lambda0(u) = b`.
    pub fn reference_omega0(&self, b: &LoadVector) -> Option<f64> {
        match self {
            AnalyticModel::Ball(_) | AnalyticModel::Wedge(_) => Some(dot(b.as_slice(), b.as_slice())),
            _ => None,
        }
    }

    /// Load factor along the indirect load path at work `omega >= 0`.
    pub fn reference_ll_path(&self, omega: f64, b: &LoadVector) -> Option<f64> {
        let b = b.as_slice();
        match self {
            AnalyticModel::Scalar(m) => {
                if b[0] <= 0.0 {
                    return None;
                }
                let u = omega / b[0];
                Some(match m.kind {
                    ScalarKind::Quadratic => u / b[0],
                    ScalarKind::CappedQuadratic => u.min(1.0) / b[0],
                    ScalarKind::Exponential => (1.0 - (-u).exp()) / b[0],
                })
            }
            _ => None,
        }
    }

    /// Recession function `lim I(omega v) / omega`.
    pub fn reference_recession(&self, v: &[f64]) -> Extended {
        let r = norm(v);
        if r == 0.0 {
            return Extended::Finite(0.0);
        }
        match self {
            AnalyticModel::Scalar(m) => match m.kind {
                ScalarKind::Quadratic => Extended::PlusInfinity,
                ScalarKind::CappedQuadratic => Extended::Finite(v[0].abs()),
                ScalarKind::Exponential => {
                    if v[0] >= 0.0 {
                        Extended::Finite(v[0])
                    } else {
                        Extended::PlusInfinity
                    }
                }
            },
            AnalyticModel::Psd(p) => {
                if dot(v, &p.grad(v)) <= 1e-14 * r * r * p.matrix().amax().max(1.0) {
                    Extended::Finite(0.0)
                } else {
                    Extended::PlusInfinity
                }
            }
            AnalyticModel::Ball(_) => Extended::Finite(r),
            AnalyticModel::Wedge(_) => {
                if v[0] + v[1].abs() <= 0.0 {
                    Extended::Finite(-v[0])
                } else {
                    Extended::PlusInfinity
                }
            }
        }
    }
}

impl Potential for AnalyticModel {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn value(&self, v: &[f64]) -> f64 {
        self.inner().value(v)
    }
    fn grad(&self, v: &[f64]) -> Vec<f64> {
        self.inner().grad(v)
    }
    fn hessian(&self, v: &[f64]) -> SparseMat {
        self.inner().hessian(v)
    }
    fn growth_hint(&self) -> Option<GrowthHint> {
        self.inner().growth_hint()
    }
}

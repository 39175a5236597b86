//! Closest point projection onto the Mohr-Coulomb yield surface in the
//! metric of the inverse elastic tensor, carried out in principal stress
//! space.
//!
//! With ordered principal stresses `s1 >= s2 >= s3` the admissible set is
//! `(1 + sin phi) s1 - (1 - sin phi) s3 <= 2 c cos phi`. The projection of an
//! inadmissible trial stress lands on the main face, on one of the two edges
//! where two principal stresses coincide, or at the apex.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3};

use super::material::{MohrCoulomb, ReducedStrength};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Elastic,
    Face,
    /// `s1 = s2`
    EdgeLeft,
    /// `s2 = s3`
    EdgeRight,
    Apex,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Elastic => "elastic",
            Regime::Face => "face",
            Regime::EdgeLeft => "edge_left",
            Regime::EdgeRight => "edge_right",
            Regime::Apex => "apex",
        }
    }
}

/// Projection result for ordered principal strains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalReturn {
    pub stress: [f64; 3],
    /// Derivative of the principal stresses with respect to the principal strains.
    pub tangent: [[f64; 3]; 3],
    pub regime: Regime,
    /// Dissipation-free energy density `s.e - s.C^-1 s / 2`.
    pub energy: f64,
}

fn apply_d(lame: f64, shear: f64, a: &[f64; 3]) -> [f64; 3] {
    let tr = lame * (a[0] + a[1] + a[2]);
    [tr + 2.0 * shear * a[0], tr + 2.0 * shear * a[1], tr + 2.0 * shear * a[2]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn energy(lame: f64, shear: f64, s: &[f64; 3], e: &[f64; 3]) -> f64 {
    let tr = s[0] + s[1] + s[2];
    let c = lame / (2.0 * shear + 3.0 * lame);
    let inv = [
        (s[0] - c * tr) / (2.0 * shear),
        (s[1] - c * tr) / (2.0 * shear),
        (s[2] - c * tr) / (2.0 * shear),
    ];
    dot3(s, e) - 0.5 * dot3(s, &inv)
}

fn elastic_matrix(lame: f64, shear: f64) -> [[f64; 3]; 3] {
    let mut d = [[lame; 3]; 3];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] += 2.0 * shear;
    }
    d
}

/// Projects the trial state of ordered principal strains `e` (descending).
pub fn principal_return(e: [f64; 3], lame: f64, shear: f64, strength: &ReducedStrength) -> PrincipalReturn {
    let sn = strength.friction.sin();
    let k = strength.yield_constant();
    let trial = apply_d(lame, shear, &e);
    let yield_fn = |s: &[f64; 3], i: usize, j: usize| (1.0 + sn) * s[i] - (1.0 - sn) * s[j] - k;
    let f_trial = yield_fn(&trial, 0, 2);
    let dmat = elastic_matrix(lame, shear);
    if f_trial <= 0.0 {
        return PrincipalReturn {
            stress: trial,
            tangent: dmat,
            regime: Regime::Elastic,
            energy: energy(lame, shear, &trial, &e),
        };
    }
    let scale = trial.iter().fold(k, |m, s| m.max(s.abs()));
    let tol = 1e-12 * scale;

    // main face
    let a = [1.0 + sn, 0.0, -(1.0 - sn)];
    let da = apply_d(lame, shear, &a);
    let den = dot3(&a, &da);
    let g = f_trial / den;
    let s: [f64; 3] = std::array::from_fn(|i| trial[i] - g * da[i]);
    if s[0] >= s[1] - tol && s[1] >= s[2] - tol {
        let mut t = dmat;
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] -= da[i] * da[j] / den;
            }
        }
        return PrincipalReturn {
            stress: s,
            tangent: t,
            regime: Regime::Face,
            energy: energy(lame, shear, &s, &e),
        };
    }

    // edges: a second active plane sharing the largest or smallest stress
    let edges = [
        (Regime::EdgeLeft, [0.0, 1.0 + sn, -(1.0 - sn)], yield_fn(&trial, 1, 2)),
        (Regime::EdgeRight, [1.0 + sn, -(1.0 - sn), 0.0], yield_fn(&trial, 0, 1)),
    ];
    for (regime, a2, f2) in edges {
        let da2 = apply_d(lame, shear, &a2);
        let g11 = den;
        let g12 = dot3(&a, &da2);
        let g22 = dot3(&a2, &da2);
        let det = g11 * g22 - g12 * g12;
        let g1 = (g22 * f_trial - g12 * f2) / det;
        let g2 = (g11 * f2 - g12 * f_trial) / det;
        if g1 < -1e-14 || g2 < -1e-14 {
            continue;
        }
        let s: [f64; 3] = std::array::from_fn(|i| trial[i] - g1 * da[i] - g2 * da2[i]);
        let ordered = match regime {
            Regime::EdgeLeft => s[1] >= s[2] - tol,
            _ => s[0] >= s[1] - tol,
        };
        if !ordered {
            continue;
        }
        // D - [Da Da2] G^-1 [Da Da2]^T
        let (i11, i12, i22) = (g22 / det, -g12 / det, g11 / det);
        let mut t = dmat;
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] -= da[i] * (i11 * da[j] + i12 * da2[j]) + da2[i] * (i12 * da[j] + i22 * da2[j]);
            }
        }
        return PrincipalReturn {
            stress: s,
            tangent: t,
            regime,
            energy: energy(lame, shear, &s, &e),
        };
    }

    let p = strength.apex_pressure();
    let s = [p, p, p];
    // The exact tangent vanishes at the apex; a small multiple of the
    // elastic one keeps the global tangent nonsingular.
    let tangent = std::array::from_fn(|i| {
        std::array::from_fn(|j| APEX_TANGENT_REG * (lame + if i == j { 2.0 * shear } else { 0.0 }))
    });
    PrincipalReturn {
        stress: s,
        tangent,
        regime: Regime::Apex,
        energy: energy(lame, shear, &s, &e),
    }
}

/// Fraction of the elastic tangent used at apex points.
pub const APEX_TANGENT_REG: f64 = 1e-6;

/// Coefficient of the rotation term of the tangent for the pair `(a, b)`.
fn spin_coefficient(pr: &PrincipalReturn, e: &[f64; 3], a: usize, b: usize) -> f64 {
    let de = e[a] - e[b];
    let scale = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if de.abs() > 1e-9 * scale && de != 0.0 {
        (pr.stress[a] - pr.stress[b]) / de
    } else {
        pr.tangent[a][a] - pr.tangent[a][b]
    }
}

/// Stress update at a plane strain material point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneStrainUpdate {
    /// `(s_xx, s_yy, s_xy)`
    pub stress: [f64; 3],
    pub stress_zz: f64,
    /// Tangent with respect to `(e_xx, e_yy, gamma_xy)`.
    pub tangent: [[f64; 3]; 3],
    pub regime: Regime,
    pub energy: f64,
}

/// Return mapping for the in-plane strain `(e_xx, e_yy, gamma_xy)` with `e_zz = 0`.
pub fn return_map_plane_strain(strain: [f64; 3], material: &MohrCoulomb, lambda: f64) -> PlaneStrainUpdate {
    let (lame, shear) = material.lame();
    let strength = material.reduced(lambda);
    let (exx, eyy, exy) = (strain[0], strain[1], 0.5 * strain[2]);
    let mean = 0.5 * (exx + eyy);
    let rad = (0.25 * (exx - eyy) * (exx - eyy) + exy * exy).sqrt();
    let theta = 0.5 * (2.0 * exy).atan2(exx - eyy);
    let (c, s) = (theta.cos(), theta.sin());
    // principal directions as in-plane components (x, y) plus the z flag
    let mut pairs = [
        (mean + rad, [c, s], false),
        (mean - rad, [-s, c], false),
        (0.0, [0.0, 0.0], true),
    ];
    pairs.sort_by(|p, q| q.0.partial_cmp(&p.0).expect("finite strain"));
    let e = [pairs[0].0, pairs[1].0, pairs[2].0];
    let pr = principal_return(e, lame, shear, &strength);

    // in-plane projections (xx, yy, xy) of v v^T and of the symmetrized
    // normalized products of two principal directions
    let proj = |k: usize| -> [f64; 3] {
        let (_, v, z) = pairs[k];
        if z {
            [0.0; 3]
        } else {
            [v[0] * v[0], v[1] * v[1], v[0] * v[1]]
        }
    };
    let mixed = |a: usize, b: usize| -> [f64; 3] {
        let (_, va, za) = pairs[a];
        let (_, vb, zb) = pairs[b];
        if za || zb {
            [0.0; 3]
        } else {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            [
                2.0 * va[0] * vb[0] * r,
                2.0 * va[1] * vb[1] * r,
                (va[0] * vb[1] + va[1] * vb[0]) * r,
            ]
        }
    };
    let p: [[f64; 3]; 3] = std::array::from_fn(proj);
    let mut stress = [0.0; 3];
    let mut stress_zz = 0.0;
    for k in 0..3 {
        if pairs[k].2 {
            stress_zz = pr.stress[k];
        }
        for r in 0..3 {
            stress[r] += pr.stress[k] * p[k][r];
        }
    }
    let mut tangent = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let j = pr.tangent[a][b];
            if j == 0.0 {
                continue;
            }
            for r in 0..3 {
                for q in 0..3 {
                    tangent[r][q] += j * p[a][r] * p[b][q];
                }
            }
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let m = mixed(a, b);
        if m == [0.0; 3] {
            continue;
        }
        let theta_ab = spin_coefficient(&pr, &e, a, b);
        for r in 0..3 {
            for q in 0..3 {
                tangent[r][q] += theta_ab * m[r] * m[q];
            }
        }
    }
    PlaneStrainUpdate {
        stress,
        stress_zz,
        tangent,
        regime: pr.regime,
        energy: pr.energy,
    }
}

/// Full three-dimensional return mapping.
///
/// The tangent uses Mandel notation `(xx, yy, zz, sqrt2 yz, sqrt2 xz, sqrt2 xy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressUpdate {
    pub stress: Matrix3<f64>,
    pub tangent: Matrix6<f64>,
    pub regime: Regime,
    pub energy: f64,
}

fn mandel(m: &Matrix3<f64>) -> [f64; 6] {
    let r = std::f64::consts::SQRT_2;
    [m[(0, 0)], m[(1, 1)], m[(2, 2)], r * m[(1, 2)], r * m[(0, 2)], r * m[(0, 1)]]
}

pub fn mc_return_mapping(strain: &Matrix3<f64>, material: &MohrCoulomb, lambda: f64) -> StressUpdate {
    let (lame, shear) = material.lame();
    let strength = material.reduced(lambda);
    let sym = 0.5 * (strain + strain.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).expect("finite strain"));
    let e = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    let vecs: [Vector3<f64>; 3] = std::array::from_fn(|k| eig.eigenvectors.column(order[k]).into_owned());
    let pr = principal_return(e, lame, shear, &strength);
    let mut stress = Matrix3::zeros();
    for k in 0..3 {
        stress += pr.stress[k] * vecs[k] * vecs[k].transpose();
    }
    let p: [[f64; 6]; 3] = std::array::from_fn(|k| mandel(&(vecs[k] * vecs[k].transpose())));
    let mut tangent = Matrix6::zeros();
    for a in 0..3 {
        for b in 0..3 {
            for r in 0..6 {
                for q in 0..6 {
                    tangent[(r, q)] += pr.tangent[a][b] * p[a][r] * p[b][q];
                }
            }
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let m = (vecs[a] * vecs[b].transpose() + vecs[b] * vecs[a].transpose()) * std::f64::consts::FRAC_1_SQRT_2;
        let m = mandel(&m);
        let th = spin_coefficient(&pr, &e, a, b);
        for r in 0..6 {
            for q in 0..6 {
                tangent[(r, q)] += th * m[r] * m[q];
            }
        }
    }
    StressUpdate {
        stress,
        tangent,
        regime: pr.regime,
        energy: pr.energy,
    }
}

/// Largest value of the reduced yield function over the principal stresses.
pub fn yield_value(stress: &Matrix3<f64>, material: &MohrCoulomb, lambda: f64) -> f64 {
    let strength = material.reduced(lambda);
    let eig = SymmetricEigen::new(0.5 * (stress + stress.transpose()));
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let sn = strength.friction.sin();
    (1.0 + sn) * max - (1.0 - sn) * min - strength.yield_constant()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat() -> MohrCoulomb {
        MohrCoulomb::default()
    }

    #[test]
    fn small_strain_is_elastic() {
        let u = return_map_plane_strain([1e-5, -1e-5, 0.0], &mat(), 1.0);
        assert_eq!(u.regime, Regime::Elastic);
        let (l, g) = mat().lame();
        assert!((u.stress[0] - (2.0 * g * 1e-5)).abs() < 1e-9);
        assert!((u.tangent[0][0] - (l + 2.0 * g)).abs() < 1e-6);
        assert!((u.tangent[2][2] - g).abs() < 1e-6);
    }

    #[test]
    fn hydrostatic_extension_returns_to_apex() {
        let u = return_map_plane_strain([0.01, 0.01, 0.0], &mat(), 1.0);
        assert_eq!(u.regime, Regime::Apex);
        let p = mat().reduced(1.0).apex_pressure();
        assert!((u.stress[0] - p).abs() < 1e-9 && (u.stress_zz - p).abs() < 1e-9);
        let (lame, shear) = mat().lame();
        assert!((u.tangent[0][0] - APEX_TANGENT_REG * (lame + 2.0 * shear)).abs() < 1e-9 * lame);
        assert!((u.tangent[2][2] - APEX_TANGENT_REG * shear).abs() < 1e-9 * lame);
    }

    #[test]
    fn plane_and_full_paths_agree() {
        let m = mat();
        for (i, s) in [[2e-3, -1e-3, 5e-4], [-3e-3, -1e-3, 2e-3], [1e-3, 1e-3, 1e-3], [4e-3, 0.0, 0.0]].iter().enumerate() {
            let p = return_map_plane_strain(*s, &m, 1.3);
            let t = Matrix3::new(s[0], 0.5 * s[2], 0.0, 0.5 * s[2], s[1], 0.0, 0.0, 0.0, 0.0);
            let f = mc_return_mapping(&t, &m, 1.3);
            assert_eq!(p.regime, f.regime, "case {i}");
            assert!((p.stress[0] - f.stress[(0, 0)]).abs() < 1e-8);
            assert!((p.stress[1] - f.stress[(1, 1)]).abs() < 1e-8);
            assert!((p.stress[2] - f.stress[(0, 1)]).abs() < 1e-8);
            assert!((p.stress_zz - f.stress[(2, 2)]).abs() < 1e-8);
            assert!((p.energy - f.energy).abs() < 1e-12 * (1.0 + p.energy.abs()));
        }
    }

    #[test]
    fn plane_tangent_matches_finite_differences() {
        let m = mat();
        for s in [[2e-3, -1e-3, 5e-4], [-3e-3, -1e-3, 2e-3], [3e-3, 1e-3, 4e-4], [-1e-4, -2e-4, 1e-5]] {
            let u = return_map_plane_strain(s, &m, 1.1);
            for q in 0..3 {
                let h = 1e-9;
                let mut sp = s;
                sp[q] += h;
                let mut sm = s;
                sm[q] -= h;
                let up = return_map_plane_strain(sp, &m, 1.1);
                let um = return_map_plane_strain(sm, &m, 1.1);
                for r in 0..3 {
                    let fd = (up.stress[r] - um.stress[r]) / (2.0 * h);
                    assert!(
                        (fd - u.tangent[r][q]).abs() < 1e-4 * m.young,
                        "{:?} r={r} q={q} fd={fd} t={}",
                        u.regime,
                        u.tangent[r][q]
                    );
                }
                let fd = (up.energy - um.energy) / (2.0 * h);
                assert!((fd - u.stress[q]).abs() < 1e-6 * (1.0 + u.stress[q].abs()));
            }
        }
    }
}

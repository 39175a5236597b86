//! Plane strain Mohr-Coulomb potential on a quadratic triangle mesh.
//!
//! The potential is the sum over quadrature points of the energy density
//! returned by the stress update; its gradient is the internal force and its
//! generalized Hessian is assembled from consistent tangents. The reduction
//! factor divides the cohesion and the tangent of the friction angle.

use rayon::prelude::*;

use super::element::{element_quadrature, QuadData};
use super::material::MohrCoulomb;
use super::mesh::Mesh;
use super::return_mapping::{return_map_plane_strain, Regime};
use crate::error::ModelError;
use crate::linalg::SparseMat;
use crate::potential::{LoadVector, ParamFamily, Potential};

const NONE: usize = usize::MAX;

pub struct FemModel {
    pub mesh: Mesh,
    pub material: MohrCoulomb,
    lambda0: f64,
    /// Free dof index of every nodal dof, `NONE` when prescribed.
    dof_map: Vec<usize>,
    n_free: usize,
    quad: Vec<[QuadData; 3]>,
    elem_dofs: Vec<[usize; 12]>,
    pattern: SparseMat,
    /// Position of each local matrix entry in the value array.
    slots: Vec<[usize; 144]>,
    load: LoadVector,
}

impl FemModel {
    pub fn new(mesh: Mesh, material: MohrCoulomb, lambda0: f64) -> Result<Self, ModelError> {
        material.validate()?;
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(ModelError::InvalidParameter("lambda0 must be positive".into()));
        }
        if !mesh.is_counterclockwise() {
            return Err(ModelError::Mesh("elements must be counterclockwise".into()));
        }
        let mut dof_map = vec![NONE; 2 * mesh.n_nodes()];
        let mut n_free = 0;
        for (n, f) in mesh.fixed.iter().enumerate() {
            for d in 0..2 {
                if !f[d] {
                    dof_map[2 * n + d] = n_free;
                    n_free += 1;
                }
            }
        }
        if n_free == 0 {
            return Err(ModelError::Mesh("no free degrees of freedom".into()));
        }
        let quad: Vec<[QuadData; 3]> = mesh
            .elements
            .iter()
            .map(|e| element_quadrature(&std::array::from_fn(|k| mesh.nodes[e[k]])))
            .collect();
        let elem_dofs: Vec<[usize; 12]> = mesh
            .elements
            .iter()
            .map(|e| std::array::from_fn(|i| dof_map[2 * e[i / 2] + i % 2]))
            .collect();

        // sparsity pattern with sorted columns and the diagonal always present
        let mut cols: Vec<Vec<usize>> = (0..n_free).map(|i| vec![i]).collect();
        for dofs in &elem_dofs {
            for &i in dofs.iter().filter(|&&i| i != NONE) {
                cols[i].extend(dofs.iter().copied().filter(|&j| j != NONE));
            }
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        for c in &mut cols {
            c.sort_unstable();
            c.dedup();
            indices.extend_from_slice(c);
            indptr.push(indices.len());
        }
        let nnz = indices.len();
        let pattern = SparseMat::from_raw(n_free, indptr, indices, vec![0.0; nnz]);
        let slots = elem_dofs
            .iter()
            .map(|dofs| {
                let mut s = [NONE; 144];
                for a in 0..12 {
                    for b in 0..12 {
                        let (i, j) = (dofs[a], dofs[b]);
                        if i != NONE && j != NONE {
                            let (lo, hi) = (pattern.indptr()[i], pattern.indptr()[i + 1]);
                            let k = pattern.indices()[lo..hi].binary_search(&j).expect("entry in pattern");
                            s[12 * a + b] = lo + k;
                        }
                    }
                }
                s
            })
            .collect();

        let nodal = nodal_gravity(&mesh, &quad, material.unit_weight);
        let mut b = vec![0.0; n_free];
        for (n, f) in nodal.iter().enumerate() {
            for d in 0..2 {
                let i = dof_map[2 * n + d];
                if i != NONE {
                    b[i] = f[d];
                }
            }
        }
        let load = LoadVector::new(b, "gravity").map_err(|_| ModelError::InvalidParameter("gravity load vanishes".into()))?;
        Ok(Self {
            mesh,
            material,
            lambda0,
            dof_map,
            n_free,
            quad,
            elem_dofs,
            pattern,
            slots,
            load,
        })
    }

    pub fn load(&self) -> &LoadVector {
        &self.load
    }

    /// Gravity forces on all nodes; the part on supported dofs is carried by
    /// the reactions.
    pub fn nodal_gravity(&self) -> Vec<[f64; 2]> {
        nodal_gravity(&self.mesh, &self.quad, self.material.unit_weight)
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.elements.len()
    }

    fn local(&self, e: usize, u: &[f64]) -> [f64; 12] {
        std::array::from_fn(|i| {
            let d = self.elem_dofs[e][i];
            if d == NONE {
                0.0
            } else {
                u[d]
            }
        })
    }

    fn strain(d: &QuadData, ue: &[f64; 12]) -> [f64; 3] {
        std::array::from_fn(|r| d.b[r].iter().zip(ue).map(|(a, b)| a * b).sum())
    }

    /// Nodal displacements `(x, y)` for every node, zero where prescribed.
    pub fn full_displacement(&self, u: &[f64]) -> Vec<[f64; 2]> {
        (0..self.mesh.n_nodes())
            .map(|n| {
                std::array::from_fn(|d| {
                    let i = self.dof_map[2 * n + d];
                    if i == NONE {
                        0.0
                    } else {
                        u[i]
                    }
                })
            })
            .collect()
    }

    /// Quadrature average of the deviatoric strain norm per element.
    pub fn deviatoric_strain(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n_elements())
            .map(|e| {
                let ue = self.local(e, u);
                let mut acc = 0.0;
                let mut w = 0.0;
                for d in &self.quad[e] {
                    acc += d.weight * deviatoric_norm(Self::strain(d, &ue));
                    w += d.weight;
                }
                acc / w
            })
            .collect()
    }

    /// Regime of the stress update at every quadrature point.
    pub fn regimes(&self, lambda: f64, u: &[f64]) -> Vec<Regime> {
        (0..self.n_elements())
            .flat_map(|e| {
                let ue = self.local(e, u);
                self.quad[e]
                    .iter()
                    .map(|d| return_map_plane_strain(Self::strain(d, &ue), &self.material, lambda).regime)
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Consistent nodal forces of the body force `(0, -unit_weight)` on every
/// node, including supported ones.
fn nodal_gravity(mesh: &Mesh, quad: &[[QuadData; 3]], unit_weight: f64) -> Vec<[f64; 2]> {
    let mut f = vec![[0.0; 2]; mesh.n_nodes()];
    for (q, e) in quad.iter().zip(&mesh.elements) {
        for d in q {
            for k in 0..6 {
                f[e[k]][1] -= unit_weight * d.shape[k] * d.weight;
            }
        }
    }
    f
}

/// Norm of the deviatoric part of the plane strain tensor (`e_zz = 0`).
pub fn deviatoric_norm(strain: [f64; 3]) -> f64 {
    let (xx, yy, xy) = (strain[0], strain[1], 0.5 * strain[2]);
    let mean = (xx + yy) / 3.0;
    let (dx, dy, dz) = (xx - mean, yy - mean, -mean);
    (dx * dx + dy * dy + dz * dz + 2.0 * xy * xy).sqrt()
}

impl ParamFamily for FemModel {
    fn dim(&self) -> usize {
        self.n_free
    }

    fn lambda0(&self) -> f64 {
        self.lambda0
    }

    fn value_at(&self, lambda: f64, u: &[f64]) -> f64 {
        let parts: Vec<f64> = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let ue = self.local(e, u);
                self.quad[e]
                    .iter()
                    .map(|d| d.weight * return_map_plane_strain(Self::strain(d, &ue), &self.material, lambda).energy)
                    .sum()
            })
            .collect();
        parts.iter().sum()
    }

    fn grad_at(&self, lambda: f64, u: &[f64]) -> Vec<f64> {
        let parts: Vec<[f64; 12]> = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let ue = self.local(e, u);
                let mut fe = [0.0; 12];
                for d in &self.quad[e] {
                    let s = return_map_plane_strain(Self::strain(d, &ue), &self.material, lambda).stress;
                    for (i, f) in fe.iter_mut().enumerate() {
                        *f += d.weight * (d.b[0][i] * s[0] + d.b[1][i] * s[1] + d.b[2][i] * s[2]);
                    }
                }
                fe
            })
            .collect();
        let mut g = vec![0.0; self.n_free];
        for (fe, dofs) in parts.iter().zip(&self.elem_dofs) {
            for (i, &d) in dofs.iter().enumerate() {
                if d != NONE {
                    g[d] += fe[i];
                }
            }
        }
        g
    }

    fn hessian_at(&self, lambda: f64, u: &[f64]) -> SparseMat {
        let parts: Vec<[f64; 144]> = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let ue = self.local(e, u);
                let mut ke = [0.0; 144];
                for d in &self.quad[e] {
                    let t = return_map_plane_strain(Self::strain(d, &ue), &self.material, lambda).tangent;
                    // D B
                    let mut db = [[0.0; 12]; 3];
                    for r in 0..3 {
                        for j in 0..12 {
                            db[r][j] = t[r][0] * d.b[0][j] + t[r][1] * d.b[1][j] + t[r][2] * d.b[2][j];
                        }
                    }
                    for i in 0..12 {
                        for j in 0..12 {
                            ke[12 * i + j] += d.weight * (d.b[0][i] * db[0][j] + d.b[1][i] * db[1][j] + d.b[2][i] * db[2][j]);
                        }
                    }
                }
                // exact symmetry of the assembled matrix
                for i in 0..12 {
                    for j in 0..i {
                        let m = 0.5 * (ke[12 * i + j] + ke[12 * j + i]);
                        ke[12 * i + j] = m;
                        ke[12 * j + i] = m;
                    }
                }
                ke
            })
            .collect();
        let mut h = self.pattern.clone();
        let vals = h.values_mut();
        for (ke, slots) in parts.iter().zip(&self.slots) {
            for (k, &s) in slots.iter().enumerate() {
                if s != NONE {
                    vals[s] += ke[k];
                }
            }
        }
        h
    }
}

impl Potential for FemModel {
    fn dim(&self) -> usize {
        self.n_free
    }
    fn value(&self, u: &[f64]) -> f64 {
        self.value_at(1.0, u)
    }
    fn grad(&self, u: &[f64]) -> Vec<f64> {
        self.grad_at(1.0, u)
    }
    fn hessian(&self, u: &[f64]) -> SparseMat {
        self.hessian_at(1.0, u)
    }
}

//! Sparse symmetric matrices and linear solves.
//!
//! Matrices are stored in compressed sparse row form with both triangles
//! present and sorted column indices. Since they are symmetric the same
//! arrays describe the compressed column form expected by the Cholesky
//! backend.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular or not positive definite (pivot {0})")]
    Singular(usize),
    #[error("iterative solver did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("symbolic analysis failed")]
    Symbolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMat {
    /// Builds a matrix from raw row pointers, sorted column indices and values.
    pub fn from_raw(n: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(indptr.len(), n + 1);
        assert_eq!(indices.len(), values.len());
        assert_eq!(*indptr.last().unwrap(), indices.len());
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    /// Sums duplicate entries. The diagonal is always part of the pattern.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 0.0)]).collect();
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    trip.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, &trip)
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.indptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (a, b) = (self.indptr[i], self.indptr[i + 1]);
                self.indices[a..b]
                    .iter()
                    .zip(&self.values[a..b])
                    .map(|(&j, v)| v * x[j])
                    .sum()
            })
            .collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs_diag(&self) -> f64 {
        self.diag().iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }

    /// Adds `s` to every diagonal entry. The diagonal must be in the pattern.
    pub fn add_to_diagonal(&mut self, s: f64) {
        for i in 0..self.n {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let k = self.indices[a..b]
                .binary_search(&i)
                .expect("diagonal entry missing from pattern");
            self.values[a + k] += s;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k])] += self.values[k];
            }
        }
        m
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn same_pattern(&self, other: &SparseMat) -> bool {
        self.n == other.n && self.indptr == other.indptr && self.indices == other.indices
    }
}

/// Entries of the Cholesky factor above which the iterative fallback is used.
pub const DEFAULT_FILL_CAP: usize = 60_000_000;

/// Sparse Cholesky solver that reuses the symbolic analysis while the
/// sparsity pattern stays the same.
pub struct LinearSolver {
    symbolic: Option<(SparseMat, Arc<SymbolicCholesky<usize>>)>,
    fill_cap: usize,
}

impl Default for LinearSolver {
    fn default() -> Self {
        Self::new()
    }
}

pub enum Factor {
    Direct {
        symbolic: Arc<SymbolicCholesky<usize>>,
        values: Vec<f64>,
    },
    Iterative(SparseMat),
}

impl LinearSolver {
    pub fn new() -> Self {
        Self {
            symbolic: None,
            fill_cap: DEFAULT_FILL_CAP,
        }
    }

    pub fn with_fill_cap(fill_cap: usize) -> Self {
        Self {
            symbolic: None,
            fill_cap,
        }
    }

    fn symbolic_for(&mut self, a: &SparseMat) -> Result<Arc<SymbolicCholesky<usize>>, LinalgError> {
        if let Some((pat, sym)) = &self.symbolic {
            if pat.same_pattern(a) {
                return Ok(sym.clone());
            }
        }
        let structure = SymbolicSparseColMatRef::new_checked(a.n, a.n, &a.indptr, None, &a.indices);
        let sym = factorize_symbolic_cholesky(structure, Side::Lower, SymmetricOrdering::Amd, Default::default())
            .map_err(|_| LinalgError::Symbolic)?;
        let sym = Arc::new(sym);
        let pattern = SparseMat {
            n: a.n,
            indptr: a.indptr.clone(),
            indices: a.indices.clone(),
            values: Vec::new(),
        };
        self.symbolic = Some((pattern, sym.clone()));
        Ok(sym)
    }

    /// Factorizes a symmetric positive definite matrix. Fails with
    /// [`LinalgError::Singular`] on a nonpositive pivot.
    pub fn factorize(&mut self, a: &SparseMat) -> Result<Factor, LinalgError> {
        if a.n == 0 {
            return Ok(Factor::Iterative(a.clone()));
        }
        let symbolic = self.symbolic_for(a)?;
        if symbolic.len_val() > self.fill_cap {
            if a.diag().iter().any(|&d| d <= 0.0) {
                return Err(LinalgError::Singular(0));
            }
            return Ok(Factor::Iterative(a.clone()));
        }
        let structure = SymbolicSparseColMatRef::new_checked(a.n, a.n, &a.indptr, None, &a.indices);
        let mat = SparseColMatRef::new(structure, &a.values);
        let mut values = vec![0.0; symbolic.len_val()];
        let mut buf = MemBuffer::new(symbolic.factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_llt(
                &mut values,
                mat,
                Side::Lower,
                LltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| match e {
                faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index } => {
                    LinalgError::Singular(index)
                }
            })?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::Singular(0));
        }
        Ok(Factor::Direct { symbolic, values })
    }
}

impl Factor {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = rhs.to_vec();
        match self {
            Factor::Direct { symbolic, values } => {
                let n = rhs.len();
                let llt = faer::sparse::linalg::cholesky::LltRef::new(symbolic, values);
                let mut buf = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
                llt.solve_in_place_with_conj(
                    Conj::No,
                    MatMut::from_column_major_slice_mut(&mut x, n, 1),
                    Par::Seq,
                    MemStack::new(&mut buf),
                );
            }
            Factor::Iterative(a) => {
                if a.n == 0 {
                    return Ok(x);
                }
                x = pcg(a, rhs, 1e-13, 20 * a.n + 100)?;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::Singular(0));
        }
        Ok(x)
    }
}

/// Solves `A x = rhs` for symmetric positive definite `A`.
pub fn linear_solve(a: &SparseMat, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    LinearSolver::new().factorize(a)?.solve(rhs)
}

/// Jacobi preconditioned conjugate gradients.
pub fn pcg(a: &SparseMat, rhs: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>, LinalgError> {
    let n = a.n;
    let dinv: Vec<f64> = a
        .diag()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let rhs_norm = crate::potential::norm(rhs);
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = crate::potential::dot(&r, &z);
    for it in 0..max_iter {
        let ap = a.matvec(&p);
        let pap = crate::potential::dot(&p, &ap);
        if pap <= 0.0 {
            return Err(LinalgError::Singular(it));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if crate::potential::norm(&r) <= rel_tol * rhs_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = crate::potential::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::NotConverged(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SparseMat {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMat::from_triplets(n, &t)
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseMat::diagonal(&[2.0, 4.0]);
        let x = linear_solve(&a, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_block_is_singular() {
        let a = SparseMat::diagonal(&[1.0, 0.0]);
        assert!(matches!(linear_solve(&a, &[1.0, 1.0]), Err(LinalgError::Singular(_))));
    }

    #[test]
    fn direct_and_iterative_agree() {
        let a = laplacian(50);
        let rhs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = linear_solve(&a, &rhs).unwrap();
        let x2 = LinearSolver::with_fill_cap(0).factorize(&a).unwrap().solve(&rhs).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()));
        }
        let r = a.matvec(&x1);
        for (p, q) in r.iter().zip(&rhs) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMat::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0)]);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.symmetry_defect(), 0.0);
    }
}

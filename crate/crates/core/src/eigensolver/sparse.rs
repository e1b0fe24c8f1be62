use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per parallel block in [`SparseSymOp::apply`]. Block boundaries do not
/// affect results since each output entry is computed by one thread.
const PAR_ROWS: usize = 4096;

/// A real symmetric linear map `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// An upper bound on the spectral radius, used to scale tolerances.
    fn norm_bound(&self) -> f64;
}

/// Symmetric operator `K + diag(V)` with `K` in compressed sparse rows.
///
/// Vectors live in the symmetrized representation `u = sqrt(w) ψ`, where `w`
/// are the quadrature weights of the underlying grid, so the plain Euclidean
/// product of `u` vectors is the weighted `L²` product of grid functions.
#[derive(Debug, Clone)]
pub struct SparseSymOp {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    potential: Vec<f64>,
    weights: Vec<f64>,
}

impl SparseSymOp {
    /// Builds the operator from `(row, col, value)` off-diagonal and diagonal
    /// kinetic entries. Duplicates are summed. Both triangles must be present.
    pub fn from_triplets(
        n: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        potential: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if potential.len() != n || weights.len() != n {
            return Err(Error::InvalidInput(format!(
                "potential/weights length {} / {} does not match dimension {n}",
                potential.len(),
                weights.len()
            )));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) outside dimension {n}"
                )));
            }
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = SparseSymOp {
            n,
            row_ptr,
            col_idx,
            vals,
            potential,
            weights,
        };
        op.validate()?;
        Ok(op)
    }

    fn validate(&self) -> Result<()> {
        if self
            .vals
            .iter()
            .chain(&self.potential)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(
                "operator has non-finite entries".into(),
            ));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput(
                "quadrature weights must be positive".into(),
            ));
        }
        if !self.is_symmetric() {
            return Err(Error::InvalidInput("operator is not symmetric".into()));
        }
        Ok(())
    }

    /// Checks `A_ij == A_ji` entry by entry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i)
                .all(|(j, v)| self.get(j, i).is_some_and(|w| w == v))
        })
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// Kinetic entry `K_ij`, if stored.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| self.vals[range.start + k])
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Copy with the diagonal potential replaced.
    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self> {
        let op = SparseSymOp {
            potential,
            ..self.clone()
        };
        if op.potential.len() != op.n {
            return Err(Error::InvalidInput("potential length mismatch".into()));
        }
        op.validate()?;
        Ok(op)
    }

    /// Dense copy of `K + diag(V)`; intended for small test problems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
            m[(i, i)] += self.potential[i];
        }
        m
    }

    /// Grid-function values `ψ = u / sqrt(w)` of a symmetrized vector.
    pub fn to_grid_values(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.weights)
            .map(|(x, w)| x / w.sqrt())
            .collect()
    }

    /// Symmetrized vector `u = sqrt(w) ψ` of grid-function values.
    pub fn from_grid_values(&self, psi: &[f64]) -> Vec<f64> {
        psi.iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w.sqrt())
            .collect()
    }

    /// `<u, A u>`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.apply(u, &mut y);
        dot(u, &y)
    }

    fn apply_rows(&self, start: usize, x: &[f64], y: &mut [f64]) {
        for (k, yi) in y.iter_mut().enumerate() {
            let i = start + k;
            let mut s = self.potential[i] * x[i];
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[idx] * x[self.col_idx[idx]];
            }
            *yi = s;
        }
    }
}

impl LinearOperator for SparseSymOp {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        if self.n <= PAR_ROWS {
            self.apply_rows(0, x, y);
        } else {
            y.par_chunks_mut(PAR_ROWS)
                .enumerate()
                .for_each(|(b, chunk)| self.apply_rows(b * PAR_ROWS, x, chunk));
        }
    }

    /// Gershgorin bound `max_i Σ_j |A_ij|`.
    fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let off: f64 = self.row(i).map(|(_, v)| v.abs()).sum();
                let diag_k = self.get(i, i).unwrap_or(0.0);
                off - diag_k.abs() + (diag_k + self.potential[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Dense symmetric matrices act through the same interface.
impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn norm_bound(&self) -> f64 {
        self.row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> SparseSymOp {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSymOp::from_triplets(n, t, vec![0.5; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn apply_matches_dense() {
        let op = path_graph(7);
        let dense = op.to_dense();
        let x: Vec<f64> = (0..7).map(|i| (i as f64).sin()).collect();
        let mut y = vec![0.0; 7];
        op.apply(&x, &mut y);
        let mut z = vec![0.0; 7];
        dense.apply(&x, &mut z);
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(op.nnz(), 19);
        assert!((op.norm_bound() - 4.5).abs() < 1e-15);
    }

    #[test]
    fn parallel_apply_matches_serial() {
        let n = 3 * PAR_ROWS + 17;
        let op = path_graph(n);
        let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
        let mut y = vec![0.0; n];
        op.apply(&x, &mut y);
        let mut z = vec![0.0; n];
        op.apply_rows(0, &x, &mut z);
        assert_eq!(y, z);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let t = vec![(0, 1, 1.0), (1, 0, 2.0)];
        assert!(SparseSymOp::from_triplets(2, t, vec![0.0; 2], vec![1.0; 2]).is_err());
        let t = vec![(0, 1, 1.0)];
        assert!(SparseSymOp::from_triplets(2, t, vec![0.0; 2], vec![1.0; 2]).is_err());
    }

    #[test]
    fn duplicates_are_summed() {
        let t = vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)];
        let op = SparseSymOp::from_triplets(2, t, vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(op.get(0, 0), Some(3.0));
    }

    #[test]
    fn grid_value_round_trip() {
        let t = vec![(0, 0, 1.0), (1, 1, 1.0)];
        let op = SparseSymOp::from_triplets(2, t, vec![0.0; 2], vec![4.0, 9.0]).unwrap();
        let psi = op.to_grid_values(&[2.0, 3.0]);
        assert_eq!(psi, vec![1.0, 1.0]);
        assert_eq!(op.from_grid_values(&psi), vec![2.0, 3.0]);
    }
}

//! Lowest eigenpair of a symmetric tridiagonal operator by Sturm-sequence
//! bisection followed by inverse iteration. Linear cost per step, so the
//! one-dimensional problems avoid the slow Krylov convergence caused by their
//! large `‖A‖ / gap` ratio.

use super::lanczos::{EigOptions, EigResult};
use super::sparse::{dot, norm, LinearOperator, SparseSymOp};
use crate::error::{Error, Result};

const INVERSE_STEPS: usize = 3;

/// Diagonal and sub-diagonal of `op`, or `None` if it has entries off the
/// three central bands.
fn bands(op: &SparseSymOp) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = op.dim();
    let diag = (0..n)
        .map(|i| op.get(i, i).unwrap_or(0.0) + op.potential()[i])
        .collect();
    let off = (1..n).map(|i| op.get(i, i - 1).unwrap_or(0.0)).collect();
    let stored_off = (1..n).filter(|&i| op.get(i, i - 1).is_some()).count();
    let stored_diag = (0..n).filter(|&i| op.get(i, i).is_some()).count();
    (op.nnz() == stored_diag + 2 * stored_off).then_some((diag, off))
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, d) in diag.iter().enumerate() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = d - x - e2 / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T - σ) y = b` by Gaussian elimination without pivoting; tiny
/// pivots are replaced so that the near-singular solve amplifies the
/// eigenvector component.
fn shifted_solve(diag: &[f64], off: &[f64], sigma: f64, pivmin: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut piv = diag[0] - sigma;
    for i in 0..n {
        if i > 0 {
            piv = diag[i] - sigma - off[i - 1] * c[i - 1];
        }
        if piv.abs() < pivmin {
            piv = pivmin;
        }
        if i + 1 < n {
            c[i] = off[i] / piv;
        }
        let prev = if i > 0 { off[i - 1] * y[i - 1] } else { 0.0 };
        y[i] = (b[i] - prev) / piv;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    y
}

/// Lowest eigenpair of a tridiagonal [`SparseSymOp`].
///
/// Each Sturm count and each inverse-iteration solve count as one operator
/// application against `opts.max_iter`.
pub fn lowest_tridiagonal(op: &SparseSymOp, opts: &EigOptions) -> Result<EigResult> {
    let n = op.dim();
    if n < 2 {
        return Err(Error::InvalidInput("tridiagonal solve needs n >= 2".into()));
    }
    let (diag, off) =
        bands(op).ok_or_else(|| Error::InvalidInput("operator is not tridiagonal".into()))?;
    let norm_estimate = op.norm_bound();
    let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * norm_estimate);
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..n)
        .map(|i| diag[i] - radius(i))
        .fold(f64::INFINITY, f64::min);
    let mut hi = (0..n)
        .map(|i| diag[i] + radius(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut iterations = 0;
    while hi - lo > 2.0 * f64::EPSILON * (lo.abs().max(hi.abs())) + pivmin {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(&diag, &off, mid, pivmin) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: f64::NAN,
            });
        }
    }
    let sigma = 0.5 * (lo + hi);

    let mut x: Vec<f64> = match &opts.start {
        Some(s) if s.len() == n => s.clone(),
        _ => vec![1.0; n],
    };
    let mut y = vec![0.0; n];
    let mut eigenvalue = sigma;
    let mut residual = f64::INFINITY;
    for _ in 0..INVERSE_STEPS {
        x = shifted_solve(&diag, &off, sigma, pivmin, &x);
        let s = 1.0 / norm(&x);
        x.iter_mut().for_each(|v| *v *= s);
        op.apply(&x, &mut y);
        eigenvalue = dot(&x, &y);
        residual = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - eigenvalue * b).powi(2))
            .sum::<f64>()
            .sqrt();
        iterations += 1;
        if residual <= opts.tol * norm_estimate {
            break;
        }
    }
    if !(residual <= opts.tol * norm_estimate) {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(EigResult {
        eigenvalue,
        vector: x,
        iterations,
        restarts: 0,
        residual,
        norm_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::grid::{assemble_1d_electron_plate, assemble_1d_laplacian, Grid1D};
    use crate::eigensolver::lanczos::lowest_eigenpair;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_matches_closed_form() {
        let g = Grid1D::new(200, 1.0).unwrap();
        let op = assemble_1d_laplacian(&g).unwrap();
        let e = lowest_tridiagonal(&op, &EigOptions::default()).unwrap();
        let exact = 4.0 / (g.h * g.h) * (PI * g.h / 2.0).sin().powi(2);
        assert!((e.eigenvalue - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn agrees_with_lanczos() {
        let g = Grid1D::new(300, 200.0).unwrap();
        let op = assemble_1d_electron_plate(&g).unwrap();
        let a = lowest_tridiagonal(&op, &EigOptions::default()).unwrap();
        let b = lowest_eigenpair(&op, &EigOptions::default()).unwrap();
        assert!((a.eigenvalue - b.eigenvalue).abs() < 1e-12);
        assert!(dot(&a.vector, &b.vector).abs() > 1.0 - 1e-8);
    }

    #[test]
    fn unreachable_tolerance_fails() {
        let g = Grid1D::new(100, 50.0).unwrap();
        let op = assemble_1d_electron_plate(&g).unwrap();
        let opts = EigOptions {
            tol: 1e-30,
            ..EigOptions::default()
        };
        assert!(matches!(
            lowest_tridiagonal(&op, &opts),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn rejects_wider_bands() {
        let t = vec![
            (0, 0, 1.0),
            (0, 2, 0.5),
            (2, 0, 0.5),
            (1, 1, 1.0),
            (2, 2, 1.0),
        ];
        let op = SparseSymOp::from_triplets(3, t, vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(lowest_tridiagonal(&op, &EigOptions::default()).is_err());
    }
}

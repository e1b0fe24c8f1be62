//! Thick-restart Lanczos (Krylov–Schur) for the lowest eigenpairs of a real
//! symmetric operator.
//!
//! The projected matrix is accumulated from full Gram–Schmidt coefficients
//! (two passes), so the basis stays orthonormal to working precision and the
//! Ritz values are a plain Rayleigh–Ritz projection. Every reduction runs in a
//! fixed order, which makes results bitwise reproducible for a given seed.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::sparse::{dot, norm, LinearOperator};
use crate::error::{Error, Result};

const PAR_LEN: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Converged when `‖A x - λ x‖ <= tol · ‖A‖_est`.
    pub tol: f64,
    /// Budget of operator applications.
    pub max_iter: usize,
    pub seed: u64,
    /// Maximum dimension of the Krylov subspace before a restart.
    pub krylov_dim: usize,
    /// Ritz vectors retained at a restart.
    pub keep: usize,
    /// Optional starting vector (warm start); otherwise random from `seed`.
    pub start: Option<Vec<f64>>,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-10,
            max_iter: 50_000,
            seed: 0x5eed,
            krylov_dim: 80,
            keep: 20,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigResult {
    pub eigenvalue: f64,
    /// Unit Euclidean norm in the operator's (symmetrized) representation.
    #[serde(skip)]
    pub vector: Vec<f64>,
    /// Operator applications used.
    pub iterations: usize,
    pub restarts: usize,
    /// `‖A x - λ x‖`.
    pub residual: f64,
    /// The `‖A‖` estimate the tolerance was scaled with.
    pub norm_estimate: f64,
}

/// Lowest eigenpair of `op`.
pub fn lowest_eigenpair<A: LinearOperator + ?Sized>(
    op: &A,
    opts: &EigOptions,
) -> Result<EigResult> {
    let mut v = lowest_eigenpairs(op, 1, opts)?;
    Ok(v.remove(0))
}

/// The `nev` lowest eigenpairs of `op`, ascending.
pub fn lowest_eigenpairs<A: LinearOperator + ?Sized>(
    op: &A,
    nev: usize,
    opts: &EigOptions,
) -> Result<Vec<EigResult>> {
    let n = op.dim();
    if n == 0 || nev == 0 || nev > n {
        return Err(Error::InvalidInput(format!(
            "cannot compute {nev} eigenpairs of a {n}-dimensional operator"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let norm_est = op.norm_bound().max(f64::MIN_POSITIVE);
    let threshold = opts.tol * norm_est;
    let m = opts.krylov_dim.max(nev + 2).min(n);
    let keep = opts.keep.max(nev).min(m.saturating_sub(1)).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let start = match &opts.start {
        Some(s) if s.len() == n && norm(s) > 0.0 => s.clone(),
        Some(s) if s.len() != n => {
            return Err(Error::InvalidInput(format!(
                "start vector has length {}, operator dimension is {n}",
                s.len()
            )))
        }
        _ => random_vector(&mut rng, n),
    };
    basis.push(normalized(start));

    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut j = 0usize;
    let mut iterations = 0usize;
    let mut restarts = 0usize;
    let mut best_residual = f64::INFINITY;
    let mut w = vec![0.0; n];

    loop {
        let mut beta = 0.0;
        let mut size = m;
        while j < m {
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let h = orthogonalize(&basis, &mut w);
            for (i, hi) in h.iter().enumerate() {
                t[(i, j)] = *hi;
                t[(j, i)] = *hi;
            }
            beta = norm(&w);
            if beta <= 1e-13 * norm_est {
                // Invariant subspace: continue with a fresh random direction if needed.
                size = j + 1;
                beta = 0.0;
                break;
            }
            let inv = 1.0 / beta;
            basis.push(w.iter().map(|x| x * inv).collect());
            j += 1;
        }

        let tm = t.view((0, 0), (size, size)).into_owned();
        let eig = SymmetricEigen::new(tm);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let theta: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let y = DMatrix::from_fn(size, size, |r, c| eig.eigenvectors[(r, order[c])]);

        let wanted = nev.min(size);
        let estimates: Vec<f64> = (0..wanted)
            .map(|c| (beta * y[(size - 1, c)]).abs())
            .collect();
        if wanted == nev && estimates.iter().all(|e| *e <= threshold) {
            let mut out = Vec::with_capacity(nev);
            let mut all_ok = true;
            for c in 0..nev {
                let x = normalized(combine(&basis[..size], y.column(c).as_slice()));
                op.apply(&x, &mut w);
                iterations += 1;
                let res = residual_norm(&w, &x, theta[c]);
                if c == 0 {
                    best_residual = best_residual.min(res);
                }
                all_ok &= res <= threshold;
                out.push(EigResult {
                    eigenvalue: theta[c],
                    vector: x,
                    iterations: 0,
                    restarts,
                    residual: res,
                    norm_estimate: norm_est,
                });
            }
            if all_ok {
                for r in &mut out {
                    r.iterations = iterations;
                }
                return Ok(out);
            }
        }
        best_residual = best_residual.min(estimates[0]);
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: best_residual,
            });
        }

        // Thick restart: keep the lowest Ritz vectors plus the residual direction.
        let k = keep.min(size.saturating_sub(1)).max(1).min(size);
        let cols: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|c| combine(&basis[..size], y.column(c).as_slice()))
            .collect();
        let next = if beta > 0.0 {
            Some(basis[size].clone())
        } else {
            None
        };
        basis.clear();
        basis.extend(cols);
        t.fill(0.0);
        for c in 0..k {
            t[(c, c)] = theta[c];
        }
        match next {
            Some(v) if k < m => {
                for c in 0..k {
                    let coupling = beta * y[(size - 1, c)];
                    t[(c, k)] = coupling;
                    t[(k, c)] = coupling;
                }
                basis.push(v);
            }
            _ => {
                let mut fresh = random_vector(&mut rng, n);
                orthogonalize(&basis, &mut fresh);
                basis.push(normalized(fresh));
            }
        }
        j = k;
        restarts += 1;
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s = 1.0 / norm(&v);
    v.iter_mut().for_each(|x| *x *= s);
    v
}

fn residual_norm(ax: &[f64], x: &[f64], lambda: f64) -> f64 {
    ax.iter()
        .zip(x)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Two passes of classical Gram–Schmidt; returns the accumulated coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut total = vec![0.0; basis.len()];
    for _ in 0..2 {
        let h: Vec<f64> = if w.len() >= PAR_LEN {
            basis.par_iter().map(|v| dot(v, w)).collect()
        } else {
            basis.iter().map(|v| dot(v, w)).collect()
        };
        subtract_combination(basis, &h, w);
        for (t, c) in total.iter_mut().zip(&h) {
            *t += c;
        }
    }
    total
}

fn subtract_combination(basis: &[Vec<f64>], coeffs: &[f64], w: &mut [f64]) {
    let body = |(start, chunk): (usize, &mut [f64])| {
        for (v, c) in basis.iter().zip(coeffs) {
            for (k, x) in chunk.iter_mut().enumerate() {
                *x -= c * v[start + k];
            }
        }
    };
    if w.len() >= PAR_LEN {
        w.par_chunks_mut(PAR_LEN)
            .enumerate()
            .map(|(b, c)| (b * PAR_LEN, c))
            .for_each(body);
    } else {
        body((0, w));
    }
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for (v, c) in basis.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::sparse::SparseSymOp;

    #[test]
    fn diagonal_three_by_three() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let res = lowest_eigenpair(&a, &EigOptions::default()).unwrap();
        assert!((res.eigenvalue - 1.0).abs() < 1e-12);
        assert!((res.vector[1].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_sparse_matches_dense() {
        let n = 500;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, rng.random_range(-1.0..1.0)));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v = rng.random_range(-1.0..1.0);
                    trip.push((i, j, v));
                    trip.push((j, i, v));
                }
            }
        }
        let op = SparseSymOp::from_triplets(n, trip, vec![0.0; n], vec![1.0; n]).unwrap();
        let dense = SymmetricEigen::new(op.to_dense()).eigenvalues.min();
        let res = lowest_eigenpair(
            &op,
            &EigOptions {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            (res.eigenvalue - dense).abs() < 1e-10,
            "{} vs {dense}",
            res.eigenvalue
        );
    }

    #[test]
    fn two_lowest_of_path_laplacian() {
        let n = 200;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let op = SparseSymOp::from_triplets(n, trip, vec![0.0; n], vec![1.0; n]).unwrap();
        let res = lowest_eigenpairs(&op, 2, &EigOptions::default()).unwrap();
        for (k, r) in res.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((r.eigenvalue - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = DMatrix::from_fn(60, 60, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let r1 = lowest_eigenpair(&a, &EigOptions::default()).unwrap();
        let r2 = lowest_eigenpair(&a, &EigOptions::default()).unwrap();
        assert_eq!(r1.eigenvalue.to_bits(), r2.eigenvalue.to_bits());
        assert_eq!(r1.vector, r2.vector);
    }

    #[test]
    fn exact_start_vector_converges_immediately() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, -2.0, 1.0, 4.0]));
        let opts = EigOptions {
            start: Some(vec![0.0, 1.0, 0.0, 0.0]),
            ..Default::default()
        };
        let res = lowest_eigenpair(&a, &opts).unwrap();
        assert_eq!(res.eigenvalue, -2.0);
        assert!(res.iterations <= 2);
    }

    #[test]
    fn unreachable_tolerance_reports_best_residual() {
        let a = DMatrix::from_fn(40, 40, |i, j| {
            ((i * j) as f64).sin() + if i == j { i as f64 } else { 0.0 }
        });
        let a = (&a + a.transpose()) * 0.5;
        let opts = EigOptions {
            tol: 1e-30,
            max_iter: 300,
            ..Default::default()
        };
        match lowest_eigenpair(&a, &opts) {
            Err(Error::NotConverged {
                iterations,
                residual,
            }) => {
                assert!(iterations >= 300);
                assert!(residual.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}

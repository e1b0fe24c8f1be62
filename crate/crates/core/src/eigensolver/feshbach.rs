//! Feshbach–Schur map `F_P(λ) = PHP - PHP⊥ (H⊥ - λ)^{-1} P⊥HP` for a
//! finite-rank orthogonal projection `P = Q Qᵀ`, and its scalar fixed point.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::lanczos::{lowest_eigenpair, EigOptions};
use super::sparse::{axpy, dot, norm, LinearOperator};
use crate::error::{Error, Result};

/// Orthonormal columns spanning `Ran P`.
#[derive(Debug, Clone)]
pub struct Projection {
    q: DMatrix<f64>,
}

impl Projection {
    /// Checks `QᵀQ = I` to `1e-10`.
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.ncols() == 0 || q.ncols() > q.nrows() {
            return Err(Error::InvalidInput(format!(
                "projection needs 1..=n columns, got {} for n = {}",
                q.ncols(),
                q.nrows()
            )));
        }
        let gram = q.transpose() * &q;
        let dev = (gram - DMatrix::identity(q.ncols(), q.ncols())).amax();
        if dev > 1e-10 {
            return Err(Error::NotOrthonormal { deviation: dev });
        }
        Ok(Projection { q })
    }

    /// Rank-one projection onto `v / |v|`.
    pub fn rank_one(v: &[f64]) -> Result<Self> {
        let nv = norm(v);
        if !(nv > 0.0) {
            return Err(Error::InvalidInput(
                "cannot project onto the zero vector".into(),
            ));
        }
        Projection::new(DMatrix::from_column_slice(v.len(), 1, v).scale(1.0 / nv))
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn column(&self, c: usize) -> Vec<f64> {
        self.q.column(c).iter().copied().collect()
    }

    /// `x ← P⊥ x`.
    fn project_out(&self, x: &mut [f64]) {
        for c in 0..self.rank() {
            let col = self.q.column(c);
            let a: f64 = col.iter().zip(x.iter()).map(|(q, v)| q * v).sum();
            for (xi, qi) in x.iter_mut().zip(col.iter()) {
                *xi -= a * qi;
            }
        }
    }
}

/// A Feshbach map that can be evaluated at spectral parameters below the
/// spectrum of `H⊥`.
pub trait FeshbachMap {
    fn rank(&self) -> usize;
    /// `F_P(λ)` as a `k × k` matrix.
    fn value(&self, lambda: f64) -> Result<DMatrix<f64>>;
    /// `inf σ(H⊥)` on `Ran P⊥`.
    fn perp_bottom(&self) -> f64;
    /// `min eig PHP`.
    fn php_min(&self) -> f64;
}

fn min_eig(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Relative margin below `inf σ(H⊥)` inside which the resolvent is treated as singular.
const SINGULAR_MARGIN: f64 = 1e-12;

/// Dense Feshbach map with `H⊥` and the coupling precomputed.
pub struct DenseFeshbach {
    perp: DMatrix<f64>,
    p: DMatrix<f64>,
    php: DMatrix<f64>,
    coupling: DMatrix<f64>,
    mu_perp: f64,
    scale: f64,
}

impl DenseFeshbach {
    pub fn new(h: &DMatrix<f64>, proj: &Projection) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || proj.dim() != n {
            return Err(Error::InvalidInput(
                "dimension mismatch between H and P".into(),
            ));
        }
        let q = proj.basis();
        let p = q * q.transpose();
        let pperp = DMatrix::identity(n, n) - &p;
        let perp = &pperp * h * &pperp;
        let php = q.transpose() * h * q;
        let coupling = &pperp * h * q;
        let scale = h.norm_bound().max(1.0);
        // Shift Ran P far above the spectrum so the lowest eigenvalue belongs to Ran P⊥.
        let mu_perp = min_eig(&perp + &p * (4.0 * scale));
        Ok(DenseFeshbach {
            perp,
            p,
            php,
            coupling,
            mu_perp,
            scale,
        })
    }
}

impl FeshbachMap for DenseFeshbach {
    fn rank(&self) -> usize {
        self.php.nrows()
    }

    fn value(&self, lambda: f64) -> Result<DMatrix<f64>> {
        if lambda >= self.mu_perp - SINGULAR_MARGIN * self.scale {
            return Err(Error::SingularResolvent(format!(
                "λ = {lambda} is not below inf σ(H⊥) = {}",
                self.mu_perp
            )));
        }
        let n = self.perp.nrows();
        let shifted = &self.perp - (DMatrix::identity(n, n) - &self.p) * lambda + &self.p;
        let y = shifted
            .lu()
            .solve(&self.coupling)
            .ok_or_else(|| Error::SingularResolvent("LU factorization failed".into()))?;
        let f = &self.php - self.coupling.transpose() * y;
        Ok((&f + f.transpose()) * 0.5)
    }

    fn perp_bottom(&self) -> f64 {
        self.mu_perp
    }

    fn php_min(&self) -> f64 {
        min_eig(self.php.clone())
    }
}

/// `F_P(λ)` for a dense symmetric `H`.
pub fn feshbach_value(h: &DMatrix<f64>, proj: &Projection, lambda: f64) -> Result<DMatrix<f64>> {
    DenseFeshbach::new(h, proj)?.value(lambda)
}

/// Feshbach map of a sparse operator; resolvents are applied by conjugate
/// gradients on `P⊥(H - λ)P⊥ + P`.
pub struct SparseFeshbach<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    proj: Projection,
    hq: Vec<Vec<f64>>,
    coupling: Vec<Vec<f64>>,
    php: DMatrix<f64>,
    mu_perp: f64,
    scale: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

struct Shifted<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    proj: &'a Projection,
    shift: f64,
    lambda: f64,
}

impl<A: LinearOperator + ?Sized> LinearOperator for Shifted<'_, A> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    /// `y = P⊥(H - λ)P⊥ x + shift · P x`
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut xp = x.to_vec();
        self.proj.project_out(&mut xp);
        self.op.apply(&xp, y);
        axpy(-self.lambda, &xp, y);
        self.proj.project_out(y);
        for (yi, (xi, xpi)) in y.iter_mut().zip(x.iter().zip(&xp)) {
            *yi += self.shift * (xi - xpi);
        }
    }

    fn norm_bound(&self) -> f64 {
        self.op.norm_bound() + self.lambda.abs() + self.shift
    }
}

impl<'a, A: LinearOperator + ?Sized> SparseFeshbach<'a, A> {
    /// Precomputes `HQ`, `P⊥HQ` and `inf σ(H⊥)` (by a Lanczos solve of
    /// `H⊥` with `Ran P` shifted out of the way).
    pub fn new(op: &'a A, proj: Projection, eig: &EigOptions) -> Result<Self> {
        let n = op.dim();
        if proj.dim() != n {
            return Err(Error::InvalidInput(
                "dimension mismatch between H and P".into(),
            ));
        }
        let k = proj.rank();
        let mut hq = Vec::with_capacity(k);
        let mut coupling = Vec::with_capacity(k);
        for c in 0..k {
            let mut y = vec![0.0; n];
            op.apply(&proj.column(c), &mut y);
            let mut yp = y.clone();
            proj.project_out(&mut yp);
            hq.push(y);
            coupling.push(yp);
        }
        let php = DMatrix::from_fn(k, k, |a, b| dot(&proj.column(a), &hq[b]));
        let php = (&php + php.transpose()) * 0.5;
        let scale = op.norm_bound().max(1.0);
        let mu_perp = {
            let shifted = Shifted {
                op,
                proj: &proj,
                shift: 4.0 * scale,
                lambda: 0.0,
            };
            lowest_eigenpair(&shifted, eig)?.eigenvalue
        };
        Ok(SparseFeshbach {
            op,
            proj,
            hq,
            coupling,
            php,
            mu_perp,
            scale,
            cg_tol: 1e-13,
            cg_max_iter: 20_000,
        })
    }

    pub fn projection(&self) -> &Projection {
        &self.proj
    }

    /// `H Q`, one column per basis vector.
    pub fn hq(&self) -> &[Vec<f64>] {
        &self.hq
    }
}

impl<A: LinearOperator + ?Sized> FeshbachMap for SparseFeshbach<'_, A> {
    fn rank(&self) -> usize {
        self.proj.rank()
    }

    fn value(&self, lambda: f64) -> Result<DMatrix<f64>> {
        if lambda >= self.mu_perp - SINGULAR_MARGIN * self.scale {
            return Err(Error::SingularResolvent(format!(
                "λ = {lambda} is not below inf σ(H⊥) = {}",
                self.mu_perp
            )));
        }
        let shifted = Shifted {
            op: self.op,
            proj: &self.proj,
            shift: 1.0,
            lambda,
        };
        let k = self.rank();
        let ys: Vec<Vec<f64>> = self
            .coupling
            .iter()
            .map(|b| conjugate_gradient(&shifted, b, self.cg_tol, self.cg_max_iter))
            .collect::<Result<_>>()?;
        let f = DMatrix::from_fn(k, k, |a, b| {
            self.php[(a, b)] - dot(&self.coupling[a], &ys[b])
        });
        Ok((&f + f.transpose()) * 0.5)
    }

    fn perp_bottom(&self) -> f64 {
        self.mu_perp
    }

    fn php_min(&self) -> f64 {
        min_eig(self.php.clone())
    }
}

/// Solves `A x = b` for symmetric positive definite `A`, stopping at
/// `|r| <= tol |b|`.
pub fn conjugate_gradient<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bn {
            return Ok(x);
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularResolvent(
                "conjugate gradients met a non-positive curvature direction".into(),
            ));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: rr.sqrt() / bn,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPoint {
    pub lambda: f64,
    /// `min eig F_P(λ)` at the returned `λ`.
    pub g: f64,
    /// Evaluations of `F_P`.
    pub evaluations: usize,
    pub bracket: (f64, f64),
}

/// `min eig F_P(λ)`.
pub fn feshbach_min_eig<M: FeshbachMap + ?Sized>(map: &M, lambda: f64) -> Result<f64> {
    Ok(min_eig(map.value(lambda)?))
}

/// Default bracket: the upper end is `min(min eig PHP, inf σ(H⊥))` pulled
/// slightly inside the resolvent set; the lower end steps down until
/// `g(λ) - λ > 0`.
pub fn feshbach_bracket<M: FeshbachMap + ?Sized>(map: &M) -> Result<(f64, f64)> {
    let mu = map.perp_bottom();
    let hi = map.php_min().min(mu - 1e-9 * (1.0 + mu.abs()));
    let mut step = 1.0f64.max(0.1 * hi.abs());
    let mut lo = hi - step;
    for _ in 0..60 {
        if feshbach_min_eig(map, lo)? - lo > 0.0 {
            return Ok((lo, hi));
        }
        step *= 2.0;
        lo = hi - step;
    }
    Err(Error::NoSignChange { lo, hi })
}

/// Fixed point of `λ ↦ min eig F_P(λ)` inside `bracket`.
///
/// `f(λ) = g(λ) - λ` is strictly decreasing below `inf σ(H⊥)`, so the root is
/// unique. The upper end is evaluated first (an exact projection is resolved
/// there in one step); then the bracket is shrunk by bisection interleaved
/// with Illinois false-position steps, never leaving the bracket.
pub fn feshbach_fixed_point<M: FeshbachMap + ?Sized>(
    map: &M,
    bracket: Option<(f64, f64)>,
    tol: f64,
) -> Result<FixedPoint> {
    let mut evaluations = 0usize;
    let mut eval = |x: f64| -> Result<f64> {
        evaluations += 1;
        Ok(feshbach_min_eig(map, x)? - x)
    };
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => feshbach_bracket(map)?,
    };
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("empty bracket [{lo}, {hi}]")));
    }
    let original = (lo, hi);
    let mut f_hi = eval(hi)?;
    if f_hi.abs() <= tol {
        return Ok(FixedPoint {
            lambda: hi,
            g: hi + f_hi,
            evaluations,
            bracket: original,
        });
    }
    let mut f_lo = eval(lo)?;
    if f_lo.abs() <= tol {
        return Ok(FixedPoint {
            lambda: lo,
            g: lo + f_lo,
            evaluations,
            bracket: original,
        });
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut side = 0i8;
    let mut x = 0.5 * (lo + hi);
    let mut fx = f_hi;
    for it in 0..400 {
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        x = if it % 3 == 2 {
            0.5 * (lo + hi)
        } else {
            let s = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if s > lo && s < hi {
                s
            } else {
                0.5 * (lo + hi)
            }
        };
        fx = eval(x)?;
        if fx == 0.0 {
            break;
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(FixedPoint {
        lambda: x,
        g: x + fx,
        evaluations,
        bracket: original,
    })
}

/// One random trial comparing the Feshbach fixed point with a dense solve.
#[derive(Debug, Clone, Serialize)]
pub struct FeshbachTrial {
    pub trial: usize,
    pub fixed_point: f64,
    pub direct: f64,
    pub error: f64,
    pub evaluations: usize,
    /// `min eig F_P` was non-increasing on every sampled pair.
    pub monotone: bool,
}

/// Random symmetric `n×n` matrices with `P` the rank-one projection onto the
/// ground vector plus noise of relative size `perturbation`.
pub fn feshbach_trials(
    trials: usize,
    n: usize,
    seed: u64,
    perturbation: f64,
) -> Result<Vec<FeshbachTrial>> {
    use rand::{Rng, SeedableRng};
    if n < 2 {
        return Err(Error::InvalidInput("Feshbach trials need n >= 2".into()));
    }
    (0..trials)
        .map(|trial| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let h = (&a + a.transpose()) * 0.5;
            let eig = SymmetricEigen::new(h.clone());
            let i = eig.eigenvalues.imin();
            let direct = eig.eigenvalues[i];
            let scale = perturbation / (n as f64).sqrt();
            let v: Vec<f64> = eig
                .eigenvectors
                .column(i)
                .iter()
                .map(|x| x + scale * rng.random_range(-1.0..1.0))
                .collect();
            let map = DenseFeshbach::new(&h, &Projection::rank_one(&v)?)?;
            let fp = feshbach_fixed_point(&map, None, 1e-13)?;
            let (lo, hi) = fp.bracket;
            let mut monotone = true;
            for _ in 0..10 {
                let a = rng.random_range(lo..hi);
                let b = rng.random_range(lo..hi);
                let (l1, l2) = if a < b { (a, b) } else { (b, a) };
                monotone &= feshbach_min_eig(&map, l1)? >= feshbach_min_eig(&map, l2)? - 1e-12;
            }
            Ok(FeshbachTrial {
                trial,
                fixed_point: fp.lambda,
                direct,
                error: (fp.lambda - direct).abs(),
                evaluations: fp.evaluations,
                monotone,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn random_trials_match_dense() {
        let t = feshbach_trials(5, 20, 11, 0.1).unwrap();
        assert!(t.iter().all(|t| t.error < 1e-10 && t.monotone), "{t:?}");
    }

    #[test]
    fn two_by_two_schur_complement() {
        let (a, b, c, lambda) = (1.0, 0.5, 3.0, -0.2);
        let h = DMatrix::from_row_slice(2, 2, &[a, b, b, c]);
        let p = Projection::rank_one(&[1.0, 0.0]).unwrap();
        let f = feshbach_value(&h, &p, lambda).unwrap();
        assert!((f[(0, 0)] - (a - b * b / (c - lambda))).abs() < 1e-15);
    }

    #[test]
    fn far_below_spectrum_approaches_php() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_symmetric(&mut rng, 20);
        let v: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = Projection::rank_one(&v).unwrap();
        let map = DenseFeshbach::new(&h, &p).unwrap();
        let lambda = -1e8;
        let f = map.value(lambda).unwrap()[(0, 0)];
        assert!((f - map.php_min()).abs() < 1e-6);
    }

    #[test]
    fn exact_ground_projector_needs_one_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_symmetric(&mut rng, 30);
        let eig = SymmetricEigen::new(h.clone());
        let i = eig.eigenvalues.imin();
        let e = eig.eigenvalues[i];
        let ground: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let map = DenseFeshbach::new(&h, &Projection::rank_one(&ground).unwrap()).unwrap();
        let fp = feshbach_fixed_point(&map, None, 1e-12).unwrap();
        assert_eq!(fp.evaluations, 1);
        assert!((fp.lambda - e).abs() < 1e-12);
        // F_P(E) has eigenvalue E
        assert!((feshbach_min_eig(&map, e - 1e-14).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn rank_two_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_symmetric(&mut rng, 25);
        let eig = SymmetricEigen::new(h.clone());
        let e = eig.eigenvalues.min();
        let i = eig.eigenvalues.imin();
        let mut q = DMatrix::from_fn(25, 2, |r, c| {
            if c == 0 {
                eig.eigenvectors[(r, i)] + 0.05 * rng.random_range(-1.0..1.0)
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        q = q.qr().q();
        let map = DenseFeshbach::new(&h, &Projection::new(q).unwrap()).unwrap();
        let fp = feshbach_fixed_point(&map, None, 1e-13).unwrap();
        assert!((fp.lambda - e).abs() < 1e-10);
    }

    #[test]
    fn singular_resolvent_reported() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 3.0]);
        let p = Projection::rank_one(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            feshbach_value(&h, &p, 3.0),
            Err(Error::SingularResolvent(_))
        ));
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let q = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            Projection::new(q),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn no_sign_change_reported() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 3.0]);
        let map = DenseFeshbach::new(&h, &Projection::rank_one(&[1.0, 0.0]).unwrap()).unwrap();
        assert!(matches!(
            feshbach_fixed_point(&map, Some((-10.0, -5.0)), 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn sparse_map_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_symmetric(&mut rng, 40) + DMatrix::identity(40, 40) * 3.0;
        let v: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = Projection::rank_one(&v).unwrap();
        let dense = DenseFeshbach::new(&h, &p).unwrap();
        let sparse = SparseFeshbach::new(&h, p, &EigOptions::default()).unwrap();
        assert!((dense.perp_bottom() - sparse.perp_bottom()).abs() < 1e-9);
        let lambda = dense.perp_bottom() - 0.5;
        let a = dense.value(lambda).unwrap()[(0, 0)];
        let b = sparse.value(lambda).unwrap()[(0, 0)];
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

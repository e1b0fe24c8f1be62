//! Sweeps of the interaction energy `W(r)`, power-law fits and the
//! diagnostics built on them.

pub mod io;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{
    assemble_hydrogen_plate, lowest_eigenpair, EigOptions, GridCyl, GridSpec,
};
use crate::error::{Error, Result};
use crate::model::Vec3;
use crate::multipole::{compute_cv, GroundBasis};
use crate::spectra::hvz_gap;

/// Default fit window.
pub const FIT_WINDOW: (f64, f64) = (10.0, 30.0);
/// Tolerance of the residual orthogonality check.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One plate distance of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    /// `E(r)`, lowest eigenvalue with the image terms.
    pub energy: Option<f64>,
    /// Free-hydrogen eigenvalue on the identical grid.
    pub reference: Option<f64>,
    /// `W(r) = E(r) - reference`.
    pub w: Option<f64>,
    /// `E(r)` minus the bottom of the essential spectrum.
    pub gap: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub n_xi: usize,
    pub n_rho: usize,
    pub h_xi: f64,
    pub h_rho: f64,
    pub status: RowStatus,
    pub message: String,
}

impl SweepRow {
    fn failed(r: f64, grid: Option<&GridCyl>, err: &Error) -> Self {
        SweepRow {
            r,
            energy: None,
            reference: None,
            w: None,
            gap: None,
            iterations: 0,
            residual: f64::NAN,
            n_xi: grid.map_or(0, GridCyl::n_xi),
            n_rho: grid.map_or(0, GridCyl::n_rho),
            h_xi: grid.map_or(f64::NAN, |g| g.h_xi),
            h_rho: grid.map_or(f64::NAN, |g| g.h_rho),
            status: RowStatus::Failed,
            message: err.to_string(),
        }
    }
}

/// `W(r)` on a fixed grid specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub m: f64,
    pub grid: GridSpec,
    pub tol: f64,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `(r, W)` of the rows that converged.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|row| row.w.map(|w| (row.r, w)))
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status == RowStatus::Failed)
            .count()
    }
}

fn check_r_values(r_values: &[f64]) -> Result<()> {
    if r_values.is_empty() {
        return Err(Error::InvalidInput("empty list of plate distances".into()));
    }
    for r in r_values {
        if !(*r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "plate distance must be positive, got {r}"
            )));
        }
    }
    if r_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "plate distances must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `E(r)` and the same-grid reference for one plate distance.
fn solve_row(r: f64, m: f64, spec: &GridSpec, opts: &EigOptions) -> SweepRow {
    match GridCyl::new(spec, r) {
        Ok(grid) => {
            try_row(&grid, r, m, opts).unwrap_or_else(|e| SweepRow::failed(r, Some(&grid), &e))
        }
        Err(e) => SweepRow::failed(r, None, &e),
    }
}

fn try_row(grid: &GridCyl, r: f64, m: f64, opts: &EigOptions) -> Result<SweepRow> {
    let free = lowest_eigenpair(&assemble_hydrogen_plate(grid, r, 0.0)?, opts)?;
    let warm = EigOptions {
        start: Some(free.vector.clone()),
        ..opts.clone()
    };
    let full = lowest_eigenpair(&assemble_hydrogen_plate(grid, r, m)?, &warm)?;
    let gap = hvz_gap(full.eigenvalue, r)?.gap;
    Ok(SweepRow {
        r,
        energy: Some(full.eigenvalue),
        reference: Some(free.eigenvalue),
        w: Some(full.eigenvalue - free.eigenvalue),
        gap: Some(gap),
        iterations: free.iterations + full.iterations,
        residual: free.residual.max(full.residual),
        n_xi: grid.n_xi(),
        n_rho: grid.n_rho(),
        h_xi: grid.h_xi,
        h_rho: grid.h_rho,
        status: RowStatus::Ok,
        message: String::new(),
    })
}

/// Single hydrogen/plate solve at distance `r`, propagating solver errors
/// instead of recording them in the row.
pub fn solve_hydrogen(r: f64, m: f64, spec: &GridSpec, opts: &EigOptions) -> Result<SweepRow> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidInput(format!(
            "reflection coefficient must lie in [0, 1], got {m}"
        )));
    }
    try_row(&GridCyl::new(spec, r)?, r, m, opts)
}

/// Solves the hydrogen/plate problem at every `r` (plate normal `e1`,
/// reflection coefficient `m`), with `jobs` worker threads.
///
/// A row whose solve fails is kept with status `Failed` and its message.
pub fn sweep_w(
    r_values: &[f64],
    m: f64,
    spec: &GridSpec,
    opts: &EigOptions,
    jobs: usize,
) -> Result<SweepTable> {
    check_r_values(r_values)?;
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidInput(format!(
            "reflection coefficient must lie in [0, 1], got {m}"
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        r_values
            .par_iter()
            .map(|&r| solve_row(r, m, spec, opts))
            .collect::<Vec<_>>()
    });
    Ok(SweepTable {
        m,
        grid: *spec,
        tol: opts.tol,
        seed: opts.seed,
        rows,
    })
}

/// Weighted least-squares fit `W ≈ Σ_k c_k r^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponents: Vec<i32>,
    pub coefficients: Vec<f64>,
    /// `W_i - fit(r_i)`.
    pub residuals: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    /// 2-norm condition number of the column-scaled weighted design matrix.
    pub condition: f64,
    /// `max_k |a_k · res| / (‖a_k‖ ‖b‖)` in the weighted problem.
    pub orthogonality: f64,
}

impl FitResult {
    pub fn coefficient(&self, exponent: i32) -> Option<f64> {
        self.exponents
            .iter()
            .position(|e| *e == exponent)
            .map(|k| self.coefficients[k])
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(k, c)| c * r.powi(-k))
            .sum()
    }
}

/// Minimizes `Σ r_i^6 (W_i - Σ_k c_k r_i^{-k})²` over the points.
pub fn fit_power_law(points: &[(f64, f64)], exponents: &[i32]) -> Result<FitResult> {
    let n = points.len();
    let p = exponents.len();
    if p == 0 || n < p {
        return Err(Error::InvalidInput(format!(
            "{n} points cannot determine {p} coefficients"
        )));
    }
    let mut sorted = exponents.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != p || sorted[0] <= 0 {
        return Err(Error::InvalidInput(
            "exponents must be distinct positive integers".into(),
        ));
    }
    if points
        .iter()
        .any(|(r, w)| !(*r > 0.0) || !w.is_finite() || !r.is_finite())
    {
        return Err(Error::InvalidInput(
            "fit points need r > 0 and finite W".into(),
        ));
    }
    // rows scaled by sqrt(r^6) = r^3
    let a = DMatrix::from_fn(n, p, |i, k| points[i].0.powi(3 - exponents[k]));
    let b = DVector::from_fn(n, |i, _| points[i].0.powi(3) * points[i].1);
    let col_norms: Vec<f64> = (0..p).map(|k| a.column(k).norm()).collect();
    let mut scaled = a.clone();
    for (k, c) in col_norms.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / c);
    }
    let sv = scaled.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient(format!(
            "design matrix has condition number {condition:e}"
        )));
    }
    let qr = scaled.clone().qr();
    let qtb = qr.q().transpose() * &b;
    let y = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
    let coefficients: Vec<f64> = (0..p).map(|k| y[k] / col_norms[k]).collect();
    let weighted_res = &b - &scaled * &y;
    let bnorm = b.norm().max(f64::MIN_POSITIVE);
    let orthogonality = (0..p)
        .map(|k| scaled.column(k).dot(&weighted_res).abs() / bnorm)
        .fold(0.0, f64::max);
    let residuals = points
        .iter()
        .enumerate()
        .map(|(i, (r, _))| weighted_res[i] / r.powi(3))
        .collect();
    let (r_min, r_max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (r, _)| {
            (lo.min(*r), hi.max(*r))
        });
    Ok(FitResult {
        exponents: exponents.to_vec(),
        coefficients,
        residuals,
        r_min,
        r_max,
        condition,
        orthogonality,
    })
}

/// Points with `r` inside `[lo, hi]`.
pub fn window(points: &[(f64, f64)], (lo, hi): (f64, f64)) -> Vec<(f64, f64)> {
    points
        .iter()
        .copied()
        .filter(|(r, _)| *r >= lo && *r <= hi)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub r: f64,
    /// `R = W + 1/r³ + 18/r⁵`.
    pub residual: f64,
    pub scaled: f64,
    /// Discretization-error budget for `W` at this row.
    pub budget: f64,
    /// `R <= budget`: the upper side of the bracket holds within the budget.
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub rows: Vec<BracketRow>,
    /// `sup r⁶ |R|`, an empirical lower-bracket constant.
    pub d3: f64,
    pub passed: bool,
}

/// Residual of `W` against `-1/r³ - 18/r⁵`, checked against per-row budgets
/// (`budgets[i]` for `points[i]`; zero when absent).
pub fn verify_theorem_bracket(
    points: &[(f64, f64)],
    budgets: Option<&[f64]>,
) -> Result<BracketReport> {
    if let Some(b) = budgets {
        if b.len() != points.len() {
            return Err(Error::InvalidInput("one budget per row required".into()));
        }
    }
    let rows: Vec<BracketRow> = points
        .iter()
        .enumerate()
        .map(|(i, &(r, w))| {
            let residual = w + r.powi(-3) + 18.0 * r.powi(-5);
            let budget = budgets.map_or(0.0, |b| b[i]);
            BracketRow {
                r,
                residual,
                scaled: r.powi(6) * residual,
                budget,
                within: residual <= budget + 1e-15 * r.powi(-3),
            }
        })
        .collect();
    let d3 = rows.iter().map(|r| r.scaled.abs()).fold(0.0, f64::max);
    let passed = rows.iter().all(|r| r.within);
    Ok(BracketReport { rows, d3, passed })
}

/// Same-grid `W` at a base and a refined resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridError {
    pub r: f64,
    pub w_base: f64,
    pub w_refined: f64,
    /// Relative change `|W_refined - W_base| / |W_base|`.
    pub relative_change: f64,
    /// Error of `W_base` assuming second-order convergence: `4/3 |ΔW|`.
    pub estimate: f64,
}

impl GridError {
    /// Budget for a row with interaction `w`, scaling the relative error.
    pub fn budget_for(&self, w: f64) -> f64 {
        self.estimate / self.w_base.abs() * w.abs()
    }
}

/// Compares `W(r)` on `spec` with the grid refined by `factor` in both axes.
pub fn grid_error_estimate(
    r: f64,
    m: f64,
    spec: &GridSpec,
    factor: f64,
    opts: &EigOptions,
) -> Result<GridError> {
    let solve = |s: &GridSpec| -> Result<f64> {
        let row = try_row(&GridCyl::new(s, r)?, r, m, opts)?;
        Ok(row.w.unwrap_or(f64::NAN))
    };
    let w_base = solve(spec)?;
    let w_refined = solve(&spec.refined(factor))?;
    let diff = (w_refined - w_base).abs();
    let order_gain = factor * factor;
    Ok(GridError {
        r,
        w_base,
        w_refined,
        relative_change: diff / w_base.abs(),
        estimate: diff * order_gain / (order_gain - 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DielectricReport {
    pub m: f64,
    /// `(r, W_m / W_1)`.
    pub ratios: Vec<(f64, f64)>,
    /// `|ratio - m|` shrinks along increasing `r`.
    pub monotone_toward_m: bool,
    /// `0 < ratio < 1` in every row.
    pub bounded: bool,
}

pub fn dielectric_scaling(table_m: &SweepTable, table_1: &SweepTable) -> Result<DielectricReport> {
    let (pm, p1) = (table_m.points(), table_1.points());
    if pm.len() != p1.len()
        || pm
            .iter()
            .zip(&p1)
            .any(|(a, b)| (a.0 - b.0).abs() > 1e-12 * a.0)
    {
        return Err(Error::InvalidInput(
            "tables do not share the same solved r values".into(),
        ));
    }
    if table_m.grid != table_1.grid {
        return Err(Error::InvalidInput("tables use different grids".into()));
    }
    let m = table_m.m;
    let ratios: Vec<(f64, f64)> = pm.iter().zip(&p1).map(|(a, b)| (a.0, a.1 / b.1)).collect();
    let monotone_toward_m = ratios
        .windows(2)
        .all(|w| (w[1].1 - m).abs() <= (w[0].1 - m).abs());
    let bounded = ratios.iter().all(|(_, q)| *q > 0.0 && *q < 1.0);
    Ok(DielectricReport {
        m,
        ratios,
        monotone_toward_m,
        bounded,
    })
}

/// Leading-order prediction `-C(v)/r³` for each `r`.
pub fn predicted_w_molecule(
    basis: &GroundBasis,
    v: Vec3,
    r_values: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_r_values(r_values)?;
    let c = compute_cv(basis, v)?;
    Ok(r_values.iter().map(|r| (*r, -c / r.powi(3))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (8..=40)
            .step_by(2)
            .map(|r| (r as f64, f(r as f64)))
            .collect()
    }

    #[test]
    fn exact_recovery() {
        let pts = synthetic(|r| -1.0 / r.powi(3) - 18.0 / r.powi(5));
        let fit = fit_power_law(&pts, &[3, 5]).unwrap();
        assert!((fit.coefficient(3).unwrap() + 1.0).abs() < 1e-12);
        assert!((fit.coefficient(5).unwrap() + 18.0).abs() < 1e-12);
        assert!(fit.orthogonality < ORTHOGONALITY_TOL);
        let fit = fit_power_law(&synthetic(|r| -1.0 / r.powi(3)), &[3, 5]).unwrap();
        assert!((fit.coefficient(3).unwrap() + 1.0).abs() < 1e-12);
        assert!(fit.coefficient(5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fit_rejections() {
        let pts = synthetic(|r| 1.0 / r);
        assert!(fit_power_law(&pts[..1], &[3, 5]).is_err());
        assert!(fit_power_law(&pts, &[3, 3]).is_err());
        assert!(fit_power_law(&pts, &[0, 3]).is_err());
        let same: Vec<(f64, f64)> = vec![(10.0, 1.0); 4];
        assert!(matches!(
            fit_power_law(&same, &[3, 5]),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn bracket_constants() {
        let rep = verify_theorem_bracket(
            &synthetic(|r| -1.0 / r.powi(3) - 18.0 / r.powi(5) - 5.0 / r.powi(6)),
            None,
        )
        .unwrap();
        assert!((rep.d3 - 5.0).abs() < 1e-9);
        assert!(rep.passed);
        let rep = verify_theorem_bracket(&synthetic(|r| -1.0 / r.powi(3) - 18.0 / r.powi(5)), None)
            .unwrap();
        assert!(rep.d3 < 1e-9);
        let rep = verify_theorem_bracket(&synthetic(|r| -0.5 / r.powi(3)), None).unwrap();
        assert!(!rep.passed);
    }

    fn table(m: f64, pts: &[(f64, f64)]) -> SweepTable {
        SweepTable {
            m,
            grid: GridSpec::PRODUCTION,
            tol: 1e-10,
            seed: 1,
            rows: pts
                .iter()
                .map(|&(r, w)| SweepRow {
                    r,
                    energy: Some(-0.25 + w),
                    reference: Some(-0.25),
                    w: Some(w),
                    gap: None,
                    iterations: 1,
                    residual: 0.0,
                    n_xi: 1,
                    n_rho: 1,
                    h_xi: 0.2,
                    h_rho: 0.2,
                    status: RowStatus::Ok,
                    message: String::new(),
                })
                .collect(),
        }
    }

    #[test]
    fn dielectric_ratios() {
        let w1 = synthetic(|r| -1.0 / r.powi(3) - 18.0 / r.powi(5));
        let rep = dielectric_scaling(&table(1.0, &w1), &table(1.0, &w1)).unwrap();
        assert!(rep.ratios.iter().all(|(_, q)| *q == 1.0));
        let half: Vec<(f64, f64)> = w1.iter().map(|(r, w)| (*r, 0.5 * w)).collect();
        let rep = dielectric_scaling(&table(0.5, &half), &table(1.0, &w1)).unwrap();
        assert!(rep.ratios.iter().all(|(_, q)| (*q - 0.5).abs() < 1e-15));
        assert!(rep.bounded && rep.monotone_toward_m);
        assert!(dielectric_scaling(&table(0.5, &half[1..]), &table(1.0, &w1)).is_err());
    }

    #[test]
    fn molecule_prediction() {
        let b = GroundBasis::hydrogen().unwrap();
        let t = predicted_w_molecule(&b, Vec3::E3, &[5.0, 10.0]).unwrap();
        assert!((t[0].1 + 1.0 / 125.0).abs() < 1e-12);
        assert!((t[0].1 / t[1].1 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_validation() {
        let o = EigOptions::default();
        let s = GridSpec::PRODUCTION;
        assert!(sweep_w(&[], 1.0, &s, &o, 1).is_err());
        assert!(sweep_w(&[10.0, 10.0], 1.0, &s, &o, 1).is_err());
        assert!(sweep_w(&[-1.0], 1.0, &s, &o, 1).is_err());
        assert!(sweep_w(&[10.0], 1.5, &s, &o, 1).is_err());
    }

    #[test]
    fn small_sweep_without_images_is_zero() {
        let spec = GridSpec::new(0.5, 0.5, 15.0, 15.0).unwrap();
        let t = sweep_w(&[4.0, 6.0], 0.0, &spec, &EigOptions::default(), 2).unwrap();
        assert_eq!(t.failures(), 0);
        for (_, w) in t.points() {
            assert!(w.abs() < 1e-10);
        }
        let t = sweep_w(&[6.0, 8.0], 1.0, &spec, &EigOptions::default(), 1).unwrap();
        let pts = t.points();
        assert!(pts.iter().all(|(_, w)| *w < 0.0));
        assert!(pts[0].1 < pts[1].1);
    }

    proptest! {
        #[test]
        fn residuals_orthogonal(noise in proptest::collection::vec(-1e-6f64..1e-6, 17)) {
            let pts: Vec<(f64, f64)> = synthetic(|r| -1.0 / r.powi(3))
                .iter()
                .zip(&noise)
                .map(|((r, w), e)| (*r, w + e / r.powi(3)))
                .collect();
            let fit = fit_power_law(&pts, &[3, 5]).unwrap();
            prop_assert!(fit.orthogonality < ORTHOGONALITY_TOL);
        }
    }
}

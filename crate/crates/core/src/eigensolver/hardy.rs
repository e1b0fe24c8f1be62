//! Discrete Hardy inequality `∫ u²/(4y²) dy <= ∫ u'² dy` for functions
//! vanishing at `y = 0`.
//!
//! On a uniform grid `y_n = n h` with `u_0 = 0` the sums
//! `h Σ u_n²/(4 y_n²)` and `h Σ ((u_n - u_{n-1})/h)²` satisfy the inequality
//! exactly, so a violation always signals a bug rather than discretization
//! error.

use serde::Serialize;

use super::grid::GridCyl;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyCheck {
    /// `∫ u²/(4y²)`
    pub lhs: f64,
    /// `∫ u'²`
    pub rhs: f64,
}

impl HardyCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// `u[n]` holds the value at `y = (n + 1) h`; the boundary value at `y = 0`
/// is zero and not stored. The right-hand side stops at the last stored node
/// (no condition is imposed at the far end).
pub fn hardy_check(u: &[f64], h: f64) -> Result<HardyCheck> {
    if !(h > 0.0) || u.is_empty() {
        return Err(Error::InvalidInput(
            "Hardy check needs h > 0 and a non-empty grid function".into(),
        ));
    }
    let (lhs, rhs) = line_sums(u.iter().copied(), h);
    Ok(HardyCheck { lhs, rhs })
}

fn line_sums(u: impl Iterator<Item = f64>, h: f64) -> (f64, f64) {
    let (mut lhs, mut rhs, mut prev) = (0.0, 0.0, 0.0);
    for (n, un) in u.enumerate() {
        let y = (n as f64 + 1.0) * h;
        lhs += h * un * un / (4.0 * y * y);
        rhs += (un - prev) * (un - prev) / h;
        prev = un;
    }
    (lhs, rhs)
}

/// Half-space form `∫ |ψ|²/(4 (ξ + r)²) <= ∫ |∂_ξ ψ|²` for grid values `ψ` on
/// a cylindrical grid, applied line by line along the plate normal with the
/// cell weights `2π ρ h_ρ`.
pub fn hardy_check_cyl(grid: &GridCyl, psi: &[f64]) -> Result<HardyCheck> {
    if psi.len() != grid.len() {
        return Err(Error::InvalidInput("grid function length mismatch".into()));
    }
    let nr = grid.n_rho();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (j, rho) in grid.rho.iter().enumerate() {
        let w = 2.0 * std::f64::consts::PI * rho * grid.h_rho;
        let line = (0..grid.n_xi()).map(|i| psi[i * nr + j]);
        let (l, r) = line_sums(line, grid.h_xi);
        lhs += w * l;
        rhs += w * r;
    }
    Ok(HardyCheck { lhs, rhs })
}

//! Smooth cut-offs, the IMS partition of unity and the localization identity
//! on grid functions.

use serde::Serialize;

use super::grid::GridCyl;
use super::sparse::{LinearOperator, SparseSymOp};
use crate::model::Vec3;

/// Smooth step `S(t)`: 0 for `t <= 0`, 1 for `t >= 1`, `C^∞` in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// `S'(t)`.
pub fn smooth_step_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let s = smooth_step(t);
        s * (1.0 - s) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
    }
}

/// Transition `lo → hi` of a smooth step in the variable `s`, with derivative.
fn ramp(s: f64, lo: f64, hi: f64) -> (f64, f64) {
    let w = hi - lo;
    let t = (s - lo) / w;
    (smooth_step(t), smooth_step_derivative(t) / w)
}

/// Radial cut-off profile `h(s)`: 1 for `s <= 1/5`, 0 for `s >= 1/4`.
pub fn cutoff_profile(s: f64) -> f64 {
    1.0 - ramp(s, 0.2, 0.25).0
}

/// `h'(s)`.
pub fn cutoff_profile_derivative(s: f64) -> f64 {
    -ramp(s, 0.2, 0.25).1
}

pub const CHI1_START: f64 = 0.25;
pub const CHI_OVERLAP: f64 = 2.0 / 7.0;
pub const CHI2_END: f64 = 1.0 / 3.0;

/// `(χ1, χ2, χ1', χ2')` as functions of `s = |x|/r`.
fn chis(s: f64) -> (f64, f64, f64, f64) {
    let (c1, d1) = ramp(s, CHI1_START, CHI_OVERLAP);
    let (c2r, d2r) = ramp(s, CHI_OVERLAP, CHI2_END);
    (c1, 1.0 - c2r, d1, -d2r)
}

/// `(J1, J2)` and `J1'² + J2'²` as functions of `s = |x|/r`.
fn partition_profile(s: f64) -> (f64, f64, f64) {
    let (c1, c2, d1, d2) = chis(s);
    let n2 = c1 * c1 + c2 * c2;
    let n = n2.sqrt();
    let wronskian = d1 * c2 - c1 * d2;
    (c1 / n, c2 / n, wronskian * wronskian / (n2 * n2))
}

/// IMS partition `J1² + J2² = 1` for a plate at distance `r`: `J2 = 1` for
/// `|x| <= r/4` and `J1 = 1` for `|x| >= r/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionOfUnity {
    pub r: f64,
    /// `sup (|∇J1|² + |∇J2|²) · r²`, independent of `r`.
    pub d: f64,
}

impl PartitionOfUnity {
    pub fn j1(&self, x: Vec3) -> f64 {
        partition_profile(x.norm() / self.r).0
    }

    pub fn j2(&self, x: Vec3) -> f64 {
        partition_profile(x.norm() / self.r).1
    }

    /// `(J1, J2, |∇J1|² + |∇J2|²)` at distance `dist` from the nucleus.
    pub fn at_distance(&self, dist: f64) -> (f64, f64, f64) {
        let (a, b, g) = partition_profile(dist / self.r);
        (a, b, g / (self.r * self.r))
    }

    pub fn gradient_sq(&self, x: Vec3) -> f64 {
        self.at_distance(x.norm()).2
    }
}

/// The partition for distance `r` with its gradient constant `D`.
pub fn build_ims_partition(r: f64) -> PartitionOfUnity {
    PartitionOfUnity {
        r,
        d: gradient_constant(),
    }
}

fn gradient_constant() -> f64 {
    static D: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *D.get_or_init(|| {
        let samples = 20_000;
        let f = |s: f64| partition_profile(s).2;
        let (lo, hi) = (CHI1_START, CHI2_END);
        let step = (hi - lo) / samples as f64;
        let best = (0..=samples)
            .map(|k| lo + k as f64 * step)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap_or(lo);
        // golden-section polish of the sampled maximum
        let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        f(0.5 * (a + b)).max(f(best)) * (1.0 + 1e-9)
    })
}

/// Both sides of `<u,Hu> = Σ_i <J_i u, H J_i u> - <u, (|∇J1|² + |∇J2|²) u>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImsCheck {
    pub lhs: f64,
    pub localized: f64,
    /// `<u, (|∇J1|² + |∇J2|²) u>`.
    pub localization_error: f64,
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Evaluates the IMS identity for a symmetrized grid vector `u` of an
/// operator assembled on `grid`.
pub fn ims_identity_check(
    op: &SparseSymOp,
    grid: &GridCyl,
    part: &PartitionOfUnity,
    u: &[f64],
) -> ImsCheck {
    let n = op.dim();
    let mut j1u = vec![0.0; n];
    let mut j2u = vec![0.0; n];
    let mut loc = 0.0;
    for k in 0..n {
        let (xi, rho) = grid.coords(k);
        let (a, b, g) = part.at_distance((xi * xi + rho * rho).sqrt());
        j1u[k] = a * u[k];
        j2u[k] = b * u[k];
        loc += g * u[k] * u[k];
    }
    let lhs = op.quadratic_form(u);
    let localized = op.quadratic_form(&j1u) + op.quadratic_form(&j2u);
    let rhs = localized - loc;
    ImsCheck {
        lhs,
        localized,
        localization_error: loc,
        rhs,
        discrepancy: lhs - rhs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_limits_and_symmetry() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        for t in [0.1, 0.3, 0.45] {
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn step_derivative_matches_difference_quotient() {
        for t in [0.05, 0.2, 0.5, 0.77, 0.95] {
            let h = 1e-6;
            let fd = (smooth_step(t + h) - smooth_step(t - h)) / (2.0 * h);
            assert!((fd - smooth_step_derivative(t)).abs() < 1e-7);
        }
    }

    #[test]
    fn cutoff_profile_regions() {
        assert_eq!(cutoff_profile(0.0), 1.0);
        assert_eq!(cutoff_profile(0.2), 1.0);
        assert_eq!(cutoff_profile(0.25), 0.0);
        assert!(cutoff_profile(0.225) > 0.0 && cutoff_profile(0.225) < 1.0);
    }

    #[test]
    fn partition_regions() {
        let r = 20.0;
        let p = build_ims_partition(r);
        let near = Vec3::new(r / 5.0, 0.0, 0.0);
        assert_eq!((p.j1(near), p.j2(near)), (0.0, 1.0));
        let far = Vec3::new(0.0, r / 2.0, 0.0);
        assert_eq!((p.j1(far), p.j2(far)), (1.0, 0.0));
        assert_eq!(p.gradient_sq(near), 0.0);
    }

    #[test]
    fn gradient_constant_is_scale_free() {
        let (a, b) = (build_ims_partition(3.0), build_ims_partition(300.0));
        assert_eq!(a.d, b.d);
        assert!(a.d > 0.0 && a.d.is_finite());
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let r = 10.0;
        let p = build_ims_partition(r);
        for d in [2.6, 2.75, 2.9, 3.1, 3.3] {
            let h = 1e-6;
            let (a1, b1, _) = p.at_distance(d + h);
            let (a0, b0, _) = p.at_distance(d - h);
            let fd = ((a1 - a0) / (2.0 * h)).powi(2) + ((b1 - b0) / (2.0 * h)).powi(2);
            let g = p.at_distance(d).2;
            assert!((fd - g).abs() < 1e-6 * (1.0 + g), "{fd} vs {g}");
        }
    }

    fn ims_discrepancy(h: f64) -> ImsCheck {
        use crate::eigensolver::grid::{assemble_hydrogen_plate, GridSpec};
        let r = 40.0;
        let g = GridCyl::new(&GridSpec::new(h, h, 20.0, 20.0).unwrap(), r).unwrap();
        let op = assemble_hydrogen_plate(&g, r, 1.0).unwrap();
        let psi: Vec<f64> = (0..g.len())
            .map(|k| {
                let (x, p) = g.coords(k);
                let d = (x * x + p * p).sqrt();
                (-(d - 11.5f64).powi(2) / 4.0).exp() * (1.0 + 0.3 * (x / 3.0).sin())
            })
            .collect();
        ims_identity_check(&op, &g, &build_ims_partition(r), &op.from_grid_values(&psi))
    }

    #[test]
    fn ims_discrepancy_is_second_order() {
        // Bump centred in the transition layer r/4 < |x| < r/3.
        let (a, b) = (ims_discrepancy(0.4), ims_discrepancy(0.2));
        assert!(b.localization_error > 0.1 * b.lhs.abs());
        let ratio = a.discrepancy / b.discrepancy;
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
        assert!(b.discrepancy.abs() < 0.03 * b.localization_error);
    }

    proptest! {
        #[test]
        fn unit_sum_of_squares(x in -50.0f64..50.0, y in -50.0f64..50.0, z in -50.0f64..50.0, r in 0.5f64..100.0) {
            let p = build_ims_partition(r);
            let v = Vec3::new(x, y, z);
            let (a, b) = (p.j1(v), p.j2(v));
            prop_assert!((a * a + b * b - 1.0).abs() < 1e-10);
            prop_assert!(p.gradient_sq(v) * r * r <= p.d);
        }
    }
}

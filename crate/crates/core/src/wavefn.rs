//! Wavefunctions: analytic hydrogen-type orbitals (optionally cut off near a
//! plate) and grid functions on the cylindrical half-space grid.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::eigensolver::grid::GridCyl;
use crate::eigensolver::ims::{cutoff_profile, cutoff_profile_derivative};
use crate::eigensolver::sparse::SparseSymOp;
use crate::error::{Error, Result};
use crate::model::Vec3;
use crate::quadrature::{default_rules, Checked, GaussLaguerre, GaussLegendre};

/// Tolerance on `‖ψ‖ = 1`.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance of the radial quadratures (doubling estimate).
pub const QUAD_TOL: f64 = 1e-12;

const PANELS: usize = 16;
const ANGULAR: usize = 64;

fn coarse_laguerre() -> &'static GaussLaguerre {
    static RULE: OnceLock<GaussLaguerre> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerre::new(100))
}

/// Fine and coarse `(node, weight)` lists for `∫_0^∞ f(s) ds` with `f`
/// decaying like `e^{-rate s}`, optionally supported in `[0, support]`,
/// with kinks allowed at `breaks`.
fn radial_nodes(rate: f64, support: Option<f64>, breaks: &[f64]) -> [Vec<(f64, f64)>; 2] {
    let (gl, lag) = default_rules();
    let end = support.unwrap_or(f64::INFINITY);
    let mut pts: Vec<f64> = std::iter::once(0.0)
        .chain(breaks.iter().copied().filter(|b| *b > 0.0 && *b < end))
        .collect();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.extend(support);
    let mut out = [Vec::new(), Vec::new()];
    for (set, panels) in out.iter_mut().zip([2 * PANELS, PANELS]) {
        for w in pts.windows(2) {
            let h = (w[1] - w[0]) / panels as f64;
            for p in 0..panels {
                let mid = w[0] + h * (p as f64 + 0.5);
                for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                    set.push((mid + 0.5 * h * x, 0.5 * h * wt));
                }
            }
        }
    }
    if support.is_none() {
        let a = *pts.last().unwrap_or(&0.0);
        for (set, rule) in out.iter_mut().zip([lag, coarse_laguerre()]) {
            for (t, lw) in rule.nodes.iter().zip(&rule.log_weights) {
                set.push((a + t / rate, (lw + t).exp() / rate));
            }
        }
    }
    out
}

/// Vector-valued version of [`radial_integral`]: `f(s, out)` fills `n` values.
pub(crate) fn radial_integral_vec<F: Fn(f64, &mut [f64])>(
    rate: f64,
    support: Option<f64>,
    breaks: &[f64],
    n: usize,
    f: F,
) -> Vec<Checked> {
    let sets = radial_nodes(rate, support, breaks);
    let mut buf = vec![0.0; n];
    let mut sums = [vec![0.0; n], vec![0.0; n]];
    for (set, sum) in sets.iter().zip(sums.iter_mut()) {
        for &(x, w) in set {
            if w == 0.0 {
                continue;
            }
            f(x, &mut buf);
            for (acc, v) in sum.iter_mut().zip(&buf) {
                if *v != 0.0 {
                    *acc += w * v;
                }
            }
        }
    }
    let [fine, coarse] = sums;
    fine.iter()
        .zip(&coarse)
        .map(|(a, b)| Checked {
            value: *a,
            error: (a - b).abs(),
        })
        .collect()
}

/// `∫_0^∞ f(s) ds`, see [`radial_nodes`].
pub(crate) fn radial_integral<F: Fn(f64) -> f64>(
    rate: f64,
    support: Option<f64>,
    breaks: &[f64],
    f: F,
) -> Checked {
    radial_integral_vec(rate, support, breaks, 1, |s, out| out[0] = f(s))[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OrbitalKind {
    /// `Z^{3/2} (8π)^{-1/2} e^{-Z|x|/2}`
    S1,
    /// `Z^{3/2} (32 √π)^{-1} Z (x·axis) e^{-Z|x|/4}`
    P2 { axis: Vec3 },
}

/// Analytic hydrogen-type orbital in model units, centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orbital {
    pub kind: OrbitalKind,
    pub z: f64,
    /// Plate distance `r` of the cut-off `h(|x|/r)`, if any.
    pub cutoff: Option<f64>,
    /// Normalization factor applied on top of the analytic prefactor.
    pub scale: f64,
}

impl Orbital {
    /// Free hydrogen ground state `ζ`.
    pub fn hydrogen_1s() -> Self {
        Orbital {
            kind: OrbitalKind::S1,
            z: 1.0,
            cutoff: None,
            scale: 1.0,
        }
    }

    /// `ζ_Z(x) = Z^{3/2} ζ(Z x)`.
    pub fn hydrogenic_1s(z: f64) -> Result<Self> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidInput(format!(
                "orbital charge must be positive, got {z}"
            )));
        }
        Ok(Orbital {
            z,
            ..Orbital::hydrogen_1s()
        })
    }

    /// `2p` orbital oriented along a unit `axis`.
    pub fn p2(axis: Vec3, z: f64) -> Result<Self> {
        axis.require_unit()?;
        Ok(Orbital {
            kind: OrbitalKind::P2 { axis },
            ..Orbital::hydrogenic_1s(z)?
        })
    }

    /// Multiplies by `h(|x|/r)` and renormalizes.
    pub fn with_cutoff(self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "cut-off distance must be positive, got {r}"
            )));
        }
        let cut = Orbital {
            cutoff: Some(r),
            scale: 1.0,
            ..self
        };
        let n2 = cut.norm_sq()?;
        if !(n2 > 0.0) {
            return Err(Error::InvalidInput(
                "cut-off removes the whole orbital".into(),
            ));
        }
        Ok(Orbital {
            scale: 1.0 / n2.sqrt(),
            ..cut
        })
    }

    pub fn is_spherical(&self) -> bool {
        matches!(self.kind, OrbitalKind::S1)
    }

    /// Decay rate of the orbital itself (`|ψ| ~ e^{-rate |x|}`).
    pub fn decay(&self) -> f64 {
        match self.kind {
            OrbitalKind::S1 => 0.5 * self.z,
            OrbitalKind::P2 { .. } => 0.25 * self.z,
        }
    }

    /// Radius beyond which the orbital vanishes identically.
    pub fn support(&self) -> Option<f64> {
        self.cutoff.map(|r| 0.25 * r)
    }

    /// Kinks of the cut-off, for splitting radial quadratures.
    pub fn breaks(&self) -> Vec<f64> {
        self.cutoff.map(|r| vec![0.2 * r]).unwrap_or_default()
    }

    fn prefactor(&self) -> f64 {
        let z32 = self.z.powf(1.5);
        match self.kind {
            OrbitalKind::S1 => z32 / (8.0 * PI).sqrt(),
            OrbitalKind::P2 { .. } => z32 * self.z / (32.0 * PI.sqrt()),
        }
    }

    fn cut(&self, s: f64) -> (f64, f64) {
        match self.cutoff {
            Some(r) => (cutoff_profile(s / r), cutoff_profile_derivative(s / r) / r),
            None => (1.0, 0.0),
        }
    }

    /// Radial factor `g(s)`: the orbital is `g(|x|)` (s-type) or
    /// `(x·axis) g(|x|)` (p-type).
    pub fn radial(&self, s: f64) -> f64 {
        let k = self.decay();
        self.scale * self.prefactor() * (-k * s).exp() * self.cut(s).0
    }

    /// `g'(s)`.
    pub fn radial_derivative(&self, s: f64) -> f64 {
        let k = self.decay();
        let (h, dh) = self.cut(s);
        self.scale * self.prefactor() * (-k * s).exp() * (dh - k * h)
    }

    pub fn value(&self, x: Vec3) -> f64 {
        let g = self.radial(x.norm());
        match self.kind {
            OrbitalKind::S1 => g,
            OrbitalKind::P2 { axis } => x.dot(axis) * g,
        }
    }

    /// `∫ |ψ|² f(|x|) dx` for an s-type orbital.
    pub fn radial_expectation<F: Fn(f64) -> f64>(&self, breaks: &[f64], f: F) -> Result<Checked> {
        if !self.is_spherical() {
            return Err(Error::InvalidInput(
                "radial expectation needs an s-type orbital".into(),
            ));
        }
        let mut all = self.breaks();
        all.extend_from_slice(breaks);
        Ok(radial_integral(
            2.0 * self.decay(),
            self.support(),
            &all,
            |s| {
                let g = self.radial(s);
                4.0 * PI * s * s * g * g * f(s)
            },
        ))
    }

    /// `∫ a(x) b(x) f(x) dx` by a product rule in spherical coordinates.
    pub fn overlap_with<F: Fn(Vec3) -> f64>(&self, other: &Orbital, f: F) -> Checked {
        let ang = angular_rule();
        let support = match (self.support(), other.support()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut breaks = self.breaks();
        breaks.extend(other.breaks());
        radial_integral(self.decay() + other.decay(), support, &breaks, |s| {
            if s == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for (ct, wt) in ang.cos_theta.iter().zip(&ang.cos_weights) {
                let st = (1.0 - ct * ct).sqrt();
                for (cp, sp) in &ang.phi {
                    let x = Vec3::new(s * st * cp, s * st * sp, s * ct);
                    acc += wt * self.value(x) * other.value(x) * f(x);
                }
            }
            acc * ang.phi_weight * s * s
        })
    }

    /// `<a|b>`, `<a|x_p|b>` and `<a|x_p x_q|b>` in one quadrature pass.
    pub fn moment_tensor(&self, other: &Orbital) -> Result<MomentTensor> {
        if self.is_spherical() && other.is_spherical() {
            let mut breaks = self.breaks();
            breaks.extend(other.breaks());
            let support = match (self.support(), other.support()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            let parts = radial_integral_vec(
                self.decay() + other.decay(),
                support,
                &breaks,
                2,
                |s, out| {
                    let d = 4.0 * PI * s * s * self.radial(s) * other.radial(s);
                    out[0] = d;
                    out[1] = d * s * s / 3.0;
                },
            );
            let diag = parts[1].require(QUAD_TOL * 1e3)?;
            let mut second = [[0.0; 3]; 3];
            (0..3).for_each(|p| second[p][p] = diag);
            return Ok(MomentTensor {
                overlap: parts[0].require(QUAD_TOL * 10.0)?,
                first: [0.0; 3],
                second,
            });
        }
        let ang = angular_rule();
        let support = match (self.support(), other.support()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let mut breaks = self.breaks();
        breaks.extend(other.breaks());
        let parts = radial_integral_vec(
            self.decay() + other.decay(),
            support,
            &breaks,
            10,
            |s, out| {
                out.iter_mut().for_each(|o| *o = 0.0);
                if s == 0.0 {
                    return;
                }
                for (ct, wt) in ang.cos_theta.iter().zip(&ang.cos_weights) {
                    let st = (1.0 - ct * ct).sqrt();
                    for (cp, sp) in &ang.phi {
                        let x = [s * st * cp, s * st * sp, s * ct];
                        let d =
                            wt * self.value(Vec3::from_array(x)) * other.value(Vec3::from_array(x));
                        out[0] += d;
                        out[1] += d * x[0];
                        out[2] += d * x[1];
                        out[3] += d * x[2];
                        let mut k = 4;
                        for p in 0..3 {
                            for q in p..3 {
                                out[k] += d * x[p] * x[q];
                                k += 1;
                            }
                        }
                    }
                }
                let scale = ang.phi_weight * s * s;
                out.iter_mut().for_each(|o| *o *= scale);
            },
        );
        let tol = |k: usize| QUAD_TOL * if k < 4 { 10.0 } else { 1e3 };
        let mut vals = [0.0; 10];
        for (k, c) in parts.iter().enumerate() {
            vals[k] = c.require(tol(k))?;
        }
        let mut second = [[0.0; 3]; 3];
        let mut k = 4;
        for p in 0..3 {
            for q in p..3 {
                second[p][q] = vals[k];
                second[q][p] = vals[k];
                k += 1;
            }
        }
        Ok(MomentTensor {
            overlap: vals[0],
            first: [vals[1], vals[2], vals[3]],
            second,
        })
    }

    pub fn norm_sq(&self) -> Result<f64> {
        if self.is_spherical() {
            return self.radial_expectation(&[], |_| 1.0)?.require(QUAD_TOL);
        }
        self.overlap_with(self, |_| 1.0).require(QUAD_TOL)
    }

    /// `∫ |∇ψ|²` for an s-type orbital.
    pub fn kinetic(&self) -> Result<f64> {
        if !self.is_spherical() {
            return Err(Error::InvalidInput(
                "kinetic energy implemented for s-type orbitals".into(),
            ));
        }
        radial_integral(2.0 * self.decay(), self.support(), &self.breaks(), |s| {
            let d = self.radial_derivative(s);
            4.0 * PI * s * s * d * d
        })
        .require(QUAD_TOL)
    }

    /// `<|x|^k>` for an s-type orbital.
    pub fn radial_moment(&self, k: u32) -> Result<f64> {
        self.radial_expectation(&[], |s| s.powi(k as i32))?
            .require(QUAD_TOL * (1.0 + crate::quadrature::factorial(k + 2)))
    }

    /// `<x_1^k>`: zero for odd `k`, `<|x|^k>/(k+1)` for even `k`.
    pub fn axial_moment(&self, k: u32) -> Result<f64> {
        if k % 2 == 1 {
            return Ok(0.0);
        }
        Ok(self.radial_moment(k)? / (k as f64 + 1.0))
    }
}

/// One-electron matrix elements `<a|1|b>`, `<a|x|b>` and `<a|x x^T|b>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentTensor {
    pub overlap: f64,
    pub first: [f64; 3],
    pub second: [[f64; 3]; 3],
}

struct AngularRule {
    cos_theta: Vec<f64>,
    cos_weights: Vec<f64>,
    phi: Vec<(f64, f64)>,
    phi_weight: f64,
}

fn angular_rule() -> &'static AngularRule {
    static RULE: OnceLock<AngularRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(ANGULAR);
        let phi = (0..ANGULAR)
            .map(|k| {
                let p = 2.0 * PI * k as f64 / ANGULAR as f64;
                (p.cos(), p.sin())
            })
            .collect();
        AngularRule {
            cos_theta: gl.nodes,
            cos_weights: gl.weights,
            phi,
            phi_weight: 2.0 * PI / ANGULAR as f64,
        }
    })
}

/// `‖a - b‖` for two s-type orbitals.
pub fn l2_distance(a: &Orbital, b: &Orbital) -> Result<f64> {
    if !(a.is_spherical() && b.is_spherical()) {
        return Err(Error::InvalidInput(
            "distance implemented for s-type orbitals".into(),
        ));
    }
    let mut breaks = a.breaks();
    breaks.extend(b.breaks());
    breaks.extend(a.support());
    breaks.extend(b.support());
    let c = radial_integral(a.decay().min(b.decay()) * 2.0, None, &breaks, |s| {
        let d = a.radial(s) - b.radial(s);
        4.0 * PI * s * s * d * d
    });
    Ok(c.require(QUAD_TOL)?.max(0.0).sqrt())
}

/// Cut-off hydrogen ground state `h_r ζ / ‖h_r ζ‖`, supported in `|x| < r/4`.
pub fn cutoff_ground_state(r: f64) -> Result<WaveFn> {
    Ok(WaveFn::Analytic(Orbital::hydrogen_1s().with_cutoff(r)?))
}

/// `<ψ, (-Δ - 1/|x|) ψ>` for an s-type orbital.
pub fn hydrogen_energy(o: &Orbital) -> Result<f64> {
    let coulomb = o.radial_expectation(&[], |s| 1.0 / s)?.require(QUAD_TOL)?;
    Ok(o.kinetic()? - coulomb)
}

/// Values of a wavefunction at the nodes of a cylindrical grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFn {
    pub grid: GridCyl,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: GridCyl, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "grid function has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFn { grid, values })
    }

    /// Grid function of a symmetrized eigenvector of `op` (assembled on `grid`).
    pub fn from_symmetrized(grid: GridCyl, op: &SparseSymOp, u: &[f64]) -> Result<Self> {
        GridFn::new(grid, op.to_grid_values(u))
    }

    /// Samples an orbital at the nodes, with the grid axis along `e1`.
    pub fn sample(grid: &GridCyl, orbital: &Orbital) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (xi, rho) = grid.coords(k);
                orbital.value(Vec3::new(xi, rho, 0.0))
            })
            .collect();
        GridFn {
            grid: grid.clone(),
            values,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.integrate(|_, _| 1.0)
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if !(n > 0.0) {
            return Err(Error::InvalidInput(
                "cannot normalize a zero grid function".into(),
            ));
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        Ok(self)
    }

    /// `Σ w ψ² f(ξ, ρ)`.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let g = &self.grid;
        let nr = g.n_rho();
        let mut total = 0.0;
        for (i, &xi) in g.xi.iter().enumerate() {
            let mut row = 0.0;
            for (j, &rho) in g.rho.iter().enumerate() {
                let v = self.values[i * nr + j];
                row += rho * v * v * f(xi, rho);
            }
            total += row;
        }
        total * 2.0 * PI * g.h_xi * g.h_rho
    }

    /// `sqrt(w) ψ`, the representation used by the grid operators.
    pub fn symmetrized(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w.sqrt())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WaveFn {
    Analytic(Orbital),
    Grid(GridFn),
}

impl WaveFn {
    pub fn norm_sq(&self) -> Result<f64> {
        match self {
            WaveFn::Analytic(o) => o.norm_sq(),
            WaveFn::Grid(g) => Ok(g.norm_sq()),
        }
    }

    /// Checks `‖ψ‖ = 1` within [`NORM_TOL`].
    pub fn require_normalized(&self) -> Result<()> {
        let n = self.norm_sq()?.sqrt();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "wavefunction norm is {n}, expected 1"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::factorial;

    #[test]
    fn analytic_orbitals_are_normalized() {
        for o in [
            Orbital::hydrogen_1s(),
            Orbital::hydrogenic_1s(2.0).unwrap(),
            Orbital::p2(Vec3::E3, 1.0).unwrap(),
            Orbital::p2(Vec3::new(0.6, 0.0, 0.8), 3.0).unwrap(),
        ] {
            assert!((o.norm_sq().unwrap() - 1.0).abs() < 1e-12, "{o:?}");
        }
    }

    #[test]
    fn cutoff_orbital_is_normalized_and_supported() {
        let psi = Orbital::hydrogen_1s().with_cutoff(20.0).unwrap();
        assert!((psi.norm_sq().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(psi.value(Vec3::new(5.0, 0.0, 0.0)), 0.0);
        assert_eq!(psi.value(Vec3::new(0.0, 3.0, 4.5)), 0.0);
        assert!(psi.value(Vec3::new(0.0, 3.0, 0.0)) > 0.0);
    }

    #[test]
    fn moments_of_the_ground_state() {
        let z = Orbital::hydrogen_1s();
        // <|x|^k> = (k+2)!/2 for the density e^{-s}/(8π)
        for k in [0u32, 1, 2, 4, 6] {
            let exact = factorial(k + 2) / 2.0;
            let got = z.radial_moment(k).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-12, "k={k}");
        }
        assert!((z.axial_moment(2).unwrap() - 4.0).abs() < 1e-12);
        assert!((z.axial_moment(4).unwrap() - 72.0).abs() < 1e-10);
        assert_eq!(z.axial_moment(3).unwrap(), 0.0);
    }

    #[test]
    fn kinetic_energy_of_hydrogenic_states() {
        // <-Δ> = Z²/4 for ζ_Z in model units
        for z in [1.0, 2.0] {
            let o = Orbital::hydrogenic_1s(z).unwrap();
            assert!((o.kinetic().unwrap() - z * z / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cutoff_distance_and_tail() {
        let zeta = Orbital::hydrogen_1s();
        let mut prev = f64::INFINITY;
        for r in [20.0, 40.0, 60.0] {
            let psi = Orbital::hydrogen_1s().with_cutoff(r).unwrap();
            let d = l2_distance(&psi, &zeta).unwrap();
            // the distance is bounded by the mass of ζ outside B(r/5)
            let t = r / 5.0;
            let outside = 0.5 * (-t).exp() * (t * t + 2.0 * t + 2.0);
            assert!(d * d <= 2.0 * outside, "r={r}: {d}");
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn cutoff_state_energy_approaches_ground_energy() {
        assert!(
            (hydrogen_energy(&Orbital::hydrogen_1s()).unwrap() - crate::model::E_H).abs() < 1e-12
        );
        let mut prev = f64::INFINITY;
        for r in [20.0, 40.0, 80.0] {
            let WaveFn::Analytic(psi) = cutoff_ground_state(r).unwrap() else {
                unreachable!()
            };
            let gap = hydrogen_energy(&psi).unwrap() - crate::model::E_H;
            assert!(gap > 0.0 && gap < prev, "r={r}: {gap}");
            prev = gap;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn grid_function_sampling() {
        let spec = crate::eigensolver::grid::GridSpec::new(0.1, 0.1, 25.0, 25.0).unwrap();
        let g = GridCyl::new(&spec, 10.0).unwrap();
        let f = GridFn::sample(&g, &Orbital::hydrogen_1s());
        assert!((f.norm_sq() - 1.0).abs() < 1e-3);
        let f = f.normalized().unwrap();
        assert!((WaveFn::Grid(f.clone()).norm_sq().unwrap() - 1.0).abs() < 1e-14);
        let x2 = f.integrate(|xi, _| xi * xi);
        // the plate at ξ = -10 removes about 0.017 of the second moment
        assert!((x2 - 4.0).abs() < 3e-2, "{x2}");
    }

    #[test]
    fn moment_tensors() {
        let z = Orbital::hydrogen_1s()
            .moment_tensor(&Orbital::hydrogen_1s())
            .unwrap();
        assert!((z.overlap - 1.0).abs() < 1e-12);
        assert!(z.first.iter().all(|f| f.abs() < 1e-12));
        for p in 0..3 {
            for q in 0..3 {
                let want = if p == q { 4.0 } else { 0.0 };
                assert!((z.second[p][q] - want).abs() < 1e-10);
            }
        }
        // 2p_z has <z²> = 3 <x²> and is orthogonal to 1s with a dipole along z
        let p = Orbital::p2(Vec3::E3, 1.0).unwrap();
        let pp = p.moment_tensor(&p).unwrap();
        assert!((pp.second[2][2] - 3.0 * pp.second[0][0]).abs() < 1e-9);
        let sp = Orbital::hydrogen_1s().moment_tensor(&p).unwrap();
        assert!(sp.overlap.abs() < 1e-12);
        assert!(sp.first[2].abs() > 0.1 && sp.first[0].abs() < 1e-12);
    }

    #[test]
    fn unnormalized_rejected() {
        let o = Orbital {
            scale: 2.0,
            ..Orbital::hydrogen_1s()
        };
        assert!(WaveFn::Analytic(o).require_normalized().is_err());
    }
}

//! Spectral thresholds, binding conditions and closed-form reference energies.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::eigensolver::{
    assemble_1d_electron_plate, lowest_tridiagonal, EigOptions, EigResult, Grid1D,
};
use crate::error::{Error, Result};
use crate::model::{E_ELECTRON_PLATE, E_H};
use crate::wavefn::{radial_integral, Orbital, QUAD_TOL};

/// `|gap|` below which a threshold comparison is reported as marginal.
pub const MARGINAL_TOL: f64 = 1e-12;

/// Bottom of the essential spectrum of the hydrogen/plate Hamiltonian,
/// `E_{e-} - 1/(4r)`.
pub fn essential_spectrum_bottom(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "plate distance must be positive, got {r}"
        )));
    }
    Ok(E_ELECTRON_PLATE - 0.25 / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThresholdStatus {
    /// `E(r)` lies strictly below the essential spectrum.
    Bound,
    Marginal,
    NotCertified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub r: f64,
    pub energy: f64,
    pub bottom: f64,
    pub gap: f64,
    pub status: ThresholdStatus,
}

pub fn hvz_gap(energy: f64, r: f64) -> Result<ThresholdReport> {
    let bottom = essential_spectrum_bottom(r)?;
    let gap = energy - bottom;
    let status = if gap.abs() <= MARGINAL_TOL {
        ThresholdStatus::Marginal
    } else if gap < 0.0 {
        ThresholdStatus::Bound
    } else {
        ThresholdStatus::NotCertified
    };
    Ok(ThresholdReport {
        r,
        energy,
        bottom,
        gap,
        status,
    })
}

/// `|E_e - E_h/16|`.
pub fn electron_plate_ratio_check(e_electron: f64) -> f64 {
    (e_electron - E_H / 16.0).abs()
}

/// Ground energy of the one-dimensional electron/plate operator.
#[derive(Debug, Clone, Serialize)]
pub struct ElectronPlateEnergy {
    pub n: usize,
    pub l: f64,
    /// Eigenvalue on `n` interior nodes.
    pub raw: f64,
    /// Eigenvalue on `2n + 1` nodes (half the spacing).
    pub refined: f64,
    /// `(4 refined - raw) / 3`, the reported estimate.
    pub extrapolated: f64,
    pub relative_error: f64,
    pub deviation: f64,
    pub solve: EigResult,
    pub refined_solve: EigResult,
}

/// Solves on `n` and `2n + 1` nodes and Richardson-extrapolates the
/// second-order discretization error.
pub fn electron_plate_energy(n: usize, l: f64, opts: &EigOptions) -> Result<ElectronPlateEnergy> {
    let coarse = Grid1D::new(n, l)?;
    let fine = Grid1D::new(2 * n + 1, l)?;
    let solve = lowest_tridiagonal(&assemble_1d_electron_plate(&coarse)?, opts)?;
    let refined_solve = lowest_tridiagonal(&assemble_1d_electron_plate(&fine)?, opts)?;
    let extrapolated = (4.0 * refined_solve.eigenvalue - solve.eigenvalue) / 3.0;
    Ok(ElectronPlateEnergy {
        n,
        l,
        raw: solve.eigenvalue,
        refined: refined_solve.eigenvalue,
        extrapolated,
        relative_error: (extrapolated / E_ELECTRON_PLATE - 1.0).abs(),
        deviation: electron_plate_ratio_check(extrapolated),
        solve,
        refined_solve,
    })
}

/// Bottom `k E_{e-} = -k/64` of the spectrum of `k` electrons at the plate.
pub fn k_electron_plate_bottom(k: u32) -> f64 {
    k as f64 * E_ELECTRON_PLATE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BindingVerdict {
    pub k: usize,
    /// Upper bound on the full `N`-electron energy.
    pub upper: f64,
    /// Energy of the `N - k` electron system plus `k E_h / 16`.
    pub threshold: f64,
    pub certified: bool,
}

/// Checks `E(N) < E(N-k) + k E_h/16` for `k = 1..=N`.
///
/// `energies[0]` is an upper bound for the full system, `energies[k]` a
/// lower-bound-safe value for the system with `k` electrons removed.
pub fn binding_condition(energies: &BTreeMap<usize, f64>, n: usize) -> Result<Vec<BindingVerdict>> {
    if n == 0 {
        return Err(Error::InvalidInput("binding condition needs N >= 1".into()));
    }
    let upper = *energies
        .get(&0)
        .ok_or_else(|| Error::InvalidInput("missing full-system energy (k = 0)".into()))?;
    (1..=n)
        .map(|k| {
            let sub = energies.get(&k).ok_or_else(|| {
                Error::InvalidInput(format!("missing subsystem energy for k = {k}"))
            })?;
            let threshold = sub + k as f64 * E_H / 16.0;
            Ok(BindingVerdict {
                k,
                upper,
                threshold,
                certified: upper < threshold,
            })
        })
        .collect()
}

/// Reference energies for hydrogen: `E_h` for the atom, 0 without electrons.
pub fn hydrogen_energies() -> BTreeMap<usize, f64> {
    [(0, E_H), (1, 0.0)].into_iter().collect()
}

/// Reference energies for helium: the product-state upper bound, the exact
/// He+ energy `4 E_h` and 0.
pub fn helium_energies() -> Result<BTreeMap<usize, f64>> {
    let upper = helium_variational_energy()?.total;
    Ok([(0, upper), (1, 4.0 * E_H), (2, 0.0)].into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeliumEnergy {
    /// `<φ, -Δ φ>` summed over both electrons.
    pub kinetic: f64,
    /// `<φ, -2/|x| φ>` summed over both electrons.
    pub attraction: f64,
    pub repulsion: f64,
    pub total: f64,
}

/// `<φ⊗φ, H_2 φ⊗φ>` for `φ = ζ_2`.
pub fn helium_variational_energy() -> Result<HeliumEnergy> {
    let phi = Orbital::hydrogenic_1s(2.0)?;
    let kinetic = 2.0 * phi.kinetic()?;
    let attraction = -2.0
        * 2.0
        * phi
            .radial_expectation(&[], |s| 1.0 / s)?
            .require(QUAD_TOL)?;
    let repulsion = newton_repulsion(&phi, &phi)?;
    Ok(HeliumEnergy {
        kinetic,
        attraction,
        repulsion,
        total: kinetic + attraction + repulsion,
    })
}

/// `∫∫ |a(x)|² |b(y)|² / |x - y|` for s-type orbitals. Newton's theorem
/// reduces the inner angular integral to `1/max(|x|, |y|)`.
pub fn newton_repulsion(a: &Orbital, b: &Orbital) -> Result<f64> {
    if !(a.is_spherical() && b.is_spherical()) {
        return Err(Error::InvalidInput(
            "Newton reduction needs s-type orbitals".into(),
        ));
    }
    let shell = |o: &Orbital, s: f64| {
        let g = o.radial(s);
        4.0 * PI * s * s * g * g
    };
    let inner_err = std::cell::Cell::new(0.0f64);
    let outer = radial_integral(2.0 * a.decay(), a.support(), &a.breaks(), |s| {
        if s == 0.0 {
            return 0.0;
        }
        let mut breaks = b.breaks();
        breaks.push(s);
        let inner = radial_integral(2.0 * b.decay(), b.support(), &breaks, |t| {
            shell(b, t) / s.max(t)
        });
        inner_err.set(inner_err.get().max(inner.error));
        shell(a, s) * inner.value
    });
    let c = crate::quadrature::Checked {
        value: outer.value,
        error: outer.error + inner_err.get(),
    };
    c.require(QUAD_TOL * 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bottom_examples() {
        assert!((essential_spectrum_bottom(10.0).unwrap() + 0.040625).abs() < 1e-16);
        assert!((essential_spectrum_bottom(4.0).unwrap() + 0.078125).abs() < 1e-16);
        assert!((essential_spectrum_bottom(1e15).unwrap() + 1.0 / 64.0).abs() < 1e-15);
        assert!(essential_spectrum_bottom(0.0).is_err());
    }

    #[test]
    fn gap_verdicts() {
        let g = hvz_gap(-0.25, 10.0).unwrap();
        assert_eq!(g.status, ThresholdStatus::Bound);
        assert!((g.gap + 0.209375).abs() < 1e-15);
        let b = essential_spectrum_bottom(10.0).unwrap();
        assert_eq!(hvz_gap(b, 10.0).unwrap().status, ThresholdStatus::Marginal);
        assert_eq!(
            hvz_gap(b + 1e-3, 10.0).unwrap().status,
            ThresholdStatus::NotCertified
        );
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(electron_plate_ratio_check(-1.0 / 64.0), 0.0);
        assert!((electron_plate_ratio_check(-0.01560) - 2.5e-5).abs() < 1e-15);
    }

    #[test]
    fn k_bottoms() {
        assert_eq!(k_electron_plate_bottom(1), -1.0 / 64.0);
        assert_eq!(k_electron_plate_bottom(2), -1.0 / 32.0);
        assert_eq!(k_electron_plate_bottom(0), 0.0);
    }

    #[test]
    fn small_electron_plate_run() {
        let e = electron_plate_energy(512, 400.0, &EigOptions::default()).unwrap();
        assert!(e.raw > e.refined && e.refined > e.extrapolated - 1e-9);
        assert!(e.relative_error < 1e-3, "{e:?}");
    }

    #[test]
    fn helium_pieces() {
        let he = helium_variational_energy().unwrap();
        assert!((he.kinetic - 2.0).abs() < 1e-12);
        assert!((he.attraction + 4.0).abs() < 1e-12);
        assert!((he.kinetic + he.attraction - 8.0 * E_H).abs() < 1e-12);
        assert!((he.repulsion - 0.625).abs() < 1e-10, "{}", he.repulsion);
        assert!((he.total - 5.5 * E_H).abs() < 1e-10);
    }

    #[test]
    fn reference_binding_verdicts() {
        let h = binding_condition(&hydrogen_energies(), 1).unwrap();
        assert!(h.iter().all(|v| v.certified));
        let he = binding_condition(&helium_energies().unwrap(), 2).unwrap();
        assert_eq!(he.len(), 2);
        assert!(he.iter().all(|v| v.certified));
        assert!((he[0].threshold + 1.0 + 1.0 / 64.0).abs() < 1e-15);
        assert!((he[1].threshold + 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn violated_and_missing() {
        let bad: BTreeMap<usize, f64> = [(0, -0.01), (1, 0.0)].into_iter().collect();
        assert!(!binding_condition(&bad, 1).unwrap()[0].certified);
        let missing: BTreeMap<usize, f64> = [(0, -1.4), (1, -1.0)].into_iter().collect();
        assert!(binding_condition(&missing, 2).is_err());
    }

    proptest! {
        #[test]
        fn bottom_monotone(a in 0.01f64..1e4, b in 0.01f64..1e4) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(lo < hi);
            let (el, eh) = (essential_spectrum_bottom(lo).unwrap(), essential_spectrum_bottom(hi).unwrap());
            prop_assert!(el < eh && eh < -1.0 / 64.0);
        }

        #[test]
        fn verdict_monotone_in_upper_bound(
            upper in -3.0f64..0.5,
            improve in 0.0f64..1.0,
            subs in proptest::collection::vec(-2.0f64..0.0, 1..4),
        ) {
            let n = subs.len();
            let mut e: BTreeMap<usize, f64> = subs.iter().enumerate().map(|(k, v)| (k + 1, *v)).collect();
            e.insert(0, upper);
            let before = binding_condition(&e, n).unwrap();
            e.insert(0, upper - improve);
            let after = binding_condition(&e, n).unwrap();
            for (b, a) in before.iter().zip(&after) {
                prop_assert!(!b.certified || a.certified);
            }
        }
    }
}

//! Image-charge potentials and classical interaction energies for a charge
//! distribution in front of a conducting or dielectric half-space.
//!
//! A charge `q` at `y` in medium 1 induces a mirror charge `A q` at
//! `y_s = y* - 2 r v`, the reflection of `y` through the interface plane
//! `{x·v = -r}`. A perfect conductor has `A = -1`; a dielectric has
//! `|A| < 1`, and the reflection coefficient is `m = -A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Molecule, PlateConfig, Vec3};

/// Positions closer than this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Permittivity {
    Finite(f64),
    /// The `ε → ∞` limit of a perfect conductor.
    Conductor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreensCoeffs {
    /// Mirror coefficient `(ε1 - ε2)/(ε1 + ε2)`.
    pub a: f64,
    /// Transmission coefficient `2 ε2/(ε1 + ε2)` of the potential inside medium 2.
    pub b: f64,
    pub eps1: f64,
    pub eps2: Permittivity,
}

impl GreensCoeffs {
    /// Reflection coefficient `m = -A`.
    pub fn reflection(&self) -> f64 {
        -self.a
    }

    /// Coefficients for reflection coefficient `m` in vacuum (`ε1 = 1`).
    pub fn from_reflection(m: f64) -> Self {
        GreensCoeffs {
            a: -m,
            b: 1.0 + m,
            eps1: 1.0,
            eps2: if m == 1.0 {
                Permittivity::Conductor
            } else {
                Permittivity::Finite((1.0 + m) / (1.0 - m))
            },
        }
    }

    /// Direct Green's function `1/(ε1 |x - y|)` in medium 1.
    pub fn g0(&self, x: Vec3, y: Vec3) -> f64 {
        1.0 / (self.eps1 * x.distance(y))
    }

    /// Mirror Green's function `A/(ε1 |x - y_s|)` in medium 1.
    pub fn gd(&self, x: Vec3, y: Vec3, plate_v: Vec3, plate_r: f64) -> f64 {
        let ys = mirror_point(y, plate_v, plate_r);
        self.a / (self.eps1 * x.distance(ys))
    }

    /// Potential inside medium 2 of a unit charge at `y`: `B/(ε1 |x - y|)`.
    pub fn g2(&self, x: Vec3, y: Vec3) -> f64 {
        self.b / (self.eps1 * x.distance(y))
    }
}

pub fn greens_coefficients(eps1: f64, eps2: Permittivity) -> Result<GreensCoeffs> {
    if !(eps1 > 0.0) || !eps1.is_finite() {
        return Err(Error::InvalidInput(format!(
            "permittivity eps1 must be positive, got {eps1}"
        )));
    }
    let (a, b) = match eps2 {
        Permittivity::Finite(e2) => {
            if !(e2 > 0.0) || !e2.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "permittivity eps2 must be positive, got {e2}"
                )));
            }
            ((eps1 - e2) / (eps1 + e2), 2.0 * e2 / (eps1 + e2))
        }
        Permittivity::Conductor => (-1.0, 2.0),
    };
    Ok(GreensCoeffs { a, b, eps1, eps2 })
}

/// Image position `y* - 2 r v` of `y` behind the plate.
pub fn mirror_point(y: Vec3, v: Vec3, r: f64) -> Vec3 {
    y - v * (2.0 * (y.dot(v) + r))
}

fn check_half_space(x: Vec3, v: Vec3, r: f64, what: &str) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "{what} has non-finite coordinates"
        )));
    }
    if !(x.dot(v) + r > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "{what} at {x:?} is not in front of the plate (x·v = {}, r = {r})",
            x.dot(v)
        )));
    }
    Ok(())
}

/// Image part of the hydrogen/plate potential, scaled by the reflection
/// coefficient `m`. `x1` is the coordinate along the plate normal and `rho`
/// the distance from the axis through the nucleus.
#[inline]
pub fn hydrogen_image_axisym(x1: f64, rho: f64, r: f64, m: f64) -> f64 {
    let far = ((2.0 * r + x1).powi(2) + rho * rho).sqrt();
    0.5 * m * (-1.0 / (2.0 * r) - 1.0 / (2.0 * (r + x1)) + 2.0 / far)
}

/// Full potential of the hydrogen/plate Hamiltonian with `v = e1`, `m = 1`.
pub fn hydrogen_plate_potential(x: Vec3, r: f64) -> Result<f64> {
    hydrogen_plate_potential_m(x, r, 1.0)
}

/// As [`hydrogen_plate_potential`] with every image term scaled by `m`.
pub fn hydrogen_plate_potential_m(x: Vec3, r: f64, m: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "plate distance must be positive, got {r}"
        )));
    }
    let d = x.norm();
    if d < COINCIDENCE_TOL {
        return Err(Error::Coincident("electron on the nucleus".into()));
    }
    check_half_space(x, Vec3::E1, r, "electron")?;
    let rho = (x.y * x.y + x.z * x.z).sqrt();
    Ok(-1.0 / d + hydrogen_image_axisym(x.x, rho, r, m))
}

/// Terms of the image interaction `I = I1 - I2 - I3` of a molecule, each
/// already multiplied by the reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionTerms {
    /// Electron / mirror-nucleus repulsion `Σ_i Σ_l 2 Z_l / |x_i - ŷ_l|`.
    pub i1: f64,
    /// Electron / mirror-electron attraction over ordered pairs.
    pub i2: f64,
    /// Nucleus / mirror-nucleus attraction over ordered pairs.
    pub i3: f64,
    pub i: f64,
}

/// Image interaction of a molecule with electrons at `electrons`.
///
/// Pair sums run over ordered pairs: the diagonal self-image terms once and
/// each off-diagonal pair twice. The Hamiltonian adds `I/2`.
pub fn molecule_interaction(
    mol: &Molecule,
    plate: &PlateConfig,
    electrons: &[Vec3],
) -> Result<InteractionTerms> {
    let (v, r, m) = (plate.v, plate.r, plate.m);
    for (i, x) in electrons.iter().enumerate() {
        check_half_space(*x, v, r, &format!("electron {i}"))?;
    }
    for (k, n) in mol.nuclei.iter().enumerate() {
        check_half_space(n.position, v, r, &format!("nucleus {k}"))?;
    }
    let inv = |x: Vec3, y: Vec3| -> Result<f64> {
        let d = x.distance(mirror_point(y, v, r));
        if d < COINCIDENCE_TOL {
            return Err(Error::Coincident(format!("{x:?} meets the image of {y:?}")));
        }
        Ok(1.0 / d)
    };
    let mut i1 = 0.0;
    for x in electrons {
        for n in &mol.nuclei {
            i1 += 2.0 * n.charge as f64 * inv(*x, n.position)?;
        }
    }
    let mut i2 = 0.0;
    for (i, x) in electrons.iter().enumerate() {
        i2 += inv(*x, *x)?;
        for y in &electrons[i + 1..] {
            i2 += 2.0 * inv(*x, *y)?;
        }
    }
    let mut i3 = 0.0;
    for (k, a) in mol.nuclei.iter().enumerate() {
        let za = a.charge as f64;
        i3 += za * za * inv(a.position, a.position)?;
        for b in &mol.nuclei[k + 1..] {
            i3 += 2.0 * za * b.charge as f64 * inv(a.position, b.position)?;
        }
    }
    let (i1, i2, i3) = (m * i1, m * i2, m * i3);
    Ok(InteractionTerms {
        i1,
        i2,
        i3,
        i: i1 - i2 - i3,
    })
}

/// Point charges in medium 1 together with the interface geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeSet {
    pub v: Vec3,
    pub r: f64,
    pub charges: Vec<(f64, Vec3)>,
}

impl ChargeSet {
    pub fn new(v: Vec3, r: f64, charges: Vec<(f64, Vec3)>) -> Result<Self> {
        v.require_unit()?;
        for (j, (_, x)) in charges.iter().enumerate() {
            check_half_space(*x, v, r, &format!("charge {j}"))?;
        }
        Ok(ChargeSet { v, r, charges })
    }

    /// Nuclei (`+Z`) followed by electrons (`-1`).
    pub fn from_molecule(mol: &Molecule, plate: &PlateConfig, electrons: &[Vec3]) -> Result<Self> {
        let mut charges: Vec<(f64, Vec3)> = mol
            .nuclei
            .iter()
            .map(|n| (n.charge as f64, n.position))
            .collect();
        charges.extend(electrons.iter().map(|x| (-1.0, *x)));
        ChargeSet::new(plate.v, plate.r, charges)
    }
}

/// Direct and mirror parts of the classical interaction energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    pub direct: f64,
    pub mirror: f64,
    pub total: f64,
}

/// Electrostatic energy of point charges in medium 1, split into the direct
/// Coulomb terms `Σ_{i<j} q_i q_j G0` and the mirror terms
/// `½(Σ_{i≠j} q_i q_j Gd + Σ_j q_j² Gd(x_j, x_j))`.
pub fn interaction_energy_parts(charges: &ChargeSet, coeffs: &GreensCoeffs) -> Result<EnergyParts> {
    let q = &charges.charges;
    let mut direct = 0.0;
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            if q[i].1.distance(q[j].1) < COINCIDENCE_TOL {
                return Err(Error::Coincident(format!("charges {i} and {j}")));
            }
            direct += q[i].0 * q[j].0 * coeffs.g0(q[i].1, q[j].1);
        }
    }
    let mut mirror = 0.0;
    for (qi, xi) in q {
        for (qj, xj) in q {
            mirror += qi * qj * coeffs.gd(*xi, *xj, charges.v, charges.r);
        }
    }
    mirror *= 0.5;
    Ok(EnergyParts {
        direct,
        mirror,
        total: direct + mirror,
    })
}

pub fn interaction_energy(charges: &ChargeSet, coeffs: &GreensCoeffs) -> Result<f64> {
    Ok(interaction_energy_parts(charges, coeffs)?.total)
}

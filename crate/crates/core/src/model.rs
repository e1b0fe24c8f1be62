//! Geometry, units and validity checks for a molecule in front of a plate.
//!
//! Units: the kinetic prefactor and the Coulomb prefactor are both 1, so the
//! hydrogen Hamiltonian is `-Δ - 1/|x|` and its ground energy is exactly
//! [`E_H`] = -1/4. Lengths are measured in these units (the hydrogen ground
//! state decays like `exp(-|x|/2)`).
//!
//! The plate is the plane `{x : x·v = -r}`; the nuclei centre of charge sits at
//! the origin and the physical half-space is `{x : x·v > -r}`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-state energy of free hydrogen in model units.
pub const E_H: f64 = -0.25;

/// Ground-state energy of one electron bound to a perfectly conducting plate
/// by its own image charge. Equals `E_H / 16`.
pub const E_ELECTRON_PLATE: f64 = E_H / 16.0;

/// Tolerance on `|v| = 1` for plate normals and reflection axes.
pub const UNIT_TOL: f64 = 1e-12;

/// Tolerance on the nuclear centre of charge `Σ Z_j y_j = 0`.
pub const CENTER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const E2: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const E3: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Returns the vector scaled to unit length, or an error for the zero vector.
    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cannot normalize vector {self:?}"
            )));
        }
        Ok(self * (1.0 / n))
    }

    /// Checks `|self| = 1` within [`UNIT_TOL`].
    pub fn require_unit(self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Mirror image of `x` in the plane through the origin orthogonal to `v`.
pub fn reflect(x: Vec3, v: Vec3) -> Result<Vec3> {
    v.require_unit()?;
    Ok(reflect_unchecked(x, v))
}

#[inline]
pub(crate) fn reflect_unchecked(x: Vec3, v: Vec3) -> Vec3 {
    x - v * (2.0 * x.dot(v))
}

/// Plate orientation, distance and reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateConfig {
    /// Unit normal of the plate, pointing from the plate into the physical half-space.
    pub v: Vec3,
    /// Distance between the plate and the nuclear centre of charge.
    pub r: f64,
    /// Reflection coefficient; 1 is a perfect conductor.
    pub m: f64,
}

impl PlateConfig {
    pub fn new(v: Vec3, r: f64, m: f64) -> Result<Self> {
        v.require_unit()?;
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "plate distance must be positive, got {r}"
            )));
        }
        if !(m > 0.0 && m <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "reflection coefficient must lie in (0, 1], got {m}"
            )));
        }
        Ok(PlateConfig { v, r, m })
    }

    /// Like [`PlateConfig::new`] but normalizes `v` first.
    pub fn normalized(v: Vec3, r: f64, m: f64) -> Result<Self> {
        PlateConfig::new(v.normalized()?, r, m)
    }

    /// Perfect conductor with normal `e1`.
    pub fn conductor(r: f64) -> Result<Self> {
        PlateConfig::new(Vec3::E1, r, 1.0)
    }

    /// Signed height of `x` above the plate, `x·v + r`.
    pub fn height(&self, x: Vec3) -> f64 {
        x.dot(self.v) + self.r
    }

    /// Position of the image of `x` behind the plate, `x* - 2 r v`.
    pub fn image(&self, x: Vec3) -> Vec3 {
        reflect_unchecked(x, self.v) - self.v * (2.0 * self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub position: Vec3,
    pub charge: u32,
}

/// Born-Oppenheimer molecule: fixed nuclei and an electron count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub nuclei: Vec<Nucleus>,
    pub electrons: usize,
}

impl Molecule {
    pub fn new(nuclei: Vec<Nucleus>, electrons: usize) -> Self {
        Molecule { nuclei, electrons }
    }

    pub fn hydrogen() -> Self {
        Molecule::new(
            vec![Nucleus {
                position: Vec3::ZERO,
                charge: 1,
            }],
            1,
        )
    }

    pub fn helium() -> Self {
        Molecule::new(
            vec![Nucleus {
                position: Vec3::ZERO,
                charge: 2,
            }],
            2,
        )
    }

    pub fn total_charge(&self) -> u32 {
        self.nuclei.iter().map(|n| n.charge).sum()
    }

    /// `Σ Z_j y_j`.
    pub fn charge_dipole(&self) -> Vec3 {
        self.nuclei
            .iter()
            .fold(Vec3::ZERO, |acc, n| acc + n.position * n.charge as f64)
    }

    /// Translates the nuclei so that their centre of charge sits at the origin.
    pub fn recentered(&self) -> Result<Molecule> {
        let total = self.total_charge();
        if total == 0 {
            return Err(Error::InvalidInput("molecule has no nuclear charge".into()));
        }
        let shift = self.charge_dipole() * (1.0 / total as f64);
        Ok(Molecule {
            nuclei: self
                .nuclei
                .iter()
                .map(|n| Nucleus {
                    position: n.position - shift,
                    charge: n.charge,
                })
                .collect(),
            electrons: self.electrons,
        })
    }

    pub fn is_neutral(&self) -> bool {
        self.total_charge() as usize == self.electrons
    }

    pub fn is_centered(&self) -> bool {
        self.charge_dipole().norm() <= CENTER_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NotNeutral {
        electrons: usize,
        nuclear_charge: u32,
    },
    NotCentered {
        dipole: Vec3,
    },
    /// Nucleus `index` sits on or behind the plate; `height` is `y·v + r`.
    BehindPlate {
        index: usize,
        height: f64,
    },
    NoNuclei,
    BadCharge {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violated molecule/plate invariant. Never fails.
pub fn validate_molecule(mol: &Molecule, plate: &PlateConfig) -> ValidationReport {
    let mut violations = Vec::new();
    if mol.nuclei.is_empty() {
        violations.push(Violation::NoNuclei);
    }
    for (index, n) in mol.nuclei.iter().enumerate() {
        if n.charge == 0 || !n.position.is_finite() {
            violations.push(Violation::BadCharge { index });
        }
    }
    if !mol.is_neutral() {
        violations.push(Violation::NotNeutral {
            electrons: mol.electrons,
            nuclear_charge: mol.total_charge(),
        });
    }
    if !mol.is_centered() {
        violations.push(Violation::NotCentered {
            dipole: mol.charge_dipole(),
        });
    }
    for (index, n) in mol.nuclei.iter().enumerate() {
        let height = plate.height(n.position);
        if !(height > 0.0) {
            violations.push(Violation::BehindPlate { index, height });
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapezoidCheck {
    /// `2 / b`
    pub lhs: f64,
    /// `1/a + 1/c`
    pub rhs: f64,
    pub holds: bool,
}

/// Diagonal inequality `2/b <= 1/a + 1/c` for an isosceles trapezoid with
/// parallel sides `a`, `c` and diagonal `b`.
///
/// Realizable trapezoids have `b >= (a + c)/2`; equality in the inequality
/// occurs only for the flat case `a = c = b`.
pub fn trapezoid_inequality(a: f64, c: f64, b: f64) -> Result<TrapezoidCheck> {
    if !(a > 0.0 && c > 0.0 && b > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "trapezoid lengths must be positive: a={a}, c={c}, b={b}"
        )));
    }
    let half = 0.5 * (a + c);
    if b < half * (1.0 - 4.0 * f64::EPSILON) {
        return Err(Error::InvalidGeometry(format!(
            "diagonal {b} shorter than the mid-line {half}"
        )));
    }
    let lhs = 2.0 / b;
    let rhs = 1.0 / a + 1.0 / c;
    Ok(TrapezoidCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 4.0 * f64::EPSILON),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_e1() {
        let y = reflect(Vec3::new(1.0, 2.0, 3.0), Vec3::E1).unwrap();
        assert_eq!(y, Vec3::new(-1.0, 2.0, 3.0));
    }

    #[test]
    fn reflect_fixes_the_plane_and_is_an_involution() {
        let v = Vec3::new(1.0, 2.0, -2.0).normalized().unwrap();
        let x = Vec3::new(2.0, -1.0, 0.0);
        assert!(x.dot(v).abs() < 1e-15);
        assert!(reflect(x, v).unwrap().distance(x) < 1e-15);
        let p = Vec3::new(0.3, -4.0, 1.7);
        let back = reflect(reflect(p, v).unwrap(), v).unwrap();
        assert!(back.distance(p) < 1e-14);
    }

    #[test]
    fn reflect_rejects_non_unit() {
        assert!(matches!(
            reflect(Vec3::ZERO, Vec3::new(1.0, 1.0, 0.0)),
            Err(Error::NonUnitVector { .. })
        ));
    }

    #[test]
    fn plate_config_validation() {
        assert!(PlateConfig::new(Vec3::E1, 10.0, 1.0).is_ok());
        assert!(PlateConfig::new(Vec3::E1, -1.0, 1.0).is_err());
        assert!(PlateConfig::new(Vec3::E1, 1.0, 0.0).is_err());
        assert!(PlateConfig::new(Vec3::E1, 1.0, 1.5).is_err());
        assert!(PlateConfig::new(Vec3::new(2.0, 0.0, 0.0), 1.0, 1.0).is_err());
        let p = PlateConfig::normalized(Vec3::new(2.0, 0.0, 0.0), 1.0, 0.5).unwrap();
        assert_eq!(p.v, Vec3::E1);
    }

    #[test]
    fn hydrogen_is_valid_for_any_distance() {
        for r in [0.1, 1.0, 10.0, 1e4] {
            let plate = PlateConfig::conductor(r).unwrap();
            assert!(validate_molecule(&Molecule::hydrogen(), &plate).is_valid());
        }
    }

    #[test]
    fn nucleus_behind_plate_is_reported() {
        let r = 3.0;
        let plate = PlateConfig::conductor(r).unwrap();
        let mol = Molecule::new(
            vec![
                Nucleus {
                    position: Vec3::E1 * (-2.0 * r),
                    charge: 1,
                },
                Nucleus {
                    position: Vec3::E1 * (2.0 * r),
                    charge: 1,
                },
            ],
            2,
        );
        let report = validate_molecule(&mol, &plate);
        assert_eq!(
            report.violations,
            vec![Violation::BehindPlate {
                index: 0,
                height: -r
            }]
        );
    }

    #[test]
    fn h2_like_molecule_is_valid() {
        let mol = Molecule::new(
            vec![
                Nucleus {
                    position: Vec3::E1,
                    charge: 1,
                },
                Nucleus {
                    position: -Vec3::E1,
                    charge: 1,
                },
            ],
            2,
        );
        let plate = PlateConfig::conductor(5.0).unwrap();
        assert!(validate_molecule(&mol, &plate).is_valid());
    }

    #[test]
    fn recentering_and_neutrality() {
        let mol = Molecule::new(
            vec![
                Nucleus {
                    position: Vec3::new(1.0, 1.0, 0.0),
                    charge: 2,
                },
                Nucleus {
                    position: Vec3::new(4.0, 1.0, 0.0),
                    charge: 1,
                },
            ],
            2,
        );
        let plate = PlateConfig::conductor(10.0).unwrap();
        let report = validate_molecule(&mol, &plate);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotNeutral { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotCentered { .. })));
        let fixed = Molecule::new(mol.recentered().unwrap().nuclei, 3);
        assert!(validate_molecule(&fixed, &plate).is_valid());
    }

    #[test]
    fn trapezoid_unit_square() {
        let t = trapezoid_inequality(1.0, 1.0, 2f64.sqrt()).unwrap();
        assert!((t.lhs - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.rhs, 2.0);
        assert!(t.holds);
    }

    #[test]
    fn trapezoid_flat_equal_sides_is_the_equality_case() {
        // Height zero and a = c: all four vertices collinear, diagonal = (a + c)/2.
        let t = trapezoid_inequality(2.0, 2.0, 2.0).unwrap();
        assert_eq!(t.lhs, t.rhs);
        assert!(t.holds);
    }

    proptest::proptest! {
        #[test]
        fn realizable_trapezoids_satisfy_the_inequality(
            a in 1e-3f64..1e3,
            c in 1e-3f64..1e3,
            height in 0.0f64..1e3,
        ) {
            let b = (0.25 * (a + c).powi(2) + height * height).sqrt();
            let t = trapezoid_inequality(a, c, b).unwrap();
            proptest::prop_assert!(t.holds, "{t:?}");
        }
    }

    #[test]
    fn trapezoid_rejects_short_diagonal() {
        assert!(trapezoid_inequality(1.0, 3.0, 1.5).is_err());
        assert!(trapezoid_inequality(0.0, 3.0, 1.5).is_err());
    }
}

//! Expansions of the image interaction in powers of `1/r`, expectation values
//! of `I/2` and the orientation coefficient `C(v)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_molecule, Molecule, PlateConfig, Vec3};
use crate::potential::{hydrogen_image_axisym, molecule_interaction};
use crate::quadrature::GaussLegendre;
use crate::wavefn::{GridFn, MomentTensor, Orbital, WaveFn, QUAD_TOL};

/// Highest Legendre degree of [`MultipoleSeries`].
pub const MAX_ORDER: usize = 4;
/// Highest power of the hydrogen geometric decomposition.
pub const MAX_GEOMETRIC_ORDER: usize = 5;
/// Tolerance on the Gram matrix of a [`GroundBasis`].
pub const BASIS_TOL: f64 = 1e-8;

/// `coeff · z_1^a z_2^b z_3^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: [u8; 3],
}

impl Monomial {
    pub fn eval(&self, z: Vec3) -> f64 {
        let z = z.to_array();
        self.coeff
            * (0..3)
                .map(|k| z[k].powi(self.powers[k] as i32))
                .product::<f64>()
    }
}

type Poly = BTreeMap<[u8; 3], f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (pa, ca) in a {
        for (pb, cb) in b {
            let p = [pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]];
            *out.entry(p).or_insert(0.0) += ca * cb;
        }
    }
    out
}

fn poly_add(a: &Poly, b: &Poly, scale_b: f64) -> Poly {
    let mut out = a.clone();
    for (p, c) in b {
        *out.entry(*p).or_insert(0.0) += scale_b * c;
    }
    out
}

fn poly_scale(a: &Poly, s: f64) -> Poly {
    a.iter().map(|(p, c)| (*p, c * s)).collect()
}

/// Truncated expansion of `1/|2 r v + z|` in powers of `1/r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipoleSeries {
    /// Legendre degree of the last kept term.
    pub order: usize,
    pub v: Vec3,
    /// `coefficients[k]` multiplies `r^{-k}` (entry 0 is empty).
    pub coefficients: Vec<Vec<Monomial>>,
}

impl MultipoleSeries {
    /// `Σ_{l<=order} (-1)^l |z|^l P_l(ẑ·v) / (2r)^{l+1}`.
    pub fn inverse_distance(v: Vec3, order: usize) -> Result<Self> {
        v.require_unit()?;
        if order > MAX_ORDER {
            return Err(Error::InvalidInput(format!(
                "multipole order {order} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        let one: Poly = [([0u8, 0, 0], 1.0)].into_iter().collect();
        let t: Poly = [([1u8, 0, 0], v.x), ([0, 1, 0], v.y), ([0, 0, 1], v.z)]
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .collect();
        let n: Poly = [([2u8, 0, 0], 1.0), ([0, 2, 0], 1.0), ([0, 0, 2], 1.0)]
            .into_iter()
            .collect();
        let t2 = poly_mul(&t, &t);
        let t3 = poly_mul(&t2, &t);
        let t4 = poly_mul(&t3, &t);
        let tn = poly_mul(&t, &n);
        let t2n = poly_mul(&t2, &n);
        let n2 = poly_mul(&n, &n);
        // |z|^l P_l(t/|z|)
        let legendre = [
            one,
            t.clone(),
            poly_add(&poly_scale(&t2, 1.5), &n, -0.5),
            poly_add(&poly_scale(&t3, 2.5), &tn, -1.5),
            poly_add(
                &poly_add(&poly_scale(&t4, 35.0 / 8.0), &t2n, -30.0 / 8.0),
                &n2,
                3.0 / 8.0,
            ),
        ];
        let mut coefficients = vec![Vec::new()];
        for (l, q) in legendre.iter().enumerate().take(order + 1) {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let scale = sign / 2f64.powi(l as i32 + 1);
            coefficients.push(
                q.iter()
                    .filter(|(_, c)| c.abs() > 1e-15)
                    .map(|(p, c)| Monomial {
                        coeff: scale * c,
                        powers: *p,
                    })
                    .collect(),
            );
        }
        Ok(MultipoleSeries {
            order,
            v,
            coefficients,
        })
    }

    /// Coefficient of `r^{-k}` at `z`.
    pub fn coefficient(&self, k: usize, z: Vec3) -> f64 {
        self.coefficients
            .get(k)
            .map(|c| c.iter().map(|m| m.eval(z)).sum())
            .unwrap_or(0.0)
    }

    pub fn eval(&self, z: Vec3, r: f64) -> f64 {
        (1..self.coefficients.len())
            .rev()
            .map(|k| self.coefficient(k, z) / r.powi(k as i32))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub partial: f64,
    pub exact: f64,
}

impl SeriesValue {
    pub fn remainder(&self) -> f64 {
        self.exact - self.partial
    }
}

/// Truncated multipole series of `1/|2 r v + z|` and the exact value.
pub fn inverse_distance_series(z: Vec3, v: Vec3, r: f64, order: usize) -> Result<SeriesValue> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "plate distance must be positive, got {r}"
        )));
    }
    if !z.is_finite() || z.norm() >= 5.0 * r / 3.0 {
        return Err(Error::InvalidInput(format!(
            "|z| = {} outside the expansion window |z| < 5r/3 = {}",
            z.norm(),
            5.0 * r / 3.0
        )));
    }
    let series = MultipoleSeries::inverse_distance(v, order)?;
    Ok(SeriesValue {
        partial: series.eval(z, r),
        exact: 1.0 / (v * (2.0 * r) + z).norm(),
    })
}

/// Geometric decomposition of `1/r - 1/(r + x1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricSeries {
    /// `terms[k-1] = -(1/r) (-x1/r)^k` for `k = 1..=order`.
    pub terms: Vec<f64>,
    /// `-(1/r) (-q)^{order+1} / (1 + q)` with `q = x1/r`.
    pub remainder: f64,
    pub exact: f64,
}

impl GeometricSeries {
    pub fn sum(&self) -> f64 {
        self.terms.iter().sum::<f64>() + self.remainder
    }
}

pub fn hydrogen_i_series(x1: f64, r: f64, order: usize) -> Result<GeometricSeries> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "plate distance must be positive, got {r}"
        )));
    }
    if !(x1 > -r) || !x1.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "x1 = {x1} must exceed -r = {}",
            -r
        )));
    }
    if order > MAX_GEOMETRIC_ORDER {
        return Err(Error::InvalidInput(format!(
            "geometric order {order} exceeds {MAX_GEOMETRIC_ORDER}"
        )));
    }
    let q = x1 / r;
    let mut terms = Vec::with_capacity(order);
    let mut pow = 1.0;
    for _ in 0..order {
        pow *= -q;
        terms.push(-pow / r);
    }
    Ok(GeometricSeries {
        terms,
        remainder: -(pow * -q) / (r + x1),
        exact: x1 / (r * (r + x1)),
    })
}

fn require_valid(mol: &Molecule, v: Vec3) -> Result<()> {
    let report = validate_molecule(mol, &PlateConfig::new(v, 1.0, 1.0)?);
    let fatal: Vec<_> = report
        .violations
        .iter()
        .filter(|x| !matches!(x, crate::model::Violation::BehindPlate { .. }))
        .collect();
    if !fatal.is_empty() {
        return Err(Error::InvalidInput(format!("molecule violates {fatal:?}")));
    }
    Ok(())
}

/// `r³`-scaled leading term of `I/2`: `-[(Σ x_i·v)² + |Σ x_i|²]/16`.
pub fn molecule_i_leading(mol: &Molecule, v: Vec3, electrons: &[Vec3]) -> Result<f64> {
    require_valid(mol, v)?;
    if electrons.len() != mol.electrons {
        return Err(Error::InvalidInput(format!(
            "{} electron positions for {} electrons",
            electrons.len(),
            mol.electrons
        )));
    }
    let s = electrons.iter().fold(Vec3::ZERO, |a, x| a + *x);
    Ok(-(s.dot(v).powi(2) + s.norm_squared()) / 16.0)
}

/// Coefficients `a_1..a_4` of `I/2 ≈ Σ a_k r^{-k}`, extracted from
/// [`molecule_interaction`] at `r0, 2 r0, 4 r0, 8 r0`.
pub fn interaction_coefficients(
    mol: &Molecule,
    v: Vec3,
    electrons: &[Vec3],
    r0: f64,
) -> Result<[f64; 4]> {
    let rs = [r0, 2.0 * r0, 4.0 * r0, 8.0 * r0];
    // unknowns b_k = a_k / r0^k so the system is well scaled
    let mut a = DMatrix::zeros(4, 4);
    let mut rhs = nalgebra::DVector::zeros(4);
    for (row, r) in rs.iter().enumerate() {
        let plate = PlateConfig::new(v, *r, 1.0)?;
        rhs[row] = 0.5 * molecule_interaction(mol, &plate, electrons)?.i;
        for k in 0..4 {
            a[(row, k)] = (r0 / r).powi(k as i32 + 1);
        }
    }
    let b = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularResolvent("coefficient extraction".into()))?;
    Ok([
        b[0] * r0,
        b[1] * r0 * r0,
        b[2] * r0.powi(3),
        b[3] * r0.powi(4),
    ])
}

/// Breakdown of `<ψ, (I/2) ψ>` for a one-electron state.
///
/// With `q = x1/r` the image interaction is
/// `m [ (1/4)(1/r - 1/(r + x1)) + (1/|2 r e1 + x| - 1/(2r)) ]`.
/// The first bracket is expanded geometrically through `q^5`, the second is
/// the far term (Newton's theorem makes it exponentially small for a
/// spherical density).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationI {
    pub r: f64,
    pub m: f64,
    /// Contribution of `q^k`, `k = 1..=5`.
    pub series_terms: Vec<f64>,
    pub series: f64,
    pub far_term: f64,
    /// Remainder of the geometric expansion, when the density allows it.
    pub remainder: Option<f64>,
    /// Reported value of `<ψ, (I/2) ψ>`.
    pub value: f64,
    /// Value for the cut-off state minus the value for the uncut one.
    pub cutoff_discrepancy: Option<f64>,
    pub quad_error: f64,
}

/// `(1/2) ∫_{-1}^{1} (t u)^6 / (1 + t u) du` for `|t| < 1`.
fn angular_remainder(t: f64) -> f64 {
    static GL: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    let gl = GL.get_or_init(|| GaussLegendre::new(32));
    0.5 * gl.integrate(-1.0, 1.0, |u| (t * u).powi(6) / (1.0 + t * u))
}

/// `<ψ, (I/2) ψ>` by quadrature.
///
/// Analytic states must be s-type; for the uncut orbital the geometric
/// remainder is not integrable at the plate, so the value is the series plus
/// the far term and the cut-off correction is reported separately. Grid
/// states need `plate.v = e1` and the grid's plate distance.
pub fn expectation_i(psi: &WaveFn, r: f64, plate: &PlateConfig) -> Result<ExpectationI> {
    if (plate.r - r).abs() > 1e-12 * r {
        return Err(Error::InvalidGeometry(format!(
            "plate distance {} does not match r = {r}",
            plate.r
        )));
    }
    match psi {
        WaveFn::Analytic(o) => expectation_analytic(o, r, plate.m),
        WaveFn::Grid(g) => {
            if (plate.v - Vec3::E1).norm() > 1e-12 {
                return Err(Error::InvalidInput(
                    "grid states are axisymmetric about e1".into(),
                ));
            }
            expectation_grid(g, r, plate.m)
        }
    }
}

fn expectation_analytic(o: &Orbital, r: f64, m: f64) -> Result<ExpectationI> {
    if !o.is_spherical() {
        return Err(Error::InvalidInput(
            "expectation of I needs an s-type state".into(),
        ));
    }
    let mut quad_error = 0.0;
    let mut series_terms = Vec::with_capacity(MAX_GEOMETRIC_ORDER);
    for k in 1..=MAX_GEOMETRIC_ORDER as u32 {
        let mk = o.axial_moment(k)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        series_terms.push(-m / (4.0 * r) * sign * mk / r.powi(k as i32));
    }
    let series: f64 = series_terms.iter().sum();
    // Newton: the shell of radius s sees min(1/s, 1/(2r)) from the far image
    let far = o.radial_expectation(&[2.0 * r], |s| {
        if s > 2.0 * r {
            1.0 / s - 0.5 / r
        } else {
            0.0
        }
    })?;
    quad_error += far.error;
    let far_term = m * far.require(QUAD_TOL)?;
    let (remainder, cutoff_discrepancy) = match o.support() {
        Some(support) if support < r => {
            let rem = o.radial_expectation(&[], |s| angular_remainder(s / r))?;
            quad_error += rem.error;
            (Some(-m / (4.0 * r) * rem.require(QUAD_TOL)?), None)
        }
        Some(_) => (None, None),
        None => {
            let cut = o.with_cutoff(r)?;
            let c = expectation_analytic(&cut, r, m)?;
            quad_error += c.quad_error;
            (None, Some(c.value - (series + far_term)))
        }
    };
    Ok(ExpectationI {
        r,
        m,
        series,
        value: series + far_term + remainder.unwrap_or(0.0),
        series_terms,
        far_term,
        remainder,
        cutoff_discrepancy,
        quad_error,
    })
}

fn expectation_grid(g: &GridFn, r: f64, m: f64) -> Result<ExpectationI> {
    if (g.grid.r - r).abs() > 1e-12 * r {
        return Err(Error::InvalidGeometry(format!(
            "grid built for r = {}, asked for r = {r}",
            g.grid.r
        )));
    }
    let series_terms: Vec<f64> = (1..=MAX_GEOMETRIC_ORDER as i32)
        .map(|k| {
            let mk = g.integrate(|xi, _| (xi / r).powi(k));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            -m / (4.0 * r) * sign * mk
        })
        .collect();
    let series = series_terms.iter().sum();
    let far_term =
        m * g.integrate(|xi, rho| 1.0 / ((2.0 * r + xi).powi(2) + rho * rho).sqrt() - 0.5 / r);
    let value = g.integrate(|xi, rho| hydrogen_image_axisym(xi, rho, r, m));
    Ok(ExpectationI {
        r,
        m,
        series_terms,
        series,
        far_term,
        remainder: Some(value - series - far_term),
        value,
        cutoff_discrepancy: None,
        quad_error: 0.0,
    })
}

/// `∫ |ψ|² / |2 r e1 + x|` for an s-type state, by Newton's theorem.
pub fn newton_mirror_term(o: &Orbital, r: f64) -> Result<f64> {
    o.radial_expectation(&[2.0 * r], |s| 1.0 / s.max(2.0 * r))?
        .require(QUAD_TOL)
}

/// `<ψ, 1/(r + x1) ψ>` for an s-type state supported in `|x| < r`, from the
/// shell average `(1/2s) ln((r+s)/(r-s))`.
pub fn shell_average_inverse(o: &Orbital, r: f64) -> Result<f64> {
    match o.support() {
        Some(s) if s < r => {}
        _ => {
            return Err(Error::InvalidInput(
                "shell average needs support inside |x| < r".into(),
            ))
        }
    }
    o.radial_expectation(&[], |s| {
        if s < 1e-8 * r {
            1.0 / r
        } else {
            (2.0 * s / (r - s)).ln_1p() / (2.0 * s)
        }
    })?
    .require(QUAD_TOL)
}

/// Orthonormal basis of a ground-state eigenspace, stored through the
/// matrix elements of the total electron coordinate `S = Σ x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundBasis {
    /// `<ψ_a|ψ_b>`.
    pub gram: DMatrix<f64>,
    /// `second[a][b] = <ψ_a| S S^T |ψ_b>`.
    pub second: Vec<Vec<Matrix3<f64>>>,
}

impl GroundBasis {
    /// From precomputed tables; checks orthonormality and symmetry.
    pub fn from_tables(gram: DMatrix<f64>, second: Vec<Vec<Matrix3<f64>>>) -> Result<Self> {
        let n = gram.nrows();
        if n == 0
            || gram.ncols() != n
            || second.len() != n
            || second.iter().any(|row| row.len() != n)
        {
            return Err(Error::InvalidInput(
                "basis tables have inconsistent sizes".into(),
            ));
        }
        let deviation = (&gram - DMatrix::identity(n, n)).amax();
        if deviation > BASIS_TOL || !deviation.is_finite() {
            return Err(Error::NotOrthonormal { deviation });
        }
        for a in 0..n {
            for b in 0..n {
                let asym = (second[a][b] - second[b][a].transpose()).amax();
                let scale = 1.0 + second[a][b].amax();
                if asym > 1e-8 * scale || second[a][b].iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "moment table ({a},{b}) is not Hermitian"
                    )));
                }
            }
        }
        Ok(GroundBasis { gram, second })
    }

    /// Basis of product states: state `a` puts electron `i` in `states[a][i]`.
    pub fn product_states(states: &[Vec<Orbital>]) -> Result<Self> {
        let n = states.len();
        let ne = states.first().map(Vec::len).unwrap_or(0);
        if n == 0 || ne == 0 || states.iter().any(|s| s.len() != ne) {
            return Err(Error::InvalidInput(
                "product states need equal, nonzero electron counts".into(),
            ));
        }
        let mut gram = DMatrix::zeros(n, n);
        let mut second = vec![vec![Matrix3::zeros(); n]; n];
        for a in 0..n {
            for b in a..n {
                let t: Vec<MomentTensor> = (0..ne)
                    .map(|i| states[a][i].moment_tensor(&states[b][i]))
                    .collect::<Result<_>>()?;
                let overlap_except = |skip: &[usize]| -> f64 {
                    (0..ne)
                        .filter(|k| !skip.contains(k))
                        .map(|k| t[k].overlap)
                        .product()
                };
                let mut s = Matrix3::zeros();
                for i in 0..ne {
                    s += Matrix3::from_fn(|p, q| t[i].second[p][q]) * overlap_except(&[i]);
                    for j in 0..ne {
                        if i != j {
                            let d1 = Vector3::from(t[i].first);
                            let d2 = Vector3::from(t[j].first);
                            s += d1 * d2.transpose() * overlap_except(&[i, j]);
                        }
                    }
                }
                gram[(a, b)] = overlap_except(&[]);
                gram[(b, a)] = gram[(a, b)];
                second[a][b] = s;
                second[b][a] = s.transpose();
            }
        }
        GroundBasis::from_tables(gram, second)
    }

    /// One-electron basis.
    pub fn from_orbitals(orbitals: &[Orbital]) -> Result<Self> {
        let states: Vec<Vec<Orbital>> = orbitals.iter().map(|o| vec![*o]).collect();
        GroundBasis::product_states(&states)
    }

    /// The hydrogen ground state `ζ`.
    pub fn hydrogen() -> Result<Self> {
        GroundBasis::from_orbitals(&[Orbital::hydrogen_1s()])
    }

    /// Helium trial state `ζ_2 ⊗ ζ_2`.
    pub fn helium() -> Result<Self> {
        let z2 = Orbital::hydrogenic_1s(2.0)?;
        GroundBasis::product_states(&[vec![z2, z2]])
    }

    /// One-electron grid ground state, axisymmetric about `e1`.
    pub fn from_grid(g: &GridFn) -> Result<Self> {
        let gram = DMatrix::from_element(1, 1, g.norm_sq());
        let xx = g.integrate(|xi, _| xi * xi);
        let yy = 0.5 * g.integrate(|_, rho| rho * rho);
        let s = Matrix3::from_diagonal(&Vector3::new(xx, yy, yy));
        GroundBasis::from_tables(gram, vec![vec![s]])
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// Basis `{R ψ_a}` for a rotation `R`.
    pub fn rotated(&self, rot: &Matrix3<f64>) -> Result<Self> {
        let dev = (rot.transpose() * rot - Matrix3::identity()).amax();
        if dev > 1e-12 || (rot.determinant() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("not a rotation matrix".into()));
        }
        let second = self
            .second
            .iter()
            .map(|row| row.iter().map(|s| rot * s * rot.transpose()).collect())
            .collect();
        Ok(GroundBasis {
            gram: self.gram.clone(),
            second,
        })
    }
}

/// Matrix `<ψ_a| ((S·v)² + |S|²)/16 |ψ_b>`.
pub fn cv_matrix(basis: &GroundBasis, v: Vec3) -> Result<DMatrix<f64>> {
    v.require_unit()?;
    let vv = Vector3::new(v.x, v.y, v.z);
    let n = basis.dim();
    Ok(DMatrix::from_fn(n, n, |a, b| {
        let s = &basis.second[a][b];
        ((vv.transpose() * s * vv)[(0, 0)] + s.trace()) / 16.0
    }))
}

/// `C(v)`: largest eigenvalue of [`cv_matrix`].
pub fn compute_cv(basis: &GroundBasis, v: Vec3) -> Result<f64> {
    let m = cv_matrix(basis, v)?;
    let sym = 0.5 * (&m + m.transpose());
    let c = SymmetricEigen::new(sym).eigenvalues.max();
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("C(v) = {c} is not positive")));
    }
    Ok(c)
}

/// `<ψ, O_v ψ>` on a grid, as a check of [`GroundBasis::from_grid`].
pub fn grid_cv(g: &GridFn, v: Vec3) -> Result<f64> {
    compute_cv(&GroundBasis::from_grid(g)?, v)
}

/// Spherical average `(4π)^{-1} ∫ f(ω) dω` used in tests of rotation
/// invariance.
#[doc(hidden)]
pub fn sphere_average<F: Fn(Vec3) -> f64>(n: usize, f: F) -> f64 {
    let gl = GaussLegendre::new(n);
    let mut acc = 0.0;
    for (ct, w) in gl.nodes.iter().zip(&gl.weights) {
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..2 * n {
            let p = PI * k as f64 / n as f64;
            acc += w * f(Vec3::new(st * p.cos(), st * p.sin(), *ct));
        }
    }
    acc / (4.0 * n as f64)
}

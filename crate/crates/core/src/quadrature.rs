//! Gauss rules and composite integrators used by the analytic-orbital paths.
//!
//! Gauss–Laguerre weights span hundreds of orders of magnitude at 200 nodes, so
//! they are stored as logarithms and combined with `exp(t)` only when an
//! integrand without the built-in `e^{-t}` factor is integrated.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Default node count of the radial exponential-weight rule.
pub const LAGUERRE_NODES: usize = 200;
/// Default node count of the angular and panel rule.
pub const LEGENDRE_NODES: usize = 64;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes ascending.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// `∫_a^b f` with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// `∫_a^b f` on `panels` equal sub-intervals.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Laguerre rule for `∫_0^∞ g(t) e^{-t} dt`.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Nodes from the Jacobi matrix, polished by Newton on the orthonormal
    /// recurrence; weights are `1 / Σ_k p_k(t)^2`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Laguerre rule needs at least one node");
        let jac = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * i as f64 + 1.0
            } else if i + 1 == j || j + 1 == i {
                i.max(j) as f64
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jac)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(|a, b| a.total_cmp(b));
        let mut log_weights = Vec::with_capacity(n);
        for t in nodes.iter_mut() {
            for _ in 0..3 {
                let (p, dp, _) = laguerre_orthonormal(n, *t);
                if dp == 0.0 {
                    break;
                }
                let step = p / dp;
                *t -= step;
                if step.abs() <= 1e-15 * t.abs() {
                    break;
                }
            }
            log_weights.push(-laguerre_orthonormal(n, *t).2);
        }
        GaussLaguerre { nodes, log_weights }
    }

    /// `Σ w_i g(t_i) ≈ ∫_0^∞ g(t) e^{-t} dt`.
    pub fn integrate_weighted<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&t, &lw)| lw.exp() * g(t))
            .sum()
    }

    /// `∫_a^∞ f(x) dx` for `f` decaying like `e^{-rate·x}`.
    pub fn integrate_tail<F: FnMut(f64) -> f64>(&self, a: f64, rate: f64, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&t, &lw)| {
                let v = f(a + t / rate);
                if v == 0.0 {
                    0.0
                } else {
                    (lw + t).exp() * v
                }
            })
            .sum::<f64>()
            / rate
    }
}

/// Returns `(p_n(t), p_n'(t), ln Σ_{k<n} p_k(t)^2)` for the orthonormal
/// Laguerre polynomials, rescaling on the fly to avoid overflow. The first two
/// entries share an arbitrary common scale.
fn laguerre_orthonormal(n: usize, t: f64) -> (f64, f64, f64) {
    let (mut pm, mut p) = (0.0f64, 1.0f64);
    let (mut dpm, mut dp) = (0.0f64, 0.0f64);
    let mut sum = 0.0f64;
    let mut log_scale = 0.0f64;
    for k in 0..n {
        sum += p * p;
        let kf = k as f64;
        let a = 2.0 * kf + 1.0;
        let next = ((t - a) * p - kf * pm) / (kf + 1.0);
        let dnext = ((t - a) * dp + p - kf * dpm) / (kf + 1.0);
        pm = p;
        p = next;
        dpm = dp;
        dp = dnext;
        let big = p.abs().max(pm.abs());
        if big > 1e100 {
            let s = 1.0 / big;
            p *= s;
            pm *= s;
            dp *= s;
            dpm *= s;
            sum *= s * s;
            log_scale += 2.0 * big.ln();
        }
    }
    (p, dp, sum.ln() + log_scale)
}

/// Result of an integral evaluated twice at different resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checked {
    pub value: f64,
    /// `|fine - coarse|`, used as the error estimate.
    pub error: f64,
}

impl Checked {
    pub fn require(self, tolerance: f64) -> Result<f64> {
        if self.error <= tolerance && self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                estimate: self.error,
                tolerance,
            })
        }
    }
}

/// Piecewise Gauss–Legendre on `breaks` plus an optional exponentially decaying
/// tail beyond the last break. Evaluated at `panels` and `2·panels` per piece.
pub struct Radial<'a> {
    pub legendre: &'a GaussLegendre,
    pub laguerre: &'a GaussLaguerre,
    pub breaks: Vec<f64>,
    /// Decay rate of the integrand beyond the last break, or `None` to stop there.
    pub tail_rate: Option<f64>,
    pub panels: usize,
}

impl Radial<'_> {
    fn eval<F: FnMut(f64) -> f64>(&self, panels: usize, f: &mut F) -> f64 {
        let mut s = 0.0;
        for w in self.breaks.windows(2) {
            if w[1] > w[0] {
                s += self.legendre.composite(w[0], w[1], panels, &mut *f);
            }
        }
        if let (Some(rate), Some(&end)) = (self.tail_rate, self.breaks.last()) {
            s += self.laguerre.integrate_tail(end, rate, &mut *f);
        }
        s
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> Checked {
        let coarse = self.eval(self.panels, &mut f);
        let fine = self.eval(2 * self.panels, &mut f);
        Checked {
            value: fine,
            error: (fine - coarse).abs(),
        }
    }
}

/// Shared default rules, built once per process.
pub fn default_rules() -> &'static (GaussLegendre, GaussLaguerre) {
    static RULES: std::sync::OnceLock<(GaussLegendre, GaussLaguerre)> = std::sync::OnceLock::new();
    RULES.get_or_init(|| {
        (
            GaussLegendre::new(LEGENDRE_NODES),
            GaussLaguerre::new(LAGUERRE_NODES),
        )
    })
}

/// `n!` as a float (exact through 22!).
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

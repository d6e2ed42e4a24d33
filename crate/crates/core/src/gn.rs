//! Centered generalized normal law `GN(β, 0, λ)` with density
//! `β / (2Γ(1/β)λ) · exp(−(|z|/λ)^β)`.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_q, gamma_tail_inverse, ln_gamma, upper_gamma};

/// Shape range covered by the self-dispersion table.
pub const DISPERSION_RANGE: (f64, f64) = (0.2, 10.0);
pub const DISPERSION_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnParams {
    /// β
    pub shape: f64,
    /// λ
    pub scale: f64,
}

impl GnParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("GN shape {shape}, scale {scale}")));
        }
        Ok(Self { shape, scale })
    }

    /// The Gaussian member with unit variance, `(2, √2)`.
    pub fn standard_normal() -> Self {
        Self { shape: 2.0, scale: std::f64::consts::SQRT_2 }
    }

    /// `ln(β / (2Γ(1/β)λ))`
    pub fn log_norm(&self) -> f64 {
        (self.shape / (2.0 * self.scale)).ln() - ln_gamma(1.0 / self.shape)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        (self.log_norm() - (z.abs() / self.scale).powf(self.shape)).exp()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        self.log_norm() - (z.abs() / self.scale).powf(self.shape)
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z.is_nan() {
            return f64::NAN;
        }
        let tail = 0.5 * gamma_q(1.0 / self.shape, (z.abs() / self.scale).powf(self.shape));
        if z >= 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        let s = 1.0 / self.shape;
        let q = p.min(1.0 - p);
        // (|z|/λ)^β solves Q(s, y) = 2q, or P(s, y) = 1 − 2q near the centre
        let y = if q < 0.25 {
            gamma_tail_inverse(s, 2.0 * q, true)
        } else {
            gamma_tail_inverse(s, (0.5 - q) * 2.0, false)
        };
        let z = self.scale * y.powf(s);
        Ok(if p < 0.5 { -z } else { z })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = Gamma::new(1.0 / self.shape, 1.0).expect("valid shape").sample(rng);
        let mag = self.scale * g.powf(1.0 / self.shape);
        if rng.gen::<bool>() {
            mag
        } else {
            -mag
        }
    }

    /// `λ²Γ(3/β)/Γ(1/β)`
    pub fn variance(&self) -> f64 {
        self.scale.powi(2) * (ln_gamma(3.0 / self.shape) - ln_gamma(1.0 / self.shape)).exp()
    }

    /// `E|Z − z|`
    pub fn mean_abs_deviation(&self, z: f64) -> f64 {
        let b = self.shape;
        let u = z / self.scale;
        let au = u.abs();
        let std = GnParams { shape: b, scale: 1.0 };
        let upper = upper_gamma(2.0 / b, au.powf(b));
        self.scale * (u * (2.0 * std.cdf(u) - 1.0) + (upper.ln() - ln_gamma(1.0 / b)).exp())
    }

    /// `E|Z − Z′|` from the interpolated unit-scale table.
    pub fn mean_abs_difference(&self) -> Result<f64> {
        Ok(self.scale * unit_dispersion(self.shape)?)
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// `E|U − U′|` for `U ~ GN(β, 0, 1)` by quadrature of `4∫₀^∞ F(1 − F) dz`,
/// integrated in `t = ln z`.
pub fn unit_dispersion_quadrature(beta: f64) -> f64 {
    let s = 1.0 / beta;
    let integrand = |t: f64| {
        let z = t.exp();
        let half_q = 0.5 * gamma_q(s, z.powf(beta));
        z * half_q * (1.0 - half_q)
    };
    let t_lo: f64 = -30.0;
    let t_hi = (800.0f64).ln() / beta;
    // below t_lo the integrand is z/4 to within rounding
    let head = 0.25 * t_lo.exp();
    let mut total = head;
    let pieces = 64;
    let h = (t_hi - t_lo) / pieces as f64;
    // absolute tolerance scaled by a coarse estimate of the integral
    let coarse: f64 = (0..=4 * pieces).map(|k| integrand(t_lo + k as f64 * h / 4.0)).sum::<f64>() * h / 4.0;
    let tol = 1e-14 * coarse / pieces as f64;
    for k in 0..pieces {
        let a = t_lo + k as f64 * h;
        total += adaptive_simpson(&integrand, a, a + h, tol);
    }
    4.0 * total
}

struct DispersionTable {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

fn table() -> &'static DispersionTable {
    static TABLE: OnceLock<DispersionTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (lo, hi) = (DISPERSION_RANGE.0.ln(), DISPERSION_RANGE.1.ln());
        let x: Vec<f64> = (0..DISPERSION_NODES)
            .map(|k| lo + (hi - lo) * k as f64 / (DISPERSION_NODES - 1) as f64)
            .collect();
        let log_d = |t: f64| unit_dispersion_quadrature(t.exp()).ln();
        let y: Vec<f64> = x.iter().map(|&t| log_d(t)).collect();
        // fourth-order central differences of the quadrature itself
        let h = 1e-3;
        let derivs: Vec<f64> = x
            .iter()
            .map(|&t| (8.0 * (log_d(t + h) - log_d(t - h)) - (log_d(t + 2.0 * h) - log_d(t - 2.0 * h))) / (12.0 * h))
            .collect();
        let slope = limit_monotone(&x, &y, derivs);
        DispersionTable { x, y, slope }
    })
}

/// Fritsch–Carlson limiting of node derivatives so the piecewise-cubic
/// Hermite interpolant stays monotone wherever the data are.
fn limit_monotone(x: &[f64], y: &[f64], mut m: Vec<f64>) -> Vec<f64> {
    let n = x.len();
    let secant: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    for k in 0..n - 1 {
        if m[k] * secant[k] < 0.0 {
            m[k] = 0.0;
        }
        if m[k + 1] * secant[k] < 0.0 {
            m[k + 1] = 0.0;
        }
    }
    for k in 0..n - 1 {
        if secant[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / secant[k];
        let b = m[k + 1] / secant[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[k] = t * a * secant[k];
            m[k + 1] = t * b * secant[k];
        }
    }
    m
}

/// `E|U − U′|` for unit scale, interpolated in `(ln β, ln E|U − U′|)`.
pub fn unit_dispersion(beta: f64) -> Result<f64> {
    let (lo, hi) = DISPERSION_RANGE;
    if !(beta >= lo && beta <= hi) {
        return Err(Error::OutsideTable { beta, lo, hi });
    }
    let t = table();
    let xq = beta.ln();
    let k = t.x.partition_point(|&v| v <= xq).clamp(1, t.x.len() - 1) - 1;
    let h = t.x[k + 1] - t.x[k];
    let s = (xq - t.x[k]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let y = (2.0 * s3 - 3.0 * s2 + 1.0) * t.y[k]
        + (s3 - 2.0 * s2 + s) * h * t.slope[k]
        + (-2.0 * s3 + 3.0 * s2) * t.y[k + 1]
        + (s3 - s2) * h * t.slope[k + 1];
    Ok(y.exp())
}

/// Precomputed per-law quantities for repeated distance evaluations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GnLaw {
    params: GnParams,
    log_norm: f64,
    log_scale: f64,
}

impl GnLaw {
    pub(crate) fn new(params: GnParams) -> Self {
        Self { params, log_norm: params.log_norm(), log_scale: params.scale.ln() }
    }

    /// `(|z|/λ)^β` at `z = e^t`
    fn power(&self, t: f64) -> f64 {
        (self.params.shape * (t - self.log_scale)).exp()
    }
}

/// `sup_z |F_a(z) − F_b(z)|` between two centered GN laws.
pub fn kolmogorov_distance(a: &GnParams, b: &GnParams) -> f64 {
    kolmogorov_between(&GnLaw::new(*a), &GnLaw::new(*b))
}

/// The supremum is attained where the densities cross. On `z > 0`, with
/// `t = ln z`, the log-density difference `φ(t)` has at most one
/// stationary point, so each side of it holds at most one crossing.
pub(crate) fn kolmogorov_between(a: &GnLaw, b: &GnLaw) -> f64 {
    let (ba, bb) = (a.params.shape, b.params.shape);
    let c = a.log_norm - b.log_norm;
    let phi = |t: f64| c - a.power(t) + b.power(t);
    let sign_inf = if ba != bb {
        if bb > ba {
            1.0
        } else {
            -1.0
        }
    } else if a.params.scale != b.params.scale {
        (a.params.scale - b.params.scale).signum()
    } else {
        return 0.0;
    };

    let mut roots: Vec<f64> = Vec::with_capacity(2);
    let mut bisect = |mut lo: f64, mut hi: f64| {
        let s_lo = phi(lo).signum();
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if phi(mid).signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * (1.0 + lo.abs()) {
                break;
            }
        }
        roots.push(0.5 * (lo + hi));
    };

    // outward bracket from `from` until φ takes the sign `target`
    let reach = |from: f64, dir: f64, target: f64| -> Option<f64> {
        let mut step = 1.0;
        while step < 4096.0 {
            let t = from + dir * step;
            if phi(t).signum() == target {
                return Some(t);
            }
            step *= 2.0;
        }
        None
    };

    let sign_neg_inf = c.signum();
    if ba != bb {
        let t_star = ((bb.ln() - ba.ln()) + ba * a.log_scale - bb * b.log_scale) / (ba - bb);
        let s_star = phi(t_star).signum();
        if s_star != 0.0 && sign_neg_inf != 0.0 && s_star != sign_neg_inf {
            if let Some(lo) = reach(t_star, -1.0, sign_neg_inf) {
                bisect(lo, t_star);
            }
        }
        if s_star != 0.0 && s_star != sign_inf {
            if let Some(hi) = reach(t_star, 1.0, sign_inf) {
                bisect(t_star, hi);
            }
        }
        if s_star == 0.0 {
            roots.push(t_star);
        }
    } else if sign_neg_inf != 0.0 && sign_neg_inf != sign_inf {
        // equal shapes: φ is monotone in t
        let mut lo = 0.0;
        let mut hi = 0.0;
        while phi(lo).signum() != sign_neg_inf && lo > -4096.0 {
            lo -= 1.0 + lo.abs();
        }
        while phi(hi).signum() != sign_inf && hi < 4096.0 {
            hi += 1.0 + hi.abs();
        }
        bisect(lo, hi);
    }

    roots
        .into_iter()
        .map(|t| {
            let z = t.exp();
            (a.params.cdf(z) - b.params.cdf(z)).abs()
        })
        .fold(0.0, f64::max)
}

//! Special functions used by the generalized normal law and the Gaussian kind.
//!
//! The incomplete gamma routines follow the usual split: a power series
//! below `x < s + 1` and a modified Lentz continued fraction above it.
//! Both are iterated to machine precision.

pub use statrs::function::gamma::{gamma, ln_gamma};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

fn log_prefactor(s: f64, x: f64) -> f64 {
    s * x.ln() - x - ln_gamma(s)
}

fn lower_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut a = s;
    for _ in 0..MAX_ITER {
        a += 1.0;
        term *= x / a;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * log_prefactor(s, x).exp()
}

fn upper_fraction(s: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    log_prefactor(s, x).exp() * h
}

/// Regularized lower incomplete gamma `P(s, x)`.
pub fn gamma_p(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < s + 1.0 {
        lower_series(s, x).min(1.0)
    } else {
        (1.0 - upper_fraction(s, x)).max(0.0)
    }
}

/// Regularized upper incomplete gamma `Q(s, x) = 1 - P(s, x)`.
pub fn gamma_q(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < s + 1.0 {
        (1.0 - lower_series(s, x)).max(0.0)
    } else {
        upper_fraction(s, x).min(1.0)
    }
}

/// Non-regularized upper incomplete gamma `Γ(s, x)`.
pub fn upper_gamma(s: f64, x: f64) -> f64 {
    gamma_q(s, x) * gamma(s)
}

/// Solves `P(s, y) = p` (when `upper` is false) or `Q(s, y) = p` (when true)
/// for `y ≥ 0`. Solving on the smaller tail keeps relative accuracy near 1.
pub fn gamma_tail_inverse(s: f64, p: f64, upper: bool) -> f64 {
    if p <= 0.0 {
        return if upper { f64::INFINITY } else { 0.0 };
    }
    if p >= 1.0 {
        return if upper { 0.0 } else { f64::INFINITY };
    }
    // increasing in u = ln y on both branches, compared on the log scale
    let target = |u: f64| {
        let y = u.exp();
        if upper {
            p.ln() - gamma_q(s, y).ln()
        } else {
            gamma_p(s, y).ln() - p.ln()
        }
    };
    let lg = ln_gamma(s);
    // P(s, y) ≈ y^s / Γ(s + 1) for small y
    let mut u = if upper { s.max(1.0).ln() } else { ((p.ln() + ln_gamma(s + 1.0)) / s).min(s.max(1.0).ln()) };
    let (mut lo, mut hi) = (u, u);
    let mut step = 1.0;
    while target(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    while target(hi) < 0.0 {
        hi += step;
        step *= 2.0;
        if hi > 700.0 {
            return f64::INFINITY;
        }
    }
    u = u.clamp(lo, hi);
    for _ in 0..200 {
        let g = target(u);
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let y = u.exp();
        // d/du ln P = y f(y) / P, d/du (−ln Q) = y f(y) / Q
        let tail = if upper { gamma_q(s, y) } else { gamma_p(s, y) };
        let slope = (s * u - y - lg).exp() / tail;
        let mut next = u - g / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-15 * (1.0 + u.abs()) || hi - lo <= 1e-15 * (1.0 + u.abs()) {
            u = next;
            break;
        }
        u = next;
    }
    u.exp()
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    let tail = 0.5 * gamma_q(0.5, 0.5 * z * z);
    if z >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p.min(1.0 - p);
    // Φ(−|z|) = Q(1/2, z²/2) / 2
    let y = if q < 0.25 { gamma_tail_inverse(0.5, 2.0 * q, true) } else { gamma_tail_inverse(0.5, 1.0 - 2.0 * q, false) };
    let z = (2.0 * y).sqrt();
    if p < 0.5 {
        -z
    } else {
        z
    }
}

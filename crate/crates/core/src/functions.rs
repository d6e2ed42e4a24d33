//! Benchmark functions and uniform design sampling.
//!
//! Names: `branin`, `goldstein_price`, `beale`, `hartmann3`, `hartmann6`,
//! and the dimension-suffixed families `ackley<d>`, `rosenbrock<d>`,
//! `dixon_price<d>` (e.g. `ackley4`). Hyphens are accepted for underscores.
//!
//! Ackley uses `cos(πxᵢ)` rather than the more common `cos(2πxᵢ)`.

use std::f64::consts::{E, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HARTMANN_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
pub const HARTMANN3_A: [[f64; 3]; 4] = [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
/// Multiplied by `0.1`.
pub const HARTMANN3_P_DIGITS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [3.0, 3.0, 3.0], [5.0, 5.0, 5.0], [7.0, 7.0, 7.0]];
pub const HARTMANN3_P_SCALE: f64 = 1e-1;
pub const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
/// Multiplied by `1e-4`, which puts every centre inside `[0, 1]⁶`.
pub const HARTMANN6_P_DIGITS: [[f64; 6]; 4] = [
    [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
    [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
    [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
    [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
];
pub const HARTMANN6_P_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Branin,
    GoldsteinPrice,
    Rosenbrock,
    Ackley,
    Beale,
    DixonPrice,
    Hartmann3,
    Hartmann6,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub name: String,
    pub family: Family,
    pub domain: Vec<(f64, f64)>,
}

fn suffix_dim(name: &str, prefix: &str) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    rest.parse::<usize>().ok().filter(|&d| d >= 2)
}

impl TestFunction {
    pub fn by_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase().replace('-', "_");
        let fixed = |family, domain: Vec<(f64, f64)>| Ok(Self { name: key.clone(), family, domain });
        match key.as_str() {
            "branin" => return fixed(Family::Branin, vec![(-5.0, 10.0), (0.0, 15.0)]),
            "goldstein_price" => return fixed(Family::GoldsteinPrice, vec![(-2.0, 2.0); 2]),
            "beale" => return fixed(Family::Beale, vec![(-4.5, 4.5); 2]),
            "hartmann3" => return fixed(Family::Hartmann3, vec![(0.0, 1.0); 3]),
            "hartmann6" => return fixed(Family::Hartmann6, vec![(0.0, 1.0); 6]),
            _ => {}
        }
        if let Some(d) = suffix_dim(&key, "ackley") {
            return fixed(Family::Ackley, vec![(-32.168, 32.168); d]);
        }
        if let Some(d) = suffix_dim(&key, "rosenbrock") {
            return fixed(Family::Rosenbrock, vec![(-5.0, 10.0); d]);
        }
        if let Some(d) = suffix_dim(&key, "dixon_price") {
            return fixed(Family::DixonPrice, vec![(-10.0, 10.0); d]);
        }
        Err(Error::UnknownFunction(name.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if x.iter().zip(&self.domain).any(|(v, (lo, hi))| !(v >= lo && v <= hi)) {
            return Err(Error::OutOfDomain(format!("{} at {x:?}", self.name)));
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self.family {
            Family::Branin => branin(x),
            Family::GoldsteinPrice => goldstein_price(x),
            Family::Rosenbrock => rosenbrock(x),
            Family::Ackley => ackley(x),
            Family::Beale => beale(x),
            Family::DixonPrice => dixon_price(x),
            Family::Hartmann3 => hartmann(x, &HARTMANN3_A, &HARTMANN3_P_DIGITS, HARTMANN3_P_SCALE),
            Family::Hartmann6 => hartmann(x, &HARTMANN6_A, &HARTMANN6_P_DIGITS, HARTMANN6_P_SCALE),
        }
    }
}

pub fn eval_function(name: &str, x: &[f64]) -> Result<f64> {
    TestFunction::by_name(name)?.eval(x)
}

fn branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let t = x2 - 5.1 / (4.0 * PI * PI) * x1 * x1 + 5.0 / PI * x1 - 6.0;
    t * t + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0
}

fn goldstein_price(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let a = 1.0
        + (x1 + x2 + 1.0).powi(2)
            * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
    let b = 30.0
        + (2.0 * x1 - 3.0 * x2).powi(2)
            * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
    a * b
}

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2)).sum()
}

fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

fn beale(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (1.5 - x1 + x1 * x2).powi(2) + (2.25 - x1 + x1 * x2 * x2).powi(2) + (2.625 - x1 + x1 * x2.powi(3)).powi(2)
}

fn dixon_price(x: &[f64]) -> f64 {
    let head = (x[0] - 1.0).powi(2);
    head + x.windows(2).enumerate().map(|(k, w)| (k + 2) as f64 * (2.0 * w[1] * w[1] - w[0]).powi(2)).sum::<f64>()
}

fn hartmann<const D: usize>(x: &[f64], a: &[[f64; D]; 4], p: &[[f64; D]; 4], scale: f64) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - scale * p[i][j]).powi(2)).sum();
            HARTMANN_C[i] * (-inner).exp()
        })
        .sum::<f64>()
}

/// `n` i.i.d. uniform points on the box.
pub fn sample_design<R: Rng + ?Sized>(domain: &[(f64, f64)], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| domain.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect()).collect()
}

/// Seeded convenience wrapper around [`sample_design`].
pub fn sample_design_seeded(domain: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    sample_design(domain, n, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
}

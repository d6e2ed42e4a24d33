use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of a constant-mean GP with an anisotropic half-integer
/// Matérn covariance of smoothness `regularity + 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub mean: f64,
    pub variance: f64,
    pub lengthscales: Vec<f64>,
    pub regularity: u32,
}

impl KernelParams {
    pub fn new(mean: f64, variance: f64, lengthscales: Vec<f64>, regularity: u32) -> Result<Self> {
        let params = Self { mean, variance, lengthscales, regularity };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidParameter(format!("variance {} must be positive", self.variance)));
        }
        if self.lengthscales.is_empty() {
            return Err(Error::InvalidParameter("no lengthscales".into()));
        }
        if let Some(bad) = self.lengthscales.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!("lengthscale {bad} must be positive")));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidParameter("mean must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Scaled distance `h` between two points.
    pub fn scaled_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.lengthscales)
            .map(|((a, b), r)| {
                let t = (a - b) / r;
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Covariance without dimension checks; callers guarantee matching lengths.
    pub(crate) fn cov_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.variance * matern_correlation(self.regularity, self.scaled_distance(x, y))
    }
}

/// Half-integer Matérn correlation `κ_{p+1/2}(h)` in its polynomial times
/// exponential closed form.
pub fn matern_correlation(p: u32, h: f64) -> f64 {
    let nu = p as f64 + 0.5;
    let r = (2.0 * nu).sqrt() * h;
    match p {
        0 => (-r).exp(),
        1 => (1.0 + r) * (-r).exp(),
        2 => (1.0 + r + r * r / 3.0) * (-r).exp(),
        _ => {
            // p!/(2p)! Σ_i (p+i)!/(i!(p-i)!) (2r)^(p-i)
            let p = p as usize;
            let mut fact = vec![1.0_f64; 2 * p + 1];
            for k in 1..fact.len() {
                fact[k] = fact[k - 1] * k as f64;
            }
            let two_r = 2.0 * r;
            let mut sum = 0.0;
            for i in 0..=p {
                sum += fact[p + i] / (fact[i] * fact[p - i]) * two_r.powi((p - i) as i32);
            }
            fact[p] / fact[2 * p] * sum * (-r).exp()
        }
    }
}

/// Anisotropic Matérn covariance `σ² κ_ν(h)`.
pub fn matern_kernel(x: &[f64], y: &[f64], params: &KernelParams) -> Result<f64> {
    let d = params.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: y.len() });
    }
    Ok(params.cov_unchecked(x, y))
}

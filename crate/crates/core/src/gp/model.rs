use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{Dataset, KernelParams};
use crate::error::{Error, Result};

/// Relative nugget added to the Gram diagonal before factorization.
pub const BASE_JITTER: f64 = 1e-10;
/// Largest relative nugget tried before giving up.
pub const MAX_JITTER: f64 = 1e-6;
/// Negative posterior variances above `-NEGATIVE_VARIANCE_TOL·σ²` are clamped to zero.
pub const NEGATIVE_VARIANCE_TOL: f64 = 1e-10;

/// Kriging posterior at a single location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub sd: f64,
}

/// Intermediate quantities of a single-point kriging solve, reused by the
/// conformal thresholds and the jackknife baseline.
#[derive(Debug, Clone)]
pub(crate) struct PointSolve {
    /// `u = K⁻¹ k_*`
    pub u: DVector<f64>,
    pub mean: f64,
    /// `v = k_** − k_*ᵀ K⁻¹ k_*`, clamped at zero.
    pub var: f64,
}

/// Leave-one-out predictions at the design points.
#[derive(Debug, Clone, PartialEq)]
pub struct LooPredictions {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Standardized residuals `(Z_i − m_{n,−i}(X_i)) / σ_{n,−i}(X_i)`.
    pub residuals: Vec<f64>,
}

/// A GP conditioned on a dataset with fixed hyperparameters.
///
/// Immutable after construction; share it freely across threads.
#[derive(Debug, Clone)]
pub struct FittedGp {
    dataset: Dataset,
    params: KernelParams,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    diag_inv: DVector<f64>,
}

/// Gram matrix with a relative nugget `jitter·σ²` on the diagonal.
pub(crate) fn gram(points: &[Vec<f64>], params: &KernelParams, jitter: f64) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.variance * (1.0 + jitter);
        for j in 0..i {
            let c = params.cov_unchecked(&points[i], &points[j]);
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
    }
    k
}

/// Factorizes `K + jitter·σ²I`, escalating the nugget ×10 from
/// [`BASE_JITTER`] up to [`MAX_JITTER`].
pub(crate) fn factorize(points: &[Vec<f64>], params: &KernelParams) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let base = gram(points, params, 0.0);
    let mut jitter = BASE_JITTER;
    loop {
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] = params.variance * (1.0 + jitter);
        }
        if let Some(chol) = k.cholesky() {
            if chol.l_dirty().diagonal().iter().all(|&l| l > 0.0 && l.is_finite()) {
                return Ok((chol, jitter));
            }
        }
        if jitter >= MAX_JITTER * 0.999 {
            let condition = condition_estimate(&base);
            return Err(Error::SingularGram { condition });
        }
        jitter *= 10.0;
    }
}

fn condition_estimate(k: &DMatrix<f64>) -> f64 {
    let eig = k.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl FittedGp {
    pub fn new(dataset: Dataset, params: KernelParams) -> Result<Self> {
        params.validate()?;
        if params.dim() != dataset.dim() {
            return Err(Error::DimensionMismatch { expected: dataset.dim(), got: params.dim() });
        }
        let (chol, jitter) = factorize(dataset.points(), &params)?;
        let centered = DVector::from_iterator(dataset.len(), dataset.responses().iter().map(|z| z - params.mean));
        let alpha = chol.solve(&centered);
        let diag_inv = chol.inverse().diagonal();
        if let Some(&bad) = diag_inv.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            let l = chol.l_dirty().diagonal();
            let ratio = l.max() / l.min();
            log::warn!("non-positive diag(K⁻¹) entry {bad}");
            return Err(Error::SingularGram { condition: ratio * ratio });
        }
        Ok(Self { dataset, params, jitter, chol, alpha, diag_inv })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// Relative nugget actually used in the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    pub fn chol(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    /// `K⁻¹ (z − m·1)`
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// `diag(K⁻¹)`
    pub fn diag_inv(&self) -> &DVector<f64> {
        &self.diag_inv
    }

    /// Prior variance at any location, including the nugget.
    pub fn prior_variance(&self) -> f64 {
        self.params.variance * (1.0 + self.jitter)
    }

    /// Index of the design point equal to `x`, if any.
    pub fn design_index(&self, x: &[f64]) -> Option<usize> {
        self.dataset.points().iter().position(|p| p.as_slice() == x)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Cross-covariance vector `k_*` between `x` and the design.
    pub fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.dataset.points().iter().map(|p| self.params.cov_unchecked(p, x)),
        )
    }

    pub(crate) fn solve_point(&self, x: &[f64]) -> Result<PointSolve> {
        self.check_dim(x)?;
        let k_star = self.cross_cov(x);
        let u = self.chol.solve(&k_star);
        let mean = self.params.mean + k_star.dot(&self.alpha);
        let raw = self.prior_variance() - k_star.dot(&u);
        let var = if raw >= 0.0 {
            raw
        } else if raw > -NEGATIVE_VARIANCE_TOL * self.params.variance {
            0.0
        } else {
            return Err(Error::NegativeVariance { variance: raw });
        };
        Ok(PointSolve { u, mean, var })
    }

    /// Kriging mean and standard deviation at `x`. Design points return the
    /// observed value with zero deviation.
    pub fn posterior(&self, x: &[f64]) -> Result<Posterior> {
        self.check_dim(x)?;
        if let Some(i) = self.design_index(x) {
            return Ok(Posterior { mean: self.dataset.responses()[i], sd: 0.0 });
        }
        let s = self.solve_point(x)?;
        Ok(Posterior { mean: s.mean, sd: s.var.sqrt() })
    }

    /// Closed-form leave-one-out means, deviations and standardized residuals.
    pub fn loo(&self) -> Result<LooPredictions> {
        let n = self.len();
        if n < 3 {
            return Err(Error::InvalidDataset(format!("leave-one-out needs n >= 3, got {n}")));
        }
        let z = self.dataset.responses();
        let mut means = Vec::with_capacity(n);
        let mut sds = Vec::with_capacity(n);
        let mut residuals = Vec::with_capacity(n);
        for i in 0..n {
            let kbar = self.diag_inv[i];
            let w = self.alpha[i];
            means.push(z[i] - w / kbar);
            sds.push(1.0 / kbar.sqrt());
            residuals.push(w / kbar.sqrt());
        }
        Ok(LooPredictions { means, sds, residuals })
    }

    /// Standardized leave-one-out residuals `R_{n,−i}`.
    pub fn loo_residuals(&self) -> Result<Vec<f64>> {
        Ok(self.loo()?.residuals)
    }

    /// Standardized prediction error with the zero-deviation convention.
    pub fn standardized_residual(&self, x: &[f64], value: f64) -> Result<f64> {
        let post = self.posterior(x)?;
        if post.sd == 0.0 {
            Ok(0.0)
        } else {
            Ok((value - post.mean) / post.sd)
        }
    }
}

//! Gaussian-process interpolation: Matérn kernels, maximum-likelihood
//! fitting, kriging prediction and closed-form leave-one-out quantities.

mod dataset;
mod fit;
mod kernel;
pub(crate) mod model;

pub use dataset::Dataset;
pub use fit::{fit_ml, profile_likelihood, profiled_params, MlFit, Profile, ML_RESTARTS};
pub use kernel::{matern_correlation, matern_kernel, KernelParams};
pub use model::{FittedGp, LooPredictions, Posterior, BASE_JITTER, MAX_JITTER};

//! Calibrated predictive distributions for Gaussian-process interpolation.
//!
//! Two post-hoc constructions sit on top of a kriging model:
//!
//! * [`cps`]: a conformal predictive system whose stepwise CDF jumps at
//!   closed-form thresholds derived from leave-one-out algebra;
//! * [`bcr`]: a generalized-normal law for standardized leave-one-out
//!   residuals, with parameters chosen from an MCMC posterior.
//!
//! [`metrics`] scores predictive families on an independent test design
//! (coverage, randomized PIT, KS–PIT, IAE, CRPS, SCRPS) and
//! [`experiment`] runs the repetition harness over the benchmark
//! functions in [`functions`].

pub mod baselines;
pub mod bcr;
pub mod cps;
pub mod error;
pub mod experiment;
pub mod functions;
pub mod gn;
pub mod gp;
pub mod metrics;
pub mod optim;
pub mod oracles;
pub mod predictive;
pub mod report;
pub mod seeds;
pub mod special;

pub use error::{Error, Result};
pub use gp::{Dataset, FittedGp, KernelParams, Posterior};
pub use predictive::{Predictive, PredictionInterval};

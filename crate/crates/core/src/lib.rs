//! Relative likelihood-ratio estimation in a Gaussian RKHS.
//!
//! Given a stream of i.i.d. pairs `(x_t ~ p, x'_t ~ q)`, the estimators in this
//! crate approximate the relative likelihood-ratio
//!
//! ```text
//! r^α(x) = q(x) / ((1 - α) p(x) + α q(x))
//! ```
//!
//! by minimizing the Pearson-divergence risk over a reproducing kernel Hilbert
//! space. Two estimators are provided:
//!
//! - [`olre`]: the online estimator. Functional stochastic gradient descent
//!   along a decreasing regularization path; the dictionary grows by the two
//!   new observations at every step.
//! - [`rulsif`]: the offline closed-form baseline with a finite random
//!   dictionary and a Euclidean penalty, plus k-fold cross-validation used for
//!   kernel bandwidth selection.
//!
//! [`synthetic`] ships the benchmark scenarios with analytic densities and
//! closed-form ratios, and [`eval`] turns them into reproducible Monte-Carlo
//! trials scored by the `L²(p^α)` error.
//!
//! The crate is `no_std` and only needs `alloc`. All transcendental functions
//! go through `libm` so trajectories are bit-identical across platforms that
//! share the same seed.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod eval;
pub mod kernel;
pub mod linalg;
pub mod olre;
pub mod rulsif;
pub mod synthetic;

mod rng;

pub use error::{Error, Result};
pub use kernel::{kernel_eval, Dictionary, Kernel, KernelFamily, KernelSpec, WeightedExpansion};
pub use olre::{EstimatorState, ObservationPair, OlreConfig, Schedule};
pub use rng::trial_rng;
pub use rulsif::{CvOutcome, CvPlan, RulsifModel};
pub use synthetic::Scenario;

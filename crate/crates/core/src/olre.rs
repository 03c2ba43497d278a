//! Online relative likelihood-ratio estimation by functional stochastic
//! gradient descent along a regularization path.
//!
//! At step `t` the estimator receives `(x_t ~ p, x'_t ~ q)` and applies
//!
//! ```text
//! f_t = (1 - η_t λ_t) f_{t-1} - η_t [ (1-α) f_{t-1}(x_t) K(x_t, ·) + (α f_{t-1}(x'_t) - 1) K(x'_t, ·) ]
//! ```
//!
//! which on the weight vector is "shrink the old weights, append two new
//! ones". The step size and penalty follow
//!
//! ```text
//! η_t = a (t0 + t)^(-2β/(2β+1)),   λ_t = (1/a) (t0 + t)^(-1/(2β+1)).
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::kernel::{Kernel, KernelSpec, WeightedExpansion};

/// Default schedule offset, matching the warm-up sample size used for
/// bandwidth selection.
pub const DEFAULT_T0: u64 = 100;
pub const DEFAULT_A: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlreConfig {
    alpha: f64,
    beta: f64,
    a: f64,
    t0: u64,
    kernel: KernelSpec,
}

impl OlreConfig {
    /// Requires `0 < α < 1`, `1/2 ≤ β ≤ 1`, `a ≥ 4` and `t0 ≥ 1`.
    pub fn new(alpha: f64, beta: f64, a: f64, t0: u64, kernel: KernelSpec) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(0.5..=1.0).contains(&beta) {
            return Err(Error::invalid(format!(
                "beta must lie in [1/2, 1], got {beta}"
            )));
        }
        if !(a >= 4.0 && a.is_finite()) {
            return Err(Error::invalid(format!("a must be >= 4, got {a}")));
        }
        if t0 == 0 {
            return Err(Error::invalid("t0 must be >= 1"));
        }
        Ok(Self {
            alpha,
            beta,
            a,
            t0,
            kernel,
        })
    }

    /// `a = 4`, `t0 = 100`.
    pub fn with_defaults(alpha: f64, beta: f64, kernel: KernelSpec) -> Result<Self> {
        Self::new(alpha, beta, DEFAULT_A, DEFAULT_T0, kernel)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Smallest offset covered by the L² convergence guarantee,
    /// `(2 + 4 C² a)^((2β+1)/(2β))` with `C = sup_x sqrt(K(x, x))`.
    pub fn theoretical_min_t0(&self) -> f64 {
        let c = self.kernel.diagonal_bound();
        let base = 2.0 + 4.0 * c * c * self.a;
        libm::pow(base, (2.0 * self.beta + 1.0) / (2.0 * self.beta))
    }

    pub fn meets_theoretical_t0(&self) -> bool {
        self.t0 as f64 >= self.theoretical_min_t0()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub eta: f64,
    pub lambda: f64,
}

/// Step size and penalty for step `t ≥ 1`.
pub fn schedule(config: &OlreConfig, t: u64) -> Result<Schedule> {
    if t == 0 {
        return Err(Error::invalid("schedule is defined for t >= 1"));
    }
    let two_beta = 2.0 * config.beta;
    let base = 1.0 / (config.t0 as f64 + t as f64);
    Ok(Schedule {
        eta: config.a * libm::pow(base, two_beta / (two_beta + 1.0)),
        lambda: libm::pow(base, 1.0 / (two_beta + 1.0)) / config.a,
    })
}

/// One time step's draw: `x ~ p` and `x' ~ q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPair {
    x: Vec<f64>,
    x_prime: Vec<f64>,
}

impl ObservationPair {
    pub fn new(x: Vec<f64>, x_prime: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("observations must have dimension >= 1"));
        }
        check_dim(x.len(), x_prime.len())?;
        Ok(Self { x, x_prime })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn x_prime(&self) -> &[f64] {
        &self.x_prime
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Regularized instantaneous Pearson loss
/// `(1-α) f(x)²/2 + α f(x')²/2 - f(x') + (λ/2) ‖f‖²_H`.
pub fn instantaneous_loss(
    f: &WeightedExpansion,
    kernel: &impl Kernel,
    pair: &ObservationPair,
    alpha: f64,
    lambda: f64,
) -> Result<f64> {
    let v = f.evaluate(kernel, pair.x())?;
    let vp = f.evaluate(kernel, pair.x_prime())?;
    Ok((1.0 - alpha) * v * v / 2.0 + alpha * vp * vp / 2.0 - vp
        + lambda / 2.0 * f.rkhs_norm_sq(kernel))
}

/// Gradient of [`instantaneous_loss`] with respect to the weight vector θ,
/// holding the dictionary fixed:
/// `(1-α) f(x) K(D, x) + (α f(x') - 1) K(D, x') + λ G θ`.
pub fn loss_weight_gradient(
    f: &WeightedExpansion,
    kernel: &impl Kernel,
    pair: &ObservationPair,
    alpha: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    let dict = f.dictionary();
    let kx = dict.feature_map(kernel, pair.x())?;
    let kxp = dict.feature_map(kernel, pair.x_prime())?;
    let v: f64 = kx.iter().zip(f.weights()).map(|(k, w)| k * w).sum();
    let vp: f64 = kxp.iter().zip(f.weights()).map(|(k, w)| k * w).sum();
    let m = f.len();
    let gram = dict.gram(kernel);
    Ok((0..m)
        .map(|i| {
            let g_theta: f64 = (0..m).map(|j| gram[i * m + j] * f.weights()[j]).sum();
            (1.0 - alpha) * v * kx[i] + (alpha * vp - 1.0) * kxp[i] + lambda * g_theta
        })
        .collect())
}

/// The RKHS gradient of [`instantaneous_loss`] as an expansion over
/// `D ∪ {x, x'}` with weights `[λθ, (1-α) f(x), α f(x') - 1]`.
pub fn functional_gradient(
    f: &WeightedExpansion,
    kernel: &impl Kernel,
    pair: &ObservationPair,
    alpha: f64,
    lambda: f64,
) -> Result<WeightedExpansion> {
    let v = f.evaluate(kernel, pair.x())?;
    let vp = f.evaluate(kernel, pair.x_prime())?;
    let mut grad = f.clone();
    grad.scale_weights(lambda);
    grad.push_term(pair.x(), (1.0 - alpha) * v)?;
    grad.push_term(pair.x_prime(), alpha * vp - 1.0)?;
    Ok(grad)
}

/// Estimator state: the current expansion `f_t` and the step counter.
///
/// After `t` steps from the zero function the dictionary holds exactly `2t`
/// points (duplicates included, no pruning).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    config: OlreConfig,
    f: WeightedExpansion,
    t: u64,
}

impl EstimatorState {
    pub fn new(config: OlreConfig) -> Self {
        Self {
            config,
            f: WeightedExpansion::zero(),
            t: 0,
        }
    }

    pub fn config(&self) -> &OlreConfig {
        &self.config
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn expansion(&self) -> &WeightedExpansion {
        &self.f
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.f.evaluate(&self.config.kernel, x)
    }

    /// Consumes one observation pair. Returns the `(η_t, λ_t)` that were used.
    /// The state is left untouched on error.
    pub fn step(&mut self, pair: &ObservationPair) -> Result<Schedule> {
        let kernel = self.config.kernel;
        self.step_with(&kernel, pair)
    }

    /// [`step`](Self::step) with an explicit kernel, for wrapping the
    /// configured kernel (e.g. to count evaluations). The kernel must compute
    /// the same function as the configured one.
    pub fn step_with(&mut self, kernel: &impl Kernel, pair: &ObservationPair) -> Result<Schedule> {
        self.f.dictionary().check_point(pair.x())?;
        let t = self.t + 1;
        let s = schedule(&self.config, t)?;
        let alpha = self.config.alpha;

        let v = self.f.evaluate_unchecked(kernel, pair.x());
        let vp = self.f.evaluate_unchecked(kernel, pair.x_prime());

        self.f.scale_weights(1.0 - s.eta * s.lambda);
        self.f.push_term(pair.x(), s.eta * (alpha - 1.0) * v)?;
        self.f
            .push_term(pair.x_prime(), s.eta * (1.0 - alpha * vp))?;
        self.t = t;
        Ok(s)
    }
}

/// Runs the estimator over `pairs` from zero initialization and returns deep
/// copies of `f_t` at every requested step.
pub fn run_stream(
    config: &OlreConfig,
    pairs: &[ObservationPair],
    checkpoints: &[u64],
) -> Result<BTreeMap<u64, WeightedExpansion>> {
    if pairs.is_empty() {
        return Err(Error::invalid("observation stream is empty"));
    }
    let n = pairs.len() as u64;
    if let Some(&bad) = checkpoints.iter().find(|&&c| c == 0 || c > n) {
        return Err(Error::invalid(format!("checkpoint {bad} outside [1, {n}]")));
    }
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    let mut state = EstimatorState::new(*config);
    let mut snapshots = BTreeMap::new();
    for pair in pairs.iter().take(last as usize) {
        state.step(pair)?;
        if checkpoints.contains(&state.t) {
            snapshots.insert(state.t, state.f.clone());
        }
    }
    Ok(snapshots)
}

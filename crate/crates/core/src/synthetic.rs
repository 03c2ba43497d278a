//! Benchmark scenarios with analytic densities and closed-form
//! relative likelihood-ratios.
//!
//! | id          | dim | p                    | q                                             |
//! |-------------|-----|----------------------|-----------------------------------------------|
//! | `exp1`      | 1   | U(-√3, √3)           | Laplace(0, b = 1/√2), unit variance           |
//! | `exp2`      | 2   | N(0, I)              | N(0, Σ), Σ₁₁ = Σ₂₂ = 1, Σ₁₂ = 4/5              |
//! | `exp3`      | 2   | N(0, 10 I)           | ⅕ Σ_k N(μ_k, 5 I), μ ∈ {0, (0,±5), (±5,0)}     |
//! | `identical` | 2   | N(0, I)              | N(0, I)                                       |
//!
//! Sampling: inverse CDF for the uniform and Laplace laws, Box–Muller for
//! standard normals (both outputs used, first coordinate from the cosine
//! branch), and a uniform categorical draw followed by a component draw for
//! the mixture. The `x ~ p` draw always precedes the `x' ~ q` draw.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use rand::distributions::Open01;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::olre::ObservationPair;

const SQRT_3: f64 = 1.732_050_807_568_877_2;
/// Laplace scale giving unit variance (variance = 2b²).
const LAPLACE_SCALE: f64 = 1.0 / SQRT_2;
/// Correlation of the two coordinates of q in `exp2`.
const EXP2_RHO: f64 = 0.8;
const EXP3_P_VAR: f64 = 10.0;
const EXP3_Q_VAR: f64 = 5.0;
const EXP3_MEANS: [[f64; 2]; 5] = [[0.0, 0.0], [0.0, 5.0], [0.0, -5.0], [5.0, 0.0], [-5.0, 0.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    ExpI,
    ExpII,
    ExpIII,
    /// `p = q`; a control where `r^α ≡ 1`.
    Identical,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::ExpI,
        Scenario::ExpII,
        Scenario::ExpIII,
        Scenario::Identical,
    ];

    pub fn dim(self) -> usize {
        match self {
            Scenario::ExpI => 1,
            _ => 2,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Scenario::ExpI => "exp1",
            Scenario::ExpII => "exp2",
            Scenario::ExpIII => "exp3",
            Scenario::Identical => "identical",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.id() == id)
    }

    pub fn sample_p<R: Rng + ?Sized>(self, rng: &mut R) -> Vec<f64> {
        match self {
            Scenario::ExpI => {
                let u: f64 = rng.gen();
                vec![-SQRT_3 + 2.0 * SQRT_3 * u]
            }
            Scenario::ExpII | Scenario::Identical => {
                let (z1, z2) = standard_normal_pair(rng);
                vec![z1, z2]
            }
            Scenario::ExpIII => {
                let (z1, z2) = standard_normal_pair(rng);
                let s = libm::sqrt(EXP3_P_VAR);
                vec![s * z1, s * z2]
            }
        }
    }

    pub fn sample_q<R: Rng + ?Sized>(self, rng: &mut R) -> Vec<f64> {
        match self {
            Scenario::ExpI => {
                let u: f64 = rng.sample(Open01);
                let x = if u < 0.5 {
                    LAPLACE_SCALE * libm::log(2.0 * u)
                } else {
                    -LAPLACE_SCALE * libm::log(2.0 * (1.0 - u))
                };
                vec![x]
            }
            Scenario::ExpII => {
                let (z1, z2) = standard_normal_pair(rng);
                // Cholesky factor of Σ: [[1, 0], [ρ, √(1-ρ²)]]
                let c = libm::sqrt(1.0 - EXP2_RHO * EXP2_RHO);
                vec![z1, EXP2_RHO * z1 + c * z2]
            }
            Scenario::ExpIII => {
                let k = rng.gen_range(0..EXP3_MEANS.len());
                let (z1, z2) = standard_normal_pair(rng);
                let s = libm::sqrt(EXP3_Q_VAR);
                let mu = EXP3_MEANS[k];
                vec![mu[0] + s * z1, mu[1] + s * z2]
            }
            Scenario::Identical => self.sample_p(rng),
        }
    }

    /// Independent draws `x ~ p`, `x' ~ q`, in that order.
    pub fn sample_pair<R: Rng + ?Sized>(self, rng: &mut R) -> ObservationPair {
        let x = self.sample_p(rng);
        let xp = self.sample_q(rng);
        ObservationPair::new(x, xp).expect("scenario samples share a dimension")
    }

    pub fn sample_pairs<R: Rng + ?Sized>(self, rng: &mut R, n: usize) -> Vec<ObservationPair> {
        (0..n).map(|_| self.sample_pair(rng)).collect()
    }

    fn log_density_p(self, x: &[f64]) -> f64 {
        match self {
            Scenario::ExpI => {
                if x[0].abs() <= SQRT_3 {
                    -libm::log(2.0 * SQRT_3)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Scenario::ExpII | Scenario::Identical => log_isotropic_normal(x, [0.0, 0.0], 1.0),
            Scenario::ExpIII => log_isotropic_normal(x, [0.0, 0.0], EXP3_P_VAR),
        }
    }

    fn log_density_q(self, x: &[f64]) -> f64 {
        match self {
            Scenario::ExpI => -x[0].abs() / LAPLACE_SCALE - libm::log(2.0 * LAPLACE_SCALE),
            Scenario::ExpII => {
                let det = 1.0 - EXP2_RHO * EXP2_RHO;
                let quad = (x[0] * x[0] - 2.0 * EXP2_RHO * x[0] * x[1] + x[1] * x[1]) / det;
                -0.5 * quad - libm::log(2.0 * PI * libm::sqrt(det))
            }
            Scenario::ExpIII => {
                let logs = EXP3_MEANS.map(|mu| log_isotropic_normal(x, mu, EXP3_Q_VAR));
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = logs.iter().map(|l| libm::exp(l - max)).sum();
                max + libm::log(sum / EXP3_MEANS.len() as f64)
            }
            Scenario::Identical => self.log_density_p(x),
        }
    }

    pub fn density_p(self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(libm::exp(self.log_density_p(x)))
    }

    pub fn density_q(self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(libm::exp(self.log_density_q(x)))
    }

    /// `r^α(x) = q(x) / ((1-α) p(x) + α q(x))`, computed from the log-density
    /// difference so that far tails do not underflow to `0/0`.
    ///
    /// For `α > 0` the result never exceeds `1/α`.
    pub fn true_ratio(self, alpha: f64, x: &[f64]) -> Result<f64> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::invalid(alloc::format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        check_dim(self.dim(), x.len())?;
        let lp = self.log_density_p(x);
        let lq = self.log_density_q(x);
        if lq == f64::NEG_INFINITY {
            return if lp == f64::NEG_INFINITY {
                Err(Error::RatioUndefined)
            } else {
                Ok(0.0)
            };
        }
        if lp == lq {
            return Ok(1.0);
        }
        // r = 1 / ((1-α) p/q + α)
        let p_over_q = libm::exp(lp - lq);
        let denom = (1.0 - alpha) * p_over_q + alpha;
        if denom == 0.0 {
            return Err(Error::RatioUndefined);
        }
        Ok(1.0 / denom)
    }
}

fn log_isotropic_normal(x: &[f64], mean: [f64; 2], var: f64) -> f64 {
    let d0 = x[0] - mean[0];
    let d1 = x[1] - mean[1];
    -(d0 * d0 + d1 * d1) / (2.0 * var) - libm::log(2.0 * PI * var)
}

/// Box–Muller transform of two uniforms.
pub fn standard_normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = rng.sample(Open01);
    let u2: f64 = rng.gen();
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let theta = 2.0 * PI * u2;
    (r * libm::cos(theta), r * libm::sin(theta))
}

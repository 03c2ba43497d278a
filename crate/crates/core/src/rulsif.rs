//! Offline baseline: penalized empirical Pearson risk over a finite
//! dictionary with a Euclidean penalty on the weights,
//!
//! ```text
//! θ̂ = argmin_θ  θᵀHθ/2 - θᵀh + (λ/2) θᵀθ = (H + λI)⁻¹ h
//! H = (1-α)/n Σ_{x∈X} K(D,x)K(D,x)ᵀ + α/n' Σ_{x'∈X'} K(D,x')K(D,x')ᵀ
//! h = 1/n' Σ_{x'∈X'} K(D,x')
//! ```
//!
//! plus k-fold cross-validation over `(σ, λ)` grids, which is also how the
//! online estimator gets its bandwidth.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::kernel::{Dictionary, Kernel, KernelSpec, WeightedExpansion};
use crate::linalg;
use crate::rng::{stream_rng, Stream};

/// Residual bound enforced on every fitted model.
pub const SOLVE_TOLERANCE: f64 = 1e-8;

/// The quadratic system `(H, h)` of the empirical risk.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSystem {
    /// `M × M`, row-major, symmetric PSD.
    pub h_matrix: Vec<f64>,
    pub h_vector: Vec<f64>,
}

impl RiskSystem {
    pub fn dim(&self) -> usize {
        self.h_vector.len()
    }

    /// `θᵀHθ/2 - θᵀh + (λ/2) θᵀθ`.
    pub fn penalized_objective(&self, theta: &[f64], lambda: f64) -> f64 {
        let m = self.dim();
        let mut quad = 0.0;
        for i in 0..m {
            let row: f64 = (0..m).map(|j| self.h_matrix[i * m + j] * theta[j]).sum();
            quad += theta[i] * row;
        }
        let lin: f64 = theta.iter().zip(&self.h_vector).map(|(a, b)| a * b).sum();
        let sq: f64 = theta.iter().map(|t| t * t).sum();
        quad / 2.0 - lin + lambda / 2.0 * sq
    }

    /// `H + λI`.
    pub fn regularized(&self, lambda: f64) -> Vec<f64> {
        let m = self.dim();
        let mut a = self.h_matrix.clone();
        for i in 0..m {
            a[i * m + i] += lambda;
        }
        a
    }

    /// Solves `(H + λI) θ = h` by Cholesky.
    pub fn solve(&self, lambda: f64) -> Result<Vec<f64>> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        let a = self.regularized(lambda);
        let theta = linalg::solve_spd(&a, &self.h_vector).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!(
                "RULSIF normal equations (M = {}, lambda = {lambda:e}): {msg}",
                self.dim()
            )),
            other => other,
        })?;
        let res = linalg::inf_norm(&linalg::residual(&a, &theta, &self.h_vector));
        if res.is_nan() || res > SOLVE_TOLERANCE {
            return Err(Error::Numerical(format!(
                "RULSIF residual {res:e} exceeds {SOLVE_TOLERANCE:e} (lambda = {lambda:e})"
            )));
        }
        Ok(theta)
    }
}

fn check_samples<P: AsRef<[f64]>>(name: &str, xs: &[P], dict: &Dictionary) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("{name} sample is empty")));
    }
    for x in xs {
        dict.check_point(x.as_ref())?;
    }
    Ok(())
}

/// Accumulates `H` and `h` for samples `X ~ p`, `X' ~ q` over dictionary `D`.
pub fn build_h_matrices<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    x: &[P],
    x_prime: &[Q],
    dictionary: &Dictionary,
    kernel: &impl Kernel,
    alpha: f64,
) -> Result<RiskSystem> {
    if dictionary.is_empty() {
        return Err(Error::invalid("dictionary is empty"));
    }
    check_samples("p", x, dictionary)?;
    check_samples("q", x_prime, dictionary)?;
    let m = dictionary.len();
    let mut h_matrix = alloc::vec![0.0; m * m];
    let mut h_vector = alloc::vec![0.0; m];

    let mut accumulate = |phi: &[f64], weight: f64| {
        for i in 0..m {
            let wi = weight * phi[i];
            for j in 0..=i {
                h_matrix[i * m + j] += wi * phi[j];
            }
        }
    };
    let wp = (1.0 - alpha) / x.len() as f64;
    for xi in x {
        accumulate(&dictionary.feature_map(kernel, xi.as_ref())?, wp);
    }
    let wq = alpha / x_prime.len() as f64;
    let nq = x_prime.len() as f64;
    for xi in x_prime {
        let phi = dictionary.feature_map(kernel, xi.as_ref())?;
        if alpha != 0.0 {
            accumulate(&phi, wq);
        }
        for (h, k) in h_vector.iter_mut().zip(&phi) {
            *h += k / nq;
        }
    }
    for i in 0..m {
        for j in 0..i {
            h_matrix[j * m + i] = h_matrix[i * m + j];
        }
    }
    Ok(RiskSystem { h_matrix, h_vector })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulsifModel {
    dictionary: Dictionary,
    theta_hat: Vec<f64>,
    kernel: KernelSpec,
    alpha: f64,
    lambda: f64,
}

impl RulsifModel {
    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn expansion(&self) -> WeightedExpansion {
        WeightedExpansion::new(self.dictionary.clone(), self.theta_hat.clone())
            .expect("theta_hat has one weight per dictionary point")
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.dictionary.check_point(x)?;
        Ok(self
            .dictionary
            .points()
            .zip(&self.theta_hat)
            .fold(0.0, |acc, (p, w)| {
                acc + w * self.kernel.eval_unchecked(p, x)
            }))
    }
}

/// Fits `θ̂ = (H + λI)⁻¹ h`. `λ = 0` is accepted but fails with
/// [`Error::Numerical`] when `H` is singular to working precision.
pub fn fit<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    x: &[P],
    x_prime: &[Q],
    dictionary: &Dictionary,
    kernel: &KernelSpec,
    alpha: f64,
    lambda: f64,
) -> Result<RulsifModel> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let system = build_h_matrices(x, x_prime, dictionary, kernel, alpha)?;
    let theta_hat = system.solve(lambda)?;
    Ok(RulsifModel {
        dictionary: dictionary.clone(),
        theta_hat,
        kernel: *kernel,
        alpha,
        lambda,
    })
}

/// Unpenalized empirical Pearson risk on held-out samples; lower is better:
/// `(1-α)/2 mean_X f² + α/2 mean_X' f² - mean_X' f`.
pub fn pe_score<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    f: &WeightedExpansion,
    kernel: &impl Kernel,
    x_val: &[P],
    x_prime_val: &[Q],
    alpha: f64,
) -> Result<f64> {
    check_samples("p validation", x_val, f.dictionary())?;
    check_samples("q validation", x_prime_val, f.dictionary())?;
    let mut sp = 0.0;
    for x in x_val {
        let v = f.evaluate(kernel, x.as_ref())?;
        sp += v * v;
    }
    let (mut sq2, mut sq1) = (0.0, 0.0);
    for x in x_prime_val {
        let v = f.evaluate(kernel, x.as_ref())?;
        sq2 += v * v;
        sq1 += v;
    }
    let np = x_val.len() as f64;
    let nq = x_prime_val.len() as f64;
    Ok((1.0 - alpha) / 2.0 * (sp / np) + alpha / 2.0 * (sq2 / nq) - sq1 / nq)
}

/// `M` points drawn uniformly without replacement from `x_prime`, in draw
/// order.
pub fn random_dictionary<Q: AsRef<[f64]>>(
    x_prime: &[Q],
    m: usize,
    seed: u64,
) -> Result<Dictionary> {
    let mut rng = stream_rng(seed, Stream::Dictionary);
    sample_dictionary(x_prime, m, &mut rng)
}

pub(crate) fn sample_dictionary<Q: AsRef<[f64]>, R: rand::Rng + ?Sized>(
    x_prime: &[Q],
    m: usize,
    rng: &mut R,
) -> Result<Dictionary> {
    if m == 0 {
        return Err(Error::invalid("dictionary size must be >= 1"));
    }
    if m > x_prime.len() {
        return Err(Error::invalid(format!(
            "dictionary size {m} exceeds the {} available q-sample points",
            x_prime.len()
        )));
    }
    let mut idx: Vec<usize> = (0..x_prime.len()).collect();
    let (chosen, _) = idx.partial_shuffle(rng, m);
    let mut dict = Dictionary::new();
    for &i in chosen.iter() {
        dict.push(x_prime[i].as_ref())?;
    }
    Ok(dict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Grid argmin of the mean validation [`pe_score`]; ties go to the first
    /// cell in (σ index, λ index) order.
    #[default]
    MinMeanScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub sigma_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    pub selection_rule: SelectionRule,
}

pub const DEFAULT_SIGMA_MULTIPLIERS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];
pub const DEFAULT_FOLDS: usize = 5;

impl CvPlan {
    pub fn new(sigma_grid: Vec<f64>, lambda_grid: Vec<f64>, folds: usize) -> Result<Self> {
        if sigma_grid.is_empty() || lambda_grid.is_empty() {
            return Err(Error::invalid("CV grids must be nonempty"));
        }
        if let Some(s) = sigma_grid.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!(
                "sigma grid entry {s} is not a positive number"
            )));
        }
        if let Some(l) = lambda_grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::invalid(format!(
                "lambda grid entry {l} is not a nonnegative number"
            )));
        }
        if folds < 2 {
            return Err(Error::invalid("CV needs at least 2 folds"));
        }
        Ok(Self {
            sigma_grid,
            lambda_grid,
            folds,
            selection_rule: SelectionRule::MinMeanScore,
        })
    }

    /// Median-heuristic σ grid (median pairwise distance of the pooled sample
    /// times `{1/4, 1/2, 1, 2, 4}`), λ ∈ `{1e-3, 1e-2, 1e-1, 1}`, 5 folds.
    pub fn median_heuristic<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
        x: &[P],
        x_prime: &[Q],
    ) -> Result<Self> {
        let pooled: Vec<&[f64]> = x
            .iter()
            .map(|p| p.as_ref())
            .chain(x_prime.iter().map(|q| q.as_ref()))
            .collect();
        let med = median_pairwise_distance(&pooled)?;
        Self::new(
            DEFAULT_SIGMA_MULTIPLIERS.iter().map(|m| m * med).collect(),
            DEFAULT_LAMBDA_GRID.to_vec(),
            DEFAULT_FOLDS,
        )
    }
}

/// Median Euclidean distance over all unordered pairs.
pub fn median_pairwise_distance(points: &[&[f64]]) -> Result<f64> {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in 0..i {
            let s: f64 = points[i]
                .iter()
                .zip(points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d.push(libm::sqrt(s));
        }
    }
    if d.is_empty() {
        return Err(Error::invalid("median distance needs at least two points"));
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let med = if n % 2 == 1 {
        d[n / 2]
    } else {
        (d[n / 2 - 1] + d[n / 2]) / 2.0
    };
    if med.is_nan() || med <= 0.0 {
        return Err(Error::invalid(
            "all pooled points coincide; median distance is zero",
        ));
    }
    Ok(med)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok {
        mean_score: f64,
    },
    /// At least one fold failed to factorize; the cell is skipped.
    Failed {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub sigma: f64,
    pub lambda: f64,
    pub status: CellStatus,
}

impl CvCell {
    pub fn mean_score(&self) -> Option<f64> {
        match self.status {
            CellStatus::Ok { mean_score } => Some(mean_score),
            CellStatus::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best_sigma: f64,
    pub best_lambda: f64,
    /// Row-major over (σ, λ).
    pub table: Vec<CvCell>,
}

/// Fold index for each of `n` items: a seeded permutation dealt round-robin.
fn fold_assignment<R: rand::Rng + ?Sized>(n: usize, folds: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fold = alloc::vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

fn split<'a, P: AsRef<[f64]>>(
    xs: &'a [P],
    assign: &[usize],
    k: usize,
) -> (Vec<&'a [f64]>, Vec<&'a [f64]>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (x, &f) in xs.iter().zip(assign) {
        if f == k {
            val.push(x.as_ref());
        } else {
            train.push(x.as_ref());
        }
    }
    (train, val)
}

/// k-fold CV over the `(σ, λ)` grid.
///
/// Both samples are split into `folds` folds from a seeded permutation. Each
/// fold trains with a dictionary of `m` points drawn from its q-sample
/// training part; the dictionary is shared by every grid cell so cells differ
/// only in `(σ, λ)`. Cells whose normal equations fail to factorize are
/// reported as failed and excluded from the argmin.
pub fn cross_validate<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    x: &[P],
    x_prime: &[Q],
    plan: &CvPlan,
    alpha: f64,
    m: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let k = plan.folds;
    if k < 2 {
        return Err(Error::invalid("CV needs at least 2 folds"));
    }
    if x.len() < k || x_prime.len() < k {
        return Err(Error::invalid(format!(
            "CV with {k} folds needs at least {k} points per sample (got {} and {})",
            x.len(),
            x_prime.len()
        )));
    }
    let mut rng = stream_rng(seed, Stream::CrossValidation);
    let assign_p = fold_assignment(x.len(), k, &mut rng);
    let assign_q = fold_assignment(x_prime.len(), k, &mut rng);

    struct Fold<'a> {
        train_p: Vec<&'a [f64]>,
        val_p: Vec<&'a [f64]>,
        train_q: Vec<&'a [f64]>,
        val_q: Vec<&'a [f64]>,
        dictionary: Dictionary,
    }
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let (train_p, val_p) = split(x, &assign_p, fold);
        let (train_q, val_q) = split(x_prime, &assign_q, fold);
        let dictionary = sample_dictionary(&train_q, m, &mut rng)?;
        folds.push(Fold {
            train_p,
            val_p,
            train_q,
            val_q,
            dictionary,
        });
    }

    let mut table = Vec::with_capacity(plan.sigma_grid.len() * plan.lambda_grid.len());
    for &sigma in &plan.sigma_grid {
        let kernel = KernelSpec::gaussian(sigma)?;
        let systems = folds
            .iter()
            .map(|f| build_h_matrices(&f.train_p, &f.train_q, &f.dictionary, &kernel, alpha))
            .collect::<Result<Vec<_>>>()?;
        for &lambda in &plan.lambda_grid {
            let mut total = 0.0;
            let mut status = None;
            for (f, system) in folds.iter().zip(&systems) {
                match system.solve(lambda) {
                    Ok(theta) => {
                        let model = WeightedExpansion::new(f.dictionary.clone(), theta)?;
                        total += pe_score(&model, &kernel, &f.val_p, &f.val_q, alpha)?;
                    }
                    Err(Error::Numerical(reason)) => {
                        status = Some(CellStatus::Failed { reason });
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            let status = status.unwrap_or(CellStatus::Ok {
                mean_score: total / k as f64,
            });
            table.push(CvCell {
                sigma,
                lambda,
                status,
            });
        }
    }

    let mut best: Option<&CvCell> = None;
    for cell in &table {
        if let Some(s) = cell.mean_score() {
            // strict < keeps the first of equal scores
            if best.and_then(CvCell::mean_score).is_none_or(|b| s < b) {
                best = Some(cell);
            }
        }
    }
    let best =
        best.ok_or_else(|| Error::Numerical("every CV grid cell failed to factorize".into()))?;
    Ok(CvOutcome {
        best_sigma: best.sigma,
        best_lambda: best.lambda,
        table,
    })
}

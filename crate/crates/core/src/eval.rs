//! Error metrics, seeded trials and their aggregation.
//!
//! The score of an estimate `f` is the `L²(p^α)` distance to the analytic
//! ratio, decomposed over the mixture `p^α = (1-α) p + α q`:
//!
//! ```text
//! E_{p^α}[(f - r^α)²] ≈ (1-α) mean_x (f(x) - r^α(x))² + α mean_x' (f(x') - r^α(x'))²
//! ```
//!
//! on a held-out [`TestSet`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelSpec, WeightedExpansion};
use crate::olre::{self, ObservationPair, OlreConfig};
use crate::rng::{stream_rng, Stream};
use crate::rulsif::{self, CvOutcome, CvPlan};
use crate::synthetic::Scenario;

/// Default number of held-out pairs.
pub const DEFAULT_TEST_SIZE: usize = 10_000;
/// Warm-up pairs used for cross-validation and the RULSIF dictionary.
pub const DEFAULT_WARMUP: usize = 100;
pub const DEFAULT_CHECKPOINTS: [u64; 8] = [25, 50, 100, 200, 400, 800, 1600, 2000];

/// Held-out pairs, drawn from their own seed so they never overlap a
/// training stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pairs: Vec<ObservationPair>,
}

impl TestSet {
    pub fn new(pairs: Vec<ObservationPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("test set is empty"));
        }
        Ok(Self { pairs })
    }

    pub fn generate(scenario: Scenario, n: usize, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, Stream::Data);
        Self::new(scenario.sample_pairs(&mut rng, n))
    }

    pub fn pairs(&self) -> &[ObservationPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `L²(p^α)` error of an arbitrary estimate `f`.
pub fn l2_error_with<F>(mut f: F, scenario: Scenario, alpha: f64, test: &TestSet) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (mut sp, mut sq) = (0.0, 0.0);
    for pair in test.pairs() {
        let dx = f(pair.x())? - scenario.true_ratio(alpha, pair.x())?;
        let dq = f(pair.x_prime())? - scenario.true_ratio(alpha, pair.x_prime())?;
        sp += dx * dx;
        sq += dq * dq;
    }
    let n = test.len() as f64;
    Ok((1.0 - alpha) * (sp / n) + alpha * (sq / n))
}

pub fn l2_error(
    f: &WeightedExpansion,
    kernel: &impl Kernel,
    scenario: Scenario,
    alpha: f64,
    test: &TestSet,
) -> Result<f64> {
    l2_error_with(|x| f.evaluate(kernel, x), scenario, alpha, test)
}

/// Plug-in value of the variational lower bound on `PE(P^α ‖ Q)`:
/// `mean_q f - (1-α)/2 mean_p f² - α/2 mean_q f² - 1/2`.
pub fn estimate_pe_divergence_with<F>(mut f: F, test: &TestSet, alpha: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (mut p2, mut q1, mut q2) = (0.0, 0.0, 0.0);
    for pair in test.pairs() {
        let v = f(pair.x())?;
        let vq = f(pair.x_prime())?;
        p2 += v * v;
        q1 += vq;
        q2 += vq * vq;
    }
    let n = test.len() as f64;
    Ok(q1 / n - (1.0 - alpha) / 2.0 * (p2 / n) - alpha / 2.0 * (q2 / n) - 0.5)
}

pub fn estimate_pe_divergence(
    f: &WeightedExpansion,
    kernel: &impl Kernel,
    test: &TestSet,
    alpha: f64,
) -> Result<f64> {
    estimate_pe_divergence_with(|x| f.evaluate(kernel, x), test, alpha)
}

/// A hyperparameter that is either given or chosen by cross-validation on
/// the warm-up sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuned {
    Fixed(f64),
    CrossValidated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Olre {
        alpha: f64,
        beta: f64,
        a: f64,
        t0: u64,
    },
    /// Refit from scratch at every checkpoint with a dictionary of `m`
    /// points drawn once per trial from the warm-up q-sample.
    Rulsif { alpha: f64, lambda: Tuned, m: usize },
}

impl MethodSpec {
    pub fn id(&self) -> &'static str {
        match self {
            MethodSpec::Olre { .. } => "olre",
            MethodSpec::Rulsif { .. } => "rulsif",
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            MethodSpec::Olre { alpha, .. } | MethodSpec::Rulsif { alpha, .. } => alpha,
        }
    }

    /// Checks the method's own parameter ranges.
    pub fn validate(&self) -> Result<()> {
        match *self {
            MethodSpec::Olre { alpha, beta, a, t0 } => {
                OlreConfig::new(alpha, beta, a, t0, KernelSpec::gaussian(1.0)?).map(|_| ())
            }
            MethodSpec::Rulsif { alpha, lambda, m } => {
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::invalid(format!(
                        "alpha must lie in [0, 1), got {alpha}"
                    )));
                }
                if let Tuned::Fixed(l) = lambda {
                    if !(l >= 0.0 && l.is_finite()) {
                        return Err(Error::invalid(format!("lambda must be >= 0, got {l}")));
                    }
                }
                if m == 0 {
                    return Err(Error::invalid("dictionary size M must be >= 1"));
                }
                Ok(())
            }
        }
    }

    /// Whether a trial of this method cross-validates on its warm-up pairs.
    pub fn needs_cv(&self, sigma: Tuned) -> bool {
        sigma == Tuned::CrossValidated
            || matches!(
                self,
                MethodSpec::Rulsif {
                    lambda: Tuned::CrossValidated,
                    ..
                }
            )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSettings {
    /// `None` selects the median-heuristic grid.
    pub sigma_grid: Option<Vec<f64>>,
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    pub dictionary_size: usize,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            sigma_grid: None,
            lambda_grid: rulsif::DEFAULT_LAMBDA_GRID.to_vec(),
            folds: rulsif::DEFAULT_FOLDS,
            dictionary_size: 50,
        }
    }
}

/// Everything a trial needs besides the method and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    pub scenario: Scenario,
    pub stream_len: usize,
    pub checkpoints: Vec<u64>,
    pub sigma: Tuned,
    pub n_warmup: usize,
    /// Take the warm-up pairs from the head of the training stream instead
    /// of drawing them separately.
    pub reuse_warmup_pairs: bool,
    pub cv: CvSettings,
}

impl TrialSettings {
    pub fn new(scenario: Scenario, stream_len: usize, checkpoints: Vec<u64>, sigma: Tuned) -> Self {
        Self {
            scenario,
            stream_len,
            checkpoints,
            sigma,
            n_warmup: DEFAULT_WARMUP,
            reuse_warmup_pairs: false,
            cv: CvSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stream_len == 0 {
            return Err(Error::invalid("stream length must be >= 1"));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::invalid("no checkpoints"));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("checkpoints must be strictly increasing"));
        }
        let last = *self.checkpoints.last().unwrap();
        if self.checkpoints[0] == 0 || last > self.stream_len as u64 {
            return Err(Error::invalid(format!(
                "checkpoints must lie in [1, {}]",
                self.stream_len
            )));
        }
        if let Tuned::Fixed(s) = self.sigma {
            KernelSpec::gaussian(s)?;
        }
        Ok(())
    }
}

/// Warm-up and training pairs of one trial. Identical for every method run
/// with the same seed, which makes trials paired across methods.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub warmup: Vec<ObservationPair>,
    pub stream: Vec<ObservationPair>,
}

impl TrialData {
    pub fn generate(settings: &TrialSettings, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::Data);
        let s = settings.scenario;
        if settings.reuse_warmup_pairs {
            let stream = s.sample_pairs(&mut rng, settings.stream_len);
            let warmup = stream[..settings.n_warmup.min(stream.len())].to_vec();
            Self { warmup, stream }
        } else {
            let warmup = s.sample_pairs(&mut rng, settings.n_warmup);
            let stream = s.sample_pairs(&mut rng, settings.stream_len);
            Self { warmup, stream }
        }
    }
}

fn split_pairs(pairs: &[ObservationPair]) -> (Vec<&[f64]>, Vec<&[f64]>) {
    (
        pairs.iter().map(|p| p.x()).collect(),
        pairs.iter().map(|p| p.x_prime()).collect(),
    )
}

/// Cross-validation on the warm-up pairs, as used for `σ` (and RULSIF's `λ`)
/// selection. With a fixed `sigma` only `λ` is searched.
pub fn select_hyperparameters(
    warmup: &[ObservationPair],
    sigma: Tuned,
    cv: &CvSettings,
    alpha: f64,
    seed: u64,
) -> Result<(CvPlan, CvOutcome)> {
    let (x, xq) = split_pairs(warmup);
    let sigma_grid = match (sigma, &cv.sigma_grid) {
        (Tuned::Fixed(s), _) => alloc::vec![s],
        (Tuned::CrossValidated, Some(grid)) => grid.clone(),
        (Tuned::CrossValidated, None) => CvPlan::median_heuristic(&x, &xq)?.sigma_grid,
    };
    let plan = CvPlan::new(sigma_grid, cv.lambda_grid.clone(), cv.folds)?;
    let outcome = rulsif::cross_validate(&x, &xq, &plan, alpha, cv.dictionary_size, seed)?;
    Ok((plan, outcome))
}

/// Echo of the resolved configuration of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub a: Option<f64>,
    pub t0: Option<u64>,
    pub sigma: f64,
    pub lambda: Option<f64>,
    pub m: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub scenario: Scenario,
    pub method: &'static str,
    pub config: TrialConfig,
    pub checkpoints: Vec<u64>,
    /// Estimated `‖f_t - r^α‖²` in `L²(p^α)`, one per checkpoint.
    pub errors: Vec<f64>,
}

/// Runs one seeded trial of `method` and scores it at every checkpoint.
pub fn run_trial(
    settings: &TrialSettings,
    method: &MethodSpec,
    test: &TestSet,
    seed: u64,
) -> Result<TrialReport> {
    settings.validate()?;
    method.validate()?;
    let data = TrialData::generate(settings, seed);
    run_trial_on(settings, method, &data, test, seed)
}

/// [`run_trial`] on pre-generated data.
pub fn run_trial_on(
    settings: &TrialSettings,
    method: &MethodSpec,
    data: &TrialData,
    test: &TestSet,
    seed: u64,
) -> Result<TrialReport> {
    let scenario = settings.scenario;
    let alpha = method.alpha();
    let cv = if method.needs_cv(settings.sigma) {
        Some(select_hyperparameters(&data.warmup, settings.sigma, &settings.cv, alpha, seed)?.1)
    } else {
        None
    };
    let sigma = match (settings.sigma, &cv) {
        (Tuned::Fixed(s), _) => s,
        (Tuned::CrossValidated, Some(out)) => out.best_sigma,
        (Tuned::CrossValidated, None) => unreachable!("cv runs whenever sigma is cross-validated"),
    };
    let kernel = KernelSpec::gaussian(sigma)?;
    let checkpoints = settings.checkpoints.clone();

    let (config, errors) = match *method {
        MethodSpec::Olre { alpha, beta, a, t0 } => {
            let cfg = OlreConfig::new(alpha, beta, a, t0, kernel)?;
            let snapshots = olre::run_stream(&cfg, &data.stream, &checkpoints)?;
            let errors = checkpoints
                .iter()
                .map(|t| l2_error(&snapshots[t], &kernel, scenario, alpha, test))
                .collect::<Result<Vec<_>>>()?;
            let config = TrialConfig {
                alpha,
                beta: Some(beta),
                a: Some(a),
                t0: Some(t0),
                sigma,
                lambda: None,
                m: None,
                seed,
            };
            (config, errors)
        }
        MethodSpec::Rulsif { alpha, lambda, m } => {
            let lambda = match (lambda, &cv) {
                (Tuned::Fixed(l), _) => l,
                (Tuned::CrossValidated, Some(out)) => out.best_lambda,
                (Tuned::CrossValidated, None) => {
                    unreachable!("cv runs whenever lambda is cross-validated")
                }
            };
            let (_, warm_q) = split_pairs(&data.warmup);
            let mut rng = stream_rng(seed, Stream::Dictionary);
            let dictionary = rulsif::sample_dictionary(&warm_q, m, &mut rng)?;
            let mut errors = Vec::with_capacity(checkpoints.len());
            for &t in &checkpoints {
                let (x, xq) = split_pairs(&data.stream[..t as usize]);
                let model = rulsif::fit(&x, &xq, &dictionary, &kernel, alpha, lambda)?;
                errors.push(l2_error_with(|q| model.evaluate(q), scenario, alpha, test)?);
            }
            let config = TrialConfig {
                alpha,
                beta: None,
                a: None,
                t0: None,
                sigma,
                lambda: Some(lambda),
                m: Some(m),
                seed,
            };
            (config, errors)
        }
    };
    Ok(TrialReport {
        scenario,
        method: method.id(),
        config,
        checkpoints,
        errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub scenario: Scenario,
    pub method: &'static str,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub checkpoints: Vec<u64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (divisor `n - 1`).
    pub std: Vec<f64>,
    pub n_trials: usize,
}

fn same_setup(a: &TrialReport, b: &TrialReport) -> bool {
    a.scenario == b.scenario
        && a.method == b.method
        && a.checkpoints == b.checkpoints
        && a.config.alpha == b.config.alpha
        && a.config.beta == b.config.beta
        && a.config.a == b.config.a
        && a.config.t0 == b.config.t0
        && a.config.m == b.config.m
}

/// Per-checkpoint mean and sample standard deviation over at least two
/// reports of the same setup. Values are summed in sorted order, so the
/// result does not depend on the order of `reports`.
pub fn aggregate(reports: &[TrialReport]) -> Result<AggregateReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::invalid("no reports to aggregate"))?;
    if reports.len() < 2 {
        return Err(Error::invalid(
            "standard deviation needs at least two trials",
        ));
    }
    if let Some(r) = reports.iter().find(|r| !same_setup(first, r)) {
        return Err(Error::invalid(format!(
            "cannot aggregate mixed configurations ({} seed {} vs {} seed {})",
            first.method, first.config.seed, r.method, r.config.seed
        )));
    }
    let n = reports.len();
    let mut mean = Vec::with_capacity(first.checkpoints.len());
    let mut std = Vec::with_capacity(first.checkpoints.len());
    for i in 0..first.checkpoints.len() {
        let mut v: Vec<f64> = reports.iter().map(|r| r.errors[i]).collect();
        v.sort_by(f64::total_cmp);
        // shifted by the smallest value so that identical inputs give it back exactly
        let m = v[0] + v.iter().map(|x| x - v[0]).sum::<f64>() / n as f64;
        let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
        mean.push(m);
        std.push(libm::sqrt(ss / (n - 1) as f64));
    }
    Ok(AggregateReport {
        scenario: first.scenario,
        method: first.method,
        alpha: first.config.alpha,
        beta: first.config.beta,
        checkpoints: first.checkpoints.clone(),
        mean,
        std,
        n_trials: n,
    })
}

/// A short human-readable label, e.g. `olre(alpha=0.1, beta=0.5)`.
pub fn method_label(method: &str, alpha: f64, beta: Option<f64>) -> String {
    match beta {
        Some(b) => format!("{method}(alpha={alpha}, beta={b})"),
        None => format!("{method}(alpha={alpha})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Dictionary;
    use crate::rng::trial_rng;
    use approx::assert_abs_diff_eq;

    fn pair(x: &[f64], xp: &[f64]) -> ObservationPair {
        ObservationPair::new(x.to_vec(), xp.to_vec()).unwrap()
    }

    #[test]
    fn oracle_plug_in_has_zero_error() {
        for s in [Scenario::ExpI, Scenario::ExpII, Scenario::ExpIII] {
            let test = TestSet::generate(s, 500, 1).unwrap();
            let e = l2_error_with(|x| s.true_ratio(0.1, x), s, 0.1, &test).unwrap();
            assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn zero_function_on_identical_scenario() {
        let test = TestSet::generate(Scenario::Identical, 300, 2).unwrap();
        let k = KernelSpec::gaussian(1.0).unwrap();
        for alpha in [0.1, 0.5] {
            let e = l2_error(
                &WeightedExpansion::zero(),
                &k,
                Scenario::Identical,
                alpha,
                &test,
            )
            .unwrap();
            assert_eq!(e, 1.0);
            let d = estimate_pe_divergence(&WeightedExpansion::zero(), &k, &test, alpha).unwrap();
            assert_eq!(d, -0.5);
            let d = estimate_pe_divergence_with(|_| Ok(1.0), &test, alpha).unwrap();
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn l2_error_small_instance() {
        let s = Scenario::ExpI;
        let alpha = 0.2;
        let xs = [(-0.5, 0.3), (1.0, -2.5), (0.1, 0.9), (1.7, 0.0)];
        let test = TestSet::new(xs.iter().map(|&(a, b)| pair(&[a], &[b])).collect()).unwrap();
        let k = KernelSpec::gaussian(0.6).unwrap();
        let f = WeightedExpansion::new(
            Dictionary::from_points(&[[0.0], [0.5]]).unwrap(),
            vec![1.5, 0.4],
        )
        .unwrap();
        let fe =
            |t: f64| 1.5 * (-(t * t) / 0.72).exp() + 0.4 * (-(t - 0.5) * (t - 0.5) / 0.72).exp();
        // r^α by hand from the closed-form densities
        let r = |t: f64| {
            let p = if t.abs() <= 3f64.sqrt() {
                1.0 / (2.0 * 3f64.sqrt())
            } else {
                0.0
            };
            let q = (-(t.abs()) * 2f64.sqrt()).exp() / 2f64.sqrt();
            q / ((1.0 - alpha) * p + alpha * q)
        };
        let mut sp = 0.0;
        let mut sq = 0.0;
        for &(a, b) in &xs {
            sp += (fe(a) - r(a)).powi(2);
            sq += (fe(b) - r(b)).powi(2);
        }
        let expected = (1.0 - alpha) * sp / 4.0 + alpha * sq / 4.0;
        assert_abs_diff_eq!(
            l2_error(&f, &k, s, alpha, &test).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn l2_error_is_permutation_invariant() {
        let s = Scenario::ExpII;
        let test = TestSet::generate(s, 200, 3).unwrap();
        let mut rev = test.pairs().to_vec();
        rev.reverse();
        let rev = TestSet::new(rev).unwrap();
        let k = KernelSpec::gaussian(1.0).unwrap();
        let f = WeightedExpansion::new(Dictionary::from_points(&[[0.0, 0.0]]).unwrap(), vec![2.0])
            .unwrap();
        let a = l2_error(&f, &k, s, 0.1, &test).unwrap();
        let b = l2_error(&f, &k, s, 0.1, &rev).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn empty_test_set_is_rejected() {
        assert!(TestSet::new(vec![]).is_err());
        assert!(TestSet::generate(Scenario::ExpI, 0, 1).is_err());
    }

    fn report(seed: u64, errors: Vec<f64>) -> TrialReport {
        TrialReport {
            scenario: Scenario::ExpI,
            method: "olre",
            config: TrialConfig {
                alpha: 0.1,
                beta: Some(0.5),
                a: Some(4.0),
                t0: Some(100),
                sigma: 0.5,
                lambda: None,
                m: None,
                seed,
            },
            checkpoints: (1..=errors.len() as u64).collect(),
            errors,
        }
    }

    #[test]
    fn aggregate_examples() {
        let r = report(1, vec![0.3, 0.2]);
        let agg = aggregate(&[r.clone(), r.clone(), r.clone()]).unwrap();
        assert_eq!(agg.mean, vec![0.3, 0.2]);
        assert_eq!(agg.std, vec![0.0, 0.0]);
        assert_eq!(agg.n_trials, 3);

        let agg = aggregate(&[report(1, vec![0.0]), report(2, vec![2.0])]).unwrap();
        assert_eq!(agg.mean, vec![1.0]);
        assert_abs_diff_eq!(agg.std[0], 2f64.sqrt(), epsilon = 1e-15);

        let rs: Vec<_> = [0.11, 0.7, 0.05, 0.33, 0.9]
            .iter()
            .enumerate()
            .map(|(i, &e)| report(i as u64, vec![e, e * 3.0]))
            .collect();
        let mut perm = rs.clone();
        perm.swap(0, 3);
        perm.reverse();
        assert_eq!(aggregate(&rs).unwrap(), aggregate(&perm).unwrap());
    }

    #[test]
    fn aggregate_rejects_mixed_or_short_input() {
        assert!(aggregate(&[]).is_err());
        assert!(aggregate(&[report(1, vec![0.1])]).is_err());
        let mut other = report(2, vec![0.1]);
        other.config.alpha = 0.5;
        assert!(aggregate(&[report(1, vec![0.1]), other]).is_err());
        let mut other = report(2, vec![0.1]);
        other.method = "rulsif";
        assert!(aggregate(&[report(1, vec![0.1]), other]).is_err());
    }

    #[test]
    fn first_checkpoint_of_olre_trial_is_closed_form() {
        let settings = TrialSettings::new(Scenario::ExpI, 1, vec![1], Tuned::Fixed(0.5));
        let method = MethodSpec::Olre {
            alpha: 0.1,
            beta: 0.5,
            a: 4.0,
            t0: 100,
        };
        let test = TestSet::generate(Scenario::ExpI, 200, 99).unwrap();
        let rep = run_trial(&settings, &method, &test, 7).unwrap();

        let data = TrialData::generate(&settings, 7);
        let k = KernelSpec::gaussian(0.5).unwrap();
        let eta = 4.0 / 101f64.sqrt();
        let xp = data.stream[0].x_prime().to_vec();
        let f1 =
            WeightedExpansion::new(Dictionary::from_points(&[xp]).unwrap(), vec![eta]).unwrap();
        let expected = l2_error(&f1, &k, Scenario::ExpI, 0.1, &test).unwrap();
        assert_abs_diff_eq!(rep.errors[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn trials_are_deterministic() {
        let mut settings =
            TrialSettings::new(Scenario::ExpII, 120, vec![30, 120], Tuned::CrossValidated);
        settings.cv.dictionary_size = 20;
        let test = TestSet::generate(Scenario::ExpII, 300, 0).unwrap();
        for method in [
            MethodSpec::Olre {
                alpha: 0.5,
                beta: 0.75,
                a: 4.0,
                t0: 100,
            },
            MethodSpec::Rulsif {
                alpha: 0.5,
                lambda: Tuned::CrossValidated,
                m: 20,
            },
        ] {
            let a = run_trial(&settings, &method, &test, 5).unwrap();
            let b = run_trial(&settings, &method, &test, 5).unwrap();
            assert_eq!(a, b);
            assert!(a.errors.iter().all(|e| *e >= 0.0));
            let c = run_trial(&settings, &method, &test, 6).unwrap();
            assert_ne!(a.errors, c.errors);
        }
    }

    #[test]
    fn warmup_reuse_takes_the_stream_head() {
        let mut settings = TrialSettings::new(Scenario::ExpI, 150, vec![150], Tuned::Fixed(1.0));
        let separate = TrialData::generate(&settings, 3);
        settings.reuse_warmup_pairs = true;
        let reused = TrialData::generate(&settings, 3);
        assert_eq!(reused.warmup.len(), DEFAULT_WARMUP);
        assert_eq!(&reused.stream[..DEFAULT_WARMUP], &reused.warmup[..]);
        assert_eq!(separate.warmup, reused.warmup);
        assert_ne!(separate.stream[0], reused.stream[0]);
    }

    #[test]
    fn settings_validation() {
        let test = TestSet::generate(Scenario::ExpI, 10, 0).unwrap();
        let m = MethodSpec::Olre {
            alpha: 0.1,
            beta: 0.5,
            a: 4.0,
            t0: 100,
        };
        for cps in [vec![], vec![0], vec![5, 5], vec![11], vec![3, 2]] {
            let s = TrialSettings::new(Scenario::ExpI, 10, cps, Tuned::Fixed(1.0));
            assert!(run_trial(&s, &m, &test, 0).is_err());
        }
        let s = TrialSettings::new(Scenario::ExpI, 10, vec![10], Tuned::Fixed(1.0));
        let bad = MethodSpec::Olre {
            alpha: 1.5,
            beta: 0.5,
            a: 4.0,
            t0: 100,
        };
        assert!(run_trial(&s, &bad, &test, 0).is_err());
        let bad = MethodSpec::Rulsif {
            alpha: 0.1,
            lambda: Tuned::Fixed(0.1),
            m: 101,
        };
        assert!(run_trial(&s, &bad, &test, 0).is_err());
    }

    #[test]
    fn pe_estimate_prefers_the_true_ratio() {
        let s = Scenario::ExpI;
        let mut rng = trial_rng(17, 0);
        let test = TestSet::new(s.sample_pairs(&mut rng, 20_000)).unwrap();
        let oracle = estimate_pe_divergence_with(|x| s.true_ratio(0.1, x), &test, 0.1).unwrap();
        let zero = estimate_pe_divergence_with(|_| Ok(0.0), &test, 0.1).unwrap();
        assert!(oracle >= zero);
    }
}

//! Fans (method, trial) work items out to a worker pool and collects the
//! results in a fixed order.

use olre_core::eval::{self, AggregateReport, MethodSpec, TestSet, TrialReport};
use olre_core::Error;
use rayon::prelude::*;

use crate::config::RunConfig;

/// A trial that did not complete.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub method_index: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Completed trials, ordered by method (config order) then trial index.
    pub reports: Vec<TrialReport>,
    /// One aggregate per method that completed at least two trials.
    pub aggregates: Vec<AggregateReport>,
    pub failures: Vec<TrialFailure>,
}

/// Runs every (method, trial) combination on `jobs` worker threads
/// (`0` lets the pool choose). The output does not depend on `jobs`.
pub fn run_experiment(config: &RunConfig, jobs: usize) -> Result<RunOutcome, Error> {
    let settings = config.trial_settings();
    settings.validate()?;
    for m in &config.methods {
        m.validate()?;
    }
    let test = TestSet::generate(config.scenario, config.n_test, config.test_seed())?;
    log::info!(
        "test set: {} pairs from seed {}",
        test.len(),
        config.test_seed()
    );

    let items: Vec<(usize, usize)> = (0..config.methods.len())
        .flat_map(|m| (0..config.n_trials).map(move |t| (m, t)))
        .collect();
    let run_item = |&(mi, trial): &(usize, usize)| {
        let method: &MethodSpec = &config.methods[mi];
        let seed = config.trial_seed(trial);
        let result = eval::run_trial(&settings, method, &test, seed);
        match &result {
            Ok(r) => log::info!(
                "{} trial {trial} (seed {seed}): final error {:.6e}",
                method.id(),
                r.errors.last().copied().unwrap_or(f64::NAN)
            ),
            Err(e) => log::warn!("{} trial {trial} (seed {seed}) failed: {e}", method.id()),
        }
        result.map_err(|error| TrialFailure {
            method_index: mi,
            trial,
            seed,
            error,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<TrialReport, TrialFailure>> =
        pool.install(|| items.par_iter().map(run_item).collect());

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut per_method: Vec<Vec<TrialReport>> = vec![Vec::new(); config.methods.len()];
    for ((mi, _), r) in items.iter().zip(results) {
        match r {
            Ok(report) => {
                per_method[*mi].push(report.clone());
                reports.push(report);
            }
            Err(f) => failures.push(f),
        }
    }
    let mut aggregates = Vec::new();
    for group in per_method.iter().filter(|g| g.len() >= 2) {
        aggregates.push(eval::aggregate(group)?);
    }
    Ok(RunOutcome {
        reports,
        aggregates,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn config(jobs_note: &str) -> RunConfig {
        let text = format!(
            "# {jobs_note}\nscenario = exp1\nmethod = olre(alpha=0.1)\nmethod = rulsif(alpha=0.1, lambda=0.1, m=10)\n\
             stream_length = 60\ncheckpoints = 10, 60\nn_test = 200\nn_trials = 3\nsigma = 0.5\n"
        );
        RunConfig::parse(&text, Path::new(".")).unwrap()
    }

    #[test]
    fn ordered_and_independent_of_thread_count() {
        let one = run_experiment(&config("a"), 1).unwrap();
        let four = run_experiment(&config("b"), 4).unwrap();
        assert_eq!(one, four);
        assert!(one.failures.is_empty());
        let order: Vec<_> = one
            .reports
            .iter()
            .map(|r| (r.method, r.config.seed))
            .collect();
        assert_eq!(
            order,
            vec![
                ("olre", 1),
                ("olre", 2),
                ("olre", 3),
                ("rulsif", 1),
                ("rulsif", 2),
                ("rulsif", 3)
            ]
        );
        assert_eq!(one.aggregates.len(), 2);
        assert_eq!(one.aggregates[1].n_trials, 3);
    }

    #[test]
    fn numerical_failures_are_collected() {
        let mut c = config("c");
        // lambda = 0 with a huge bandwidth makes H singular.
        c.methods = vec![
            MethodSpec::Olre {
                alpha: 0.1,
                beta: 0.5,
                a: 4.0,
                t0: 100,
            },
            MethodSpec::Rulsif {
                alpha: 0.1,
                lambda: eval::Tuned::Fixed(0.0),
                m: 10,
            },
        ];
        c.sigma = eval::Tuned::Fixed(1e6);
        let out = run_experiment(&c, 2).unwrap();
        assert_eq!(out.reports.len(), 3);
        assert_eq!(out.failures.len(), 3);
        assert!(out.failures.iter().all(|f| f.method_index == 1));
        assert!(matches!(out.failures[0].error, Error::Numerical(_)));
        assert_eq!(out.aggregates.len(), 1);
    }
}

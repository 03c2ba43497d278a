//! The `run`, `select` and `plot` subcommands.
//!
//! Exit codes: 0 on success, 1 when a trial or CV fit fails numerically or an
//! output file cannot be written, 2 when the input (config or CSV) is invalid.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use olre_core::eval::{select_hyperparameters, TrialData};
use olre_core::Error;

use crate::config::{fmt_float, render_method, Diagnostic, RunConfig};
use crate::experiment::run_experiment;
use crate::output::{self, ReadError};
use crate::plot;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

pub const TRIALS_FILE: &str = "trials.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.txt";
pub const FAILURES_FILE: &str = "failures.txt";
pub const SELECTION_FILE: &str = "selection.txt";
pub const CV_TABLE_FILE: &str = "cv_table.csv";

fn load(path: &Path) -> Result<RunConfig, u8> {
    RunConfig::load(path).map_err(|diags: Vec<Diagnostic>| {
        for d in &diags {
            eprintln!("error: {}: {d}", path.display());
        }
        EXIT_INVALID
    })
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    io::Write::flush(&mut w)
}

fn io_failure(what: &Path, e: io::Error) -> u8 {
    eprintln!("error: cannot write {}: {e}", what.display());
    EXIT_FAILURE
}

/// Runs every (method, trial) pair and writes the CSVs, the resolved config
/// and, if anything failed, a failure manifest next to the partial results.
pub fn cmd_run(config_path: &Path, jobs: usize) -> u8 {
    let config = match load(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    for w in config.t0_warnings() {
        log::warn!("{w}");
    }
    let dir = &config.output_dir;
    if let Err(e) = fs::create_dir_all(dir) {
        return io_failure(dir, e);
    }
    let resolved = dir.join(RESOLVED_CONFIG_FILE);
    if let Err(e) = fs::write(&resolved, config.render()) {
        return io_failure(&resolved, e);
    }
    log::info!(
        "running {} method(s) x {} trial(s) on {}",
        config.methods.len(),
        config.n_trials,
        config.scenario.id()
    );

    let outcome = match run_experiment(&config, jobs) {
        Ok(o) => o,
        Err(e @ Error::InvalidInput(_)) | Err(e @ Error::DimensionMismatch { .. }) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };

    let trials = dir.join(TRIALS_FILE);
    if let Err(e) = write_file(&trials, |w| output::write_trials(w, &outcome.reports)) {
        return io_failure(&trials, e);
    }
    let aggregate = dir.join(AGGREGATE_FILE);
    if let Err(e) = write_file(&aggregate, |w| {
        output::write_aggregates(w, &outcome.aggregates)
    }) {
        return io_failure(&aggregate, e);
    }
    let failures = dir.join(FAILURES_FILE);
    if outcome.failures.is_empty() {
        if failures.exists() {
            let _ = fs::remove_file(&failures);
        }
        println!(
            "wrote {} trial(s) and {} aggregate(s) to {}",
            outcome.reports.len(),
            outcome.aggregates.len(),
            dir.display()
        );
        return EXIT_OK;
    }
    let mut text = String::new();
    for f in &outcome.failures {
        let _ = writeln!(
            text,
            "method = {}\ttrial = {}\tseed = {}\terror = {}",
            render_method(&config.methods[f.method_index]),
            f.trial,
            f.seed,
            f.error
        );
    }
    if let Err(e) = fs::write(&failures, &text) {
        return io_failure(&failures, e);
    }
    eprintln!(
        "error: {} of {} trial(s) failed; partial results and {} written to {}",
        outcome.failures.len(),
        config.methods.len() * config.n_trials,
        FAILURES_FILE,
        dir.display()
    );
    EXIT_FAILURE
}

/// Cross-validates on the warm-up pairs of the first trial (seed =
/// `seed`) for every method with a `cv` marker, exactly as `run` does.
pub fn cmd_select(config_path: &Path) -> u8 {
    let config = match load(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let targets: Vec<_> = config
        .methods
        .iter()
        .filter(|m| config.needs_cv(m))
        .collect();
    if targets.is_empty() {
        eprintln!(
            "error: {}: nothing to select (no `cv` marker in sigma or any rulsif lambda)",
            config_path.display()
        );
        return EXIT_INVALID;
    }
    let settings = config.trial_settings();
    let seed = config.trial_seed(0);
    let data = TrialData::generate(&settings, seed);

    let mut outcomes = Vec::new();
    let mut summary = String::new();
    let _ = writeln!(summary, "scenario = {}", config.scenario.id());
    let _ = writeln!(summary, "seed = {seed}");
    let _ = writeln!(summary, "warmup_pairs = {}", data.warmup.len());
    for m in &targets {
        match select_hyperparameters(&data.warmup, config.sigma, &settings.cv, m.alpha(), seed) {
            Ok((plan, out)) => {
                let list = |v: &[f64]| {
                    v.iter()
                        .map(|x| fmt_float(*x))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                let _ = writeln!(summary, "\nmethod = {}", render_method(m));
                let _ = writeln!(summary, "sigma_grid = {}", list(&plan.sigma_grid));
                let _ = writeln!(summary, "lambda_grid = {}", list(&plan.lambda_grid));
                let _ = writeln!(summary, "cv_folds = {}", plan.folds);
                let failed = out
                    .table
                    .iter()
                    .filter(|c| c.mean_score().is_none())
                    .count();
                let _ = writeln!(summary, "failed_cells = {failed}");
                let _ = writeln!(summary, "best_sigma = {}", fmt_float(out.best_sigma));
                let _ = writeln!(summary, "best_lambda = {}", fmt_float(out.best_lambda));
                outcomes.push((render_method(m), m.alpha(), out));
            }
            Err(e @ Error::Numerical(_)) => {
                eprintln!("error: {}: {e}", render_method(m));
                return EXIT_FAILURE;
            }
            Err(e) => {
                eprintln!("error: {}: {e}", render_method(m));
                return EXIT_INVALID;
            }
        }
    }
    print!("{summary}");

    let dir = &config.output_dir;
    if let Err(e) = fs::create_dir_all(dir) {
        return io_failure(dir, e);
    }
    let sel = dir.join(SELECTION_FILE);
    if let Err(e) = fs::write(&sel, &summary) {
        return io_failure(&sel, e);
    }
    let table = dir.join(CV_TABLE_FILE);
    let refs: Vec<_> = outcomes
        .iter()
        .map(|(m, a, o)| (m.clone(), *a, o))
        .collect();
    if let Err(e) = write_file(&table, |w| output::write_cv_tables(w, &refs)) {
        return io_failure(&table, e);
    }
    EXIT_OK
}

/// Renders an aggregate CSV as a log-log SVG.
pub fn cmd_plot(csv_path: &Path, svg_path: &Path) -> u8 {
    let rows = match output::read_aggregates(csv_path) {
        Ok(r) => r,
        Err(e @ ReadError::Io(..)) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
        Err(e) => {
            eprintln!("error: {}: {e}", csv_path.display());
            return EXIT_INVALID;
        }
    };
    let series = plot::group_series(&rows);
    let mut scenarios: Vec<&str> = Vec::new();
    for r in &rows {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    let svg = plot::render_svg(&series, &scenarios.join(", "));
    if let Some(parent) = svg_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        if let Err(e) = fs::create_dir_all(parent) {
            return io_failure(parent, e);
        }
    }
    if let Err(e) = fs::write(svg_path, svg) {
        return io_failure(svg_path, e);
    }
    log::info!("wrote {} curve(s) to {}", series.len(), svg_path.display());
    EXIT_OK
}

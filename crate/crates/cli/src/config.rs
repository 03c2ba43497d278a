//! Run configuration: a flat `key = value` text file.
//!
//! ```text
//! # comments start with '#'
//! scenario = exp1
//! method = olre(alpha=0.1, beta=0.5, a=4, t0=100)
//! method = rulsif(alpha=0.1, lambda=cv, m=50)
//! stream_length = 2000
//! n_test = 10000
//! n_trials = 20
//! checkpoints = 25, 50, 100, 200, 400, 800, 1600, 2000
//! seed = 1
//! sigma = cv
//! output_dir = out
//! ```
//!
//! Every key except `scenario` and `method` has a default; `method` may be
//! repeated. Unknown keys and repeated scalar keys are errors. Relative
//! `output_dir` paths are resolved against the config file's directory.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use olre_core::eval::{CvSettings, MethodSpec, TrialSettings, Tuned, DEFAULT_CHECKPOINTS};
use olre_core::olre::{DEFAULT_A, DEFAULT_T0};
use olre_core::rulsif::{DEFAULT_FOLDS, DEFAULT_LAMBDA_GRID};
use olre_core::{KernelSpec, OlreConfig, Scenario};

pub const DEFAULT_STREAM_LENGTH: usize = 2000;
pub const DEFAULT_N_TEST: usize = 10_000;
pub const DEFAULT_N_TRIALS: usize = 20;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N_WARMUP: usize = 100;
pub const DEFAULT_CV_DICTIONARY_SIZE: usize = 50;
pub const DEFAULT_RULSIF_M: usize = 50;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_OUTPUT_DIR: &str = "olre-out";

/// One diagnostic, tied to a line of the config file when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub methods: Vec<MethodSpec>,
    pub stream_length: usize,
    pub n_test: usize,
    pub n_trials: usize,
    pub checkpoints: Vec<u64>,
    pub seed: u64,
    pub sigma: Tuned,
    pub sigma_grid: Option<Vec<f64>>,
    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
    pub cv_dictionary_size: usize,
    pub n_warmup: usize,
    pub reuse_warmup_pairs: bool,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Settings shared by every trial.
    pub fn trial_settings(&self) -> TrialSettings {
        TrialSettings {
            scenario: self.scenario,
            stream_len: self.stream_length,
            checkpoints: self.checkpoints.clone(),
            sigma: self.sigma,
            n_warmup: self.n_warmup,
            reuse_warmup_pairs: self.reuse_warmup_pairs,
            cv: CvSettings {
                sigma_grid: self.sigma_grid.clone(),
                lambda_grid: self.lambda_grid.clone(),
                folds: self.cv_folds,
                dictionary_size: self.cv_dictionary_size,
            },
        }
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }

    /// Seed of the shared held-out test set.
    pub fn test_seed(&self) -> u64 {
        self.seed.wrapping_sub(1)
    }

    /// Whether trial `method` runs cross-validation on its warm-up pairs.
    pub fn needs_cv(&self, method: &MethodSpec) -> bool {
        method.needs_cv(self.sigma)
    }

    /// OLRE methods whose `t0` is below the bound required by the
    /// convergence theorem (with `C = 1` for the Gaussian kernel).
    pub fn t0_warnings(&self) -> Vec<String> {
        let kernel = KernelSpec::gaussian(1.0).expect("unit bandwidth");
        self.methods
            .iter()
            .filter_map(|m| match *m {
                MethodSpec::Olre { alpha, beta, a, t0 } => {
                    let cfg = OlreConfig::new(alpha, beta, a, t0, kernel).ok()?;
                    (!cfg.meets_theoretical_t0()).then(|| {
                        format!(
                            "{}: t0 = {t0} is below the theoretical minimum {:.1}; convergence guarantees do not apply",
                            render_method(m),
                            cfg.theoretical_min_t0()
                        )
                    })
                }
                MethodSpec::Rulsif { .. } => None,
            })
            .collect()
    }

    /// Every key with its effective value, in the file format.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| fmt_float(*x))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "scenario = {}", self.scenario.id());
        for m in &self.methods {
            let _ = writeln!(s, "method = {}", render_method(m));
        }
        let _ = writeln!(s, "stream_length = {}", self.stream_length);
        let _ = writeln!(s, "n_test = {}", self.n_test);
        let _ = writeln!(s, "n_trials = {}", self.n_trials);
        let cps: Vec<String> = self.checkpoints.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "checkpoints = {}", cps.join(", "));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "sigma = {}", render_tuned(self.sigma));
        let _ = writeln!(
            s,
            "sigma_grid = {}",
            self.sigma_grid
                .as_deref()
                .map_or("median".to_string(), list)
        );
        let _ = writeln!(s, "lambda_grid = {}", list(&self.lambda_grid));
        let _ = writeln!(s, "cv_folds = {}", self.cv_folds);
        let _ = writeln!(s, "cv_dictionary_size = {}", self.cv_dictionary_size);
        let _ = writeln!(s, "n_warmup = {}", self.n_warmup);
        let _ = writeln!(s, "reuse_warmup_pairs = {}", self.reuse_warmup_pairs);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        s
    }

    pub fn load(path: &Path) -> Result<Self, Vec<Diagnostic>> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![Diagnostic {
                line: None,
                key: path.display().to_string(),
                message: format!("cannot read config: {e}"),
            }]
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, Vec<Diagnostic>> {
        Parser::default().run(text, base_dir)
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn render_tuned(t: Tuned) -> String {
    match t {
        Tuned::Fixed(v) => fmt_float(v),
        Tuned::CrossValidated => "cv".into(),
    }
}

pub fn render_method(m: &MethodSpec) -> String {
    match *m {
        MethodSpec::Olre { alpha, beta, a, t0 } => format!(
            "olre(alpha={}, beta={}, a={}, t0={t0})",
            fmt_float(alpha),
            fmt_float(beta),
            fmt_float(a)
        ),
        MethodSpec::Rulsif { alpha, lambda, m } => format!(
            "rulsif(alpha={}, lambda={}, m={m})",
            fmt_float(alpha),
            render_tuned(lambda)
        ),
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "method",
    "stream_length",
    "n_test",
    "n_trials",
    "checkpoints",
    "seed",
    "sigma",
    "sigma_grid",
    "lambda_grid",
    "cv_folds",
    "cv_dictionary_size",
    "n_warmup",
    "reuse_warmup_pairs",
    "output_dir",
];

#[derive(Default)]
struct Parser {
    diags: Vec<Diagnostic>,
    seen: Vec<(&'static str, usize)>,
}

impl Parser {
    fn err(&mut self, line: Option<usize>, key: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            line,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.seen.iter().find(|(k, _)| *k == key).map(|(_, l)| *l)
    }

    fn run(mut self, text: &str, base_dir: &Path) -> Result<RunConfig, Vec<Diagnostic>> {
        let mut scenario = None;
        let mut methods: Vec<(usize, MethodSpec)> = Vec::new();
        let mut stream_length = DEFAULT_STREAM_LENGTH;
        let mut n_test = DEFAULT_N_TEST;
        let mut n_trials = DEFAULT_N_TRIALS;
        let mut checkpoints: Option<Vec<u64>> = None;
        let mut seed = DEFAULT_SEED;
        let mut sigma = Tuned::CrossValidated;
        let mut sigma_grid = None;
        let mut lambda_grid = DEFAULT_LAMBDA_GRID.to_vec();
        let mut cv_folds = DEFAULT_FOLDS;
        let mut cv_dictionary_size = DEFAULT_CV_DICTIONARY_SIZE;
        let mut n_warmup = DEFAULT_N_WARMUP;
        let mut reuse_warmup_pairs = false;
        let mut output_dir = PathBuf::from(DEFAULT_OUTPUT_DIR);

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                self.err(Some(lineno), line, "expected `key = value`");
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                self.err(Some(lineno), key, "unknown key");
                continue;
            };
            if known != "method" {
                if let Some(prev) = self.line_of(known) {
                    self.err(Some(lineno), key, format!("already set on line {prev}"));
                    continue;
                }
                self.seen.push((known, lineno));
            }
            let at = Some(lineno);
            let r: Result<(), String> = (|| {
                match known {
                    "scenario" => scenario = Some(Scenario::from_id(value).ok_or_else(|| {
                        format!(
                            "unknown scenario `{value}` (expected exp1, exp2, exp3 or identical)"
                        )
                    })?),
                    "method" => methods.push((lineno, parse_method(value)?)),
                    "stream_length" => stream_length = parse_num(value)?,
                    "n_test" => n_test = parse_num(value)?,
                    "n_trials" => n_trials = parse_num(value)?,
                    "checkpoints" => checkpoints = Some(parse_list(value)?),
                    "seed" => seed = parse_num(value)?,
                    "sigma" => sigma = parse_tuned(value)?,
                    "sigma_grid" => {
                        sigma_grid = if value == "median" {
                            None
                        } else {
                            Some(parse_list::<f64>(value)?)
                        }
                    }
                    "lambda_grid" => lambda_grid = parse_list(value)?,
                    "cv_folds" => cv_folds = parse_num(value)?,
                    "cv_dictionary_size" => cv_dictionary_size = parse_num(value)?,
                    "n_warmup" => n_warmup = parse_num(value)?,
                    "reuse_warmup_pairs" => {
                        reuse_warmup_pairs = value
                            .parse::<bool>()
                            .map_err(|_| format!("expected true or false, got `{value}`"))?
                    }
                    "output_dir" => {
                        if value.is_empty() {
                            return Err("must not be empty".into());
                        }
                        output_dir = PathBuf::from(value)
                    }
                    _ => unreachable!(),
                }
                Ok(())
            })();
            if let Err(msg) = r {
                self.err(at, key, msg);
            }
        }

        // Semantic checks, each tied back to the line that set the key.
        let scenario = match scenario {
            Some(s) => Some(s),
            None => {
                self.err(None, "scenario", "missing (required)");
                None
            }
        };
        if methods.is_empty() {
            self.err(None, "method", "at least one method line is required");
        }
        for (lineno, m) in &methods {
            if let Err(e) = m.validate() {
                self.err(Some(*lineno), "method", e.to_string());
            }
        }
        if stream_length == 0 {
            self.err(
                self.line_of("stream_length"),
                "stream_length",
                "must be >= 1",
            );
        }
        if n_test == 0 {
            self.err(self.line_of("n_test"), "n_test", "must be >= 1");
        }
        if n_trials < 2 {
            self.err(
                self.line_of("n_trials"),
                "n_trials",
                "must be >= 2 (standard deviations need two trials)",
            );
        }
        let checkpoints = checkpoints.unwrap_or_else(|| default_checkpoints(stream_length));
        if checkpoints.is_empty() {
            self.err(
                self.line_of("checkpoints"),
                "checkpoints",
                "must not be empty",
            );
        } else if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            self.err(
                self.line_of("checkpoints"),
                "checkpoints",
                "must be strictly increasing",
            );
        } else if checkpoints[0] == 0 || *checkpoints.last().unwrap() > stream_length as u64 {
            self.err(
                self.line_of("checkpoints"),
                "checkpoints",
                format!("must lie in [1, stream_length = {stream_length}]"),
            );
        }
        if let Tuned::Fixed(s) = sigma {
            if !(s.is_finite() && s > 0.0) {
                self.err(
                    self.line_of("sigma"),
                    "sigma",
                    format!("must be `cv` or a positive number, got {s}"),
                );
            }
        }
        if let Some(grid) = &sigma_grid {
            if grid.is_empty() || grid.iter().any(|s: &f64| !(s.is_finite() && *s > 0.0)) {
                self.err(
                    self.line_of("sigma_grid"),
                    "sigma_grid",
                    "entries must be positive numbers",
                );
            }
        }
        if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            self.err(
                self.line_of("lambda_grid"),
                "lambda_grid",
                "entries must be nonnegative numbers",
            );
        }
        if cv_folds < 2 {
            self.err(self.line_of("cv_folds"), "cv_folds", "must be >= 2");
        }
        if cv_dictionary_size == 0 {
            self.err(
                self.line_of("cv_dictionary_size"),
                "cv_dictionary_size",
                "must be >= 1",
            );
        }

        // Warm-up sizes: CV folds and both dictionary draws come from it.
        let warmup = if reuse_warmup_pairs {
            n_warmup.min(stream_length)
        } else {
            n_warmup
        };
        let uses_cv = methods.iter().any(|(_, m)| m.needs_cv(sigma));
        if uses_cv && cv_folds >= 2 {
            let smallest_train = warmup - warmup.div_ceil(cv_folds);
            if warmup < cv_folds {
                self.err(
                    self.line_of("n_warmup"),
                    "n_warmup",
                    format!("{warmup} warm-up pairs cannot be split into {cv_folds} folds"),
                );
            } else if cv_dictionary_size > smallest_train {
                self.err(
                    self.line_of("cv_dictionary_size"),
                    "cv_dictionary_size",
                    format!("{cv_dictionary_size} exceeds the {smallest_train} q-points of a CV training fold"),
                );
            }
        }
        for (lineno, m) in &methods {
            if let MethodSpec::Rulsif { m: size, .. } = m {
                if *size > warmup {
                    self.err(
                        Some(*lineno),
                        "method",
                        format!("rulsif m = {size} exceeds the {warmup} warm-up q-points its dictionary is drawn from"),
                    );
                }
            }
        }

        if !self.diags.is_empty() {
            return Err(self.diags);
        }
        let output_dir = if output_dir.is_absolute() {
            output_dir
        } else {
            base_dir.join(output_dir)
        };
        Ok(RunConfig {
            scenario: scenario.unwrap(),
            methods: methods.into_iter().map(|(_, m)| m).collect(),
            stream_length,
            n_test,
            n_trials,
            checkpoints,
            seed,
            sigma,
            sigma_grid,
            lambda_grid,
            cv_folds,
            cv_dictionary_size,
            n_warmup,
            reuse_warmup_pairs,
            output_dir,
        })
    }
}

/// The default geometric grid clipped to the stream, always ending at `T`.
pub fn default_checkpoints(stream_length: usize) -> Vec<u64> {
    let t = stream_length as u64;
    let mut cps: Vec<u64> = DEFAULT_CHECKPOINTS
        .iter()
        .copied()
        .filter(|&c| c < t)
        .collect();
    if t > 0 {
        cps.push(t);
    }
    cps
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>()
        .map_err(|_| format!("expected a {} value, got `{v}`", std::any::type_name::<T>()))
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|s| parse_num(s.trim())).collect()
}

fn parse_tuned(v: &str) -> Result<Tuned, String> {
    if v == "cv" {
        Ok(Tuned::CrossValidated)
    } else {
        parse_num(v).map(Tuned::Fixed)
    }
}

/// `olre(alpha=.., beta=.., a=.., t0=..)` or `rulsif(alpha=.., lambda=..|cv, m=..)`.
pub fn parse_method(v: &str) -> Result<MethodSpec, String> {
    let (name, rest) = v
        .split_once('(')
        .ok_or_else(|| format!("expected `olre(...)` or `rulsif(...)`, got `{v}`"))?;
    let args = rest
        .trim()
        .strip_suffix(')')
        .ok_or_else(|| "missing closing `)`".to_string())?;
    let mut params: Vec<(&str, &str)> = Vec::new();
    for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, val) = part
            .split_once('=')
            .ok_or_else(|| format!("expected `name=value`, got `{part}`"))?;
        let k = k.trim();
        if params.iter().any(|(p, _)| *p == k) {
            return Err(format!("parameter `{k}` given twice"));
        }
        params.push((k, val.trim()));
    }
    let get = |k: &str| params.iter().find(|(p, _)| *p == k).map(|(_, v)| *v);
    let allowed: &[&str] = match name.trim() {
        "olre" => &["alpha", "beta", "a", "t0"],
        "rulsif" => &["alpha", "lambda", "m"],
        other => {
            return Err(format!(
                "unknown method `{other}` (expected olre or rulsif)"
            ))
        }
    };
    if let Some((bad, _)) = params.iter().find(|(p, _)| !allowed.contains(p)) {
        return Err(format!("unknown parameter `{bad}` for {}", name.trim()));
    }
    let alpha: f64 =
        parse_num(get("alpha").ok_or("alpha is required")?).map_err(|e| format!("alpha: {e}"))?;
    Ok(match name.trim() {
        "olre" => MethodSpec::Olre {
            alpha,
            beta: get("beta")
                .map_or(Ok(DEFAULT_BETA), parse_num)
                .map_err(|e| format!("beta: {e}"))?,
            a: get("a")
                .map_or(Ok(DEFAULT_A), parse_num)
                .map_err(|e| format!("a: {e}"))?,
            t0: get("t0")
                .map_or(Ok(DEFAULT_T0), parse_num)
                .map_err(|e| format!("t0: {e}"))?,
        },
        _ => MethodSpec::Rulsif {
            alpha,
            lambda: get("lambda")
                .map_or(Ok(Tuned::CrossValidated), parse_tuned)
                .map_err(|e| format!("lambda: {e}"))?,
            m: get("m")
                .map_or(Ok(DEFAULT_RULSIF_M), parse_num)
                .map_err(|e| format!("m: {e}"))?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, Vec<Diagnostic>> {
        RunConfig::parse(text, Path::new("/tmp/base"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("scenario = exp1\nmethod = olre(alpha=0.1)\n").unwrap();
        assert_eq!(c.scenario, Scenario::ExpI);
        assert_eq!(
            c.methods,
            vec![MethodSpec::Olre {
                alpha: 0.1,
                beta: 0.5,
                a: 4.0,
                t0: 100
            }]
        );
        assert_eq!(c.stream_length, 2000);
        assert_eq!(c.checkpoints, DEFAULT_CHECKPOINTS.to_vec());
        assert_eq!(c.sigma, Tuned::CrossValidated);
        assert_eq!(c.output_dir, PathBuf::from("/tmp/base/olre-out"));
        assert_eq!(c.test_seed(), 0);
        assert_eq!(c.trial_seed(3), 4);
    }

    #[test]
    fn rendered_config_parses_back_identically() {
        let c = parse(
            "scenario = exp2\nmethod = olre(alpha=0.5, beta=0.75)\nmethod = rulsif(alpha=0.5, lambda=0.01, m=30)\n\
             stream_length = 300\nsigma = 0.7\nseed = 42 # trailing comment\noutput_dir = /abs/out\n",
        )
        .unwrap();
        assert_eq!(c.checkpoints, vec![25, 50, 100, 200, 300]);
        let again = parse(&c.render()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let err = parse("scenario = exp1\nmethod = olre(alpha=1.5)\n").unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].line, Some(2));
        assert!(err[0].to_string().contains("alpha"), "{}", err[0]);

        let err = parse("scenario = exp9\nbogus = 1\nn_trials = x\nmethod = olre(alpha=0.1)\nseed = 1\nseed = 2\n").unwrap_err();
        let lines: Vec<_> = err.iter().map(|d| (d.line, d.key.as_str())).collect();
        assert!(lines.contains(&(Some(1), "scenario")));
        assert!(lines.contains(&(Some(2), "bogus")));
        assert!(lines.contains(&(Some(3), "n_trials")));
        assert!(lines.contains(&(Some(6), "seed")));

        let err = parse("method = olre(alpha=0.1)\n").unwrap_err();
        assert_eq!(err[0].key, "scenario");
    }

    #[test]
    fn semantic_checks() {
        let base = "scenario = exp1\nmethod = olre(alpha=0.1)\n";
        for (extra, key) in [
            ("checkpoints = 10, 5\nstream_length = 20\n", "checkpoints"),
            ("checkpoints = 10, 30\nstream_length = 20\n", "checkpoints"),
            ("n_trials = 1\n", "n_trials"),
            ("sigma = -1\n", "sigma"),
            ("lambda_grid = \n", "lambda_grid"),
            ("cv_dictionary_size = 90\n", "cv_dictionary_size"),
            ("n_warmup = 3\n", "n_warmup"),
            ("method = rulsif(alpha=0.1, m=500)\nsigma = 1\n", "method"),
        ] {
            let err = parse(&format!("{base}{extra}")).unwrap_err();
            assert!(err.iter().any(|d| d.key == key), "{extra}: {err:?}");
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!(
            parse_method("rulsif(alpha=0.1)").unwrap(),
            MethodSpec::Rulsif {
                alpha: 0.1,
                lambda: Tuned::CrossValidated,
                m: 50
            }
        );
        assert_eq!(
            parse_method("rulsif( alpha = 0.2 , lambda = 0.5, m=7 )").unwrap(),
            MethodSpec::Rulsif {
                alpha: 0.2,
                lambda: Tuned::Fixed(0.5),
                m: 7
            }
        );
        assert!(parse_method("kliep(alpha=0.1)").is_err());
        assert!(parse_method("olre(beta=0.5)").is_err());
        assert!(parse_method("olre(alpha=0.1, m=3)").is_err());
        assert!(parse_method("olre(alpha=0.1, alpha=0.2)").is_err());
        assert!(parse_method("olre(alpha=0.1").is_err());
    }
}

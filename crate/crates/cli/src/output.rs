//! CSV writers and the aggregate-CSV reader.
//!
//! Floats are written with 17 significant digits so every value round-trips
//! exactly. Optional fields that do not apply to a method are left empty.

use std::io::{self, Write};
use std::path::Path;

use olre_core::eval::{AggregateReport, TrialReport};
use olre_core::rulsif::{CellStatus, CvOutcome};

use crate::config::fmt_float;

pub const TRIALS_HEADER: [&str; 12] = [
    "scenario", "method", "alpha", "beta", "a", "t0", "sigma", "lambda", "M", "seed", "t", "error",
];
pub const AGGREGATE_HEADER: [&str; 8] = [
    "scenario",
    "method",
    "alpha",
    "beta",
    "t",
    "mean_error",
    "std_error",
    "n_trials",
];
pub const CV_TABLE_HEADER: [&str; 6] =
    ["method", "alpha", "sigma", "lambda", "mean_score", "status"];

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

pub fn write_trials<W: Write>(out: W, reports: &[TrialReport]) -> io::Result<()> {
    let mut w = writer(out);
    w.write_record(TRIALS_HEADER)?;
    for r in reports {
        let c = &r.config;
        for (t, e) in r.checkpoints.iter().zip(&r.errors) {
            w.write_record([
                r.scenario.id().to_string(),
                r.method.to_string(),
                fmt_float(c.alpha),
                opt(c.beta, fmt_float),
                opt(c.a, fmt_float),
                opt(c.t0, |v| v.to_string()),
                fmt_float(c.sigma),
                opt(c.lambda, fmt_float),
                opt(c.m, |v| v.to_string()),
                c.seed.to_string(),
                t.to_string(),
                fmt_float(*e),
            ])?;
        }
    }
    w.flush()
}

pub fn write_aggregates<W: Write>(out: W, aggregates: &[AggregateReport]) -> io::Result<()> {
    let mut w = writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for a in aggregates {
        for i in 0..a.checkpoints.len() {
            w.write_record([
                a.scenario.id().to_string(),
                a.method.to_string(),
                fmt_float(a.alpha),
                opt(a.beta, fmt_float),
                a.checkpoints[i].to_string(),
                fmt_float(a.mean[i]),
                fmt_float(a.std[i]),
                a.n_trials.to_string(),
            ])?;
        }
    }
    w.flush()
}

/// One CV table per method, rows in grid order.
pub fn write_cv_tables<W: Write>(out: W, tables: &[(String, f64, &CvOutcome)]) -> io::Result<()> {
    let mut w = writer(out);
    w.write_record(CV_TABLE_HEADER)?;
    for (method, alpha, outcome) in tables {
        for cell in &outcome.table {
            let (score, status) = match &cell.status {
                CellStatus::Ok { mean_score } => (fmt_float(*mean_score), "ok".to_string()),
                CellStatus::Failed { reason } => (String::new(), format!("failed: {reason}")),
            };
            w.write_record([
                method.clone(),
                fmt_float(*alpha),
                fmt_float(cell.sigma),
                fmt_float(cell.lambda),
                score,
                status,
            ])?;
        }
    }
    w.flush()
}

/// One parsed row of an aggregate CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub scenario: String,
    pub method: String,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub t: u64,
    pub mean_error: f64,
    pub std_error: f64,
    pub n_trials: usize,
}

impl AggregateRow {
    /// Curve identity: rows sharing it belong to one plotted series.
    pub fn series_label(&self) -> String {
        olre_core::eval::method_label(&self.method, self.alpha, self.beta)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("cannot read {0}: {1}")]
    Io(String, io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("no data rows")]
    Empty,
}

pub fn read_aggregates(path: &Path) -> Result<Vec<AggregateRow>, ReadError> {
    let file =
        std::fs::File::open(path).map_err(|e| ReadError::Io(path.display().to_string(), e))?;
    parse_aggregates(file)
}

pub fn parse_aggregates<R: io::Read>(input: R) -> Result<Vec<AggregateRow>, ReadError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let malformed = |line: u64, message: String| ReadError::Malformed { line, message };
    let header = r
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if header.iter().ne(AGGREGATE_HEADER) {
        return Err(malformed(
            1,
            format!("expected header `{}`", AGGREGATE_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, ReadError> {
            let v: f64 = rec[i].parse().map_err(|_| {
                malformed(
                    line,
                    format!("{}: `{}` is not a number", AGGREGATE_HEADER[i], &rec[i]),
                )
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(malformed(
                    line,
                    format!("{}: value is not finite", AGGREGATE_HEADER[i]),
                ))
            }
        };
        let int = |i: usize| -> Result<u64, ReadError> {
            rec[i].parse().map_err(|_| {
                malformed(
                    line,
                    format!("{}: `{}` is not an integer", AGGREGATE_HEADER[i], &rec[i]),
                )
            })
        };
        let row = AggregateRow {
            scenario: rec[0].to_string(),
            method: rec[1].to_string(),
            alpha: num(2)?,
            beta: if rec[3].is_empty() {
                None
            } else {
                Some(num(3)?)
            },
            t: int(4)?,
            mean_error: num(5)?,
            std_error: num(6)?,
            n_trials: int(7)? as usize,
        };
        if row.method.is_empty() {
            return Err(malformed(line, "method: empty".into()));
        }
        if row.t == 0 || row.mean_error < 0.0 || row.std_error < 0.0 {
            return Err(malformed(
                line,
                "t must be >= 1 and errors nonnegative".into(),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ReadError::Empty);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use olre_core::eval::TrialConfig;
    use olre_core::Scenario;

    fn report(method: &'static str, seed: u64, errors: Vec<f64>) -> TrialReport {
        TrialReport {
            scenario: Scenario::ExpI,
            method,
            config: TrialConfig {
                alpha: 0.1,
                beta: (method == "olre").then_some(0.5),
                a: (method == "olre").then_some(4.0),
                t0: (method == "olre").then_some(100),
                sigma: 0.3,
                lambda: (method == "rulsif").then_some(0.01),
                m: (method == "rulsif").then_some(50),
                seed,
            },
            checkpoints: vec![1, 2],
            errors,
        }
    }

    #[test]
    fn trials_csv_layout() {
        let mut buf = Vec::new();
        write_trials(
            &mut buf,
            &[
                report("olre", 1, vec![0.5, 0.25]),
                report("rulsif", 1, vec![1.0, 0.1]),
            ],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(
            lines[0],
            "scenario,method,alpha,beta,a,t0,sigma,lambda,M,seed,t,error"
        );
        assert_eq!(
            lines[1],
            "exp1,olre,1.0000000000000001e-1,5.0000000000000000e-1,4.0000000000000000e0,100,2.9999999999999999e-1,,,1,1,5.0000000000000000e-1"
        );
        assert!(lines[3].starts_with("exp1,rulsif,1.0000000000000001e-1,,,,"));
        assert!(lines[3].contains(",1.0000000000000000e-2,50,1,1,"));
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[5], "");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn aggregate_round_trip() {
        let reps = [
            report("olre", 1, vec![0.5, 0.25]),
            report("olre", 2, vec![0.7, 0.125]),
        ];
        let agg = olre_core::eval::aggregate(&reps).unwrap();
        let mut buf = Vec::new();
        write_aggregates(&mut buf, std::slice::from_ref(&agg)).unwrap();
        let rows = parse_aggregates(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.t, agg.checkpoints[i]);
            assert_eq!(row.mean_error, agg.mean[i]);
            assert_eq!(row.std_error, agg.std[i]);
            assert_eq!(row.beta, Some(0.5));
            assert_eq!(row.n_trials, 2);
        }
        assert_eq!(rows[0].series_label(), "olre(alpha=0.1, beta=0.5)");
    }

    #[test]
    fn malformed_aggregates_are_rejected() {
        let header = AGGREGATE_HEADER.join(",");
        assert!(matches!(
            parse_aggregates(format!("{header}\n").as_bytes()),
            Err(ReadError::Empty)
        ));
        assert!(matches!(
            parse_aggregates("a,b\n1,2\n".as_bytes()),
            Err(ReadError::Malformed { line: 1, .. })
        ));
        let bad = format!("{header}\nexp1,olre,0.1,,x,0.1,0.0,2\n");
        match parse_aggregates(bad.as_bytes()) {
            Err(ReadError::Malformed { line: 2, message }) => assert!(message.starts_with("t:")),
            other => panic!("{other:?}"),
        }
        let short = format!("{header}\nexp1,olre,0.1\n");
        assert!(parse_aggregates(short.as_bytes()).is_err());
    }
}

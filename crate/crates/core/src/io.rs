//! File contracts: benchmark JSONL, report and sweep CSVs, run configuration.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::estimate::{improvement_metric, EstimateReport};
use crate::ranking::{RankMethod, RankingComparison, SweepAxis};
use crate::record::{AuxTriple, BenchRecord};
use crate::simulate::SimConfig;

const REQUIRED_KEYS: [&str; 7] = [
    "id",
    "question",
    "answer",
    "ground_truth",
    "phi",
    "aux",
    "tau_pred",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxLine {
    pub w1: String,
    pub w2: String,
    pub v: u8,
}

/// Serialized form of a [`BenchRecord`], one per JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFileLine {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub ground_truth: String,
    pub phi: u8,
    pub aux: Vec<AuxLine>,
    pub tau_pred: Vec<f64>,
}

fn flag(value: u8, what: &str) -> Result<bool> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::Contract(format!("{what} must be 0 or 1, got {other}"))),
    }
}

impl TryFrom<BenchFileLine> for BenchRecord {
    type Error = Error;

    fn try_from(line: BenchFileLine) -> Result<Self> {
        let aux = line
            .aux
            .into_iter()
            .enumerate()
            .map(|(j, a)| Ok(AuxTriple::new(a.w1, a.w2, flag(a.v, &format!("aux[{j}].v"))?)))
            .collect::<Result<Vec<_>>>()?;
        let record = BenchRecord {
            phi: flag(line.phi, "phi")?,
            id: line.id,
            question: line.question,
            answer: line.answer,
            ground_truth: line.ground_truth,
            aux,
            tau_pred: line.tau_pred,
        };
        record.validate()?;
        Ok(record)
    }
}

impl From<&BenchRecord> for BenchFileLine {
    fn from(r: &BenchRecord) -> Self {
        BenchFileLine {
            id: r.id.clone(),
            question: r.question.clone(),
            answer: r.answer.clone(),
            ground_truth: r.ground_truth.clone(),
            phi: u8::from(r.phi),
            aux: r
                .aux
                .iter()
                .map(|a| AuxLine {
                    w1: a.w1.clone(),
                    w2: a.w2.clone(),
                    v: u8::from(a.v),
                })
                .collect(),
            tau_pred: r.tau_pred.clone(),
        }
    }
}

/// Parses and validates one JSONL line. `line_no` is one-based.
pub fn parse_bench_line(text: &str, path: &Path, line_no: usize) -> Result<BenchRecord> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: line_no,
        message: e.to_string(),
    })?;
    let object = value.as_object().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: line_no,
        message: "expected a JSON object".into(),
    })?;
    let context = |msg: String| Error::Contract(format!("{}:{line_no}: {msg}", path.display()));
    for key in REQUIRED_KEYS {
        if !object.contains_key(key) {
            return Err(context(format!("missing field `{key}`")));
        }
    }
    let line: BenchFileLine =
        serde_json::from_value(value).map_err(|e| context(e.to_string()))?;
    BenchRecord::try_from(line).map_err(|e| match e {
        Error::Contract(msg) => context(msg),
        other => other,
    })
}

pub fn to_jsonl_line(record: &BenchRecord) -> String {
    serde_json::to_string(&BenchFileLine::from(record)).expect("bench lines always serialize")
}

/// Loads a benchmark file, enforcing one `M` across every record.
pub fn load_bench_dataset(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut first_m: Option<(usize, usize)> = None;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_bench_line(&line, path, line_no)?;
        match first_m {
            None => first_m = Some((line_no, record.m())),
            Some((first_line, m)) if m != record.m() => {
                return Err(Error::Contract(format!(
                    "{}: inconsistent M: line {first_line} has M={m} but line {line_no} has M={}",
                    path.display(),
                    record.m()
                )));
            }
            Some(_) => {}
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Contract(format!("{}: no records", path.display())));
    }
    Ok(records)
}

pub fn write_bench_dataset(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for r in records {
        out.push_str(&to_jsonl_line(r));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Renders a fraction as a percentage with two decimals, ties to even.
pub fn format_pct(fraction: f64) -> String {
    format!("{:.2}", round_pct(fraction))
}

/// `fraction * 100` rounded to two decimals, ties to even.
pub fn round_pct(fraction: f64) -> f64 {
    let hundredths = fraction * 10_000.0;
    let floor = hundredths.floor();
    let rem = hundredths - floor;
    let rounded = if (rem - 0.5).abs() < 1e-7 {
        if floor.rem_euclid(2.0) == 0.0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        hundredths.round()
    };
    rounded / 100.0
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "model",
    "gt_pct",
    "naive_pct",
    "onestep_pct",
    "onestep_clamped_pct",
    "improv_pct",
    "n",
    "m",
    "se",
    "ci_lo",
    "ci_hi",
];

/// One row of the benchmark comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    /// Full-dataset accuracy used as ground truth, as a fraction.
    pub gt: Option<f64>,
    pub naive: EstimateReport,
    pub one_step: EstimateReport,
}

impl ReportRow {
    /// Improvement in percentage points, computed from the rendered percentages.
    pub fn improvement_pct(&self) -> Option<f64> {
        self.gt.map(|gt| {
            improvement_metric(
                round_pct(self.naive.theta_hat),
                round_pct(self.one_step.theta_hat),
                round_pct(gt),
            )
        })
    }

    fn fields(&self) -> Vec<String> {
        let os = &self.one_step;
        vec![
            self.model.clone(),
            self.gt.map(format_pct).unwrap_or_default(),
            format_pct(self.naive.theta_hat),
            format_pct(os.theta_hat),
            format_pct(os.theta_hat_clamped),
            self.improvement_pct()
                .map(|v| format!("{v:+.2}"))
                .unwrap_or_default(),
            os.n.to_string(),
            os.m.to_string(),
            format_pct(os.std_error),
            format_pct(os.ci.0),
            format_pct(os.ci.1),
        ]
    }
}

pub fn render_report(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv encoding: {e}"));
    w.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_report(rows)?).map_err(|e| Error::io(path, e))
}

pub const SWEEP_COLUMNS: [&str; 6] = [
    "axis",
    "axis_value",
    "method",
    "exact_match",
    "kendall_mean",
    "trials",
];

pub fn render_sweep(axis: SweepAxis, results: &[RankingComparison]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for point in results {
        for method in RankMethod::ALL {
            let s = point.get(method);
            out.push_str(&format!(
                "{axis},{},{method},{:.4},{:.4},{}\n",
                s.sweep_coordinate.map(|v| v.to_string()).unwrap_or_default(),
                s.exact_match,
                s.kendall_mean,
                s.trials
            ));
        }
    }
    out
}

pub fn write_sweep(axis: SweepAxis, results: &[RankingComparison], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_sweep(axis, results)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Sweep,
    Rank,
    Estimate,
}

/// JSON run configuration; CLI flags override any value set here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    #[serde(flatten)]
    pub sim: SimConfig,
    pub level: f64,
    pub axis: Option<SweepAxis>,
    pub grid: Vec<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            sim: SimConfig::default(),
            level: 0.95,
            axis: None,
            grid: Vec::new(),
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        if let Some(input) = &self.input {
            if !input.exists() {
                return Err(Error::InvalidConfig(format!(
                    "input {} does not exist",
                    input.display()
                )));
            }
        }
        Ok(())
    }
}

/// Writes `text` to `path` or, when `path` is `None`, to `fallback`.
pub fn emit(text: &str, path: Option<&Path>, fallback: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => fallback
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

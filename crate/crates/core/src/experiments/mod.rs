//! Seeded verification experiments and their reports.
//!
//! Each registered runner confronts a closed-form result with simulation or
//! enumeration and returns one [`StatReport`] per checked statistic.
//! [`run_experiment`] adds timing, writes `report.json` plus any data CSVs,
//! and records whether every check passed.

mod calibrate;
mod params;
mod runners;
mod tools;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::with_workers;
use crate::rng::RandomStream;

pub use calibrate::{null_rejection_rate, Calibration, CalibrationTest, CALIBRATION_TESTS};
pub use params::Params;
pub use tools::{density_table, simulate_table, DensityKind, SimulateKind, ToolOutput};

/// Default significance level for goodness-of-fit checks.
pub const P_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_json::Value>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_workers() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            seed,
            workers: 1,
            parameters: BTreeMap::new(),
            output_dir: default_output_dir(),
        }
    }

    pub fn with_parameter(mut self, name: &str, value: serde_json::Value) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }
}

/// Pass rule for a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Passes when `value > threshold` (p-values).
    Above(f64),
    /// Passes when `value ≤ threshold` (errors, counts, tail frequencies).
    AtMost(f64),
    /// Passes when `lo ≤ value ≤ hi`.
    Between(f64, f64),
}

impl Threshold {
    pub fn accepts(&self, value: f64) -> bool {
        match *self {
            Threshold::Above(t) => value > t,
            Threshold::AtMost(t) => value <= t,
            Threshold::Between(lo, hi) => value >= lo && value <= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    /// Short identifier, unique within an experiment.
    pub name: String,
    /// The mathematical statement this statistic checks.
    pub claim: String,
    /// What `value` measures, e.g. `ks_p_value`.
    pub statistic: String,
    pub value: f64,
    pub threshold: Threshold,
    pub passed: bool,
    pub sample_sizes: Vec<usize>,
    pub runtime_seconds: f64,
}

impl StatReport {
    pub fn new(
        name: impl Into<String>,
        claim: impl Into<String>,
        statistic: impl Into<String>,
        value: f64,
        threshold: Threshold,
        sample_sizes: Vec<usize>,
    ) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            statistic: statistic.into(),
            value,
            passed: threshold.accepts(value),
            threshold,
            sample_sizes,
            runtime_seconds: 0.0,
        }
    }
}

/// What a runner hands back: reports plus named CSV files.
#[derive(Debug, Clone, Default)]
pub struct RunnerOutput {
    pub reports: Vec<StatReport>,
    pub tables: Vec<(String, String)>,
}

impl RunnerOutput {
    fn timed<T>(&mut self, f: impl FnOnce() -> Result<(T, Vec<StatReport>)>) -> Result<T> {
        let start = Instant::now();
        let (value, mut reports) = f()?;
        let per = start.elapsed().as_secs_f64() / reports.len().max(1) as f64;
        for r in reports.iter_mut() {
            r.runtime_seconds = per;
        }
        self.reports.extend(reports);
        Ok(value)
    }
}

pub struct RunnerContext<'a> {
    pub params: &'a Params,
    pub stream: RandomStream,
}

type RunnerFn = fn(&RunnerContext) -> Result<RunnerOutput>;

pub struct Runner {
    pub name: &'static str,
    pub summary: &'static str,
    run: RunnerFn,
}

/// Registered experiments: one `verify-*` runner per acceptance criterion and
/// one `calibrate-*` runner per calibrated statistical test.
pub fn registry() -> &'static [Runner] {
    runners::REGISTRY
}

pub fn find_runner(name: &str) -> Option<&'static Runner> {
    registry().iter().find(|r| r.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub seed: u64,
    pub workers: usize,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub passed: bool,
    pub reports: Vec<StatReport>,
    pub runtime_seconds: f64,
}

impl ExperimentResult {
    pub fn to_json(&self) -> String {
        to_json_17(self)
    }

    /// One line per report, `PASS`/`FAIL` first.
    pub fn summary_lines(&self) -> Vec<String> {
        self.reports
            .iter()
            .map(|r| {
                format!(
                    "{} {}/{}: {} = {} ({:?})",
                    if r.passed { "PASS" } else { "FAIL" },
                    self.experiment,
                    r.name,
                    r.statistic,
                    r.value,
                    r.threshold
                )
            })
            .collect()
    }
}

/// Runs the experiment in memory, without writing files.
pub fn execute(config: &ExperimentConfig) -> Result<(ExperimentResult, Vec<(String, String)>)> {
    let runner = find_runner(&config.experiment)
        .ok_or_else(|| Error::Parameter(format!("unknown experiment '{}'", config.experiment)))?;
    let params = Params::new(config.parameters.clone());
    let start = Instant::now();
    let ctx = RunnerContext {
        params: &params,
        stream: RandomStream::new(config.seed, 0),
    };
    let out = with_workers(config.workers, || (runner.run)(&ctx))?;
    params.check_all_used()?;
    let passed = !out.reports.is_empty() && out.reports.iter().all(|r| r.passed);
    Ok((
        ExperimentResult {
            experiment: config.experiment.clone(),
            seed: config.seed,
            workers: config.workers,
            parameters: config.parameters.clone(),
            passed,
            reports: out.reports,
            runtime_seconds: start.elapsed().as_secs_f64(),
        },
        out.tables,
    ))
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Experiment(#[from] Error),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

/// Runs the experiment and writes `report.json` and data CSVs into
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> std::result::Result<ExperimentResult, RunError> {
    let (result, tables) = execute(config)?;
    write_outputs(&config.output_dir, &result, &tables)?;
    Ok(result)
}

fn write_outputs(dir: &Path, result: &ExperimentResult, tables: &[(String, String)]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), result.to_json())?;
    for (name, body) in tables {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

/// Pretty JSON in which every float is printed with 17 significant digits.
pub fn to_json_17<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Formatter17::default());
    value.serialize(&mut ser).expect("reports serialise");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[derive(Default)]
struct Formatter17 {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for Formatter17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", crate::textio::fmt_num(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

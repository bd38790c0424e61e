//! The `metastable` command line: path statistics, process generation,
//! rate tables and verification runs.
//!
//! Exit codes: 0 validated, 1 violated, 2 inconclusive, 3 bad input or
//! config, 4 parameter out of domain, 5 any other failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::Error;
use crate::path_statistics::{
    count_fluctuations, count_traversals, partition_max_crossings, Interval, Path,
};
use crate::prob_space::{classify_martingale, AtomicProcess, Filtration, PROCESS_SCHEMA};
use crate::process_spec::{parse_spec, GeneratedProcess, ProcessSpec};
use crate::rate_calculus::{induced_metastable_bound, schedule_to_g, Constants, GFunction, RateFormula, RateParams, Schedule, DEFAULT_INDEX_BUDGET};
use crate::sampling::{empirical_process, AtomSampler};
use crate::verifier::{
    check_crossing_inequalities, check_learnable_pointwise, check_learnable_uniform, check_metastable,
    check_modulus, consecutive_pairs, dyadic_windows, expected_fluctuations, greedy_bad_chain,
    hoeffding_half_width, standard_battery, ClaimKind, InequalityKind, MetastableMode, Modulus,
    VerificationReport, BATTERY_VERSION, MC_MIN_SAMPLES,
};

pub const CONFIG_SCHEMA: &str = "metastable.verify/1";
pub const RUN_SCHEMA: &str = "metastable.run/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Configs shipped with the binary, runnable with `verify --bundled NAME`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("doob_on_random_walk", include_str!("../configs/doob_on_random_walk.json")),
    ("staircase_defeats_small_rate", include_str!("../configs/staircase_defeats_small_rate.json")),
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Domain(_)) => 4,
            CliError::Lib(Error::Budget { .. }) => 2,
            CliError::Lib(Error::Input(_) | Error::Unsupported(_)) => 3,
            CliError::Lib(_) => 5,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Config(_) => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read_file(path: &FsPath) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &FsPath, contents: &str) -> CliResult<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => FsPath::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(output: Option<&FsPath>, contents: &str) -> CliResult<()> {
    match output {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Named paths read from CSV (one column per path, header row of names,
/// shorter paths leave trailing cells empty) or from a process JSON file.
pub fn read_paths(text: &str) -> CliResult<Vec<(String, Path)>> {
    if text.trim_start().starts_with('{') {
        let process: AtomicProcess = serde_json::from_str(text)
            .map_err(|e| CliError::Parse { line: e.line() as u64, message: e.to_string() })?;
        return Ok(process
            .paths()
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("atom_{i}"), p.clone()))
            .collect());
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Parse { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut ended = vec![false; names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                ended[j] = true;
                continue;
            }
            if ended[j] {
                return Err(CliError::Parse { line, message: format!("column {:?} has a gap", names[j]) });
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| CliError::Parse { line, message: format!("{cell:?} is not a number") })?;
            if !v.is_finite() {
                return Err(CliError::Parse { line, message: format!("non-finite value {cell:?} in {:?}", names[j]) });
            }
            columns[j].push(v);
        }
    }
    names
        .into_iter()
        .zip(columns)
        .map(|(n, c)| Ok((n, Path::new(c)?)))
        .collect()
}

/// What `stats` computes for every path.
#[derive(Clone, Debug, Default)]
pub struct StatsOptions {
    pub epsilons: Vec<f64>,
    pub intervals: Vec<Interval>,
    /// `(M, l)` partitions for the largest per-cell crossing count.
    pub partitions: Vec<(f64, usize)>,
}

/// Long-format CSV `path,statistic,epsilon,lo,hi,cells,value`.
pub fn cmd_stats(text: &str, opts: &StatsOptions) -> CliResult<String> {
    if opts.epsilons.is_empty() && opts.intervals.is_empty() && opts.partitions.is_empty() {
        return Err(config_err("give at least one --epsilon, --interval or --partition"));
    }
    let paths = read_paths(text)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let row = |w: &mut csv::Writer<Vec<u8>>, fields: [String; 7]| {
        w.write_record(&fields).map_err(|e| config_err(e.to_string()))
    };
    row(&mut w, ["path", "statistic", "epsilon", "lo", "hi", "cells", "value"].map(String::from))?;
    let s = |x: f64| x.to_string();
    for (name, path) in &paths {
        for &eps in &opts.epsilons {
            let v = count_fluctuations(path, eps, None)?;
            row(&mut w, [name.clone(), "fluctuations".into(), s(eps), "".into(), "".into(), "".into(), v.to_string()])?;
        }
        for &iv in &opts.intervals {
            let t = count_traversals(path, iv, None)?;
            for (stat, v) in [("crossings", t.total()), ("upcrossings", t.up), ("downcrossings", t.down)] {
                row(&mut w, [name.clone(), stat.into(), "".into(), s(iv.lo()), s(iv.hi()), "".into(), v.to_string()])?;
            }
        }
        for &(m, l) in &opts.partitions {
            let v = partition_max_crossings(path, m, l)?;
            row(&mut w, [name.clone(), "partition_max_crossings".into(), "".into(), s(-m), s(m), l.to_string(), v.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| config_err(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Process JSON with weights.
    #[default]
    Json,
    /// One column per atom, one row per time.
    Csv,
}

/// Seed and horizon given on the command line win over the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
}

fn apply_overrides(spec: &mut ProcessSpec, o: Overrides) {
    if o.seed.is_some() {
        spec.seed = o.seed;
    }
    if o.horizon.is_some() {
        spec.horizon = o.horizon;
    }
}

pub fn process_json(process: &AtomicProcess) -> String {
    let mut s = serde_json::to_string_pretty(process).expect("processes serialize");
    s.push('\n');
    s
}

pub fn cmd_simulate(spec_text: &str, overrides: Overrides, format: OutputFormat) -> CliResult<String> {
    let mut spec = parse_spec(spec_text)?;
    apply_overrides(&mut spec, overrides);
    let generated = spec.realize()?;
    Ok(match format {
        OutputFormat::Json => process_json(&generated.process),
        OutputFormat::Csv => {
            let p = &generated.process;
            let mut out = (0..p.atoms()).map(|i| format!("atom_{i}")).collect::<Vec<_>>().join(",");
            out.push('\n');
            for n in 0..p.horizon() {
                let row: Vec<String> = p.paths().iter().map(|q| q[n].to_string()).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RateRow {
    theorem_id: String,
    #[serde(rename = "K")]
    k: f64,
    #[serde(default, deserialize_with = "moment_order")]
    p: Option<f64>,
    lambda: f64,
    epsilon: f64,
    #[serde(default)]
    a_err: Option<f64>,
}

fn moment_order<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim() {
        "" => Ok(None),
        "inf" | "infinity" | "∞" => Ok(Some(f64::INFINITY)),
        t => t.parse().map(Some).map_err(serde::de::Error::custom),
    }
}

/// Append a `rate` column to rows of `theorem_id,K,p,lambda,epsilon,a_err`.
pub fn cmd_rates(text: &str, constants: &Constants) -> CliResult<String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = String::from("theorem_id,K,p,lambda,epsilon,a_err,rate\n");
    for (i, record) in reader.deserialize::<RateRow>().enumerate() {
        let line = i as u64 + 2;
        let row = record.map_err(|e| CliError::Parse { line, message: e.to_string() })?;
        let formula = RateFormula::from_id(&row.theorem_id).ok_or_else(|| CliError::Parse {
            line,
            message: format!(
                "unknown theorem_id {:?}; known: {}",
                row.theorem_id,
                RateFormula::ALL.map(|f| f.id()).join(", ")
            ),
        })?;
        let params = RateParams {
            lambda: row.lambda,
            epsilon: row.epsilon,
            k: row.k,
            p: row.p.unwrap_or(f64::INFINITY),
            a_err: row.a_err.unwrap_or(0.0),
        };
        let rate = formula
            .evaluate(constants, &params)
            .map_err(|e| CliError::Parse { line, message: e.to_string() })?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            formula.id(),
            params.k,
            if params.p.is_infinite() { "inf".to_string() } else { params.p.to_string() },
            params.lambda,
            params.epsilon,
            params.a_err,
            rate
        );
    }
    Ok(out)
}

/// The full rate table at one parameter point.
pub fn rates_table(constants: &Constants, params: &RateParams) -> CliResult<String> {
    let mut csv = String::from("theorem_id,K,p,lambda,epsilon,a_err\n");
    for f in RateFormula::ALL {
        let p = if params.p.is_infinite() { "inf".to_string() } else { params.p.to_string() };
        let _ = writeln!(csv, "{},{},{},{},{},{}", f.id(), params.k, p, params.lambda, params.epsilon, params.a_err);
    }
    cmd_rates(&csv, constants)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    LearnableUniform,
    LearnablePointwise,
    MetastableUniform,
    MetastablePointwise,
    FlucModulus,
    CrossingModulus,
    TightnessModulus,
    BoundednessModulus,
    DoobUp,
    BishopUp,
    IvanovDown,
    CrossingVsUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Battery {
    #[default]
    Standard,
    Consecutive,
    Dyadic,
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSource {
    Battery(Battery),
    Explicit(Vec<Schedule>),
}

impl Default for ScheduleSource {
    fn default() -> Self {
        ScheduleSource::Battery(Battery::Standard)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Exact,
    Mc,
}

/// A rate given as a number, or by formula with `K` and `a_err` measured
/// from the process when left out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSource {
    Value(f64),
    Formula(FormulaRate),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaRate {
    pub formula: RateFormula,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "config_schema")]
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
    /// Process JSON, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_file: Option<PathBuf>,
    pub check: Check,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub schedules: ScheduleSource,
    /// Tables for metastable checks; derived from the schedules if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_functions: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<(f64, usize)>,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_k")]
    pub max_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
}

fn config_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

fn default_max_k() -> usize {
    5
}

/// Command-line settings that override a verify config.
#[derive(Clone, Debug, Default)]
pub struct VerifyOverrides {
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub battery: Option<Battery>,
    pub mode: Option<RunMode>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub battery_version: u32,
    pub verdict: crate::verifier::Verdict,
    pub report: VerificationReport,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn parse_config(text: &str) -> CliResult<VerifyConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: VerifyConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(format!("config at {path}: {}", e.inner()))
    })?;
    if cfg.schema != CONFIG_SCHEMA {
        return Err(config_err(format!(
            "config schema {:?} is not {CONFIG_SCHEMA:?}",
            cfg.schema
        )));
    }
    Ok(cfg)
}

/// Measured bounds are padded slightly and never taken below 1.
fn with_margin(measured: f64) -> f64 {
    measured * (1.0 + 1e-9) + 1e-12
}

fn require(what: &str, value: Option<f64>) -> CliResult<f64> {
    value.ok_or_else(|| config_err(format!("this check needs {what}")))
}

fn hypothesis(ok: bool, what: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::input(format!("process does not satisfy the hypothesis: {what}")).into())
    }
}

fn is_monotone(process: &AtomicProcess) -> bool {
    process.paths().iter().all(|p| {
        let v = p.values();
        v.windows(2).all(|w| w[1] >= w[0]) || v.windows(2).all(|w| w[1] <= w[0])
    })
}

/// Evaluate a rate, measuring `K` (and `a_err`) from the process when the
/// config leaves them out, after checking the formula's hypotheses.
pub fn resolve_rate(
    source: &RateSource,
    generated: &GeneratedProcess,
    constants: &Constants,
    lambda: f64,
    epsilon: f64,
) -> CliResult<f64> {
    let f = match source {
        RateSource::Value(v) => return Ok(*v),
        RateSource::Formula(f) => f,
    };
    let process = &generated.process;
    let p = f.p.unwrap_or(f64::INFINITY);
    // sampled paths carry the generator's guarantees, not an exact filtration
    let class = || -> CliResult<(bool, bool)> {
        if !generated.exact {
            return Ok((true, true));
        }
        let c = classify_martingale(process, &generated.filtration)?;
        Ok((c.is_submartingale(), c.is_supermartingale()))
    };
    let nonnegative = process.paths().iter().all(|q| q.values().iter().all(|&v| v >= 0.0));
    let (measured, a_err) = match f.formula {
        RateFormula::ConstantMonotone | RateFormula::Monotone => {
            hypothesis(is_monotone(process), "every path is monotone")?;
            (process.sup_moment(f64::INFINITY), 0.0)
        }
        RateFormula::PositiveSubmartingale => {
            hypothesis(nonnegative && class()?.0, "nonnegative submartingale")?;
            (process.sup_moment(p), 0.0)
        }
        RateFormula::Doob => {
            let (sub, sup) = class()?;
            hypothesis(sub || sup, "sub- or supermartingale")?;
            (process.sup_moment(1.0), 0.0)
        }
        RateFormula::ErgodicAverage => {
            let obs = generated
                .observable
                .as_ref()
                .ok_or_else(|| Error::input("the ergodic rate needs a rotation-average process"))?;
            let norm = if p.is_infinite() {
                obs.iter().map(|v| v.abs()).fold(0.0, f64::max)
            } else {
                crate::numeric::stable_sum(obs.iter().zip(process.weights()).map(|(v, w)| w * v.abs().powf(p))).powf(1.0 / p)
            };
            (norm, 0.0)
        }
        RateFormula::AlmostSupermartingale | RateFormula::AlmostSupermartingaleDowncrossing => {
            match (f.k, f.a_err, generated.certificate) {
                (Some(k), Some(a), _) => (k, a),
                (_, _, Some(c)) => (f.k.unwrap_or(c.k_bound), f.a_err.unwrap_or(c.a_err)),
                _ => return Err(config_err("almost-supermartingale rates need K and a_err or a generated certificate")),
            }
        }
        RateFormula::ExpectedFluctuations => (expected_fluctuations(process, epsilon)?, 0.0),
    };
    let k = match (f.k, f.formula) {
        (Some(k), _) => k,
        (None, RateFormula::AlmostSupermartingale | RateFormula::AlmostSupermartingaleDowncrossing) => measured,
        (None, _) => with_margin(measured).max(1.0),
    };
    let params = RateParams { lambda, epsilon, k, p, a_err: f.a_err.unwrap_or(a_err) };
    Ok(f.formula.evaluate(constants, &params)?)
}

fn schedules_for(source: &ScheduleSource, process: &AtomicProcess, lambda: f64, epsilon: f64, seed: u64) -> CliResult<Vec<Schedule>> {
    let t = process.horizon();
    Ok(match source {
        ScheduleSource::Explicit(list) => list.clone(),
        ScheduleSource::Battery(Battery::Standard) => standard_battery(process, lambda, epsilon, seed)?,
        ScheduleSource::Battery(Battery::Consecutive) => consecutive_pairs(t).into_iter().collect(),
        ScheduleSource::Battery(Battery::Dyadic) => dyadic_windows(t).into_iter().collect(),
        ScheduleSource::Battery(Battery::Greedy) => {
            Schedule::new(greedy_bad_chain(process, lambda, epsilon, usize::MAX)).ok().into_iter().collect()
        }
    })
}

fn load_process(cfg: &VerifyConfig, base: Option<&FsPath>, o: &VerifyOverrides) -> CliResult<GeneratedProcess> {
    match (&cfg.process, &cfg.process_file) {
        (Some(spec), None) => {
            let mut spec = spec.clone();
            let seed = o.seed.or(spec.seed).or(Some(cfg.seed));
            apply_overrides(&mut spec, Overrides { seed, horizon: o.horizon });
            Ok(spec.realize()?)
        }
        (None, Some(file)) => {
            let path = base.map_or_else(|| file.clone(), |b| b.join(file));
            let process: AtomicProcess = serde_json::from_str(&read_file(&path)?)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            let process = match o.horizon {
                Some(h) => process.truncate(h)?,
                None => process,
            };
            Ok(GeneratedProcess {
                filtration: Filtration::natural(&process),
                process,
                observable: None,
                certificate: None,
                exact: true,
            })
        }
        _ => Err(config_err(format!(
            "give exactly one of \"process\" (a spec) or \"process_file\" (a {PROCESS_SCHEMA} file)"
        ))),
    }
}

/// Run one verification config. `base` resolves a relative `process_file`.
pub fn cmd_verify(text: &str, base: Option<&FsPath>, o: &VerifyOverrides) -> CliResult<RunReport> {
    let cfg = parse_config(text)?;
    let seed = o.seed.unwrap_or(cfg.seed);
    let mut generated = load_process(&cfg, base, o)?;
    let lambda = o.lambda.or(cfg.lambda);
    let epsilon = o.epsilon.or(cfg.epsilon);
    let mode = o.mode.unwrap_or(cfg.mode);
    let source = o.battery.map_or_else(|| cfg.schedules.clone(), ScheduleSource::Battery);
    let constants = cfg.constants.unwrap_or(Constants::DEFAULT);
    let mut half_width = None;
    if mode == RunMode::Mc {
        let samples = o.samples.or(cfg.samples).unwrap_or(10_000);
        if samples < MC_MIN_SAMPLES {
            return Err(Error::input(format!("need at least {MC_MIN_SAMPLES} samples, got {samples}")).into());
        }
        if !matches!(cfg.check, Check::LearnableUniform | Check::LearnablePointwise) {
            return Err(config_err("Monte Carlo mode supports learnable checks only"));
        }
        let sample = empirical_process(&AtomSampler::new(&generated.process)?, samples, seed)?;
        generated.filtration = Filtration::natural(&sample);
        generated.process = sample;
        half_width = Some(hoeffding_half_width(samples));
    }
    let process = &generated.process;
    let intervals = || -> CliResult<Vec<Interval>> {
        cfg.intervals
            .as_ref()
            .ok_or_else(|| config_err("this check needs \"intervals\""))?
            .iter()
            .map(|&[a, b]| Ok(Interval::new(a, b)?))
            .collect()
    };
    let rate = |lambda: f64, epsilon: f64| -> CliResult<f64> {
        let source = cfg.rate.as_ref().ok_or_else(|| config_err("this check needs \"rate\""))?;
        resolve_rate(source, &generated, &constants, lambda, epsilon)
    };
    let report = match cfg.check {
        Check::LearnableUniform | Check::LearnablePointwise => {
            let (l, e) = (require("lambda", lambda)?, require("epsilon", epsilon)?);
            let r = rate(l, e)?;
            let schedules = schedules_for(&source, process, l, e, seed)?;
            let report = match (cfg.check, half_width) {
                (Check::LearnableUniform, None) => check_learnable_uniform(process, r, l, e, &schedules)?,
                (Check::LearnablePointwise, None) => check_learnable_pointwise(process, r, l, e, &schedules)?,
                (kind, Some(hw)) => {
                    let kind = if kind == Check::LearnableUniform {
                        ClaimKind::LearnableUniform
                    } else {
                        ClaimKind::LearnablePointwise
                    };
                    crate::verifier::check_learnable_empirical(process, kind, r, l, e, &schedules, hw)?
                }
                _ => unreachable!("learnable checks only"),
            };
            report
        }
        Check::MetastableUniform | Check::MetastablePointwise => {
            let (l, e) = (require("lambda", lambda)?, require("epsilon", epsilon)?);
            let r = rate(l, e)?;
            let gs: Vec<GFunction> = match &cfg.g_functions {
                Some(tables) => tables.iter().cloned().map(GFunction::table).collect(),
                None => schedules_for(&source, process, l, e, seed)?.iter().map(schedule_to_g).collect(),
            };
            let m = if cfg.check == Check::MetastableUniform { MetastableMode::Uniform } else { MetastableMode::Pointwise };
            let mut report = check_metastable(process, |g| induced_metastable_bound(r, g, DEFAULT_INDEX_BUDGET), l, e, &gs, m)?;
            if let crate::verifier::Claim::Rate(c) = &mut report.claim {
                c.rate = Some(r);
            }
            report
        }
        Check::FlucModulus | Check::CrossingModulus | Check::TightnessModulus | Check::BoundednessModulus => {
            let l = require("lambda", lambda)?;
            let value = match &cfg.rate {
                Some(RateSource::Value(v)) => *v,
                _ => return Err(config_err("modulus checks need a numeric \"rate\"")),
            };
            let modulus = match cfg.check {
                Check::FlucModulus => Modulus::Fluctuation { epsilon: require("epsilon", epsilon)? },
                Check::TightnessModulus => Modulus::Tightness,
                Check::BoundednessModulus => Modulus::Boundedness,
                _ => match (cfg.partition, cfg.intervals.as_deref()) {
                    (Some((m, cells)), _) => Modulus::CrossingPartition { m, l: cells },
                    (None, Some([[lo, hi]])) => Modulus::Crossing { lo: *lo, hi: *hi },
                    _ => return Err(config_err("crossing modulus needs \"partition\" or a single interval")),
                },
            };
            check_modulus(process, modulus, l, value)?
        }
        Check::DoobUp | Check::BishopUp | Check::IvanovDown | Check::CrossingVsUp => {
            let kind = match cfg.check {
                Check::DoobUp => InequalityKind::DoobUp,
                Check::BishopUp => InequalityKind::BishopUp,
                Check::IvanovDown => InequalityKind::IvanovDown,
                _ => InequalityKind::CrossingVsUp,
            };
            check_crossing_inequalities(
                process,
                Some(&generated.filtration),
                generated.observable.as_deref(),
                &intervals()?,
                kind,
                cfg.max_k,
            )?
        }
    };
    Ok(RunReport {
        schema: RUN_SCHEMA.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config_hash: sha256_hex(text.as_bytes()),
        seed,
        battery_version: BATTERY_VERSION,
        verdict: report.verdict,
        report,
    })
}

#[derive(Debug, Parser)]
#[command(name = "metastable", version, about = "Fluctuation statistics, rate tables and exact rate verification")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "METASTABLE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count fluctuations and crossings of paths in a CSV or process file.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Fluctuation threshold; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        epsilon: Vec<f64>,
        /// Crossing interval as `lo,hi`; repeatable.
        #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
        interval: Vec<Interval>,
        /// Partition of `[-M, M]` into `l` cells, as `M,l`; repeatable.
        #[arg(long, value_parser = parse_partition)]
        partition: Vec<(f64, usize)>,
    },
    /// Generate a process from a spec file.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Defaults to csv when the output name ends in .csv.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Evaluate rate formulas.
    Rates {
        /// Rows of theorem_id,K,p,lambda,epsilon,a_err; without it, every
        /// formula at the flag values.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long = "K", default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        a_err: f64,
    },
    /// Run a verification config and write its report.
    Verify {
        #[arg(long, conflicts_with = "bundled")]
        input: Option<PathBuf>,
        /// Name of a shipped config.
        #[arg(long)]
        bundled: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum)]
        schedule_battery: Option<Battery>,
        #[arg(long, value_enum)]
        mode: Option<RunMode>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_interval(s: &str) -> std::result::Result<Interval, String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Interval::new(a, b).map_err(|e| e.to_string())
}

fn parse_partition(s: &str) -> std::result::Result<(f64, usize), String> {
    let (m, l) = s.split_once(',').ok_or("expected M,l")?;
    Ok((m.trim().parse().map_err(|e| format!("{e}"))?, l.trim().parse().map_err(|e| format!("{e}"))?))
}

fn run_command(command: Command) -> CliResult<i32> {
    match command {
        Command::Stats { input, output, epsilon, interval, partition } => {
            let text = read_file(&input)?;
            let opts = StatsOptions { epsilons: epsilon, intervals: interval, partitions: partition };
            emit(output.as_deref(), &cmd_stats(&text, &opts)?)?;
            Ok(0)
        }
        Command::Simulate { input, output, seed, horizon, format } => {
            let format = format.unwrap_or_else(|| match &output {
                Some(p) if p.extension().is_some_and(|e| e == "csv") => OutputFormat::Csv,
                _ => OutputFormat::Json,
            });
            let text = read_file(&input)?;
            emit(output.as_deref(), &cmd_simulate(&text, Overrides { seed, horizon }, format)?)?;
            Ok(0)
        }
        Command::Rates { input, output, lambda, epsilon, k, p, a_err } => {
            let table = match input {
                Some(path) => cmd_rates(&read_file(&path)?, &Constants::DEFAULT)?,
                None => rates_table(&Constants::DEFAULT, &RateParams { lambda, epsilon, k, p, a_err })?,
            };
            emit(output.as_deref(), &table)?;
            Ok(0)
        }
        Command::Verify { input, bundled, output, seed, horizon, lambda, epsilon, schedule_battery, mode, samples } => {
            let (text, base) = match (input, bundled) {
                (Some(path), _) => (read_file(&path)?, path.parent().map(FsPath::to_path_buf)),
                (None, Some(name)) => {
                    let text = bundled_config(&name).ok_or_else(|| {
                        config_err(format!(
                            "no bundled config {name:?}; available: {}",
                            BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
                        ))
                    })?;
                    (text.to_string(), None)
                }
                (None, None) => return Err(config_err("give --input or --bundled")),
            };
            let overrides = VerifyOverrides { seed, horizon, lambda, epsilon, battery: schedule_battery, mode, samples };
            let run = cmd_verify(&text, base.as_deref(), &overrides)?;
            eprintln!("verdict {:?} in {:.3?}", run.verdict, run.report.elapsed);
            emit(output.as_deref(), &run.to_json())?;
            Ok(run.verdict.exit_code())
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

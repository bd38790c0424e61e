//! Exact and Monte Carlo checks of rate claims on atomic processes.
//!
//! Processes are treated as stopped at the horizon: `X_n = X_{T-1}` for
//! `n >= T`. A window starting at `T - 1` or later therefore never
//! oscillates, windows running past the horizon are clipped, and a schedule
//! that fits inside the horizon may always be continued by one such frozen
//! window.
//!
//! A learnable rate `r` promises a good window among the first
//! `floor(r) + 1` windows (indices `n <= r`).

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{floor_index, stable_sum};
use crate::path_statistics::{
    count_crossings, count_downcrossings, count_fluctuations, count_traversals, count_upcrossings,
    make_partition, window_oscillates, Interval, Path,
};
use crate::prob_space::{classify_martingale, AtomicProcess, Filtration};
use crate::rate_calculus::{crossing_window_bound, GFunction, Schedule};
use crate::sampling::{empirical_process, replicate_rng, PathSampler};

pub const REPORT_SCHEMA: &str = "metastable.report/1";

/// Composition of [`standard_battery`]; bump when it changes.
pub const BATTERY_VERSION: u32 = 1;

/// Random schedules in the standard battery.
pub const BATTERY_RANDOM_SCHEDULES: usize = 100;

/// Two-sided confidence used for Monte Carlo bounds.
pub const MC_CONFIDENCE: f64 = 0.95;

/// Fewest samples accepted for a Monte Carlo estimate.
pub const MC_MIN_SAMPLES: usize = 100;

/// Slack allowed when comparing exact expectations with closed-form bounds.
pub const INEQUALITY_TOLERANCE: f64 = 1e-12;

/// Horizons up to this size may be searched exhaustively.
pub const EXHAUSTIVE_HORIZON: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    LearnableUniform,
    LearnablePointwise,
    MetastableUniform,
    MetastablePointwise,
    FlucModulus,
    CrossingModulus,
    TightnessModulus,
    BoundednessModulus,
}

/// A claim evaluated at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateClaim {
    pub kind: ClaimKind,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// The rate or modulus value at `(lambda, epsilon)`; absent for
    /// metastable claims, whose bound depends on `g`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    /// `(M, l)` of a crossing partition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<(f64, usize)>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

impl RateClaim {
    pub fn new(kind: ClaimKind, lambda: f64, epsilon: Option<f64>, rate: Option<f64>) -> Self {
        RateClaim {
            kind,
            lambda,
            epsilon,
            rate,
            interval: None,
            partition: None,
            label: String::new(),
        }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    /// `E Up <= E (X_last - α)^+ / (β - α)` for submartingales.
    DoobUp,
    /// `E Up <= E (f - α)^+ / (β - α)` for ergodic averages of `f`.
    BishopUp,
    /// `P(Down >= k) <= (α/β)^k` for averages of nonnegative `f`.
    IvanovDown,
    /// `Cross <= 2 Up + 1` on every path.
    CrossingVsUp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "claim", rename_all = "snake_case")]
pub enum Claim {
    Rate(RateClaim),
    Inequality { kind: InequalityKind, intervals: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Validated,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// 0 validated, 1 violated, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Validated => 0,
            Verdict::Violated => 1,
            Verdict::Inconclusive => 2,
        }
    }

    /// Violated beats inconclusive beats validated.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Violated, _) | (_, Violated) => Violated,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Validated,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_table: Option<Vec<usize>>,
    /// The window, time or count at which the claim fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_index: Option<usize>,
    /// The measured probability or expectation.
    pub probability: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo { samples: usize, confidence: f64, half_width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub claim: Claim,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub horizon: usize,
    #[serde(flatten)]
    pub mode: Mode,
    /// Schedules, g functions, intervals or parameter points examined.
    pub checked: usize,
    /// Longest run of leading bad windows over the schedules examined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bad_prefix: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Wall time, kept out of the serialized form so reports are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl VerificationReport {
    fn new(claim: Claim, horizon: usize, mode: Mode) -> Self {
        VerificationReport {
            schema: REPORT_SCHEMA.to_string(),
            claim,
            verdict: Verdict::Validated,
            witness: None,
            horizon,
            mode,
            checked: 0,
            max_bad_prefix: None,
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn is_validated(&self) -> bool {
        self.verdict == Verdict::Validated
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }

    fn absorb(&mut self, outcome: Outcome) {
        self.checked += 1;
        if let Some(prefix) = outcome.bad_prefix {
            self.max_bad_prefix = Some(self.max_bad_prefix.map_or(prefix, |m| m.max(prefix)));
        }
        let before = self.verdict;
        self.verdict = self.verdict.combine(outcome.verdict);
        if outcome.verdict == Verdict::Violated && before != Verdict::Violated {
            self.witness = outcome.witness;
        }
        if let Some(note) = outcome.note {
            if !self.notes.contains(&note) {
                self.notes.push(note);
            }
        }
    }

    fn finish(mut self, started: Instant) -> Self {
        self.elapsed = started.elapsed();
        self
    }
}

/// Result of one schedule, g function or interval.
struct Outcome {
    verdict: Verdict,
    witness: Option<Witness>,
    bad_prefix: Option<usize>,
    note: Option<String>,
}

impl Outcome {
    fn validated() -> Self {
        Outcome { verdict: Verdict::Validated, witness: None, bad_prefix: None, note: None }
    }

    fn violated(witness: Witness) -> Self {
        Outcome { verdict: Verdict::Violated, witness: Some(witness), bad_prefix: None, note: None }
    }

    fn with_prefix(mut self, prefix: usize) -> Self {
        self.bad_prefix = Some(prefix);
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// How a window probability compares with `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Below,
    AtLeast,
    Unsure,
}

/// Exact weights, or an empirical sample with a confidence half-width.
#[derive(Clone, Copy)]
struct Judge {
    lambda: f64,
    half_width: f64,
}

impl Judge {
    fn side(&self, p: f64) -> Side {
        if p + self.half_width < self.lambda {
            Side::Below
        } else if p - self.half_width >= self.lambda {
            Side::AtLeast
        } else {
            Side::Unsure
        }
    }
}

/// `λ = 1` is accepted: "probability below 1" is still a meaningful check.
fn check_lambda_eps(lambda: f64, epsilon: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::domain(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Windows the claim quantifies over: `floor(rate) + 1`.
fn windows_for(rate: f64) -> Result<usize> {
    if !(rate >= 0.0) {
        return Err(Error::domain(format!("rate must be nonnegative, got {rate}")));
    }
    Ok(floor_index(rate).map_or(usize::MAX, |n| n.saturating_add(1)))
}

/// Whether `[a; b]`, clipped to the horizon, moves by `epsilon` on `path`.
pub fn path_oscillates_on(path: &[f64], a: usize, b: usize, epsilon: f64) -> bool {
    let end = b.min(path.len().saturating_sub(1));
    a < end && window_oscillates(&path[a..=end], epsilon)
}

/// Atoms on which `[a; b]` oscillates by `epsilon`.
pub fn window_event(process: &AtomicProcess, a: usize, b: usize, epsilon: f64) -> Vec<bool> {
    process
        .paths()
        .iter()
        .map(|p| path_oscillates_on(p.values(), a, b, epsilon))
        .collect()
}

fn mass(process: &AtomicProcess, event: &[bool]) -> f64 {
    stable_sum(process.weights().iter().zip(event).filter(|(_, &e)| e).map(|(w, _)| *w))
}

/// `P(exists i, j in [a; b] with |X_i - X_j| >= epsilon)`.
pub fn window_probability(process: &AtomicProcess, a: usize, b: usize, epsilon: f64) -> f64 {
    mass(process, &window_event(process, a, b, epsilon))
}

fn check_fits(schedule: &Schedule, horizon: usize) -> Result<()> {
    if schedule.last_index() >= horizon {
        return Err(Error::input(format!(
            "schedule reaches index {} beyond horizon {horizon}",
            schedule.last_index()
        )));
    }
    Ok(())
}

fn uniform_on_schedule(process: &AtomicProcess, judge: Judge, epsilon: f64, needed: usize, s: &Schedule) -> Outcome {
    let mut unsure = false;
    let mut prefix = 0;
    let mut lowest = f64::INFINITY;
    let mut counting = true;
    for (i, &(a, b)) in s.windows().iter().enumerate().take(needed) {
        let p = window_probability(process, a, b, epsilon);
        lowest = lowest.min(p);
        match judge.side(p) {
            Side::Below => return Outcome::validated().with_prefix(prefix),
            Side::Unsure => {
                unsure = true;
                counting = false;
            }
            Side::AtLeast if counting => prefix = i + 1,
            Side::AtLeast => {}
        }
    }
    if s.len() < needed {
        return Outcome::validated()
            .with_prefix(prefix)
            .with_note("schedules shorter than the rate are continued by a frozen window past the horizon");
    }
    if unsure {
        return Outcome {
            verdict: Verdict::Inconclusive,
            witness: None,
            bad_prefix: Some(prefix),
            note: Some("some window probabilities are within the confidence bound of lambda".into()),
        };
    }
    Outcome::violated(Witness {
        schedule: s.truncated(needed),
        window_index: Some(needed - 1),
        probability: lowest,
        detail: format!("all of the first {needed} windows have probability >= lambda"),
        ..Witness::default()
    })
    .with_prefix(prefix)
}

fn pointwise_on_schedule(process: &AtomicProcess, judge: Judge, epsilon: f64, needed: usize, s: &Schedule) -> Outcome {
    if s.len() < needed {
        return Outcome::validated()
            .with_note("schedules shorter than the rate are continued by a frozen window past the horizon");
    }
    let mut all = vec![true; process.atoms()];
    for &(a, b) in s.windows().iter().take(needed) {
        for (flag, p) in all.iter_mut().zip(process.paths()) {
            *flag = *flag && path_oscillates_on(p.values(), a, b, epsilon);
        }
    }
    let p = mass(process, &all);
    match judge.side(p) {
        Side::Below => Outcome::validated(),
        Side::Unsure => Outcome {
            verdict: Verdict::Inconclusive,
            witness: None,
            bad_prefix: None,
            note: Some("intersection probability is within the confidence bound of lambda".into()),
        },
        Side::AtLeast => Outcome::violated(Witness {
            schedule: s.truncated(needed),
            window_index: Some(needed - 1),
            probability: p,
            detail: format!("every one of the first {needed} windows oscillates with probability >= lambda"),
            ..Witness::default()
        }),
    }
}

fn learnable(
    process: &AtomicProcess,
    kind: ClaimKind,
    rate: f64,
    lambda: f64,
    epsilon: f64,
    schedules: &[Schedule],
    mode: Mode,
    half_width: f64,
) -> Result<VerificationReport> {
    let started = Instant::now();
    check_lambda_eps(lambda, epsilon)?;
    let needed = windows_for(rate)?;
    for s in schedules {
        check_fits(s, process.horizon())?;
    }
    let judge = Judge { lambda, half_width };
    let outcomes: Vec<Outcome> = schedules
        .par_iter()
        .map(|s| match kind {
            ClaimKind::LearnablePointwise => pointwise_on_schedule(process, judge, epsilon, needed, s),
            _ => uniform_on_schedule(process, judge, epsilon, needed, s),
        })
        .collect();
    let claim = Claim::Rate(RateClaim::new(kind, lambda, Some(epsilon), Some(rate)));
    let mut report = VerificationReport::new(claim, process.horizon(), mode);
    for o in outcomes {
        report.absorb(o);
    }
    if kind == ClaimKind::LearnablePointwise {
        report.max_bad_prefix = None;
    }
    Ok(report.finish(started))
}

/// Every schedule must have a window among its first `floor(rate) + 1`
/// with oscillation probability below `lambda`.
pub fn check_learnable_uniform(
    process: &AtomicProcess,
    rate: f64,
    lambda: f64,
    epsilon: f64,
    schedules: &[Schedule],
) -> Result<VerificationReport> {
    learnable(process, ClaimKind::LearnableUniform, rate, lambda, epsilon, schedules, Mode::Exact, 0.0)
}

/// For every schedule, the probability that all of its first
/// `floor(rate) + 1` windows oscillate must be below `lambda`.
pub fn check_learnable_pointwise(
    process: &AtomicProcess,
    rate: f64,
    lambda: f64,
    epsilon: f64,
    schedules: &[Schedule],
) -> Result<VerificationReport> {
    learnable(process, ClaimKind::LearnablePointwise, rate, lambda, epsilon, schedules, Mode::Exact, 0.0)
}

/// Hoeffding half-width at [`MC_CONFIDENCE`].
pub fn hoeffding_half_width(samples: usize) -> f64 {
    ((2.0 / (1.0 - MC_CONFIDENCE)).ln() / (2.0 * samples as f64)).sqrt()
}

/// Learnable checks on a sampled process. A window counts as good or bad
/// only when the confidence interval clears `lambda`; otherwise the
/// verdict is inconclusive.
#[allow(clippy::too_many_arguments)]
pub fn check_learnable_mc(
    sampler: &dyn PathSampler,
    kind: ClaimKind,
    rate: f64,
    lambda: f64,
    epsilon: f64,
    schedules: &[Schedule],
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if !matches!(kind, ClaimKind::LearnableUniform | ClaimKind::LearnablePointwise) {
        return Err(Error::input(format!("{kind:?} is not a learnable claim")));
    }
    if samples < MC_MIN_SAMPLES {
        return Err(Error::input(format!("need at least {MC_MIN_SAMPLES} samples, got {samples}")));
    }
    let process = empirical_process(sampler, samples, seed)?;
    let half_width = hoeffding_half_width(samples);
    let mode = Mode::MonteCarlo { samples, confidence: MC_CONFIDENCE, half_width };
    learnable(&process, kind, rate, lambda, epsilon, schedules, mode, half_width)
}

/// Learnable checks on an already sampled process (uniform weights), with
/// windows judged against the given confidence half-width.
#[allow(clippy::too_many_arguments)]
pub fn check_learnable_empirical(
    sample: &AtomicProcess,
    kind: ClaimKind,
    rate: f64,
    lambda: f64,
    epsilon: f64,
    schedules: &[Schedule],
    half_width: f64,
) -> Result<VerificationReport> {
    if !matches!(kind, ClaimKind::LearnableUniform | ClaimKind::LearnablePointwise) {
        return Err(Error::input(format!("{kind:?} is not a learnable claim")));
    }
    let mode = Mode::MonteCarlo { samples: sample.atoms(), confidence: MC_CONFIDENCE, half_width };
    learnable(sample, kind, rate, lambda, epsilon, schedules, mode, half_width)
}

/// Estimated window probability and its Hoeffding half-width.
pub fn mc_estimate_window_probability(
    sampler: &dyn PathSampler,
    a: usize,
    b: usize,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < MC_MIN_SAMPLES {
        return Err(Error::input(format!("need at least {MC_MIN_SAMPLES} samples, got {samples}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if a >= b || b >= sampler.horizon() {
        return Err(Error::input(format!(
            "window [{a}; {b}] is not inside horizon {}",
            sampler.horizon()
        )));
    }
    let hits = (0..samples)
        .into_par_iter()
        .map(|r| {
            let path = sampler.sample(&mut replicate_rng(seed, r as u64))?;
            Ok(path_oscillates_on(path.values(), a, b, epsilon))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();
    Ok((hits as f64 / samples as f64, hoeffding_half_width(samples)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetastableMode {
    Uniform,
    Pointwise,
}

/// The metastable condition for each `g`, with `bound(g)` the index up to
/// which a stable window `[n; n + g(n)]` must exist. Budget or overflow
/// failures in `bound` make that `g` inconclusive.
pub fn check_metastable(
    process: &AtomicProcess,
    bound: impl Fn(&GFunction) -> Result<usize> + Sync,
    lambda: f64,
    epsilon: f64,
    gs: &[GFunction],
    mode: MetastableMode,
) -> Result<VerificationReport> {
    let started = Instant::now();
    check_lambda_eps(lambda, epsilon)?;
    let horizon = process.horizon();
    let outcomes = gs
        .par_iter()
        .map(|g| -> Result<Outcome> {
            let n_max = match bound(g) {
                Ok(n) => n,
                Err(e @ (Error::Budget { .. } | Error::Overflow(_))) => {
                    return Ok(Outcome {
                        verdict: Verdict::Inconclusive,
                        witness: None,
                        bad_prefix: None,
                        note: Some(e.to_string()),
                    })
                }
                Err(e) => return Err(e),
            };
            let last_real = horizon.saturating_sub(2);
            let window = |n: usize| (n, n.saturating_add(g.eval(n)));
            let table = || g.to_table(n_max.min(last_real) + 1);
            match mode {
                MetastableMode::Uniform => {
                    let mut lowest = f64::INFINITY;
                    for n in 0..=n_max.min(last_real) {
                        let (a, b) = window(n);
                        let p = window_probability(process, a, b, epsilon);
                        if p < lambda {
                            return Ok(Outcome::validated());
                        }
                        lowest = lowest.min(p);
                    }
                    if n_max > last_real {
                        return Ok(Outcome::validated()
                            .with_note("windows from the last index onward are frozen and stable"));
                    }
                    Ok(Outcome::violated(Witness {
                        g_table: Some(table()),
                        window_index: Some(n_max),
                        probability: lowest,
                        detail: format!("every window [n; n + g(n)] with n <= {n_max} has probability >= lambda"),
                        ..Witness::default()
                    }))
                }
                MetastableMode::Pointwise => {
                    if n_max > last_real {
                        return Ok(Outcome::validated()
                            .with_note("windows from the last index onward are frozen and stable"));
                    }
                    let mut all = vec![true; process.atoms()];
                    for n in 0..=n_max {
                        let (a, b) = window(n);
                        for (flag, p) in all.iter_mut().zip(process.paths()) {
                            *flag = *flag && path_oscillates_on(p.values(), a, b, epsilon);
                        }
                    }
                    let p = mass(process, &all);
                    if p < lambda {
                        Ok(Outcome::validated())
                    } else {
                        Ok(Outcome::violated(Witness {
                            g_table: Some(table()),
                            window_index: Some(n_max),
                            probability: p,
                            detail: format!("all windows [n; n + g(n)] with n <= {n_max} oscillate together"),
                            ..Witness::default()
                        }))
                    }
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = match mode {
        MetastableMode::Uniform => ClaimKind::MetastableUniform,
        MetastableMode::Pointwise => ClaimKind::MetastablePointwise,
    };
    let claim = Claim::Rate(RateClaim::new(kind, lambda, Some(epsilon), None));
    let mut report = VerificationReport::new(claim, horizon, Mode::Exact);
    for o in outcomes {
        report.absorb(o);
    }
    Ok(report.finish(started))
}

/// The tail statistic a modulus bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modulus", rename_all = "snake_case")]
pub enum Modulus {
    /// `P(sup_n |X_n| >= φ) < λ`.
    Boundedness,
    /// `P(|X_n| >= φ) < λ` for every `n`.
    Tightness,
    /// `P(Fluc_ε >= φ) < λ`.
    Fluctuation { epsilon: f64 },
    /// `P(Cross_[α,β] >= φ) < λ`.
    Crossing { lo: f64, hi: f64 },
    /// `P(some cell of P(M, l) is crossed φ times or more) < λ`.
    CrossingPartition { m: f64, l: usize },
}

/// Compare one modulus value with the exact tail probability.
pub fn check_modulus(process: &AtomicProcess, modulus: Modulus, lambda: f64, value: f64) -> Result<VerificationReport> {
    let started = Instant::now();
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if value.is_nan() {
        return Err(Error::domain("modulus value is NaN"));
    }
    let mut claim = RateClaim::new(ClaimKind::FlucModulus, lambda, None, Some(value));
    let mut worst_time = None;
    let p = match modulus {
        Modulus::Boundedness => {
            claim.kind = ClaimKind::BoundednessModulus;
            process.probability_that(|q| q.values().iter().any(|v| v.abs() >= value))
        }
        Modulus::Tightness => {
            claim.kind = ClaimKind::TightnessModulus;
            let mut worst = 0.0;
            for n in 0..process.horizon() {
                let p = process.probability_that(|q| q[n].abs() >= value);
                if p > worst || worst_time.is_none() {
                    worst = p;
                    worst_time = Some(n);
                }
            }
            worst
        }
        Modulus::Fluctuation { epsilon } => {
            claim.epsilon = Some(epsilon);
            let counts = per_atom(process, |q| count_fluctuations(q, epsilon, None))?;
            tail_mass(process, &counts, value)
        }
        Modulus::Crossing { lo, hi } => {
            claim.kind = ClaimKind::CrossingModulus;
            claim.interval = Some([lo, hi]);
            let iv = Interval::new(lo, hi)?;
            let counts = per_atom(process, |q| count_crossings(q, iv, None))?;
            tail_mass(process, &counts, value)
        }
        Modulus::CrossingPartition { m, l } => {
            claim.kind = ClaimKind::CrossingModulus;
            claim.partition = Some((m, l));
            let cells = make_partition(m, l)?;
            let counts = per_atom(process, |q| {
                cells
                    .iter()
                    .map(|&c| count_crossings(q, c, None))
                    .try_fold(0, |acc, c| c.map(|c| acc.max(c)))
            })?;
            tail_mass(process, &counts, value)
        }
    };
    let mut report = VerificationReport::new(Claim::Rate(claim), process.horizon(), Mode::Exact);
    let outcome = if p < lambda {
        Outcome::validated()
    } else {
        Outcome::violated(Witness {
            window_index: worst_time,
            probability: p,
            detail: format!("tail probability at {value} is >= lambda"),
            ..Witness::default()
        })
    };
    report.absorb(outcome);
    Ok(report.finish(started))
}

/// A crossing-modulus family `φ(λ, M, l)` over a grid of partitions.
pub fn check_crossing_modulus(
    process: &AtomicProcess,
    phi: impl Fn(f64, f64, usize) -> f64,
    lambda: f64,
    grid: &[(f64, usize)],
) -> Result<VerificationReport> {
    let started = Instant::now();
    let mut claim = RateClaim::new(ClaimKind::CrossingModulus, lambda, None, None);
    claim.label = format!("{} partitions", grid.len());
    let mut report = VerificationReport::new(Claim::Rate(claim), process.horizon(), Mode::Exact);
    for &(m, l) in grid {
        let value = phi(lambda, m, l);
        let single = check_modulus(process, Modulus::CrossingPartition { m, l }, lambda, value)?;
        let mut witness = single.witness;
        if let Some(w) = witness.as_mut() {
            w.detail = format!("partition M = {m}, l = {l}: {}", w.detail);
        }
        report.absorb(Outcome { verdict: single.verdict, witness, bad_prefix: None, note: None });
    }
    Ok(report.finish(started))
}

fn per_atom(process: &AtomicProcess, f: impl Fn(&Path) -> Result<usize> + Sync + Send) -> Result<Vec<usize>> {
    process.paths().par_iter().map(f).collect()
}

fn tail_mass(process: &AtomicProcess, counts: &[usize], threshold: f64) -> f64 {
    stable_sum(
        process
            .weights()
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c as f64 >= threshold)
            .map(|(w, _)| *w),
    )
}

/// `E[Fluc_ε]` over the horizon.
pub fn expected_fluctuations(process: &AtomicProcess, epsilon: f64) -> Result<f64> {
    let counts = per_atom(process, |q| count_fluctuations(q, epsilon, None))?;
    Ok(stable_sum(process.weights().iter().zip(&counts).map(|(w, &c)| w * c as f64)))
}

/// Least `n` with `P(Fluc_ε >= n) < λ`.
pub fn fluctuation_tail_rate(process: &AtomicProcess, epsilon: f64, lambda: f64) -> Result<usize> {
    let counts = per_atom(process, |q| count_fluctuations(q, epsilon, None))?;
    let top = counts.iter().copied().max().unwrap_or(0);
    Ok((0..=top + 1)
        .find(|&n| tail_mass(process, &counts, n as f64) < lambda)
        .unwrap_or(top + 1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SearchStrategy {
    /// Each window is the shortest bad one starting where the last ended.
    Greedy,
    /// Every chain of back-to-back windows, for horizons up to
    /// [`EXHAUSTIVE_HORIZON`].
    ExhaustiveSmall,
    Random { seed: u64, tries: usize },
}

/// The longest chain of back-to-back windows with probability at least
/// `lambda`, built shortest-first from index 0. Since the oscillation event
/// only grows with the window, no schedule has more leading bad windows.
pub fn greedy_bad_chain(process: &AtomicProcess, lambda: f64, epsilon: f64, limit: usize) -> Vec<(usize, usize)> {
    let t = process.horizon();
    let mut windows = Vec::new();
    let mut start = 0;
    while windows.len() < limit && start + 1 < t {
        let mut lo: Vec<f64> = process.paths().iter().map(|p| p[start]).collect();
        let mut hi = lo.clone();
        let mut found = None;
        for b in start + 1..t {
            let mut flags = Vec::with_capacity(process.atoms());
            for (i, p) in process.paths().iter().enumerate() {
                lo[i] = lo[i].min(p[b]);
                hi[i] = hi[i].max(p[b]);
                flags.push(hi[i] - lo[i] >= epsilon);
            }
            if mass(process, &flags) >= lambda {
                found = Some(b);
                break;
            }
        }
        match found {
            Some(b) => {
                windows.push((start, b));
                start = b;
            }
            None => break,
        }
    }
    windows
}

/// A schedule defeating `rate` as a learnable uniform rate, if the strategy
/// finds one.
pub fn search_adversarial_schedule(
    process: &AtomicProcess,
    rate: f64,
    lambda: f64,
    epsilon: f64,
    strategy: SearchStrategy,
) -> Result<Option<Schedule>> {
    check_lambda_eps(lambda, epsilon)?;
    let needed = windows_for(rate)?;
    let t = process.horizon();
    if needed >= t {
        return Ok(None);
    }
    let defeats = |s: &Schedule| uniform_on_schedule(process, Judge { lambda, half_width: 0.0 }, epsilon, needed, s).verdict
        == Verdict::Violated;
    match strategy {
        SearchStrategy::Greedy => {
            let chain = greedy_bad_chain(process, lambda, epsilon, needed);
            Ok((chain.len() == needed).then(|| Schedule::new(chain)).transpose()?)
        }
        SearchStrategy::ExhaustiveSmall => {
            if t > EXHAUSTIVE_HORIZON {
                return Err(Error::input(format!(
                    "exhaustive search is limited to horizon {EXHAUSTIVE_HORIZON}, got {t}"
                )));
            }
            let mut stack = Vec::new();
            Ok(exhaustive(process, lambda, epsilon, needed, 0, &mut stack)
                .map(Schedule::new)
                .transpose()?
                .filter(|s| defeats(s)))
        }
        SearchStrategy::Random { seed, tries } => {
            let mut rng = replicate_rng(seed, 0);
            for _ in 0..tries {
                if let Some(s) = random_schedule(&mut rng, t) {
                    if defeats(&s) {
                        return Ok(s.truncated(needed));
                    }
                }
            }
            Ok(None)
        }
    }
}

fn exhaustive(
    process: &AtomicProcess,
    lambda: f64,
    epsilon: f64,
    needed: usize,
    start: usize,
    stack: &mut Vec<(usize, usize)>,
) -> Option<Vec<(usize, usize)>> {
    if stack.len() == needed {
        return Some(stack.clone());
    }
    for b in start + 1..process.horizon() {
        if window_probability(process, start, b, epsilon) >= lambda {
            stack.push((start, b));
            if let Some(found) = exhaustive(process, lambda, epsilon, needed, b, stack) {
                return Some(found);
            }
            stack.pop();
        }
    }
    None
}

/// A random interleaved schedule inside `[0, horizon)`: gaps of 0 to 2 and
/// window lengths up to an eighth of the horizon.
pub fn random_schedule(rng: &mut ChaCha8Rng, horizon: usize) -> Option<Schedule> {
    if horizon < 2 {
        return None;
    }
    let span = (horizon / 8).max(1);
    let mut windows = Vec::new();
    let mut at = rng.random_range(0..=span.min(horizon - 2));
    loop {
        let b = at + rng.random_range(1..=span);
        if b >= horizon {
            break;
        }
        windows.push((at, b));
        at = b + rng.random_range(0..=2usize);
        if at + 1 >= horizon {
            break;
        }
    }
    if windows.is_empty() {
        windows.push((0, 1));
    }
    Schedule::new(windows).ok()
}

/// `[j; j + 1]` for every `j` below the last index.
pub fn consecutive_pairs(horizon: usize) -> Option<Schedule> {
    Schedule::new((0..horizon.saturating_sub(1)).map(|j| (j, j + 1)).collect()).ok()
}

/// `[2^k - 1; 2^(k+1) - 1]` while inside the horizon.
pub fn dyadic_windows(horizon: usize) -> Option<Schedule> {
    let windows = (0..usize::BITS - 1)
        .map(|k| ((1usize << k) - 1, (1usize << (k + 1)) - 1))
        .take_while(|&(_, b)| b < horizon)
        .collect();
    Schedule::new(windows).ok()
}

/// The versioned battery: consecutive pairs, dyadic windows, the greedy
/// bad chain (closed off by one last window), and
/// [`BATTERY_RANDOM_SCHEDULES`] random schedules drawn from `seed`.
pub fn standard_battery(process: &AtomicProcess, lambda: f64, epsilon: f64, seed: u64) -> Result<Vec<Schedule>> {
    check_lambda_eps(lambda, epsilon)?;
    let t = process.horizon();
    let mut out = Vec::new();
    out.extend(consecutive_pairs(t));
    out.extend(dyadic_windows(t));
    let mut chain = greedy_bad_chain(process, lambda, epsilon, usize::MAX);
    let end = chain.last().map_or(0, |w| w.1);
    if end + 1 < t {
        chain.push((end, t - 1));
    }
    out.extend(Schedule::new(chain).ok());
    let mut rng = replicate_rng(seed, BATTERY_VERSION as u64);
    for _ in 0..BATTERY_RANDOM_SCHEDULES {
        out.extend(random_schedule(&mut rng, t));
    }
    Ok(out)
}

/// Windows `[g~^i(0); g~^(i+1)(0)]`, the last one clipped to the horizon.
pub fn schedule_from_g_clipped(g: &GFunction, horizon: usize) -> Result<Option<Schedule>> {
    let last = horizon.saturating_sub(1);
    let mut windows = Vec::new();
    let mut n = 0;
    while n < last {
        let next = g.step(n)?;
        if next == n {
            break;
        }
        windows.push((n, next.min(last)));
        n = next;
    }
    (!windows.is_empty()).then(|| Schedule::new(windows)).transpose()
}

/// Smallest `M` among the observed magnitudes with
/// `max_n P(|X_n| >= M) < share`.
pub fn tightness_level(process: &AtomicProcess, share: f64) -> f64 {
    let mut levels: Vec<f64> = process
        .paths()
        .iter()
        .flat_map(|p| p.values().iter().map(|v| v.abs().next_up()))
        .collect();
    levels.push(f64::MIN_POSITIVE);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let worst = |m: f64| {
        (0..process.horizon())
            .map(|n| process.probability_that(|q| q[n].abs() >= m))
            .fold(0.0, f64::max)
    };
    let idx = levels.partition_point(|&m| worst(m) >= share);
    levels[idx.min(levels.len() - 1)]
}

/// The window bound `2(p + 2)L/λ` from exact ingredients: `M` the
/// tightness level at `λ/2`, `L` the largest expected crossing count of a
/// cell of `P(M(1 + 2/p), p + 2)`, `p = ceil(8M/ε)`. Returns `(bound, M, L)`.
pub fn crossing_window_rate(process: &AtomicProcess, lambda: f64, epsilon: f64) -> Result<(f64, f64, f64)> {
    check_lambda_eps(lambda, epsilon)?;
    let m = tightness_level(process, lambda / 2.0);
    let p = crate::numeric::ceil_index(8.0 * m / epsilon)
        .filter(|&p| p >= 1)
        .ok_or_else(|| Error::domain("partition size overflows"))?;
    let cells = make_partition(m * (1.0 + 2.0 / p as f64), p + 2)?;
    let mut l_max = 0.0_f64;
    for cell in cells {
        let counts = per_atom(process, |q| count_crossings(q, cell, None))?;
        let mean = stable_sum(process.weights().iter().zip(&counts).map(|(w, &c)| w * c as f64));
        l_max = l_max.max(mean);
    }
    Ok((crossing_window_bound(l_max, m, lambda, epsilon)?, m, l_max))
}

/// Exact comparison of crossing counts with the classical bounds.
///
/// `filtration` defaults to the natural one. `observable` is `f` on each
/// atom, needed by the ergodic bounds. `max_k` sets the largest count in
/// the downcrossing tail.
pub fn check_crossing_inequalities(
    process: &AtomicProcess,
    filtration: Option<&Filtration>,
    observable: Option<&[f64]>,
    intervals: &[Interval],
    kind: InequalityKind,
    max_k: usize,
) -> Result<VerificationReport> {
    let started = Instant::now();
    let claim = Claim::Inequality { kind, intervals: intervals.len() };
    let mut report = VerificationReport::new(claim, process.horizon(), Mode::Exact);
    let need_observable = || {
        observable
            .filter(|f| f.len() == process.atoms())
            .ok_or_else(|| Error::input(format!("{kind:?} needs an observable with one value per atom")))
    };
    match kind {
        InequalityKind::DoobUp => {
            let natural;
            let filt = match filtration {
                Some(f) => f,
                None => {
                    natural = Filtration::natural(process);
                    &natural
                }
            };
            let class = classify_martingale(process, filt)?;
            if !class.is_submartingale() {
                return Err(Error::input(format!(
                    "the upcrossing bound needs a submartingale, process classifies as {:?}",
                    class.kind
                )));
            }
        }
        InequalityKind::BishopUp => {
            need_observable()?;
        }
        InequalityKind::IvanovDown => {
            let f = need_observable()?;
            if f.iter().any(|&v| v < 0.0) {
                return Err(Error::input("the downcrossing tail needs a nonnegative observable"));
            }
            if let Some(iv) = intervals.iter().find(|iv| iv.lo() <= 0.0) {
                return Err(Error::input(format!(
                    "the downcrossing tail needs 0 < α, got [{}, {}]",
                    iv.lo(),
                    iv.hi()
                )));
            }
        }
        InequalityKind::CrossingVsUp => {}
    }
    let last = process.horizon() - 1;
    let weights = process.weights();
    let outcomes: Vec<Outcome> = intervals
        .par_iter()
        .map(|&iv| -> Result<Outcome> {
            let (a, b) = (iv.lo(), iv.hi());
            let detail = |what: String| format!("[{a}, {b}]: {what}");
            let mean_up = || stable_sum(process.paths().iter().zip(weights).map(|(p, w)| w * count_upcrossings(p, iv) as f64));
            let within = |lhs: f64, rhs: f64| lhs <= rhs + INEQUALITY_TOLERANCE * (1.0 + rhs.abs());
            Ok(match kind {
                InequalityKind::DoobUp | InequalityKind::BishopUp => {
                    let lhs = mean_up();
                    let rhs = if kind == InequalityKind::DoobUp {
                        stable_sum(process.paths().iter().zip(weights).map(|(p, w)| w * (p[last] - a).max(0.0)))
                    } else {
                        let f = observable.expect("checked above");
                        stable_sum(f.iter().zip(weights).map(|(v, w)| w * (v - a).max(0.0)))
                    } / (b - a);
                    if within(lhs, rhs) {
                        Outcome::validated()
                    } else {
                        Outcome::violated(Witness {
                            probability: lhs,
                            detail: detail(format!("E Up = {lhs} exceeds {rhs}")),
                            ..Witness::default()
                        })
                    }
                }
                InequalityKind::IvanovDown => {
                    let downs: Vec<usize> = process.paths().iter().map(|p| count_downcrossings(p, iv)).collect();
                    let mut out = Outcome::validated();
                    for k in 1..=max_k {
                        let tail = tail_mass(process, &downs, k as f64);
                        let bound = (a / b).powi(k as i32);
                        if !within(tail, bound) {
                            out = Outcome::violated(Witness {
                                window_index: Some(k),
                                probability: tail,
                                detail: detail(format!("P(Down >= {k}) = {tail} exceeds {bound}")),
                                ..Witness::default()
                            });
                            break;
                        }
                    }
                    out
                }
                InequalityKind::CrossingVsUp => {
                    let bad = process
                        .paths()
                        .iter()
                        .map(|p| count_traversals(p, iv, None))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .position(|t| t.total() > 2 * t.up + 1);
                    match bad {
                        None => Outcome::validated(),
                        Some(atom) => Outcome::violated(Witness {
                            window_index: Some(atom),
                            probability: weights[atom],
                            detail: detail(format!("atom {atom} crosses more than 2 Up + 1 times")),
                            ..Witness::default()
                        }),
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for o in outcomes {
        report.absorb(o);
    }
    Ok(report.finish(started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_library::{gen_random_walk, gen_staircase_adversarial, gen_vanishing_indicator};

    #[test]
    fn staircase_threshold() {
        for (m, n) in [(1, 1), (2, 2), (3, 2), (2, 3)] {
            let p = gen_staircase_adversarial(m, n, None).unwrap();
            let (lambda, eps) = (1.0 / n as f64, 1.0 / m as f64);
            let pairs = vec![consecutive_pairs(p.horizon()).unwrap()];
            let mn = (m * n) as f64;
            let below = check_learnable_uniform(&p, mn - 0.5, lambda, eps, &pairs).unwrap();
            assert!(below.is_violated(), "M = {m}, N = {n}");
            assert!(below.witness.as_ref().unwrap().schedule.is_some());
            let at = check_learnable_uniform(&p, mn, lambda, eps, &pairs).unwrap();
            assert!(at.is_validated(), "M = {m}, N = {n}");
        }
    }

    #[test]
    fn greedy_finds_pairs_on_staircase() {
        let p = gen_staircase_adversarial(2, 2, None).unwrap();
        let s = search_adversarial_schedule(&p, 3.0, 0.5, 0.5, SearchStrategy::Greedy).unwrap().unwrap();
        assert_eq!(s.windows(), &[(0, 1), (1, 2), (2, 3), (3, 4)][..4]);
        let e = search_adversarial_schedule(&p, 3.0, 0.5, 0.5, SearchStrategy::ExhaustiveSmall).unwrap();
        assert!(e.is_some());
        assert!(search_adversarial_schedule(&p, 4.0, 0.5, 0.5, SearchStrategy::Greedy).unwrap().is_none());
    }

    #[test]
    fn constant_process_validates() {
        let p = AtomicProcess::deterministic(vec![3.0; 10]).unwrap();
        let b = standard_battery(&p, 0.5, 0.5, 1).unwrap();
        assert!(check_learnable_uniform(&p, 0.0, 0.5, 0.5, &b).unwrap().is_validated());
        assert!(search_adversarial_schedule(&p, 0.0, 0.5, 0.5, SearchStrategy::Greedy).unwrap().is_none());
    }

    #[test]
    fn vanishing_two_over_lambda() {
        let p = gen_vanishing_indicator(60).unwrap();
        for lambda in [0.1, 0.25, 0.5] {
            let b = standard_battery(&p, lambda, 0.5, 3).unwrap();
            let r = check_learnable_uniform(&p, 2.0 / lambda, lambda, 0.5, &b).unwrap();
            assert!(r.is_validated(), "lambda = {lambda}");
        }
    }

    #[test]
    fn metastable_zero_g() {
        let p = gen_random_walk(6, 0.0, 1.0).unwrap();
        let r = check_metastable(&p, |_| Ok(0), 0.5, 0.5, &[GFunction::constant(0)], MetastableMode::Uniform).unwrap();
        assert!(r.is_validated());
    }

    #[test]
    fn schedule_outside_horizon_is_input_error() {
        let p = AtomicProcess::deterministic(vec![0.0; 3]).unwrap();
        let s = Schedule::new(vec![(0, 5)]).unwrap();
        assert!(matches!(check_learnable_uniform(&p, 1.0, 0.5, 0.5, &[s]), Err(Error::Input(_))));
    }

    #[test]
    fn hoeffding() {
        assert!((hoeffding_half_width(10_000) - 0.01358).abs() < 1e-4);
    }
}

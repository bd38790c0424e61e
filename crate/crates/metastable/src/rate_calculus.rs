//! Rate and modulus formulas, index functions and schedules.
//!
//! Rates are returned as reals. A rate `r` for "some window `n <= r`" is
//! turned into an index bound by the caller (see the verifier), while an
//! iteration count such as `g~^(r)(0)` uses the ceiling of `r`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ceil_index;
use crate::path_statistics::{make_partition, Interval};

/// Iterates of `g~` may not exceed this index unless a caller raises it.
pub const DEFAULT_INDEX_BUDGET: u64 = 1_000_000_000;

/// An index-to-index function, either tabulated or computed.
#[derive(Clone)]
pub enum GFunction {
    /// `table[n]` for `n < table.len()`, zero beyond.
    Table(Vec<usize>),
    Closure(Arc<dyn Fn(usize) -> usize + Send + Sync>),
}

impl GFunction {
    pub fn table(values: Vec<usize>) -> Self {
        GFunction::Table(values)
    }

    pub fn from_fn(f: impl Fn(usize) -> usize + Send + Sync + 'static) -> Self {
        GFunction::Closure(Arc::new(f))
    }

    pub fn constant(c: usize) -> Self {
        GFunction::from_fn(move |_| c)
    }

    pub fn eval(&self, n: usize) -> usize {
        match self {
            GFunction::Table(t) => t.get(n).copied().unwrap_or(0),
            GFunction::Closure(f) => f(n),
        }
    }

    /// `n + g(n)`.
    pub fn step(&self, n: usize) -> Result<usize> {
        n.checked_add(self.eval(n))
            .ok_or_else(|| Error::Overflow(format!("stepping g~ from {n}")))
    }

    /// The first `len` values.
    pub fn to_table(&self, len: usize) -> Vec<usize> {
        (0..len).map(|n| self.eval(n)).collect()
    }
}

impl fmt::Debug for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GFunction::Table(t) => f.debug_tuple("Table").field(t).finish(),
            GFunction::Closure(_) => f.write_str("Closure(..)"),
        }
    }
}

/// `g~^(k)(0)` with the default index budget.
pub fn iterate_g(g: &GFunction, k: u64) -> Result<usize> {
    iterate_g_with_budget(g, k, DEFAULT_INDEX_BUDGET)
}

/// `g~^(k)(0)`, failing once an iterate passes `budget`. A fixed point
/// (`g(n) = 0`) ends the loop early.
pub fn iterate_g_with_budget(g: &GFunction, k: u64, budget: u64) -> Result<usize> {
    let mut n = 0usize;
    for _ in 0..k {
        if g.eval(n) == 0 {
            break;
        }
        n = g.step(n)?;
        if n as u64 > budget {
            return Err(Error::Budget {
                budget,
                context: format!("iterating g~ {k} times"),
            });
        }
    }
    Ok(n)
}

/// `g~^(ceil(2K/ε))(0)`: a monotone sequence in `[-K, K]` is stable on some
/// `[n; n + g(n)]` with `n` at most this.
pub fn monotone_metastable_bound(k: f64, epsilon: f64, g: &GFunction) -> Result<usize> {
    positive("K", k)?;
    positive("epsilon", epsilon)?;
    let count = ceil_index(2.0 * k / epsilon)
        .ok_or_else(|| Error::domain("2K/epsilon is not a usable iteration count"))?;
    iterate_g(g, count as u64)
}

/// `g~^(ceil(rate))(0)`: the metastable bound induced by a learnable rate.
pub fn induced_metastable_bound(rate: f64, g: &GFunction, budget: u64) -> Result<usize> {
    let count = ceil_index(rate)
        .ok_or_else(|| Error::domain(format!("rate {rate} is not a usable iteration count")))?;
    iterate_g_with_budget(g, count as u64, budget)
}

/// Windows `[a_0; b_0], [a_1; b_1], ...` with `a_i < b_i <= a_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ScheduleFile", into = "ScheduleFile")]
pub struct Schedule {
    windows: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl TryFrom<ScheduleFile> for Schedule {
    type Error = Error;
    fn try_from(f: ScheduleFile) -> Result<Self> {
        Schedule::from_bounds(&f.a, &f.b)
    }
}

impl From<Schedule> for ScheduleFile {
    fn from(s: Schedule) -> Self {
        ScheduleFile {
            a: s.windows.iter().map(|w| w.0).collect(),
            b: s.windows.iter().map(|w| w.1).collect(),
        }
    }
}

impl Schedule {
    pub fn new(windows: Vec<(usize, usize)>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::contract("a schedule needs at least one window"));
        }
        for (i, &(a, b)) in windows.iter().enumerate() {
            if a >= b {
                return Err(Error::contract(format!("window {i} is [{a}; {b}], needs a < b")));
            }
            if i > 0 && windows[i - 1].1 > a {
                return Err(Error::contract(format!(
                    "window {i} starts at {a} before window {} ends at {}",
                    i - 1,
                    windows[i - 1].1
                )));
            }
        }
        Ok(Schedule { windows })
    }

    pub fn from_bounds(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::contract(format!(
                "{} window starts but {} window ends",
                a.len(),
                b.len()
            )));
        }
        Schedule::new(a.iter().copied().zip(b.iter().copied()).collect())
    }

    pub fn windows(&self) -> &[(usize, usize)] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn a(&self, i: usize) -> usize {
        self.windows[i].0
    }

    pub fn b(&self, i: usize) -> usize {
        self.windows[i].1
    }

    /// Largest index any window touches.
    pub fn last_index(&self) -> usize {
        self.windows.last().map_or(0, |w| w.1)
    }

    /// The first `len` windows.
    pub fn truncated(&self, len: usize) -> Option<Schedule> {
        (len > 0).then(|| Schedule {
            windows: self.windows[..len.min(self.windows.len())].to_vec(),
        })
    }

    /// The windows `[g~^n(0); g~^(n+1)(0)]` for as long as they are
    /// nonempty and end at or before `last`.
    pub fn from_g(g: &GFunction, last: usize) -> Result<Option<Schedule>> {
        let mut windows = Vec::new();
        let mut n = 0;
        loop {
            let next = g.step(n)?;
            if next == n || next > last {
                break;
            }
            windows.push((n, next));
            n = next;
        }
        Ok((!windows.is_empty()).then_some(Schedule { windows }))
    }
}

/// `g(n) = b_k - n` for the first window `k` with `n <= a_k`, zero past the
/// last window start.
pub fn schedule_to_g(schedule: &Schedule) -> GFunction {
    let last_start = schedule.a(schedule.len() - 1);
    let mut table = Vec::with_capacity(last_start + 1);
    let mut k = 0;
    for n in 0..=last_start {
        while schedule.a(k) < n {
            k += 1;
        }
        table.push(schedule.b(k) - n);
    }
    GFunction::Table(table)
}

/// Named constants in the rate formulas, overridable to probe tightness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    /// Almost surely monotone processes.
    pub monotone: f64,
    /// Nonnegative submartingales.
    pub submartingale: f64,
    /// General sub- and supermartingales through the Doob decomposition.
    pub doob: f64,
    /// Downcrossing route for almost-supermartingales.
    pub downcrossing: f64,
    /// Error-term weight for almost-supermartingales.
    pub error_term: f64,
}

impl Constants {
    pub const DEFAULT: Constants = Constants {
        monotone: 22.0,
        submartingale: 220.0,
        doob: 2048.0 * 9.0 * 220.0,
        downcrossing: 2.0 * 11.0 * 19.0,
        error_term: 22.0,
    };
}

impl Default for Constants {
    fn default() -> Self {
        Constants::DEFAULT
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {x}")))
    }
}

fn unit_open(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1), got {x}")))
    }
}

fn moment_bound(k: f64) -> Result<()> {
    if k.is_finite() && k >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("K must be at least 1, got {k}")))
    }
}

fn moment_order(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("p must be at least 1 (or infinite), got {p}")))
    }
}

fn nonnegative(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be nonnegative, got {x}")))
    }
}

fn lambda_eps(lambda: f64, epsilon: f64) -> Result<()> {
    unit_open("lambda", lambda)?;
    unit_open("epsilon", epsilon)
}

/// `(x)^(1/p)`, one when `p` is infinite.
fn root(x: f64, p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        x.powf(1.0 / p)
    }
}

/// The parameter bundle the rates table works on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    pub lambda: f64,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(default = "infinite")]
    pub p: f64,
    #[serde(default)]
    pub a_err: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        lambda_eps(self.lambda, self.epsilon)?;
        moment_bound(self.k)?;
        moment_order(self.p)?;
        nonnegative("a_err", self.a_err)
    }
}

/// `l * psi(M, l)` with `l = ceil(4M/ε)`.
pub fn crossings_to_fluctuations(psi: impl Fn(f64, usize) -> f64, m: f64, epsilon: f64) -> Result<f64> {
    positive("M", m)?;
    positive("epsilon", epsilon)?;
    let l = cells_for(4.0 * m / epsilon)?;
    Ok(l as f64 * psi(m, l))
}

fn cells_for(x: f64) -> Result<usize> {
    ceil_index(x)
        .filter(|&l| l >= 1)
        .ok_or_else(|| Error::domain(format!("{x} does not give a usable cell count")))
}

/// Fluctuation modulus from a crossing modulus and a bound on the sup:
/// `l * phi(λ/2, M, l)` with `M = f(λ/2)`, `l = ceil(4M/ε)`.
pub fn stochastic_fluc_modulus(
    phi_cross: impl Fn(f64, f64, usize) -> f64,
    f_bound: impl Fn(f64) -> f64,
    lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    lambda_eps(lambda, epsilon)?;
    let m = f_bound(lambda / 2.0);
    positive("M", m)?;
    let l = cells_for(4.0 * m / epsilon)?;
    Ok(l as f64 * phi_cross(lambda / 2.0, m, l))
}

/// Union bound over the cells of the `(M, l)` partition: the largest
/// per-cell modulus evaluated at `λ / l`.
pub fn combine_crossing_moduli(
    per_interval: impl Fn(Interval, f64) -> f64,
    lambda: f64,
    m: f64,
    l: usize,
) -> Result<f64> {
    unit_open("lambda", lambda)?;
    let cells = make_partition(m, l)?;
    let share = lambda / l as f64;
    Ok(cells
        .into_iter()
        .map(|cell| per_interval(cell, share))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `(p + 2) * psi(M(1 + 2/p), p + 2)` with `p = ceil(8M/ε)`.
pub fn omega_m(psi: impl Fn(f64, usize) -> f64, m: f64, epsilon: f64) -> Result<f64> {
    positive("M", m)?;
    positive("epsilon", epsilon)?;
    let p = cells_for(8.0 * m / epsilon)?;
    Ok((p + 2) as f64 * psi(m * (1.0 + 2.0 / p as f64), p + 2))
}

/// `2 * omega_{h(λ/2)}(ε) / λ`.
pub fn uniform_rate_from_crossings(
    psi: impl Fn(f64, usize) -> f64,
    h: impl Fn(f64) -> f64,
    lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    lambda_eps(lambda, epsilon)?;
    Ok(2.0 * omega_m(psi, h(lambda / 2.0), epsilon)? / lambda)
}

/// `2(p + 2) L / λ` with `p = ceil(8M/ε)`: the window bound when every
/// cell of the enlarged partition has expected crossings at most `L` and
/// `P(|X_n| >= M) < λ/2`.
pub fn crossing_window_bound(mean_crossings: f64, m: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    lambda_eps(lambda, epsilon)?;
    positive("M", m)?;
    nonnegative("L", mean_crossings)?;
    let p = cells_for(8.0 * m / epsilon)?;
    Ok(2.0 * (p + 2) as f64 * mean_crossings / lambda)
}

/// `τ(ε) / λ`.
pub fn fluc_mean_to_uniform_rate(tau: impl Fn(f64) -> f64, lambda: f64, epsilon: f64) -> Result<f64> {
    lambda_eps(lambda, epsilon)?;
    Ok(tau(epsilon) / lambda)
}

/// `ceil(K / λ)` for a statistic with mean below `K`.
pub fn expected_statistic_rate(mean_bound: f64, lambda: f64) -> Result<f64> {
    positive("K", mean_bound)?;
    unit_open("lambda", lambda)?;
    Ok((mean_bound / lambda).ceil())
}

/// `φ1(λ/2, ε/2) + φ2(λ/2, ε/2)`: a rate for the sum of two processes.
pub fn sum_rate(
    phi1: impl Fn(f64, f64) -> f64,
    phi2: impl Fn(f64, f64) -> f64,
    lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    lambda_eps(lambda, epsilon)?;
    Ok(phi1(lambda / 2.0, epsilon / 2.0) + phi2(lambda / 2.0, epsilon / 2.0))
}

/// `c_p^(2/p) K² / (λ ε²)` for martingales bounded in `L_p`, `p >= 2`,
/// given the fluctuation constant `c_p`.
pub fn lp_martingale_rate(c_p: f64, p: f64, k: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    positive("c_p", c_p)?;
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::domain(format!("this rate needs a finite p >= 2, got {p}")));
    }
    moment_bound(k)?;
    lambda_eps(lambda, epsilon)?;
    Ok(c_p.powf(2.0 / p) * k * k / (lambda * epsilon * epsilon))
}

/// Which almost-supermartingale bound to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlmostSupermartingaleRoute {
    /// Doob decomposition of the compensated process plus the error sum.
    Standard,
    /// Downcrossing inequality for supermartingales, one squared term.
    Downcrossing,
}

impl Constants {
    /// `(c / λε) * h(λ/2)` for almost surely monotone processes with
    /// tightness modulus `h`.
    pub fn monotone_uniform_rate(&self, h: impl Fn(f64) -> f64, lambda: f64, epsilon: f64) -> Result<f64> {
        lambda_eps(lambda, epsilon)?;
        let scale = h(lambda / 2.0);
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::domain(format!("tightness modulus must be at least 1, got {scale}")));
        }
        Ok(self.monotone / (lambda * epsilon) * scale)
    }

    /// `c K / (λε)` for monotone processes bounded by `K` in sup norm.
    pub fn monotone_bounded_rate(&self, k: f64, lambda: f64, epsilon: f64) -> Result<f64> {
        moment_bound(k)?;
        self.monotone_uniform_rate(|_| k, lambda, epsilon)
    }

    /// `c K² / (λ ε²) * (2/λ)^(1/p)` for nonnegative submartingales with
    /// `sup ||X_n||_p < K`.
    pub fn submartingale_rate(&self, k: f64, p: f64, lambda: f64, epsilon: f64) -> Result<f64> {
        moment_bound(k)?;
        moment_order(p)?;
        lambda_eps(lambda, epsilon)?;
        Ok(self.submartingale * k * k / (lambda * epsilon * epsilon) * root(2.0 / lambda, p))
    }

    /// `c (K / λε)²` for sub- or supermartingales with `sup E|X_n| < K`.
    pub fn doob_rate(&self, k: f64, lambda: f64, epsilon: f64) -> Result<f64> {
        moment_bound(k)?;
        lambda_eps(lambda, epsilon)?;
        let r = k / (lambda * epsilon);
        Ok(self.doob * r * r)
    }

    /// `16 c K² / (λ ε²) * (4/λ)^(1/p)` for ergodic averages of `f` with
    /// `||f||_p < K`.
    pub fn ergodic_rate(&self, k: f64, p: f64, lambda: f64, epsilon: f64) -> Result<f64> {
        moment_bound(k)?;
        moment_order(p)?;
        lambda_eps(lambda, epsilon)?;
        Ok(16.0 * self.submartingale * k * k / (lambda * epsilon * epsilon) * root(4.0 / lambda, p))
    }

    /// Rate for nonnegative almost-supermartingales with `E X_0 < K` and
    /// error mass below `a_err`.
    pub fn almost_supermartingale_rate(
        &self,
        k: f64,
        a_err: f64,
        lambda: f64,
        epsilon: f64,
        route: AlmostSupermartingaleRoute,
    ) -> Result<f64> {
        moment_bound(k)?;
        nonnegative("a_err", a_err)?;
        lambda_eps(lambda, epsilon)?;
        let le = lambda * epsilon;
        Ok(match route {
            AlmostSupermartingaleRoute::Standard => {
                let r = (k + 2.0 * a_err) / le;
                16.0 * self.doob * r * r + 4.0 * self.error_term * (a_err / le)
            }
            AlmostSupermartingaleRoute::Downcrossing => {
                let r = (k + a_err) / le;
                self.downcrossing * r * r
            }
        })
    }

    /// `g~^(ceil(c (K/λε)²))(0)`, the finitary bound for martingales with
    /// `sup E|X_n| < K`.
    pub fn finitary_martingale_bound(&self, k: f64, lambda: f64, epsilon: f64, g: &GFunction) -> Result<usize> {
        induced_metastable_bound(self.doob_rate(k, lambda, epsilon)?, g, DEFAULT_INDEX_BUDGET)
    }
}

pub fn monotone_bounded_rate(k: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    Constants::DEFAULT.monotone_bounded_rate(k, lambda, epsilon)
}

pub fn monotone_uniform_rate(h: impl Fn(f64) -> f64, lambda: f64, epsilon: f64) -> Result<f64> {
    Constants::DEFAULT.monotone_uniform_rate(h, lambda, epsilon)
}

pub fn submartingale_rate(k: f64, p: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    Constants::DEFAULT.submartingale_rate(k, p, lambda, epsilon)
}

pub fn doob_rate(k: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    Constants::DEFAULT.doob_rate(k, lambda, epsilon)
}

pub fn ergodic_rate(k: f64, p: f64, lambda: f64, epsilon: f64) -> Result<f64> {
    Constants::DEFAULT.ergodic_rate(k, p, lambda, epsilon)
}

pub fn almost_supermartingale_rate(
    k: f64,
    a_err: f64,
    lambda: f64,
    epsilon: f64,
    route: AlmostSupermartingaleRoute,
) -> Result<f64> {
    Constants::DEFAULT.almost_supermartingale_rate(k, a_err, lambda, epsilon, route)
}

/// Rate formulas addressable by name, as used in the rates table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFormula {
    /// `2K/ε`, the stability count for deterministic monotone sequences.
    ConstantMonotone,
    Monotone,
    PositiveSubmartingale,
    Doob,
    ErgodicAverage,
    AlmostSupermartingale,
    AlmostSupermartingaleDowncrossing,
    /// `ceil(K/λ)` for a fluctuation count with mean below `K`.
    ExpectedFluctuations,
}

impl RateFormula {
    pub const ALL: [RateFormula; 8] = [
        RateFormula::ConstantMonotone,
        RateFormula::Monotone,
        RateFormula::PositiveSubmartingale,
        RateFormula::Doob,
        RateFormula::ErgodicAverage,
        RateFormula::AlmostSupermartingale,
        RateFormula::AlmostSupermartingaleDowncrossing,
        RateFormula::ExpectedFluctuations,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RateFormula::ConstantMonotone => "constant_monotone",
            RateFormula::Monotone => "monotone",
            RateFormula::PositiveSubmartingale => "positive_submartingale",
            RateFormula::Doob => "doob",
            RateFormula::ErgodicAverage => "ergodic_average",
            RateFormula::AlmostSupermartingale => "almost_supermartingale",
            RateFormula::AlmostSupermartingaleDowncrossing => "almost_supermartingale_downcrossing",
            RateFormula::ExpectedFluctuations => "expected_fluctuations",
        }
    }

    pub fn from_id(id: &str) -> Option<RateFormula> {
        RateFormula::ALL.into_iter().find(|f| f.id() == id)
    }

    pub fn evaluate(self, c: &Constants, q: &RateParams) -> Result<f64> {
        q.validate()?;
        match self {
            RateFormula::ConstantMonotone => Ok(2.0 * q.k / q.epsilon),
            RateFormula::Monotone => c.monotone_bounded_rate(q.k, q.lambda, q.epsilon),
            RateFormula::PositiveSubmartingale => c.submartingale_rate(q.k, q.p, q.lambda, q.epsilon),
            RateFormula::Doob => c.doob_rate(q.k, q.lambda, q.epsilon),
            RateFormula::ErgodicAverage => c.ergodic_rate(q.k, q.p, q.lambda, q.epsilon),
            RateFormula::AlmostSupermartingale => c.almost_supermartingale_rate(
                q.k,
                q.a_err,
                q.lambda,
                q.epsilon,
                AlmostSupermartingaleRoute::Standard,
            ),
            RateFormula::AlmostSupermartingaleDowncrossing => c.almost_supermartingale_rate(
                q.k,
                q.a_err,
                q.lambda,
                q.epsilon,
                AlmostSupermartingaleRoute::Downcrossing,
            ),
            RateFormula::ExpectedFluctuations => expected_statistic_rate(q.k, q.lambda),
        }
    }
}

/// Solve `G(x) = target` for decreasing `G` on `[lo, hi]` by bisection,
/// to `|G(x) - target| <= 1e-10 (1 + |target|)`.
pub fn invert_decreasing(g: impl Fn(f64) -> f64, target: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Bracket(format!("[{lo}, {hi}] is not a proper bracket")));
    }
    let tol = 1e-10 * (1.0 + target.abs());
    let (mut g_lo, mut g_hi) = (g(lo), g(hi));
    if g_lo < g_hi {
        return Err(Error::contract(format!("G increases across [{lo}, {hi}]")));
    }
    if !(g_hi - tol <= target && target <= g_lo + tol) {
        return Err(Error::Bracket(format!(
            "target {target} outside [G(hi), G(lo)] = [{g_hi}, {g_lo}]"
        )));
    }
    if (g_lo - target).abs() <= tol {
        return Ok(lo);
    }
    if (g_hi - target).abs() <= tol {
        return Ok(hi);
    }
    loop {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            return Err(Error::contract(format!(
                "G jumps past {target} near {mid}; it is not continuous there"
            )));
        }
        let g_mid = g(mid);
        if g_mid > g_lo || g_mid < g_hi {
            return Err(Error::contract(format!("G is not decreasing near {mid}")));
        }
        if (g_mid - target).abs() <= tol {
            return Ok(mid);
        }
        if g_mid > target {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
}

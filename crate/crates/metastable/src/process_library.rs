//! Generators for the named example processes and standard test
//! martingales, realized exactly on finite atomic spaces.
//!
//! Processes defined on `[0, 1]` with Lebesgue measure are atomized on the
//! cells cut out by every breakpoint that occurs before the horizon. Values
//! at the finitely many breakpoints themselves carry no mass and are ignored.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path_statistics::Path;
use crate::prob_space::{AtomicProcess, AtomicSpace, Filtration};
use crate::sampling::StepRule;

/// Exact binary trees stop here (2^20 atoms).
pub const MAX_TREE_STEPS: usize = 20;

/// Cells times horizon allowed for rotation averages.
pub const MAX_ROTATION_WORK: u64 = 50_000_000;

/// A nonnegative rational `num / den`.
#[derive(Clone, Copy, Debug, Eq)]
struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den);
        Rational { num: num / g, den: den / g }
    }

    /// `other - self` as a double, computed from one integer numerator.
    fn gap_to(self, other: Rational) -> f64 {
        let n = other.num as u128 * self.den as u128 - self.num as u128 * other.den as u128;
        n as f64 / (self.den as u128 * other.den as u128) as f64
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// Sorted distinct breakpoints including 0 and 1, returned as the list of
/// cells `(lo, hi)` between neighbours.
fn cells_between(mut points: Vec<Rational>) -> Vec<(Rational, Rational)> {
    points.push(Rational::new(0, 1));
    points.push(Rational::new(1, 1));
    points.sort();
    points.dedup();
    points.windows(2).map(|w| (w[0], w[1])).collect()
}

fn rational_cells_process(
    cells: &[(Rational, Rational)],
    horizon: usize,
    value: impl Fn(usize, Rational, Rational) -> f64,
) -> Result<AtomicProcess> {
    let weights = cells.iter().map(|&(lo, hi)| lo.gap_to(hi)).collect();
    let rows = cells
        .iter()
        .map(|&(lo, hi)| (0..horizon).map(|n| value(n, lo, hi)).collect())
        .collect();
    AtomicProcess::from_rows(weights, rows)
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        Err(Error::input("horizon must be at least 1"))
    } else {
        Ok(())
    }
}

/// Time index `t` of the tightness example as `(level, position)`:
/// `X_t = level * I[position/level, (position+1)/level]`.
fn tightness_slot(t: usize) -> (u64, u64) {
    let mut level = 1u64;
    let mut first = 0u64;
    while first + level <= t as u64 {
        first += level;
        level += 1;
    }
    (level, t as u64 - first)
}

/// `X_0 = 1`, then `k` indicators `k I[j/k, (j+1)/k]` at level `k`. Every
/// time has mean one, yet the supremum reaches each completed level on
/// every atom.
pub fn gen_tightness_example(horizon: usize) -> Result<AtomicProcess> {
    check_horizon(horizon)?;
    let points = (0..horizon)
        .flat_map(|t| {
            let (k, j) = tightness_slot(t);
            [Rational::new(j, k), Rational::new(j + 1, k)]
        })
        .collect();
    let cells = cells_between(points);
    rational_cells_process(&cells, horizon, |t, lo, _| {
        let (k, j) = tightness_slot(t);
        let inside = Rational::new(j, k) <= lo && lo < Rational::new(j + 1, k);
        if inside {
            k as f64
        } else {
            0.0
        }
    })
}

/// Largest level whose indicators all appear before `horizon`.
pub fn tightness_complete_level(horizon: usize) -> u64 {
    if horizon == 0 {
        return 0;
    }
    let (k, j) = tightness_slot(horizon - 1);
    if j + 1 == k {
        k
    } else {
        k - 1
    }
}

/// `X_{2n} = 0`, `X_{2n+1} = I(1/(2(n+1)), 1/(n+1))`.
pub fn gen_vanishing_indicator(horizon: usize) -> Result<AtomicProcess> {
    check_horizon(horizon)?;
    let bumps = horizon / 2;
    let bump = |n: u64| (Rational::new(1, 2 * (n + 1)), Rational::new(1, n + 1));
    let points = (0..bumps as u64)
        .flat_map(|n| {
            let (lo, hi) = bump(n);
            [lo, hi]
        })
        .collect();
    let cells = cells_between(points);
    rational_cells_process(&cells, horizon, |t, lo, hi| {
        if t % 2 == 0 {
            return 0.0;
        }
        let (blo, bhi) = bump((t / 2) as u64);
        if blo <= lo && hi <= bhi {
            1.0
        } else {
            0.0
        }
    })
}

/// The deterministic step sequence: 0, then `i/M` on `((i-1)N, iN]`, then 1.
/// Steps are computed as `i/M` in double precision, so for some `M > 4` a
/// step rounds to just below `1/M`.
pub fn staircase_sequence(m: usize, n_width: usize, t: usize) -> f64 {
    if t == 0 {
        0.0
    } else if t > m * n_width {
        1.0
    } else {
        t.div_ceil(n_width) as f64 / m as f64
    }
}

/// `N` equally likely shifted copies of the staircase climbing to 1 in `M`
/// steps of width `N`: atom `k` is zero before time `k` and follows the
/// staircase from there. Defaults to horizon `MN + 1`, the first time all
/// atoms have finished climbing.
pub fn gen_staircase_adversarial(m: usize, n_width: usize, horizon: Option<usize>) -> Result<AtomicProcess> {
    if m == 0 || n_width == 0 {
        return Err(Error::domain("staircase needs M >= 1 and N >= 1"));
    }
    let horizon = horizon.unwrap_or(m * n_width + 1);
    check_horizon(horizon)?;
    let rows = (0..n_width)
        .map(|k| {
            (0..horizon)
                .map(|t| if t < k { 0.0 } else { staircase_sequence(m, n_width, t - k) })
                .collect()
        })
        .collect();
    AtomicProcess::from_rows(vec![1.0 / n_width as f64; n_width], rows)
}

/// `X_n = n I[0, a_n)` for a nonincreasing sequence in `[0, 1]`.
pub fn gen_slow_fluc(a_seq: &[f64], horizon: usize) -> Result<AtomicProcess> {
    check_horizon(horizon)?;
    if a_seq.len() < horizon {
        return Err(Error::input(format!(
            "need {horizon} sequence values, got {}",
            a_seq.len()
        )));
    }
    let a = &a_seq[..horizon];
    if let Some(i) = a.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::domain(format!("a_{i} = {} is outside [0, 1]", a[i])));
    }
    if let Some(i) = a.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::domain(format!("sequence increases at index {}", i + 1)));
    }
    let mut points: Vec<f64> = a.iter().copied().chain([0.0, 1.0]).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let cells: Vec<(f64, f64)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    let weights = cells.iter().map(|&(lo, hi)| hi - lo).collect();
    let rows = cells
        .iter()
        .map(|&(_, hi)| {
            (0..horizon)
                .map(|n| if hi <= a[n] { n as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    AtomicProcess::from_rows(weights, rows)
}

/// Full binary tree over `horizon - 1` fair coins, uniform atoms. Atom `i`'s
/// coin at step `n` is bit `steps - 1 - n` of `i`, matching
/// [`Filtration::binary_tree`].
pub fn binary_tree(
    horizon: usize,
    start: f64,
    mut step: impl FnMut(usize, f64, bool) -> Result<f64>,
) -> Result<AtomicProcess> {
    check_horizon(horizon)?;
    let steps = horizon - 1;
    if steps > MAX_TREE_STEPS {
        return Err(Error::domain(format!(
            "exact tree with {steps} steps exceeds the limit of {MAX_TREE_STEPS}"
        )));
    }
    let atoms = 1usize << steps;
    let mut rows = Vec::with_capacity(atoms);
    for i in 0..atoms {
        let mut row = Vec::with_capacity(horizon);
        let mut x = start;
        row.push(x);
        for n in 0..steps {
            x = step(n, x, (i >> (steps - 1 - n)) & 1 == 1)?;
            row.push(x);
        }
        rows.push(row);
    }
    AtomicProcess::from_rows(vec![1.0 / atoms as f64; atoms], rows)
}

/// The generating filtration of a tree built by [`binary_tree`].
pub fn tree_filtration(horizon: usize) -> Result<Filtration> {
    check_horizon(horizon)?;
    Filtration::binary_tree(horizon - 1)
}

/// Symmetric walk `X_0 = start`, steps `+-step`.
pub fn gen_random_walk(horizon: usize, start: f64, step: f64) -> Result<AtomicProcess> {
    let rule = StepRule::Additive { step };
    rule.validate()?;
    binary_tree(horizon, start, |_, x, up| Ok(rule.apply(x, up)))
}

/// `X_{n+1} = X_n (1 +- volatility)`: a nonnegative martingale.
pub fn gen_binary_martingale_tree(horizon: usize, start: f64, volatility: f64) -> Result<AtomicProcess> {
    if !(start >= 0.0 && start.is_finite()) {
        return Err(Error::domain(format!("start must be nonnegative, got {start}")));
    }
    let rule = StepRule::Multiplicative { volatility };
    rule.validate()?;
    binary_tree(horizon, start, |_, x, up| Ok(rule.apply(x, up)))
}

/// `X_{n+1} = rule(X_n, coin) + drift(n, X_n)` with nonnegative drift: a
/// submartingale whose Doob compensator is the accumulated drift.
pub fn gen_submartingale_tree(
    horizon: usize,
    start: f64,
    rule: StepRule,
    drift: impl Fn(usize, f64) -> f64,
) -> Result<AtomicProcess> {
    rule.validate()?;
    binary_tree(horizon, start, |n, x, up| {
        let d = drift(n, x);
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::domain(format!("drift at step {n} is {d}, must be nonnegative")));
        }
        Ok(rule.apply(x, up) + d)
    })
}

/// A generated almost-supermartingale with its certified constants.
#[derive(Clone, Debug)]
pub struct AlmostSupermartingale {
    pub process: AtomicProcess,
    /// `E_n` for each step used.
    pub errors: Vec<f64>,
    /// Satisfies `K >= 1` and `K > E X_0`.
    pub k_bound: f64,
    /// Strictly above the sum of the errors.
    pub error_mass: f64,
}

impl AlmostSupermartingale {
    /// `Y_n = X_n - sum_{i<n} E_i`, a supermartingale.
    pub fn compensated(&self) -> Result<AtomicProcess> {
        let partial: Vec<f64> = std::iter::once(0.0)
            .chain(self.errors.iter().scan(0.0, |s, e| {
                *s += e;
                Some(*s)
            }))
            .collect();
        self.process.map_values(|_, n, x| x - partial[n])
    }
}

/// `X_{n+1} = (1 - contraction) X_n (1 +- volatility) + E_n`, nonnegative
/// with `E[X_{n+1} | F_n] <= X_n + E_n`.
pub fn gen_almost_supermartingale(
    horizon: usize,
    start: f64,
    volatility: f64,
    contraction: f64,
    errors: &[f64],
) -> Result<AlmostSupermartingale> {
    check_horizon(horizon)?;
    if !(start >= 0.0 && start.is_finite()) {
        return Err(Error::domain(format!("start must be nonnegative, got {start}")));
    }
    if !(0.0..1.0).contains(&contraction) {
        return Err(Error::domain(format!("contraction must lie in [0, 1), got {contraction}")));
    }
    let steps = horizon - 1;
    if errors.len() < steps {
        return Err(Error::input(format!("need {steps} error terms, got {}", errors.len())));
    }
    let errors = errors[..steps].to_vec();
    if let Some(i) = errors.iter().position(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(Error::domain(format!("error term {i} is {}, must be nonnegative", errors[i])));
    }
    let rule = StepRule::Multiplicative { volatility };
    rule.validate()?;
    let process = binary_tree(horizon, start, |n, x, up| {
        Ok((1.0 - contraction) * rule.apply(x, up) + errors[n])
    })?;
    let k_bound = if start < 1.0 { 1.0 } else { start + start.max(1.0) * 1e-9 };
    let error_mass = errors.iter().sum::<f64>() + 1e-9;
    Ok(AlmostSupermartingale { process, errors, k_bound, error_mass })
}

/// Rotation of the circle by `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rotation {
    pub num: u64,
    pub den: u64,
}

impl Rotation {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num >= den {
            return Err(Error::domain(format!("rotation {num}/{den} must lie in [0, 1)")));
        }
        let g = gcd(num, den);
        Ok(Rotation { num: num / g, den: den / g })
    }

    /// Last continued-fraction convergent of the fractional part of `x`
    /// with denominator at most `max_den`.
    pub fn approximating(x: f64, max_den: u64) -> Result<Self> {
        if !x.is_finite() || max_den == 0 {
            return Err(Error::domain(format!("cannot approximate {x} with denominators <= {max_den}")));
        }
        let frac = x - x.floor();
        let (mut h0, mut h1) = (0u64, 1u64);
        let (mut k0, mut k1) = (1u64, 0u64);
        let mut rest = frac;
        let (mut best_h, mut best_k) = (0u64, 1u64);
        for _ in 0..64 {
            let a = rest.floor();
            let a_int = a as u64;
            let (Some(h), Some(k)) = (
                a_int.checked_mul(h1).and_then(|v| v.checked_add(h0)),
                a_int.checked_mul(k1).and_then(|v| v.checked_add(k0)),
            ) else {
                break;
            };
            if k > max_den {
                break;
            }
            (best_h, best_k) = (h, k);
            (h0, h1, k0, k1) = (h1, h, k1, k);
            let f = rest - a;
            if f < 1e-12 {
                break;
            }
            rest = 1.0 / f;
        }
        Rotation::new(best_h % best_k, best_k)
    }

    /// Convergent of the golden-ratio conjugate with a three-digit
    /// denominator (610/987).
    pub fn golden() -> Self {
        Rotation::approximating((5f64.sqrt() - 1.0) / 2.0, 999).expect("fixed input")
    }

    pub fn angle(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `f = values[i]` on `[i/d, (i+1)/d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFunction {
    pub grid_values: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid_values: Vec<f64>) -> Result<Self> {
        if grid_values.is_empty() || grid_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("step function needs finite values on at least one cell"));
        }
        Ok(StepFunction { grid_values })
    }

    pub fn cells(&self) -> usize {
        self.grid_values.len()
    }
}

/// Birkhoff averages of a step function under a rational rotation, with
/// the observable kept alongside.
#[derive(Clone, Debug)]
pub struct ErgodicAverages {
    /// `X_t = A_{t+1} f`, the average of the first `t + 1` iterates.
    pub process: AtomicProcess,
    /// `f` on each atom (equal to `X_0`).
    pub observable: Vec<f64>,
    pub rotation: Rotation,
    /// Grid cells before merging cells with identical paths.
    pub grid_cells: u64,
}

impl ErgodicAverages {
    /// `E|f|^p`, or the sup norm when `p` is infinite.
    pub fn observable_norm(&self, p: f64) -> f64 {
        let w = self.process.weights();
        if p.is_infinite() {
            self.observable.iter().map(|v| v.abs()).fold(0.0, f64::max)
        } else {
            crate::numeric::stable_sum(self.observable.iter().zip(w).map(|(v, w)| w * v.abs().powf(p)))
                .powf(1.0 / p)
        }
    }
}

/// Atoms are the cells of the common grid of `f` and the rotation; cells
/// with identical paths are merged.
pub fn gen_ergodic_averages(rotation: Rotation, f: &StepFunction, horizon: usize) -> Result<ErgodicAverages> {
    check_horizon(horizon)?;
    let d = f.cells() as u64;
    let grid = lcm(d, rotation.den)
        .ok_or_else(|| Error::domain("grid of f and rotation is too fine"))?;
    if grid.saturating_mul(horizon as u64) > MAX_ROTATION_WORK {
        return Err(Error::domain(format!(
            "{grid} cells over horizon {horizon} is beyond the exact limit"
        )));
    }
    let shift = rotation.num * (grid / rotation.den);
    let value = |c: u64| f.grid_values[(c as u128 * d as u128 / grid as u128) as usize];
    let mut merged: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut observable = Vec::new();
    for c in 0..grid {
        let mut sum = 0.0;
        let row: Vec<f64> = (0..horizon as u64)
            .map(|k| {
                sum += value((c + k * shift) % grid);
                sum / (k + 1) as f64
            })
            .collect();
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        match merged.get(&key) {
            Some(&i) => counts[i] += 1,
            None => {
                merged.insert(key, rows.len());
                observable.push(value(c));
                rows.push(row);
                counts.push(1);
            }
        }
    }
    let weights = counts.iter().map(|&n| n as f64 / grid as f64).collect();
    Ok(ErgodicAverages {
        process: AtomicProcess::from_rows(weights, rows)?,
        observable,
        rotation,
        grid_cells: grid,
    })
}

/// A single atom following a nondecreasing sequence.
pub fn gen_specker_monotone(values: &[f64], horizon: usize) -> Result<AtomicProcess> {
    check_horizon(horizon)?;
    if values.len() < horizon {
        return Err(Error::input(format!("need {horizon} values, got {}", values.len())));
    }
    let path = Path::new(values[..horizon].to_vec())?;
    if let Some(i) = path.values().windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::domain(format!("sequence decreases at index {}", i + 1)));
    }
    AtomicProcess::new(AtomicSpace::new(vec![1.0])?, vec![path])
}

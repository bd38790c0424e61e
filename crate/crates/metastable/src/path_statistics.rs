//! Counting statistics on finite real-valued paths.
//!
//! All counters are single left-to-right scans. Comparisons are exact and
//! non-strict: a jump of exactly `epsilon`, or a value sitting exactly on an
//! interval endpoint, counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite trajectory with every value finite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Path(Vec<f64>);

impl Path {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "path value at index {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Path(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The first `k` values (or the whole path if it is shorter).
    pub fn prefix(&self, k: usize) -> Path {
        Path(self.0[..k.min(self.0.len())].to_vec())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Path {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Path::new(values)
    }
}

impl From<Path> for Vec<f64> {
    fn from(p: Path) -> Vec<f64> {
        p.0
    }
}

impl std::ops::Index<usize> for Path {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::input(format!("interval [{lo}, {hi}] is not finite")));
        }
        if lo >= hi {
            return Err(Error::domain(format!(
                "interval needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Up- and downcrossing counts from one pass over a path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Traversals {
    pub up: usize,
    pub down: usize,
}

impl Traversals {
    pub fn total(&self) -> usize {
        self.up + self.down
    }
}

/// Decides whether the window `[start; end]` of a path carries a witness.
///
/// Implementations must be false whenever `end <= start`, and monotone:
/// shrinking the window can only turn a witness off.
pub trait WitnessPredicate {
    fn holds(&self, path: &[f64], start: usize, end: usize) -> bool;
}

impl<F> WitnessPredicate for F
where
    F: Fn(&[f64], usize, usize) -> bool,
{
    fn holds(&self, path: &[f64], start: usize, end: usize) -> bool {
        self(path, start, end)
    }
}

/// "Some pair inside the window differs by at least `epsilon`."
#[derive(Clone, Copy, Debug)]
pub struct Oscillation {
    pub epsilon: f64,
}

impl WitnessPredicate for Oscillation {
    fn holds(&self, path: &[f64], start: usize, end: usize) -> bool {
        end > start && window_oscillates(&path[start..=end], self.epsilon)
    }
}

/// True when `max - min >= epsilon` over the slice.
pub fn window_oscillates(values: &[f64], epsilon: f64) -> bool {
    let (lo, hi) = extrema(values);
    hi - lo >= epsilon
}

fn extrema(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("epsilon must be positive, got {epsilon}")))
    }
}

fn resolve_upto(path: &Path, upto: Option<usize>) -> Result<usize> {
    match upto {
        None => Ok(path.len()),
        Some(k) if k <= path.len() => Ok(k),
        Some(k) => Err(Error::input(format!(
            "upto {k} exceeds path length {}",
            path.len()
        ))),
    }
}

/// Number of ε-fluctuations among the first `upto` values.
pub fn count_fluctuations(path: &Path, epsilon: f64, upto: Option<usize>) -> Result<usize> {
    check_epsilon(epsilon)?;
    let upto = resolve_upto(path, upto)?;
    Ok(fluctuations_in(&path.values()[..upto], epsilon))
}

/// Earliest-completion scan. Since the previous fluctuation ended, track the
/// running extremes; the first value at distance ≥ ε from either of them
/// closes a fluctuation and becomes the new starting point.
pub(crate) fn fluctuations_in(values: &[f64], epsilon: f64) -> usize {
    let Some(&first) = values.first() else {
        return 0;
    };
    let (mut lo, mut hi) = (first, first);
    let mut count = 0;
    for &x in &values[1..] {
        if x - lo >= epsilon || hi - x >= epsilon {
            count += 1;
            lo = x;
            hi = x;
        } else {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    count
}

/// Up- and downcrossings of `interval` among the first `upto` values.
pub fn count_traversals(path: &Path, interval: Interval, upto: Option<usize>) -> Result<Traversals> {
    let upto = resolve_upto(path, upto)?;
    Ok(traversals_in(&path.values()[..upto], interval))
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Unseen,
    Low,
    High,
}

pub(crate) fn traversals_in(values: &[f64], interval: Interval) -> Traversals {
    let mut side = Side::Unseen;
    let mut t = Traversals::default();
    for &x in values {
        if x <= interval.lo {
            if side == Side::High {
                t.down += 1;
            }
            side = Side::Low;
        } else if x >= interval.hi {
            if side == Side::Low {
                t.up += 1;
            }
            side = Side::High;
        }
    }
    t
}

/// Crossings of `interval` in either direction.
pub fn count_crossings(path: &Path, interval: Interval, upto: Option<usize>) -> Result<usize> {
    Ok(count_traversals(path, interval, upto)?.total())
}

pub fn count_upcrossings(path: &Path, interval: Interval) -> usize {
    traversals_in(path.values(), interval).up
}

pub fn count_downcrossings(path: &Path, interval: Interval) -> usize {
    traversals_in(path.values(), interval).down
}

/// Largest number of windows `a0 < b0 <= a1 < b1 <= ... < upto` on which
/// `pred` holds.
///
/// Monotonicity of `pred` is only spot-checked at the pairs the scan touches:
/// `pred(n, n)` must fail, each found witness must survive widening by one on
/// the right, and must still hold when started from the previous start.
pub fn count_disjoint_witnesses<P>(path: &Path, pred: &P, upto: usize) -> Result<usize>
where
    P: WitnessPredicate + ?Sized,
{
    let upto = resolve_upto(path, Some(upto))?;
    let values = path.values();
    let mut start = 0;
    let mut previous: Option<usize> = None;
    let mut count = 0;
    while start < upto {
        if pred.holds(values, start, start) {
            return Err(Error::contract(format!(
                "witness predicate holds on the empty window [{start}; {start}]"
            )));
        }
        let Some(end) = (start + 1..upto).find(|&b| pred.holds(values, start, b)) else {
            break;
        };
        if end + 1 < upto && !pred.holds(values, start, end + 1) {
            return Err(Error::contract(format!(
                "witness predicate holds on [{start}; {end}] but not on [{start}; {}]",
                end + 1
            )));
        }
        if let Some(p) = previous {
            if !pred.holds(values, p, end) {
                return Err(Error::contract(format!(
                    "witness predicate holds on [{start}; {end}] but not on [{p}; {end}]"
                )));
            }
        }
        count += 1;
        previous = Some(start);
        start = end;
    }
    Ok(count)
}

/// `l` equal closed cells covering `[-m, m]`.
pub fn make_partition(m: f64, l: usize) -> Result<Vec<Interval>> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::domain(format!("partition half-width must be positive, got {m}")));
    }
    if l == 0 {
        return Err(Error::domain("partition needs at least one cell"));
    }
    let grid: Vec<f64> = (0..=l)
        .map(|i| if i == l { m } else { -m + 2.0 * m * i as f64 / l as f64 })
        .collect();
    grid.windows(2).map(|w| Interval::new(w[0], w[1])).collect()
}

/// The most crossings of any single cell of the `(m, l)` partition.
pub fn partition_max_crossings(path: &Path, m: f64, l: usize) -> Result<usize> {
    Ok(make_partition(m, l)?
        .into_iter()
        .map(|cell| traversals_in(path.values(), cell).total())
        .max()
        .unwrap_or(0))
}

/// Least `n <= bound` such that the path does not move by `epsilon` or more
/// anywhere inside `[n; n + g(n)]`.
pub fn find_stability_window(
    path: &Path,
    epsilon: f64,
    g: impl Fn(usize) -> usize,
    bound: usize,
) -> Result<Option<usize>> {
    check_epsilon(epsilon)?;
    for n in 0..=bound {
        let end = n
            .checked_add(g(n))
            .ok_or_else(|| Error::Overflow(format!("forming the window at {n}")))?;
        if end >= path.len() {
            return Err(Error::input(format!(
                "window [{n}; {end}] runs past the path (length {})",
                path.len()
            )));
        }
        if !window_oscillates(&path.values()[n..=end], epsilon) {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

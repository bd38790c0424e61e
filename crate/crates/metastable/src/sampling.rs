//! Seeded path samplers.
//!
//! Replicate `r` of a run seeded with `s` draws from ChaCha8 keyed by `s` on
//! stream `r`, so replicates are independent of scheduling order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::path_statistics::Path;
use crate::prob_space::AtomicProcess;

pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Something that can draw one path at a time.
pub trait PathSampler: Sync {
    fn horizon(&self) -> usize;
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Path>;
}

/// Draws the path of an atom chosen by weight.
pub struct AtomSampler<'a> {
    process: &'a AtomicProcess,
    index: WeightedIndex<f64>,
}

impl<'a> AtomSampler<'a> {
    pub fn new(process: &'a AtomicProcess) -> Result<Self> {
        let index = WeightedIndex::new(process.weights().iter().copied())
            .map_err(|e| Error::input(format!("atom weights unusable for sampling: {e}")))?;
        Ok(AtomSampler { process, index })
    }
}

impl PathSampler for AtomSampler<'_> {
    fn horizon(&self) -> usize {
        self.process.horizon()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Path> {
        Ok(self.process.path(self.index.sample(rng)).clone())
    }
}

/// How a binary tree moves from `x` when the coin says up (`+1`) or down
/// (`-1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// `x + step * coin`.
    Additive { step: f64 },
    /// `x * (1 + volatility * coin)`, nonnegative when `x` is and
    /// `volatility <= 1`.
    Multiplicative { volatility: f64 },
}

impl StepRule {
    pub fn apply(&self, x: f64, up: bool) -> f64 {
        let coin = if up { 1.0 } else { -1.0 };
        match *self {
            StepRule::Additive { step } => x + step * coin,
            StepRule::Multiplicative { volatility } => x * (1.0 + volatility * coin),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            StepRule::Additive { step } if step.is_finite() && step >= 0.0 => Ok(()),
            StepRule::Multiplicative { volatility } if (0.0..=1.0).contains(&volatility) => Ok(()),
            other => Err(Error::domain(format!("unusable step rule {other:?}"))),
        }
    }
}

/// A fair-coin walk with a predictable nonnegative drift added after each
/// step: `X_{n+1} = rule(X_n, coin) + drift[n]` (zero past the table).
#[derive(Clone, Debug)]
pub struct WalkSampler {
    pub horizon: usize,
    pub start: f64,
    pub rule: StepRule,
    pub drift: Vec<f64>,
}

impl WalkSampler {
    pub fn drift_at(&self, n: usize) -> f64 {
        self.drift.get(n).copied().unwrap_or(0.0)
    }
}

impl PathSampler for WalkSampler {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Path> {
        let mut values = Vec::with_capacity(self.horizon);
        let mut x = self.start;
        values.push(x);
        for n in 1..self.horizon {
            x = self.rule.apply(x, rng.random::<bool>()) + self.drift_at(n - 1);
            values.push(x);
        }
        Path::new(values)
    }
}

/// `samples` draws with uniform weights, drawn in replicate order.
pub fn empirical_process(sampler: &dyn PathSampler, samples: usize, seed: u64) -> Result<AtomicProcess> {
    if samples == 0 {
        return Err(Error::input("need at least one sample"));
    }
    let paths = (0..samples)
        .map(|r| sampler.sample(&mut replicate_rng(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let space = crate::prob_space::AtomicSpace::uniform(samples)?;
    AtomicProcess::new(space, paths)
}

//! JSON descriptions of generated processes.
//!
//! ```json
//! {"schema": "metastable.spec/1", "kind": "staircase_adversarial",
//!  "params": {"M": 2, "N": 2}, "horizon": 5}
//! ```
//!
//! Tree kinds accept `"samples": n` in `params` to draw `n` paths instead
//! of building the full tree; a `seed` is then required.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process_library::{
    gen_almost_supermartingale, gen_binary_martingale_tree, gen_ergodic_averages, gen_random_walk,
    gen_slow_fluc, gen_specker_monotone, gen_staircase_adversarial, gen_submartingale_tree,
    gen_tightness_example, gen_vanishing_indicator, tree_filtration, Rotation, StepFunction,
};
use crate::prob_space::{AtomicProcess, Filtration};
use crate::sampling::{empirical_process, StepRule, WalkSampler};

pub const SPEC_SCHEMA: &str = "metastable.spec/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    TightnessEx,
    VanishingIndicatorEx,
    StaircaseAdversarial,
    SlowFluc,
    RandomWalk,
    BinaryMartingaleTree,
    SubmartingaleTree,
    AlmostSupermartingale,
    ErgodicRotation,
    SpeckerMonotone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    #[serde(default = "spec_schema")]
    pub schema: String,
    pub kind: ProcessKind,
    #[serde(default = "empty_params")]
    pub params: serde_json::Value,
    /// Required except for the staircase, which defaults to `MN + 1`.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn spec_schema() -> String {
    SPEC_SCHEMA.to_string()
}

fn empty_params() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

/// What a spec realizes to, with whatever extra structure the kind offers.
#[derive(Clone, Debug)]
pub struct GeneratedProcess {
    pub process: AtomicProcess,
    pub filtration: Filtration,
    /// `f` per atom for rotation averages.
    pub observable: Option<Vec<f64>>,
    pub certificate: Option<Certificate>,
    /// False when paths were sampled.
    pub exact: bool,
}

/// `K` and the error mass `a` certified for an almost-supermartingale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "K")]
    pub k_bound: f64,
    pub a_err: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StaircaseParams {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SlowFlucParams {
    /// Defaults to `1 / (n + 1)`.
    #[serde(default)]
    a: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkParams {
    #[serde(default)]
    start: f64,
    #[serde(default = "one")]
    step: f64,
    #[serde(default)]
    samples: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MartingaleTreeParams {
    #[serde(default = "one")]
    start: f64,
    #[serde(default = "half")]
    volatility: f64,
    #[serde(default)]
    samples: Option<usize>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum RuleName {
    Additive,
    Multiplicative,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmartingaleParams {
    #[serde(default = "one")]
    start: f64,
    #[serde(default = "multiplicative")]
    rule: RuleName,
    /// Step size or volatility, depending on the rule.
    #[serde(default = "half")]
    scale: f64,
    /// Drift added after step `n`; zero past the list.
    #[serde(default)]
    drift: Vec<f64>,
    #[serde(default)]
    samples: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlmostSuperParams {
    #[serde(default = "half")]
    start: f64,
    #[serde(default = "half")]
    volatility: f64,
    #[serde(default)]
    contraction: f64,
    /// `E_n` for each step; zero past the list.
    #[serde(default)]
    errors: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RotationParams {
    f: serde_json::Value,
    #[serde(default)]
    rotation: Option<Rotation>,
    /// Approximated by continued fractions when `rotation` is absent.
    #[serde(default)]
    angle: Option<f64>,
    #[serde(default = "default_max_den")]
    max_denominator: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeckerParams {
    values: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn multiplicative() -> RuleName {
    RuleName::Multiplicative
}

fn default_max_den() -> u64 {
    999
}

fn parse<T: DeserializeOwned>(value: &serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| Error::input(format!("params{}: {}", pointer(e.path()), e.inner())))
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    path.iter()
        .map(|seg| match seg {
            serde_path_to_error::Segment::Seq { index } => format!("/{index}"),
            serde_path_to_error::Segment::Map { key } => format!("/{key}"),
            serde_path_to_error::Segment::Enum { variant } => format!("/{variant}"),
            serde_path_to_error::Segment::Unknown => "/?".to_string(),
        })
        .collect()
}

/// Parse a spec, reporting the JSON pointer of the first bad field.
pub fn parse_spec(text: &str) -> Result<ProcessSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ProcessSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::input(format!("{}: {}", pointer_or_root(e.path()), e.inner())))?;
    if spec.schema != SPEC_SCHEMA {
        return Err(Error::input(format!(
            "/schema: unsupported spec schema {:?}, expected {SPEC_SCHEMA:?}",
            spec.schema
        )));
    }
    Ok(spec)
}

fn pointer_or_root(path: &serde_path_to_error::Path) -> String {
    let p = pointer(path);
    if p.is_empty() {
        "/".to_string()
    } else {
        p
    }
}

fn padded(values: &[f64], len: usize) -> Vec<f64> {
    (0..len).map(|i| values.get(i).copied().unwrap_or(0.0)).collect()
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, params: serde_json::Value, horizon: Option<usize>, seed: Option<u64>) -> Self {
        ProcessSpec { schema: spec_schema(), kind, params, horizon, seed }
    }

    fn horizon(&self) -> Result<usize> {
        match self.horizon {
            Some(h) if h >= 1 => Ok(h),
            Some(h) => Err(Error::input(format!("/horizon: must be at least 1, got {h}"))),
            None => Err(Error::input(format!("/horizon: required for {:?}", self.kind))),
        }
    }

    fn sampled(&self, sampler: WalkSampler, samples: usize) -> Result<GeneratedProcess> {
        let seed = self
            .seed
            .ok_or_else(|| Error::input("/seed: sampled specs need a seed"))?;
        let process = empirical_process(&sampler, samples, seed)?;
        Ok(GeneratedProcess {
            filtration: Filtration::natural(&process),
            process,
            observable: None,
            certificate: None,
            exact: false,
        })
    }

    /// Build the process this spec describes.
    pub fn realize(&self) -> Result<GeneratedProcess> {
        let exact = |process: AtomicProcess| GeneratedProcess {
            filtration: Filtration::natural(&process),
            process,
            observable: None,
            certificate: None,
            exact: true,
        };
        let tree = |process: AtomicProcess, horizon: usize| -> Result<GeneratedProcess> {
            Ok(GeneratedProcess {
                filtration: tree_filtration(horizon)?,
                process,
                observable: None,
                certificate: None,
                exact: true,
            })
        };
        match self.kind {
            ProcessKind::TightnessEx => {
                parse::<NoParams>(&self.params)?;
                Ok(exact(gen_tightness_example(self.horizon()?)?))
            }
            ProcessKind::VanishingIndicatorEx => {
                parse::<NoParams>(&self.params)?;
                Ok(exact(gen_vanishing_indicator(self.horizon()?)?))
            }
            ProcessKind::StaircaseAdversarial => {
                let p: StaircaseParams = parse(&self.params)?;
                Ok(exact(gen_staircase_adversarial(p.m, p.n, self.horizon)?))
            }
            ProcessKind::SlowFluc => {
                let p: SlowFlucParams = parse(&self.params)?;
                let h = self.horizon()?;
                let a = p.a.unwrap_or_else(|| (0..h).map(|n| 1.0 / (n as f64 + 1.0)).collect());
                Ok(exact(gen_slow_fluc(&a, h)?))
            }
            ProcessKind::RandomWalk => {
                let p: WalkParams = parse(&self.params)?;
                let h = self.horizon()?;
                let rule = StepRule::Additive { step: p.step };
                match p.samples {
                    Some(n) => self.sampled(WalkSampler { horizon: h, start: p.start, rule, drift: vec![] }, n),
                    None => tree(gen_random_walk(h, p.start, p.step)?, h),
                }
            }
            ProcessKind::BinaryMartingaleTree => {
                let p: MartingaleTreeParams = parse(&self.params)?;
                let h = self.horizon()?;
                let rule = StepRule::Multiplicative { volatility: p.volatility };
                match p.samples {
                    Some(n) => self.sampled(WalkSampler { horizon: h, start: p.start, rule, drift: vec![] }, n),
                    None => tree(gen_binary_martingale_tree(h, p.start, p.volatility)?, h),
                }
            }
            ProcessKind::SubmartingaleTree => {
                let p: SubmartingaleParams = parse(&self.params)?;
                let h = self.horizon()?;
                let rule = match p.rule {
                    RuleName::Additive => StepRule::Additive { step: p.scale },
                    RuleName::Multiplicative => StepRule::Multiplicative { volatility: p.scale },
                };
                if let Some(i) = p.drift.iter().position(|d| !(*d >= 0.0 && d.is_finite())) {
                    return Err(Error::input(format!("params/drift/{i}: drift must be nonnegative")));
                }
                match p.samples {
                    Some(n) => self.sampled(WalkSampler { horizon: h, start: p.start, rule, drift: p.drift }, n),
                    None => {
                        let drift = p.drift;
                        let process =
                            gen_submartingale_tree(h, p.start, rule, |n, _| drift.get(n).copied().unwrap_or(0.0))?;
                        tree(process, h)
                    }
                }
            }
            ProcessKind::AlmostSupermartingale => {
                let p: AlmostSuperParams = parse(&self.params)?;
                let h = self.horizon()?;
                let errors = padded(&p.errors, h.saturating_sub(1));
                let a = gen_almost_supermartingale(h, p.start, p.volatility, p.contraction, &errors)?;
                let mut out = tree(a.process, h)?;
                out.certificate = Some(Certificate { k_bound: a.k_bound, a_err: a.error_mass });
                Ok(out)
            }
            ProcessKind::ErgodicRotation => {
                let p: RotationParams = parse(&self.params)?;
                let f: StepFunction = serde_json::from_value(p.f.clone()).map_err(|_| {
                    Error::Unsupported("params/f: only step functions given as {\"grid_values\": [...]} are supported".into())
                })?;
                let f = StepFunction::new(f.grid_values)?;
                let rotation = match (p.rotation, p.angle) {
                    (Some(r), _) => Rotation::new(r.num, r.den)?,
                    (None, Some(x)) => Rotation::approximating(x, p.max_denominator)?,
                    (None, None) => Rotation::golden(),
                };
                let e = gen_ergodic_averages(rotation, &f, self.horizon()?)?;
                Ok(GeneratedProcess {
                    filtration: Filtration::natural(&e.process),
                    process: e.process,
                    observable: Some(e.observable),
                    certificate: None,
                    exact: true,
                })
            }
            ProcessKind::SpeckerMonotone => {
                let p: SpeckerParams = parse(&self.params)?;
                let h = self.horizon.unwrap_or(p.values.len());
                Ok(exact(gen_specker_monotone(&p.values, h)?))
            }
        }
    }
}

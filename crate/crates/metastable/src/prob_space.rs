//! Processes on finite atomic probability spaces.
//!
//! Every probability is a finite sum of atom weights and every conditional
//! expectation is a weighted average over a partition cell, so the martingale
//! properties used downstream are checked exactly (up to round-off).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::stable_sum;
use crate::path_statistics::{window_oscillates, Path};

/// Tolerance for the martingale comparisons.
pub const MARTINGALE_TOLERANCE: f64 = 1e-9;

/// Tolerance on the total mass of a space.
pub const MASS_TOLERANCE: f64 = 1e-12;

pub const PROCESS_SCHEMA: &str = "metastable.process/1";

/// Positive atom weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicSpace {
    weights: Vec<f64>,
}

impl AtomicSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("a space needs at least one atom"));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::input(format!(
                "atom {i} has weight {}, weights must be positive",
                weights[i]
            )));
        }
        let mass = stable_sum(weights.iter().copied());
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::input(format!("atom weights sum to {mass}, not 1")));
        }
        Ok(AtomicSpace { weights })
    }

    pub fn uniform(atoms: usize) -> Result<Self> {
        if atoms == 0 {
            return Err(Error::input("a space needs at least one atom"));
        }
        AtomicSpace::new(vec![1.0 / atoms as f64; atoms])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn probability(&self, event: &Event) -> Result<f64> {
        if let Some(&last) = event.atoms.last() {
            if last >= self.atoms() {
                return Err(Error::input(format!(
                    "event mentions atom {last} but the space has {}",
                    self.atoms()
                )));
            }
        }
        Ok(stable_sum(event.atoms.iter().map(|&i| self.weights[i])))
    }

    /// Mass of the atoms satisfying `pred`.
    pub fn probability_where(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        stable_sum(
            self.weights
                .iter()
                .enumerate()
                .filter(|&(i, _)| pred(i))
                .map(|(_, &w)| w),
        )
    }
}

/// A set of atom indices, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Event {
    atoms: Vec<usize>,
}

impl Event {
    pub fn from_atoms(atoms: impl IntoIterator<Item = usize>) -> Self {
        let mut atoms: Vec<usize> = atoms.into_iter().collect();
        atoms.sort_unstable();
        atoms.dedup();
        Event { atoms }
    }

    pub fn empty() -> Self {
        Event::default()
    }

    pub fn full(atoms: usize) -> Self {
        Event { atoms: (0..atoms).collect() }
    }

    pub fn from_predicate(atoms: usize, pred: impl FnMut(&usize) -> bool) -> Self {
        Event { atoms: (0..atoms).filter(pred).collect() }
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.atoms.binary_search(&atom).is_ok()
    }

    pub fn intersect(&self, other: &Event) -> Event {
        Event {
            atoms: self.atoms.iter().copied().filter(|&a| other.contains(a)).collect(),
        }
    }

    pub fn union(&self, other: &Event) -> Event {
        Event::from_atoms(self.atoms.iter().chain(other.atoms.iter()).copied())
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.atoms.iter().all(|&a| other.contains(a))
    }
}

/// One path per atom, all of the same length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessFile", into = "ProcessFile")]
pub struct AtomicProcess {
    space: AtomicSpace,
    paths: Vec<Path>,
    horizon: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessFile {
    #[serde(default = "process_schema")]
    schema: String,
    weights: Vec<f64>,
    horizon: usize,
    paths: Vec<Path>,
}

fn process_schema() -> String {
    PROCESS_SCHEMA.to_string()
}

impl TryFrom<ProcessFile> for AtomicProcess {
    type Error = Error;
    fn try_from(f: ProcessFile) -> Result<Self> {
        if f.schema != PROCESS_SCHEMA {
            return Err(Error::input(format!(
                "unsupported process schema {:?}, expected {PROCESS_SCHEMA:?}",
                f.schema
            )));
        }
        let p = AtomicProcess::new(AtomicSpace::new(f.weights)?, f.paths)?;
        if p.horizon != f.horizon {
            return Err(Error::input(format!(
                "declared horizon {} but paths have length {}",
                f.horizon, p.horizon
            )));
        }
        Ok(p)
    }
}

impl From<AtomicProcess> for ProcessFile {
    fn from(p: AtomicProcess) -> Self {
        ProcessFile {
            schema: process_schema(),
            weights: p.space.weights,
            horizon: p.horizon,
            paths: p.paths,
        }
    }
}

impl AtomicProcess {
    pub fn new(space: AtomicSpace, paths: Vec<Path>) -> Result<Self> {
        if paths.len() != space.atoms() {
            return Err(Error::input(format!(
                "{} paths for {} atoms",
                paths.len(),
                space.atoms()
            )));
        }
        let horizon = paths[0].len();
        if horizon == 0 {
            return Err(Error::input("paths must have at least one value"));
        }
        if let Some(i) = paths.iter().position(|p| p.len() != horizon) {
            return Err(Error::input(format!(
                "path {i} has length {}, expected {horizon}",
                paths[i].len()
            )));
        }
        Ok(AtomicProcess { space, paths, horizon })
    }

    /// Build from raw vectors, one per atom.
    pub fn from_rows(weights: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let paths = rows.into_iter().map(Path::new).collect::<Result<Vec<_>>>()?;
        AtomicProcess::new(AtomicSpace::new(weights)?, paths)
    }

    /// A single-atom process following `values`.
    pub fn deterministic(values: Vec<f64>) -> Result<Self> {
        AtomicProcess::from_rows(vec![1.0], vec![values])
    }

    pub fn space(&self) -> &AtomicSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        self.space.weights()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path(&self, atom: usize) -> &Path {
        &self.paths[atom]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn atoms(&self) -> usize {
        self.paths.len()
    }

    fn check_time(&self, n: usize) -> Result<()> {
        if n < self.horizon {
            Ok(())
        } else {
            Err(Error::input(format!("time {n} outside horizon {}", self.horizon)))
        }
    }

    /// The values of `X_n` across atoms.
    pub fn column(&self, n: usize) -> Result<Vec<f64>> {
        self.check_time(n)?;
        Ok(self.paths.iter().map(|p| p[n]).collect())
    }

    pub fn expectation(&self, n: usize) -> Result<f64> {
        self.check_time(n)?;
        Ok(self.expect(|p| p[n]))
    }

    /// Expectation of an arbitrary path functional.
    pub fn expect(&self, f: impl Fn(&Path) -> f64) -> f64 {
        stable_sum(self.paths.iter().zip(self.weights()).map(|(p, &w)| w * f(p)))
    }

    /// Probability of the atoms whose path satisfies `pred`.
    pub fn probability_that(&self, pred: impl Fn(&Path) -> bool) -> f64 {
        self.space.probability_where(|i| pred(&self.paths[i]))
    }

    /// Atoms whose path moves by at least `epsilon` inside `[a; b]`.
    pub fn event_oscillation(&self, a: usize, b: usize, epsilon: f64) -> Result<Event> {
        crate::path_statistics::check_epsilon(epsilon)?;
        if a > b || b >= self.horizon {
            return Err(Error::input(format!(
                "window [{a}; {b}] invalid for horizon {}",
                self.horizon
            )));
        }
        Ok(Event::from_predicate(self.atoms(), |&i| {
            window_oscillates(&self.paths[i].values()[a..=b], epsilon)
        }))
    }

    pub fn probability(&self, event: &Event) -> Result<f64> {
        self.space.probability(event)
    }

    /// Same space, paths transformed value by value.
    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> Result<AtomicProcess> {
        let rows = self
            .paths
            .iter()
            .enumerate()
            .map(|(atom, p)| p.values().iter().enumerate().map(|(n, &x)| f(atom, n, x)).collect())
            .collect();
        AtomicProcess::from_rows(self.weights().to_vec(), rows)
    }

    /// The first `horizon` time steps.
    pub fn truncate(&self, horizon: usize) -> Result<AtomicProcess> {
        if horizon == 0 || horizon > self.horizon {
            return Err(Error::input(format!(
                "cannot truncate horizon {} to {horizon}",
                self.horizon
            )));
        }
        AtomicProcess::new(
            self.space.clone(),
            self.paths.iter().map(|p| p.prefix(horizon)).collect(),
        )
    }

    /// `sup_n (E|X_n|^p)^(1/p)`, or `sup_n ||X_n||_inf` when `p` is infinite.
    pub fn sup_moment(&self, p: f64) -> f64 {
        (0..self.horizon)
            .map(|n| {
                if p.is_infinite() {
                    self.paths.iter().map(|path| path[n].abs()).fold(0.0, f64::max)
                } else {
                    self.expect(|path| path[n].abs().powf(p)).powf(1.0 / p)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// A refining sequence of partitions of the atoms.
///
/// Stored as one cell label per atom per time, with labels numbered in order
/// of first appearance so equal filtrations compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filtration {
    labels: Vec<Vec<usize>>,
    cells: Vec<usize>,
}

impl Filtration {
    /// From explicit cell labels, `labels[n][atom]`.
    pub fn from_labels(labels: Vec<Vec<usize>>) -> Result<Self> {
        let atoms = labels.first().map(Vec::len).unwrap_or(0);
        if atoms == 0 {
            return Err(Error::input("a filtration needs at least one time and one atom"));
        }
        if let Some(n) = labels.iter().position(|l| l.len() != atoms) {
            return Err(Error::input(format!("partition {n} does not cover {atoms} atoms")));
        }
        let labels: Vec<Vec<usize>> = labels.iter().map(|l| canonical(l)).collect();
        for n in 1..labels.len() {
            let mut coarser: HashMap<usize, usize> = HashMap::new();
            for atom in 0..atoms {
                let parent = *coarser.entry(labels[n][atom]).or_insert(labels[n - 1][atom]);
                if parent != labels[n - 1][atom] {
                    return Err(Error::contract(format!(
                        "partition {n} does not refine partition {}",
                        n - 1
                    )));
                }
            }
        }
        let cells = labels.iter().map(|l| l.iter().max().map_or(0, |m| m + 1)).collect();
        Ok(Filtration { labels, cells })
    }

    /// From explicit cells, `partitions[n]` a list of atom lists.
    pub fn from_partitions(partitions: Vec<Vec<Vec<usize>>>, atoms: usize) -> Result<Self> {
        let mut labels = Vec::with_capacity(partitions.len());
        for (n, cells) in partitions.iter().enumerate() {
            let mut label = vec![usize::MAX; atoms];
            for (c, cell) in cells.iter().enumerate() {
                for &atom in cell {
                    if atom >= atoms || label[atom] != usize::MAX {
                        return Err(Error::input(format!(
                            "partition {n} is not a partition of {atoms} atoms"
                        )));
                    }
                    label[atom] = c;
                }
            }
            if label.contains(&usize::MAX) {
                return Err(Error::input(format!("partition {n} misses some atom")));
            }
            labels.push(label);
        }
        Filtration::from_labels(labels)
    }

    pub fn trivial(atoms: usize, len: usize) -> Result<Self> {
        Filtration::from_labels(vec![vec![0; atoms]; len])
    }

    pub fn discrete(atoms: usize, len: usize) -> Result<Self> {
        Filtration::from_labels(vec![(0..atoms).collect(); len])
    }

    /// Atoms share a cell at time `n` when their paths agree on `0..=n`.
    pub fn natural(process: &AtomicProcess) -> Self {
        let atoms = process.atoms();
        let mut labels = Vec::with_capacity(process.horizon());
        let mut current = vec![0usize; atoms];
        for n in 0..process.horizon() {
            let mut ids: HashMap<(usize, u64), usize> = HashMap::new();
            for atom in 0..atoms {
                let key = (current[atom], process.path(atom)[n].to_bits());
                let next = ids.len();
                current[atom] = *ids.entry(key).or_insert(next);
            }
            labels.push(current.clone());
        }
        Filtration::from_labels(labels).expect("prefix grouping always refines")
    }

    /// Dyadic filtration of a binary tree with `steps` branchings: atom
    /// `i`'s first `n` branch bits are the top bits of `i`.
    pub fn binary_tree(steps: usize) -> Result<Self> {
        if steps >= usize::BITS as usize - 1 {
            return Err(Error::domain(format!("binary tree with {steps} steps is too deep")));
        }
        let atoms = 1usize << steps;
        Filtration::from_labels(
            (0..=steps)
                .map(|n| (0..atoms).map(|i| i >> (steps - n)).collect())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn atoms(&self) -> usize {
        self.labels[0].len()
    }

    pub fn cell_of(&self, n: usize, atom: usize) -> usize {
        self.labels[n][atom]
    }

    pub fn cell_count(&self, n: usize) -> usize {
        self.cells[n]
    }

    pub fn partition(&self, n: usize) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.cells[n]];
        for (atom, &c) in self.labels[n].iter().enumerate() {
            cells[c].push(atom);
        }
        cells
    }
}

fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut ids: HashMap<usize, usize> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect()
}

fn check_compatible(process: &AtomicProcess, filtration: &Filtration) -> Result<()> {
    if filtration.atoms() != process.atoms() {
        return Err(Error::input(format!(
            "filtration over {} atoms used with a process over {}",
            filtration.atoms(),
            process.atoms()
        )));
    }
    Ok(())
}

/// `E[X_n | F_m]`, one value per atom.
pub fn conditional_expectation(
    process: &AtomicProcess,
    n: usize,
    filtration: &Filtration,
    m: usize,
) -> Result<Vec<f64>> {
    check_compatible(process, filtration)?;
    process.check_time(n)?;
    if m > n || m >= filtration.len() {
        return Err(Error::input(format!(
            "cannot condition time {n} on partition {m} (filtration length {})",
            filtration.len()
        )));
    }
    Ok(cell_average(process, n, filtration, m))
}

fn cell_average(process: &AtomicProcess, n: usize, filtration: &Filtration, m: usize) -> Vec<f64> {
    let cells = filtration.cell_count(m);
    let mut sum = vec![0.0; cells];
    let mut mass = vec![0.0; cells];
    for atom in 0..process.atoms() {
        let c = filtration.cell_of(m, atom);
        let w = process.weights()[atom];
        sum[c] += w * process.path(atom)[n];
        mass[c] += w;
    }
    (0..process.atoms())
        .map(|atom| {
            let c = filtration.cell_of(m, atom);
            sum[c] / mass[c]
        })
        .collect()
}

/// Largest distance between `X_n` and its own cell average at time `n`;
/// zero exactly when the process is adapted.
pub fn adaptation_defect(process: &AtomicProcess, filtration: &Filtration) -> Result<f64> {
    check_compatible(process, filtration)?;
    let len = process.horizon().min(filtration.len());
    let mut worst: f64 = 0.0;
    for n in 0..len {
        let avg = cell_average(process, n, filtration, n);
        for (atom, a) in avg.iter().enumerate() {
            worst = worst.max((process.path(atom)[n] - a).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MartingaleKind {
    Martingale,
    Submartingale,
    Supermartingale,
    None,
}

/// Outcome of comparing `E[X_{n+1} | F_n]` with `X_n` on every atom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub kind: MartingaleKind,
    /// Largest `E[X_{n+1} | F_n] - X_n`.
    pub max_excess: f64,
    /// Largest `X_n - E[X_{n+1} | F_n]`.
    pub max_deficit: f64,
    pub adaptation_defect: f64,
}

impl Classification {
    /// How far the process is from the reported kind (at most the
    /// tolerance unless the kind is `None`).
    pub fn max_violation(&self) -> f64 {
        match self.kind {
            MartingaleKind::Martingale => self.max_excess.max(self.max_deficit),
            MartingaleKind::Submartingale => self.max_deficit,
            MartingaleKind::Supermartingale => self.max_excess,
            MartingaleKind::None => self.max_excess.min(self.max_deficit),
        }
    }

    pub fn is_submartingale(&self) -> bool {
        matches!(self.kind, MartingaleKind::Martingale | MartingaleKind::Submartingale)
    }

    pub fn is_supermartingale(&self) -> bool {
        matches!(self.kind, MartingaleKind::Martingale | MartingaleKind::Supermartingale)
    }
}

pub fn classify_martingale(process: &AtomicProcess, filtration: &Filtration) -> Result<Classification> {
    check_compatible(process, filtration)?;
    let steps = process.horizon() - 1;
    if filtration.len() < steps {
        return Err(Error::input(format!(
            "filtration of length {} is too short for horizon {}",
            filtration.len(),
            process.horizon()
        )));
    }
    let defect = adaptation_defect(process, filtration)?;
    let (mut excess, mut deficit) = (0.0_f64, 0.0_f64);
    for n in 0..steps {
        let next = cell_average(process, n + 1, filtration, n);
        for (atom, e) in next.iter().enumerate() {
            let x = process.path(atom)[n];
            excess = excess.max(e - x);
            deficit = deficit.max(x - e);
        }
    }
    let tol = MARTINGALE_TOLERANCE;
    let kind = if defect > tol {
        MartingaleKind::None
    } else if excess <= tol && deficit <= tol {
        MartingaleKind::Martingale
    } else if deficit <= tol {
        MartingaleKind::Submartingale
    } else if excess <= tol {
        MartingaleKind::Supermartingale
    } else {
        MartingaleKind::None
    };
    Ok(Classification {
        kind,
        max_excess: excess,
        max_deficit: deficit,
        adaptation_defect: defect,
    })
}

/// Split `X = M + A` with `M` a martingale and `A` predictable, `A_0 = 0`.
pub fn doob_decompose(
    process: &AtomicProcess,
    filtration: &Filtration,
) -> Result<(AtomicProcess, AtomicProcess)> {
    check_compatible(process, filtration)?;
    let horizon = process.horizon();
    if filtration.len() < horizon - 1 {
        return Err(Error::input(format!(
            "filtration of length {} is too short for horizon {horizon}",
            filtration.len()
        )));
    }
    let atoms = process.atoms();
    let mut mart = vec![vec![0.0; horizon]; atoms];
    let mut pred = vec![vec![0.0; horizon]; atoms];
    for atom in 0..atoms {
        mart[atom][0] = process.path(atom)[0];
    }
    for n in 1..horizon {
        let hat = cell_average(process, n, filtration, n - 1);
        for atom in 0..atoms {
            let x = process.path(atom).values();
            mart[atom][n] = mart[atom][n - 1] + (x[n] - hat[atom]);
            pred[atom][n] = pred[atom][n - 1] + (hat[atom] - x[n - 1]);
        }
    }
    let weights = process.weights().to_vec();
    Ok((
        AtomicProcess::from_rows(weights.clone(), mart)?,
        AtomicProcess::from_rows(weights, pred)?,
    ))
}

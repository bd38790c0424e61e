//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its own PASS/FAIL line; exits nonzero if any fails.
//!
//! `cargo test --test acceptance` runs it alone.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use metastable::path_statistics::{
    count_disjoint_witnesses, count_fluctuations, count_traversals, find_stability_window, make_partition,
    partition_max_crossings, Interval, Oscillation, Path,
};
use metastable::prob_space::{classify_martingale, AtomicProcess};
use metastable::process_library::{
    gen_almost_supermartingale, gen_ergodic_averages, gen_random_walk, gen_slow_fluc, gen_staircase_adversarial,
    gen_submartingale_tree, gen_vanishing_indicator, tree_filtration, Rotation, StepFunction,
};
use metastable::rate_calculus::{
    induced_metastable_bound, iterate_g, monotone_metastable_bound, schedule_to_g, Constants, GFunction, RateFormula,
    RateParams, Schedule, DEFAULT_INDEX_BUDGET,
};
use metastable::sampling::{replicate_rng, StepRule};
use metastable::verifier::{
    check_crossing_inequalities, check_learnable_pointwise, check_learnable_uniform, check_metastable,
    expected_fluctuations, fluctuation_tail_rate, schedule_from_g_clipped, standard_battery,
    InequalityKind, MetastableMode, Verdict, INEQUALITY_TOLERANCE,
};
use rand::Rng;
use rayon::prelude::*;

const SEED: u64 = 20_240_601;
/// Criterion 1 and 2 corpus size and path length.
const CORPUS: usize = 100_000;
const MAX_LEN: usize = 12;
const GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const SCHEDULES: usize = 10_000;
const MONOTONE_PATHS: usize = 1_000;
const G_TABLES: usize = 100;
const INTERVALS: usize = 50;
const LIMIT_COUNTING: Duration = Duration::from_secs(60);
const LIMIT_UPCROSSING: Duration = Duration::from_secs(300);
const LIMIT_BATTERY: Duration = Duration::from_secs(900);
const LAMBDA_EPS: [(f64, f64); 4] = [(0.25, 0.25), (0.25, 0.5), (0.5, 0.25), (0.5, 0.5)];

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn lib<T>(r: metastable::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + INEQUALITY_TOLERANCE * (1.0 + rhs.abs())
}

fn corpus_path(i: usize) -> Vec<f64> {
    common::random_grid_path(&mut replicate_rng(SEED, i as u64), &GRID, MAX_LEN)
}

fn intervals_on_grid() -> Vec<Interval> {
    let mut out = Vec::new();
    for (i, &a) in GRID.iter().enumerate() {
        for &b in &GRID[i + 1..] {
            out.push(Interval::new(a, b).unwrap());
        }
    }
    out.push(Interval::new(-0.25, 0.25).unwrap());
    out
}

fn counting_oracle() -> Check {
    let started = Instant::now();
    let intervals = intervals_on_grid();
    let up_pred = |x: &[f64], a: usize, b: usize| {
        (a..=b).any(|i| x[i] <= 0.0 && (i + 1..=b).any(|j| x[j] >= 0.5))
    };
    let mismatches: Vec<String> = (0..CORPUS)
        .into_par_iter()
        .filter_map(|i| {
            let x = corpus_path(i);
            let path = Path::new(x.clone()).unwrap();
            for eps in [0.25, 0.5, 1.0, 1.5, 2.0] {
                let got = count_fluctuations(&path, eps, None).unwrap();
                if got != common::fluc(&x, eps) {
                    return Some(format!("Fluc_{eps} on {x:?}"));
                }
                let j = count_disjoint_witnesses(&path, &Oscillation { epsilon: eps }, x.len()).unwrap();
                if j != common::witnesses(&x, &|v, a, b| common::oscillates(v, a, b, eps), x.len()) {
                    return Some(format!("J(oscillation {eps}) on {x:?}"));
                }
            }
            let j = count_disjoint_witnesses(&path, &up_pred, x.len()).unwrap();
            if j != common::witnesses(&x, &up_pred, x.len()) {
                return Some(format!("J(upcrossing) on {x:?}"));
            }
            for iv in &intervals {
                let t = count_traversals(&path, *iv, None).unwrap();
                let (lo, hi) = (iv.lo(), iv.hi());
                if t.up != common::upcrossings(&x, lo, hi)
                    || t.down != common::downcrossings(&x, lo, hi)
                    || t.total() != common::crossings(&x, lo, hi)
                    || t.up != common::upcrossings_by_stopping(&x, lo, hi)
                {
                    return Some(format!("crossings of [{lo}, {hi}] on {x:?}"));
                }
            }
            None
        })
        .collect();
    ensure!(mismatches.is_empty(), "{} mismatches, first {}", mismatches.len(), mismatches[0]);
    let took = started.elapsed();
    ensure!(took <= LIMIT_COUNTING, "took {took:.1?}, limit {LIMIT_COUNTING:?}");
    Ok(format!("{CORPUS} paths, Fluc/Cross/Up/Down/J all equal, {took:.1?}"))
}

fn crossing_fluctuation_sandwich() -> Check {
    let m = 1.0;
    let intervals = intervals_on_grid();
    let violations: Vec<String> = (0..CORPUS)
        .into_par_iter()
        .filter_map(|i| {
            let x = corpus_path(i);
            let path = Path::new(x.clone()).unwrap();
            for iv in &intervals {
                let cross = count_traversals(&path, *iv, None).unwrap().total();
                if cross > count_fluctuations(&path, iv.width(), None).unwrap() {
                    return Some(format!("Cross [{}, {}] > Fluc on {x:?}", iv.lo(), iv.hi()));
                }
            }
            for eps in [0.25, 0.5, 1.0, 1.5, 2.0] {
                let l = (4.0 * m / eps as f64).ceil() as usize;
                let worst = partition_max_crossings(&path, m, l).unwrap();
                let oracle = make_partition(m, l)
                    .unwrap()
                    .iter()
                    .map(|c| common::crossings(&x, c.lo(), c.hi()))
                    .max()
                    .unwrap();
                if worst != oracle || common::fluc(&x, eps) > l * worst {
                    return Some(format!("Fluc_{eps} > {l} x cell crossings on {x:?}"));
                }
            }
            None
        })
        .collect();
    ensure!(violations.is_empty(), "{} violations, first {}", violations.len(), violations[0]);
    Ok(format!("{CORPUS} paths, both directions, zero violations"))
}

fn schedule_round_trip() -> Check {
    let mut rng = replicate_rng(SEED, 3);
    let mut checked = 0;
    for _ in 0..SCHEDULES {
        let horizon = rng.random_range(2..=200);
        let s = common::random_schedule(&mut rng, horizon);
        let g = schedule_to_g(&s);
        for i in 1..=s.len() {
            let it = lib(iterate_g(&g, i as u64))?;
            ensure!(it == s.b(i - 1), "g~^({i})(0) = {it}, schedule has b = {} on {s:?}", s.b(i - 1));
        }
        for n in 0..=s.a(s.len() - 1) {
            let end = n + g.eval(n);
            let inside = s.windows().iter().any(|&(a, b)| n <= a && b <= end);
            ensure!(inside, "[{n}; {end}] contains no window of {s:?}");
        }
        checked += 1;
    }
    Ok(format!("{checked} schedules, iterates and containment exact"))
}

fn monotone_stability() -> Check {
    let mut rng = replicate_rng(SEED, 4);
    let ks = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
    let paths: Vec<(f64, Vec<f64>)> = (0..MONOTONE_PATHS)
        .map(|_| {
            let k = ks[rng.random_range(0..ks.len())];
            (k, common::random_monotone(&mut rng, k, 200))
        })
        .collect();
    let tables: Vec<Vec<usize>> = (0..G_TABLES).map(|_| (0..200).map(|_| rng.random_range(1..=5)).collect()).collect();
    let failures: Vec<String> = tables
        .par_iter()
        .flat_map_iter(|t| {
            let g = GFunction::table(t.clone());
            let paths = &paths;
            [0.25, 0.5, 1.0].into_iter().flat_map(move |eps| {
                let g = g.clone();
                paths.iter().filter_map(move |(k, x)| {
                    let bound = monotone_metastable_bound(*k, eps, &g).unwrap();
                    let path = Path::new(x.clone()).unwrap();
                    match find_stability_window(&path, eps, |n| g.eval(n), bound) {
                        Ok(Some(n)) if n <= bound && !common::oscillates(x, n, n + g.eval(n), eps) => None,
                        other => Some(format!("K = {k}, eps = {eps}, bound {bound}: {other:?}")),
                    }
                })
            })
        })
        .collect();
    ensure!(failures.is_empty(), "{} failures, first {}", failures.len(), failures[0]);
    Ok(format!("{} path/g/eps triples, zero failures", MONOTONE_PATHS * G_TABLES * 3))
}

fn staircase_lower_bound() -> Check {
    let mut lines = 0;
    for m in 1..=4 {
        for n in 1..=4 {
            let (lambda, eps) = (1.0 / n as f64, 1.0 / m as f64);
            let mn = (m * n) as f64;
            let p = lib(gen_staircase_adversarial(m, n, None))?;
            let units = common::all_unit_schedules(p.horizon());
            let mut rates: Vec<f64> = (0..m * n).map(|r| r as f64).collect();
            rates.push(mn - 0.5);
            for &rate in &rates {
                let r = lib(check_learnable_uniform(&p, rate, lambda, eps, &units))?;
                ensure!(r.is_violated(), "M={m} N={n}: rate {rate} not defeated");
                let w = r.witness.as_ref().and_then(|w| w.schedule.clone()).ok_or("violation without schedule")?;
                ensure!(common::uniform_violated(&p, rate, lambda, eps, &w), "M={m} N={n}: witness does not defeat {rate}");
            }
            let at = lib(check_learnable_uniform(&p, mn, lambda, eps, &units))?;
            ensure!(at.is_validated(), "M={m} N={n}: rate MN not validated");
            ensure!(
                units.iter().all(|s| !common::uniform_violated(&p, mn, lambda, eps, s)),
                "M={m} N={n}: oracle defeats MN"
            );
            // past the climb the process is frozen; longer horizons add windows
            let long = lib(gen_staircase_adversarial(m, n, Some(m * n + 3)))?;
            let long_units = common::all_unit_schedules(long.horizon());
            ensure!(
                lib(check_learnable_uniform(&long, mn - 1.0, lambda, eps, &long_units))?.is_violated(),
                "M={m} N={n}: rate MN - 1 survives a longer horizon"
            );
            ensure!(
                lib(check_learnable_uniform(&long, mn, lambda, eps, &long_units))?.is_validated(),
                "M={m} N={n}: rate MN fails at horizon MN + 3"
            );
            lines += 1;
        }
    }
    Ok(format!("{lines} (M, N) pairs, exact over every unit-window schedule"))
}

fn harmonic(h: usize) -> Vec<f64> {
    (0..h).map(|n| 1.0 / (n + 1) as f64).collect()
}

fn vanishing_bumps() -> Check {
    let eps = 0.5;
    let mut crossed = None;
    let mut last = 0.0;
    for h in 2..=200 {
        let p = lib(gen_vanishing_indicator(h))?;
        let e = lib(expected_fluctuations(&p, eps))?;
        ensure!(e + 1e-12 >= last, "E Fluc drops from {last} to {e} at horizon {h}");
        // bump n rises at 2n + 1 and falls at 2n + 2, each with mass 1/(2(n + 1))
        let harmonic: f64 = (0..h)
            .map(|n| ((2 * n + 1 < h) as u8 + (2 * n + 2 < h) as u8) as f64 / (2 * (n + 1)) as f64)
            .sum();
        ensure!((e - harmonic).abs() < 1e-9, "E Fluc {e} is not the harmonic sum {harmonic} at {h}");
        if h <= 30 {
            let oracle = common::expect(&p, |x| common::fluc(x, eps) as f64);
            ensure!((oracle - e).abs() < 1e-9, "E Fluc {e} vs oracle {oracle} at {h}");
        }
        if e >= 3.0 && crossed.is_none() {
            crossed = Some((h, e));
        }
        last = e;
    }
    let (h3, e3) = crossed.ok_or(format!("partial sums stay below 3 (reached {last})"))?;
    let mut runs = 0;
    for h in [10, 50, 200] {
        let p = lib(gen_vanishing_indicator(h))?;
        for lambda in [0.1, 0.25, 0.5] {
            for eps in [0.5, 0.9] {
                let rate = 2.0 / lambda;
                let battery = lib(standard_battery(&p, lambda, eps, SEED))?;
                let r = lib(check_learnable_uniform(&p, rate, lambda, eps, &battery))?;
                ensure!(r.is_validated(), "2/lambda fails at horizon {h}, lambda {lambda}, eps {eps}");
                ensure!(
                    battery.iter().all(|s| !common::uniform_violated(&p, rate, lambda, eps, s)),
                    "oracle defeats 2/lambda at horizon {h}"
                );
                runs += 1;
            }
        }
    }
    Ok(format!("E Fluc reaches {e3:.3} at horizon {h3} and keeps growing ({last:.3} at 200); 2/lambda validated in {runs} runs"))
}

fn sample_intervals(rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64, positive: bool) -> Vec<Interval> {
    (0..INTERVALS)
        .map(|_| {
            let floor = if positive { lo.max(1e-3) } else { lo };
            let a = rng.random_range(floor..hi);
            let b = rng.random_range(a..hi + 1e-9).max(a + 1e-6);
            Interval::new(a, b).unwrap()
        })
        .collect()
}

fn value_range(p: &AtomicProcess) -> (f64, f64) {
    p.paths().iter().flat_map(|q| q.values().iter().copied()).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
}

fn rotations() -> Result<Vec<(Rotation, StepFunction)>, String> {
    Ok(vec![
        (Rotation::golden(), lib(StepFunction::new(vec![1.0, 0.0, 0.25, 1.0, 0.5]))?),
        (lib(Rotation::approximating(2f64.sqrt() - 1.0, 500))?, lib(StepFunction::new(vec![0.0, 2.0, 1.0, 0.0, 0.5, 1.5, 0.25]))?),
        (lib(Rotation::new(3, 17))?, lib(StepFunction::new(vec![1.0, 0.0]))?),
    ])
}

fn upcrossing_inequalities() -> Check {
    let started = Instant::now();
    let mut rng = replicate_rng(SEED, 7);
    let horizon = 14;
    let f = lib(tree_filtration(horizon))?;
    let trees = vec![
        ("random walk", lib(gen_random_walk(horizon, 0.0, 1.0))?),
        ("additive drift", lib(gen_submartingale_tree(horizon, 0.0, StepRule::Additive { step: 1.0 }, |n, _| 0.05 * n as f64))?),
        ("multiplicative drift", lib(gen_submartingale_tree(horizon, 1.0, StepRule::Multiplicative { volatility: 0.3 }, |_, x| 0.02 * x))?),
    ];
    let mut checked = 0;
    for (name, p) in &trees {
        ensure!(p.atoms() == 1 << (horizon - 1), "{name}: {} atoms", p.atoms());
        let (lo, hi) = value_range(p);
        let ivs = sample_intervals(&mut rng, lo, hi, false);
        let r = lib(check_crossing_inequalities(p, Some(&f), None, &ivs, InequalityKind::DoobUp, 0))?;
        ensure!(r.is_validated(), "{name}: {:?}", r.witness);
        for iv in &ivs {
            let (a, b) = (iv.lo(), iv.hi());
            let up = common::expect(p, |x| common::upcrossings(x, a, b) as f64);
            let rhs = common::expect(p, |x| (x[horizon - 1] - a).max(0.0)) / (b - a);
            ensure!(within(up, rhs), "{name} [{a}, {b}]: E Up {up} > {rhs}");
            checked += 1;
        }
    }
    for (rot, sf) in rotations()? {
        let avg = lib(gen_ergodic_averages(rot, &sf, 200))?;
        ensure!(avg.grid_cells <= 10_000, "{} cells", avg.grid_cells);
        let (lo, hi) = value_range(&avg.process);
        let ivs = sample_intervals(&mut rng, lo, hi, false);
        let r = lib(check_crossing_inequalities(&avg.process, None, Some(&avg.observable), &ivs, InequalityKind::BishopUp, 0))?;
        ensure!(r.is_validated(), "rotation {}/{}: {:?}", rot.num, rot.den, r.witness);
        for iv in &ivs {
            let (a, b) = (iv.lo(), iv.hi());
            let up = common::expect(&avg.process, |x| common::upcrossings_by_stopping(x, a, b) as f64);
            let rhs: f64 = avg.observable.iter().zip(avg.process.weights()).map(|(v, w)| w * (v - a).max(0.0)).sum::<f64>() / (b - a);
            ensure!(within(up, rhs), "rotation [{a}, {b}]: E Up {up} > {rhs}");
            checked += 1;
        }
    }
    let took = started.elapsed();
    ensure!(took <= LIMIT_UPCROSSING, "took {took:.1?}");
    Ok(format!("{checked} interval checks on 3 trees (2^13 atoms) and 3 rotations (N = 200), {took:.1?}"))
}

fn downcrossing_tail() -> Check {
    let mut rng = replicate_rng(SEED, 8);
    let mut checked = 0;
    for (rot, sf) in rotations()? {
        let avg = lib(gen_ergodic_averages(rot, &sf, 200))?;
        let (_, hi) = value_range(&avg.process);
        let ivs = sample_intervals(&mut rng, 0.0, hi, true);
        let r = lib(check_crossing_inequalities(&avg.process, None, Some(&avg.observable), &ivs, InequalityKind::IvanovDown, 5))?;
        ensure!(r.is_validated(), "rotation {}/{}: {:?}", rot.num, rot.den, r.witness);
        for iv in &ivs {
            let (a, b) = (iv.lo(), iv.hi());
            for k in 1..=5 {
                let tail = common::expect(&avg.process, |x| (common::downcrossings_by_stopping(x, a, b) >= k) as u8 as f64);
                ensure!(within(tail, (a / b).powi(k as i32)), "[{a}, {b}], k = {k}: {tail}");
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (interval, k) pairs on 3 rotations, zero violations"))
}

/// One rate claim from the battery: a process meeting the formula's
/// hypotheses and the rate at one (lambda, eps).
struct Case {
    name: String,
    process: AtomicProcess,
    rate: f64,
    lambda: f64,
    eps: f64,
}

fn uniform_monotone(rng: &mut rand_chacha::ChaCha8Rng, k: f64, horizon: usize) -> AtomicProcess {
    let rows: Vec<Vec<f64>> = (0..6).map(|_| common::random_monotone(rng, k, horizon)).collect();
    AtomicProcess::from_rows(vec![1.0 / 6.0; 6], rows).unwrap()
}

fn moment_k(p: &AtomicProcess, order: f64) -> f64 {
    (p.sup_moment(order) * (1.0 + 1e-9) + 1e-12).max(1.0)
}

fn battery_cases() -> Result<Vec<Case>, String> {
    let c = Constants::DEFAULT;
    let mut rng = replicate_rng(SEED, 9);
    let mut cases = Vec::new();
    let mut push = |name: String, process: AtomicProcess, formula: RateFormula, k: f64, p: f64, a_err: f64, lambda: f64, eps: f64| -> Result<(), String> {
        ensure!(k <= 2.0 + 1e-6, "{name}: K = {k} above 2");
        let rate = lib(formula.evaluate(&c, &RateParams { lambda, epsilon: eps, k, p, a_err }))?;
        cases.push(Case { name: format!("{} {name} (lambda {lambda}, eps {eps})", formula.id()), process, rate, lambda, eps });
        Ok(())
    };
    let tree_h = 12;
    let f = lib(tree_filtration(tree_h))?;
    let positive = lib(gen_submartingale_tree(tree_h, 1.0, StepRule::Additive { step: 0.08 }, |_, _| 0.01))?;
    let walk = lib(gen_random_walk(tree_h, 0.0, 0.5))?;
    let super_tree = lib(lib(gen_submartingale_tree(tree_h, 0.0, StepRule::Additive { step: 0.4 }, |_, _| 0.02))?.map_values(|_, _, x| -x))?;
    ensure!(classify_martingale(&positive, &f).map_err(|e| e.to_string())?.is_submartingale(), "positive tree is not a submartingale");
    ensure!(classify_martingale(&super_tree, &f).map_err(|e| e.to_string())?.is_supermartingale(), "negated tree is not a supermartingale");
    let errors: Vec<f64> = (0..tree_h).map(|n| 0.1 / 2f64.powi(n as i32)).collect();
    let almost = lib(gen_almost_supermartingale(tree_h, 0.5, 0.5, 0.1, &errors))?;
    ensure!(
        classify_martingale(&lib(almost.compensated())?, &f).map_err(|e| e.to_string())?.is_supermartingale(),
        "compensated process is not a supermartingale"
    );
    let rotation = lib(gen_ergodic_averages(Rotation::golden(), &lib(StepFunction::new(vec![1.0, -1.0, 0.5, 0.0, -0.5]))?, 60))?;

    for (lambda, eps) in LAMBDA_EPS {
        for k in [1.0, 2.0] {
            let rate = 22.0 * k / (lambda * eps);
            let horizon = rate.ceil() as usize + 3;
            push(format!("staircase K={k}"), lib(gen_staircase_adversarial(4, 4, Some(horizon)))?.map_values(|_, _, x| k * x).map_err(|e| e.to_string())?, RateFormula::Monotone, k, f64::INFINITY, 0.0, lambda, eps)?;
            push(format!("random monotone K={k}"), uniform_monotone(&mut rng, k, horizon), RateFormula::Monotone, k, f64::INFINITY, 0.0, lambda, eps)?;
        }
        for p in [1.0, 2.0, f64::INFINITY] {
            push(format!("positive tree p={p}"), positive.clone(), RateFormula::PositiveSubmartingale, moment_k(&positive, p), p, 0.0, lambda, eps)?;
        }
        push("random walk".into(), walk.clone(), RateFormula::Doob, moment_k(&walk, 1.0), f64::INFINITY, 0.0, lambda, eps)?;
        push("supermartingale tree".into(), super_tree.clone(), RateFormula::Doob, moment_k(&super_tree, 1.0), f64::INFINITY, 0.0, lambda, eps)?;
        for p in [1.0, 2.0, f64::INFINITY] {
            let k = (rotation.observable_norm(p) * (1.0 + 1e-9)).max(1.0);
            push(format!("golden rotation p={p}"), rotation.process.clone(), RateFormula::ErgodicAverage, k, p, 0.0, lambda, eps)?;
        }
        for formula in [RateFormula::AlmostSupermartingale, RateFormula::AlmostSupermartingaleDowncrossing] {
            push("almost-supermartingale".into(), almost.process.clone(), formula, almost.k_bound, f64::INFINITY, almost.error_mass, lambda, eps)?;
        }
    }
    Ok(cases)
}

fn rate_battery() -> Check {
    let started = Instant::now();
    let cases = battery_cases()?;
    let mut fitting = 0;
    for c in &cases {
        let battery = lib(standard_battery(&c.process, c.lambda, c.eps, SEED))?;
        let r = lib(check_learnable_uniform(&c.process, c.rate, c.lambda, c.eps, &battery))?;
        ensure!(r.is_validated(), "{}: {:?} with witness {:?}", c.name, r.verdict, r.witness);
        let prefix = r.max_bad_prefix.unwrap_or(0);
        ensure!(prefix as f64 <= c.rate.floor(), "{}: {prefix} bad windows in a row", c.name);
        if c.rate.ceil() as usize + 1 < c.process.horizon() {
            fitting += 1;
        }
    }
    let took = started.elapsed();
    ensure!(took <= LIMIT_BATTERY, "took {took:.1?}");
    Ok(format!(
        "{} claims validated; {fitting} at horizons fitting ceil(rate) windows, the rest on the frozen process; {took:.1?}",
        cases.len()
    ))
}

/// `p` with the empirical tail and mean of the fluctuation statistic.
fn statistic_cases() -> Result<Vec<(String, AtomicProcess, f64, Vec<Schedule>)>, String> {
    let mut out = Vec::new();
    for h in [20, 60] {
        let p = lib(gen_vanishing_indicator(h))?;
        for eps in [0.5, 1.0] {
            out.push((format!("vanishing bumps h={h} eps={eps}"), p.clone(), eps, Vec::new()));
        }
        let p = lib(gen_slow_fluc(&harmonic(h), h))?;
        out.push((format!("slow fluctuations h={h}"), p, 1.0, Vec::new()));
    }
    for m in 1..=4 {
        for n in 1..=4 {
            let p = lib(gen_staircase_adversarial(m, n, None))?;
            let extra = if m * n <= 12 { common::all_unit_schedules(p.horizon()) } else { Vec::new() };
            out.push((format!("staircase M={m} N={n}"), p, 1.0 / m as f64, extra));
        }
    }
    Ok(out)
}

fn statistic_rates() -> Check {
    let mut runs = 0;
    for (name, p, eps, extra) in statistic_cases()? {
        let mean = lib(expected_fluctuations(&p, eps))?;
        if p.horizon() <= 30 {
            let oracle = common::expect(&p, |x| common::fluc(x, eps) as f64);
            ensure!((oracle - mean).abs() < 1e-9, "{name}: E J {mean} vs oracle {oracle}");
        }
        let k = mean * (1.0 + 1e-9) + 1e-12;
        for lambda in [0.25, 0.5, 0.75] {
            let mut schedules = lib(standard_battery(&p, lambda, eps, SEED))?;
            schedules.extend(extra.iter().cloned());
            let rate = (k / lambda).ceil();
            let r = lib(check_learnable_uniform(&p, rate, lambda, eps, &schedules))?;
            ensure!(r.is_validated(), "{name}: ceil(K/lambda) = {rate} fails at lambda {lambda}: {:?}", r.witness);
            let tail = lib(fluctuation_tail_rate(&p, eps, lambda))?;
            let mass = common::expect(&p, |x| (common::fluc(x, eps) >= tail) as u8 as f64);
            ensure!(mass < lambda, "{name}: P(J >= {tail}) = {mass} not below {lambda}");
            let r = lib(check_learnable_pointwise(&p, tail as f64, lambda, eps, &schedules))?;
            ensure!(r.is_validated(), "{name}: tail rate {tail} fails pointwise at lambda {lambda}");
            ensure!(
                schedules.iter().all(|s| !common::pointwise_violated(&p, tail as f64, lambda, eps, s)),
                "{name}: oracle defeats the tail rate"
            );
            runs += 1;
        }
    }
    Ok(format!("{runs} (process, lambda) runs, both rates validated"))
}

fn metastable_bound(rate: f64) -> impl Fn(&GFunction) -> metastable::Result<usize> + Sync {
    move |g: &GFunction| induced_metastable_bound(rate, g, DEFAULT_INDEX_BUDGET)
}

fn learnable_metastable_equivalence() -> Check {
    let mut compared = 0;
    // every claim validated by the battery
    for c in battery_cases()? {
        let battery = lib(standard_battery(&c.process, c.lambda, c.eps, SEED))?;
        let gs: Vec<GFunction> = battery.iter().map(schedule_to_g).collect();
        let meta = lib(check_metastable(&c.process, metastable_bound(c.rate), c.lambda, c.eps, &gs, MetastableMode::Uniform))?;
        ensure!(meta.is_validated(), "{}: induced metastable rate {:?}", c.name, meta.verdict);
        let back: Vec<Schedule> = gs
            .iter()
            .map(|g| schedule_from_g_clipped(g, c.process.horizon()))
            .collect::<metastable::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?
            .into_iter()
            .flatten()
            .collect();
        let learn = lib(check_learnable_uniform(&c.process, c.rate, c.lambda, c.eps, &back))?;
        ensure!(learn.is_validated(), "{}: rate fails on schedules rebuilt from g", c.name);
        compared += 1;
    }
    // exhaustively, on staircases with integer rates
    let mut exhaustive = 0;
    for m in 1..=4 {
        for n in 1..=4 {
            if m * n > 12 {
                continue;
            }
            let p = lib(gen_staircase_adversarial(m, n, None))?;
            let (lambda, eps) = (1.0 / n as f64, 1.0 / m as f64);
            let all = common::all_schedules(p.horizon());
            let gs: Vec<GFunction> = all.iter().map(schedule_to_g).collect();
            for rate in (0..=m * n).map(|r| r as f64) {
                let learn = lib(check_learnable_uniform(&p, rate, lambda, eps, &all))?;
                let meta = lib(check_metastable(&p, metastable_bound(rate), lambda, eps, &gs, MetastableMode::Uniform))?;
                ensure!(
                    learn.verdict == meta.verdict,
                    "M={m} N={n} rate {rate}: learnable {:?} but metastable {:?}",
                    learn.verdict,
                    meta.verdict
                );
                let expected = if rate < (m * n) as f64 { Verdict::Violated } else { Verdict::Validated };
                ensure!(learn.verdict == expected, "M={m} N={n} rate {rate}: {:?}", learn.verdict);
                for (s, gf) in all.iter().zip(&gs) {
                    let g = |k: usize| gf.eval(k);
                    let mv = common::metastable_violated(&p, rate, lambda, eps, &g);
                    ensure!(!common::uniform_violated(&p, rate, lambda, eps, s) || mv, "M={m} N={n}: {s:?} defeats {rate} but its g does not");
                    if mv {
                        let rebuilt = lib(schedule_from_g_clipped(gf, p.horizon()))?.ok_or("empty rebuilt schedule")?;
                        ensure!(common::uniform_violated(&p, rate, lambda, eps, &rebuilt), "M={m} N={n}: g of {s:?} defeats {rate}, its schedule does not");
                    }
                }
                exhaustive += 1;
            }
        }
    }
    Ok(format!("{compared} battery claims agree; {exhaustive} staircase (process, rate) pairs agree over every schedule"))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_metastable")
}

fn run_twice(args: &[&str], dir: &std::path::Path, tag: &str) -> Result<(Vec<u8>, i32), String> {
    let mut outs = Vec::new();
    for round in 0..2 {
        let out = dir.join(format!("{tag}-{round}.json"));
        let status = Command::new(binary())
            .args(args)
            .arg("--output")
            .arg(&out)
            .env("METASTABLE_THREADS", if round == 0 { "1" } else { "4" })
            .output()
            .map_err(|e| e.to_string())?;
        let code = status.status.code().unwrap_or(-1);
        ensure!(code <= 2, "{tag}: exit {code}: {}", String::from_utf8_lossy(&status.stderr));
        outs.push((std::fs::read(&out).map_err(|e| e.to_string())?, code));
    }
    ensure!(outs[0] == outs[1], "{tag}: reports differ between runs");
    Ok(outs.remove(0))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = 0;
    for (name, expect) in [("doob_on_random_walk", 0), ("staircase_defeats_small_rate", 1)] {
        let (_, code) = run_twice(&["verify", "--bundled", name], dir.path(), name)?;
        ensure!(code == expect, "{name}: exit {code}, expected {expect}");
        runs += 1;
    }
    let configs = [
        ("mc", r#"{"schema":"metastable.verify/1","process":{"kind":"random_walk","horizon":10},"check":"learnable_uniform","rate":3,"lambda":0.5,"epsilon":2,"mode":"mc","samples":500,"seed":3}"#),
        ("sampled", r#"{"schema":"metastable.verify/1","process":{"kind":"binary_martingale_tree","horizon":30,"params":{"samples":400}},"check":"learnable_pointwise","rate":{"formula":"doob"},"lambda":0.5,"epsilon":0.5,"seed":11}"#),
        ("meta", r#"{"schema":"metastable.verify/1","process":{"kind":"staircase_adversarial","params":{"M":3,"N":2}},"check":"metastable_uniform","rate":5,"lambda":0.5,"epsilon":0.3333333333333333,"schedules":"consecutive"}"#),
        ("doob", r#"{"schema":"metastable.verify/1","process":{"kind":"submartingale_tree","horizon":11,"params":{"drift":[0.1,0.1,0.1]}},"check":"doob_up","intervals":[[0.5,1.5],[1,2]]}"#),
    ];
    for (tag, text) in configs {
        let path = dir.path().join(format!("{tag}.config.json"));
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        run_twice(&["verify", "--input", path.to_str().unwrap()], dir.path(), tag)?;
        runs += 1;
    }
    let spec = dir.path().join("walk.spec.json");
    std::fs::write(&spec, r#"{"kind":"random_walk","horizon":40,"seed":9,"params":{"samples":50}}"#).map_err(|e| e.to_string())?;
    run_twice(&["simulate", "--input", spec.to_str().unwrap()], dir.path(), "simulate")?;
    Ok(format!("{} runs byte-identical across repeats and thread counts", runs + 1))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("counting oracle equivalence", counting_oracle),
        ("crossings vs fluctuations, both directions", crossing_fluctuation_sandwich),
        ("schedule to g round trip", schedule_round_trip),
        ("finitary monotone convergence", monotone_stability),
        ("staircase lower bound", staircase_lower_bound),
        ("vanishing bumps: unbounded mean, rate 2/lambda", vanishing_bumps),
        ("upcrossing inequalities", upcrossing_inequalities),
        ("downcrossing tail", downcrossing_tail),
        ("rate formula battery", rate_battery),
        ("fluctuation statistic rates", statistic_rates),
        ("learnable and metastable rates agree", learnable_metastable_equivalence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{took:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{took:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

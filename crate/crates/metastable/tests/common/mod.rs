//! Brute-force oracles shared by the integration tests. Each one works from
//! the definition by search, never from the library's scans.
#![allow(dead_code)]

use metastable::prob_space::AtomicProcess;
use metastable::rate_calculus::Schedule;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Largest `k` with `i_1 < j_1 <= i_2 < j_2 <= ...` and every
/// `|x_i - x_j| >= eps`, by memoised search over all pairs.
pub fn fluc(x: &[f64], eps: f64) -> usize {
    let n = x.len();
    let mut best = vec![0usize; n + 1];
    for s in (0..n).rev() {
        let mut b = best[s + 1];
        for i in s..n {
            for j in i + 1..n {
                if (x[i] - x[j]).abs() >= eps {
                    b = b.max(1 + best[j]);
                }
            }
        }
        best[s] = b;
    }
    best[0]
}

fn side(v: f64, lo: f64, hi: f64) -> i8 {
    if v <= lo {
        -1
    } else if v >= hi {
        1
    } else {
        0
    }
}

/// Longest subsequence alternating between `<= lo` and `>= hi`, counted in
/// transitions. `dir` keeps only low-to-high (`1`) or high-to-low (`-1`)
/// moves, `0` keeps both.
fn alternations(x: &[f64], lo: f64, hi: f64, dir: i8) -> usize {
    // best[t]: most counted transitions in a subsequence ending at t
    let n = x.len();
    let mut best: Vec<Option<usize>> = vec![None; n];
    let mut out = 0;
    for t in 0..n {
        let st = side(x[t], lo, hi);
        if st == 0 {
            continue;
        }
        let mut b = 0;
        for s in 0..t {
            let ss = side(x[s], lo, hi);
            if let Some(prev) = best[s] {
                if ss == -st {
                    let counted = dir == 0 || dir == st;
                    b = b.max(prev + counted as usize);
                } else if ss == st {
                    b = b.max(prev);
                }
            }
        }
        best[t] = Some(b);
        out = out.max(b);
    }
    out
}

pub fn crossings(x: &[f64], lo: f64, hi: f64) -> usize {
    alternations(x, lo, hi, 0)
}

pub fn upcrossings(x: &[f64], lo: f64, hi: f64) -> usize {
    alternations(x, lo, hi, 1)
}

pub fn downcrossings(x: &[f64], lo: f64, hi: f64) -> usize {
    alternations(x, lo, hi, -1)
}

/// Upcrossings by the stopping times `tau_k = min{n > sigma_{k-1}: x_n <= lo}`,
/// `sigma_k = min{n > tau_k: x_n >= hi}`. Linear, for long paths.
pub fn upcrossings_by_stopping(x: &[f64], lo: f64, hi: f64) -> usize {
    let mut k = 0;
    let mut n = 0;
    loop {
        let Some(tau) = (n..x.len()).find(|&i| x[i] <= lo) else { return k };
        let Some(sigma) = (tau + 1..x.len()).find(|&i| x[i] >= hi) else { return k };
        k += 1;
        n = sigma + 1;
    }
}

pub fn downcrossings_by_stopping(x: &[f64], lo: f64, hi: f64) -> usize {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    upcrossings_by_stopping(&neg, -hi, -lo)
}

/// Most windows `a_0 < b_0 <= a_1 < ...` below `upto` satisfying `pred`.
pub fn witnesses(x: &[f64], pred: &dyn Fn(&[f64], usize, usize) -> bool, upto: usize) -> usize {
    let mut best = vec![0usize; upto + 1];
    for s in (0..upto).rev() {
        let mut b = best[s + 1];
        for a in s..upto {
            for e in a + 1..upto {
                if pred(x, a, e) {
                    b = b.max(1 + best[e]);
                }
            }
        }
        best[s] = b;
    }
    best[0]
}

pub fn oscillates(x: &[f64], a: usize, b: usize, eps: f64) -> bool {
    let b = b.min(x.len() - 1);
    if a >= b {
        return false;
    }
    let w = &x[a..=b];
    let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo >= eps
}

pub fn window_prob(p: &AtomicProcess, a: usize, b: usize, eps: f64) -> f64 {
    p.paths()
        .iter()
        .zip(p.weights())
        .filter(|(q, _)| oscillates(q.values(), a, b, eps))
        .map(|(_, w)| w)
        .sum()
}

pub fn expect(p: &AtomicProcess, f: impl Fn(&[f64]) -> f64) -> f64 {
    p.paths().iter().zip(p.weights()).map(|(q, w)| w * f(q.values())).sum()
}

/// Uniform learnable rate violated on `s`: at least `floor(rate) + 1`
/// windows, all with probability `>= lambda`.
pub fn uniform_violated(p: &AtomicProcess, rate: f64, lambda: f64, eps: f64, s: &Schedule) -> bool {
    let need = rate.floor() as usize + 1;
    s.len() >= need && s.windows()[..need].iter().all(|&(a, b)| window_prob(p, a, b, eps) >= lambda)
}

pub fn pointwise_violated(p: &AtomicProcess, rate: f64, lambda: f64, eps: f64, s: &Schedule) -> bool {
    let need = rate.floor() as usize + 1;
    if s.len() < need {
        return false;
    }
    let mass: f64 = p
        .paths()
        .iter()
        .zip(p.weights())
        .filter(|(q, _)| s.windows()[..need].iter().all(|&(a, b)| oscillates(q.values(), a, b, eps)))
        .map(|(_, w)| w)
        .sum();
    mass >= lambda
}

/// Every schedule made of unit windows `[j; j + 1]` inside the horizon.
pub fn all_unit_schedules(horizon: usize) -> Vec<Schedule> {
    let slots = horizon.saturating_sub(1);
    (1u64..1 << slots)
        .map(|mask| {
            Schedule::new((0..slots).filter(|j| mask >> j & 1 == 1).map(|j| (j, j + 1)).collect()).unwrap()
        })
        .collect()
}

pub fn random_grid_path(rng: &mut ChaCha8Rng, grid: &[f64], max_len: usize) -> Vec<f64> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| grid[rng.random_range(0..grid.len())]).collect()
}

/// Nondecreasing or nonincreasing multiples of `1/8` in `[-k, k]`.
pub fn random_monotone(rng: &mut ChaCha8Rng, k: f64, len: usize) -> Vec<f64> {
    let steps = (16.0 * k) as u32;
    let mut cuts: Vec<u32> = (0..len).map(|_| rng.random_range(0..=steps)).collect();
    cuts.sort_unstable();
    if rng.random::<bool>() {
        cuts.reverse();
    }
    cuts.into_iter().map(|c| -k + c as f64 / 8.0).collect()
}

pub fn random_schedule(rng: &mut ChaCha8Rng, horizon: usize) -> Schedule {
    let mut w = Vec::new();
    let mut at = rng.random_range(0..3usize);
    while at + 1 < horizon {
        let b = at + rng.random_range(1..=4);
        if b >= horizon {
            break;
        }
        w.push((at, b));
        at = b + rng.random_range(0..3usize);
    }
    if w.is_empty() {
        w.push((0, 1));
    }
    Schedule::new(w).unwrap()
}

/// Every schedule inside `[0, horizon)`.
pub fn all_schedules(horizon: usize) -> Vec<Schedule> {
    fn grow(horizon: usize, start: usize, stack: &mut Vec<(usize, usize)>, out: &mut Vec<Schedule>) {
        for a in start..horizon.saturating_sub(1) {
            for b in a + 1..horizon {
                stack.push((a, b));
                out.push(Schedule::new(stack.clone()).unwrap());
                grow(horizon, b, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(horizon, 0, &mut Vec::new(), &mut out);
    out
}

/// `n + g(n)` iterated `k` times from 0, stopping at a fixed point.
pub fn iterate(g: &dyn Fn(usize) -> usize, k: usize) -> usize {
    let mut n = 0;
    for _ in 0..k {
        if g(n) == 0 {
            break;
        }
        n += g(n);
    }
    n
}

/// Metastable uniform bound `g~^(ceil(rate))(0)` violated: every window
/// `[n; n + g(n)]` up to it is bad. Windows from the last index on are
/// frozen, so a bound past `horizon - 2` is never violated.
pub fn metastable_violated(p: &AtomicProcess, rate: f64, lambda: f64, eps: f64, g: &dyn Fn(usize) -> usize) -> bool {
    let n_max = iterate(g, rate.ceil() as usize);
    if n_max + 2 > p.horizon() {
        return false;
    }
    (0..=n_max).all(|n| window_prob(p, n, n + g(n), eps) >= lambda)
}

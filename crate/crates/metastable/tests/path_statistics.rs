mod common;

use metastable::path_statistics::*;
use metastable::Error;
use proptest::prelude::*;

fn path(v: &[f64]) -> Path {
    Path::new(v.to_vec()).unwrap()
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

#[test]
fn fluctuation_examples() {
    assert_eq!(count_fluctuations(&path(&[5.0; 4]), 0.1, None).unwrap(), 0);
    assert_eq!(count_fluctuations(&path(&[0.0, 1.0, 0.0, 1.0]), 0.5, None).unwrap(), 3);
    assert_eq!(count_fluctuations(&path(&[0.0, 0.4, -0.4]), 0.8, None).unwrap(), 1);
    assert_eq!(count_fluctuations(&path(&[0.0, 1.0, 0.0, 1.0]), 0.5, Some(2)).unwrap(), 1);
}

#[test]
fn fluctuation_errors() {
    assert!(matches!(Path::new(vec![0.0, f64::NAN]), Err(Error::Input(_))));
    assert!(matches!(Path::new(vec![f64::INFINITY]), Err(Error::Input(_))));
    let p = path(&[0.0, 1.0]);
    assert!(matches!(count_fluctuations(&p, 0.0, None), Err(Error::Domain(_))));
    assert!(matches!(count_fluctuations(&p, -1.0, None), Err(Error::Domain(_))));
}

#[test]
fn crossing_examples() {
    let p = path(&[0.0, 1.0, 0.0, 1.0]);
    let i = iv(0.25, 0.75);
    assert_eq!(count_crossings(&p, i, None).unwrap(), 3);
    assert_eq!(count_upcrossings(&p, i), 2);
    assert_eq!(count_downcrossings(&p, i), 1);
    assert_eq!(count_crossings(&path(&[0.5, 0.6, 0.5]), i, None).unwrap(), 0);
    assert_eq!(count_upcrossings(&path(&[1.0, 0.0]), i), 0);
    assert_eq!(count_downcrossings(&path(&[1.0, 0.0]), i), 1);
    assert_eq!(count_traversals(&p, i, None).unwrap(), Traversals { up: 2, down: 1 });
}

#[test]
fn interval_must_be_proper() {
    assert!(Interval::new(1.0, 1.0).is_err());
    assert!(Interval::new(2.0, 1.0).is_err());
    assert!(Interval::new(f64::NAN, 1.0).is_err());
}

#[test]
fn partition_examples() {
    let cells = |m, l| make_partition(m, l).unwrap().iter().map(|c| (c.lo(), c.hi())).collect::<Vec<_>>();
    assert_eq!(cells(1.0, 2), vec![(-1.0, 0.0), (0.0, 1.0)]);
    assert_eq!(cells(1.0, 4), vec![(-1.0, -0.5), (-0.5, 0.0), (0.0, 0.5), (0.5, 1.0)]);
    assert!(make_partition(1.0, 0).is_err());
    assert!(make_partition(0.0, 3).is_err());
}

#[test]
fn witness_examples() {
    let p = path(&[0.0, 1.0, 0.0, 1.0, 0.2, 0.9]);
    let osc = Oscillation { epsilon: 0.5 };
    assert_eq!(
        count_disjoint_witnesses(&p, &osc, p.len()).unwrap(),
        count_fluctuations(&p, 0.5, None).unwrap()
    );
    let never = |_: &[f64], _: usize, _: usize| false;
    assert_eq!(count_disjoint_witnesses(&p, &never, p.len()).unwrap(), 0);
}

#[test]
fn witness_contract_is_enforced() {
    let p = path(&[0.0, 1.0, 2.0, 3.0]);
    let always = |_: &[f64], _: usize, _: usize| true;
    assert!(matches!(count_disjoint_witnesses(&p, &always, 4), Err(Error::Contract(_))));
    let exact_length = |_: &[f64], a: usize, b: usize| b == a + 1;
    assert!(matches!(count_disjoint_witnesses(&p, &exact_length, 4), Err(Error::Contract(_))));
}

#[test]
fn stability_window_examples() {
    let constant = path(&[2.0; 6]);
    assert_eq!(find_stability_window(&constant, 0.3, |_| 2, 3).unwrap(), Some(0));

    // monotone in [-K, K]: a stable window turns up within the iterated bound
    let k: f64 = 1.0;
    let eps = 0.5;
    let mono = path(&[-1.0, -0.6, -0.2, 0.1, 0.4, 0.8, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    let bound = common::iterate(&|_| 1, (2.0 * k / eps).ceil() as usize);
    let found = find_stability_window(&mono, eps, |_| 1, bound).unwrap();
    assert!(found.is_some_and(|n| n <= bound));

    // unit-width staircase with eps = 1/M: every unit window moves until M
    let m = 4usize;
    let stair = path(&(0..m + 3).map(|t| (t as f64 / m as f64).min(1.0)).collect::<Vec<_>>());
    let eps = 1.0 / m as f64;
    assert_eq!(find_stability_window(&stair, eps, |_| 1, m - 1).unwrap(), None);
    assert_eq!(find_stability_window(&stair, eps, |_| 1, m).unwrap(), Some(m));

    assert!(matches!(find_stability_window(&path(&[0.0, 1.0]), 0.5, |_| 3, 0), Err(Error::Input(_))));
}

#[test]
fn monotone_paths_have_few_events() {
    let p = path(&[-1.0, -0.5, 0.0, 0.25, 0.75, 1.0]);
    for eps in [0.25, 0.5, 1.0, 2.0] {
        assert!(count_fluctuations(&p, eps, None).unwrap() <= (2.0 / eps).ceil() as usize);
    }
    for i in make_partition(1.0, 8).unwrap() {
        assert!(count_crossings(&p, i, None).unwrap() <= 1);
    }
}

fn grid_path() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::sample::select(vec![-1.0, -0.5, 0.0, 0.5, 1.0, 0.25]), 1..12)
}

fn any_interval() -> impl Strategy<Value = (f64, f64)> {
    (-4i32..4, 1i32..5).prop_map(|(lo, w)| (lo as f64 / 4.0, (lo + w) as f64 / 4.0))
}

proptest! {
    #[test]
    fn fluctuations_match_exhaustive(x in grid_path(), e in 1u32..9) {
        let eps = e as f64 / 4.0;
        prop_assert_eq!(count_fluctuations(&path(&x), eps, None).unwrap(), common::fluc(&x, eps));
    }

    #[test]
    fn crossings_match_exhaustive(x in grid_path(), (lo, hi) in any_interval()) {
        let p = path(&x);
        let i = iv(lo, hi);
        let t = count_traversals(&p, i, None).unwrap();
        prop_assert_eq!(t.total(), common::crossings(&x, lo, hi));
        prop_assert_eq!(t.up, common::upcrossings(&x, lo, hi));
        prop_assert_eq!(t.down, common::downcrossings(&x, lo, hi));
        prop_assert!(t.down <= t.up + 1 && t.up <= t.down + 1);
        prop_assert_eq!(count_crossings(&p, i, None).unwrap(), t.up + t.down);
    }

    #[test]
    fn crossings_are_fluctuations(x in grid_path(), (lo, hi) in any_interval()) {
        let p = path(&x);
        prop_assert!(count_crossings(&p, iv(lo, hi), None).unwrap()
            <= count_fluctuations(&p, hi - lo, None).unwrap());
    }

    #[test]
    fn fluctuations_bounded_by_partition(x in grid_path(), e in 1u32..9) {
        let eps = e as f64 / 4.0;
        let m = 1.0;
        let l = (4.0 * m / eps).ceil() as usize;
        let p = path(&x);
        prop_assert!(count_fluctuations(&p, eps, None).unwrap() <= l * partition_max_crossings(&p, m, l).unwrap());
    }

    #[test]
    fn counts_grow_with_the_prefix(x in grid_path(), e in 1u32..9) {
        let eps = e as f64 / 4.0;
        let p = path(&x);
        let mut last = 0;
        for k in 1..=x.len() {
            let c = count_fluctuations(&p, eps, Some(k)).unwrap();
            prop_assert!(c >= last);
            prop_assert_eq!(c, count_fluctuations(&p.prefix(k), eps, None).unwrap());
            last = c;
        }
    }

    #[test]
    fn counts_shrink_with_epsilon(x in grid_path(), e in 1u32..8) {
        let p = path(&x);
        let small = count_fluctuations(&p, e as f64 / 4.0, None).unwrap();
        let large = count_fluctuations(&p, (e + 1) as f64 / 4.0, None).unwrap();
        prop_assert!(large <= small);
    }

    #[test]
    fn nested_intervals_cross_less(x in grid_path(), (lo, hi) in any_interval()) {
        let p = path(&x);
        let inner = count_crossings(&p, iv(lo, hi), None).unwrap();
        let outer = count_crossings(&p, iv(lo - 0.25, hi + 0.25), None).unwrap();
        prop_assert!(outer <= inner);
    }

    #[test]
    fn threshold_witnesses_match_exhaustive(x in grid_path(), t in 0u32..8) {
        let level = t as f64 / 4.0 - 1.0;
        // some point after the start of the window sits above the level and
        // some point in it sits below
        let pred = move |v: &[f64], a: usize, b: usize| {
            b > a && v[a..=b].iter().any(|&y| y <= level) && v[a + 1..=b].iter().any(|&y| y > level)
        };
        let p = path(&x);
        prop_assert_eq!(
            count_disjoint_witnesses(&p, &pred, x.len()).unwrap(),
            common::witnesses(&x, &pred, x.len())
        );
    }
}

//! Exact upcrossing and downcrossing inequalities on trees and rotations.
use metastable::path_statistics::Interval;
use metastable::process_library::{gen_ergodic_averages, gen_submartingale_tree, tree_filtration, Rotation, StepFunction};
use metastable::sampling::StepRule;
use metastable::verifier::{check_crossing_inequalities, InequalityKind};

fn main() -> metastable::Result<()> {
    let horizon = 10;
    let tree = gen_submartingale_tree(horizon, 0.0, StepRule::Additive { step: 1.0 }, |n, _| 0.05 * n as f64)?;
    let f = tree_filtration(horizon)?;
    let bands = [Interval::new(-1.0, 1.0)?, Interval::new(0.0, 2.0)?];
    for kind in [InequalityKind::DoobUp, InequalityKind::CrossingVsUp] {
        let r = check_crossing_inequalities(&tree, Some(&f), None, &bands, kind, 5)?;
        println!("tree {kind:?}: {:?} over {} checks", r.verdict, r.checked);
    }

    let f = StepFunction::new(vec![1.0, 0.0, 0.0, 1.0, 0.0])?;
    let avg = gen_ergodic_averages(Rotation::golden(), &f, 40)?;
    let bands = [Interval::new(0.3, 0.5)?];
    for kind in [InequalityKind::BishopUp, InequalityKind::IvanovDown] {
        let r = check_crossing_inequalities(&avg.process, None, Some(&avg.observable), &bands, kind, 4)?;
        println!("rotation {kind:?}: {:?}", r.verdict);
    }
    Ok(())
}

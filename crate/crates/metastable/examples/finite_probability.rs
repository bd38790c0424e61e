//! Exact expectations, filtrations and martingale classification on a
//! finite probability space.
use metastable::prob_space::{classify_martingale, doob_decompose, AtomicProcess, Filtration};
use metastable::process_library::{gen_binary_martingale_tree, gen_submartingale_tree, tree_filtration};
use metastable::sampling::StepRule;

fn main() -> metastable::Result<()> {
    let horizon = 6;
    let f = tree_filtration(horizon)?;

    let fair = gen_binary_martingale_tree(horizon, 1.0, 0.5)?;
    let drift = gen_submartingale_tree(horizon, 0.0, StepRule::Additive { step: 1.0 }, |_, x| 0.1 * x.abs())?;
    for (name, p) in [("fair", &fair), ("drift", &drift)] {
        let c = classify_martingale(p, &f)?;
        println!("{name}: {:?}, E X_last = {:.4}", c.kind, p.expectation(horizon - 1)?);
    }

    let (m, a) = doob_decompose(&drift, &f)?;
    println!("compensator on atom 0: {:?}", a.path(0).values());
    println!("martingale part is {:?}", classify_martingale(&m, &f)?.kind);

    // the same atoms seen only through their own values
    let coarse = AtomicProcess::from_rows(vec![0.25; 4], vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, -1.0], vec![0.0, -1.0]])?;
    println!("natural filtration cells at n=1: {:?}", Filtration::natural(&coarse).partition(1));
    Ok(())
}

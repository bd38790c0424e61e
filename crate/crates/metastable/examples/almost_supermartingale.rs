//! A nonnegative almost-supermartingale with summable errors, its
//! compensated supermartingale, and both of its rates.
use metastable::prob_space::classify_martingale;
use metastable::process_library::{gen_almost_supermartingale, tree_filtration};
use metastable::rate_calculus::{Constants, RateFormula, RateParams};
use metastable::verifier::{check_learnable_uniform, standard_battery};

fn main() -> metastable::Result<()> {
    let horizon = 10;
    let errors: Vec<f64> = (0..horizon).map(|n| 0.1 / 2f64.powi(n as i32)).collect();
    let gen = gen_almost_supermartingale(horizon, 0.5, 0.5, 0.1, &errors)?;
    let f = tree_filtration(horizon)?;
    println!("X is {:?}", classify_martingale(&gen.process, &f)?.kind);
    println!("X - sum E is {:?}", classify_martingale(&gen.compensated()?, &f)?.kind);

    let (lambda, epsilon) = (0.5, 0.25);
    let params = RateParams { lambda, epsilon, k: gen.k_bound, p: f64::INFINITY, a_err: gen.error_mass };
    let battery = standard_battery(&gen.process, lambda, epsilon, 3)?;
    for formula in [RateFormula::AlmostSupermartingale, RateFormula::AlmostSupermartingaleDowncrossing] {
        let rate = formula.evaluate(&Constants::DEFAULT, &params)?;
        let r = check_learnable_uniform(&gen.process, rate, lambda, epsilon, &battery)?;
        println!("{}: rate {rate:.3e} {:?}", formula.id(), r.verdict);
    }
    Ok(())
}

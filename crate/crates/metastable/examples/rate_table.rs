//! The closed-form rate table at one parameter point, and how the induced
//! metastable bound grows with `g`.
use metastable::rate_calculus::{induced_metastable_bound, Constants, GFunction, RateFormula, RateParams, DEFAULT_INDEX_BUDGET};

fn main() -> metastable::Result<()> {
    let params = RateParams { lambda: 0.5, epsilon: 0.5, k: 1.0, p: f64::INFINITY, a_err: 0.25 };
    for f in RateFormula::ALL {
        match f.evaluate(&Constants::DEFAULT, &params) {
            Ok(r) => println!("{:<36} {r:.6e}", f.id()),
            Err(e) => println!("{:<36} n/a ({e})", f.id()),
        }
    }

    let rate = RateFormula::Monotone.evaluate(&Constants::DEFAULT, &params)?;
    // g(n) = n + 1 doubles the index each step, so 88 steps blow the budget
    for (name, g) in [("2", GFunction::constant(2)), ("n / 4 + 1", GFunction::from_fn(|n| n / 4 + 1)), ("n + 1", GFunction::from_fn(|n| n + 1))] {
        match induced_metastable_bound(rate, &g, DEFAULT_INDEX_BUDGET) {
            Ok(b) => println!("g(n) = {name}: stable window found by n <= {b}"),
            Err(e) => println!("g(n) = {name}: {e}"),
        }
    }
    Ok(())
}

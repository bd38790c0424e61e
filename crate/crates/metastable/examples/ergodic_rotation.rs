//! Ergodic averages of a step function under a circle rotation, with the
//! ergodic rate checked on the standard battery.
use metastable::process_library::{gen_ergodic_averages, Rotation, StepFunction};
use metastable::rate_calculus::{Constants, RateFormula, RateParams};
use metastable::verifier::{check_learnable_uniform, expected_fluctuations, standard_battery};

fn main() -> metastable::Result<()> {
    let rotation = Rotation::approximating(2f64.sqrt() - 1.0, 200)?;
    let f = StepFunction::new(vec![1.0, -1.0, 0.5, -0.5])?;
    let avg = gen_ergodic_averages(rotation, &f, 24)?;
    println!(
        "rotation {}/{}: {} grid cells merged into {} atoms",
        rotation.num,
        rotation.den,
        avg.grid_cells,
        avg.process.atoms()
    );

    let (lambda, epsilon) = (0.25, 0.25);
    println!("E Fluc_eps = {:.4}", expected_fluctuations(&avg.process, epsilon)?);
    let params = RateParams { lambda, epsilon, k: (avg.observable_norm(2.0) + 1e-12).max(1.0), p: 2.0, a_err: 0.0 };
    let rate = RateFormula::ErgodicAverage.evaluate(&Constants::DEFAULT, &params)?;
    let battery = standard_battery(&avg.process, lambda, epsilon, 1)?;
    let r = check_learnable_uniform(&avg.process, rate, lambda, epsilon, &battery)?;
    println!("rate {rate:.3e}: {:?} on {} schedules", r.verdict, r.checked);
    Ok(())
}

//! Seeded Monte Carlo estimates for walks too long to enumerate.
use metastable::sampling::{StepRule, WalkSampler};
use metastable::verifier::{check_learnable_mc, dyadic_windows, mc_estimate_window_probability, ClaimKind};

fn main() -> metastable::Result<()> {
    let walk = WalkSampler { horizon: 200, start: 0.0, rule: StepRule::Additive { step: 1.0 }, drift: vec![] };
    for (a, b) in [(0, 10), (100, 110), (100, 199)] {
        let (p, hw) = mc_estimate_window_probability(&walk, a, b, 3.0, 4000, 11)?;
        println!("P(oscillation >= 3 on [{a}; {b}]) = {p:.3} +- {hw:.3}");
    }

    let schedules: Vec<_> = dyadic_windows(walk.horizon).into_iter().collect();
    for rate in [2.0, 6.0] {
        let r = check_learnable_mc(&walk, ClaimKind::LearnableUniform, rate, 0.9, 3.0, &schedules, 4000, 11)?;
        println!("rate {rate}: {:?}", r.verdict);
    }
    Ok(())
}

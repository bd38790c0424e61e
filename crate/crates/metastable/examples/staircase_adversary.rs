//! A staircase process defeats every rate below M*N, and the greedy
//! adversary finds the schedule that shows it.
use metastable::process_library::gen_staircase_adversarial;
use metastable::verifier::{check_learnable_uniform, greedy_bad_chain, standard_battery};

fn main() -> metastable::Result<()> {
    let (m, n) = (3, 2);
    let process = gen_staircase_adversarial(m, n, None)?;
    let (lambda, epsilon) = (1.0 / n as f64, 1.0 / m as f64 - 1e-9);
    println!("greedy bad chain: {:?}", greedy_bad_chain(&process, lambda, epsilon, usize::MAX));

    let battery = standard_battery(&process, lambda, epsilon, 0)?;
    for rate in [(m * n - 1) as f64, (m * n) as f64] {
        let r = check_learnable_uniform(&process, rate, lambda, epsilon, &battery)?;
        let w = r.witness.as_ref().and_then(|w| w.schedule.as_ref()).map(|s| s.windows().to_vec());
        println!("rate {rate}: {:?}, longest bad prefix {:?}, witness {w:?}", r.verdict, r.max_bad_prefix);
    }
    Ok(())
}

//! Metastable bounds checked against explicit `g` functions, next to the
//! learnable check they come from.
use metastable::process_library::gen_random_walk;
use metastable::rate_calculus::{induced_metastable_bound, schedule_to_g, GFunction, DEFAULT_INDEX_BUDGET};
use metastable::verifier::{check_metastable, consecutive_pairs, MetastableMode};

fn main() -> metastable::Result<()> {
    let process = gen_random_walk(10, 0.0, 1.0)?;
    let (lambda, epsilon) = (0.5, 0.5);
    let mut gs = vec![GFunction::constant(1), GFunction::table(vec![2, 2, 1, 1, 1, 1, 1, 1, 1])];
    gs.extend(consecutive_pairs(process.horizon()).as_ref().map(schedule_to_g));

    for rate in [2.0, 40.0] {
        let bound = |g: &GFunction| induced_metastable_bound(rate, g, DEFAULT_INDEX_BUDGET);
        for mode in [MetastableMode::Uniform, MetastableMode::Pointwise] {
            let r = check_metastable(&process, bound, lambda, epsilon, &gs, mode)?;
            println!("rate {rate:>4} {mode:?}: {:?} ({})", r.verdict, r.notes.join("; "));
        }
    }
    Ok(())
}

//! Fluctuations and crossings of a few hand-written paths.
use metastable::path_statistics::{
    count_fluctuations, count_traversals, find_stability_window, partition_max_crossings, Interval, Path,
};

fn main() -> metastable::Result<()> {
    let zigzag = Path::new(vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.5, 0.4, 0.45, 0.44])?;
    let damped: Path = Path::new((0..40).map(|n| (-1f64).powi(n) / (n + 1) as f64).collect())?;

    for (name, p) in [("zigzag", &zigzag), ("damped", &damped)] {
        let band = Interval::new(0.1, 0.9)?;
        let t = count_traversals(p, band, None)?;
        println!(
            "{name:>7}: fluc(0.5)={} fluc(0.1)={} up={} down={} worst cell of P(1, 8)={}",
            count_fluctuations(p, 0.5, None)?,
            count_fluctuations(p, 0.1, None)?,
            t.up,
            t.down,
            partition_max_crossings(p, 1.0, 8)?,
        );
    }

    // first n with [n; 2n + 1] free of 0.1-jumps
    let n = find_stability_window(&damped, 0.1, |n| n + 1, 19)?;
    println!("damped settles to 0.1 on [n; 2n + 1] from n = {n:?}");
    Ok(())
}

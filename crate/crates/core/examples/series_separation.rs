//! n-ANT with decaying evaporation against n-ANT with a decaying lower bound
//! on the series instance. Usage: `series_separation [n] [trials]`.

use tdaco::harness::{run_trials, Algorithm, ExperimentConfig, InstanceSource};

fn main() -> tdaco::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(9);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);

    println!("series(n={n}), {trials} trials per variant");
    for algorithm in [Algorithm::NantTdev, Algorithm::NantTdlb] {
        let mut cfg = ExperimentConfig::new(algorithm).with_instance(InstanceSource::Series { n, big_m: None });
        cfg.trials = trials;
        cfg.master_seed = 1;
        let r = run_trials(&cfg)?;
        let s = r.summary;
        println!(
            "{algorithm:>10}: median {:>9} mean {:>11.1} min {:>8} max {:>9} cap hits {}",
            s.median, s.mean, s.min, s.max, s.cap_hits
        );
    }
    Ok(())
}

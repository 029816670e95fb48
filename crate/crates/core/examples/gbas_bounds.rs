//! Evaluates the probability bound for GBAS missing every optimal walk, the
//! number of cycles needed to push it below a target, and the pheromone
//! decay horizon.

use tdaco::gbas::{no_opt_walk_prob_bound, pheromone_decay_horizon, theorem1_required_cycles, GbasBoundQuery};
use tdaco::pheromone::EvaporationSchedule;

fn main() -> tdaco::Result<()> {
    let q = GbasBoundQuery::new(4, 2, 2, 0.2);
    let sched = EvaporationSchedule::harmonic(q.alpha)?;
    println!("n=4 L=2 |S|=2 rho(k)=0.2/k");
    for m in [2, 5, 10, 20, 100, 1_000, 100_000] {
        println!("  P[no optimal walk in cycles 2..{m}] <= {:.6}", no_opt_walk_prob_bound(&q.at_cycle(m), &sched));
    }

    for eps in [0.5, 0.1, 0.01, 1e-3] {
        let m = theorem1_required_cycles(&q.with_epsilon(eps))?;
        println!("  bound <= {eps} from cycle {m}");
    }
    let wide = GbasBoundQuery::new(12, 4, 8, 0.12).with_epsilon(0.01);
    match theorem1_required_cycles(&wide) {
        Ok(m) => println!("n=12 L=4 |S|=8 alpha=0.12: {m} cycles"),
        Err(e) => println!("n=12 L=4 |S|=8 alpha=0.12: {e}"),
    }

    for (eta, alpha) in [(0.5, 0.5), (0.1, 0.5), (0.5, 0.1), (0.1, 0.1), (0.01, 0.05)] {
        match pheromone_decay_horizon(25, eta, alpha) {
            Ok(h) => println!("m*=25 eta={eta} alpha={alpha}: off-walk arcs <= eta by cycle {h}"),
            Err(e) => println!("m*=25 eta={eta} alpha={alpha}: {e}"),
        }
    }
    Ok(())
}

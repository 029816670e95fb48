//! Runs n-ANT with a decaying lower bound until every ant has its optimum,
//! lets the pheromone settle, and compares the arcs above one half with the
//! shortest-path arcs.

use tdaco::instances::{make_random_dag, shortest_paths};
use tdaco::nant::{processing_latency_bound, run_until_all_optimal, threshold_arcs, NantConfig, RunOptions};
use tdaco::rng::RngStream;

fn main() -> tdaco::Result<()> {
    let inst = make_random_dag(9, 0.4, (1.0, 4.0), 5)?;
    let n2 = (inst.nominal_n * inst.nominal_n) as f64;
    let cfg = NantConfig::tdlb(0.3, 1.0, 1.0 / n2)?;
    let settle = 10 * processing_latency_bound(0.3, 1.0, 1.0 / n2);
    let run = run_until_all_optimal(&inst, cfg, &RngStream::new(8), RunOptions::capped(1_000_000).settle(settle))?;
    println!(
        "{}: all ants optimal at cycle {:?}, ran {} cycles",
        inst.label, run.all_optimal_at, run.cycles_run
    );

    let sp = shortest_paths(&inst)?;
    let kept = threshold_arcs(&inst.graph, &run.final_state.pheromone, 0.5);
    for a in &kept {
        let arc = inst.graph.arc(*a);
        println!(
            "  {} -> {} (w={}) tau={:.4} correct={}",
            arc.tail,
            arc.head,
            arc.weight,
            run.final_state.pheromone.get(*a),
            sp.is_correct_arc(&inst.graph, *a)
        );
    }
    Ok(())
}

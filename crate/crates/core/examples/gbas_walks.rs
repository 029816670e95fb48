//! GBAS on a random DAG: watch the best walk improve and the pheromone
//! concentrate on it.

use tdaco::gbas::{gbas_cycle, gbas_init};
use tdaco::instances::{gbas_problem, make_random_dag, shortest_paths};
use tdaco::pheromone::EvaporationSchedule;
use tdaco::rng::RngStream;

fn main() -> tdaco::Result<()> {
    let inst = make_random_dag(10, 0.4, (1.0, 10.0), 3)?;
    let oracle = shortest_paths(&inst)?;
    let start = oracle.order[0];
    let problem = gbas_problem(&inst, start)?;
    println!(
        "{}: start {start}, optimum {:.3} using at most {} arcs",
        inst.label,
        oracle.dist[start],
        problem.max_opt_arcs
    );

    let sched = EvaporationSchedule::harmonic(0.5 / problem.max_opt_arcs as f64 * 0.9)?;
    let rng = RngStream::new(42);
    let mut state = gbas_init(&problem, 4)?;
    for _ in 0..200 {
        let before = state.best_cost;
        let report = gbas_cycle(&problem, &mut state, &sched, &rng)?;
        if state.best_cost < before {
            let walk = state.best_walk.as_ref().expect("improved");
            println!(
                "cycle {:>3}: ant {} found cost {:.3} via {:?}{}",
                report.cycle,
                report.improved_by.unwrap_or(0),
                state.best_cost,
                walk.nodes,
                if report.optimal_traversed { " (optimal)" } else { "" }
            );
        }
    }
    let walk = state.best_walk.as_ref().expect("a walk was found");
    let on_walk: f64 = walk.arcs.iter().map(|a| state.pheromone.get(*a)).sum();
    println!(
        "after {} cycles: {:.3} of the total pheromone sits on the best walk",
        state.cycle() - 1,
        on_walk / state.pheromone.total()
    );
    Ok(())
}

//! Generates instances, writes them in the text format, reads them back and
//! prints the shortest-path summary.

use tdaco::format;
use tdaco::instances::{make_random_dag, make_series_default, shortest_paths};

fn main() -> tdaco::Result<()> {
    let dir = std::env::temp_dir().join("tdaco-instances");
    std::fs::create_dir_all(&dir)?;

    for inst in [make_series_default(4)?, make_random_dag(7, 0.35, (1.0, 5.0), 11)?] {
        let path = dir.join(format!("{}.sdsp", inst.graph.node_count()));
        format::write(&inst, &path)?;
        let back = format::read(&path)?;
        assert_eq!(back, inst);

        let sp = shortest_paths(&back)?;
        println!("{} -> {}", back.label, path.display());
        print!("{}", format::to_text(&back));
        for v in &sp.order {
            println!(
                "  node {v}: dist {:.3}, ell {:?}, correct successors {:?}",
                sp.dist[*v], sp.ell[*v], sp.correct_successors[*v]
            );
        }
    }
    Ok(())
}

//! Writes the pheromone trace of one n-ANT run on series(3) as CSV to stdout.

use tdaco::harness::{pheromone_trace, provenance, write_plot_data, ExperimentConfig, PlotData};

fn main() -> tdaco::Result<()> {
    let cfg = ExperimentConfig::parse("algorithm=nant-tdlb\ninstance=series:n=3\nrho=0.3\nmaster_seed=5\n")?;
    let rows = pheromone_trace(&cfg, 30)?;
    write_plot_data(&PlotData::PheromoneTrace(rows), &provenance(Some(&cfg), &[]), std::io::stdout().lock())
}

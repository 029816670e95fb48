//! The n-ANT family on SDSP instances.
//!
//! One ant sits on every non-target node and walks towards the target for at
//! most `|V|` steps per cycle. Each ant keeps its best-so-far path length and
//! reinforces only the outgoing arcs of its own node, so the per-node
//! pheromone vectors evolve independently given the walks.
//!
//! Three update rules are provided:
//!
//! * `Tdev`: time-dependent evaporation `rho(m)`, no bounds.
//! * `Tdlb`: constant evaporation, values clamped to `[tau_min(m), tau_max]`
//!   with `tau_min(m) = c_n / ln(m + 1)`.
//! * `Base`: the same clamp with a constant lower bound.
//!
//! The reinforced arc of node `i` is the first arc of the ant's best walk.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{walk_into, ConstructionGraph, NodeId, WalkBuf};
use crate::instances::{shortest_paths_auto, SdspInstance, ShortestPathSummary};
use crate::pheromone::{EvaporationSchedule, PheromoneBounds, PheromoneState, TauMin};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NantVariant {
    Base,
    Tdev,
    Tdlb,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NantConfig {
    pub variant: NantVariant,
    pub evaporation: EvaporationSchedule,
    pub bounds: Option<PheromoneBounds>,
    /// Threshold for ε-processed nodes; `None` means `1 / n^2`.
    pub epsilon: Option<f64>,
}

impl NantConfig {
    pub fn tdev(evaporation: EvaporationSchedule) -> Self {
        NantConfig {
            variant: NantVariant::Tdev,
            evaporation,
            bounds: None,
            epsilon: None,
        }
    }

    pub fn tdlb(rho: f64, tau_max: f64, c_n: f64) -> Result<Self> {
        Ok(NantConfig {
            variant: NantVariant::Tdlb,
            evaporation: EvaporationSchedule::constant(rho)?,
            bounds: Some(PheromoneBounds::log_decay(tau_max, c_n)?),
            epsilon: None,
        })
    }

    pub fn base(rho: f64, tau_max: f64, tau_min: f64) -> Result<Self> {
        Ok(NantConfig {
            variant: NantVariant::Base,
            evaporation: EvaporationSchedule::constant(rho)?,
            bounds: Some(PheromoneBounds::constant(tau_max, tau_min)?),
            epsilon: None,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        use NantVariant::*;
        match (self.variant, self.evaporation) {
            (Tdev, EvaporationSchedule::PowerLaw { .. }) => {}
            (Tdev, _) => return Err(Error::config("evaporation", "tdev needs a power-law schedule")),
            (Base | Tdlb, EvaporationSchedule::Constant(_)) => {}
            (_, _) => {
                return Err(Error::config(
                    "evaporation",
                    "bounded variants use a constant evaporation rate",
                ))
            }
        }
        match (self.variant, self.bounds.map(|b| b.tau_min)) {
            (Tdev, None) => {}
            (Tdev, Some(_)) => return Err(Error::config("bounds", "tdev takes no pheromone bounds")),
            (Tdlb, Some(TauMin::LogDecay { .. })) => {}
            (Tdlb, _) => {
                return Err(Error::config("bounds", "tdlb needs a log-decaying lower bound"))
            }
            (Base, Some(TauMin::Constant(_))) => {}
            (Base, _) => return Err(Error::config("bounds", "base needs a constant lower bound")),
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::config("epsilon", format!("{eps} not in (0,1)")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AntState {
    pub node: NodeId,
    /// `f̂_i`, infinite until the first successful walk.
    pub best_len: f64,
    /// `Ŝ_i`, the nodes of the best walk.
    pub best_nodes: BTreeSet<NodeId>,
    /// Successor of `node` on the best walk; the arc towards it is reinforced.
    pub best_next: Option<NodeId>,
}

impl AntState {
    fn new(node: NodeId) -> Self {
        AntState {
            node,
            best_len: f64::INFINITY,
            best_nodes: BTreeSet::new(),
            best_next: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NantState {
    pub pheromone: PheromoneState,
    pub ants: Vec<AntState>,
    pub config: NantConfig,
    pub epsilon: f64,
    pub max_steps: usize,
    correct_arc: Vec<bool>,
}

impl NantState {
    pub fn cycle(&self) -> u64 {
        self.pheromone.cycle()
    }

    pub fn ant(&self, node: NodeId) -> Option<&AntState> {
        self.ants.iter().find(|a| a.node == node)
    }

    /// Sum of outgoing pheromone of `node`.
    pub fn outgoing_sum(&self, graph: &ConstructionGraph, node: NodeId) -> f64 {
        graph
            .outgoing(node)
            .iter()
            .map(|a| self.pheromone.get(*a))
            .sum()
    }

    fn processed(&self, graph: &ConstructionGraph, node: NodeId) -> bool {
        graph
            .outgoing(node)
            .iter()
            .all(|a| self.correct_arc[a.0] || self.pheromone.get(*a) <= self.epsilon)
    }
}

/// Serial or rayon-parallel walk sampling within a cycle. Both produce
/// identical states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Serial,
    Parallel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NantCycleReport {
    pub cycle: u64,
    /// `f_i(m)` per ant, in ant order.
    pub walk_costs: Vec<f64>,
    /// `f̂_i` after the cycle, in ant order.
    pub best: Vec<f64>,
    /// Whether each ant's node is ε-processed after the update.
    pub processed: Vec<bool>,
}

pub fn nant_init(instance: &SdspInstance, config: NantConfig) -> Result<NantState> {
    let oracle = shortest_paths_auto(instance)?;
    nant_init_with_oracle(instance, config, &oracle)
}

pub fn nant_init_with_oracle(
    instance: &SdspInstance,
    config: NantConfig,
    oracle: &ShortestPathSummary,
) -> Result<NantState> {
    config.validate()?;
    let g = &instance.graph;
    let t = g.target();
    if let Some(v) = (0..g.node_count()).find(|v| *v != t && oracle.dist[*v].is_infinite()) {
        return Err(Error::UnreachableTarget(v));
    }
    let n = instance.nominal_n.max(1) as f64;
    let limit = 1.0 / (n * n);
    if let Some(PheromoneBounds {
        tau_min: TauMin::LogDecay { c_n },
        ..
    }) = config.bounds
    {
        if c_n > limit * (1.0 + 1e-12) {
            return Err(Error::config("c_n", format!("{c_n} exceeds 1/n^2 = {limit}")));
        }
    }
    let mut tau = vec![0.0; g.arc_count()];
    for v in 0..g.node_count() {
        let deg = g.out_degree(v);
        for a in g.outgoing(v) {
            tau[a.0] = 1.0 / deg as f64;
        }
    }
    Ok(NantState {
        pheromone: PheromoneState::new(tau),
        ants: (0..g.node_count())
            .filter(|v| *v != t)
            .map(AntState::new)
            .collect(),
        config,
        epsilon: config.epsilon.unwrap_or(limit),
        max_steps: g.node_count(),
        correct_arc: oracle.correct_arcs(g),
    })
}

/// `tau <- (1 - rho) tau + rho` on reinforced arcs, `(1 - rho) tau` elsewhere.
pub fn nant_update_tdev(values: &mut [f64], in_best: &[bool], rho: f64) {
    for (v, &best) in values.iter_mut().zip(in_best) {
        *v = tdev_value(*v, best, rho);
    }
}

/// Reinforced arcs are capped at `tau_max`, the rest floored at `tau_min_m`.
pub fn nant_update_tdlb(values: &mut [f64], in_best: &[bool], rho: f64, tau_max: f64, tau_min_m: f64) {
    for (v, &best) in values.iter_mut().zip(in_best) {
        *v = tdlb_value(*v, best, rho, tau_max, tau_min_m);
    }
}

#[inline]
fn tdev_value(tau: f64, in_best: bool, rho: f64) -> f64 {
    if in_best {
        (1.0 - rho) * tau + rho
    } else {
        (1.0 - rho) * tau
    }
}

#[inline]
fn tdlb_value(tau: f64, in_best: bool, rho: f64, tau_max: f64, tau_min_m: f64) -> f64 {
    if in_best {
        ((1.0 - rho) * tau + rho).min(tau_max)
    } else {
        ((1.0 - rho) * tau).max(tau_min_m)
    }
}

/// True iff every incorrect outgoing arc of `node` carries at most ε.
pub fn epsilon_processed(
    instance: &SdspInstance,
    state: &NantState,
    oracle: &ShortestPathSummary,
    node: NodeId,
) -> bool {
    let g = &instance.graph;
    g.outgoing(node).iter().all(|a| {
        oracle.is_correct_arc(g, *a) || state.pheromone.get(*a) <= state.epsilon
    })
}

/// `⌈(1/ρ) ln(τ_max/ε)⌉`: cycles after first seeing the optimum within
/// which the node becomes ε-processed.
pub fn processing_latency_bound(rho: f64, tau_max: f64, epsilon: f64) -> u64 {
    if epsilon >= tau_max {
        return 0;
    }
    ((tau_max / epsilon).ln() / rho).ceil() as u64
}

/// Walk results for one cycle: per ant, the cost and (on improvement) the
/// walk's node list.
struct Sampled {
    cost: f64,
    nodes: Option<Vec<NodeId>>,
}

fn sample_ant(
    g: &ConstructionGraph,
    state: &NantState,
    ant: &AntState,
    rng: &RngStream,
    buf: &mut WalkBuf,
) -> Sampled {
    let m = state.cycle();
    let mut r = rng.fork(m, ant.node as u64);
    let cost = walk_into(
        g,
        state.pheromone.values(),
        ant.node,
        state.max_steps,
        false,
        &mut r,
        buf,
    );
    let nodes = (cost < ant.best_len).then(|| buf.nodes.clone());
    Sampled { cost, nodes }
}

/// Runs the walks of one cycle and folds them into the best-so-far records.
/// Returns per-ant walk costs and the indices of ants that improved.
fn walk_phase(
    g: &ConstructionGraph,
    state: &mut NantState,
    rng: &RngStream,
    exec: Exec,
    buf: &mut WalkBuf,
) -> (Vec<f64>, Vec<usize>) {
    let sampled: Vec<Sampled> = match exec {
        Exec::Serial => state
            .ants
            .iter()
            .map(|ant| sample_ant(g, state, ant, rng, buf))
            .collect(),
        Exec::Parallel => {
            let snapshot: &NantState = state;
            snapshot
                .ants
                .par_iter()
                .map_init(WalkBuf::default, |b, ant| sample_ant(g, snapshot, ant, rng, b))
                .collect()
        }
    };
    let mut improved = Vec::new();
    let costs = sampled.iter().map(|s| s.cost).collect();
    for (idx, s) in sampled.into_iter().enumerate() {
        if let Some(nodes) = s.nodes {
            let ant = &mut state.ants[idx];
            ant.best_len = s.cost;
            ant.best_next = nodes.get(1).copied();
            ant.best_nodes = nodes.into_iter().collect();
            improved.push(idx);
        }
    }
    (costs, improved)
}

/// Applies each ant's local update at the end of the current cycle and
/// advances the cycle counter.
fn update_phase(g: &ConstructionGraph, state: &mut NantState) -> Result<()> {
    let m = state.cycle();
    let rho = state.config.evaporation.rate(m)?;
    let bounds = state.config.bounds;
    let tau_min_m = bounds.map(|b| b.tau_min_at(m));
    let NantState { pheromone, ants, .. } = state;
    let tau = pheromone.values_mut();
    // ascending node id; writes are disjoint per node
    for ant in ants.iter() {
        let Some(next) = ant.best_next else { continue };
        for a in g.outgoing(ant.node) {
            let in_best = g.arc(*a).head == next;
            tau[a.0] = match (bounds, tau_min_m) {
                (Some(b), Some(lo)) => tdlb_value(tau[a.0], in_best, rho, b.tau_max, lo),
                _ => tdev_value(tau[a.0], in_best, rho),
            };
        }
    }
    pheromone.advance();
    Ok(())
}

/// One full cycle: every ant walks, best records are updated, then every ant
/// with a best walk updates its node's outgoing pheromone.
pub fn nant_cycle(
    instance: &SdspInstance,
    state: &mut NantState,
    rng: &RngStream,
    exec: Exec,
) -> Result<NantCycleReport> {
    let g = &instance.graph;
    let cycle = state.cycle();
    let mut buf = WalkBuf::default();
    let (walk_costs, _) = walk_phase(g, state, rng, exec, &mut buf);
    update_phase(g, state)?;
    Ok(NantCycleReport {
        cycle,
        walk_costs,
        best: state.ants.iter().map(|a| a.best_len).collect(),
        processed: state.ants.iter().map(|a| state.processed(g, a.node)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub cycle_cap: u64,
    /// Extra cycles to run after every ant has seen its optimum.
    pub settle_cycles: u64,
    pub exec: Exec,
}

impl RunOptions {
    pub fn capped(cycle_cap: u64) -> Self {
        RunOptions {
            cycle_cap,
            settle_cycles: 0,
            exec: Exec::Serial,
        }
    }

    pub fn settle(mut self, cycles: u64) -> Self {
        self.settle_cycles = cycles;
        self
    }
}

/// Outcome of [`run_until_all_optimal`]. Per-node vectors are indexed by
/// node id; entries for the target are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct NantRun {
    /// Cycle in which the last ant first saw its optimum.
    pub all_optimal_at: Option<u64>,
    pub cycles_run: u64,
    pub cap_hit: bool,
    /// First cycle `m*` whose walk gave the ant an optimal best path.
    pub first_optimal: Vec<Option<u64>>,
    /// First pheromone index `j` (state at the start of cycle `j`) at which
    /// the node was ε-processed.
    pub first_processed: Vec<Option<u64>>,
    /// First pheromone index `j >= m*` at which the node was ε-processed.
    pub processed_after_optimal: Vec<Option<u64>>,
    pub final_state: NantState,
}

impl NantRun {
    /// Total cycles `T`: the all-optimal cycle, or the cap when it was hit.
    pub fn total_cycles(&self) -> u64 {
        self.all_optimal_at.unwrap_or(self.cycles_run)
    }

    /// Per-node latency `processed_after_optimal - first_optimal`.
    pub fn latencies(&self) -> Vec<Option<u64>> {
        self.first_optimal
            .iter()
            .zip(&self.processed_after_optimal)
            .map(|(o, p)| match (o, p) {
                (Some(o), Some(p)) => Some(p - o),
                _ => None,
            })
            .collect()
    }
}

pub fn run_until_all_optimal(
    instance: &SdspInstance,
    config: NantConfig,
    rng: &RngStream,
    opts: RunOptions,
) -> Result<NantRun> {
    let oracle = shortest_paths_auto(instance)?;
    let state = nant_init_with_oracle(instance, config, &oracle)?;
    run_from_state(instance, state, &oracle, rng, opts)
}

/// Continues a run from an arbitrary state (used for seeded pheromone setups).
pub fn run_from_state(
    instance: &SdspInstance,
    mut state: NantState,
    oracle: &ShortestPathSummary,
    rng: &RngStream,
    opts: RunOptions,
) -> Result<NantRun> {
    let g = &instance.graph;
    let n = g.node_count();
    let mut first_optimal = vec![None; n];
    let mut first_processed = vec![None; n];
    let mut after_opt = vec![None; n];
    let mut remaining = 0usize;
    for ant in &state.ants {
        if oracle.is_optimal(ant.node, ant.best_len) {
            first_optimal[ant.node] = Some(state.cycle().saturating_sub(1));
        } else {
            remaining += 1;
        }
        if state.processed(g, ant.node) {
            first_processed[ant.node] = Some(state.cycle());
        }
    }
    let mut all_optimal_at = (remaining == 0).then(|| state.cycle().saturating_sub(1));
    let mut cycles_run = 0u64;
    let mut buf = WalkBuf::default();
    loop {
        match all_optimal_at {
            Some(t) if cycles_run >= t.saturating_add(opts.settle_cycles) => break,
            None if cycles_run >= opts.cycle_cap => break,
            _ => {}
        }
        let m = state.cycle();
        let (_, improved) = walk_phase(g, &mut state, rng, opts.exec, &mut buf);
        for idx in improved {
            let ant = &state.ants[idx];
            if first_optimal[ant.node].is_none() && oracle.is_optimal(ant.node, ant.best_len) {
                first_optimal[ant.node] = Some(m);
                if state.processed(g, ant.node) {
                    after_opt[ant.node] = Some(m);
                }
                remaining -= 1;
            }
        }
        update_phase(g, &mut state)?;
        cycles_run += 1;
        if remaining == 0 && all_optimal_at.is_none() {
            all_optimal_at = Some(m);
        }
        let j = state.cycle();
        for ant in &state.ants {
            let v = ant.node;
            let need_first = first_processed[v].is_none();
            let need_after = first_optimal[v].is_some() && after_opt[v].is_none();
            if (need_first || need_after) && state.processed(g, v) {
                if need_first {
                    first_processed[v] = Some(j);
                }
                if need_after {
                    after_opt[v] = Some(j);
                }
            }
        }
    }
    Ok(NantRun {
        cap_hit: all_optimal_at.is_none(),
        all_optimal_at,
        cycles_run,
        first_optimal,
        first_processed,
        processed_after_optimal: after_opt,
        final_state: state,
    })
}

/// Arcs with pheromone strictly above `delta`.
pub fn threshold_arcs(
    graph: &ConstructionGraph,
    state: &PheromoneState,
    delta: f64,
) -> Vec<crate::graph::ArcId> {
    graph.arc_ids().filter(|a| state.get(*a) > delta).collect()
}

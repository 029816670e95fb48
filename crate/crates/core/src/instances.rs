//! SDSP instances and the exact shortest-path oracle.
//!
//! The oracle supplies everything the experiments compare against: optimal
//! distances `f*_i`, the successors lying on some shortest path (the
//! "correct" arcs), and `ell(i)`, the largest arc count over shortest paths
//! from `i`, used to order nodes from far to near.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::gbas::GbasProblem;
use crate::graph::{ArcId, ConstructionGraph, GraphBuilder, NodeId, Walk};

/// A weighted single-destination shortest path instance.
///
/// `nominal_n` is the size parameter that closed-form quantities refer to
/// (defaults `epsilon = 1/n^2`, `c_n <= 1/n^2`). For the series instance it
/// is the chain length; for generic graphs it is the node count.
#[derive(Clone, Debug, PartialEq)]
pub struct SdspInstance {
    pub graph: ConstructionGraph,
    pub label: String,
    pub nominal_n: usize,
}

impl SdspInstance {
    pub fn new(graph: ConstructionGraph, label: impl Into<String>) -> Self {
        let nominal_n = graph.node_count();
        SdspInstance {
            graph,
            label: label.into(),
            nominal_n,
        }
    }

    pub fn with_nominal_n(mut self, n: usize) -> Self {
        self.nominal_n = n;
        self
    }

    pub fn target(&self) -> NodeId {
        self.graph.target()
    }
}

/// Node id of the attractor in `make_series(n, _)`. Chain node `i` has id `i`
/// and the target has id 0.
pub fn series_attractor(n: usize) -> NodeId {
    n + 1
}

/// The adversarial chain: nodes `n..1` each choose between the next chain
/// node (weight 1) and the attractor, whose only exit to the target costs
/// `M - 1`.
pub fn make_series(n: usize, big_m: f64) -> Result<SdspInstance> {
    if n == 0 {
        return Err(Error::Domain("series chain length must be >= 1".into()));
    }
    if !(big_m > n as f64) || !big_m.is_finite() {
        return Err(Error::BadWeight(format!("M = {big_m} must exceed n = {n}")));
    }
    let target = 0;
    let attractor = series_attractor(n);
    let mut b = GraphBuilder::new(n + 2, target).start(n);
    for i in (1..=n).rev() {
        b = b.unit_arc(i, i - 1).unit_arc(i, attractor);
    }
    let graph = b.arc(attractor, target, big_m - 1.0).build()?;
    Ok(SdspInstance::new(graph, format!("series(n={n},M={big_m})")).with_nominal_n(n))
}

/// Series instance with the smallest integral `M`, namely `n + 1`.
pub fn make_series_default(n: usize) -> Result<SdspInstance> {
    make_series(n, n as f64 + 1.0)
}

/// Random DAG over `n` nodes. Nodes get a random topological order ending at
/// the target; consecutive nodes in that order are always linked so every
/// node reaches the target, and every other forward pair becomes an arc with
/// probability `density`.
pub fn make_random_dag(
    n: usize,
    density: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<SdspInstance> {
    if n < 2 {
        return Err(Error::Domain("random DAG needs at least 2 nodes".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Domain(format!("density {density} not in (0,1]")));
    }
    let (lo, hi) = weight_range;
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::BadWeight(format!("weight range [{lo}, {hi}]")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng);
    let target = order[n - 1];
    let mut b = GraphBuilder::new(n, target).start(order[0]);
    let weight = |rng: &mut Xoshiro256PlusPlus| {
        if hi > lo {
            rng.gen_range(lo..=hi)
        } else {
            lo
        }
    };
    for p in 0..n - 1 {
        for q in p + 1..n {
            let spine = q == p + 1;
            // always draw so the instance shape does not depend on spine position
            let keep = rng.gen::<f64>() < density;
            let w = weight(&mut rng);
            if spine || keep {
                b = b.arc(order[p], order[q], w);
            }
        }
    }
    let graph = b.build()?;
    Ok(SdspInstance::new(
        graph,
        format!("dag(n={n},density={density},w=[{lo},{hi}],seed={seed})"),
    ))
}

/// Tolerance used when comparing path costs.
pub fn cost_tolerance(reference: f64) -> f64 {
    1e-9 * reference.abs().max(1.0)
}

/// `a <= b` up to [`cost_tolerance`].
pub fn cost_le(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a <= b;
    }
    a <= b + cost_tolerance(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OracleMode {
    /// Dynamic programming over a topological order; rejects cycles.
    #[default]
    Dag,
    /// Dijkstra on the reversed graph; accepts cycles (weights are >= 0).
    General,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortestPathSummary {
    /// `f*_i`, infinite when `i` cannot reach the target.
    pub dist: Vec<f64>,
    /// Heads `i'` with `w(i,i') + f*_{i'} = f*_i`.
    pub correct_successors: Vec<BTreeSet<NodeId>>,
    /// `ell(i)`, `None` for nodes that cannot reach the target.
    pub ell: Vec<Option<usize>>,
    /// Reachable nodes by non-increasing `ell`, ties by node id; the target is last.
    pub order: Vec<NodeId>,
}

impl ShortestPathSummary {
    pub fn is_correct_arc(&self, graph: &ConstructionGraph, arc: ArcId) -> bool {
        let a = graph.arc(arc);
        self.correct_successors[a.tail].contains(&a.head)
    }

    /// Per-arc correctness flags.
    pub fn correct_arcs(&self, graph: &ConstructionGraph) -> Vec<bool> {
        graph.arc_ids().map(|a| self.is_correct_arc(graph, a)).collect()
    }

    pub fn is_optimal(&self, node: NodeId, cost: f64) -> bool {
        cost.is_finite() && cost_le(cost, self.dist[node])
    }
}

pub fn shortest_paths(instance: &SdspInstance) -> Result<ShortestPathSummary> {
    shortest_paths_with(instance, OracleMode::Dag)
}

/// DAG mode when the graph is acyclic, general mode otherwise.
pub fn shortest_paths_auto(instance: &SdspInstance) -> Result<ShortestPathSummary> {
    match shortest_paths_with(instance, OracleMode::Dag) {
        Err(Error::CycleDetected(_)) => shortest_paths_with(instance, OracleMode::General),
        other => other,
    }
}

pub fn shortest_paths_with(instance: &SdspInstance, mode: OracleMode) -> Result<ShortestPathSummary> {
    let g = &instance.graph;
    let dist = match mode {
        OracleMode::Dag => dag_distances(g)?,
        OracleMode::General => dijkstra_to_target(g),
    };
    let n = g.node_count();
    let t = g.target();
    let mut correct_successors = vec![BTreeSet::new(); n];
    for v in 0..n {
        if v == t || dist[v].is_infinite() {
            continue;
        }
        for a in g.outgoing(v) {
            let arc = g.arc(*a);
            let via = arc.weight + dist[arc.head];
            if via.is_finite() && cost_le(via, dist[v]) {
                correct_successors[v].insert(arc.head);
            }
        }
    }
    let ell = longest_correct_chain(g, &dist, &correct_successors)?;
    let mut order: Vec<NodeId> = (0..n).filter(|v| ell[*v].is_some()).collect();
    order.sort_by(|a, b| ell[*b].cmp(&ell[*a]).then(a.cmp(b)));
    Ok(ShortestPathSummary {
        dist,
        correct_successors,
        ell,
        order,
    })
}

/// Encodes the path from `start` to the target as a GBAS problem whose
/// objective is the path length.
pub fn gbas_problem(instance: &SdspInstance, start: NodeId) -> Result<GbasProblem> {
    let summary = shortest_paths_auto(instance)?;
    if start >= instance.graph.node_count() {
        return Err(Error::InvalidGraph(format!("start node {start} out of range")));
    }
    let ell = summary.ell[start].ok_or(Error::UnreachableTarget(start))?;
    if ell == 0 {
        return Err(Error::InvalidGraph("start node is the target".into()));
    }
    let graph = instance.graph.clone().with_start(start)?;
    Ok(GbasProblem::new(graph, start, ell, |w: &Walk| w.cost)?.with_optimal_cost(summary.dist[start]))
}

/// Reverse topological order via Kahn's algorithm; cycles are reported.
fn topological_order(g: &ConstructionGraph) -> Result<Vec<NodeId>> {
    let n = g.node_count();
    let mut indeg = vec![0usize; n];
    for a in g.arcs() {
        indeg[a.head] += 1;
    }
    let mut stack: Vec<NodeId> = (0..n).filter(|v| indeg[*v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = stack.pop() {
        order.push(v);
        for a in g.outgoing(v) {
            let h = g.arc(*a).head;
            indeg[h] -= 1;
            if indeg[h] == 0 {
                stack.push(h);
            }
        }
    }
    if order.len() < n {
        let culprit = (0..n).find(|v| indeg[*v] > 0).unwrap_or(0);
        return Err(Error::CycleDetected(culprit));
    }
    Ok(order)
}

fn dag_distances(g: &ConstructionGraph) -> Result<Vec<f64>> {
    let order = topological_order(g)?;
    let t = g.target();
    let mut dist = vec![f64::INFINITY; g.node_count()];
    dist[t] = 0.0;
    for &v in order.iter().rev() {
        if v == t {
            continue;
        }
        for a in g.outgoing(v) {
            let arc = g.arc(*a);
            let via = arc.weight + dist[arc.head];
            if via < dist[v] {
                dist[v] = via;
            }
        }
    }
    Ok(dist)
}

#[derive(PartialEq)]
struct Label(f64, NodeId);

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn dijkstra_to_target(g: &ConstructionGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut incoming = vec![Vec::new(); n];
    for a in g.arcs() {
        incoming[a.head].push((a.tail, a.weight));
    }
    let mut dist = vec![f64::INFINITY; n];
    let t = g.target();
    dist[t] = 0.0;
    let mut heap = BinaryHeap::from([Label(0.0, t)]);
    while let Some(Label(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in &incoming[v] {
            let via = w + d;
            if via < dist[u] {
                dist[u] = via;
                heap.push(Label(via, u));
            }
        }
    }
    dist
}

fn longest_correct_chain(
    g: &ConstructionGraph,
    dist: &[f64],
    succ: &[BTreeSet<NodeId>],
) -> Result<Vec<Option<usize>>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = g.node_count();
    let t = g.target();
    let mut ell: Vec<Option<usize>> = vec![None; n];
    let mut mark = vec![Mark::New; n];
    ell[t] = Some(0);
    mark[t] = Mark::Done;
    for root in 0..n {
        if mark[root] != Mark::New || dist[root].is_infinite() {
            continue;
        }
        // iterative DFS over the correct-successor graph
        let mut stack = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                let best = succ[v].iter().filter_map(|h| ell[*h]).max().unwrap_or(0);
                ell[v] = Some(best + 1);
                mark[v] = Mark::Done;
                continue;
            }
            match mark[v] {
                Mark::Done => continue,
                Mark::Active => return Err(Error::CycleDetected(v)),
                Mark::New => {}
            }
            mark[v] = Mark::Active;
            stack.push((v, true));
            for &h in &succ[v] {
                match mark[h] {
                    Mark::Active => return Err(Error::CycleDetected(h)),
                    Mark::New => stack.push((h, false)),
                    Mark::Done => {}
                }
            }
        }
    }
    Ok(ell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_shape() {
        let s = make_series_default(4).unwrap();
        let g = &s.graph;
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.arc_count(), 9);
        for i in 1..=4 {
            assert_eq!(g.out_degree(i), 2);
        }
        assert_eq!(g.out_degree(series_attractor(4)), 1);
        assert_eq!(g.out_degree(0), 0);
        assert_eq!(s.nominal_n, 4);

        let one = make_series_default(1).unwrap();
        assert_eq!(one.graph.node_count(), 3);
        assert!(one.graph.find_arc(1, 0).is_some());
        assert!(one.graph.find_arc(1, 2).is_some());
    }

    #[test]
    fn series_rejects_small_m() {
        assert!(matches!(make_series(4, 4.0), Err(Error::BadWeight(_))));
        assert!(make_series(4, 4.5).is_ok());
    }

    #[test]
    fn series_oracle() {
        let s = make_series(4, 5.0).unwrap();
        let sp = shortest_paths(&s).unwrap();
        for i in 1..=4 {
            assert_eq!(sp.dist[i], i as f64);
            assert_eq!(sp.ell[i], Some(i));
            assert_eq!(sp.correct_successors[i], BTreeSet::from([i - 1]));
        }
        assert_eq!(sp.dist[0], 0.0);
        assert_eq!(sp.ell[0], Some(0));
        assert_eq!(sp.dist[series_attractor(4)], 4.0);
        assert_eq!(*sp.order.last().unwrap(), 0);
    }

    #[test]
    fn complete_unit_dag_has_unit_distances() {
        let d = make_random_dag(6, 1.0, (1.0, 1.0), 11).unwrap();
        assert_eq!(d.graph.arc_count(), 15);
        let sp = shortest_paths(&d).unwrap();
        let t = d.target();
        for v in 0..6 {
            if v != t {
                assert_eq!(sp.dist[v], 1.0);
                assert_eq!(sp.ell[v], Some(1));
            }
        }
    }

    #[test]
    fn random_dag_is_deterministic() {
        let a = make_random_dag(9, 0.4, (1.0, 5.0), 3).unwrap();
        let b = make_random_dag(9, 0.4, (1.0, 5.0), 3).unwrap();
        assert_eq!(a, b);
        let c = make_random_dag(9, 0.4, (1.0, 5.0), 4).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn cycles_need_general_mode() {
        let g = GraphBuilder::new(3, 2)
            .arc(0, 1, 1.0)
            .arc(1, 0, 1.0)
            .arc(1, 2, 2.0)
            .build()
            .unwrap();
        let inst = SdspInstance::new(g, "loop");
        assert!(matches!(shortest_paths(&inst), Err(Error::CycleDetected(_))));
        let sp = shortest_paths_auto(&inst).unwrap();
        assert_eq!(sp.dist, vec![3.0, 2.0, 0.0]);
        assert_eq!(sp.ell, vec![Some(2), Some(1), Some(0)]);
        assert_eq!(sp.order, vec![0, 1, 2]);
    }

    #[test]
    fn unreachable_nodes_are_excluded_from_order() {
        let g = GraphBuilder::new(3, 1)
            .unit_arc(0, 1)
            .dead_end(2)
            .build()
            .unwrap();
        let sp = shortest_paths(&SdspInstance::new(g, "x")).unwrap();
        assert_eq!(sp.dist[2], f64::INFINITY);
        assert_eq!(sp.ell[2], None);
        assert_eq!(sp.order, vec![0, 1]);
    }
}

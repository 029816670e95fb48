//! Construction graphs, walks, and pheromone-biased arc sampling.
//!
//! Every algorithm variant walks the same structure: a directed graph with a
//! designated target, arcs indexed by [`ArcId`], and a pheromone vector with
//! one entry per arc. An ant standing at a node picks an outgoing arc with
//! probability proportional to its pheromone, restricted to arcs whose head
//! has not been forbidden.

use std::collections::{BTreeSet, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::pheromone::PheromoneState;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub usize);

impl ArcId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub weight: f64,
}

/// A directed graph with a target node and an optional start node.
///
/// Node ids are `0..node_count`. Arcs are unique per `(tail, head)` pair and
/// self-loops are rejected. A non-target node without outgoing arcs must be
/// declared a dead end; walks that enter it fail.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionGraph {
    node_count: usize,
    arcs: Vec<Arc>,
    outgoing: Vec<Vec<ArcId>>,
    start: Option<NodeId>,
    target: NodeId,
    dead_ends: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    node_count: usize,
    arcs: Vec<Arc>,
    start: Option<NodeId>,
    target: NodeId,
    dead_ends: BTreeSet<NodeId>,
    implicit_dead_ends: bool,
}

impl GraphBuilder {
    pub fn new(node_count: usize, target: NodeId) -> Self {
        GraphBuilder {
            node_count,
            target,
            ..Default::default()
        }
    }

    pub fn start(mut self, start: NodeId) -> Self {
        self.start = Some(start);
        self
    }

    pub fn arc(mut self, tail: NodeId, head: NodeId, weight: f64) -> Self {
        self.arcs.push(Arc { tail, head, weight });
        self
    }

    pub fn unit_arc(self, tail: NodeId, head: NodeId) -> Self {
        self.arc(tail, head, 1.0)
    }

    pub fn dead_end(mut self, node: NodeId) -> Self {
        self.dead_ends.insert(node);
        self
    }

    /// Treat every non-target node without outgoing arcs as a dead end
    /// instead of rejecting the graph.
    pub fn allow_dead_ends(mut self) -> Self {
        self.implicit_dead_ends = true;
        self
    }

    pub fn build(self) -> Result<ConstructionGraph> {
        let n = self.node_count;
        if n == 0 {
            return Err(Error::InvalidGraph("node_count must be positive".into()));
        }
        let in_range = |v: NodeId, what: &str| {
            if v < n {
                Ok(())
            } else {
                Err(Error::InvalidGraph(format!("{what} {v} out of range 0..{n}")))
            }
        };
        in_range(self.target, "target")?;
        if let Some(s) = self.start {
            in_range(s, "start")?;
        }
        let mut seen = HashSet::new();
        let mut outgoing = vec![Vec::new(); n];
        for (idx, arc) in self.arcs.iter().enumerate() {
            in_range(arc.tail, "arc tail")?;
            in_range(arc.head, "arc head")?;
            if arc.tail == arc.head {
                return Err(Error::InvalidGraph(format!("self-loop at node {}", arc.tail)));
            }
            if !arc.weight.is_finite() || arc.weight < 0.0 {
                return Err(Error::BadWeight(format!(
                    "arc {}->{} has weight {}",
                    arc.tail, arc.head, arc.weight
                )));
            }
            if !seen.insert((arc.tail, arc.head)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate arc {}->{}",
                    arc.tail, arc.head
                )));
            }
            outgoing[arc.tail].push(ArcId(idx));
        }
        let mut dead_ends = self.dead_ends;
        for d in &dead_ends {
            in_range(*d, "dead end")?;
        }
        for (v, out) in outgoing.iter().enumerate() {
            if v != self.target && out.is_empty() && !dead_ends.contains(&v) {
                if self.implicit_dead_ends {
                    dead_ends.insert(v);
                } else {
                    return Err(Error::InvalidGraph(format!(
                        "node {v} has no outgoing arcs and is not marked as a dead end"
                    )));
                }
            }
        }
        Ok(ConstructionGraph {
            node_count: n,
            arcs: self.arcs,
            outgoing,
            start: self.start,
            target: self.target,
            dead_ends,
        })
    }
}

impl ConstructionGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0]
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> + '_ {
        (0..self.arcs.len()).map(ArcId)
    }

    pub fn outgoing(&self, node: NodeId) -> &[ArcId] {
        &self.outgoing[node]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.outgoing[node].len()
    }

    pub fn start(&self) -> Option<NodeId> {
        self.start
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn dead_ends(&self) -> &BTreeSet<NodeId> {
        &self.dead_ends
    }

    pub fn find_arc(&self, tail: NodeId, head: NodeId) -> Option<ArcId> {
        self.outgoing[tail]
            .iter()
            .copied()
            .find(|a| self.arcs[a.0].head == head)
    }

    pub fn with_start(mut self, start: NodeId) -> Result<Self> {
        if start >= self.node_count {
            return Err(Error::InvalidGraph(format!("start {start} out of range")));
        }
        self.start = Some(start);
        Ok(self)
    }
}

/// A recorded walk. `cost` is infinite unless the walk reached the target.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    pub nodes: Vec<NodeId>,
    pub arcs: Vec<ArcId>,
    pub cost: f64,
    pub reached_target: bool,
}

impl Walk {
    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn node_set(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().copied().collect()
    }

    /// Sum of arc weights, accumulated from the target backwards so that the
    /// rounding matches the shortest-path recursion `w + dist(next)`.
    pub fn weight_sum(graph: &ConstructionGraph, arcs: &[ArcId]) -> f64 {
        arcs.iter()
            .rev()
            .fold(0.0, |acc, a| graph.arc(*a).weight + acc)
    }
}

fn admissible_mass(
    graph: &ConstructionGraph,
    tau: &[f64],
    at: NodeId,
    forbidden: impl Fn(NodeId) -> bool,
) -> f64 {
    graph
        .outgoing(at)
        .iter()
        .filter(|a| !forbidden(graph.arc(**a).head))
        .map(|a| tau[a.0])
        .sum()
}

/// Probability of each admissible outgoing arc of `at`, proportional to its
/// pheromone. Arcs whose head lies in `forbidden` are excluded.
pub fn transition_probabilities(
    graph: &ConstructionGraph,
    state: &PheromoneState,
    at: NodeId,
    forbidden: &BTreeSet<NodeId>,
) -> Result<Vec<(ArcId, f64)>> {
    let tau = state.values();
    let is_forbidden = |v: NodeId| forbidden.contains(&v);
    let total = admissible_mass(graph, tau, at, is_forbidden);
    if !(total > 0.0) {
        return Err(Error::NoAdmissibleArc(at));
    }
    Ok(graph
        .outgoing(at)
        .iter()
        .filter(|a| !is_forbidden(graph.arc(**a).head))
        .map(|a| (*a, tau[a.0] / total))
        .collect())
}

/// Draws one admissible arc out of `at`. Returns `None` on a dead end.
pub(crate) fn choose_arc<R: Rng + ?Sized>(
    graph: &ConstructionGraph,
    tau: &[f64],
    at: NodeId,
    forbidden: impl Fn(NodeId) -> bool + Copy,
    rng: &mut R,
) -> Option<ArcId> {
    let total = admissible_mass(graph, tau, at, forbidden);
    if !(total > 0.0) {
        return None;
    }
    let mut x = rng.gen::<f64>() * total;
    let mut last = None;
    for a in graph.outgoing(at) {
        if forbidden(graph.arc(*a).head) || tau[a.0] <= 0.0 {
            continue;
        }
        if x < tau[a.0] {
            return Some(*a);
        }
        x -= tau[a.0];
        last = Some(*a);
    }
    // rounding can leave x marginally above the final bucket
    last
}

/// Reusable buffers for walk sampling in hot loops.
#[derive(Clone, Debug, Default)]
pub(crate) struct WalkBuf {
    pub nodes: Vec<NodeId>,
    pub arcs: Vec<ArcId>,
    visited: Vec<bool>,
}

impl WalkBuf {
    pub fn to_walk(&self, cost: f64) -> Walk {
        Walk {
            nodes: self.nodes.clone(),
            arcs: self.arcs.clone(),
            cost,
            reached_target: cost.is_finite(),
        }
    }
}

/// Fills `buf` with a walk and returns its cost (infinite on failure).
pub(crate) fn walk_into<R: Rng + ?Sized>(
    graph: &ConstructionGraph,
    tau: &[f64],
    start: NodeId,
    max_steps: usize,
    no_revisit: bool,
    rng: &mut R,
    buf: &mut WalkBuf,
) -> f64 {
    let target = graph.target();
    if no_revisit {
        if buf.visited.len() != graph.node_count() {
            buf.visited = vec![false; graph.node_count()];
        } else {
            for &v in &buf.nodes {
                buf.visited[v] = false;
            }
        }
    }
    buf.nodes.clear();
    buf.arcs.clear();
    buf.nodes.push(start);
    let mut at = start;
    if no_revisit {
        buf.visited[start] = true;
    }
    while at != target && buf.arcs.len() < max_steps {
        let step = if no_revisit {
            let visited = &buf.visited;
            choose_arc(graph, tau, at, |v| visited[v], rng)
        } else {
            choose_arc(graph, tau, at, |_| false, rng)
        };
        let Some(arc) = step else { break };
        at = graph.arc(arc).head;
        if no_revisit {
            buf.visited[at] = true;
        }
        buf.nodes.push(at);
        buf.arcs.push(arc);
    }
    if at == target {
        Walk::weight_sum(graph, &buf.arcs)
    } else {
        f64::INFINITY
    }
}

/// Random walk from `start` following pheromone-proportional transitions.
///
/// Stops on reaching the target, after `max_steps` arcs, or at a dead end.
/// With `no_revisit` every visited node (including `start`) is forbidden for
/// the rest of the walk.
pub fn sample_walk<R: Rng + ?Sized>(
    graph: &ConstructionGraph,
    state: &PheromoneState,
    start: NodeId,
    max_steps: usize,
    no_revisit: bool,
    rng: &mut R,
) -> Walk {
    let mut buf = WalkBuf::default();
    let cost = walk_into(graph, state.values(), start, max_steps, no_revisit, rng, &mut buf);
    buf.to_walk(cost)
}

//! GBAS with time-dependent evaporation, and the computable bounds around it.
//!
//! A colony of `|S|` ants walks from a fixed start node without revisiting
//! nodes. The globally best walk found so far receives `rho(m) / l` on each of
//! its `l` arcs while every arc loses a `rho(m)` fraction, which keeps the
//! total pheromone at exactly one.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{walk_into, ConstructionGraph, NodeId, Walk, WalkBuf};
use crate::instances::cost_le;
use crate::pheromone::{EvaporationSchedule, PheromoneState};
use crate::quadrature::adaptive_simpson;
use crate::rng::RngStream;

pub type CostFn = Arc<dyn Fn(&Walk) -> f64 + Send + Sync>;

/// A problem encoded on a construction graph.
#[derive(Clone)]
pub struct GbasProblem {
    pub graph: ConstructionGraph,
    pub start: NodeId,
    cost_of_walk: CostFn,
    /// Known optimum, used to detect optimal walks.
    pub optimal_cost: Option<f64>,
    /// Upper bound `L` on the number of arcs of an optimal walk.
    pub max_opt_arcs: usize,
}

impl fmt::Debug for GbasProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GbasProblem")
            .field("nodes", &self.graph.node_count())
            .field("arcs", &self.graph.arc_count())
            .field("start", &self.start)
            .field("optimal_cost", &self.optimal_cost)
            .field("max_opt_arcs", &self.max_opt_arcs)
            .finish()
    }
}

impl GbasProblem {
    pub fn new(
        graph: ConstructionGraph,
        start: NodeId,
        max_opt_arcs: usize,
        cost_of_walk: impl Fn(&Walk) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if start >= graph.node_count() {
            return Err(Error::InvalidGraph(format!("start node {start} out of range")));
        }
        if max_opt_arcs == 0 {
            return Err(Error::Domain("L must be positive".into()));
        }
        Ok(GbasProblem {
            graph,
            start,
            cost_of_walk: Arc::new(cost_of_walk),
            optimal_cost: None,
            max_opt_arcs,
        })
    }

    pub fn with_optimal_cost(mut self, cost: f64) -> Self {
        self.optimal_cost = Some(cost);
        self
    }

    /// Objective value of a walk; infinite when it misses the target.
    pub fn cost(&self, walk: &Walk) -> f64 {
        if walk.reached_target {
            (self.cost_of_walk)(walk)
        } else {
            f64::INFINITY
        }
    }

    pub fn is_optimal(&self, cost: f64) -> bool {
        match self.optimal_cost {
            Some(opt) => cost.is_finite() && cost_le(cost, opt),
            None => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbasState {
    pub pheromone: PheromoneState,
    pub best_walk: Option<Walk>,
    pub best_cost: f64,
    pub ant_count: usize,
}

impl GbasState {
    pub fn cycle(&self) -> u64 {
        self.pheromone.cycle()
    }

    fn best_arc_mask(&self, arc_count: usize) -> Result<(Vec<bool>, usize)> {
        let walk = self.best_walk.as_ref().ok_or(Error::NoBestWalk)?;
        let mut mask = vec![false; arc_count];
        for a in &walk.arcs {
            mask[a.0] = true;
        }
        let l = mask.iter().filter(|x| **x).count();
        if l == 0 {
            return Err(Error::NoBestWalk);
        }
        Ok((mask, l))
    }

    /// Applies the updates of cycles `cycle()..to_cycle` in closed form,
    /// keeping the current best walk.
    ///
    /// This reproduces running those cycles whenever no ant finds a strictly
    /// better walk, which is certain once the best walk is optimal.
    pub fn fast_forward(&mut self, sched: &EvaporationSchedule, to_cycle: u64) -> Result<()> {
        let from = self.cycle();
        if to_cycle <= from {
            return Ok(());
        }
        let (mask, l) = self.best_arc_mask(self.pheromone.values().len())?;
        let keep = sched.log_survival(from, to_cycle).exp();
        let share = 1.0 / l as f64;
        for (tau, on) in self.pheromone.values_mut().iter_mut().zip(&mask) {
            *tau = if *on { share + keep * (*tau - share) } else { *tau * keep };
        }
        self.pheromone.set_cycle(to_cycle);
        Ok(())
    }
}

pub fn gbas_init(problem: &GbasProblem, ant_count: usize) -> Result<GbasState> {
    let arcs = problem.graph.arc_count();
    if arcs == 0 {
        return Err(Error::EmptyGraph);
    }
    if ant_count == 0 {
        return Err(Error::Domain("ant_count must be positive".into()));
    }
    Ok(GbasState {
        pheromone: PheromoneState::uniform(arcs, 1.0 / arcs as f64),
        best_walk: None,
        best_cost: f64::INFINITY,
        ant_count,
    })
}

/// One pheromone update with rate `rho_m`, then advances the cycle counter.
pub fn gbas_update(state: &mut GbasState, rho_m: f64) -> Result<()> {
    if !(rho_m > 0.0 && rho_m < 1.0) {
        return Err(Error::Domain(format!("rho {rho_m} not in (0,1)")));
    }
    let (mask, l) = state.best_arc_mask(state.pheromone.values().len())?;
    let bonus = rho_m / l as f64;
    for (tau, on) in state.pheromone.values_mut().iter_mut().zip(&mask) {
        *tau *= 1.0 - rho_m;
        if *on {
            *tau += bonus;
        }
    }
    state.pheromone.advance();
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbasCycleReport {
    pub cycle: u64,
    pub costs: Vec<f64>,
    /// Some ant traversed an optimal walk this cycle.
    pub optimal_traversed: bool,
    /// Ant whose walk became the new best, if any.
    pub improved_by: Option<usize>,
}

pub fn gbas_cycle(
    problem: &GbasProblem,
    state: &mut GbasState,
    sched: &EvaporationSchedule,
    rng: &RngStream,
) -> Result<GbasCycleReport> {
    let m = state.cycle();
    let max_steps = problem.graph.node_count();
    let mut buf = WalkBuf::default();
    let mut costs = Vec::with_capacity(state.ant_count);
    let mut candidate: Option<(usize, Walk)> = None;
    let mut candidate_cost = state.best_cost;
    for ant in 0..state.ant_count {
        let mut r = rng.fork(m, ant as u64);
        let reached = walk_into(
            &problem.graph,
            state.pheromone.values(),
            problem.start,
            max_steps,
            true,
            &mut r,
            &mut buf,
        );
        let walk = buf.to_walk(reached);
        let cost = problem.cost(&walk);
        if cost < candidate_cost {
            candidate_cost = cost;
            candidate = Some((ant, walk));
        }
        costs.push(cost);
    }
    let optimal_traversed = costs.iter().any(|c| problem.is_optimal(*c));
    let improved_by = candidate.as_ref().map(|(ant, _)| *ant);
    if let Some((_, walk)) = candidate {
        state.best_walk = Some(Walk {
            cost: candidate_cost,
            ..walk
        });
        state.best_cost = candidate_cost;
    }
    if state.best_walk.is_some() {
        gbas_update(state, sched.rate(m)?)?;
    } else {
        state.pheromone.advance();
    }
    Ok(GbasCycleReport {
        cycle: m,
        costs,
        optimal_traversed,
        improved_by,
    })
}

/// Parameters of the probability bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GbasBoundQuery {
    pub n: usize,
    pub l: usize,
    pub ant_count: usize,
    pub alpha: f64,
    pub m: u64,
    pub epsilon: f64,
    pub eta: f64,
    pub m_star: u64,
}

impl GbasBoundQuery {
    pub fn new(n: usize, l: usize, ant_count: usize, alpha: f64) -> Self {
        GbasBoundQuery {
            n,
            l,
            ant_count,
            alpha,
            m: 2,
            epsilon: 0.5,
            eta: 0.5,
            m_star: 1,
        }
    }

    pub fn at_cycle(mut self, m: u64) -> Self {
        self.m = m;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// `ln(|S| / n^(2L))`
    fn log_coefficient(&self) -> f64 {
        (self.ant_count as f64).ln() - 2.0 * self.l as f64 * (self.n as f64).ln()
    }

    fn bound_from_sum(&self, sum: f64) -> f64 {
        if self.ant_count == 0 {
            return 1.0;
        }
        (-(self.log_coefficient() + sum.ln()).exp()).exp()
    }
}

const DIRECT_TERMS: u64 = 1 << 20;

/// `sum_{i=1}^{upto} (prod_{k=1}^{i} (1 - rho(k)))^L`
///
/// Exact running products for the first 2^20 terms. The remainder uses
/// Euler-Maclaurin on the smooth interpolant of the log-product.
pub fn survival_power_sum(sched: &EvaporationSchedule, l: usize, upto: u64) -> f64 {
    PowerSums::new(sched, l, upto.min(DIRECT_TERMS)).sum_to(upto)
}

struct PowerSums {
    sched: EvaporationSchedule,
    l: f64,
    k0: u64,
    /// `S(k0) = sum_{k<=k0} ln(1 - rho(k))`
    log_prod_k0: f64,
    sum_k0: f64,
}

impl PowerSums {
    fn new(sched: &EvaporationSchedule, l: usize, k0: u64) -> Self {
        let l = l as f64;
        let (mut log_prod, mut sum) = (0.0, 0.0);
        for k in 1..=k0 {
            log_prod += sched.log_keep(k as f64);
            sum += (l * log_prod).exp();
        }
        PowerSums {
            sched: *sched,
            l,
            k0,
            log_prod_k0: log_prod,
            sum_k0: sum,
        }
    }

    fn sum_to(&self, upto: u64) -> f64 {
        if upto <= self.k0 {
            return PowerSums::new(&self.sched, self.l as usize, upto).sum_k0;
        }
        self.sum_k0 + self.tail(upto)
    }

    /// `sum_{i=k0+1}^{upto} h(i)` with `h(x) = exp(L * S(x))`.
    fn tail(&self, upto: u64) -> f64 {
        let (a, b) = (self.k0 as f64, upto as f64);
        if let EvaporationSchedule::Constant(rho) = self.sched {
            // geometric series in r = (1 - rho)^L
            let log_r = self.l * (-rho).ln_1p();
            let first = (self.l * self.log_prod_k0 + log_r).exp();
            let count = b - a;
            return first * (-(count * log_r).exp_m1()) / (-log_r.exp_m1());
        }
        let log_h = |x: f64| self.l * self.sched.smooth_log_survival(a, self.log_prod_k0, x);
        let h = |x: f64| log_h(x).exp();
        let dh = |x: f64| h(x) * self.l * self.sched.log_keep(x);
        let g = |u: f64| {
            let x = u.exp();
            h(x) * x
        };
        let scale = (h(a) * a).max(h(b) * b);
        let integral = adaptive_simpson(g, a.ln(), b.ln(), 1e-14 * scale, 60);
        integral + 0.5 * (h(b) - h(a)) + (dh(b) - dh(a)) / 12.0
    }
}

/// Upper bound on the probability that no ant traverses an optimal walk in
/// any of the cycles `2..=m`:
/// `exp(-|S| / n^(2L) * sum_{i=1}^{m-1} (prod_{k=1}^{i} (1 - rho(k)))^L)`.
///
/// For `m < 2` the event is vacuous and the bound is 1.
pub fn no_opt_walk_prob_bound(q: &GbasBoundQuery, sched: &EvaporationSchedule) -> f64 {
    if q.m < 2 {
        return 1.0;
    }
    q.bound_from_sum(survival_power_sum(sched, q.l, q.m - 1))
}

/// Smallest `m` for which [`no_opt_walk_prob_bound`] under `rho(k) = alpha/k`
/// drops to `q.epsilon` or below.
pub fn theorem1_required_cycles(q: &GbasBoundQuery) -> Result<u64> {
    const LIMIT: u64 = 1 << 62;
    if !(2.0 * q.alpha * (q.l as f64) < 1.0) {
        return Err(Error::Domain(format!(
            "alpha {} must be below 1/(2L) = {}",
            q.alpha,
            0.5 / q.l as f64
        )));
    }
    if !(q.epsilon > 0.0 && q.epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon {} not in (0,1)", q.epsilon)));
    }
    if q.n == 0 || q.l == 0 {
        return Err(Error::Domain("n and L must be positive".into()));
    }
    let sched = EvaporationSchedule::harmonic(q.alpha)?;
    let l = q.l as f64;
    // exact scan over the first block
    let (mut log_prod, mut sum) = (0.0, 0.0);
    for i in 1..=DIRECT_TERMS {
        log_prod += sched.log_keep(i as f64);
        sum += (l * log_prod).exp();
        if q.bound_from_sum(sum) <= q.epsilon {
            return Ok(i + 1);
        }
    }
    let sums = PowerSums::new(&sched, q.l, DIRECT_TERMS);
    let holds = |m: u64| q.bound_from_sum(sums.sum_to(m - 1)) <= q.epsilon;
    let mut lo = DIRECT_TERMS + 1;
    let mut hi = 2 * DIRECT_TERMS;
    while !holds(hi) {
        if hi >= LIMIT {
            return Err(Error::Unsatisfiable);
        }
        lo = hi;
        hi = (hi * 2).min(LIMIT);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `ceil(m_star / eta^(1/alpha))`, the cycle by which every arc off the
/// optimal best walk holds at most `eta` pheromone.
pub fn pheromone_decay_horizon(m_star: u64, eta: f64, alpha: f64) -> Result<u64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("eta {eta} not in (0,1]")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha {alpha} must be positive")));
    }
    let log_v = (m_star as f64).ln() - eta.ln() / alpha;
    if log_v >= 64.0 * std::f64::consts::LN_2 {
        return Err(Error::Overflow(format!(
            "horizon {m_star}/{eta}^(1/{alpha}) exceeds 2^64"
        )));
    }
    let v = log_v.exp();
    let r = v.round();
    let h = if (v - r).abs() <= 1e-9 * v { r } else { v.ceil() };
    Ok((h as u64).max(m_star))
}

//! Acceptance suite. Each check prints one `PASS`/`FAIL` line; the process
//! fails if any check fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use tdaco::bounds::{bounds_sweep, lambert_w, log_integral, WBranch};
use tdaco::gbas::{gbas_cycle, gbas_init, pheromone_decay_horizon};
use tdaco::graph::{sample_walk, transition_probabilities, ArcId, ConstructionGraph, GraphBuilder, Walk};
use tdaco::harness::{
    gbas_convergence_experiment, run_experiment, scaling_sweep, strip_timestamp, summary_path, Algorithm,
    ExperimentConfig, InstanceSource,
};
use tdaco::instances::{
    cost_le, gbas_problem, make_random_dag, make_series_default, shortest_paths, SdspInstance,
};
use tdaco::nant::{
    nant_cycle, nant_init, processing_latency_bound, run_until_all_optimal, threshold_arcs, Exec, NantConfig,
    RunOptions,
};
use tdaco::pheromone::{EvaporationSchedule, PheromoneState};
use tdaco::quadrature::QuadratureSpec;
use tdaco::rng::RngStream;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Random DAGs with `n <= max_n` from one seed.
fn dags(count: usize, min_n: usize, max_n: usize, seed: u64) -> Vec<SdspInstance> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(min_n..=max_n);
            let density = rng.gen_range(0.2..0.9);
            make_random_dag(n, density, (0.5, 9.5), rng.gen()).unwrap()
        })
        .collect()
}

fn c01_pheromone_conservation() -> Outcome {
    let mut worst = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for (i, inst) in dags(20, 6, 16, 101).iter().enumerate() {
        let g = &inst.graph;
        let n2 = (inst.nominal_n * inst.nominal_n) as f64;
        let rng = RngStream::new(i as u64);
        let mut tdev = nant_init(inst, NantConfig::tdev(EvaporationSchedule::harmonic(0.5).unwrap())).unwrap();
        let mut tdlb = nant_init(inst, NantConfig::tdlb(0.25, 1.0, 1.0 / n2).unwrap()).unwrap();
        let problem = gbas_problem(inst, shortest_paths(inst).unwrap().order[0]).unwrap();
        let sched = EvaporationSchedule::harmonic(0.3).unwrap();
        let mut gbas = gbas_init(&problem, 3).unwrap();
        for _ in 0..1000 {
            nant_cycle(inst, &mut tdev, &rng, Exec::Serial).unwrap();
            nant_cycle(inst, &mut tdlb, &rng, Exec::Serial).unwrap();
            gbas_cycle(&problem, &mut gbas, &sched, &rng).unwrap();
            for v in (0..g.node_count()).filter(|v| *v != g.target()) {
                worst.0 = worst.0.max((tdev.outgoing_sum(g, v) - 1.0).abs());
                worst.1 = worst.1.min(tdlb.outgoing_sum(g, v));
                let out: f64 = g.outgoing(v).iter().map(|a| gbas.pheromone.get(*a)).sum();
                worst.3 = worst.3.max(out);
            }
            worst.2 = worst.2.max((gbas.pheromone.total() - 1.0).abs());
        }
    }
    let (tdev_dev, tdlb_min, gbas_dev, gbas_node) = worst;
    check(
        tdev_dev <= 1e-9 && tdlb_min >= 1.0 - 1e-9 && gbas_dev <= 1e-9 && gbas_node <= 1.0 + 1e-9,
        format!(
            "max|tdev sum-1|={tdev_dev:.2e} min tdlb sum={tdlb_min:.12} max|gbas total-1|={gbas_dev:.2e} max gbas node sum={gbas_node:.12}"
        ),
    )
}

fn c02_processing_latency() -> Outcome {
    let inst = make_series_default(8).unwrap();
    let cfg = NantConfig::tdlb(0.5, 1.0, 1.0 / 64.0).unwrap().with_epsilon(1.0 / 64.0);
    let bound = processing_latency_bound(0.5, 1.0, 1.0 / 64.0);
    let (mut violations, mut worst, mut missing) = (0, 0, 0);
    for seed in 0..100 {
        let opts = RunOptions::capped(1_000_000).settle(bound + 1);
        let run = run_until_all_optimal(&inst, cfg, &RngStream::new(seed), opts).unwrap();
        for v in (1..inst.graph.node_count()).filter(|v| *v != inst.target()) {
            match run.latencies()[v] {
                Some(l) => {
                    worst = worst.max(l);
                    violations += (l > bound) as usize;
                }
                None => missing += 1,
            }
        }
    }
    check(
        bound == 9 && violations == 0 && missing == 0,
        format!("bound={bound} worst latency={worst} violations={violations} unprocessed={missing}"),
    )
}

fn c03_no_opt_walk_monte_carlo() -> Outcome {
    let mut cfg = ExperimentConfig::new(Algorithm::GbasTdev).with_instance(InstanceSource::Series { n: 2, big_m: None });
    cfg.start = Some(2);
    cfg.ant_count = Some(2);
    cfg.alpha = Some(0.2);
    cfg.trials = 10_000;
    cfg.m_max = Some(20);
    cfg.master_seed = 31;
    let rows = gbas_convergence_experiment(&cfg).unwrap();
    let bad: Vec<_> = rows
        .iter()
        .filter(|r| r.empirical > r.bound + 3.0 * r.sigma)
        .map(|r| r.m)
        .collect();
    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    check(
        rows.len() == 19 && bad.is_empty(),
        format!(
            "m=2: {:.4} <= {:.4}; m=20: {:.4} <= {:.4}; violations at m={bad:?}",
            first.empirical, first.bound, last.empirical, last.bound
        ),
    )
}

fn sweep(algorithm: Algorithm, ns: &[usize]) -> Vec<f64> {
    let mut cfg = ExperimentConfig::new(algorithm);
    match algorithm {
        Algorithm::NantTdev => cfg.alpha = Some(0.5),
        _ => {
            cfg.rho = Some(0.25);
            cfg.tau_max = Some(1.0);
        }
    }
    cfg.cycle_cap = Some(10_000_000);
    cfg.master_seed = 2024;
    scaling_sweep(&cfg, ns, 30).unwrap().iter().map(|r| r.median_cycles).collect()
}

fn c04_tdev_tdlb_separation() -> Outcome {
    let ns = [6, 9, 12];
    let tdev = sweep(Algorithm::NantTdev, &ns);
    let tdlb = sweep(Algorithm::NantTdlb, &ns);
    let ratios: Vec<f64> = tdev.iter().zip(&tdlb).map(|(a, b)| a / b).collect();
    let slower = tdev.iter().zip(&tdlb).all(|(a, b)| a > b);
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let context = [15, 18];
    let ctx_dev = sweep(Algorithm::NantTdev, &context);
    let ctx_lb = sweep(Algorithm::NantTdlb, &context);
    let mut detail = String::new();
    for (i, n) in ns.iter().enumerate() {
        detail += &format!("n={n}: {}/{} ratio {:.2}; ", tdev[i], tdlb[i], ratios[i]);
    }
    for (i, n) in context.iter().enumerate() {
        detail += &format!("(n={n}: {}/{} ratio {:.2}) ", ctx_dev[i], ctx_lb[i], ctx_dev[i] / ctx_lb[i]);
    }
    detail += &format!("tdev slower at every n: {slower}; ratio increasing: {increasing}");
    check(slower && increasing, detail)
}

/// Every simple path to the target, as (cost summed from the target, arcs).
fn all_paths(g: &ConstructionGraph, v: usize) -> Vec<(f64, Vec<ArcId>)> {
    if v == g.target() {
        return vec![(0.0, Vec::new())];
    }
    let mut out = Vec::new();
    for a in g.outgoing(v) {
        for (_, rest) in all_paths(g, g.arc(*a).head) {
            let mut arcs = vec![*a];
            arcs.extend(rest);
            out.push((Walk::weight_sum(g, &arcs), arcs));
        }
    }
    out
}

fn rounded(inst: &SdspInstance) -> SdspInstance {
    let g = &inst.graph;
    let mut b = GraphBuilder::new(g.node_count(), g.target());
    for a in g.arcs() {
        b = b.arc(a.tail, a.head, a.weight.round().max(1.0));
    }
    SdspInstance::new(b.build().unwrap(), "rounded")
}

fn c05_oracle_equivalence() -> Outcome {
    let mut instances = dags(50, 2, 8, 505);
    instances.extend(dags(50, 2, 8, 506).iter().map(rounded));
    let mut mismatches = 0;
    let mut ties = 0;
    for inst in &instances {
        let g = &inst.graph;
        let sp = shortest_paths(inst).unwrap();
        for v in 0..g.node_count() {
            let paths = all_paths(g, v);
            let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let optimal: Vec<_> = paths.iter().filter(|p| cost_le(p.0, best)).collect();
            let succ: BTreeSet<usize> = optimal
                .iter()
                .filter_map(|p| p.1.first().map(|a| g.arc(*a).head))
                .collect();
            let ell = optimal.iter().map(|p| p.1.len()).max();
            ties += (succ.len() > 1) as usize;
            if sp.dist[v] != best || sp.correct_successors[v] != succ || sp.ell[v] != ell {
                mismatches += 1;
            }
        }
    }
    check(
        mismatches == 0,
        format!("{} instances, {mismatches} node mismatches, {ties} nodes with tied optima", instances.len()),
    )
}

fn c06_transition_law() -> Outcome {
    const DRAWS: usize = 100_000;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(606);
    let (mut compared, mut outside, mut worst) = (0, 0, 0.0f64);
    for inst in dags(10, 4, 10, 607) {
        let g = &inst.graph;
        let at = (0..g.node_count()).max_by_key(|v| (g.out_degree(*v), *v)).unwrap();
        let tau = PheromoneState::new((0..g.arc_count()).map(|_| rng.gen_range(0.01..1.0)).collect());
        let probs = transition_probabilities(g, &tau, at, &BTreeSet::new()).unwrap();
        let mut counts = vec![0usize; g.arc_count()];
        for _ in 0..DRAWS {
            let w = sample_walk(g, &tau, at, 1, false, &mut rng);
            counts[w.arcs[0].index()] += 1;
        }
        for (arc, p) in probs {
            let f = counts[arc.index()] as f64 / DRAWS as f64;
            let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
            worst = worst.max((f - p).abs() / sigma);
            outside += ((f - p).abs() > 3.0 * sigma) as usize;
            compared += 1;
        }
    }
    check(
        outside == 0,
        format!("{compared} arcs, {outside} outside 3 sigma, worst |z|={worst:.2}"),
    )
}

/// Ramanujan's series for li(x), offset so that li(2) = 0.
fn li_series(x: f64) -> f64 {
    const LI2: f64 = 1.045_163_780_117_493;
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let ln = x.ln();
    let (mut sum, mut fact, mut inner) = (0.0, 1.0, 0.0);
    for n in 1..200 {
        fact *= n as f64;
        if n % 2 == 1 {
            inner += 1.0 / n as f64;
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * ln.powi(n) / (fact * 2f64.powi(n - 1)) * inner;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + ln.ln() + x.sqrt() * sum - LI2
}

fn w_bisect(lower: bool, x: f64) -> f64 {
    let (mut lo, mut hi) = if lower { (-800.0, -1.0) } else { (-1.0, 1.0 + x.max(0.0).ln_1p()) };
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (mid * mid.exp() > x) != lower {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c07_inequality_sweep() -> Outcome {
    let rows = bounds_sweep().unwrap();
    let evidence_only = "hard_recurrence_statement_gamma";
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.check != evidence_only && !r.pass)
        .map(|r| format!("{} {}", r.check, r.params))
        .collect();
    let spec = QuadratureSpec::default();
    let li_err = [3.0, 5.0, 10.0, 100.0, 1e4]
        .iter()
        .map(|x| (log_integral(*x, &spec).unwrap() - li_series(*x)).abs())
        .fold(0.0, f64::max);
    let mut w_err = 0.0f64;
    for x in [-0.2, 0.5, 1.0, 10.0, 100.0] {
        let w = lambert_w(WBranch::Principal, x).unwrap();
        w_err = w_err.max((w - w_bisect(false, x)).abs() / w.abs().max(1.0));
    }
    for x in [-0.3, -0.1, -1e-3] {
        let w = lambert_w(WBranch::Lower, x).unwrap();
        w_err = w_err.max((w - w_bisect(true, x)).abs() / w.abs());
    }
    let checked = rows.iter().filter(|r| r.check != evidence_only).count();
    check(
        failed.is_empty() && li_err <= 1e-8 && w_err <= 1e-12,
        format!("{checked} checks, failed {failed:?}; li max err {li_err:.1e}; W max rel err {w_err:.1e}"),
    )
}

fn c08_limiting_graph() -> Outcome {
    let (mut wrong, mut unique_mismatch, mut runs) = (0, 0, 0);
    for (i, inst) in dags(20, 5, 12, 808).iter().enumerate() {
        let g = &inst.graph;
        let n2 = (inst.nominal_n * inst.nominal_n) as f64;
        let rho = 0.3;
        let settle = 10 * processing_latency_bound(rho, 1.0, 1.0 / n2);
        let cfg = NantConfig::tdlb(rho, 1.0, 1.0 / n2).unwrap();
        let run = run_until_all_optimal(inst, cfg, &RngStream::new(i as u64), RunOptions::capped(1_000_000).settle(settle))
            .unwrap();
        if run.cap_hit {
            continue;
        }
        runs += 1;
        let sp = shortest_paths(inst).unwrap();
        let kept: BTreeSet<ArcId> = threshold_arcs(g, &run.final_state.pheromone, 0.5).into_iter().collect();
        for v in (0..g.node_count()).filter(|v| *v != g.target()) {
            let mine: Vec<_> = g.outgoing(v).iter().filter(|a| kept.contains(a)).collect();
            if mine.len() != 1 || !sp.is_correct_arc(g, *mine[0]) {
                wrong += 1;
            }
        }
        let correct: BTreeSet<ArcId> = g.arc_ids().filter(|a| sp.is_correct_arc(g, *a)).collect();
        let unique = (0..g.node_count()).all(|v| sp.correct_successors[v].len() <= 1);
        if unique && kept != correct {
            unique_mismatch += 1;
        }
    }
    check(
        runs == 20 && wrong == 0 && unique_mismatch == 0,
        format!("{runs} completed runs, {wrong} nodes without exactly one correct retained arc, {unique_mismatch} set mismatches"),
    )
}

fn c09_gbas_decay() -> Outcome {
    let inst = make_series_default(4).unwrap();
    let problem = gbas_problem(&inst, 4).unwrap();
    let alpha = 0.1;
    let sched = EvaporationSchedule::harmonic(alpha).unwrap();
    let (mut violations, mut runs, mut worst, mut max_gap) = (0, 0, 0.0f64, 0.0f64);
    for seed in 0..50 {
        let rng = RngStream::new(9000 + seed);
        let mut state = gbas_init(&problem, 2).unwrap();
        let mut m_star = None;
        while m_star.is_none() && state.cycle() <= 1_000_000 {
            let r = gbas_cycle(&problem, &mut state, &sched, &rng).unwrap();
            if r.optimal_traversed {
                m_star = Some(r.cycle);
            }
        }
        let Some(m_star) = m_star else { continue };
        runs += 1;
        let on_walk: BTreeSet<ArcId> = state.best_walk.as_ref().unwrap().arcs.iter().copied().collect();
        let off_max = |p: &PheromoneState| {
            problem
                .graph
                .arc_ids()
                .filter(|a| !on_walk.contains(a))
                .map(|a| p.get(a))
                .fold(0.0, f64::max)
        };
        // eta = 0.5 by simulation, also cross-checking the closed form
        let h = pheromone_decay_horizon(m_star, 0.5, alpha).unwrap();
        let mut jumped = state.clone();
        while state.cycle() < h {
            gbas_cycle(&problem, &mut state, &sched, &rng).unwrap();
        }
        jumped.fast_forward(&sched, h).unwrap();
        for (a, b) in state.pheromone.values().iter().zip(jumped.pheromone.values()) {
            max_gap = max_gap.max((a - b).abs());
        }
        let off = off_max(&state.pheromone);
        worst = worst.max(off / 0.5);
        violations += (off > 0.5) as usize;
        // eta = 0.1 lies ~1e10 cycles out; only the closed form reaches it
        let h = pheromone_decay_horizon(m_star, 0.1, alpha).unwrap();
        jumped.fast_forward(&sched, h).unwrap();
        let off = off_max(&jumped.pheromone);
        worst = worst.max(off / 0.1);
        violations += (off > 0.1) as usize;
    }
    check(
        runs == 50 && violations == 0 && max_gap < 1e-9,
        format!("{runs} runs, {violations} violations, worst tau/eta={worst:.4}, simulated vs closed form gap {max_gap:.1e}"),
    )
}

fn c10_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut files = 0;
    for (k, text) in [
        "algorithm=nant-tdlb\ninstance=series:n=6\ntrials=5\nmaster_seed=77\n",
        "algorithm=nant-tdev\ninstance=dag:n=8,density=0.4,seed=3\ntrials=4\nmaster_seed=5\n",
        "algorithm=gbas-tdev\ninstance=series:n=5\nant_count=3\ntrials=6\nmaster_seed=9\n",
    ]
    .iter()
    .enumerate()
    {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let mut cfg = ExperimentConfig::parse(text).unwrap();
            let path = dir.path().join(format!("run{k}_{rep}.csv"));
            cfg.output = Some(path.clone());
            run_experiment(&cfg).unwrap();
            let read = |p: &std::path::Path| strip_timestamp(&std::fs::read_to_string(p).unwrap());
            outputs.push((read(&path), read(&summary_path(&path))));
        }
        identical &= outputs[0] == outputs[1];
        files += 2;
    }
    check(identical, format!("{files} CSV files compared across two runs each"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("c01 pheromone conservation", c01_pheromone_conservation),
        ("c02 processing latency", c02_processing_latency),
        ("c03 no-optimal-walk bound (Monte Carlo)", c03_no_opt_walk_monte_carlo),
        ("c04 tdev/tdlb separation", c04_tdev_tdlb_separation),
        ("c05 oracle vs path enumeration", c05_oracle_equivalence),
        ("c06 transition law", c06_transition_law),
        ("c07 inequality sweep", c07_inequality_sweep),
        ("c08 limiting graph", c08_limiting_graph),
        ("c09 GBAS pheromone decay", c09_gbas_decay),
        ("c10 reproducibility", c10_reproducibility),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("acceptance {name}: PASS [{secs:.1}s] {d}"),
            Err(d) => {
                failed += 1;
                println!("acceptance {name}: FAIL [{secs:.1}s] {d}");
            }
        }
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

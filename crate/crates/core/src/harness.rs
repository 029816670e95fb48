//! Experiment configuration, seeded trial orchestration and CSV output.
//!
//! Configs are flat `key=value` files; any key can be overridden from the
//! command line with `--key value`. Every CSV starts with `#` provenance
//! lines naming the crate version, the generation time and the resolved
//! configuration.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use statrs::statistics::{Data, OrderStatistics, Statistics};

use crate::bounds::{bounds_sweep, BoundCheck};
use crate::error::{Error, Result};
use crate::format;
use crate::gbas::{
    gbas_cycle, gbas_init, no_opt_walk_prob_bound, GbasBoundQuery, GbasProblem,
};
use crate::graph::NodeId;
use crate::instances::{gbas_problem, make_random_dag, make_series, make_series_default, SdspInstance};
use crate::nant::{nant_cycle, nant_init, run_until_all_optimal, Exec, NantConfig, RunOptions};
use crate::pheromone::{EvaporationSchedule, PheromoneState};
use crate::rng::RngStream;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    GbasTdev,
    NantTdev,
    NantTdlb,
    NantBase,
}

impl Algorithm {
    fn is_gbas(self) -> bool {
        self == Algorithm::GbasTdev
    }

    fn is_tdev(self) -> bool {
        matches!(self, Algorithm::GbasTdev | Algorithm::NantTdev)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::GbasTdev => "gbas-tdev",
            Algorithm::NantTdev => "nant-tdev",
            Algorithm::NantTdlb => "nant-tdlb",
            Algorithm::NantBase => "nant-base",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gbas-tdev" => Ok(Algorithm::GbasTdev),
            "nant-tdev" => Ok(Algorithm::NantTdev),
            "nant-tdlb" => Ok(Algorithm::NantTdlb),
            "nant-base" => Ok(Algorithm::NantBase),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}` (gbas-tdev, nant-tdev, nant-tdlb, nant-base)"),
            )),
        }
    }
}

/// Where an instance comes from: a generator description or a file.
///
/// Generator specs look like `series:n=8`, `series:n=8,M=20` or
/// `dag:n=10,density=0.3,lo=1,hi=10,seed=7`.
#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSource {
    Series { n: usize, big_m: Option<f64> },
    Dag { n: usize, density: f64, lo: f64, hi: f64, seed: u64 },
    File(PathBuf),
}

impl InstanceSource {
    pub fn load(&self) -> Result<SdspInstance> {
        match self {
            InstanceSource::Series { n, big_m: None } => make_series_default(*n),
            InstanceSource::Series { n, big_m: Some(m) } => make_series(*n, *m),
            InstanceSource::Dag { n, density, lo, hi, seed } => make_random_dag(*n, *density, (*lo, *hi), *seed),
            InstanceSource::File(p) => format::read(p),
        }
    }
}

impl fmt::Display for InstanceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceSource::Series { n, big_m: None } => write!(f, "series:n={n}"),
            InstanceSource::Series { n, big_m: Some(m) } => write!(f, "series:n={n},M={m}"),
            InstanceSource::Dag { n, density, lo, hi, seed } => {
                write!(f, "dag:n={n},density={density},lo={lo},hi={hi},seed={seed}")
            }
            InstanceSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for InstanceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::config("instance", m);
        let Some((kind, rest)) = s.split_once(':').filter(|(k, _)| *k == "series" || *k == "dag") else {
            return Ok(InstanceSource::File(PathBuf::from(s)));
        };
        let mut params = Vec::new();
        for item in rest.split(',').filter(|x| !x.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value in `{item}`")))?;
            params.push((k.trim(), v.trim()));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::config("instance", format!("bad value `{v}` for {key}")))
        }
        let n: usize = num("n", get("n").ok_or_else(|| bad("missing n".into()))?)?;
        let known: &[&str] = if kind == "series" {
            &["n", "M"]
        } else {
            &["n", "density", "lo", "hi", "seed"]
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(k)) {
            return Err(bad(format!("unknown {kind} parameter `{k}`")));
        }
        if kind == "series" {
            let big_m = get("M").map(|v| num("M", v)).transpose()?;
            return Ok(InstanceSource::Series { n, big_m });
        }
        Ok(InstanceSource::Dag {
            n,
            density: get("density").map_or(Ok(0.3), |v| num("density", v))?,
            lo: get("lo").map_or(Ok(1.0), |v| num("lo", v))?,
            hi: get("hi").map_or(Ok(10.0), |v| num("hi", v))?,
            seed: get("seed").map_or(Ok(0), |v| num("seed", v))?,
        })
    }
}

/// A flat experiment description. Unset optional fields take
/// algorithm-dependent defaults when the run is planned.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub instance: Option<InstanceSource>,
    /// tdev schedule `alpha / m^beta`; default 0.5 for n-ANT, 0.1 for GBAS.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Constant evaporation for tdlb and base; default 0.25.
    pub rho: Option<f64>,
    pub tau_max: Option<f64>,
    /// tdlb floor constant; default `1 / n^2`.
    pub c_n: Option<f64>,
    /// base floor; default `1 / n^2`.
    pub tau_min: Option<f64>,
    pub epsilon: Option<f64>,
    pub ant_count: Option<usize>,
    pub start: Option<NodeId>,
    pub m_max: Option<u64>,
    pub trials: usize,
    pub cycle_cap: Option<u64>,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        ExperimentConfig {
            algorithm,
            instance: None,
            alpha: None,
            beta: None,
            rho: None,
            tau_max: None,
            c_n: None,
            tau_min: None,
            epsilon: None,
            ant_count: None,
            start: None,
            m_max: None,
            trials: 10,
            cycle_cap: None,
            master_seed: 0,
            output: None,
        }
    }

    pub fn with_instance(mut self, instance: InstanceSource) -> Self {
        self.instance = Some(instance);
        self
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse {
                line: idx + 1,
                message: format!("expected key=value, found `{line}`"),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string()))
            .collect();
        let algorithm = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "algorithm")
            .ok_or_else(|| Error::config("algorithm", "missing"))?
            .1
            .parse()?;
        let mut cfg = ExperimentConfig::new(algorithm);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn p<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
        }
        match key {
            "algorithm" => self.algorithm = value.parse()?,
            "instance" => self.instance = Some(value.parse()?),
            "alpha" => self.alpha = Some(p(key, value)?),
            "beta" => self.beta = Some(p(key, value)?),
            "rho" => self.rho = Some(p(key, value)?),
            "tau_max" => self.tau_max = Some(p(key, value)?),
            "c_n" => self.c_n = Some(p(key, value)?),
            "tau_min" => self.tau_min = Some(p(key, value)?),
            "epsilon" => self.epsilon = Some(p(key, value)?),
            "ant_count" => self.ant_count = Some(p(key, value)?),
            "start" => self.start = Some(p(key, value)?),
            "m_max" => self.m_max = Some(p(key, value)?),
            "trials" => self.trials = p(key, value)?,
            "cycle_cap" => self.cycle_cap = Some(p(key, value)?),
            "master_seed" => self.master_seed = p(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<()> {
        // the algorithm decides which other keys are legal, so it goes first
        for (k, v) in overrides.iter().filter(|(k, _)| k == "algorithm") {
            self.set(k, v)?;
        }
        for (k, v) in overrides.iter().filter(|(k, _)| k != "algorithm") {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Checks that every set key applies to the chosen algorithm.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let a = self.algorithm;
        let misplaced = |set: bool, key: &str, ok: bool| -> Result<()> {
            if set && !ok {
                Err(Error::config(key, format!("not used by {a}")))
            } else {
                Ok(())
            }
        };
        misplaced(self.alpha.is_some(), "alpha", a.is_tdev())?;
        misplaced(self.beta.is_some(), "beta", a.is_tdev())?;
        misplaced(self.rho.is_some(), "rho", !a.is_tdev())?;
        misplaced(self.tau_max.is_some(), "tau_max", !a.is_tdev())?;
        misplaced(self.c_n.is_some(), "c_n", a == Algorithm::NantTdlb)?;
        misplaced(self.tau_min.is_some(), "tau_min", a == Algorithm::NantBase)?;
        misplaced(self.epsilon.is_some(), "epsilon", !a.is_gbas())?;
        misplaced(self.ant_count.is_some(), "ant_count", a.is_gbas())?;
        misplaced(self.start.is_some(), "start", a.is_gbas())?;
        misplaced(self.m_max.is_some(), "m_max", a.is_gbas())?;
        Ok(())
    }

    pub fn alpha_or_default(&self) -> f64 {
        self.alpha.unwrap_or(if self.algorithm.is_gbas() { 0.1 } else { 0.5 })
    }

    pub fn cycle_cap_or_default(&self) -> u64 {
        self.cycle_cap
            .unwrap_or(if self.algorithm.is_tdev() { 10_000_000 } else { 1_000_000 })
    }

    /// Resolved `key=value` pairs in a fixed order, for provenance headers.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let a = self.algorithm;
        let mut out = vec![("algorithm".to_string(), a.to_string())];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(i) = &self.instance {
            push("instance", i.to_string());
        }
        if a.is_tdev() {
            push("alpha", self.alpha_or_default().to_string());
            push("beta", self.beta.unwrap_or(1.0).to_string());
        } else {
            push("rho", self.rho.unwrap_or(0.25).to_string());
            push("tau_max", self.tau_max.unwrap_or(1.0).to_string());
        }
        let opt = |v: Option<f64>| v.map_or("default".to_string(), |x| x.to_string());
        match a {
            Algorithm::NantTdlb => push("c_n", opt(self.c_n)),
            Algorithm::NantBase => push("tau_min", opt(self.tau_min)),
            _ => {}
        }
        if a.is_gbas() {
            push("ant_count", self.ant_count.unwrap_or(2).to_string());
            push("start", self.start.map_or("default".into(), |s| s.to_string()));
            push("m_max", self.m_max.unwrap_or(20).to_string());
        } else {
            push("epsilon", opt(self.epsilon));
        }
        push("trials", self.trials.to_string());
        push("cycle_cap", self.cycle_cap_or_default().to_string());
        push("master_seed", self.master_seed.to_string());
        out
    }

    fn instance(&self) -> Result<SdspInstance> {
        self.instance
            .as_ref()
            .ok_or_else(|| Error::config("instance", "missing"))?
            .load()
    }

    fn nant_config(&self, instance: &SdspInstance) -> Result<NantConfig> {
        let n2 = (instance.nominal_n as f64).powi(2);
        let cfg = match self.algorithm {
            Algorithm::NantTdev => NantConfig::tdev(
                EvaporationSchedule::power_law(self.alpha_or_default(), self.beta.unwrap_or(1.0))
                    .map_err(|e| Error::config("alpha", e.to_string()))?,
            ),
            Algorithm::NantTdlb => NantConfig::tdlb(
                self.rho.unwrap_or(0.25),
                self.tau_max.unwrap_or(1.0),
                self.c_n.unwrap_or(1.0 / n2),
            )
            .map_err(|e| Error::config("c_n", e.to_string()))?,
            Algorithm::NantBase => NantConfig::base(
                self.rho.unwrap_or(0.25),
                self.tau_max.unwrap_or(1.0),
                self.tau_min.unwrap_or(1.0 / n2),
            )
            .map_err(|e| Error::config("tau_min", e.to_string()))?,
            Algorithm::GbasTdev => return Err(Error::config("algorithm", "not an n-ANT variant")),
        };
        Ok(match self.epsilon {
            Some(e) => cfg.with_epsilon(e),
            None => cfg,
        })
    }

    fn gbas_setup(&self, instance: &SdspInstance) -> Result<(GbasProblem, EvaporationSchedule, usize)> {
        let start = match self.start.or(instance.graph.start()) {
            Some(s) => s,
            None => return Err(Error::config("start", "instance has no start node")),
        };
        let problem = gbas_problem(instance, start)?;
        let sched = EvaporationSchedule::power_law(self.alpha_or_default(), self.beta.unwrap_or(1.0))
            .map_err(|e| Error::config("alpha", e.to_string()))?;
        let ants = self.ant_count.unwrap_or(2);
        if ants == 0 {
            return Err(Error::config("ant_count", "must be positive"));
        }
        Ok((problem, sched, ants))
    }
}

/// Splits `--key value` / `--key=value` arguments into pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::config(arg, "expected --key value"))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it
                .next()
                .ok_or_else(|| Error::config(key, "missing value"))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Cycle in which the last ant first saw its optimum (GBAS: in which an
    /// optimal walk was first traversed); the cycle count at the cap otherwise.
    pub total_cycles: u64,
    pub cap_hit: bool,
    /// Per node (n-ANT) or single entry (GBAS).
    pub first_optimal: Vec<Option<u64>>,
    /// Per node, first ε-processed pheromone index (n-ANT only).
    pub first_processed: Vec<Option<u64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub cap_hits: usize,
}

impl Summary {
    pub fn from_records(records: &[TrialRecord]) -> Summary {
        let values: Vec<f64> = records.iter().map(|r| r.total_cycles as f64).collect();
        let mut s = Summary::of(&values);
        s.cap_hits = records.iter().filter(|r| r.cap_hit).count();
        s
    }

    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                median: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                cap_hits: 0,
            };
        }
        let std = if count > 1 { values.std_dev() } else { 0.0 };
        Summary {
            count,
            mean: values.mean(),
            median: Data::new(values.to_vec()).median(),
            std,
            min: values.min(),
            max: values.max(),
            cap_hits: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub instance_label: String,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

fn trial_stream(master_seed: u64, trial: usize) -> RngStream {
    RngStream::new(master_seed).child(trial as u64)
}

/// Runs all trials; nothing is written to disk.
pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let instance = config.instance()?;
    let cap = config.cycle_cap_or_default();
    let records: Vec<TrialRecord> = if config.algorithm.is_gbas() {
        let (problem, sched, ants) = config.gbas_setup(&instance)?;
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let rng = trial_stream(config.master_seed, t);
                let mut state = gbas_init(&problem, ants)?;
                let mut found = None;
                while found.is_none() && state.cycle() <= cap {
                    let r = gbas_cycle(&problem, &mut state, &sched, &rng)?;
                    if r.optimal_traversed {
                        found = Some(r.cycle);
                    }
                }
                Ok(TrialRecord {
                    trial: t,
                    seed: rng.master_seed(),
                    total_cycles: found.unwrap_or(state.cycle() - 1),
                    cap_hit: found.is_none(),
                    first_optimal: vec![found],
                    first_processed: Vec::new(),
                })
            })
            .collect::<Result<_>>()?
    } else {
        let nant = config.nant_config(&instance)?;
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let rng = trial_stream(config.master_seed, t);
                let run = run_until_all_optimal(&instance, nant, &rng, RunOptions::capped(cap))?;
                Ok(TrialRecord {
                    trial: t,
                    seed: rng.master_seed(),
                    total_cycles: run.total_cycles(),
                    cap_hit: run.cap_hit,
                    first_optimal: run.first_optimal,
                    first_processed: run.first_processed,
                })
            })
            .collect::<Result<_>>()?
    };
    Ok(ExperimentResult {
        config: config.clone(),
        instance_label: instance.label.clone(),
        summary: Summary::from_records(&records),
        records,
    })
}

/// Runs the trials and writes the per-trial CSV to `config.output` plus the
/// aggregate summary next to it (`<stem>.summary.csv`).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let result = run_trials(config)?;
    if let Some(path) = &config.output {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        write_trials_csv(&result, &mut f)?;
        f.flush()?;
        let mut f = io::BufWriter::new(fs::File::create(summary_path(path))?);
        write_summary_csv(&result, &mut f)?;
        f.flush()?;
    }
    Ok(result)
}

pub fn summary_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.summary.csv"))
}

/// `#` lines naming the crate version, timestamp and configuration.
pub fn provenance(config: Option<&ExperimentConfig>, extra: &[(&str, String)]) -> Vec<String> {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut lines = vec![format!("# tdaco {VERSION}"), format!("# generated_at={now}")];
    if let Some(c) = config {
        lines.push(format!("# master_seed={}", c.master_seed));
        lines.extend(c.to_pairs().into_iter().map(|(k, v)| format!("# config {k}={v}")));
    }
    lines.extend(extra.iter().map(|(k, v)| format!("# {k}={v}")));
    lines
}

fn write_header(w: &mut impl Write, lines: &[String]) -> Result<()> {
    for l in lines {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(io::Error::other(format!("{other:?}"))),
    }
}

fn list(values: &[Option<u64>]) -> String {
    values
        .iter()
        .map(|v| v.map_or("-".to_string(), |x| x.to_string()))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_trials_csv(result: &ExperimentResult, mut w: impl Write) -> Result<()> {
    write_header(
        &mut w,
        &provenance(Some(&result.config), &[("instance_label", result.instance_label.clone())]),
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "seed", "total_cycles", "cap_hit", "first_optimal", "first_processed"])
        .map_err(csv_err)?;
    for r in &result.records {
        out.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.total_cycles.to_string(),
            r.cap_hit.to_string(),
            list(&r.first_optimal),
            list(&r.first_processed),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv(result: &ExperimentResult, mut w: impl Write) -> Result<()> {
    write_header(&mut w, &provenance(Some(&result.config), &[]))?;
    let s = &result.summary;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["statistic", "value"]).map_err(csv_err)?;
    for (k, v) in [
        ("count", s.count as f64),
        ("mean", s.mean),
        ("median", s.median),
        ("std", s.std),
        ("min", s.min),
        ("max", s.max),
        ("cap_hits", s.cap_hits as f64),
    ] {
        out.write_record([k.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub median_cycles: f64,
    pub mean_cycles: f64,
    pub std: f64,
    pub cap_hits: usize,
}

/// One experiment per chain length on `series(n, M = n + 1)`.
pub fn scaling_sweep(base: &ExperimentConfig, n_values: &[usize], trials: usize) -> Result<Vec<SweepRow>> {
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("n", "values must be strictly ascending"));
    }
    n_values
        .iter()
        .map(|&n| {
            let mut cfg = base.clone();
            cfg.instance = Some(InstanceSource::Series { n, big_m: None });
            cfg.trials = trials;
            cfg.output = None;
            let r = run_trials(&cfg)?;
            Ok(SweepRow {
                n,
                median_cycles: r.summary.median,
                mean_cycles: r.summary.mean,
                std: r.summary.std,
                cap_hits: r.summary.cap_hits,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub m: u64,
    /// Fraction of trials with no optimal walk in cycles `2..=m`.
    pub empirical: f64,
    pub bound: f64,
    /// Standard error `sqrt(p (1 - p) / trials)` of `empirical`.
    pub sigma: f64,
}

/// Empirical probability of missing every optimal walk in cycles `2..=m`,
/// next to its analytic upper bound, for `m = 2..=m_max`.
pub fn gbas_convergence_experiment(config: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    if !config.algorithm.is_gbas() {
        return Err(Error::config("algorithm", "gbas-convergence needs gbas-tdev"));
    }
    config.validate()?;
    let instance = config.instance()?;
    let (problem, sched, ants) = config.gbas_setup(&instance)?;
    let l = problem.max_opt_arcs;
    let alpha = config.alpha_or_default();
    if !(2.0 * alpha * (l as f64) < 1.0) || config.beta.is_some_and(|b| b != 1.0) {
        return Err(Error::config(
            "alpha",
            format!("schedule must be alpha/m with alpha < 1/(2L) = {}", 0.5 / l as f64),
        ));
    }
    let m_max = config.m_max.unwrap_or(20);
    if m_max < 2 {
        return Err(Error::config("m_max", "must be at least 2"));
    }
    let first_hits: Vec<Option<u64>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let rng = trial_stream(config.master_seed, t);
            let mut state = gbas_init(&problem, ants)?;
            for _ in 1..=m_max {
                let r = gbas_cycle(&problem, &mut state, &sched, &rng)?;
                if r.cycle >= 2 && r.optimal_traversed {
                    return Ok(Some(r.cycle));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let trials = config.trials as f64;
    let q = GbasBoundQuery::new(problem.graph.node_count(), l, ants, alpha);
    Ok((2..=m_max)
        .map(|m| {
            let misses = first_hits.iter().filter(|h| h.is_none_or(|c| c > m)).count();
            let p = misses as f64 / trials;
            ConvergenceRow {
                m,
                empirical: p,
                bound: no_opt_walk_prob_bound(&q.at_cycle(m), &sched),
                sigma: (p * (1.0 - p) / trials).sqrt(),
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub cycle: u64,
    pub arc_id: usize,
    pub tau: f64,
}

/// Pheromone of every arc at the start of cycles `1..=cycles + 1` in trial 0.
pub fn pheromone_trace(config: &ExperimentConfig, cycles: u64) -> Result<Vec<TraceRow>> {
    config.validate()?;
    let instance = config.instance()?;
    let rng = trial_stream(config.master_seed, 0);
    let mut rows = Vec::new();
    let mut record = |p: &PheromoneState| {
        rows.extend(p.values().iter().enumerate().map(|(arc_id, &tau)| TraceRow {
            cycle: p.cycle(),
            arc_id,
            tau,
        }))
    };
    if config.algorithm.is_gbas() {
        let (problem, sched, ants) = config.gbas_setup(&instance)?;
        let mut state = gbas_init(&problem, ants)?;
        record(&state.pheromone);
        for _ in 0..cycles {
            gbas_cycle(&problem, &mut state, &sched, &rng)?;
            record(&state.pheromone);
        }
    } else {
        let mut state = nant_init(&instance, config.nant_config(&instance)?)?;
        record(&state.pheromone);
        for _ in 0..cycles {
            nant_cycle(&instance, &mut state, &rng, Exec::Serial)?;
            record(&state.pheromone);
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlotData {
    CyclesVsN(Vec<SweepRow>),
    ProbVsM(Vec<ConvergenceRow>),
    PheromoneTrace(Vec<TraceRow>),
}

impl PlotData {
    pub fn header(&self) -> &'static [&'static str] {
        match self {
            PlotData::CyclesVsN(_) => &["n", "median_cycles", "mean_cycles", "std"],
            PlotData::ProbVsM(_) => &["m", "empirical", "bound"],
            PlotData::PheromoneTrace(_) => &["cycle", "arc_id", "tau"],
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            PlotData::CyclesVsN(r) => r.is_empty(),
            PlotData::ProbVsM(r) => r.is_empty(),
            PlotData::PheromoneTrace(r) => r.is_empty(),
        }
    }
}

/// Writes plot data as CSV after the given provenance lines.
pub fn write_plot_data(data: &PlotData, provenance: &[String], mut w: impl Write) -> Result<()> {
    write_header(&mut w, provenance)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(data.header()).map_err(csv_err)?;
    let rows: Vec<Vec<String>> = match data {
        PlotData::CyclesVsN(rows) => rows
            .iter()
            .map(|r| vec![r.n.to_string(), r.median_cycles.to_string(), r.mean_cycles.to_string(), r.std.to_string()])
            .collect(),
        PlotData::ProbVsM(rows) => rows
            .iter()
            .map(|r| vec![r.m.to_string(), r.empirical.to_string(), r.bound.to_string()])
            .collect(),
        PlotData::PheromoneTrace(rows) => rows
            .iter()
            .map(|r| vec![r.cycle.to_string(), r.arc_id.to_string(), r.tau.to_string()])
            .collect(),
    };
    for r in rows {
        out.write_record(&r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_plot_data(data: &PlotData, provenance: &[String], path: impl AsRef<Path>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::config("output", "nothing to plot"));
    }
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    write_plot_data(data, provenance, &mut f)?;
    f.flush()?;
    Ok(())
}

/// The inequality sweep as a pass/fail table.
pub fn write_bounds_table(rows: &[BoundCheck], mut w: impl Write) -> Result<()> {
    let passed = rows.iter().filter(|r| r.pass).count();
    write_header(
        &mut w,
        &provenance(None, &[("checks", rows.len().to_string()), ("passed", passed.to_string())]),
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["check", "params", "value", "reference", "pass"])
        .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.check.to_string(),
            r.params.clone(),
            r.value.to_string(),
            r.reference.to_string(),
            r.pass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn verify_bounds(w: impl Write) -> Result<Vec<BoundCheck>> {
    let rows = bounds_sweep()?;
    write_bounds_table(&rows, w)?;
    Ok(rows)
}

/// Drops the `generated_at` line so outputs can be compared across runs.
pub fn strip_timestamp(csv_text: &str) -> String {
    csv_text
        .lines()
        .filter(|l| !l.starts_with("# generated_at="))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tdlb_series(n: usize) -> ExperimentConfig {
        ExperimentConfig::new(Algorithm::NantTdlb).with_instance(InstanceSource::Series { n, big_m: None })
    }

    #[test]
    fn parses_config_file() {
        let text = "# demo\nalgorithm = nant-tdlb\ninstance=series:n=8\nrho=0.5 # inline\ntrials=3\nmaster_seed=7\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.algorithm, Algorithm::NantTdlb);
        assert_eq!(c.instance, Some(InstanceSource::Series { n: 8, big_m: None }));
        assert_eq!(c.rho, Some(0.5));
        assert_eq!(c.trials, 3);
        assert_eq!(c.master_seed, 7);
        c.validate().unwrap();
    }

    #[test]
    fn config_errors_name_the_field() {
        let e = ExperimentConfig::parse("algorithm=nant-tdlb\nbogus=1\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "bogus"));
        let e = ExperimentConfig::parse("algorithm=nant-tdlb\ntrials=x\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "trials"));
        let e = ExperimentConfig::parse("algorithm=ant\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "algorithm"));
        let c = ExperimentConfig::parse("algorithm=nant-tdev\nrho=0.2\n").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config { ref field, .. }) if field == "rho"));
        let c = ExperimentConfig::parse("algorithm=nant-tdlb\ntrials=0\n").unwrap();
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::parse("algorithm nant\n").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = ExperimentConfig::parse("algorithm=nant-tdlb\ntrials=3\n").unwrap();
        let args: Vec<String> = ["--trials", "5", "--instance=dag:n=6,seed=3", "--algorithm", "nant-base"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        c.apply_overrides(&parse_overrides(&args).unwrap()).unwrap();
        assert_eq!(c.trials, 5);
        assert_eq!(c.algorithm, Algorithm::NantBase);
        assert!(matches!(c.instance, Some(InstanceSource::Dag { n: 6, seed: 3, .. })));
        assert!(parse_overrides(&["--trials".to_string()]).is_err());
        assert!(parse_overrides(&["trials".to_string()]).is_err());
    }

    #[test]
    fn instance_specs_round_trip() {
        for s in ["series:n=8", "series:n=8,M=20", "dag:n=10,density=0.3,lo=1,hi=10,seed=7"] {
            let src: InstanceSource = s.parse().unwrap();
            assert_eq!(src.to_string(), s);
        }
        assert!(matches!("some/file.sdsp".parse(), Ok(InstanceSource::File(_))));
        assert!("series:M=3".parse::<InstanceSource>().is_err());
        assert!("dag:n=4,weird=1".parse::<InstanceSource>().is_err());
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 10.0]);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 2.5);
        assert!((s.std - (50.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.max), (1.0, 10.0));
        assert_eq!(Summary::of(&[5.0]).std, 0.0);
    }

    #[test]
    fn series_two_tdlb_trials_finish() {
        let mut c = tdlb_series(2);
        c.trials = 50;
        let r = run_trials(&c).unwrap();
        assert_eq!(r.records.len(), 50);
        assert_eq!(r.summary.cap_hits, 0);
        assert!(r.summary.median >= 1.0 && r.summary.max.is_finite());
    }

    #[test]
    fn cap_of_one_flags_every_trial() {
        let mut c = tdlb_series(10);
        c.trials = 4;
        c.cycle_cap = Some(1);
        let r = run_trials(&c).unwrap();
        assert!(r.records.iter().all(|t| t.cap_hit && t.total_cycles == 1));
        let mut g = ExperimentConfig::new(Algorithm::GbasTdev).with_instance(InstanceSource::Series { n: 8, big_m: None });
        g.trials = 4;
        g.cycle_cap = Some(1);
        let r = run_trials(&g).unwrap();
        assert!(r.records.iter().all(|t| t.cap_hit == t.first_optimal[0].is_none()));
    }

    #[test]
    fn identical_seeds_give_identical_csv() {
        let mut c = ExperimentConfig::new(Algorithm::NantTdev).with_instance(InstanceSource::Series { n: 4, big_m: None });
        c.trials = 3;
        c.master_seed = 17;
        let render = || {
            let mut buf = Vec::new();
            write_trials_csv(&run_trials(&c).unwrap(), &mut buf).unwrap();
            strip_timestamp(&String::from_utf8(buf).unwrap())
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn sweep_edge_cases() {
        assert!(scaling_sweep(&tdlb_series(4), &[], 3).unwrap().is_empty());
        assert!(scaling_sweep(&tdlb_series(4), &[8, 4], 3).is_err());
    }

    #[test]
    fn convergence_rejects_large_alpha() {
        let mut c = ExperimentConfig::new(Algorithm::GbasTdev).with_instance(InstanceSource::Series { n: 2, big_m: None });
        c.alpha = Some(0.25);
        c.trials = 10;
        let e = gbas_convergence_experiment(&c).unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "alpha"));
        c.alpha = Some(0.2);
        let rows = gbas_convergence_experiment(&c).unwrap();
        assert_eq!(rows.len(), 19);
        assert!(rows.windows(2).all(|w| w[1].bound <= w[0].bound));
    }

    #[test]
    fn plot_headers() {
        let mut buf = Vec::new();
        write_plot_data(&PlotData::CyclesVsN(vec![]), &[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,median_cycles,mean_cycles,std\n");
        let mut buf = Vec::new();
        write_plot_data(&PlotData::ProbVsM(vec![]), &["# x=1".into()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# x=1\nm,empirical,bound\n");
        let c = tdlb_series(2);
        let rows = pheromone_trace(&c, 3).unwrap();
        assert_eq!(rows.len(), 4 * 5);
        let mut buf = Vec::new();
        write_plot_data(&PlotData::PheromoneTrace(rows), &[], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("cycle,arc_id,tau\n1,0,"));
    }

    #[test]
    fn provenance_lists_config() {
        let mut c = tdlb_series(3);
        c.master_seed = 99;
        let lines = provenance(Some(&c), &[]);
        assert!(lines.iter().all(|l| l.starts_with('#')));
        assert!(lines.contains(&"# master_seed=99".to_string()));
        assert!(lines.contains(&"# config instance=series:n=3".to_string()));
        assert!(lines[0].contains(VERSION));
    }
}

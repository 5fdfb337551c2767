//! Seeded experiment runner: per trial, draw a matching on the current
//! graph, average matched pairs, then advance the graph one step, until the
//! configuration is balanced or the step cap is hit.

mod checks;
mod output;

pub use checks::{fairness_report, mixing_report, FairnessRow, MixingRow};
pub use output::{emit, read_csv, write_csv, write_json, CsvRow, OutputFormat};

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::balance::{InitialLoad, TokenConfig};
use crate::error::{Error, Result};
use crate::graph::{EdgeMarkovParams, Graph, InitialGraph};
use crate::ledger::{audit_step, TokenLedger};
use crate::matching::{fairness_floor, Matching, MatcherKind};
use crate::rng::stream;
use crate::stats::{mean, median, quantile_sorted};
use crate::theory::{default_theta, theorem_bound, BalanceBound, BoundInputs};

/// Cap used when the discrepancy is below 2 and no bound exists.
pub const FALLBACK_CAP: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n: usize,
    pub params: EdgeMarkovParams,
    pub matcher: MatcherKind,
    pub init_graph: InitialGraph,
    pub init_load: InitialLoad,
    pub trials: u64,
    pub seed: u64,
    /// Explicit step cap; `None` means ten times the balancing-time bound.
    pub cap: Option<u64>,
    pub ledger: bool,
    pub eps: f64,
    pub theta: Option<f64>,
    /// Record wall-clock time per trial (makes output non-reproducible).
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(n: usize, params: EdgeMarkovParams, matcher: MatcherKind, init_load: InitialLoad) -> Self {
        Self {
            n,
            params,
            matcher,
            init_graph: InitialGraph::Stationary(params),
            init_load,
            trials: 1,
            seed: 0,
            cap: None,
            ledger: false,
            eps: 0.25,
            theta: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyVertexSet);
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trial count must be at least 1".into()));
        }
        if self.cap == Some(0) {
            return Err(Error::InvalidArgument("step cap must be at least 1".into()));
        }
        EdgeMarkovParams::new(self.params.p(), self.params.q())?;
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or_else(|| default_theta(self.n, self.params.p(), self.params.q()))
    }

    /// Balancing-time bound for initial discrepancy `delta`, if defined.
    pub fn bound(&self, delta: u64) -> Option<BalanceBound> {
        theorem_bound(&BoundInputs {
            n: self.n,
            delta,
            eps: self.eps,
            p: self.params.p(),
            q: self.params.q(),
            theta: self.theta(),
            fairness: fairness_floor(self.matcher, self.n),
        })
        .ok()
    }

    pub fn cap_for(&self, delta: u64) -> u64 {
        self.cap.unwrap_or_else(|| match self.bound(delta) {
            Some(b) => b.steps.saturating_mul(10),
            None => FALLBACK_CAP,
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    pub delta0: u64,
    /// First step at which the configuration is balanced; `None` if censored.
    pub t_bal: Option<u64>,
    pub censored: bool,
    pub cap: u64,
    pub final_min: u64,
    pub final_max: u64,
    pub mean: f64,
    pub violations: u64,
    pub wall_ms: u64,
}

/// What a step observer sees: the graph and configuration at time `t`, the
/// matching drawn from that graph, and the configuration after averaging.
pub struct StepView<'a> {
    pub t: u64,
    pub graph: &'a Graph,
    pub matching: &'a Matching,
    pub before: &'a TokenConfig,
    pub after: &'a TokenConfig,
}

pub fn run_trial(cfg: &ExperimentConfig, index: u64) -> Result<TrialResult> {
    run_trial_observed(cfg, index, |_| {}, None)
}

/// [`run_trial`] with a per-step callback and an optional ledger trace sink.
pub fn run_trial_observed(
    cfg: &ExperimentConfig,
    index: u64,
    mut observe: impl FnMut(&StepView<'_>),
    mut trace: Option<&mut dyn Write>,
) -> Result<TrialResult> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = stream(cfg.seed, index);
    let mut graph = cfg.init_graph.build(cfg.n, &mut rng)?;
    let mut config = cfg.init_load.build(cfg.n, &mut rng)?;
    let total = config.total();
    let delta0 = config.discrepancy();
    let cap = cfg.cap_for(delta0);

    let mut ledger = cfg.ledger.then(|| TokenLedger::new(&config));
    if let Some(l) = &ledger {
        l.check(&config).map_err(|msg| Error::InvariantViolation { step: 0, msg })?;
        if let Some(out) = trace.as_deref_mut() {
            l.write_trace(0, out).map_err(|e| Error::io("trace", e))?;
        }
    }

    let violation = |step: u64, msg: String| Error::InvariantViolation { step, msg };
    let mut t = 0u64;
    let t_bal = loop {
        if config.is_balanced() {
            break Some(t);
        }
        if t >= cap {
            break None;
        }
        let matching = cfg.matcher.draw(&graph, &mut rng);
        matching.validate(&graph).map_err(|m| violation(t, m))?;

        let before = config.clone();
        let choices = config.apply_in_place(&matching, &mut rng);
        let sum: u64 = config.loads().iter().sum();
        if sum != total {
            return Err(violation(t, format!("token total changed from {total} to {sum}")));
        }
        if config.min_load() < before.min_load() || config.max_load() > before.max_load() {
            return Err(violation(
                t,
                format!(
                    "extremes moved outward: [{}, {}] -> [{}, {}]",
                    before.min_load(),
                    before.max_load(),
                    config.min_load(),
                    config.max_load()
                ),
            ));
        }
        if let Some(l) = ledger.as_mut() {
            let prev = l.clone();
            l.advance(&before, &matching, &choices)?;
            l.check(&config).map_err(|m| violation(t, m))?;
            let broken = audit_step(&prev, l, &before, &matching);
            if let Some(first) = broken.first() {
                return Err(violation(t, format!("{} ledger violations, first: {first}", broken.len())));
            }
            if let Some(out) = trace.as_deref_mut() {
                l.write_trace(t + 1, out).map_err(|e| Error::io("trace", e))?;
            }
        }
        observe(&StepView { t, graph: &graph, matching: &matching, before: &before, after: &config });

        graph.evolve_in_place(&cfg.params, &mut rng);
        t += 1;
    };

    Ok(TrialResult {
        trial: index,
        seed: cfg.seed,
        delta0,
        t_bal,
        censored: t_bal.is_none(),
        cap,
        final_min: config.min_load(),
        final_max: config.max_load(),
        mean: config.mean(),
        violations: 0,
        wall_ms: if cfg.timing { started.elapsed().as_millis() as u64 } else { 0 },
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TbalStats {
    pub trials: usize,
    pub censored: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub q10: Option<f64>,
    pub q90: Option<f64>,
    pub min: Option<u64>,
    pub max: Option<u64>,
}

impl TbalStats {
    /// Statistics over uncensored trials only.
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let finite: Vec<u64> = trials.iter().filter_map(|t| t.t_bal).collect();
        let mut sorted: Vec<f64> = finite.iter().map(|&x| x as f64).collect();
        sorted.sort_by(f64::total_cmp);
        Self {
            trials: trials.len(),
            censored: trials.iter().filter(|t| t.censored).count(),
            median: median(&sorted),
            mean: mean(&sorted),
            q10: quantile_sorted(&sorted, 0.1),
            q90: quantile_sorted(&sorted, 0.9),
            min: finite.iter().copied().min(),
            max: finite.iter().copied().max(),
        }
    }
}

/// Flat description of a configuration for reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConfigRecord {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub matcher: MatcherKind,
    pub init_graph: String,
    pub init_load: String,
    pub trials: u64,
    pub seed: u64,
    pub cap: Option<u64>,
    pub ledger: bool,
    pub eps: f64,
    pub theta: f64,
}

impl From<&ExperimentConfig> for ConfigRecord {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            n: c.n,
            p: c.params.p(),
            q: c.params.q(),
            matcher: c.matcher,
            init_graph: c.init_graph.to_string(),
            init_load: c.init_load.to_string(),
            trials: c.trials,
            seed: c.seed,
            cap: c.cap,
            ledger: c.ledger,
            eps: c.eps,
            theta: c.theta(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Summary {
    pub config: ConfigRecord,
    pub trials: Vec<TrialResult>,
    pub stats: TbalStats,
    /// Bound for the largest initial discrepancy seen, when `Δ >= 2`.
    pub bound: Option<BalanceBound>,
}

/// Runs `cfg.trials` independent trials (in parallel on the current rayon
/// pool) and aggregates them. Results are ordered by trial index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary> {
    cfg.validate()?;
    let trials = (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, i)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(cfg, trials))
}

pub fn summarize(cfg: &ExperimentConfig, trials: Vec<TrialResult>) -> Summary {
    let delta = trials.iter().map(|t| t.delta0).max().unwrap_or(0);
    Summary { config: cfg.into(), stats: TbalStats::from_trials(&trials), bound: cfg.bound(delta), trials }
}

/// Cross product of experiment axes; empty axes fall back to the base config.
#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub ns: Vec<usize>,
    /// Point-mass discrepancies; when non-empty they replace the base initial load.
    pub deltas: Vec<u64>,
    pub matchers: Vec<MatcherKind>,
    pub pqs: Vec<EdgeMarkovParams>,
}

impl Sweep {
    pub fn configs(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        fn axis<T: Clone>(v: &[T], d: T) -> Vec<T> {
            if v.is_empty() {
                vec![d]
            } else {
                v.to_vec()
            }
        }
        let mut out = Vec::new();
        for &n in &axis(&self.ns, base.n) {
            for &params in &axis(&self.pqs, base.params) {
                for &matcher in &axis(&self.matchers, base.matcher) {
                    let loads: Vec<InitialLoad> = if self.deltas.is_empty() {
                        vec![base.init_load.clone()]
                    } else {
                        self.deltas.iter().map(|&d| InitialLoad::PointMass(d)).collect()
                    };
                    for init_load in loads {
                        let mut c = base.clone();
                        c.n = n;
                        c.matcher = matcher;
                        c.init_load = init_load;
                        if let InitialGraph::Stationary(_) = c.init_graph {
                            c.init_graph = InitialGraph::Stationary(params);
                        }
                        c.params = params;
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

pub fn run_sweep(sweep: &Sweep, base: &ExperimentConfig) -> Result<Vec<Summary>> {
    sweep.configs(base).iter().map(run_experiment).collect()
}

use rayon::prelude::*;

use crate::corpus::fairness_corpus;
use crate::error::Result;
use crate::graph::{EdgeMarkovParams, Graph, InitialGraph};
use crate::matching::{binomial_estimate, estimate_all_edges, fairness_floor, MatcherKind};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FairnessRow {
    pub graph: String,
    pub matcher: MatcherKind,
    pub n: usize,
    pub u: usize,
    pub v: usize,
    pub max_degree: usize,
    pub estimate: f64,
    pub std_err: f64,
    /// `F / max{deg u, deg v}`.
    pub floor: f64,
    /// `estimate - 3 std_err >= floor`.
    pub floor_ok: bool,
    /// Exact inclusion probability `(1/n)(1/deg u + 1/deg v)`, simple matcher only.
    pub exact: Option<f64>,
    /// Estimate within three standard errors of `exact`.
    pub exact_ok: Option<bool>,
}

/// Inclusion estimates for every edge of every corpus graph under every
/// matcher in `kinds`, `samples` matchings per (graph, matcher) pair.
pub fn fairness_report(kinds: &[MatcherKind], samples: u64, seed: u64) -> Vec<FairnessRow> {
    let corpus = fairness_corpus();
    let jobs: Vec<_> = corpus.iter().flat_map(|g| kinds.iter().map(move |&k| (g, k))).collect();
    jobs.par_iter()
        .enumerate()
        .flat_map_iter(|(job, &(named, kind))| {
            let g = &named.graph;
            let mut rng = stream(seed, job as u64);
            let n = g.n();
            estimate_all_edges(kind, g, samples, &mut rng).into_iter().map(move |((u, v), hits)| {
                let (estimate, std_err) = binomial_estimate(hits, samples);
                let (du, dv) = (g.deg(u), g.deg(v));
                let floor = fairness_floor(kind, n) / du.max(dv) as f64;
                let exact = (kind == MatcherKind::Simple)
                    .then(|| (1.0 / du as f64 + 1.0 / dv as f64) / n as f64);
                FairnessRow {
                    graph: named.name.clone(),
                    matcher: kind,
                    n,
                    u,
                    v,
                    max_degree: du.max(dv),
                    estimate,
                    std_err,
                    floor,
                    floor_ok: estimate - 3.0 * std_err >= floor,
                    exact,
                    exact_ok: exact.map(|e| (estimate - e).abs() <= 3.0 * std_err),
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MixingRow {
    pub start: String,
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub steps: u64,
    pub density: f64,
    pub stationary: f64,
    pub sigma: f64,
    /// `|density - stationary| <= eps + 3 sigma`.
    pub ok: bool,
}

/// Evolves an empty and a complete graph for `mixing_steps(eps)` steps and
/// compares the resulting edge density with `p / (p + q)`.
pub fn mixing_report(n: usize, params: EdgeMarkovParams, eps: f64, seed: u64) -> Result<Vec<MixingRow>> {
    let steps = params.mixing_steps(eps)?;
    let target = params.stationary_edge_probability();
    let pairs = (n * (n - 1) / 2).max(1) as f64;
    let sigma = (target * (1.0 - target) / pairs).sqrt();
    let mut rows = Vec::new();
    for (i, start) in [InitialGraph::Empty, InitialGraph::Complete].iter().enumerate() {
        let mut rng = stream(seed, i as u64);
        let mut g: Graph = start.build(n, &mut rng)?;
        for _ in 0..steps {
            g.evolve_in_place(&params, &mut rng);
        }
        let density = g.density();
        rows.push(MixingRow {
            start: start.to_string(),
            p: params.p(),
            q: params.q(),
            n,
            steps,
            density,
            stationary: target,
            sigma,
            ok: (density - target).abs() <= eps + 3.0 * sigma,
        });
    }
    Ok(rows)
}

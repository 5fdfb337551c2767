//! Random matching generators.
//!
//! Four distributions over matchings of a graph are provided:
//!
//! * [`MatcherKind::Simple`]: pick a vertex uniformly, then one of its
//!   neighbors uniformly.
//! * [`MatcherKind::UniformEdge`]: pick one edge uniformly.
//! * [`MatcherKind::Lr`]: the local randomized generator. Every ordered
//!   neighbor pair `(v, u)` proposes with probability `1 / (8 max{deg v, deg u})`;
//!   vertices with several outgoing proposals drop them all, then vertices
//!   with several incoming proposals drop those, and a surviving proposal
//!   is kept when its tail has no incoming proposal or it is reciprocated.
//! * [`MatcherKind::DistributedSync`]: each vertex becomes an initiator with
//!   probability 1/2, initiators propose to a uniform neighbor with
//!   Metropolis–Hastings acceptance `min{deg u, deg v} / deg u`, and a
//!   proposal `(v, u)` is kept when `u` is not an initiator and received no
//!   other proposal.
//!
//! Each kind guarantees every edge `{u, v}` is matched with probability at
//! least `F / max{deg u, deg v}`; [`fairness_floor`] returns that `F`.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rng::{below, unit};

/// Pairwise vertex-disjoint edges, stored as `(u, v)` with `u < v` in
/// ascending order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Matching {
    edges: Vec<(Vertex, Vertex)>,
}

impl Matching {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a matching from arbitrary edges, normalising orientation and order.
    /// Disjointness is not checked here; see [`Matching::validate`].
    pub fn from_edges(edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Self {
        let mut edges: Vec<_> = edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
        edges.sort_unstable();
        Self { edges }
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, u: Vertex, v: Vertex) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Every edge is in `g` and no two edges share an endpoint.
    pub fn validate(&self, g: &Graph) -> Result<(), String> {
        let mut used = vec![false; g.n()];
        for &(u, v) in &self.edges {
            if !g.has_edge(u, v) {
                return Err(format!("matched pair {{{u}, {v}}} is not an edge"));
            }
            for x in [u, v] {
                if std::mem::replace(&mut used[x], true) {
                    return Err(format!("vertex {x} is matched twice"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum MatcherKind {
    #[serde(rename = "simple")]
    Simple,
    #[serde(rename = "uniform-edge")]
    UniformEdge,
    #[serde(rename = "lr")]
    Lr,
    #[serde(rename = "ds")]
    DistributedSync,
}

impl MatcherKind {
    pub const ALL: [MatcherKind; 4] =
        [MatcherKind::Simple, MatcherKind::UniformEdge, MatcherKind::Lr, MatcherKind::DistributedSync];

    pub fn draw<R: RngCore + ?Sized>(self, g: &Graph, rng: &mut R) -> Matching {
        match self {
            MatcherKind::Simple => simple_matching(g, rng),
            MatcherKind::UniformEdge => uniform_edge_matching(g, rng),
            MatcherKind::Lr => lr_matching(g, rng),
            MatcherKind::DistributedSync => ds_matching(g, rng),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatcherKind::Simple => "simple",
            MatcherKind::UniformEdge => "uniform-edge",
            MatcherKind::Lr => "lr",
            MatcherKind::DistributedSync => "ds",
        }
    }
}

impl fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatcherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MatcherKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown matcher `{s}` (simple, uniform-edge, lr, ds)")))
    }
}

/// Fairness constant `F` of each generator on `n` vertices.
pub fn fairness_floor(kind: MatcherKind, n: usize) -> f64 {
    let n = n as f64;
    match kind {
        MatcherKind::Simple => 1.0 / n,
        MatcherKind::UniformEdge => 1.0 / (n * n),
        MatcherKind::Lr => 1.0 / 8.0,
        MatcherKind::DistributedSync => 1.0 / 4.0,
    }
}

pub fn simple_matching<R: RngCore + ?Sized>(g: &Graph, rng: &mut R) -> Matching {
    let v = below(rng, g.n());
    let d = g.deg(v);
    if d == 0 {
        return Matching::empty();
    }
    let u = g.nth_neighbor(v, below(rng, d)).expect("degree counts neighbors");
    Matching::from_edges([(v, u)])
}

pub fn uniform_edge_matching<R: RngCore + ?Sized>(g: &Graph, rng: &mut R) -> Matching {
    let m = g.edge_count();
    if m == 0 {
        return Matching::empty();
    }
    // uniform over the 2|E| (vertex, incident edge) slots, i.e. uniform over edges
    let mut k = below(rng, 2 * m);
    for v in 0..g.n() {
        let d = g.deg(v);
        if k < d {
            let u = g.nth_neighbor(v, k).expect("k < deg");
            return Matching::from_edges([(v, u)]);
        }
        k -= d;
    }
    unreachable!("degree sum equals twice the edge count")
}

const NONE: usize = usize::MAX;

pub fn lr_matching<R: RngCore + ?Sized>(g: &Graph, rng: &mut R) -> Matching {
    let n = g.n();
    // proposals in canonical (v, u) order, one coin per ordered neighbor pair
    let mut proposals: Vec<(Vertex, Vertex)> = Vec::new();
    for v in 0..n {
        let dv = g.deg(v);
        for u in g.neighbors(v) {
            let prob = 1.0 / (8.0 * dv.max(g.deg(u)) as f64);
            if unit(rng) < prob {
                proposals.push((v, u));
            }
        }
    }
    if proposals.is_empty() {
        return Matching::empty();
    }

    let mut out_deg = vec![0u32; n];
    for &(v, _) in &proposals {
        out_deg[v] += 1;
    }
    proposals.retain(|&(v, _)| out_deg[v] <= 1);

    let mut in_deg = vec![0u32; n];
    for &(_, u) in &proposals {
        in_deg[u] += 1;
    }
    proposals.retain(|&(_, u)| in_deg[u] <= 1);

    // after both passes every vertex has at most one outgoing and one incoming proposal
    let mut in_deg = vec![0u32; n];
    let mut target = vec![NONE; n];
    for &(v, u) in &proposals {
        in_deg[u] += 1;
        target[v] = u;
    }
    let kept = proposals.iter().filter_map(|&(v, u)| {
        let mutual = target[u] == v;
        (in_deg[v] == 0 || mutual).then_some((v, u))
    });
    let mut m = Matching::from_edges(kept);
    m.edges.dedup();
    m
}

pub fn ds_matching<R: RngCore + ?Sized>(g: &Graph, rng: &mut R) -> Matching {
    let n = g.n();
    let initiator: Vec<bool> = (0..n).map(|_| rng.next_u32() & 1 == 1).collect();
    let mut proposal = vec![NONE; n];
    let mut received = vec![0u32; n];
    for v in 0..n {
        let dv = g.deg(v);
        if !initiator[v] || dv == 0 {
            continue;
        }
        let u = g.nth_neighbor(v, below(rng, dv)).expect("k < deg");
        let du = g.deg(u);
        // accept with probability min{deg u, deg v} / deg u
        let accepted = du <= dv || unit(rng) < dv as f64 / du as f64;
        if accepted {
            proposal[v] = u;
            received[u] += 1;
        }
    }
    Matching::from_edges((0..n).filter_map(|v| {
        let u = proposal[v];
        (u != NONE && !initiator[u] && received[u] == 1).then_some((v, u))
    }))
}

/// Monte-Carlo inclusion frequency of `edge` and its binomial standard error.
pub fn estimate_edge_inclusion<R: RngCore + ?Sized>(
    kind: MatcherKind,
    g: &Graph,
    edge: (Vertex, Vertex),
    samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (u, v) = edge;
    if !g.has_edge(u, v) {
        return Err(Error::MissingEdge(u, v));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let hits = (0..samples).filter(|_| kind.draw(g, rng).contains(u, v)).count() as u64;
    Ok(binomial_estimate(hits, samples))
}

/// Inclusion frequencies of every edge of `g` (in [`Graph::edges`] order)
/// from one shared batch of `samples` matchings.
pub fn estimate_all_edges<R: RngCore + ?Sized>(
    kind: MatcherKind,
    g: &Graph,
    samples: u64,
    rng: &mut R,
) -> Vec<((Vertex, Vertex), u64)> {
    let edges: Vec<_> = g.edges().collect();
    let mut hits = vec![0u64; edges.len()];
    for _ in 0..samples {
        for &e in kind.draw(g, rng).edges() {
            let i = edges.binary_search(&e).expect("matched pairs are edges");
            hits[i] += 1;
        }
    }
    edges.into_iter().zip(hits).collect()
}

/// Frequency and standard error `sqrt(f(1-f)/samples)`.
pub fn binomial_estimate(hits: u64, samples: u64) -> (f64, f64) {
    let f = hits as f64 / samples as f64;
    (f, (f * (1.0 - f) / samples as f64).sqrt())
}

//! Simple undirected graphs and their edge-Markovian evolution.
//!
//! Adjacency is a symmetric bit-matrix, one row of `u64` words per vertex.
//! [`Graph::evolve`] visits every unordered pair once per step, packing 64
//! pairs per random word.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{bernoulli_word, threshold};

pub type Vertex = usize;

/// Birth probability `p` and death probability `q` of the per-pair chain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EdgeMarkovParams {
    p: f64,
    q: f64,
}

impl EdgeMarkovParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) || !(0.0..1.0).contains(&q) {
            return Err(Error::InvalidParams { p, q });
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Row-stochastic transition matrix over the states (absent, present).
    pub fn transition_matrix(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p, self.p], [self.q, 1.0 - self.q]]
    }

    /// Limit probability that a pair is an edge, `p / (p + q)`.
    pub fn stationary_edge_probability(&self) -> f64 {
        self.p / (self.p + self.q)
    }

    /// Number of steps after which every starting distribution of a single
    /// pair is within total-variation distance `eps` of stationarity.
    ///
    /// This is the smallest integer `t >= ln(eps) / ln|1 - p - q|`. When
    /// `p + q = 1` the chain forgets its start after exactly one step, so
    /// the answer is 1 (at `t = 0` the distance is still that of the start).
    pub fn mixing_steps(&self, eps: f64) -> Result<u64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mixing tolerance must lie in (0, 1), got {eps}"
            )));
        }
        let contraction = (1.0 - self.p - self.q).abs();
        if contraction < 1e-15 {
            return Ok(1);
        }
        let t = (eps.ln() / contraction.ln()).ceil();
        Ok(t.max(1.0) as u64)
    }
}

/// How the graph at time zero is built.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGraph {
    Empty,
    Complete,
    /// Every pair present independently with the stationary probability.
    Stationary(EdgeMarkovParams),
    EdgeList(Vec<(Vertex, Vertex)>),
}

impl InitialGraph {
    pub fn build<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Graph> {
        match self {
            InitialGraph::Empty => Graph::empty(n),
            InitialGraph::Complete => Graph::complete(n),
            InitialGraph::Stationary(params) => {
                Graph::random(n, params.stationary_edge_probability(), rng)
            }
            InitialGraph::EdgeList(edges) => Graph::from_edges(n, edges),
        }
    }

    /// Parses `empty`, `complete`, `stationary` or `file:PATH`; the
    /// stationary variant takes its density from `params`.
    pub fn parse(s: &str, params: EdgeMarkovParams) -> Result<Self> {
        match s {
            "empty" => Ok(InitialGraph::Empty),
            "complete" => Ok(InitialGraph::Complete),
            "stationary" => Ok(InitialGraph::Stationary(params)),
            _ => match s.strip_prefix("file:") {
                Some(path) => Ok(InitialGraph::EdgeList(read_edge_list(path)?)),
                None => Err(Error::InvalidArgument(format!(
                    "unknown initial graph `{s}` (expected empty, complete, stationary or file:PATH)"
                ))),
            },
        }
    }
}

impl fmt::Display for InitialGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialGraph::Empty => f.write_str("empty"),
            InitialGraph::Complete => f.write_str("complete"),
            InitialGraph::Stationary(_) => f.write_str("stationary"),
            InitialGraph::EdgeList(e) => write!(f, "edge-list({} edges)", e.len()),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    degrees: Vec<u32>,
    edges: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyVertexSet);
        }
        let words = n.div_ceil(64);
        Ok(Self {
            n,
            words,
            rows: vec![0; n * words],
            degrees: vec![0; n],
            edges: 0,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    g.set_bit(u, v);
                }
            }
            g.degrees[u] = (n - 1) as u32;
        }
        g.edges = n * (n - 1) / 2;
        Ok(g)
    }

    /// Erdős–Rényi graph: each pair present independently with probability `density`.
    pub fn random<R: RngCore + ?Sized>(n: usize, density: f64, rng: &mut R) -> Result<Self> {
        let mut g = Self::empty(n)?;
        let t = threshold(density);
        for u in 0..n {
            for w in (u + 1) / 64..g.words {
                let valid = g.upper_mask(u, w);
                if valid == 0 {
                    continue;
                }
                let add = bernoulli_word(rng, t) & valid;
                g.apply_flips(u, w, add);
            }
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if g.has_edge(u, v) {
                return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
            }
            g.insert(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Fraction of the `n(n-1)/2` pairs that are edges (0 for `n = 1`).
    pub fn density(&self) -> f64 {
        let pairs = self.n * (self.n - 1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edges as f64 / pairs as f64
        }
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n && v < self.n && self.bit(u, v)
    }

    pub fn degree(&self, v: Vertex) -> Result<usize> {
        if v >= self.n {
            return Err(Error::VertexOutOfRange { vertex: v, n: self.n });
        }
        Ok(self.deg(v))
    }

    /// Unchecked degree lookup for hot loops.
    #[inline]
    pub fn deg(&self, v: Vertex) -> usize {
        self.degrees[v] as usize
    }

    pub fn neighbors(&self, v: Vertex) -> Neighbors<'_> {
        let row = &self.rows[v * self.words..(v + 1) * self.words];
        Neighbors { row, word: 0, current: row.first().copied().unwrap_or(0) }
    }

    /// The `k`-th neighbor of `v` in ascending order.
    pub fn nth_neighbor(&self, v: Vertex, mut k: usize) -> Option<Vertex> {
        let row = &self.rows[v * self.words..(v + 1) * self.words];
        for (w, &word) in row.iter().enumerate() {
            let c = word.count_ones() as usize;
            if k < c {
                let mut bits = word;
                for _ in 0..k {
                    bits &= bits - 1;
                }
                return Some(w * 64 + bits.trailing_zeros() as usize);
            }
            k -= c;
        }
        None
    }

    /// Edges as `(u, v)` with `u < v`, in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Checks symmetry, absence of self-loops, and the cached degree and edge counts.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let mut degree_sum = 0usize;
        for u in 0..self.n {
            if self.bit(u, u) {
                return Err(format!("self-loop at {u}"));
            }
            let row = &self.rows[u * self.words..(u + 1) * self.words];
            let tail = self.n % 64;
            if tail != 0 && row[self.words - 1] >> tail != 0 {
                return Err(format!("row {u} has bits beyond n"));
            }
            let mut d = 0;
            for v in self.neighbors(u) {
                if !self.bit(v, u) {
                    return Err(format!("asymmetric pair ({u}, {v})"));
                }
                d += 1;
            }
            if d != self.deg(u) {
                return Err(format!("cached degree {} of {u} differs from {d}", self.deg(u)));
            }
            degree_sum += d;
        }
        if degree_sum != 2 * self.edges {
            return Err(format!("edge count {} but degree sum {degree_sum}", self.edges));
        }
        Ok(())
    }

    /// One step of the edge-Markov chain: every absent pair appears with
    /// probability `p` and every present edge disappears with probability
    /// `q`, independently.
    pub fn evolve<R: RngCore + ?Sized>(&self, params: &EdgeMarkovParams, rng: &mut R) -> Graph {
        let mut next = self.clone();
        next.evolve_in_place(params, rng);
        next
    }

    pub fn evolve_in_place<R: RngCore + ?Sized>(&mut self, params: &EdgeMarkovParams, rng: &mut R) {
        let birth = threshold(params.p);
        let death = threshold(params.q);
        for u in 0..self.n {
            for w in (u + 1) / 64..self.words {
                let valid = self.upper_mask(u, w);
                if valid == 0 {
                    continue;
                }
                let present = self.rows[u * self.words + w] & valid;
                let absent = !present & valid;
                let mut flips = 0;
                if absent != 0 {
                    flips |= bernoulli_word(rng, birth) & absent;
                }
                if present != 0 {
                    flips |= bernoulli_word(rng, death) & present;
                }
                if flips != 0 {
                    self.apply_flips(u, w, flips);
                }
            }
        }
    }

    /// Bits of word `w` in row `u` that address columns `v` with `u < v < n`.
    #[inline]
    fn upper_mask(&self, u: Vertex, w: usize) -> u64 {
        let lo = w * 64;
        let hi = (lo + 64).min(self.n);
        let first = (u + 1).max(lo);
        if first >= hi {
            return 0;
        }
        let width = hi - first;
        let ones = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        ones << (first - lo)
    }

    /// Toggles pairs `(u, v)` for every set bit of `flips` in word `w` of
    /// row `u` (all such `v` exceed `u`).
    fn apply_flips(&mut self, u: Vertex, w: usize, flips: u64) {
        let idx = u * self.words + w;
        let added = (flips & !self.rows[idx]).count_ones() as usize;
        let removed = (flips & self.rows[idx]).count_ones() as usize;
        self.rows[idx] ^= flips;
        let mut bits = flips;
        while bits != 0 {
            let v = w * 64 + bits.trailing_zeros() as usize;
            bits &= bits - 1;
            self.rows[v * self.words + u / 64] ^= 1u64 << (u % 64);
            if self.bit(u, v) {
                self.degrees[v] += 1;
            } else {
                self.degrees[v] -= 1;
            }
        }
        self.degrees[u] = self.degrees[u] + added as u32 - removed as u32;
        self.edges = self.edges + added - removed;
    }

    fn insert(&mut self, u: Vertex, v: Vertex) {
        self.set_bit(u, v);
        self.set_bit(v, u);
        self.degrees[u] += 1;
        self.degrees[v] += 1;
        self.edges += 1;
    }

    #[inline]
    fn bit(&self, u: Vertex, v: Vertex) -> bool {
        (self.rows[u * self.words + v / 64] >> (v % 64)) & 1 == 1
    }

    #[inline]
    fn set_bit(&mut self, u: Vertex, v: Vertex) {
        self.rows[u * self.words + v / 64] |= 1u64 << (v % 64);
    }
}

pub struct Neighbors<'a> {
    row: &'a [u64],
    word: usize,
    current: u64,
}

impl Iterator for Neighbors<'_> {
    type Item = Vertex;

    fn next(&mut self) -> Option<Vertex> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
            if self.word >= self.row.len() {
                return None;
            }
            self.current = self.row[self.word];
        }
    }
}

/// Parses an edge list: one `u v` pair per line, whitespace separated,
/// blank lines and `#` comments ignored.
pub fn parse_edge_list(text: &str, origin: &str) -> Result<Vec<(Vertex, Vertex)>> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { path: origin.to_string(), line: i + 1, msg };
        let mut fields = line.split_whitespace();
        let mut next = || -> Result<Vertex> {
            let tok = fields.next().ok_or_else(|| parse_err("expected two vertices".into()))?;
            Vertex::from_str(tok).map_err(|e| parse_err(format!("bad vertex `{tok}`: {e}")))
        };
        let u = next()?;
        let v = next()?;
        if fields.next().is_some() {
            return Err(parse_err("trailing fields after edge".into()));
        }
        edges.push((u, v));
    }
    Ok(edges)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<(Vertex, Vertex)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn constructors() {
        assert_eq!(Graph::complete(3).unwrap().edge_count(), 3);
        assert_eq!(Graph::empty(4).unwrap().edge_count(), 0);
        assert!(matches!(Graph::from_edges(2, &[(0, 0)]), Err(Error::SelfLoop(0))));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 2)]),
            Err(Error::VertexOutOfRange { vertex: 2, n: 2 })
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(Graph::empty(0), Err(Error::EmptyVertexSet)));
    }

    #[test]
    fn degrees() {
        let k5 = Graph::complete(5).unwrap();
        assert!((0..5).all(|v| k5.degree(v).unwrap() == 4));
        let e = Graph::empty(5).unwrap();
        assert!((0..5).all(|v| e.degree(v).unwrap() == 0));
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.degree(1).unwrap(), 2);
        assert!(path.degree(3).is_err());
    }

    #[test]
    fn neighbors_cross_word_boundaries() {
        let g = Graph::from_edges(200, &[(0, 63), (0, 64), (0, 199), (130, 5)]).unwrap();
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![63, 64, 199]);
        assert_eq!(g.nth_neighbor(0, 2), Some(199));
        assert_eq!(g.nth_neighbor(0, 3), None);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 63), (0, 64), (0, 199), (5, 130)]);
        g.check_well_formed().unwrap();
    }

    #[test]
    fn deterministic_extremes() {
        let params = EdgeMarkovParams::new(1.0, 0.0).unwrap();
        let mut rng = stream(0, 0);
        let g = Graph::from_edges(70, &[(3, 4)]).unwrap().evolve(&params, &mut rng);
        assert_eq!(g, Graph::complete(70).unwrap());
        assert_eq!(g.evolve(&params, &mut rng), g);
    }

    #[test]
    fn params_validation() {
        assert!(EdgeMarkovParams::new(0.0, 0.0).is_err());
        assert!(EdgeMarkovParams::new(0.5, 1.0).is_err());
        assert!(EdgeMarkovParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn stationary_probability() {
        let sp = |p, q| EdgeMarkovParams::new(p, q).unwrap().stationary_edge_probability();
        assert_eq!(sp(1.0, 0.0), 1.0);
        assert!((sp(0.2, 0.3) - 0.4).abs() < 1e-12);
        assert_eq!(sp(0.5, 0.5), 0.5);
    }

    /// Worst-case total-variation distance of the two-state chain after `t`
    /// steps, by explicit matrix powering.
    fn tv_after(params: &EdgeMarkovParams, t: u64) -> f64 {
        let m = params.transition_matrix();
        let pi1 = params.stationary_edge_probability();
        let mut worst: f64 = 0.0;
        for start in [[1.0, 0.0], [0.0, 1.0]] {
            let mut x: [f64; 2] = start;
            for _ in 0..t {
                x = [x[0] * m[0][0] + x[1] * m[1][0], x[0] * m[0][1] + x[1] * m[1][1]];
            }
            worst = worst.max(((x[0] - (1.0 - pi1)).abs() + (x[1] - pi1).abs()) / 2.0);
        }
        worst
    }

    fn first_mixed(params: &EdgeMarkovParams, eps: f64) -> u64 {
        (0..).find(|&t| tv_after(params, t) <= eps + 1e-12).unwrap()
    }

    #[test]
    fn mixing_steps_matches_matrix_powers() {
        let p = EdgeMarkovParams::new(0.1, 0.1).unwrap();
        assert_eq!(p.mixing_steps(0.01).unwrap(), 21);
        // the contraction bound is conservative: exact TV first drops below 0.01 at 18
        assert_eq!(first_mixed(&p, 0.01), 18);
        assert!(tv_after(&p, 21) <= 0.01);

        let p = EdgeMarkovParams::new(0.5, 0.4).unwrap();
        let t = p.mixing_steps(0.5).unwrap();
        assert_eq!(t, 1);
        assert!(tv_after(&p, t) <= 0.5);

        for (pp, qq) in [(0.5, 0.5), (1.0, 0.0), (0.3, 0.7)] {
            let p = EdgeMarkovParams::new(pp, qq).unwrap();
            assert_eq!(p.mixing_steps(0.01).unwrap(), 1);
            assert!(tv_after(&p, 1) < 1e-12);
        }

        // q = 0 with p < 1 keeps the same contraction formula
        let p = EdgeMarkovParams::new(0.2, 0.0).unwrap();
        assert_eq!(p.mixing_steps(0.05).unwrap(), first_mixed(&p, 0.05));
        assert!(p.mixing_steps(0.0).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# header\n0 1\n\n 2   3 # trailing\n";
        assert_eq!(parse_edge_list(text, "t").unwrap(), vec![(0, 1), (2, 3)]);
        assert!(parse_edge_list("0\n", "t").is_err());
        assert!(parse_edge_list("0 x\n", "t").is_err());
        assert!(parse_edge_list("0 1 2\n", "t").is_err());
    }
}

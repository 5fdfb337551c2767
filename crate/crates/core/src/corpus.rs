//! Small-graph corpus for fairness checks: every connected graph on at most
//! five vertices (one representative per isomorphism class), plus `K8`, the
//! star `K1,7` and the path `P8`.

use std::collections::BTreeSet;

use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct NamedGraph {
    pub name: String,
    pub graph: Graph,
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &(a, b) in edges {
            for (s, t) in [(a, b), (b, a)] {
                if s == x && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// One representative of each isomorphism class of connected graphs on `n`
/// vertices with at least one edge (1, 2, 6 and 21 classes for n = 2..5).
pub fn connected_graphs(n: usize) -> Vec<Graph> {
    if n < 2 {
        return Vec::new();
    }
    let all_pairs = pairs(n);
    let index = |u: usize, v: usize| all_pairs.iter().position(|&p| p == (u.min(v), u.max(v))).unwrap();
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 1u32..(1 << all_pairs.len()) {
        let edges: Vec<_> = (0..all_pairs.len()).filter(|&i| mask >> i & 1 == 1).map(|i| all_pairs[i]).collect();
        if !connected(n, &edges) {
            continue;
        }
        let canonical = perms
            .iter()
            .map(|p| edges.iter().fold(0u32, |acc, &(u, v)| acc | 1 << index(p[u], p[v])))
            .min()
            .unwrap();
        if seen.insert(canonical) {
            out.push(Graph::from_edges(n, &edges).expect("valid edge list"));
        }
    }
    out
}

pub fn fairness_corpus() -> Vec<NamedGraph> {
    let mut out = Vec::new();
    for n in 2..=5 {
        for (i, graph) in connected_graphs(n).into_iter().enumerate() {
            out.push(NamedGraph { name: format!("connected-n{n}-#{i}"), graph });
        }
    }
    let star: Vec<_> = (1..8).map(|v| (0, v)).collect();
    let path: Vec<_> = (0..7).map(|v| (v, v + 1)).collect();
    out.push(NamedGraph { name: "K8".into(), graph: Graph::complete(8).unwrap() });
    out.push(NamedGraph { name: "K1,7".into(), graph: Graph::from_edges(8, &star).unwrap() });
    out.push(NamedGraph { name: "P8".into(), graph: Graph::from_edges(8, &path).unwrap() });
    out
}

//! Deterministic graph generators used by tests, benchmarks and the CLI.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::seed;

pub fn cycle(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "cycle needs n >= 3, got {n}"
        )));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    WeightedGraph::from_edges(n, &edges)
}

pub fn path(n: usize) -> Result<WeightedGraph> {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    WeightedGraph::from_edges(n, &edges)
}

pub fn clique(n: usize) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v));
        }
    }
    WeightedGraph::from_edges(n, &edges)
}

/// `K_{1,leaves}` with the center at vertex 0.
pub fn star(leaves: usize) -> Result<WeightedGraph> {
    let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
    WeightedGraph::from_edges(leaves + 1, &edges)
}

pub fn hypercube(dim: u32) -> Result<WeightedGraph> {
    let n = 1usize << dim;
    let mut edges = Vec::new();
    for u in 0..n {
        for b in 0..dim {
            let v = u ^ (1 << b);
            if u < v {
                edges.push((u, v));
            }
        }
    }
    WeightedGraph::from_edges(n, &edges)
}

/// Two copies of `K_k` joined by the single edge `{k-1, k}`.
pub fn barbell(k: usize) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    for side in [0, k] {
        for u in 0..k {
            for v in u + 1..k {
                edges.push((side + u, side + v));
            }
        }
    }
    edges.push((k - 1, k));
    WeightedGraph::from_edges(2 * k, &edges)
}

pub fn two_cliques(k: usize) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    for side in [0, k] {
        for u in 0..k {
            for v in u + 1..k {
                edges.push((side + u, side + v));
            }
        }
    }
    WeightedGraph::from_edges(2 * k, &edges)
}

pub fn petersen() -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    WeightedGraph::from_edges(10, &edges)
}

/// Uniform `d`-regular simple graph by the configuration model, rejecting
/// pairings with self-loops or parallel edges.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<WeightedGraph> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(Error::InfeasibleDegreeSequence(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    const ATTEMPTS: usize = 100_000;
    let mut rng = seed::rng(seed::derive(seed, "random-regular"));
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(n * d / 2);
        let mut seen = std::collections::HashSet::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return WeightedGraph::from_edges(n, &edges);
    }
    Err(Error::InfeasibleDegreeSequence(format!(
        "no simple pairing found in {ATTEMPTS} attempts"
    )))
}

#[derive(Debug, Clone)]
pub struct NamedGraph {
    pub name: String,
    pub graph: WeightedGraph,
}

fn named(name: String, graph: Result<WeightedGraph>) -> NamedGraph {
    NamedGraph {
        name,
        graph: graph.expect("corpus generator parameters are valid"),
    }
}

/// Instances of every generator with at most `max_n` vertices.
pub fn standard_corpus(max_n: usize) -> Vec<NamedGraph> {
    let mut out = Vec::new();
    for n in [3, 4, 5, 6, 8, 10] {
        out.push(named(format!("cycle-{n}"), cycle(n)));
    }
    for n in [2, 3, 4, 5, 6] {
        out.push(named(format!("clique-{n}"), clique(n)));
    }
    for k in [2, 3, 4, 5] {
        out.push(named(format!("star-{k}"), star(k)));
    }
    for dim in [1, 2, 3] {
        out.push(named(format!("hypercube-{dim}"), hypercube(dim)));
    }
    for (n, d) in [(6, 3), (8, 3), (10, 3), (10, 4)] {
        out.push(named(
            format!("random-regular-{n}-{d}"),
            random_regular(n, d, 1),
        ));
    }
    for k in [3, 4, 5] {
        out.push(named(format!("barbell-{k}"), barbell(k)));
    }
    for k in [3, 4, 5] {
        out.push(named(format!("two-cliques-{k}"), two_cliques(k)));
    }
    out.retain(|g| g.graph.n() <= max_n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_shapes() {
        let c4 = cycle(4).unwrap();
        assert_eq!((c4.n(), c4.edge_count()), (4, 4));
        let q3 = hypercube(3).unwrap();
        assert_eq!((q3.n(), q3.edge_count()), (8, 12));
        assert_eq!(q3.regular_degree(), Some(3));
        let b = barbell(5).unwrap();
        assert_eq!((b.n(), b.edge_count()), (10, 21));
        assert!(b.is_connected());
        assert_eq!(two_cliques(4).unwrap().components().len(), 2);
        assert_eq!(petersen().unwrap().regular_degree(), Some(3));
        assert_eq!(star(3).unwrap().degree(0), 3);
    }

    #[test]
    fn random_regular_is_deterministic_and_regular() {
        let a = random_regular(10, 3, 42).unwrap();
        let b = random_regular(10, 3, 42).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.regular_degree(), Some(3));
        assert!(matches!(
            random_regular(5, 3, 0),
            Err(Error::InfeasibleDegreeSequence(_))
        ));
        assert!(random_regular(4, 4, 0).is_err());
    }

    #[test]
    fn corpus_respects_size_limit() {
        let c = standard_corpus(10);
        assert!(c.iter().all(|g| g.graph.n() <= 10));
        assert!(c.len() > 20);
    }
}

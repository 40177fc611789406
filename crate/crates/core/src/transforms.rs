//! Graph transformations relating vertex expansion, symmetric vertex
//! expansion, and balanced vertex expansion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{balance, inner_boundary, Cut, WeightedGraph};

/// `G ∪ G²`: joins every pair of vertices at distance one or two.
pub fn square_union(g: &WeightedGraph) -> WeightedGraph {
    let n = g.n();
    let mut edges = Vec::new();
    let mut mark = vec![usize::MAX; n];
    for u in 0..n {
        mark[u] = u;
        for &w in g.neighbors(u) {
            for &v in std::iter::once(&w).chain(g.neighbors(w)) {
                if mark[v] != u {
                    mark[v] = u;
                    if u < v {
                        edges.push((u, v));
                    }
                }
            }
        }
    }
    WeightedGraph::with_weights(n, &edges, g.weights().to_vec())
        .expect("two-hop closure of a simple graph is simple")
}

/// `S − N(S̄)`. Its boundary in `square_union(G)` is contained in
/// `N(S) ∪ N(S̄)`.
pub fn strip_inner_boundary(g: &WeightedGraph, s: &Cut) -> Result<Cut> {
    if !s.is_proper() {
        return Err(Error::DegenerateCut("S must be a proper nonempty subset"));
    }
    let inner = inner_boundary(g, s);
    let mut mask = s.mask().to_vec();
    for v in inner {
        mask[v] = false;
    }
    let out = Cut::from_mask(mask);
    if out.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Vertex(usize),
    Edge(usize, usize),
}

/// The edge-subdivided graph `G'`: vertices of `G` keep their ids and weights,
/// edge `{u,v}` (the `k`-th in lexicographic order) becomes vertex `n + k`
/// with weight `min(w(u)/deg(u), w(v)/deg(v))` adjacent to `u` and `v`.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub graph: WeightedGraph,
    pub original_n: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn edge_subdivision_weighted(g: &WeightedGraph) -> Subdivision {
    let n = g.n();
    let edges = g.edges();
    let mut weights = g.weights().to_vec();
    let mut sub_edges = Vec::with_capacity(2 * edges.len());
    for (k, &(u, v)) in edges.iter().enumerate() {
        let wu = g.weight(u) / g.degree(u) as f64;
        let wv = g.weight(v) / g.degree(v) as f64;
        weights.push(wu.min(wv));
        sub_edges.push((u, n + k));
        sub_edges.push((v, n + k));
    }
    let graph = WeightedGraph::with_weights(n + edges.len(), &sub_edges, weights)
        .expect("subdivision of a simple graph is simple");
    Subdivision {
        graph,
        original_n: n,
        edges,
    }
}

impl Subdivision {
    pub fn origin(&self, id: usize) -> Origin {
        if id < self.original_n {
            Origin::Vertex(id)
        } else {
            let (u, v) = self.edges[id - self.original_n];
            Origin::Edge(u, v)
        }
    }

    /// `S ↦ S ∪ {{u,v} : u ∈ S or v ∈ S}`.
    pub fn lift(&self, s: &Cut) -> Cut {
        let n = self.original_n;
        let mut mask = vec![false; self.graph.n()];
        mask[..n].copy_from_slice(s.mask());
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            mask[n + k] = s.contains(u) || s.contains(v);
        }
        Cut::from_mask(mask)
    }

    /// `S' ↦ {v ∈ S' ∩ V(G) : v ∉ N_{G'}(S̄')}`; may be empty.
    pub fn project(&self, s: &Cut) -> Cut {
        let n = self.original_n;
        let mask = (0..n)
            .map(|v| s.contains(v) && self.graph.neighbors(v).iter().all(|&u| s.contains(u)))
            .collect();
        Cut::from_mask(mask)
    }

    /// `S' ∩ V(G)`.
    pub fn restrict(&self, s: &Cut) -> Cut {
        Cut::from_mask(s.mask()[..self.original_n].to_vec())
    }
}

/// Repeatedly asks `oracle` for a low-expansion set of the residual graph and
/// deletes it, until the deleted weight first exceeds a `b/2` fraction.
///
/// The oracle sees the residual graph with fresh ids `0..k` and returns a cut
/// of it, or `None` to signal failure. A single oracle cut with balance at
/// least `b` is returned immediately; otherwise the union of deleted sets is
/// returned when its balance is at least `b/2`.
pub fn peel_to_balanced<F>(g: &WeightedGraph, b: f64, mut oracle: F) -> Result<Cut>
where
    F: FnMut(&WeightedGraph) -> Option<Cut>,
{
    if !(b > 0.0 && b <= 0.25) {
        return Err(Error::InvalidArgument(format!(
            "balance {b} outside (0, 1/4]"
        )));
    }
    let n = g.n();
    let total = g.total_weight();
    let mut deleted = vec![false; n];
    let mut deleted_weight = 0.0;
    loop {
        let keep: Vec<usize> = (0..n).filter(|&v| !deleted[v]).collect();
        if keep.len() < 2 {
            break;
        }
        let (residual, ids) = g.induced(&keep)?;
        let Some(found) = oracle(&residual) else {
            break;
        };
        if !found.is_proper() || found.universe() != residual.n() {
            break;
        }
        let lifted = Cut::new(n, found.members().iter().map(|&v| ids[v]))?;
        if balance(g, &lifted) >= b {
            return Ok(lifted);
        }
        for &v in lifted.members() {
            deleted[v] = true;
            deleted_weight += g.weight(v);
        }
        if deleted_weight > total * b / 2.0 {
            break;
        }
    }
    let union = Cut::from_mask(deleted);
    if union.is_proper() && balance(g, &union) >= b / 2.0 {
        Ok(union)
    } else {
        Err(Error::NoCut)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::exact::exact_min_vertex_expansion;
    use crate::graph::vertex_expansion;

    fn cut(n: usize, m: &[usize]) -> Cut {
        Cut::new(n, m.iter().copied()).unwrap()
    }

    #[test]
    fn square_union_examples() {
        let h = square_union(&corpus::path(3).unwrap());
        assert_eq!(h.edges(), corpus::clique(3).unwrap().edges());
        let k5 = corpus::clique(5).unwrap();
        assert_eq!(square_union(&k5), k5);
        let h = square_union(&corpus::cycle(4).unwrap());
        assert_eq!(h.edges(), corpus::clique(4).unwrap().edges());
    }

    #[test]
    fn square_union_degree_bound() {
        for g in corpus::standard_corpus(10) {
            let d = g.graph.max_degree();
            let h = square_union(&g.graph);
            assert!(h.max_degree() <= d * d + d);
            assert!(h.edge_count() >= g.graph.edge_count());
        }
    }

    #[test]
    fn strip_examples() {
        let c4 = corpus::cycle(4).unwrap();
        assert!(matches!(
            strip_inner_boundary(&c4, &cut(4, &[0, 1])),
            Err(Error::EmptyResult)
        ));
        let p5 = corpus::path(5).unwrap();
        assert_eq!(
            strip_inner_boundary(&p5, &cut(5, &[0, 1, 2]))
                .unwrap()
                .members(),
            &[0, 1]
        );
        let tt = corpus::two_cliques(3).unwrap();
        let s = cut(6, &[0, 1, 2]);
        assert_eq!(strip_inner_boundary(&tt, &s).unwrap(), s);
    }

    #[test]
    fn stripped_set_boundary_within_both_boundaries() {
        use crate::graph::neighborhood;
        for g in corpus::standard_corpus(8) {
            let n = g.graph.n();
            let h = square_union(&g.graph);
            for bits in 1..(1u64 << n) - 1 {
                let s = Cut::from_bits(n, bits);
                let Ok(stripped) = strip_inner_boundary(&g.graph, &s) else {
                    continue;
                };
                let outer = neighborhood(&g.graph, &s);
                let inner = neighborhood(&g.graph, &s.complement());
                for v in neighborhood(&h, &stripped) {
                    assert!(
                        outer.contains(&v) || inner.contains(&v),
                        "{} {bits:b}",
                        g.name
                    );
                }
            }
        }
    }

    #[test]
    fn subdivision_examples() {
        let sub = edge_subdivision_weighted(&corpus::clique(2).unwrap());
        assert_eq!(sub.graph.n(), 3);
        assert_eq!(sub.graph.edges(), vec![(0, 2), (1, 2)]);
        assert_eq!(sub.graph.weight(2), 1.0);

        let sub = edge_subdivision_weighted(&corpus::star(3).unwrap());
        for k in 0..3 {
            assert!((sub.graph.weight(4 + k) - 1.0 / 3.0).abs() < 1e-15);
        }

        let tri =
            WeightedGraph::with_weights(3, &[(0, 1), (1, 2), (0, 2)], vec![2.0, 2.0, 2.0]).unwrap();
        let sub = edge_subdivision_weighted(&tri);
        assert!((3..6).all(|v| sub.graph.weight(v) == 1.0));
        assert_eq!(sub.origin(3), Origin::Edge(0, 1));
        assert_eq!(sub.origin(1), Origin::Vertex(1));
    }

    #[test]
    fn subdivision_degrees() {
        for g in corpus::standard_corpus(10) {
            let sub = edge_subdivision_weighted(&g.graph);
            let n = g.graph.n();
            assert_eq!(sub.graph.n(), n + g.graph.edge_count());
            for v in 0..n {
                assert_eq!(sub.graph.degree(v), g.graph.degree(v));
            }
            for v in n..sub.graph.n() {
                assert_eq!(sub.graph.degree(v), 2);
            }
            if g.graph.max_degree() >= 2 {
                assert_eq!(sub.graph.max_degree(), g.graph.max_degree());
            }
        }
    }

    #[test]
    fn lift_and_project() {
        let g = corpus::path(4).unwrap();
        let sub = edge_subdivision_weighted(&g);
        let s = cut(4, &[0, 1]);
        let lifted = sub.lift(&s);
        // edges (0,1),(1,2) are vertices 4,5
        assert_eq!(lifted.members(), &[0, 1, 4, 5]);
        assert_eq!(sub.project(&lifted).members(), &[0, 1]);
        assert_eq!(sub.restrict(&lifted).members(), &[0, 1]);
    }

    fn exact_oracle(r: &WeightedGraph) -> Option<Cut> {
        exact_min_vertex_expansion(r, false, None)
            .ok()
            .map(|e| e.cut)
    }

    #[test]
    fn peel_examples() {
        let g = corpus::two_cliques(4).unwrap();
        let s = peel_to_balanced(&g, 0.125, exact_oracle).unwrap();
        assert_eq!(s.members(), &[0, 1, 2, 3]);
        assert_eq!(vertex_expansion(&g, &s).unwrap(), 0.0);
        assert_eq!(balance(&g, &s), 0.25);

        let k4 = corpus::clique(4).unwrap();
        assert!(matches!(
            peel_to_balanced(&k4, 0.125, |_| None),
            Err(Error::NoCut)
        ));

        let bb = corpus::barbell(5).unwrap();
        let s = peel_to_balanced(&bb, 0.125, exact_oracle).unwrap();
        let opt = exact_min_vertex_expansion(&bb, false, None).unwrap().value;
        assert!(vertex_expansion(&bb, &s).unwrap() <= opt + 1e-12);
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn peel_unions_small_pieces() {
        // three disjoint triangles and an isolated vertex; each oracle call
        // removes a single vertex, so the union is returned once > b/2 of the
        // mass is deleted.
        let g = WeightedGraph::from_edges(
            10,
            &[
                (0, 1),
                (1, 2),
                (0, 2),
                (3, 4),
                (4, 5),
                (3, 5),
                (6, 7),
                (7, 8),
                (6, 8),
            ],
        )
        .unwrap();
        let s = peel_to_balanced(&g, 0.2, |r| Cut::new(r.n(), [0]).ok()).unwrap();
        assert_eq!(s.len(), 2);
        assert!(balance(&g, &s) >= 0.1);
    }
}

//! Weighted simple graphs, vertex cuts, and the expansion functionals.
//!
//! All functionals use vertex weights: for a cut `S` with complement `S̄`,
//!
//! * vertex expansion `φ(S) = w(V)·w(N(S)) / (w(S)·w(S̄))`,
//! * symmetric vertex expansion `Φ(S) = w(V)·w(N(S) ∪ N(S̄)) / (w(S)·w(S̄))`,
//!
//! where `N(S)` is the outer vertex boundary. With unit weights these are the
//! usual cardinality formulas.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    adjacency: Vec<Vec<usize>>,
    weights: Vec<f64>,
    max_degree: usize,
}

impl WeightedGraph {
    /// Unit-weight graph from an edge list. Rejects self-loops, duplicate
    /// edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::with_weights(n, edges, vec![1.0; n])
    }

    pub fn with_weights(n: usize, edges: &[(usize, usize)], weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        if weights.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} weights for {} vertices",
                weights.len(),
                n
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidGraph(format!("invalid vertex weight {w}")));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidGraph("total weight is zero".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            adjacency,
            weights,
            max_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adjacency.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Same graph with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            adjacency: self.adjacency.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
            max_degree: self.max_degree,
        }
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let edges: Vec<_> = self
            .edges()
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        let mut weights = vec![0.0; n];
        for v in 0..n {
            weights[perm[v]] = self.weights[v];
        }
        Self::with_weights(n, &edges, weights)
    }

    /// Subgraph induced on `keep` (ascending), returned with the map from new
    /// ids to old ids.
    pub fn induced(&self, keep: &[usize]) -> Result<(Self, Vec<usize>)> {
        let mut index = vec![usize::MAX; self.n()];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let mut edges = Vec::new();
        for (new_u, &old_u) in keep.iter().enumerate() {
            for &old_v in &self.adjacency[old_u] {
                let new_v = index[old_v];
                if new_v != usize::MAX && new_u < new_v {
                    edges.push((new_u, new_v));
                }
            }
        }
        let weights = keep.iter().map(|&v| self.weights[v]).collect();
        Ok((
            Self::with_weights(keep.len(), &edges, weights)?,
            keep.to_vec(),
        ))
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut comp = vec![start];
            label[start] = id;
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        self.adjacency.iter().all(|l| l.len() == d).then_some(d)
    }

    /// Parses the text format:
    ///
    /// ```text
    /// n m
    /// v <id> <weight>     (optional, any number)
    /// e <u> <v>           (exactly m lines)
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut head = header.split_whitespace();
        let mut header_num = |what: &str| -> Result<usize> {
            head.next()
                .ok_or_else(|| perr(hline, format!("header missing {what}")))?
                .parse()
                .map_err(|_| perr(hline, format!("header {what} is not an integer")))
        };
        let n = header_num("n")?;
        let m = header_num("m")?;
        let mut weights = vec![1.0; n];
        let mut edges = Vec::with_capacity(m);
        let mut seen = BTreeSet::new();
        for (line, content) in lines {
            let fields: Vec<&str> = content.split_whitespace().collect();
            let id = |s: &str| -> Result<usize> {
                let v: usize = s
                    .parse()
                    .map_err(|_| perr(line, format!("bad vertex id {s:?}")))?;
                if v >= n {
                    return Err(perr(line, format!("vertex id {v} out of range")));
                }
                Ok(v)
            };
            match fields.as_slice() {
                ["v", v, w] => {
                    let w: f64 = w
                        .parse()
                        .map_err(|_| perr(line, format!("bad weight {w:?}")))?;
                    weights[id(v)?] = w;
                }
                ["e", u, v] => {
                    let (u, v) = (id(u)?, id(v)?);
                    if u == v {
                        return Err(perr(line, format!("self-loop at {u}")));
                    }
                    if !seen.insert((u.min(v), u.max(v))) {
                        return Err(perr(line, format!("duplicate edge {u} {v}")));
                    }
                    edges.push((u, v));
                }
                _ => return Err(perr(line, format!("unrecognized line {content:?}"))),
            }
        }
        if edges.len() != m {
            return Err(perr(
                hline,
                format!("header declares {m} edges, found {}", edges.len()),
            ));
        }
        Self::with_weights(n, &edges, weights)
    }

    /// Inverse of [`parse`](Self::parse). Weight lines are written only for
    /// non-unit weights.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n(), self.edge_count());
        for (v, &w) in self.weights.iter().enumerate() {
            if w != 1.0 {
                let _ = writeln!(out, "v {v} {w:?}");
            }
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "e {u} {v}");
        }
        out
    }
}

/// A vertex subset of a graph with `n` vertices, with O(1) membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl Cut {
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; n];
        for v in members {
            if v >= n {
                return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
            }
            mask[v] = true;
        }
        Ok(Self::from_mask(mask))
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(v, &m)| m.then_some(v))
            .collect();
        Self { members, mask }
    }

    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self::from_mask((0..n).map(|v| bits >> v & 1 == 1).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, v: usize) -> bool {
        self.mask[v]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn complement_size(&self) -> usize {
        self.universe() - self.len()
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.mask.iter().map(|m| !m).collect())
    }

    pub fn is_proper(&self) -> bool {
        !self.is_empty() && self.complement_size() > 0
    }
}

/// Outer vertex boundary `N(S)`: vertices outside `S` with a neighbor in `S`.
pub fn neighborhood(g: &WeightedGraph, s: &Cut) -> Vec<usize> {
    (0..g.n())
        .filter(|&v| !s.contains(v) && g.neighbors(v).iter().any(|&u| s.contains(u)))
        .collect()
}

/// Inner vertex boundary `N(S̄)`: members of `S` with a neighbor outside `S`.
pub fn inner_boundary(g: &WeightedGraph, s: &Cut) -> Vec<usize> {
    s.members()
        .iter()
        .copied()
        .filter(|&v| g.neighbors(v).iter().any(|&u| !s.contains(u)))
        .collect()
}

fn side_weights(g: &WeightedGraph, s: &Cut) -> Result<(f64, f64)> {
    if s.universe() != g.n() {
        return Err(Error::InvalidArgument(
            "cut universe does not match graph".into(),
        ));
    }
    if s.is_empty() {
        return Err(Error::DegenerateCut("S is empty"));
    }
    if s.complement_size() == 0 {
        return Err(Error::DegenerateCut("S is the whole vertex set"));
    }
    let inside: f64 = s.members().iter().map(|&v| g.weight(v)).sum();
    let outside = g.total_weight() - inside;
    if inside <= 0.0 || outside <= 0.0 {
        return Err(Error::DegenerateCut("a side has zero weight"));
    }
    Ok((inside, outside))
}

fn weight_of(g: &WeightedGraph, vs: &[usize]) -> f64 {
    vs.iter().fold(0.0, |acc, &v| acc + g.weight(v))
}

pub fn vertex_expansion(g: &WeightedGraph, s: &Cut) -> Result<f64> {
    let (inside, outside) = side_weights(g, s)?;
    let boundary = weight_of(g, &neighborhood(g, s));
    Ok(g.total_weight() * boundary / (inside * outside))
}

pub fn symmetric_vertex_expansion(g: &WeightedGraph, s: &Cut) -> Result<f64> {
    let (inside, outside) = side_weights(g, s)?;
    let boundary = weight_of(g, &neighborhood(g, s)) + weight_of(g, &inner_boundary(g, s));
    Ok(g.total_weight() * boundary / (inside * outside))
}

/// `w(N(S)) / w(S)`, the unnormalized ratio bounded by the level-set sweep.
pub fn boundary_ratio(g: &WeightedGraph, s: &Cut) -> Result<f64> {
    let (inside, _) = side_weights(g, s)?;
    Ok(weight_of(g, &neighborhood(g, s)) / inside)
}

/// Cut edges over `d·|S|` with `d` the maximum degree.
pub fn edge_expansion(g: &WeightedGraph, s: &Cut) -> Result<f64> {
    side_weights(g, s)?;
    if g.max_degree() == 0 {
        return Ok(0.0);
    }
    let cut_edges: usize = s
        .members()
        .iter()
        .map(|&v| g.neighbors(v).iter().filter(|&&u| !s.contains(u)).count())
        .sum();
    Ok(cut_edges as f64 / (g.max_degree() * s.len()) as f64)
}

/// `w(S)·w(S̄) / w(V)²`.
pub fn balance(g: &WeightedGraph, s: &Cut) -> f64 {
    let inside: f64 = s.members().iter().map(|&v| g.weight(v)).sum();
    let total = g.total_weight();
    inside * (total - inside) / (total * total)
}

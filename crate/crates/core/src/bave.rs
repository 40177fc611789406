//! Balanced analytic vertex expansion.
//!
//! An instance is a distribution `P` over `(d+1)`-tuples `(x, y_1, …, y_d)`
//! of variables whose coordinate marginals all equal `μ`. For `F: V → [0,1]`
//! its value is
//!
//! ```text
//! E_P max_i |F(y_i) − F(x)|  /  E_{X,Y∼μ} |F(X) − F(Y)|
//! ```

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::seed;

/// Tolerance for probability sums and marginal equality.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Largest variable count accepted by [`bave_optimum`].
pub const OPTIMUM_CAP: usize = 20;

pub const DEFAULT_BALANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Tuple {
    /// `x` followed by `y_1..y_d`.
    pub vars: Vec<usize>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaveInstance {
    n_vars: usize,
    d: usize,
    tuples: Vec<Tuple>,
    mu: Vec<f64>,
    /// Largest deviation of a coordinate marginal from `μ`.
    marginal_gap: f64,
    empirical: bool,
}

fn validate_tuples(n_vars: usize, d: usize, tuples: &[Tuple]) -> Result<()> {
    if n_vars == 0 {
        return Err(Error::InvalidInstance("no variables".into()));
    }
    if d == 0 {
        return Err(Error::InvalidInstance("arity must be at least 2".into()));
    }
    if tuples.is_empty() {
        return Err(Error::InvalidInstance("no tuples".into()));
    }
    for t in tuples {
        if t.vars.len() != d + 1 {
            return Err(Error::InvalidInstance(format!(
                "tuple {:?} has length {}, expected {}",
                t.vars,
                t.vars.len(),
                d + 1
            )));
        }
        if let Some(v) = t.vars.iter().find(|&&v| v >= n_vars) {
            return Err(Error::InvalidInstance(format!("variable {v} out of range")));
        }
        if !(t.p >= 0.0 && t.p.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "probability {} is invalid",
                t.p
            )));
        }
    }
    let total: f64 = tuples.iter().map(|t| t.p).sum();
    if (total - 1.0).abs() > MARGINAL_TOL {
        return Err(Error::InvalidInstance(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

fn slot_marginals(n_vars: usize, d: usize, tuples: &[Tuple]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n_vars]; d + 1];
    for t in tuples {
        for (k, &v) in t.vars.iter().enumerate() {
            m[k][v] += t.p;
        }
    }
    m
}

impl BaveInstance {
    /// Exact instance: probabilities must sum to 1 and every coordinate
    /// marginal must agree within [`MARGINAL_TOL`].
    pub fn new(n_vars: usize, d: usize, tuples: Vec<Tuple>) -> Result<Self> {
        let inst = Self::empirical(n_vars, d, tuples)?;
        if inst.marginal_gap > MARGINAL_TOL {
            return Err(Error::InvalidInstance(format!(
                "coordinate marginals differ by {:e}",
                inst.marginal_gap
            )));
        }
        Ok(Self {
            empirical: false,
            ..inst
        })
    }

    /// Instance whose marginals are only approximately equal (sampled or
    /// pruned); `μ` is the average of the coordinate marginals and the
    /// largest deviation is kept in [`Self::marginal_gap`].
    pub fn empirical(n_vars: usize, d: usize, tuples: Vec<Tuple>) -> Result<Self> {
        validate_tuples(n_vars, d, &tuples)?;
        let slots = slot_marginals(n_vars, d, &tuples);
        let mu: Vec<f64> = (0..n_vars)
            .map(|v| slots.iter().map(|m| m[v]).sum::<f64>() / (d + 1) as f64)
            .collect();
        let marginal_gap = slots
            .iter()
            .flat_map(|m| m.iter().zip(&mu).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        Ok(Self {
            n_vars,
            d,
            tuples,
            mu,
            marginal_gap,
            empirical: true,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn marginal_gap(&self) -> f64 {
        self.marginal_gap
    }

    pub fn is_empirical(&self) -> bool {
        self.empirical
    }

    /// Per-coordinate marginal distributions.
    pub fn slot_marginals(&self) -> Vec<Vec<f64>> {
        slot_marginals(self.n_vars, self.d, &self.tuples)
    }

    /// Relabels variables by `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let tuples = self
            .tuples
            .iter()
            .map(|t| Tuple {
                vars: t.vars.iter().map(|&v| perm[v]).collect(),
                p: t.p,
            })
            .collect();
        if self.empirical {
            Self::empirical(self.n_vars, self.d, tuples)
        } else {
            Self::new(self.n_vars, self.d, tuples)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        let d = file
            .d
            .or_else(|| file.tuples.first().map(|t| t.t.len().saturating_sub(1)))
            .unwrap_or(0);
        let tuples = file
            .tuples
            .into_iter()
            .map(|t| Tuple { vars: t.t, p: t.p })
            .collect();
        if file.empirical {
            Self::empirical(file.variables, d, tuples)
        } else {
            Self::new(file.variables, d, tuples)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TupleFile {
    t: Vec<usize>,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    variables: usize,
    #[serde(default)]
    d: Option<usize>,
    tuples: Vec<TupleFile>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    empirical: bool,
}

impl From<&BaveInstance> for InstanceFile {
    fn from(inst: &BaveInstance) -> Self {
        Self {
            variables: inst.n_vars,
            d: Some(inst.d),
            tuples: inst
                .tuples
                .iter()
                .map(|t| TupleFile {
                    t: t.vars.clone(),
                    p: t.p,
                })
                .collect(),
            empirical: inst.empirical,
        }
    }
}

/// Values `F(v) ∈ [0, 1]` for every variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<f64>);

impl Assignment {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "assignment value {v} outside [0, 1]"
            )));
        }
        Ok(Self(values))
    }

    pub fn indicator(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut values = vec![0.0; n];
        for v in members {
            *values
                .get_mut(v)
                .ok_or_else(|| Error::InvalidArgument(format!("variable {v} out of range")))? = 1.0;
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_boolean(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaveValue {
    pub numerator: f64,
    /// `Var₁[F] = E_{X,Y∼μ} |F(X) − F(Y)|`.
    pub denominator: f64,
}

impl BaveValue {
    pub fn ratio(&self) -> Result<f64> {
        if self.denominator <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok(self.numerator / self.denominator)
    }
}

/// `E_{X,Y∼μ} |F(X) − F(Y)|` in `O(n log n)` via sorted prefix sums.
pub fn l1_variance(mu: &[f64], f: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
    let (mut mass, mut moment, mut total) = (0.0, 0.0, 0.0);
    for &v in &order {
        total += mu[v] * (mass * f[v] - moment);
        mass += mu[v];
        moment += mu[v] * f[v];
    }
    2.0 * total
}

pub fn bave_value(inst: &BaveInstance, f: &Assignment) -> Result<BaveValue> {
    if f.len() != inst.n_vars {
        return Err(Error::InvalidArgument(format!(
            "assignment has {} values, instance has {} variables",
            f.len(),
            inst.n_vars
        )));
    }
    let fv = f.values();
    let numerator = inst
        .tuples
        .iter()
        .map(|t| {
            let x = fv[t.vars[0]];
            t.p * t.vars[1..]
                .iter()
                .map(|&y| (fv[y] - x).abs())
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(BaveValue {
        numerator,
        denominator: l1_variance(&inst.mu, fv),
    })
}

/// Exhaustive minimum over boolean assignments with `Var₁ ≥ balance`.
/// `F` and `1 − F` have the same value, so variable 0 is pinned to 1.
pub fn bave_optimum(inst: &BaveInstance, balance: f64) -> Result<(Assignment, f64)> {
    let n = inst.n_vars;
    if n > OPTIMUM_CAP {
        return Err(Error::TooLarge {
            n,
            cap: OPTIMUM_CAP,
        });
    }
    let masks: Vec<(u32, f64)> = inst
        .tuples
        .iter()
        .map(|t| (t.vars.iter().fold(0u32, |m, &v| m | 1 << v), t.p))
        .collect();
    let mut best: Option<(f64, u32)> = None;
    for rest in 0..(1u32 << (n - 1)) {
        let mask = rest << 1 | 1;
        let mass: f64 = (0..n)
            .filter(|&v| mask >> v & 1 == 1)
            .map(|v| inst.mu[v])
            .sum();
        let var1 = 2.0 * mass * (1.0 - mass);
        if var1 < balance * (1.0 - 1e-12) || var1 <= 0.0 {
            continue;
        }
        let num: f64 = masks
            .iter()
            .filter(|(tm, _)| {
                let inside = tm & mask;
                inside != 0 && inside != *tm
            })
            .map(|(_, p)| p)
            .sum();
        let ratio = num / var1;
        if best.is_none_or(|(b, _)| ratio < b - 1e-12 * b.max(1.0)) {
            best = Some((ratio, mask));
        }
    }
    let (_, mask) = best.ok_or(Error::Infeasible)?;
    let f = Assignment::indicator(n, (0..n).filter(|&v| mask >> v & 1 == 1))?;
    let ratio = bave_value(inst, &f)?.ratio()?;
    Ok((f, ratio))
}

/// Best level set `F_r = 1[F ≥ r]` over the distinct values `r` of `F`.
pub fn threshold_round(inst: &BaveInstance, f: &Assignment) -> Result<(Assignment, f64)> {
    bave_value(inst, f)?.ratio()?;
    let mut levels: Vec<f64> = f.values().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut best: Option<(Assignment, f64)> = None;
    for &r in &levels[1..] {
        let g = Assignment(
            f.values()
                .iter()
                .map(|&v| if v >= r { 1.0 } else { 0.0 })
                .collect(),
        );
        let ratio = match bave_value(inst, &g)?.ratio() {
            Ok(r) => r,
            Err(Error::ZeroVariance) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(_, b)| ratio < *b) {
            best = Some((g, ratio));
        }
    }
    best.ok_or(Error::ZeroVariance)
}

/// The instance of a `d`-regular graph: `x` uniform and its neighbors in
/// every cyclic rotation of the sorted neighbor list, which makes all `d+1`
/// coordinate marginals uniform.
pub fn graph_to_instance(g: &WeightedGraph) -> Result<BaveInstance> {
    let d = g.regular_degree().ok_or(Error::NotRegular)?;
    if d == 0 {
        return Err(Error::InvalidInstance("graph has no edges".into()));
    }
    let n = g.n();
    let p = 1.0 / (n * d) as f64;
    let mut tuples = Vec::with_capacity(n * d);
    for x in 0..n {
        let nb = g.neighbors(x);
        for shift in 0..d {
            let mut vars = Vec::with_capacity(d + 1);
            vars.push(x);
            vars.extend(nb[shift..].iter().chain(&nb[..shift]));
            tuples.push(Tuple { vars, p });
        }
    }
    BaveInstance::new(n, d, tuples)
}

#[derive(Debug, Clone)]
pub struct Uniformized {
    pub instance: BaveInstance,
    /// Original variable of each cloud copy.
    pub origin: Vec<usize>,
    /// Variables removed for having mass below `1/(2n²)`.
    pub deleted: Vec<usize>,
    pub t: usize,
}

/// Cap on the number of tuples produced by [`uniformize`].
pub const UNIFORMIZE_TUPLE_CAP: usize = 2_000_000;

/// Replaces every variable `i` by a cloud of `⌈μ(i)T⌉` copies and spreads
/// each tuple uniformly over all combinations of copies, after deleting
/// variables with `μ(i) < 1/(2n²)` and the tuples that touch them.
pub fn uniformize(inst: &BaveInstance, t: Option<usize>) -> Result<Uniformized> {
    let n = inst.n_vars;
    let t = t.unwrap_or(2 * n * n);
    if t == 0 {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    let floor = 1.0 / (2 * n * n) as f64;
    let deleted: Vec<usize> = (0..n).filter(|&v| inst.mu[v] < floor).collect();
    let alive: Vec<bool> = (0..n).map(|v| inst.mu[v] >= floor).collect();
    let kept: Vec<&Tuple> = inst
        .tuples
        .iter()
        .filter(|tp| tp.vars.iter().all(|&v| alive[v]))
        .collect();
    let mass: f64 = kept.iter().map(|tp| tp.p).sum();
    if kept.is_empty() || mass <= 0.0 {
        return Err(Error::InvalidInstance(
            "every tuple touches a deleted variable".into(),
        ));
    }
    let mut mu = vec![0.0; n];
    for tp in &kept {
        mu[tp.vars[0]] += tp.p / mass;
    }

    let mut first = vec![usize::MAX; n];
    let mut size = vec![0usize; n];
    let mut origin = Vec::new();
    for v in 0..n {
        if !alive[v] || mu[v] <= 0.0 {
            continue;
        }
        first[v] = origin.len();
        size[v] = ((mu[v] * t as f64) - 1e-9).ceil().max(1.0) as usize;
        origin.extend(std::iter::repeat_n(v, size[v]));
    }
    let produced: usize = kept
        .iter()
        .map(|tp| tp.vars.iter().map(|&v| size[v]).product::<usize>())
        .sum();
    if produced > UNIFORMIZE_TUPLE_CAP {
        return Err(Error::InvalidInstance(format!(
            "uniformization would produce {produced} tuples"
        )));
    }

    let mut tuples = Vec::with_capacity(produced);
    for tp in kept {
        if tp.vars.iter().any(|&v| size[v] == 0) {
            continue;
        }
        let combos: usize = tp.vars.iter().map(|&v| size[v]).product();
        let p = tp.p / mass / combos as f64;
        let mut idx = vec![0usize; tp.vars.len()];
        loop {
            let vars = tp
                .vars
                .iter()
                .zip(&idx)
                .map(|(&v, &i)| first[v] + i)
                .collect();
            tuples.push(Tuple { vars, p });
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < size[tp.vars[k]] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    let instance = if deleted.is_empty() && !inst.empirical {
        BaveInstance::new(origin.len(), inst.d, tuples)?
    } else {
        BaveInstance::empirical(origin.len(), inst.d, tuples)?
    };
    Ok(Uniformized {
        instance,
        origin,
        deleted,
        t,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampledGraph {
    #[serde(skip)]
    pub graph: WeightedGraph,
    /// Original variable of each surviving vertex.
    pub ids: Vec<usize>,
    /// Degree with multiplicity of every variable before pruning.
    pub multi_degrees: Vec<usize>,
    /// Fraction of variables pruned for degree above `4D`.
    pub deleted_fraction: f64,
}

/// Samples `D/d` tuples per variable (conditioned on the first coordinate),
/// joins the variable to the `d` partners of each, prunes variables whose
/// degree with multiplicity exceeds `4D`, and deduplicates.
pub fn instance_to_graph(inst: &BaveInstance, big_d: usize, seed: u64) -> Result<SampledGraph> {
    let n = inst.n_vars;
    let d = inst.d;
    if big_d < d {
        return Err(Error::InvalidArgument(format!(
            "D = {big_d} must be at least d = {d}"
        )));
    }
    let uniform = 1.0 / n as f64;
    if inst.mu.iter().any(|m| (m - uniform).abs() > MARGINAL_TOL) {
        return Err(Error::InvalidInstance("marginal is not uniform".into()));
    }
    let per_vertex = big_d / d;
    let mut by_first: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, t) in inst.tuples.iter().enumerate() {
        if t.p > 0.0 {
            by_first[t.vars[0]].push(i);
        }
    }
    let mut rng = seed::rng(seed::derive(seed, "instance-to-graph"));
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (x, idxs) in by_first.iter().enumerate() {
        if idxs.is_empty() {
            continue;
        }
        let dist = WeightedIndex::new(idxs.iter().map(|&i| inst.tuples[i].p))
            .map_err(|e| Error::InvalidInstance(e.to_string()))?;
        for _ in 0..per_vertex {
            let t = &inst.tuples[idxs[dist.sample(&mut rng)]];
            pairs.extend(t.vars[1..].iter().filter(|&&y| y != x).map(|&y| (x, y)));
        }
    }
    let mut multi_degrees = vec![0usize; n];
    for &(a, b) in &pairs {
        multi_degrees[a] += 1;
        multi_degrees[b] += 1;
    }
    let keep: Vec<usize> = (0..n).filter(|&v| multi_degrees[v] <= 4 * big_d).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in keep.iter().enumerate() {
        local[v] = i;
    }
    let mut edges: Vec<(usize, usize)> = pairs
        .iter()
        .filter(|(a, b)| local[*a] != usize::MAX && local[*b] != usize::MAX)
        .map(|&(a, b)| (local[a].min(local[b]), local[a].max(local[b])))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let graph = WeightedGraph::from_edges(keep.len(), &edges)?;
    Ok(SampledGraph {
        graph,
        deleted_fraction: (n - keep.len()) as f64 / n as f64,
        ids: keep,
        multi_degrees,
    })
}

/// Interns hashable labels as dense variable ids, for building empirical
/// instances from sampled tuples.
#[derive(Debug, Clone)]
pub struct Interner<K> {
    ids: HashMap<K, usize>,
    labels: Vec<K>,
}

impl<K: std::hash::Hash + Eq + Clone> Default for Interner<K> {
    fn default() -> Self {
        Self {
            ids: HashMap::new(),
            labels: Vec::new(),
        }
    }
}

impl<K: std::hash::Hash + Eq + Clone> Interner<K> {
    pub fn id(&mut self, key: K) -> usize {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.labels.len();
        self.ids.insert(key.clone(), id);
        self.labels.push(key);
        id
    }

    pub fn labels(&self) -> &[K] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::graph::{neighborhood, symmetric_vertex_expansion, Cut};

    fn two_var(d: usize) -> BaveInstance {
        let mut a = vec![0];
        a.extend(std::iter::repeat_n(1, d));
        let mut b = vec![1];
        b.extend(std::iter::repeat_n(0, d));
        BaveInstance::new(
            2,
            d,
            vec![Tuple { vars: a, p: 0.5 }, Tuple { vars: b, p: 0.5 }],
        )
        .unwrap()
    }

    #[test]
    fn two_variable_value() {
        let inst = two_var(3);
        let f = Assignment::new(vec![1.0, 0.0]).unwrap();
        let v = bave_value(&inst, &f).unwrap();
        assert_eq!(
            (v.numerator, v.denominator, v.ratio().unwrap()),
            (1.0, 0.5, 2.0)
        );
        let c = Assignment::new(vec![0.3, 0.3]).unwrap();
        assert!(matches!(
            bave_value(&inst, &c).unwrap().ratio(),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn constructor_checks() {
        let bad_sum = vec![
            Tuple {
                vars: vec![0, 1],
                p: 0.4,
            },
            Tuple {
                vars: vec![1, 0],
                p: 0.4,
            },
        ];
        assert!(BaveInstance::new(2, 1, bad_sum).is_err());
        let unequal = vec![
            Tuple {
                vars: vec![0, 1],
                p: 0.5,
            },
            Tuple {
                vars: vec![0, 1],
                p: 0.5,
            },
        ];
        assert!(BaveInstance::new(2, 1, unequal.clone()).is_err());
        let e = BaveInstance::empirical(2, 1, unequal).unwrap();
        assert!((e.marginal_gap() - 0.5).abs() < 1e-15);
        assert!(BaveInstance::new(
            2,
            1,
            vec![Tuple {
                vars: vec![0, 2],
                p: 1.0
            }]
        )
        .is_err());
    }

    #[test]
    fn l1_variance_matches_double_sum() {
        let mu: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
        let f: [f64; 4] = [0.7, 0.1, 0.9, 0.1];
        let mut direct = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                direct += mu[a] * mu[b] * (f[a] - f[b]).abs();
            }
        }
        assert!((l1_variance(&mu, &f) - direct).abs() < 1e-15);
    }

    #[test]
    fn graph_instance_shapes() {
        let c4 = graph_to_instance(&corpus::cycle(4).unwrap()).unwrap();
        assert_eq!((c4.tuples().len(), c4.d()), (8, 2));
        assert!(c4.tuples().iter().all(|t| t.p == 0.125));
        let k2 = graph_to_instance(&corpus::clique(2).unwrap()).unwrap();
        assert_eq!((k2.tuples().len(), k2.d()), (2, 1));
        let pet = graph_to_instance(&corpus::petersen().unwrap()).unwrap();
        assert_eq!((pet.tuples().len(), pet.d()), (30, 3));
        assert!(pet.marginal_gap() < 1e-15);
        assert!(matches!(
            graph_to_instance(&corpus::star(3).unwrap()),
            Err(Error::NotRegular)
        ));
    }

    #[test]
    fn indicator_value_matches_boundary_count() {
        for g in [
            corpus::petersen().unwrap(),
            corpus::cycle(6).unwrap(),
            corpus::hypercube(3).unwrap(),
        ] {
            let inst = graph_to_instance(&g).unwrap();
            let n = g.n();
            for bits in 1..(1u64 << n) - 1 {
                let s = Cut::from_bits(n, bits);
                let f = Assignment::indicator(n, s.members().iter().copied()).unwrap();
                let v = bave_value(&inst, &f).unwrap();
                let mut both = neighborhood(&g, &s);
                both.extend(neighborhood(&g, &s.complement()));
                assert!((v.numerator - both.len() as f64 / n as f64).abs() < 1e-12);
                let phi = symmetric_vertex_expansion(&g, &s).unwrap();
                assert!((v.ratio().unwrap() - phi / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn optimum_examples() {
        // mass-1/2 cluster {0,1} never shares a tuple with {2,3}
        let tuples = vec![
            Tuple {
                vars: vec![0, 1],
                p: 0.25,
            },
            Tuple {
                vars: vec![1, 0],
                p: 0.25,
            },
            Tuple {
                vars: vec![2, 3],
                p: 0.25,
            },
            Tuple {
                vars: vec![3, 2],
                p: 0.25,
            },
        ];
        let inst = BaveInstance::new(4, 1, tuples).unwrap();
        let (f, r) = bave_optimum(&inst, DEFAULT_BALANCE).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(f.values(), &[1.0, 1.0, 0.0, 0.0]);

        let g = corpus::cycle(4).unwrap();
        let inst = graph_to_instance(&g).unwrap();
        let (_, r) = bave_optimum(&inst, DEFAULT_BALANCE).unwrap();
        let direct = (1..15u64)
            .map(|b| symmetric_vertex_expansion(&g, &Cut::from_bits(4, b)).unwrap() / 2.0)
            .fold(f64::INFINITY, f64::min);
        assert!((r - direct).abs() < 1e-12);

        let single = BaveInstance::new(
            1,
            1,
            vec![Tuple {
                vars: vec![0, 0],
                p: 1.0,
            }],
        )
        .unwrap();
        assert!(matches!(
            bave_optimum(&single, DEFAULT_BALANCE),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn threshold_reproduces_boolean() {
        let inst = graph_to_instance(&corpus::cycle(6).unwrap()).unwrap();
        let f = Assignment::indicator(6, [0, 1, 2]).unwrap();
        let (g, r) = threshold_round(&inst, &f).unwrap();
        assert_eq!(g, f);
        assert_eq!(r, bave_value(&inst, &f).unwrap().ratio().unwrap());
    }

    #[test]
    fn threshold_two_levels_picks_better_cut() {
        let inst = graph_to_instance(&corpus::cycle(6).unwrap()).unwrap();
        let f = Assignment::new(vec![0.2, 0.2, 0.7, 0.7, 0.7, 0.2]).unwrap();
        let (g, r) = threshold_round(&inst, &f).unwrap();
        assert_eq!(g.values(), &[0.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(r, bave_value(&inst, &g).unwrap().ratio().unwrap());
    }

    fn random_assignment(n: usize, rng: &mut impl rand::Rng) -> Assignment {
        Assignment::new((0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn threshold_exact_for_single_partner() {
        // with one partner per tuple the maximum is a single term, so the
        // level-set integral is exact and rounding never loses
        let mut rng = seed::rng(3);
        for g in corpus::standard_corpus(10) {
            let Ok(inst) = graph_to_instance(&g.graph) else {
                continue;
            };
            let pairs: Vec<Tuple> = inst
                .tuples()
                .iter()
                .map(|t| Tuple {
                    vars: vec![t.vars[0], t.vars[1]],
                    p: t.p,
                })
                .collect();
            let inst = BaveInstance::new(inst.n_vars(), 1, pairs).unwrap();
            for _ in 0..100 {
                let f = random_assignment(inst.n_vars(), &mut rng);
                let before = bave_value(&inst, &f).unwrap().ratio().unwrap();
                let (_, after) = threshold_round(&inst, &f).unwrap();
                assert!(after <= before * (1.0 + 1e-12), "{}", g.name);
            }
        }
    }

    #[test]
    fn threshold_within_factor_two() {
        let mut rng = seed::rng(4);
        for g in corpus::standard_corpus(10) {
            let Ok(inst) = graph_to_instance(&g.graph) else {
                continue;
            };
            for _ in 0..100 {
                let f = random_assignment(inst.n_vars(), &mut rng);
                let before = bave_value(&inst, &f).unwrap().ratio().unwrap();
                let (_, after) = threshold_round(&inst, &f).unwrap();
                assert!(after <= 2.0 * before * (1.0 + 1e-12), "{}", g.name);
            }
        }
    }

    #[test]
    fn threshold_can_lose_when_partners_straddle() {
        // F(x) sits strictly between its two neighbors on C4, so no level
        // set reproduces the fractional maximum
        let inst = graph_to_instance(&corpus::cycle(4).unwrap()).unwrap();
        let f = Assignment::new(vec![0.5, 0.0, 0.5, 1.0]).unwrap();
        let before = bave_value(&inst, &f).unwrap().ratio().unwrap();
        let (_, after) = threshold_round(&inst, &f).unwrap();
        assert!((before - 4.0 / 3.0).abs() < 1e-12);
        assert!((after - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniformize_two_clouds() {
        let tuples = vec![
            Tuple {
                vars: vec![0, 0],
                p: 0.5,
            },
            Tuple {
                vars: vec![0, 1],
                p: 0.25,
            },
            Tuple {
                vars: vec![1, 0],
                p: 0.25,
            },
        ];
        let inst = BaveInstance::new(2, 1, tuples).unwrap();
        let u = uniformize(&inst, Some(8)).unwrap();
        assert_eq!(u.origin, vec![0, 0, 0, 0, 0, 0, 1, 1]);
        assert!(u.deleted.is_empty());
        assert!(u.instance.mu().iter().all(|m| (m - 0.125).abs() < 1e-12));
        assert!(!u.instance.is_empirical());
    }

    #[test]
    fn uniformize_deletes_light_variables() {
        // n = 3: variables below 1/18 are deleted
        let tuples = vec![
            Tuple {
                vars: vec![0, 1],
                p: 0.48,
            },
            Tuple {
                vars: vec![1, 0],
                p: 0.48,
            },
            Tuple {
                vars: vec![2, 2],
                p: 0.04,
            },
        ];
        let inst = BaveInstance::new(3, 1, tuples).unwrap();
        let u = uniformize(&inst, None).unwrap();
        assert_eq!(u.deleted, vec![2]);
        assert!(!u.origin.contains(&2));
        assert_eq!(u.t, 18);
    }

    #[test]
    fn uniformize_symmetric_instance_keeps_optimum() {
        let inst = graph_to_instance(&corpus::cycle(4).unwrap()).unwrap();
        let u = uniformize(&inst, Some(8)).unwrap();
        assert_eq!(u.instance.n_vars(), 8);
        let (_, a) = bave_optimum(&inst, DEFAULT_BALANCE).unwrap();
        let (_, b) = bave_optimum(&u.instance, DEFAULT_BALANCE).unwrap();
        assert!(b <= a + 1e-12);
        assert!(b >= a / 4.0 - 1e-12);
    }

    #[test]
    fn sampled_graph_from_c4() {
        let g = corpus::cycle(4).unwrap();
        let inst = graph_to_instance(&g).unwrap();
        let s = instance_to_graph(&inst, 2, 5).unwrap();
        for (a, b) in s.graph.edges() {
            assert!(g.has_edge(s.ids[a], s.ids[b]));
        }
    }

    #[test]
    fn sampled_graph_deterministic_tuples() {
        // one tuple per first coordinate: the union is deterministic
        let tuples = (0..4)
            .map(|x| Tuple {
                vars: vec![x, (x + 1) % 4],
                p: 0.25,
            })
            .collect();
        let inst = BaveInstance::new(4, 1, tuples).unwrap();
        let s = instance_to_graph(&inst, 3, 1).unwrap();
        assert_eq!(s.graph.edges(), corpus::cycle(4).unwrap().edges());
        assert!(s.multi_degrees.iter().all(|&k| k <= 6));
        assert_eq!(s.deleted_fraction, 0.0);
    }

    #[test]
    fn json_round_trip() {
        let inst = graph_to_instance(&corpus::cycle(4).unwrap()).unwrap();
        let back = BaveInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        assert!(BaveInstance::from_json("{\"variables\": 2}").is_err());
    }

    #[test]
    fn interner_is_dense() {
        let mut i = Interner::default();
        assert_eq!(i.id("a"), 0);
        assert_eq!(i.id("b"), 1);
        assert_eq!(i.id("a"), 0);
        assert_eq!(i.labels(), &["a", "b"]);
    }
}

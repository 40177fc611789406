//! Reduction from a regular graph to a folded BAVE instance: product steps
//! of the smoothed graph `G_η = (1−η)G + ηK_V` paired with the gadget chain,
//! then folded by forgetting coordinate order and the `{t', s'}` states.

use std::fmt;

use rand::Rng as _;
use serde::Serialize;

use crate::bave::{bave_value, Assignment, BaveInstance, Interner, Tuple};
use crate::error::{Error, Result};
use crate::gadget::{build_chain, GadgetChain, STATE_NAMES, T};
use crate::graph::WeightedGraph;
use crate::seed;

pub const MIN_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionParams {
    pub r: usize,
    pub epsilon: f64,
    pub d: usize,
    pub eta: f64,
    pub samples: usize,
    pub seed: u64,
}

impl ReductionParams {
    /// Parameters with the default smoothing `η = ε / (100 d)`.
    pub fn new(r: usize, epsilon: f64, d: usize, samples: usize, seed: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("R must be at least 1".into()));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("d must be at least 1".into()));
        }
        build_chain(epsilon)?;
        Ok(Self {
            r,
            epsilon,
            d,
            eta: epsilon / (100.0 * d as f64),
            samples,
            seed,
        })
    }

    /// `R = 1/δ`; rejects `δ` whose reciprocal is not an integer.
    pub fn from_delta(
        delta: f64,
        epsilon: f64,
        d: usize,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let r = 1.0 / delta;
        if !(delta > 0.0 && delta <= 1.0) || (r - r.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "1/delta = {r} is not a positive integer"
            )));
        }
        Self::new(r.round() as usize, epsilon, d, samples, seed)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("eta {eta} outside [0, 1]")));
        }
        Ok(Self { eta, ..self })
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.r as f64
    }
}

/// One draw: the center `A` and the `d + 1` slots `(B, x), (C_1, y_1), …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unfolded {
    pub center: Vec<usize>,
    pub slots: Vec<(Vec<usize>, Vec<u8>)>,
}

/// Validated sampler for unfolded tuples.
#[derive(Debug, Clone)]
pub struct UnfoldedSampler<'a> {
    graph: &'a WeightedGraph,
    chain: GadgetChain,
    params: ReductionParams,
}

impl<'a> UnfoldedSampler<'a> {
    pub fn new(graph: &'a WeightedGraph, params: ReductionParams) -> Result<Self> {
        match graph.regular_degree() {
            Some(k) if k > 0 => {}
            _ => return Err(Error::NotRegular),
        }
        Ok(Self {
            graph,
            chain: build_chain(params.epsilon)?,
            params,
        })
    }

    pub fn chain(&self) -> &GadgetChain {
        &self.chain
    }

    fn smoothed_step(&self, a: usize, rng: &mut seed::Rng) -> usize {
        if rng.random::<f64>() < self.params.eta {
            rng.random_range(0..self.graph.n())
        } else {
            let nb = self.graph.neighbors(a);
            nb[rng.random_range(0..nb.len())]
        }
    }

    pub fn sample(&self, rng: &mut seed::Rng) -> Unfolded {
        let ReductionParams { r, d, .. } = self.params;
        let n = self.graph.n();
        let center: Vec<usize> = (0..r).map(|_| rng.random_range(0..n)).collect();
        let step = |rng: &mut seed::Rng| -> Vec<usize> {
            center.iter().map(|&a| self.smoothed_step(a, rng)).collect()
        };
        let b = step(rng);
        let x: Vec<u8> = (0..r).map(|_| self.chain.sample_state(rng)).collect();
        let mut slots = Vec::with_capacity(d + 1);
        for _ in 0..d {
            let c = step(rng);
            let y = x.iter().map(|&s| self.chain.step(s, rng)).collect();
            slots.push((c, y));
        }
        slots.insert(0, (b, x));
        Unfolded { center, slots }
    }
}

/// A single unfolded tuple from `seed`.
pub fn sample_unfolded(g: &WeightedGraph, params: ReductionParams, seed: u64) -> Result<Unfolded> {
    let sampler = UnfoldedSampler::new(g, params)?;
    Ok(sampler.sample(&mut seed::rng(seed::derive(seed, "unfolded"))))
}

/// Sorted multiset of `(graph vertex, chain state)` pairs, states in `{s, t}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FoldedVertex(Vec<(usize, u8)>);

impl FoldedVertex {
    pub fn pairs(&self) -> &[(usize, u8)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Applies a relabeling of the graph vertices.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut pairs: Vec<_> = self.0.iter().map(|&(v, s)| (perm[v], s)).collect();
        pairs.sort_unstable();
        Self(pairs)
    }
}

impl fmt::Display for FoldedVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (v, s)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({v},{})", STATE_NAMES[*s as usize])?;
        }
        write!(f, "}}")
    }
}

pub fn fold(a: &[usize], x: &[u8]) -> Result<FoldedVertex> {
    if a.len() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "graph part has length {}, chain part {}",
            a.len(),
            x.len()
        )));
    }
    let mut pairs: Vec<(usize, u8)> = a
        .iter()
        .zip(x)
        .filter(|(_, &s)| s <= T)
        .map(|(&v, &s)| (v, s))
        .collect();
    pairs.sort_unstable();
    Ok(FoldedVertex(pairs))
}

/// The sampled folded instance and the folded vertex behind each variable.
#[derive(Debug, Clone)]
pub struct FoldedInstance {
    pub instance: BaveInstance,
    pub vertices: Vec<FoldedVertex>,
    pub params: ReductionParams,
}

pub fn build_folded_instance(g: &WeightedGraph, params: ReductionParams) -> Result<FoldedInstance> {
    if params.samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "samples must be at least {MIN_SAMPLES}"
        )));
    }
    let sampler = UnfoldedSampler::new(g, params)?;
    let mut rng = seed::rng(seed::derive(params.seed, "folded-instance"));
    let mut names = Interner::default();
    let p = 1.0 / params.samples as f64;
    let mut tuples = Vec::with_capacity(params.samples);
    for _ in 0..params.samples {
        let u = sampler.sample(&mut rng);
        let vars = u
            .slots
            .iter()
            .map(|(a, x)| fold(a, x).map(|v| names.id(v)))
            .collect::<Result<Vec<_>>>()?;
        tuples.push(Tuple { vars, p });
    }
    let vertices = names.labels().to_vec();
    let instance = BaveInstance::empirical(vertices.len(), params.d, tuples)?;
    Ok(FoldedInstance {
        instance,
        vertices,
        params,
    })
}

fn count_in(v: &FoldedVertex, in_s: &[bool]) -> usize {
    v.pairs().iter().filter(|(u, _)| in_s[*u]).count()
}

/// `F'(v) = 1` iff exactly one pair of `v` has its graph vertex in `S`.
pub fn completeness_value(v: &FoldedVertex, in_s: &[bool]) -> f64 {
    if count_in(v, in_s) == 1 {
        1.0
    } else {
        0.0
    }
}

pub fn membership(n: usize, s: &[usize]) -> Result<Vec<bool>> {
    let mut in_s = vec![false; n];
    for &v in s {
        if v >= n {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
        }
        in_s[v] = true;
    }
    Ok(in_s)
}

pub fn completeness_assignment(folded: &FoldedInstance, in_s: &[bool]) -> Result<Assignment> {
    Assignment::new(
        folded
            .vertices
            .iter()
            .map(|v| completeness_value(v, in_s))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletenessEstimate {
    pub numerator: f64,
    pub numerator_se: f64,
    /// Plug-in `Var₁` under the instance's empirical `μ`.
    pub var1: f64,
    /// `|F'(X) − F'(Y)|` over disjoint pairs of independent `x`-slots.
    pub var1_paired: f64,
    pub var1_se: f64,
    pub samples: usize,
}

/// Value of the completeness assignment on the sampled instance with
/// standard errors from the i.i.d. tuples.
pub fn estimate_completeness(
    folded: &FoldedInstance,
    in_s: &[bool],
) -> Result<CompletenessEstimate> {
    let f = completeness_assignment(folded, in_s)?;
    let fv = f.values();
    let tuples = folded.instance.tuples();
    let per_tuple: Vec<f64> = tuples
        .iter()
        .map(|t| {
            let x = fv[t.vars[0]];
            t.vars[1..]
                .iter()
                .map(|&y| (fv[y] - x).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let paired: Vec<f64> = tuples
        .chunks_exact(2)
        .map(|pair| (fv[pair[0].vars[0]] - fv[pair[1].vars[0]]).abs())
        .collect();
    let (numerator, numerator_se) = mean_se(&per_tuple);
    let (var1_paired, var1_se) = mean_se(&paired);
    let value = bave_value(&folded.instance, &f)?;
    Ok(CompletenessEstimate {
        numerator,
        numerator_se,
        var1: value.denominator,
        var1_paired,
        var1_se,
        samples: tuples.len(),
    })
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub kind: String,
    pub ratio: Option<f64>,
}

/// Ratios of heuristic assignments on the folded instance, recorded next to
/// each other with no threshold: exactly-one-in-`S`, at-least-one-in-`S`,
/// and random balanced assignments.
pub fn soundness_probe(
    folded: &FoldedInstance,
    in_s: &[bool],
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbeRecord>> {
    let ratio = |values: Vec<f64>| -> Result<Option<f64>> {
        let v = bave_value(&folded.instance, &Assignment::new(values)?)?;
        Ok(v.ratio().ok())
    };
    let mut out = vec![
        ProbeRecord {
            kind: "exactly-one-in-S".into(),
            ratio: ratio(
                folded
                    .vertices
                    .iter()
                    .map(|v| completeness_value(v, in_s))
                    .collect(),
            )?,
        },
        ProbeRecord {
            kind: "at-least-one-in-S".into(),
            ratio: ratio(
                folded
                    .vertices
                    .iter()
                    .map(|v| if count_in(v, in_s) > 0 { 1.0 } else { 0.0 })
                    .collect(),
            )?,
        },
    ];
    let mut rng = seed::rng(seed::derive(seed, "reduction-probe"));
    for _ in 0..trials {
        let values = (0..folded.vertices.len())
            .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
            .collect();
        out.push(ProbeRecord {
            kind: "random".into(),
            ratio: ratio(values)?,
        });
    }
    Ok(out)
}

//! Gaussian rounding of the `λ∞` relaxation into a vertex cut.
//!
//! The pipeline: subdivide every edge of `G` to get `G'`, solve the
//! relaxation on `G'`, project the embedding onto random Gaussian directions,
//! square the positive part, sweep the level sets, and map the best set back
//! to `G`.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    boundary_ratio, symmetric_vertex_expansion, vertex_expansion, Cut, WeightedGraph,
};
use crate::sdp::{self, SdpSolution, SolveOptions};
use crate::seed;
use crate::transforms::{edge_subdivision_weighted, Subdivision};

/// Multiplier in the guarantee `φ^V(S) ≤ C·√(SDPval·ln d)`.
pub const BOUND_CONSTANT: f64 = 576.0;

/// Eigenvalues below this are dropped when factoring the Gram matrix.
const RANK_TOL: f64 = 1e-9;

/// `x_i = ⟨v_i, g⟩` for a single standard Gaussian vector `g`.
pub fn gaussian_project(embedding: &[Vec<f64>], seed: u64) -> Vec<f64> {
    let dim = embedding.first().map_or(0, Vec::len);
    let mut rng = seed::rng(seed);
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    embedding
        .iter()
        .map(|v| v.iter().zip(&g).map(|(a, b)| a * b).sum())
        .collect()
}

/// Vertex ids sorted by decreasing `y`, ties by increasing id.
fn descending_order(y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    order
}

/// `Σ_i w_i max_{j∼i} |y_j − y_i| / Σ_i w_i y_i`.
pub fn levelset_alpha(g: &WeightedGraph, y: &[f64]) -> f64 {
    alpha_with(g, y, |i| g.weight(i))
}

fn alpha_with(g: &WeightedGraph, y: &[f64], w: impl Fn(usize) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..g.n() {
        let m = g
            .neighbors(i)
            .iter()
            .map(|&j| (y[j] - y[i]).abs())
            .fold(0.0, f64::max);
        num += w(i) * m;
        den += w(i) * y[i];
    }
    num / den
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub cut: Cut,
    /// `w(N(S)) / w(S)` of the returned prefix.
    pub ratio: f64,
    /// The level-set bound `α` the ratio is guaranteed not to exceed.
    pub alpha: f64,
}

/// Scans the prefixes of `supp(y)` in decreasing order of `y` and returns
/// the proper one minimizing `w(N(S))/w(S)`.
pub fn sweep_levelset(g: &WeightedGraph, y: &[f64]) -> Result<Sweep> {
    if y.len() != g.n() {
        return Err(Error::InvalidArgument(
            "vector length does not match graph".into(),
        ));
    }
    if let Some(v) = y.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "entry {v} is not a finite nonnegative value"
        )));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let n = g.n();
    let order = descending_order(y);
    let mut mask = vec![false; n];
    let mut best: Option<(f64, usize)> = None;
    for (j, &v) in order.iter().enumerate() {
        if y[v] == 0.0 || j + 1 == n {
            break;
        }
        mask[v] = true;
        let cut = Cut::from_mask(mask.clone());
        if let Ok(r) = boundary_ratio(g, &cut) {
            if best.is_none_or(|(b, _)| r < b) {
                best = Some((r, j + 1));
            }
        }
    }
    let (ratio, len) = best.ok_or(Error::ZeroVector)?;
    let cut = Cut::new(n, order[..len].iter().copied())?;
    Ok(Sweep {
        cut,
        ratio,
        alpha: levelset_alpha(g, y),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transfer {
    pub y: Vec<f64>,
    /// Whether `z` was negated before taking the positive part.
    pub flipped: bool,
}

/// `y_i = (z_i⁺)²` after negating `z` when its positive support is strictly
/// larger than its negative support. If that orientation has no positive
/// part the other one is used.
pub fn square_transfer(z: &[f64]) -> Result<Transfer> {
    let pos = z.iter().filter(|&&v| v > 0.0).count();
    let neg = z.iter().filter(|&&v| v < 0.0).count();
    if pos == 0 && neg == 0 {
        return Err(Error::ZeroVector);
    }
    let flipped = if pos > neg { neg > 0 } else { pos == 0 };
    let y = z
        .iter()
        .map(|&v| if flipped { -v } else { v }.max(0.0).powi(2))
        .collect();
    Ok(Transfer { y, flipped })
}

/// The two sides of the squaring inequality for `z` and its transfer `y`:
/// `(Σ_i max_{j∼i} |y_i − y_j| / Σ_i y_i, λ∞-quotient of z)`.
pub fn transfer_functionals(g: &WeightedGraph, z: &[f64], t: &Transfer) -> Result<(f64, f64)> {
    let lhs = alpha_with(g, &t.y, |_| 1.0);
    let q = sdp::lambda_inf_quotient(g, z)?;
    Ok((lhs, q))
}

/// Best prefix of length `1..=max_len` of the decreasing order of `y` under
/// the symmetric functional `Φ^V`.
pub fn sweep_symmetric(g: &WeightedGraph, y: &[f64], max_len: usize) -> Option<(Cut, f64)> {
    let n = g.n();
    let order = descending_order(y);
    let mut mask = vec![false; n];
    let mut best: Option<(Cut, f64)> = None;
    for &v in order.iter().take(max_len.min(n - 1)) {
        mask[v] = true;
        let cut = Cut::from_mask(mask.clone());
        if let Ok(val) = symmetric_vertex_expansion(g, &cut) {
            if best.as_ref().is_none_or(|(_, b)| val < *b) {
                best = Some((cut, val));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOptions {
    pub reps: usize,
    pub seed: u64,
    pub solve: SolveOptions,
}

impl Default for RoundOptions {
    fn default() -> Self {
        Self {
            reps: 20,
            seed: 0,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub seed: u64,
    /// `λ∞` quotient of the projection on `G'`, when nondegenerate.
    pub quotient: Option<f64>,
    /// Best `Φ^V_{G'}` over the sweep prefixes.
    pub symmetric: Option<f64>,
    /// Best `φ^V_G` among the mapped candidates of this repetition.
    pub achieved: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    /// Relaxation value on `G'`.
    pub sdpval: f64,
    /// Maximum degree of `G'`.
    pub degree: usize,
    /// `576·√(sdpval·ln degree)`.
    pub bound: f64,
    /// `φ^V_G` of the returned cut.
    pub achieved: f64,
    pub cut: Vec<usize>,
    pub per_rep: Vec<RepOutcome>,
    /// Set when `G` is disconnected and a component was returned directly.
    pub disconnected: bool,
}

pub fn guarantee(sdpval: f64, degree: usize) -> f64 {
    BOUND_CONSTANT * (sdpval.max(0.0) * (degree as f64).ln()).sqrt()
}

/// Candidate cuts of `G` obtained from a cut of `G'`: the set of original
/// vertices with all `G'`-neighbors inside, the plain restriction, and both
/// complements.
fn mapped_candidates(sub: &Subdivision, s: &Cut) -> Vec<Cut> {
    let a = sub.project(s);
    let b = sub.restrict(s);
    [a.complement(), b.complement(), a, b]
        .into_iter()
        .filter(Cut::is_proper)
        .collect()
}

/// Rounds the relaxation of `G'`; `sol`, when given, must be a solution for
/// `G'` (the edge subdivision of `g`) and skips the solve.
pub fn round(
    g: &WeightedGraph,
    sol: Option<&SdpSolution>,
    opts: RoundOptions,
) -> Result<(Cut, RoundReport)> {
    if opts.reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let n = g.n();
    if n < 2 {
        return Err(Error::TooSmall(n));
    }
    if !g.is_connected() {
        let comps = g.components();
        let cut = Cut::new(n, comps[0].iter().copied())?;
        let achieved = vertex_expansion(g, &cut)?;
        let report = RoundReport {
            sdpval: 0.0,
            degree: g.max_degree(),
            bound: 0.0,
            achieved,
            cut: cut.members().to_vec(),
            per_rep: Vec::new(),
            disconnected: true,
        };
        return Ok((cut, report));
    }

    let sub = edge_subdivision_weighted(g);
    let gp = &sub.graph;
    let owned;
    let sol = match sol {
        Some(s) if s.n == gp.n() => s,
        Some(s) => {
            return Err(Error::InvalidArgument(format!(
                "solution has {} vertices, subdivided graph has {}",
                s.n,
                gp.n()
            )))
        }
        None => {
            owned = sdp::solve(&sdp::build_sdp(gp)?, opts.solve)?;
            &owned
        }
    };
    let embedding = sdp::factorize(sol, RANK_TOL)?;
    let degree = gp.max_degree();
    let half = gp.n() / 2;

    let mut best: Option<(Cut, f64)> = None;
    let mut per_rep = Vec::with_capacity(opts.reps);
    for rep in 0..opts.reps {
        let sub_seed = seed::derive_index(opts.seed, rep as u64);
        let x = gaussian_project(&embedding, sub_seed);
        let mut outcome = RepOutcome {
            rep,
            seed: sub_seed,
            quotient: sdp::lambda_inf_quotient(gp, &x).ok(),
            symmetric: None,
            achieved: None,
        };
        if let Ok(t) = square_transfer(&x) {
            let order = descending_order(&t.y);
            let mut from_gp: Vec<Cut> = Vec::new();
            let mut mask = vec![false; gp.n()];
            for &v in order.iter().take(half.max(1)) {
                mask[v] = true;
                from_gp.push(Cut::from_mask(mask.clone()));
            }
            outcome.symmetric = sweep_symmetric(gp, &t.y, half.max(1)).map(|(_, v)| v);
            if let Ok(sw) = sweep_levelset(gp, &t.y) {
                from_gp.push(sw.cut);
            }
            for s in &from_gp {
                for c in mapped_candidates(&sub, s) {
                    let val = vertex_expansion(g, &c)?;
                    if outcome.achieved.is_none_or(|a| val < a) {
                        outcome.achieved = Some(val);
                    }
                    let better = match &best {
                        None => true,
                        Some((bc, bv)) => {
                            val < bv - 1e-12 || (val <= bv + 1e-12 && c.members() < bc.members())
                        }
                    };
                    if better {
                        best = Some((c, val));
                    }
                }
            }
        }
        per_rep.push(outcome);
    }
    let (cut, achieved) = best.ok_or(Error::NoCut)?;
    let report = RoundReport {
        sdpval: sol.value,
        degree,
        bound: guarantee(sol.value, degree),
        achieved,
        cut: cut.members().to_vec(),
        per_rep,
        disconnected: false,
    };
    Ok((cut, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::exact::exact_min_vertex_expansion;

    #[test]
    fn projection_is_deterministic() {
        let emb = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        assert_eq!(gaussian_project(&emb, 3), gaussian_project(&emb, 3));
        assert_ne!(gaussian_project(&emb, 3), gaussian_project(&emb, 4));
        let zero = vec![vec![0.0; 3]; 4];
        assert!(gaussian_project(&zero, 1).iter().all(|&v| v == 0.0));
        let x = gaussian_project(&emb, 3);
        assert!((x[2] - 0.5 * (x[0] + x[1])).abs() < 1e-15);
    }

    #[test]
    fn projection_moments() {
        let emb = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let trials = 20_000;
        let (mut m0, mut m00, mut m01) = (0.0, 0.0, 0.0);
        for s in 0..trials {
            let x = gaussian_project(&emb, s);
            m0 += x[0];
            m00 += x[0] * x[0];
            m01 += x[0] * x[1];
        }
        let t = trials as f64;
        assert!((m0 / t).abs() < 4.0 / t.sqrt());
        assert!((m00 / t - 1.0).abs() < 6.0 * (2.0 / t).sqrt());
        assert!((m01 / t).abs() < 4.0 / t.sqrt());
    }

    #[test]
    fn sweep_examples() {
        let p3 = corpus::path(3).unwrap();
        // {0} has ratio 1 but the longer prefix {0,1} has ratio 1/2
        let s = sweep_levelset(&p3, &[2.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.alpha, 1.0);
        assert_eq!(s.cut.members(), &[0, 1]);
        assert_eq!(s.ratio, 0.5);

        let tt = corpus::two_cliques(3).unwrap();
        let s = sweep_levelset(&tt, &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.ratio, 0.0);

        let star = corpus::star(3).unwrap();
        let s = sweep_levelset(&star, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.cut.members(), &[1, 2]);
        assert_eq!(s.ratio, 0.5);
        // both leaves and the center see a jump of 1
        assert_eq!(s.alpha, 1.5);

        assert!(matches!(
            sweep_levelset(&p3, &[0.0; 3]),
            Err(Error::ZeroVector)
        ));
        assert!(sweep_levelset(&p3, &[1.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn transfer_examples() {
        let t = square_transfer(&[1.0, -1.0]).unwrap();
        assert_eq!((t.y.clone(), t.flipped), (vec![1.0, 0.0], false));
        let t = square_transfer(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.y, vec![4.0, 0.0, 0.0, 0.0]);
        let t = square_transfer(&[-2.0, 0.0, -1.0, 0.0]).unwrap();
        assert!(t.flipped);
        assert_eq!(t.y, vec![4.0, 0.0, 1.0, 0.0]);
        let t = square_transfer(&[1.0, 1.0, -3.0]).unwrap();
        assert!(t.flipped);
        assert_eq!(t.y, vec![0.0, 0.0, 9.0]);
        assert!(matches!(
            square_transfer(&[0.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn round_k2() {
        let g = corpus::clique(2).unwrap();
        let (cut, rep) = round(
            &g,
            None,
            RoundOptions {
                reps: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rep.achieved, 2.0);
        assert_eq!(cut.len(), 1);
        assert_eq!(rep.degree, 2);
        assert!((rep.bound - guarantee(rep.sdpval, 2)).abs() < 1e-12);
    }

    #[test]
    fn round_disconnected_short_circuits() {
        let g = corpus::two_cliques(3).unwrap();
        let (cut, rep) = round(&g, None, RoundOptions::default()).unwrap();
        assert_eq!(rep.achieved, 0.0);
        assert!(rep.disconnected);
        assert_eq!(cut.members(), &[0, 1, 2]);
    }

    #[test]
    fn round_c4_reproducible_and_bounded() {
        let g = corpus::cycle(4).unwrap();
        let opts = RoundOptions {
            seed: 9,
            ..Default::default()
        };
        let (a, ra) = round(&g, None, opts).unwrap();
        let (b, rb) = round(&g, None, opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.achieved, rb.achieved);
        assert!(ra.achieved <= ra.bound);
        let opt = exact_min_vertex_expansion(&g, false, None).unwrap().value;
        assert!((ra.achieved - opt).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_solution() {
        let g = corpus::cycle(4).unwrap();
        let sol = sdp::solve(&sdp::build_sdp(&g).unwrap(), SolveOptions::default()).unwrap();
        assert!(matches!(
            round(&g, Some(&sol), RoundOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }
}

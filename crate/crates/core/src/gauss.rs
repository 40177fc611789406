//! Monte Carlo checks on the Gaussian graph: `X ∼ N(0, I)` and neighbors
//! `Y ∼ N(ΛX, Σ)` with diagonal `Λ, Σ`, plus a few one-dimensional
//! probability facts used alongside it.

use libm::erf;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gadget::GadgetChain;
use crate::seed;

/// Samples per batch; every batch has its own sub-seed, so results do not
/// depend on the number of worker threads.
const BATCH: usize = 10_000;

pub const MIN_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianGraphSpec {
    pub lambda: Vec<f64>,
    pub sigma: Vec<f64>,
    pub d: usize,
    /// `min_i σ_i`, the `ε` with `Σ ⪰ εI`.
    pub eps_floor: f64,
}

impl GaussianGraphSpec {
    pub fn new(lambda: Vec<f64>, sigma: Vec<f64>, d: usize) -> Result<Self> {
        if lambda.is_empty() || lambda.len() != sigma.len() {
            return Err(Error::InvalidArgument(
                "lambda and sigma must be nonempty and of equal length".into(),
            ));
        }
        if lambda.iter().any(|l| !(l.abs() <= 1.0)) {
            return Err(Error::InvalidArgument(
                "|lambda_i| must be at most 1".into(),
            ));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("sigma_i must be positive".into()));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("d must be at least 1".into()));
        }
        let eps_floor = sigma.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            lambda,
            sigma,
            d,
            eps_floor,
        })
    }

    /// Stationary graph from the chain's nontrivial eigenvalues:
    /// `Λ = (λ_1, λ_2, λ_3)` and `Σ = I − Λ²`, so `Y ∼ N(0, I)` as well.
    pub fn from_chain(h: &GadgetChain, d: usize) -> Result<Self> {
        let lambda: Vec<f64> = h.eigenvalues[1..].to_vec();
        let sigma = lambda.iter().map(|l| 1.0 - l * l).collect();
        Self::new(lambda, sigma, d)
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    fn neighbor(&self, x: &[f64], rng: &mut seed::Rng, out: &mut [f64]) {
        for i in 0..x.len() {
            let z: f64 = StandardNormal.sample(rng);
            out[i] = self.lambda[i] * x[i] + self.sigma[i].sqrt() * z;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndicatorSet {
    /// `⟨direction, x⟩ ≤ offset`.
    Halfspace {
        direction: Vec<f64>,
        offset: f64,
    },
    /// `‖x‖ ≤ radius`.
    Ball {
        radius: f64,
    },
    /// `a ≤ ⟨direction, x⟩ ≤ b`.
    Band {
        direction: Vec<f64>,
        a: f64,
        b: f64,
    },
    Everything,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl IndicatorSet {
    /// `x_1 ≤ offset` in dimension `n`.
    pub fn coordinate_halfspace(n: usize, offset: f64) -> Self {
        let mut direction = vec![0.0; n];
        direction[0] = 1.0;
        Self::Halfspace { direction, offset }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Halfspace { direction, offset } => dot(direction, x) <= *offset,
            Self::Ball { radius } => dot(x, x) <= radius * radius,
            Self::Band { direction, a, b } => {
                let v = dot(direction, x);
                *a <= v && v <= *b
            }
            Self::Everything => true,
        }
    }

    pub fn indicator(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            1.0
        } else {
            0.0
        }
    }
}

/// Running sums for a mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn se(&self) -> f64 {
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Runs `work(batch_seed, count)` over fixed-size batches on scoped threads
/// and returns the results in batch order.
fn run_batches<T: Send>(
    samples: usize,
    seed: u64,
    work: impl Fn(u64, usize) -> T + Sync,
) -> Vec<T> {
    let batches = samples.div_ceil(BATCH);
    let count = |b: usize| BATCH.min(samples - b * BATCH);
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(batches)
        .max(1);
    let mut results: Vec<Option<T>> = (0..batches).map(|_| None).collect();
    std::thread::scope(|scope| {
        let work = &work;
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    (t..batches)
                        .step_by(threads)
                        .map(|b| (b, work(seed::derive_index(seed, b as u64), count(b))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (b, r) in h.join().expect("worker panicked") {
                results[b] = Some(r);
            }
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("batch result"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoEstimate {
    pub d: usize,
    pub numerator: f64,
    pub numerator_se: f64,
    pub denominator: f64,
    pub denominator_se: f64,
    /// `None` when the estimated denominator is zero.
    pub ratio: Option<f64>,
    pub ratio_se: Option<f64>,
}

type Functional<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Estimates `E_X max_{j ≤ d} |F(X) − F(Y_j)|` and `E|F(X') − F(Y')|`
/// (independent standard Gaussians) for every function in `fs` and every `d`
/// in `ds`, all on the same random draws. Indexed `[function][d]`.
pub fn estimate_functionals(
    spec: &GaussianGraphSpec,
    fs: &[Functional<'_>],
    ds: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<IsoEstimate>>> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "samples must be at least {MIN_SAMPLES}"
        )));
    }
    if ds.is_empty() || ds.contains(&0) {
        return Err(Error::InvalidArgument("d values must be at least 1".into()));
    }
    let n = spec.n();
    let dmax = *ds.iter().max().unwrap();
    let num_seed = seed::derive(seed, "iso-numerator");
    let den_seed = seed::derive(seed, "iso-denominator");

    let numerators = run_batches(samples, num_seed, |s, count| {
        let mut rng = seed::rng(s);
        let mut acc = vec![vec![Moments::default(); ds.len()]; fs.len()];
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut fx = vec![0.0; fs.len()];
        let mut running = vec![0.0f64; fs.len()];
        for _ in 0..count {
            for v in x.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for (k, f) in fs.iter().enumerate() {
                fx[k] = f(&x);
                running[k] = 0.0;
            }
            for j in 1..=dmax {
                spec.neighbor(&x, &mut rng, &mut y);
                for (k, f) in fs.iter().enumerate() {
                    running[k] = running[k].max((f(&y) - fx[k]).abs());
                }
                for (di, &d) in ds.iter().enumerate() {
                    if d == j {
                        for k in 0..fs.len() {
                            acc[k][di].push(running[k]);
                        }
                    }
                }
            }
        }
        acc
    });
    let denominators = run_batches(samples, den_seed, |s, count| {
        let mut rng = seed::rng(s);
        let mut acc = vec![Moments::default(); fs.len()];
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for _ in 0..count {
            for i in 0..n {
                a[i] = StandardNormal.sample(&mut rng);
                b[i] = StandardNormal.sample(&mut rng);
            }
            for (k, f) in fs.iter().enumerate() {
                acc[k].push((f(&a) - f(&b)).abs());
            }
        }
        acc
    });

    let mut out = Vec::with_capacity(fs.len());
    for k in 0..fs.len() {
        let mut den = Moments::default();
        for batch in &denominators {
            den.merge(&batch[k]);
        }
        let row = ds
            .iter()
            .enumerate()
            .map(|(di, &d)| {
                let mut num = Moments::default();
                for batch in &numerators {
                    num.merge(&batch[k][di]);
                }
                estimate_from(d, &num, &den)
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

fn estimate_from(d: usize, num: &Moments, den: &Moments) -> IsoEstimate {
    let (nm, ns, dm, dsd) = (num.mean(), num.se(), den.mean(), den.se());
    let (ratio, ratio_se) = if dm > 0.0 {
        let r = nm / dm;
        // independent draws: delta method without a covariance term
        let rel = if nm > 0.0 { (ns / nm).powi(2) } else { 0.0 } + (dsd / dm).powi(2);
        (Some(r), Some(r * rel.sqrt()))
    } else {
        (None, None)
    };
    IsoEstimate {
        d,
        numerator: nm,
        numerator_se: ns,
        denominator: dm,
        denominator_se: dsd,
        ratio,
        ratio_se,
    }
}

/// Isoperimetry estimate for `S` at the spec's `d`.
pub fn estimate_isoperimetry(
    spec: &GaussianGraphSpec,
    set: &IndicatorSet,
    samples: usize,
    seed: u64,
) -> Result<IsoEstimate> {
    Ok(isoperimetry_sweep(spec, set, &[spec.d], samples, seed)?.remove(0))
}

/// Isoperimetry estimates for several `d` with common random numbers: the
/// first `d` neighbors are shared, so the numerator is monotone in `d`
/// sample by sample.
pub fn isoperimetry_sweep(
    spec: &GaussianGraphSpec,
    set: &IndicatorSet,
    ds: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<IsoEstimate>> {
    let f = |x: &[f64]| set.indicator(x);
    Ok(estimate_functionals(spec, &[&f], ds, samples, seed)?.remove(0))
}

/// Total variation distance between `N(0, ε)` and `N(δ, ε)` in one
/// dimension: `2Φ(δ / (2√ε)) − 1`, computed as `erf(δ / (2√(2ε)))`.
pub fn tv_distance_shifted(delta: f64, eps_var: f64) -> Result<f64> {
    if !(delta >= 0.0) || !(eps_var > 0.0) {
        return Err(Error::InvalidArgument(
            "need delta >= 0 and eps_var > 0".into(),
        ));
    }
    Ok(erf(delta / (2.0 * (2.0 * eps_var).sqrt())))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxStats {
    pub d: usize,
    pub mean_max: f64,
    pub mean_max_se: f64,
    pub mean_max_sq: f64,
    pub mean_max_sq_se: f64,
    pub samples: usize,
}

/// `E[max_i Y_i]` and `E[(max_i Y_i)²]` for `d` i.i.d. `N(0, σ²)`.
pub fn max_gaussian_stats(d: usize, sigma: f64, samples: usize, seed: u64) -> Result<MaxStats> {
    if d == 0 || samples < 2 || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(
            "need d >= 1, samples >= 2, sigma > 0".into(),
        ));
    }
    let parts = run_batches(samples, seed::derive(seed, "max-gaussian"), |s, count| {
        let mut rng = seed::rng(s);
        let (mut m, mut m2) = (Moments::default(), Moments::default());
        for _ in 0..count {
            let y = (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                })
                .fold(f64::NEG_INFINITY, f64::max);
            m.push(y);
            m2.push(y * y);
        }
        (m, m2)
    });
    let (mut m, mut m2) = (Moments::default(), Moments::default());
    for (a, b) in &parts {
        m.merge(a);
        m2.merge(b);
    }
    Ok(MaxStats {
        d,
        mean_max: m.mean(),
        mean_max_se: m.se(),
        mean_max_sq: m2.mean(),
        mean_max_sq_se: m2.se(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    /// Wilson score interval at the requested `z`.
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson(successes: usize, trials: usize, z: f64) -> Proportion {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    Proportion {
        successes,
        trials,
        estimate: p,
        lower: (center - half).max(0.0),
        upper: (center + half).min(1.0),
    }
}

/// `AAᵀ / tr(AAᵀ)` for an `n × n` standard Gaussian `A`.
pub fn random_covariance(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let a: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let c = &a * a.transpose();
    let tr = c.trace();
    Ok(c / tr)
}

/// Empirical `Pr[Σ z_i² ≥ 1/2]` for `z ∼ N(0, C)` with `tr C = 1`, with a
/// 3σ Wilson interval. `C` may be singular.
pub fn paley_zygmund_check(cov: &DMatrix<f64>, samples: usize, seed: u64) -> Result<Proportion> {
    let m = cov.nrows();
    if m == 0 || cov.ncols() != m || samples == 0 {
        return Err(Error::InvalidArgument(
            "need a nonempty square covariance and samples >= 1".into(),
        ));
    }
    let tr = cov.trace();
    if (tr - 1.0).abs() > 1e-6 {
        return Err(Error::BadNormalization(tr));
    }
    let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
    if let Some(&worst) = eig.eigenvalues.iter().find(|&&v| v < -1e-9) {
        return Err(Error::NotPsd(worst));
    }
    // z = V √D g
    let mut factor = eig.eigenvectors.clone();
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    let factor = &factor;
    let counts = run_batches(samples, seed::derive(seed, "paley-zygmund"), |s, count| {
        let mut rng = seed::rng(s);
        let mut hits = 0usize;
        let mut g = vec![0.0; m];
        for _ in 0..count {
            for v in g.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm2: f64 = (0..m)
                .map(|i| (0..m).map(|j| factor[(i, j)] * g[j]).sum::<f64>().powi(2))
                .sum();
            if norm2 >= 0.5 {
                hits += 1;
            }
        }
        hits
    });
    Ok(wilson(counts.iter().sum(), samples, 3.0))
}

/// Threshold sets of a piecewise-constant `F` compared against `F` itself
/// on the same draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdComparison {
    pub fractional: IsoEstimate,
    /// One entry per level boundary, in increasing threshold order.
    pub thresholds: Vec<IsoEstimate>,
}

impl ThresholdComparison {
    /// Smallest threshold ratio.
    pub fn best_threshold_ratio(&self) -> Option<f64> {
        self.thresholds
            .iter()
            .filter_map(|e| e.ratio)
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// `F(x) = levels[k]` for `x_1` in the `k`-th interval cut out by the
/// increasing `cuts` (one fewer than the levels): nested halfspaces in the
/// first coordinate. Each threshold set `{F > θ}` is again such a halfspace.
pub fn compare_thresholds(
    spec: &GaussianGraphSpec,
    cuts: &[f64],
    levels: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ThresholdComparison> {
    if levels.len() != cuts.len() + 1 || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "need increasing cuts and one more level than cuts".into(),
        ));
    }
    let level_of = |x: &[f64]| levels[cuts.partition_point(|&c| c < x[0])];
    let mut distinct: Vec<f64> = levels.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    let thetas: Vec<f64> = distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    let indicators: Vec<_> = thetas
        .iter()
        .map(|&t| move |x: &[f64]| if level_of(x) > t { 1.0 } else { 0.0 })
        .collect();
    let mut fs: Vec<Functional<'_>> = vec![&level_of];
    for f in &indicators {
        fs.push(f);
    }
    let mut est = estimate_functionals(spec, &fs, &[spec.d], samples, seed)?;
    let fractional = est.remove(0).remove(0);
    Ok(ThresholdComparison {
        fractional,
        thresholds: est.into_iter().map(|mut v| v.remove(0)).collect(),
    })
}

/// Random piecewise-constant function with up to `max_levels` levels.
pub fn random_levels(max_levels: usize, rng: &mut seed::Rng) -> (Vec<f64>, Vec<f64>) {
    let k = rng.random_range(2..=max_levels.max(2));
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| StandardNormal.sample(rng)).collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    let levels = (0..k).map(|_| rng.random::<f64>()).collect();
    (cuts, levels)
}

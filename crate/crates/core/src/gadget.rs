//! The four-state chain `H(ε)` on `{s, t, t', s'}`, its product `H^R`, the
//! dictatorship gadget built from it, and exact Fourier tools over the
//! chain's eigenbasis for small `R`.

use std::sync::Arc;

use nalgebra::{Matrix4, SymmetricEigen};
use rand::Rng as _;
use serde::Serialize;

use crate::bave::l1_variance;
use crate::error::{Error, Result};
use crate::seed;

/// Largest `R` for which functions are tabulated (`4^R` entries).
pub const MAX_TABLE_R: usize = 8;

pub const S: u8 = 0;
pub const T: u8 = 1;
pub const T_PRIME: u8 = 2;
pub const S_PRIME: u8 = 3;

pub const STATE_NAMES: [&str; 4] = ["s", "t", "t'", "s'"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetChain {
    pub epsilon: f64,
    /// Row-stochastic transition matrix, rows indexed by the current state.
    pub transition: [[f64; 4]; 4],
    pub stationary: [f64; 4],
    /// Sorted in decreasing order; `eigenvalues[0] = 1`.
    pub eigenvalues: [f64; 4],
    /// `eigenvectors[k][x] = e_k(x)`, orthonormal in `L²(μ)`.
    pub eigenvectors: [[f64; 4]; 4],
}

/// Eigenpair of the 2×2 block `[[1−q, q], [c, −c']]` acting on `(a, b)`,
/// lifted to a function on the four states with the given parity and
/// normalized in `L²(μ)` with `a > 0`.
fn block_vector(lambda: f64, q: f64, eps: f64, antisymmetric: bool) -> [f64; 4] {
    // first row: (1 − q − λ)a + q b = 0
    let ratio = (lambda - 1.0 + q) / q;
    let norm2 = 2.0 * (0.5 - eps) + 2.0 * eps * ratio * ratio;
    let a = 1.0 / norm2.sqrt();
    let b = ratio * a;
    let sign = if antisymmetric { -1.0 } else { 1.0 };
    [a, b, sign * b, sign * a]
}

pub fn build_chain(epsilon: f64) -> Result<GadgetChain> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::BadEpsilon(epsilon));
    }
    let q = epsilon / (1.0 - 2.0 * epsilon);
    let transition = [
        [1.0 - q, q, 0.0, 0.0],
        [0.5, 0.0, 0.5, 0.0],
        [0.0, 0.5, 0.0, 0.5],
        [0.0, 0.0, q, 1.0 - q],
    ];
    let stationary = [0.5 - epsilon, epsilon, epsilon, 0.5 - epsilon];

    // Symmetric block [[1−q, q], [1/2, 1/2]]: eigenvalues 1 and 1/2 − q.
    // Antisymmetric block [[1−q, q], [1/2, −1/2]]: trace 1/2 − q, det −1/2.
    let tr = 0.5 - q;
    let disc = (tr * tr + 2.0).sqrt();
    let mut pairs = [
        (1.0, block_vector(1.0, q, epsilon, false)),
        (0.5 - q, block_vector(0.5 - q, q, epsilon, false)),
        (
            (tr + disc) / 2.0,
            block_vector((tr + disc) / 2.0, q, epsilon, true),
        ),
        (
            (tr - disc) / 2.0,
            block_vector((tr - disc) / 2.0, q, epsilon, true),
        ),
    ];
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(GadgetChain {
        epsilon,
        transition,
        stationary,
        eigenvalues: pairs.map(|p| p.0),
        eigenvectors: pairs.map(|p| p.1),
    })
}

impl GadgetChain {
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// `1 − λ₂`.
    pub fn gap(&self) -> f64 {
        1.0 - self.lambda2()
    }

    /// Eigenvalues recomputed numerically from the symmetrized matrix
    /// `D^{1/2} P D^{-1/2}`, in decreasing order.
    pub fn numeric_eigenvalues(&self) -> [f64; 4] {
        let m = Matrix4::from_fn(|i, j| {
            self.transition[i][j] * (self.stationary[i] / self.stationary[j]).sqrt()
        });
        let sym = (m + m.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        [ev[0], ev[1], ev[2], ev[3]]
    }

    /// Largest violation of `μ(x)P(x,y) = μ(y)P(y,x)`.
    pub fn reversibility_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..4 {
            for y in 0..4 {
                let a = self.stationary[x] * self.transition[x][y];
                let b = self.stationary[y] * self.transition[y][x];
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    pub fn sample_state(&self, rng: &mut seed::Rng) -> u8 {
        pick(&self.stationary, rng.random())
    }

    pub fn step(&self, from: u8, rng: &mut seed::Rng) -> u8 {
        pick(&self.transition[from as usize], rng.random())
    }

    pub fn spectrum(&self) -> Spectrum {
        let eps = self.epsilon;
        let l2 = self.lambda2();
        Spectrum {
            epsilon: eps,
            eigenvalues: self.eigenvalues,
            gap: self.gap(),
            nominal_gap: eps,
            nominal_gap_holds: self.gap() >= eps,
            one_minus_lambda2_sq: 1.0 - l2 * l2,
            nominal_floor: 2.0 * eps - eps * eps,
            nominal_floor_holds: 1.0 - l2 * l2 >= 2.0 * eps - eps * eps,
        }
    }
}

fn pick(probs: &[f64; 4], u: f64) -> u8 {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u8;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(3) as u8
}

/// Spectral data next to the gap the analysis assumes (`ε`), so the
/// discrepancy is visible rather than patched.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub epsilon: f64,
    pub eigenvalues: [f64; 4],
    /// Computed `1 − λ₂`.
    pub gap: f64,
    pub nominal_gap: f64,
    pub nominal_gap_holds: bool,
    pub one_minus_lambda2_sq: f64,
    /// `2ε − ε²`.
    pub nominal_floor: f64,
    pub nominal_floor_holds: bool,
}

/// Index of a point of `V_H^R`: coordinate `i` is base-4 digit `i`.
pub fn encode(x: &[u8]) -> usize {
    x.iter().rev().fold(0, |acc, &c| acc * 4 + c as usize)
}

pub fn decode(mut index: usize, r: usize) -> Vec<u8> {
    (0..r)
        .map(|_| {
            let c = (index % 4) as u8;
            index /= 4;
            c
        })
        .collect()
}

type Callback = Arc<dyn Fn(&[u8]) -> f64 + Send + Sync>;

/// A function on `V_H^R`, either tabulated (`4^R` values) or evaluated on
/// demand.
#[derive(Clone)]
pub enum ProductFunction {
    Table { r: usize, values: Vec<f64> },
    Callback { r: usize, f: Callback },
}

impl std::fmt::Debug for ProductFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Table { r, .. } => write!(f, "ProductFunction::Table(R = {r})"),
            Self::Callback { r, .. } => write!(f, "ProductFunction::Callback(R = {r})"),
        }
    }
}

impl ProductFunction {
    pub fn table(r: usize, values: Vec<f64>) -> Result<Self> {
        if r > MAX_TABLE_R {
            return Err(Error::TooLargeR(r));
        }
        if values.len() != 1 << (2 * r) {
            return Err(Error::InvalidArgument(format!(
                "table has {} entries, expected 4^{r}",
                values.len()
            )));
        }
        Ok(Self::Table { r, values })
    }

    pub fn callback(r: usize, f: impl Fn(&[u8]) -> f64 + Send + Sync + 'static) -> Self {
        Self::Callback { r, f: Arc::new(f) }
    }

    /// Tabulates `f` over all of `V_H^R`.
    pub fn tabulate(r: usize, f: impl Fn(&[u8]) -> f64) -> Result<Self> {
        if r > MAX_TABLE_R {
            return Err(Error::TooLargeR(r));
        }
        let values = (0..1usize << (2 * r)).map(|i| f(&decode(i, r))).collect();
        Ok(Self::Table { r, values })
    }

    /// `1` when coordinate `coord` is in `{s, t}`.
    pub fn dictator(r: usize, coord: usize) -> Self {
        Self::callback(r, move |x| if x[coord] <= T { 1.0 } else { 0.0 })
    }

    pub fn constant(r: usize, c: f64) -> Self {
        Self::callback(r, move |_| c)
    }

    pub fn r(&self) -> usize {
        match self {
            Self::Table { r, .. } | Self::Callback { r, .. } => *r,
        }
    }

    pub fn eval(&self, x: &[u8]) -> f64 {
        match self {
            Self::Table { values, .. } => values[encode(x)],
            Self::Callback { f, .. } => f(x),
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Self::Table { values, .. } => Some(values),
            Self::Callback { .. } => None,
        }
    }

    /// The tabulated form, tabulating a callback when `R` allows.
    pub fn to_table(&self) -> Result<Vec<f64>> {
        match self {
            Self::Table { values, .. } => Ok(values.clone()),
            Self::Callback { r, f } => match Self::tabulate(*r, |x| f(x))? {
                Self::Table { values, .. } => Ok(values),
                Self::Callback { .. } => unreachable!(),
            },
        }
    }
}

/// One constraint `(x, y_1, …, y_d)` of the gadget: `x ∼ μ^R` and each
/// `y_j` takes one chain step per coordinate, independently.
pub fn sample_constraint(
    h: &GadgetChain,
    r: usize,
    d: usize,
    rng: &mut seed::Rng,
) -> (Vec<u8>, Vec<Vec<u8>>) {
    let x: Vec<u8> = (0..r).map(|_| h.sample_state(rng)).collect();
    let ys = (0..d)
        .map(|_| x.iter().map(|&c| h.step(c, rng)).collect())
        .collect();
    (x, ys)
}

/// Seeded stream of constraints.
pub fn constraint_stream(
    h: &GadgetChain,
    r: usize,
    d: usize,
    seed: u64,
) -> impl Iterator<Item = (Vec<u8>, Vec<Vec<u8>>)> + '_ {
    let mut rng = seed::rng(seed::derive(seed, "gadget-constraints"));
    std::iter::repeat_with(move || sample_constraint(h, r, d, &mut rng))
}

/// Numerator and `Var₁` of a dictator: `(2ε(1 − 2^{−d}), 1/2)`.
pub fn dictator_value_exact(epsilon: f64, d: usize) -> Result<(f64, f64)> {
    build_chain(epsilon)?;
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    // from t or t' the value flips exactly when the step crosses t ↔ t'
    let stay = 0.5f64.powi(d as i32);
    Ok((2.0 * epsilon * (1.0 - stay), 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub numerator: f64,
    pub numerator_se: f64,
    pub var1: f64,
    pub var1_se: f64,
    /// `None` when the estimated `Var₁` is zero.
    pub ratio: Option<f64>,
    pub ratio_se: Option<f64>,
    pub samples: usize,
}

/// Delete-one-block jackknife of `g(mean a, mean b)`; returns the point
/// estimate and its standard error.
pub fn block_jackknife(a: &[f64], b: &[f64], g: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let n = a.len();
    let blocks = n.clamp(1, 100);
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let est = g(sa / n as f64, sb / n as f64);
    if blocks < 2 {
        return (est, f64::NAN);
    }
    let mut leave = Vec::with_capacity(blocks);
    for k in 0..blocks {
        let lo = k * n / blocks;
        let hi = (k + 1) * n / blocks;
        let ba: f64 = a[lo..hi].iter().sum();
        let bb: f64 = b[lo..hi].iter().sum();
        let m = (n - (hi - lo)) as f64;
        leave.push(g((sa - ba) / m, (sb - bb) / m));
    }
    let mean = leave.iter().sum::<f64>() / blocks as f64;
    let var =
        leave.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (blocks - 1) as f64 / blocks as f64;
    (est, var.sqrt())
}

/// Monte Carlo numerator `E max_j |F(y_j) − F(x)|` and `Var₁ = E|F(X)−F(Y)|`
/// (independent `X, Y ∼ μ^R`), with block-jackknife standard errors.
pub fn estimate_value(
    h: &GadgetChain,
    d: usize,
    f: &ProductFunction,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let r = f.r();
    let mut num = Vec::with_capacity(samples);
    let mut var = Vec::with_capacity(samples);
    let mut rng_c = seed::rng(seed::derive(seed, "gadget-numerator"));
    let mut rng_v = seed::rng(seed::derive(seed, "gadget-variance"));
    for _ in 0..samples {
        let (x, ys) = sample_constraint(h, r, d, &mut rng_c);
        let fx = f.eval(&x);
        num.push(
            ys.iter()
                .map(|y| (f.eval(y) - fx).abs())
                .fold(0.0, f64::max),
        );
        let a: Vec<u8> = (0..r).map(|_| h.sample_state(&mut rng_v)).collect();
        let b: Vec<u8> = (0..r).map(|_| h.sample_state(&mut rng_v)).collect();
        var.push((f.eval(&a) - f.eval(&b)).abs());
    }
    let (numerator, numerator_se) = block_jackknife(&num, &var, |a, _| a);
    let (var1, var1_se) = block_jackknife(&num, &var, |_, b| b);
    let (ratio, ratio_se) = if var1 > 0.0 {
        let (r, se) = block_jackknife(&num, &var, |a, b| a / b);
        (Some(r), Some(se))
    } else {
        (None, None)
    };
    Ok(Estimate {
        numerator,
        numerator_se,
        var1,
        var1_se,
        ratio,
        ratio_se,
        samples,
    })
}

/// Product stationary measure on `V_H^R` as a table.
pub fn product_measure(h: &GadgetChain, r: usize) -> Vec<f64> {
    (0..1usize << (2 * r))
        .map(|i| {
            decode(i, r)
                .iter()
                .map(|&c| h.stationary[c as usize])
                .product()
        })
        .collect()
}

/// Exact numerator and `Var₁` of a tabulated function by enumeration; the
/// expected maximum of `d` i.i.d. partners comes from the CDF of one.
pub fn exact_value(h: &GadgetChain, d: usize, f: &ProductFunction) -> Result<(f64, f64)> {
    let r = f.r();
    let table = f.to_table()?;
    let mu = product_measure(h, r);
    let size = table.len();
    let mut numerator = 0.0;
    for xi in 0..size {
        let x = decode(xi, r);
        let mut dist: Vec<(f64, f64)> = Vec::new();
        for (yi, &fy) in table.iter().enumerate() {
            let y = decode(yi, r);
            let p: f64 = x
                .iter()
                .zip(&y)
                .map(|(&a, &b)| h.transition[a as usize][b as usize])
                .product();
            if p > 0.0 {
                dist.push(((fy - table[xi]).abs(), p));
            }
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut cdf, mut prev, mut emax) = (0.0, 0.0, 0.0);
        for (k, &(z, p)) in dist.iter().enumerate() {
            cdf += p;
            if dist.get(k + 1).is_some_and(|next| next.0 == z) {
                continue;
            }
            let now = cdf.min(1.0).powi(d as i32);
            emax += z * (now - prev);
            prev = now;
        }
        numerator += mu[xi] * emax;
    }
    Ok((numerator, l1_variance(&mu, &table)))
}

/// Coefficients `f̂_σ` over the eigenbasis `e_σ = Π_i e_{σ_i}(x_i)`,
/// indexed like the table (digit `i` of the index is `σ_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct Coeffs {
    pub r: usize,
    pub values: Vec<f64>,
}

/// Applies the 4×4 matrix `m` along every coordinate of a `4^R` table:
/// `out[.., k, ..] = Σ_x m[k][x] · in[.., x, ..]`.
fn apply_per_coordinate(table: &mut [f64], r: usize, m: &[[f64; 4]; 4]) {
    let mut buf = [0.0; 4];
    for i in 0..r {
        let stride = 1usize << (2 * i);
        for base in 0..table.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            for (k, out) in buf.iter_mut().enumerate() {
                *out = (0..4).map(|x| m[k][x] * table[base + x * stride]).sum();
            }
            for (k, v) in buf.iter().enumerate() {
                table[base + k * stride] = *v;
            }
        }
    }
}

pub fn multilinear_coeffs(h: &GadgetChain, f: &ProductFunction) -> Result<Coeffs> {
    let r = f.r();
    if r > MAX_TABLE_R {
        return Err(Error::TooLargeR(r));
    }
    let mut values = f.to_table()?;
    let mut m = [[0.0; 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        for (x, v) in row.iter_mut().enumerate() {
            *v = h.stationary[x] * h.eigenvectors[k][x];
        }
    }
    apply_per_coordinate(&mut values, r, &m);
    Ok(Coeffs { r, values })
}

/// Table of `Σ_σ f̂_σ e_σ`.
pub fn reconstruct(h: &GadgetChain, c: &Coeffs) -> Vec<f64> {
    let mut values = c.values.clone();
    let mut m = [[0.0; 4]; 4];
    for (x, row) in m.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = h.eigenvectors[k][x];
        }
    }
    apply_per_coordinate(&mut values, c.r, &m);
    values
}

impl Coeffs {
    fn degree(&self, index: usize) -> usize {
        decode(index, self.r).iter().filter(|&&s| s != 0).count()
    }

    /// `Σ_{σ_i ≠ 0} f̂_σ²`.
    pub fn influence(&self, i: usize) -> f64 {
        let stride = 1usize << (2 * i);
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| !(idx / stride).is_multiple_of(4))
            .map(|(_, v)| v * v)
            .sum()
    }

    pub fn total_influence(&self) -> f64 {
        (0..self.r).map(|i| self.influence(i)).sum()
    }

    /// `Σ_{σ ≠ 0} f̂_σ²`.
    pub fn variance(&self) -> f64 {
        self.values[1..].iter().map(|v| v * v).sum()
    }

    /// `Σ_{|σ| > p} f̂_σ²`.
    pub fn high_degree_variance(&self, p: usize) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.degree(*idx) > p)
            .map(|(_, v)| v * v)
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `Γ_{1−η} = ⊗_i ((1−η)I + ηP)` applied pointwise to a tabulated function.
pub fn noise_operator(h: &GadgetChain, f: &ProductFunction, eta: f64) -> Result<ProductFunction> {
    check_eta(eta)?;
    let r = f.r();
    let mut values = f.to_table()?;
    let mut m = [[0.0; 4]; 4];
    for (x, row) in m.iter_mut().enumerate() {
        for (y, v) in row.iter_mut().enumerate() {
            *v = eta * h.transition[x][y] + if x == y { 1.0 - eta } else { 0.0 };
        }
    }
    apply_per_coordinate(&mut values, r, &m);
    ProductFunction::table(r, values)
}

/// The same operator in coefficient space: `f̂_σ ↦ f̂_σ Π_i (1−η+ηλ_{σ_i})`.
pub fn noise_operator_coeffs(h: &GadgetChain, c: &Coeffs, eta: f64) -> Result<Coeffs> {
    check_eta(eta)?;
    let factor = h.eigenvalues.map(|l| 1.0 - eta + eta * l);
    let values = c
        .values
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            v * decode(idx, c.r)
                .iter()
                .map(|&s| factor[s as usize])
                .product::<f64>()
        })
        .collect();
    Ok(Coeffs { r: c.r, values })
}

/// `(1−η)F(x) + η E_{y ∼ P^{⊗R}(x)} F(y)`: a single joint step of every
/// coordinate. Coincides with [`noise_operator`] for `R = 1` and for
/// `η ∈ {0, 1}`.
pub fn joint_step_average(
    h: &GadgetChain,
    f: &ProductFunction,
    eta: f64,
) -> Result<ProductFunction> {
    check_eta(eta)?;
    let r = f.r();
    let mut stepped = f.to_table()?;
    let mut p = [[0.0; 4]; 4];
    for (x, row) in p.iter_mut().enumerate() {
        row.copy_from_slice(&h.transition[x]);
    }
    apply_per_coordinate(&mut stepped, r, &p);
    let base = f.to_table()?;
    let values = base
        .iter()
        .zip(&stepped)
        .map(|(a, b)| (1.0 - eta) * a + eta * b)
        .collect();
    ProductFunction::table(r, values)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta {eta} outside [0, 1]")));
    }
    Ok(())
}

/// Expectation under `μ^R`.
pub fn expectation(h: &GadgetChain, f: &ProductFunction) -> Result<f64> {
    let table = f.to_table()?;
    Ok(product_measure(h, f.r())
        .iter()
        .zip(&table)
        .map(|(m, v)| m * v)
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub kind: String,
    pub ratio: Option<f64>,
    pub max_influence: f64,
    /// `ratio / √(ε ln d)`.
    pub normalized: Option<f64>,
}

/// Empirical look at the soundness side: evaluates balanced random
/// functions and majority-like functions of all coordinates, which have low
/// influences, and reports their ratios next to `√(ε ln d)`. No threshold is
/// asserted.
pub fn soundness_probe(
    h: &GadgetChain,
    r: usize,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbeRecord>> {
    let scale = (h.epsilon * (d as f64).ln()).sqrt();
    let mut out = Vec::new();
    let mut rng = seed::rng(seed::derive(seed, "soundness-probe"));
    let size = 1usize << (2 * r);
    let mut record = |kind: &str, f: ProductFunction| -> Result<()> {
        let (num, var1) = exact_value(h, d, &f)?;
        let c = multilinear_coeffs(h, &f)?;
        let ratio = (var1 > 0.0).then(|| num / var1);
        out.push(ProbeRecord {
            kind: kind.to_string(),
            ratio,
            max_influence: (0..r).map(|i| c.influence(i)).fold(0.0, f64::max),
            normalized: ratio.map(|v| v / scale),
        });
        Ok(())
    };
    record(
        "majority",
        ProductFunction::tabulate(r, |x| {
            let ones = x.iter().filter(|&&c| c <= T).count();
            if 2 * ones > r || (2 * ones == r && x[0] <= T) {
                1.0
            } else {
                0.0
            }
        })?,
    )?;
    for _ in 0..trials {
        let values = (0..size)
            .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
            .collect();
        record("random", ProductFunction::table(r, values)?)?;
    }
    Ok(out)
}

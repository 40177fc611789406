//! The semidefinite relaxation of `λ∞`:
//!
//! ```text
//! minimize    Σ_i α_i
//! subject to  ‖v_j − v_i‖² ≤ α_i           for every i and j ∼ i
//!             Σ_i ‖v_i‖² − (1/n)‖Σ_i v_i‖² = 1
//! ```
//!
//! Both the objective and the constraints are invariant under translating all
//! `v_i` by a common vector, so the Gram matrix is parametrized on the
//! centered subspace: `X = U Y Uᵀ` with `U` an orthonormal (Helmert) basis of
//! `1⊥` and `Y ⪰ 0` of order `n − 1`. The normalization becomes `tr Y = 1`.
//!
//! The problem is solved in conic standard form by ADMM (Douglas–Rachford
//! splitting) alternating an affine projection, a cone projection (the PSD
//! part through a symmetric eigendecomposition) and a dual update. The
//! returned solution is certified: the PSD iterate is rescaled to satisfy the
//! normalization exactly and every `α_i` is set to its tightest feasible
//! value, so the reported value is an upper bound on the optimum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::seed;

#[derive(Debug, Clone)]
pub struct SdpProblem {
    n: usize,
    /// Directed constraint list: `(i, j)` for every `i` and `j ∼ i`.
    constraints: Vec<(usize, usize)>,
}

pub fn build_sdp(g: &WeightedGraph) -> Result<SdpProblem> {
    let n = g.n();
    if n < 2 {
        return Err(Error::TooSmall(n));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let constraints = (0..n)
        .flat_map(|i| g.neighbors(i).iter().map(move |&j| (i, j)))
        .collect();
    Ok(SdpProblem { n, constraints })
}

impl SdpProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slack_count(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &[(usize, usize)] {
        &self.constraints
    }

    /// Coefficient matrix `C` of the normalization `⟨X, C⟩ = 1`, i.e.
    /// `I − J/n`.
    pub fn normalization_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64)
    }
}

/// `n × (n−1)` Helmert basis of the orthogonal complement of the all-ones
/// vector.
fn helmert(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n - 1, |i, c| {
        let k = (c + 1) as f64;
        let norm = (k * (k + 1.0)).sqrt();
        match i.cmp(&(c + 1)) {
            std::cmp::Ordering::Less => 1.0 / norm,
            std::cmp::Ordering::Equal => -k / norm,
            std::cmp::Ordering::Greater => 0.0,
        }
    })
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for j in 0..k {
        for i in 0..=j {
            out.push(if i == j { m[(i, j)] } else { SQRT2 * m[(i, j)] });
        }
    }
    out
}

fn smat(v: &[f64], k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    let mut idx = 0;
    for j in 0..k {
        for i in 0..=j {
            if i == j {
                m[(i, j)] = v[idx];
            } else {
                m[(i, j)] = v[idx] / SQRT2;
                m[(j, i)] = v[idx] / SQRT2;
            }
            idx += 1;
        }
    }
    m
}

/// Euclidean projection onto the PSD cone; also returns the smallest
/// eigenvalue of the input.
fn project_psd(m: DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = SymmetricEigen::new(m);
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&clipped) * v.transpose(), min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `max(0, ‖v_j − v_i‖² − α_i)` over all constraints.
    pub max_violation: f64,
    /// `|⟨X, I − J/n⟩ − 1|`.
    pub normalization: f64,
    pub min_eigenvalue: f64,
    /// Relative ADMM primal residual at termination.
    pub primal: f64,
    /// Relative ADMM dual residual at termination.
    pub dual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SdpSolution {
    pub n: usize,
    /// Row-major `n × n` Gram matrix.
    #[serde(skip)]
    pub gram: DMatrix<f64>,
    pub alphas: Vec<f64>,
    pub value: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
}

impl SdpSolution {
    /// Builds a certified solution from any Gram matrix with positive
    /// normalization: rescales it and sets each `α_i` to the largest squared
    /// neighbor distance.
    pub fn from_gram(p: &SdpProblem, gram: DMatrix<f64>) -> Result<Self> {
        let n = p.n;
        let norm = (gram.trace() - gram.sum() / n as f64).max(0.0);
        if norm <= 0.0 {
            return Err(Error::DegenerateVector(norm));
        }
        let gram = gram / norm;
        let mut alphas = vec![0.0f64; n];
        for &(i, j) in &p.constraints {
            let d = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
            alphas[i] = alphas[i].max(d);
        }
        let value = alphas.iter().sum();
        let mut sol = Self {
            n,
            gram,
            alphas,
            value,
            residuals: Residuals {
                max_violation: 0.0,
                normalization: 0.0,
                min_eigenvalue: 0.0,
                primal: 0.0,
                dual: 0.0,
            },
            iterations: 0,
            converged: true,
        };
        let (max_violation, normalization, min_eigenvalue) = sol.check(p);
        sol.residuals.max_violation = max_violation;
        sol.residuals.normalization = normalization;
        sol.residuals.min_eigenvalue = min_eigenvalue;
        Ok(sol)
    }

    /// Recomputes `(max violation, normalization deviation, min eigenvalue)`
    /// from the Gram matrix and slacks.
    pub fn check(&self, p: &SdpProblem) -> (f64, f64, f64) {
        let g = &self.gram;
        let mut viol: f64 = 0.0;
        for &(i, j) in &p.constraints {
            let d = g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)];
            viol = viol.max(d - self.alphas[i]);
        }
        let norm = g.trace() - g.sum() / self.n as f64;
        let min_eig = SymmetricEigen::new(g.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        (viol.max(0.0), (norm - 1.0).abs(), min_eig)
    }

    pub fn gram_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| format!("{:.12e}", self.gram[(i, j)]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            seed: 0,
        }
    }
}

struct Layout {
    /// order of `Y`
    k: usize,
    /// svec length
    p: usize,
    n: usize,
    e: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.p + self.n + self.e
    }
}

/// Solves the relaxation. On hitting `max_iter` the best certified iterate is
/// returned inside [`Error::NotConverged`].
pub fn solve(p: &SdpProblem, opts: SolveOptions) -> Result<SdpSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol {} must be positive",
            opts.tol
        )));
    }
    let n = p.n;
    let k = n - 1;
    let lay = Layout {
        k,
        p: k * (k + 1) / 2,
        n,
        e: p.constraints.len(),
    };
    let u = helmert(n);
    let rows = lay.e + 1;
    let cols = lay.len();

    // Constraint matrix: row r < e is a_rᵀ y − α_i + s_r = 0, row e is tr Y = 1.
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (r, &(i, j)) in p.constraints.iter().enumerate() {
        let b = (u.row(i) - u.row(j)).transpose();
        let coeff = svec(&(&b * b.transpose()));
        for (c, v) in coeff.into_iter().enumerate() {
            a[(r, c)] = v;
        }
        a[(r, lay.p + i)] = -1.0;
        a[(r, lay.p + lay.n + r)] = 1.0;
    }
    let trace = svec(&DMatrix::identity(k, k));
    for (c, v) in trace.into_iter().enumerate() {
        a[(lay.e, c)] = v;
    }
    let mut rhs = DVector::<f64>::zeros(rows);
    rhs[lay.e] = 1.0;
    let gram_rows = &a * a.transpose();
    let chol = gram_rows
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("constraint matrix is rank deficient".into()))?;
    let at = a.transpose();
    let affine = |v: &DVector<f64>| -> DVector<f64> {
        let resid = &a * v - &rhs;
        v - &at * chol.solve(&resid)
    };

    let mut cost = DVector::<f64>::zeros(cols);
    for i in 0..n {
        cost[lay.p + i] = 1.0;
    }

    // Seeded interior start: a random PSD matrix with unit trace.
    let mut rng = seed::rng(seed::derive(opts.seed, "sdp-start"));
    let g = DMatrix::<f64>::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
    let mut y0 = DMatrix::<f64>::identity(k, k) + 0.1 * (&g * g.transpose()) / k as f64;
    y0 /= y0.trace();
    let mut z = DVector::<f64>::zeros(cols);
    for (c, v) in svec(&y0).into_iter().enumerate() {
        z[c] = v;
    }
    let mut udual = DVector::<f64>::zeros(cols);
    let mut rho = 1.0;
    const RELAX: f64 = 1.6;

    let project_cone = |v: &DVector<f64>| -> DVector<f64> {
        let mut out = v.clone();
        let (proj, _) = project_psd(smat(&v.as_slice()[..lay.p], lay.k));
        for (c, val) in svec(&proj).into_iter().enumerate() {
            out[c] = val;
        }
        for r in 0..lay.e {
            let idx = lay.p + lay.n + r;
            out[idx] = out[idx].max(0.0);
        }
        out
    };

    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let x = affine(&(&z - &udual - &cost / rho));
        let xr = RELAX * &x + (1.0 - RELAX) * &z;
        let z_prev = z.clone();
        z = project_cone(&(&xr + &udual));
        udual += &xr - &z;

        let scale_p = x.norm().max(z.norm()).max(1.0);
        primal = (&x - &z).norm() / scale_p;
        let scale_d = (rho * udual.norm()).max(1.0);
        dual = rho * (&z - &z_prev).norm() / scale_d;
        if primal < opts.tol && dual < opts.tol {
            converged = true;
            break;
        }
        if iterations % 50 == 0 {
            if primal > 10.0 * dual {
                rho *= 2.0;
                udual /= 2.0;
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                udual *= 2.0;
            }
        }
    }

    let y = smat(&z.as_slice()[..lay.p], lay.k);
    let gram = &u * y * u.transpose();
    let gram = (&gram + gram.transpose()) * 0.5;
    let mut sol = SdpSolution::from_gram(p, gram)?;
    sol.iterations = iterations;
    sol.converged = converged;
    sol.residuals.primal = primal;
    sol.residuals.dual = dual;
    if converged {
        Ok(sol)
    } else {
        Err(Error::NotConverged {
            iterations,
            best: Box::new(sol),
        })
    }
}

/// `Σ_i max_{j∼i} (x_i − x_j)² / (Σ_i x_i² − (Σ_i x_i)²/n)`.
pub fn lambda_inf_quotient(g: &WeightedGraph, x: &[f64]) -> Result<f64> {
    let (num, den) = quotient_parts(g, x);
    let scale = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if den <= 1e-12 * scale || den <= 0.0 {
        return Err(Error::DegenerateVector(den));
    }
    Ok(num / den)
}

pub(crate) fn quotient_parts(g: &WeightedGraph, x: &[f64]) -> (f64, f64) {
    let n = g.n();
    let mut num = 0.0;
    for i in 0..n {
        let m = g
            .neighbors(i)
            .iter()
            .map(|&j| (x[i] - x[j]).powi(2))
            .fold(0.0, f64::max);
        num += m;
    }
    // centered form avoids cancellation for nearly constant x
    let mean = x.iter().sum::<f64>() / n as f64;
    let den = x.iter().map(|v| (v - mean).powi(2)).sum();
    (num, den)
}

/// Upper bound on `λ∞` from `restarts` local minimizations of the quotient,
/// each a compass search from a standard Gaussian start.
pub fn lambda_inf_upper(g: &WeightedGraph, restarts: usize, seed: u64) -> (f64, Vec<f64>) {
    let n = g.n();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for r in 0..restarts {
        let mut rng = seed::rng(seed::derive_index(seed, r as u64));
        let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(&mut x);
        let Ok(mut fx) = lambda_inf_quotient(g, &x) else {
            continue;
        };
        let mut step = 0.5;
        let mut evals = 0;
        while step > 1e-9 && evals < 200_000 {
            let mut improved = false;
            for i in 0..n {
                for dir in [step, -step] {
                    x[i] += dir;
                    evals += 1;
                    match lambda_inf_quotient(g, &x) {
                        Ok(f) if f < fx - 1e-15 => {
                            fx = f;
                            improved = true;
                            break;
                        }
                        _ => x[i] -= dir,
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            normalize(&mut x);
        }
        if fx < best.0 {
            best = (fx, x);
        }
    }
    best
}

/// Centers `x` and scales it to unit centered norm; the quotient is
/// invariant under both, and this keeps the search step meaningful.
fn normalize(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let norm = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v = (*v - mean) / norm);
    }
}

/// Vectors `v_1..v_n` (rows) with `V Vᵀ ≈ gram`, of dimension equal to the
/// number of eigenvalues above `rank_tol`.
pub fn factorize(sol: &SdpSolution, rank_tol: f64) -> Result<Vec<Vec<f64>>> {
    factorize_gram(&sol.gram, rank_tol)
}

pub fn factorize_gram(gram: &DMatrix<f64>, rank_tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = gram.nrows();
    let eig = SymmetricEigen::new(gram.clone());
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -rank_tol {
        return Err(Error::NotPsd(min));
    }
    let kept: Vec<usize> = (0..n).filter(|&c| eig.eigenvalues[c] > rank_tol).collect();
    Ok((0..n)
        .map(|i| {
            kept.iter()
                .map(|&c| eig.eigenvectors[(i, c)] * eig.eigenvalues[c].sqrt())
                .collect()
        })
        .collect())
}

//! Exhaustive minimization of vertex expansion over all proper subsets.
//!
//! Subsets are visited in Gray-code order so each step flips one vertex and
//! updates the boundary weight in O(deg). Ties are broken towards the
//! lexicographically smallest sorted member list.

use crate::error::{Error, Result};
use crate::graph::{symmetric_vertex_expansion, vertex_expansion, Cut, WeightedGraph};

pub const DEFAULT_CAP: usize = 20;

/// Hard ceiling on the configurable cap: subsets are encoded as `u64`.
pub const MAX_CAP: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    pub symmetric: bool,
    /// Require `w(S)·w(S̄) ≥ b·w(V)²`.
    pub balance: Option<f64>,
    pub cap: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            symmetric: false,
            balance: None,
            cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub cut: Cut,
    pub value: f64,
}

pub fn exact_min_vertex_expansion(
    g: &WeightedGraph,
    symmetric: bool,
    balance: Option<f64>,
) -> Result<ExactResult> {
    exact_min(
        g,
        ExactOptions {
            symmetric,
            balance,
            ..Default::default()
        },
    )
}

/// True when the sorted member list of `a` precedes that of `b`.
fn lex_less(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let d = (a ^ b).trailing_zeros();
    let above = if d >= 63 { 0 } else { !((2u64 << d) - 1) };
    if a >> d & 1 == 1 {
        b & above != 0
    } else {
        a & above == 0
    }
}

struct Scan<'a> {
    g: &'a WeightedGraph,
    symmetric: bool,
    in_s: u64,
    count_in: Vec<u32>,
    w_s: f64,
    boundary: f64,
}

impl<'a> Scan<'a> {
    fn new(g: &'a WeightedGraph, symmetric: bool, start: u64) -> Self {
        let mut scan = Self {
            g,
            symmetric,
            in_s: start,
            count_in: vec![0; g.n()],
            w_s: 0.0,
            boundary: 0.0,
        };
        scan.recompute();
        scan
    }

    fn recompute(&mut self) {
        let g = self.g;
        self.w_s = 0.0;
        for v in 0..g.n() {
            self.count_in[v] = g
                .neighbors(v)
                .iter()
                .filter(|&&u| self.in_s >> u & 1 == 1)
                .count() as u32;
            if self.in_s >> v & 1 == 1 {
                self.w_s += g.weight(v);
            }
        }
        self.boundary = (0..g.n()).map(|v| self.contribution(v)).sum();
    }

    fn contribution(&self, v: usize) -> f64 {
        let inside = self.in_s >> v & 1 == 1;
        let on_boundary = if inside {
            self.symmetric && (self.count_in[v] as usize) < self.g.degree(v)
        } else {
            self.count_in[v] > 0
        };
        if on_boundary {
            self.g.weight(v)
        } else {
            0.0
        }
    }

    fn flip(&mut self, v: usize) {
        let g = self.g;
        let entering = self.in_s >> v & 1 == 0;
        self.boundary -= self.contribution(v);
        for &u in g.neighbors(v) {
            self.boundary -= self.contribution(u);
        }
        self.in_s ^= 1 << v;
        if entering {
            self.w_s += g.weight(v);
        } else {
            self.w_s -= g.weight(v);
        }
        for &u in g.neighbors(v) {
            if entering {
                self.count_in[u] += 1;
            } else {
                self.count_in[u] -= 1;
            }
        }
        self.boundary += self.contribution(v);
        for &u in g.neighbors(v) {
            self.boundary += self.contribution(u);
        }
    }
}

pub fn exact_min(g: &WeightedGraph, opts: ExactOptions) -> Result<ExactResult> {
    let n = g.n();
    let cap = opts.cap.min(MAX_CAP);
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    if let Some(b) = opts.balance {
        if !(0.0..=0.25).contains(&b) {
            return Err(Error::InvalidArgument(format!(
                "balance {b} outside [0, 1/4]"
            )));
        }
    }
    if n < 2 {
        return Err(Error::Infeasible);
    }
    let total = g.total_weight();
    let full: u64 = (1u64 << n) - 1;
    // Φ is invariant under complement, and a set containing vertex 0 precedes
    // its complement lexicographically, so vertex 0 can be pinned into S.
    let (start, free_bits, offset) = if opts.symmetric {
        (1u64, n - 1, 1)
    } else {
        (0u64, n, 0)
    };
    let min_product = opts.balance.map(|b| b * total * total * (1.0 - 1e-12));

    let mut scan = Scan::new(g, opts.symmetric, start);
    let mut best: Option<(f64, u64)> = None;
    let mut consider = |scan: &Scan| {
        let mask = scan.in_s;
        if mask == 0 || mask == full {
            return;
        }
        let outside = total - scan.w_s;
        if scan.w_s <= 0.0 || outside <= 0.0 {
            return;
        }
        let product = scan.w_s * outside;
        if let Some(minp) = min_product {
            if product < minp {
                return;
            }
        }
        let value = total * scan.boundary.max(0.0) / product;
        match best {
            None => best = Some((value, mask)),
            Some((bv, bm)) => {
                let tol = 1e-12 * bv.abs().max(1.0);
                if value < bv - tol || (value <= bv + tol && lex_less(mask, bm)) {
                    best = Some((value, mask));
                }
            }
        }
    };
    consider(&scan);
    let steps: u64 = 1u64 << free_bits;
    for i in 1..steps {
        let bit = i.trailing_zeros() as usize + offset;
        scan.flip(bit);
        if i % 4096 == 0 {
            scan.recompute();
        }
        consider(&scan);
    }

    let (_, mask) = best.ok_or(Error::Infeasible)?;
    let cut = Cut::from_bits(n, mask);
    let value = if opts.symmetric {
        symmetric_vertex_expansion(g, &cut)?
    } else {
        vertex_expansion(g, &cut)?
    };
    Ok(ExactResult { cut, value })
}

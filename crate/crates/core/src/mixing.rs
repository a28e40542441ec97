//! Mixing coefficients of a measure on Σⁿ: the conditional total-variation
//! coefficients η_ij and their suprema η̄_ij, the matrices Δ_n and Γ_n with
//! their operator norms, φ-mixing coefficients, and the Doeblin coefficient
//! of a Markov kernel.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{pack, pow};
use crate::measure::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatrixKind {
    Delta,
    Gamma,
}

/// Upper-triangular mixing matrix with unit diagonal: Δ_n holds η̄_ij, Γ_n its
/// elementwise square roots.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    n: usize,
    kind: MatrixKind,
    entries: Vec<f64>, // dense n×n, zero below the diagonal
}

impl MixingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Entry by 1-based (i, j) matching the η̄_ij convention.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i - 1) * self.n + (j - 1)]
    }

    /// ℓ_∞ operator norm: max row sum (all entries are nonnegative).
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|r| self.entries[r * self.n..(r + 1) * self.n].iter().sum())
            .fold(1.0f64, f64::max)
    }

    /// Largest singular value via power iteration on MᵀM, relative tolerance
    /// 1e-10, at most 10⁴ iterations.
    pub fn spectral_norm(&self) -> Result<f64> {
        let n = self.n;
        // gram = MᵀM
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.entries[k * n + i] * self.entries[k * n + j];
                }
                gram[i * n + j] = s;
            }
        }
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda_prev = 0.0;
        let mut last_delta = f64::INFINITY;
        for _ in 0..10_000 {
            let mut w = vec![0.0; n];
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += gram[i * n + j] * v[j];
                }
                w[i] = s;
            }
            let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Ok(0.0);
            }
            for (slot, x) in v.iter_mut().zip(&w) {
                *slot = x / norm;
            }
            last_delta = (lambda - lambda_prev).abs();
            if last_delta <= 1e-10 * lambda.max(1.0) {
                return Ok(lambda.max(0.0).sqrt());
            }
            lambda_prev = lambda;
        }
        Err(Error::NonConvergence {
            iterations: 10_000,
            last_delta,
        })
    }

    /// sqrt of the largest row sum of MᵀM; upper bound on the spectral norm
    /// by the Geršgorin disc theorem (entries of MᵀM are nonnegative here).
    pub fn gershgorin_bound(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.entries[k * n + i] * self.entries[k * n + j];
                }
                row += s.abs();
            }
            worst = worst.max(row);
        }
        worst.sqrt()
    }

    /// Upper-triangle entries as (row, col, value) with 1-based indices.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 1..=self.n {
            for j in i..=self.n {
                out.push((i, j, self.entry(i, j)));
            }
        }
        out
    }
}

/// Suffix law of X_{j..n} conditioned on the prefix block starting at
/// `start` with length `block`; returns None for a zero-mass prefix.
fn suffix_law(p: &[f64], start: usize, block: usize, tail: usize) -> Option<Vec<f64>> {
    let slice = &p[start..start + block];
    let mass: f64 = slice.iter().sum();
    if mass <= 0.0 {
        return None;
    }
    let mut law = vec![0.0; tail];
    for chunk in slice.chunks_exact(tail) {
        for (slot, &v) in law.iter_mut().zip(chunk) {
            *slot += v;
        }
    }
    for v in &mut law {
        *v /= mass;
    }
    Some(law)
}

fn tv_between(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// η_ij(y, w, w′): total-variation distance between the laws of X_{j..n}
/// conditioned on the prefixes [y w] and [y w′]. Both prefixes must have
/// positive probability.
pub fn eta_ij(
    m: &DiscreteMeasure,
    i: usize,
    j: usize,
    y: &[usize],
    w: usize,
    w_prime: usize,
) -> Result<f64> {
    check_ij(m, i, j)?;
    if y.len() != i - 1 {
        return Err(Error::InvalidArgument(format!(
            "prefix stub has length {}, expected {}",
            y.len(),
            i - 1
        )));
    }
    if y.iter().chain([&w, &w_prime]).any(|&d| d >= m.alphabet()) {
        return Err(Error::InvalidArgument(
            "coordinate outside the alphabet".into(),
        ));
    }
    let a = m.alphabet();
    let n = m.n();
    let block = pow(a, n - i);
    let tail = pow(a, n - j + 1);
    let ybase = pack(y, a) * a;
    let p = m.density();
    let law_w = suffix_law(p, (ybase + w) * block, block, tail);
    let law_wp = suffix_law(p, (ybase + w_prime) * block, block, tail);
    match (law_w, law_wp) {
        (Some(lw), Some(lwp)) => Ok(tv_between(&lw, &lwp)),
        (None, _) => Err(Error::ZeroProbabilityPrefix {
            prefix: y.iter().copied().chain([w]).collect(),
        }),
        (_, None) => Err(Error::ZeroProbabilityPrefix {
            prefix: y.iter().copied().chain([w_prime]).collect(),
        }),
    }
}

/// η̄_ij: maximum of η_ij over all (y, w, w′) whose two extended prefixes both
/// have positive probability; 0 when no valid pair exists.
pub fn eta_bar(m: &DiscreteMeasure, i: usize, j: usize) -> Result<f64> {
    check_ij(m, i, j)?;
    let a = m.alphabet();
    let n = m.n();
    let block = pow(a, n - i);
    let tail = pow(a, n - j + 1);
    let p = m.density();
    let mut best = 0.0f64;
    let mut laws: Vec<Option<Vec<f64>>> = vec![None; a];
    for ybase in (0..pow(a, i)).step_by(a) {
        for (w, slot) in laws.iter_mut().enumerate() {
            *slot = suffix_law(p, (ybase + w) * block, block, tail);
        }
        for w in 0..a {
            let Some(lw) = &laws[w] else { continue };
            for wp in w + 1..a {
                let Some(lwp) = &laws[wp] else { continue };
                best = best.max(tv_between(lw, lwp));
            }
        }
    }
    Ok(best)
}

fn check_ij(m: &DiscreteMeasure, i: usize, j: usize) -> Result<()> {
    if i == 0 || i >= j || j > m.n() {
        return Err(Error::InvalidArgument(format!(
            "indices must satisfy 1 <= i < j <= n, got i={i}, j={j}, n={}",
            m.n()
        )));
    }
    Ok(())
}

/// Δ_n: unit diagonal, η̄_ij above it.
pub fn delta_matrix(m: &DiscreteMeasure) -> Result<MixingMatrix> {
    let n = m.n();
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i - 1] = 1.0;
            for j in i + 1..=n {
                row[j - 1] = eta_bar(m, i, j)?;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(MixingMatrix {
        n,
        kind: MatrixKind::Delta,
        entries: rows.concat(),
    })
}

/// Γ_n: elementwise square root of Δ_n.
pub fn gamma_matrix(m: &DiscreteMeasure) -> Result<MixingMatrix> {
    let delta = delta_matrix(m)?;
    Ok(MixingMatrix {
        n: delta.n,
        kind: MatrixKind::Gamma,
        entries: delta.entries.iter().map(|&v| v.sqrt()).collect(),
    })
}

/// H_P(n) = ‖Δ_n‖_∞.
pub fn h_p(m: &DiscreteMeasure) -> Result<f64> {
    Ok(delta_matrix(m)?.inf_norm())
}

/// φ-mixing coefficient with gap k: the supremum of |P(B|A) − P(B)| over cut
/// positions j, events A in σ(X_{1..j}) with P(A) > 0 and B in σ(X_{j+k..n}).
///
/// The supremum over A is attained on single atoms (P(B|A) is a convex
/// combination of the atom values) and the supremum over B is the total
/// variation distance, so the value is computed exactly without enumerating
/// events; `phi_events_literal` in the test suite cross-checks this against
/// full subset enumeration.
pub fn phi_coefficient(m: &DiscreteMeasure, k: usize) -> Result<f64> {
    let n = m.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "gap must satisfy 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let a = m.alphabet();
    let p = m.density();
    let mut best = 0.0f64;
    for j in 1..=n - k {
        let tail = pow(a, n - j - k + 1);
        let unconditional = suffix_law(p, 0, p.len(), tail).expect("unit mass");
        let block = pow(a, n - j);
        for u in 0..pow(a, j) {
            if let Some(cond) = suffix_law(p, u * block, block, tail) {
                best = best.max(tv_between(&cond, &unconditional));
            }
        }
    }
    Ok(best)
}

/// Doeblin coefficient of a stochastic kernel: the maximal total-variation
/// distance between rows.
pub fn doeblin_coefficient(kernel: &[Vec<f64>]) -> Result<f64> {
    let a = kernel.len();
    if a == 0 {
        return Err(Error::InvalidArgument("empty kernel".into()));
    }
    for (row, r) in kernel.iter().enumerate() {
        let sum: f64 = r.iter().sum();
        if r.len() != a || r.iter().any(|&v| !v.is_finite() || v < 0.0) || (sum - 1.0).abs() > 1e-12
        {
            return Err(Error::NonStochasticKernel { row, sum });
        }
    }
    let mut worst = 0.0f64;
    for i in 0..a {
        for j in i + 1..a {
            worst = worst.max(tv_between(&kernel[i], &kernel[j]));
        }
    }
    Ok(worst)
}

/// Norm summary for one measure, as emitted by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct NormSummary {
    pub inf_norm: f64,
    pub spectral_norm: f64,
    pub gershgorin: f64,
    pub r_n: f64,
}

/// ‖Δ‖_∞, ‖Γ‖₂, its Geršgorin bound, and R_n = ‖Γ‖₂/‖Δ‖_∞.
pub fn norm_summary(m: &DiscreteMeasure) -> Result<NormSummary> {
    let delta = delta_matrix(m)?;
    let gamma = gamma_matrix(m)?;
    let inf_norm = delta.inf_norm();
    let spectral_norm = gamma.spectral_norm()?;
    Ok(NormSummary {
        inf_norm,
        spectral_norm,
        gershgorin: gamma.gershgorin_bound(),
        r_n: spectral_norm / inf_norm,
    })
}

//! The Ψ recursion and Ψ-norm, the Φ-norm as a linear program over the
//! Lipschitz class, marginal projection, and the dominance checks that
//! compare them: random-function Ψ-dominance, countable-alphabet truncation,
//! and the alternating grid functions that separate Φ from L₁.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::index::{table_len, DigitTable};
use crate::metric::{FunctionTable, MetricSpec, PathEdges};
use crate::simplex::{solve_max, Constraint};

/// Φ ≤ Ψ assertions allow this much slack on top of the LP tolerance.
pub const DOMINANCE_TOL: f64 = 1e-6;
/// Largest LP instance: one variable per point of Σⁿ.
const MAX_LP_VARS: usize = 512;

/// Σⁿ together with the weight of a single coordinate cell of the carrying
/// measure: 1 for counting, 1/m for the m-cell grid on the unit interval.
/// A cell of Σⁿ then weighs (coordinate weight)ⁿ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSpace {
    pub n: usize,
    pub a: usize,
    coord_weight: f64,
}

impl WeightedSpace {
    pub fn counting(n: usize, a: usize) -> Result<Self> {
        Self::new(n, a, 1.0)
    }

    /// Grid weights for m cells per coordinate: each cell of Σⁿ weighs (1/m)ⁿ.
    pub fn grid(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, 1.0 / m as f64)
    }

    pub fn new(n: usize, a: usize, coord_weight: f64) -> Result<Self> {
        if !(coord_weight > 0.0) || !coord_weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cell weight must be positive and finite, got {coord_weight}"
            )));
        }
        table_len(n, a)?;
        Ok(WeightedSpace { n, a, coord_weight })
    }

    pub fn coord_weight(&self) -> f64 {
        self.coord_weight
    }

    /// Weight of one cell of Σⁿ.
    pub fn cell_weight(&self) -> f64 {
        self.coord_weight.powi(self.n as i32)
    }

    fn check(&self, f: &FunctionTable) -> Result<()> {
        if f.n != self.n || f.a != self.a {
            return Err(Error::ShapeMismatch(format!(
                "table is ({}, {}), space is ({}, {})",
                f.n, f.a, self.n, self.a
            )));
        }
        Ok(())
    }

    /// ‖f‖_{L₁(μⁿ)} under this space's weights.
    pub fn l1_norm(&self, f: &FunctionTable) -> Result<f64> {
        self.check(f)?;
        Ok(self.cell_weight() * f.values.iter().map(|v| v.abs()).sum::<f64>())
    }
}

/// Integrate out the first coordinate: (πf)(x₂..x_n) = Σ_{x₁} f(x) · weight.
pub fn marginal_projection(f: &FunctionTable, space: &WeightedSpace) -> Result<FunctionTable> {
    space.check(f)?;
    if f.n == 0 {
        return Err(Error::InvalidArgument(
            "cannot project a zero-dimensional table".into(),
        ));
    }
    let block = f.values.len() / f.a;
    let mut out = vec![0.0; block];
    for chunk in f.values.chunks_exact(block) {
        for (slot, &v) in out.iter_mut().zip(chunk) {
            *slot += v;
        }
    }
    let w = space.coord_weight;
    for v in &mut out {
        *v *= w;
    }
    FunctionTable::new(f.n - 1, f.a, out)
}

/// Ψ_n(f) = ∫(f)₊ dμⁿ + Ψ_{n−1}(πf), with Ψ₀ = 0: exactly n ramp-integral
/// terms, projecting out the leading coordinate each level.
pub fn psi_n(f: &FunctionTable, space: &WeightedSpace) -> Result<f64> {
    space.check(f)?;
    let mut total = 0.0;
    let mut cur = f.values.clone();
    let w = space.coord_weight;
    for dim in (1..=space.n).rev() {
        let cell = w.powi(dim as i32);
        total += cell * cur.iter().map(|&v| v.max(0.0)).sum::<f64>();
        if dim > 1 {
            let block = cur.len() / space.a;
            let mut next = vec![0.0; block];
            for chunk in cur.chunks_exact(block) {
                for (slot, &v) in next.iter_mut().zip(chunk) {
                    *slot += v;
                }
            }
            for v in &mut next {
                *v *= w;
            }
            cur = next;
        }
    }
    Ok(total)
}

/// Ψ-norm: max of Ψ_n(f) and Ψ_n(−f).
pub fn psi_norm(f: &FunctionTable, space: &WeightedSpace) -> Result<f64> {
    let neg = FunctionTable::new(f.n, f.a, f.values.iter().map(|v| -v).collect())?;
    Ok(psi_n(f, space)?.max(psi_n(&neg, space)?))
}

/// ⟨f, g⟩ = ∫ f·g dμⁿ.
pub fn inner_product(f: &FunctionTable, g: &FunctionTable, space: &WeightedSpace) -> Result<f64> {
    space.check(f)?;
    space.check(g)?;
    Ok(space.cell_weight()
        * f.values
            .iter()
            .zip(&g.values)
            .map(|(&x, &y)| x * y)
            .sum::<f64>())
}

/// Φ-norm: sup of |⟨f, g⟩| over g with Lip(g) ≤ 1 and range in [0, diam],
/// solved as two maximization LPs (for f and −f). For path metrics the
/// Lipschitz constraints are thinned to elementary-step generators, which is
/// equivalent to the full ordered-pair set (`phi_norm_full_pairs` cross-checks
/// this in the test suite). One-point spaces have Φ ≡ 0.
pub fn phi_norm(f: &FunctionTable, spec: &MetricSpec, space: &WeightedSpace) -> Result<f64> {
    phi_norm_impl(f, spec, space, false)
}

/// Φ-norm with the full ordered-pair constraint set regardless of metric.
pub fn phi_norm_full_pairs(
    f: &FunctionTable,
    spec: &MetricSpec,
    space: &WeightedSpace,
) -> Result<f64> {
    phi_norm_impl(f, spec, space, true)
}

fn phi_norm_impl(
    f: &FunctionTable,
    spec: &MetricSpec,
    space: &WeightedSpace,
    force_full: bool,
) -> Result<f64> {
    space.check(f)?;
    if spec.a != space.a {
        return Err(Error::ShapeMismatch(format!(
            "metric alphabet {} vs space alphabet {}",
            spec.a, space.a
        )));
    }
    let len = f.values.len();
    if len > MAX_LP_VARS {
        return Err(Error::TooLarge(format!(
            "{len} LP variables exceed the cap of {MAX_LP_VARS}"
        )));
    }
    if len == 1 {
        return Ok(0.0);
    }
    let n = f.n;
    let diam = spec.diameter(n);
    let mut constraints = lipschitz_constraints(spec, n, force_full)?;
    for x in 0..len {
        constraints.push(Constraint {
            coeffs: vec![(x, 1.0)],
            rhs: diam,
        });
    }
    let cell = space.cell_weight();
    let mut best = 0.0f64;
    for sign in [1.0, -1.0] {
        let c: Vec<f64> = f.values.iter().map(|&v| sign * cell * v).collect();
        let sol = solve_max(len, &c, &constraints)?;
        if sol.x.iter().any(|&g| g < -1e-6 || g > diam + 1e-6) {
            return Err(Error::LpFailure(
                "optimal point violates the box constraints".into(),
            ));
        }
        best = best.max(sol.objective);
    }
    Ok(best)
}

fn lipschitz_constraints(spec: &MetricSpec, n: usize, force_full: bool) -> Result<Vec<Constraint>> {
    let a = spec.a;
    let digits = DigitTable::new(n, a)?;
    let len = digits.len();
    let mut rows = Vec::new();
    match spec.path_edges(n).filter(|_| !force_full) {
        Some(PathEdges::AnyValue { weight }) => {
            for x in 0..len {
                let rx = digits.row(x);
                for coord in 0..n {
                    let stride = a.pow((n - 1 - coord) as u32);
                    for v in 0..a {
                        if v == rx[coord] {
                            continue;
                        }
                        let y = (x as isize + (v as isize - rx[coord] as isize) * stride as isize)
                            as usize;
                        debug_assert_ne!(x, y);
                        rows.push(Constraint {
                            coeffs: vec![(x, 1.0), (y, -1.0)],
                            rhs: weight,
                        });
                    }
                }
            }
        }
        Some(PathEdges::UnitStep { weight }) => {
            for x in 0..len {
                let rx = digits.row(x);
                for coord in 0..n {
                    let stride = a.pow((n - 1 - coord) as u32);
                    if rx[coord] + 1 < a {
                        rows.push(Constraint {
                            coeffs: vec![(x, 1.0), (x + stride, -1.0)],
                            rhs: weight,
                        });
                        rows.push(Constraint {
                            coeffs: vec![(x + stride, 1.0), (x, -1.0)],
                            rhs: weight,
                        });
                    }
                }
            }
        }
        None => {
            for x in 0..len {
                for y in 0..len {
                    if x == y {
                        continue;
                    }
                    rows.push(Constraint {
                        coeffs: vec![(x, 1.0), (y, -1.0)],
                        rhs: spec.distance(digits.row(x), digits.row(y)),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Signed test function with entries uniform in [−1, 1], deterministic in the
/// seed.
pub fn random_signed(n: usize, a: usize, seed: u64) -> Result<FunctionTable> {
    let len = table_len(n, a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FunctionTable::new(
        n,
        a,
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
}

fn derive_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn digest_of(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    let out = hasher.finalize();
    out[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Outcome of a randomized Ψ-dominance check.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub pass: bool,
    pub trials: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub worst_f_digest: String,
    #[serde(skip)]
    pub worst_f: Option<FunctionTable>,
}

/// Draws `trials` random signed f and asserts Φ(f) ≤ Ψ(f) + 1e−6 under the
/// given metric and weights; reports the largest observed Φ/Ψ ratio and the
/// f attaining it.
pub fn check_psi_dominance(
    spec: &MetricSpec,
    space: &WeightedSpace,
    trials: usize,
    seed: u64,
) -> Result<DominanceReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let results: Vec<(f64, f64, FunctionTable)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let f = random_signed(space.n, space.a, derive_seed(seed, t))?;
            let phi = phi_norm(&f, spec, space)?;
            let psi = psi_norm(&f, space)?;
            Ok((phi, psi, f))
        })
        .collect::<Result<_>>()?;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut worst: Option<FunctionTable> = None;
    let mut violations = 0;
    for (phi, psi, f) in results {
        if phi > psi + DOMINANCE_TOL {
            violations += 1;
        }
        let ratio = if psi > 0.0 { phi / psi } else { 0.0 };
        if ratio > max_ratio {
            max_ratio = ratio;
            worst = Some(f);
        }
    }
    Ok(DominanceReport {
        pass: violations == 0,
        trials,
        violations,
        max_ratio,
        worst_f_digest: worst
            .as_ref()
            .map(|f| digest_of(&f.values))
            .unwrap_or_default(),
        worst_f: worst,
    })
}

/// Quantize unit-interval coordinates to the m-cell grid: per coordinate
/// the largest k with k/m ≤ x, so x = 1 lands in cell m−1.
pub fn grid_map(x: &[f64], m: usize) -> Result<Vec<usize>> {
    if m < 2 {
        return Err(Error::InvalidArgument("grid needs m >= 2".into()));
    }
    x.iter()
        .map(|&xi| {
            if !(0.0..=1.0).contains(&xi) {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {xi} outside [0,1]"
                )));
            }
            Ok(((xi * m as f64).floor() as usize).min(m - 1))
        })
        .collect()
}

/// The function with value (−1)ᵏ on grid cell k of the unit interval; under
/// grid weights 1/N its L₁ norm is 1 while its Φ-norm shrinks like 1/N.
pub fn alternating_grid_function(n_cells: usize) -> Result<FunctionTable> {
    if n_cells < 2 || n_cells % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "need an even number of cells, got {n_cells}"
        )));
    }
    FunctionTable::new(
        1,
        n_cells,
        (0..n_cells)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect(),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationLevel {
    pub m: usize,
    pub phi: f64,
    pub psi: f64,
    pub dominated: bool,
}

/// Outcome of the countable-alphabet truncation check under the Hamming
/// metric and counting measure.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub levels: Vec<TruncationLevel>,
    pub full_phi: f64,
    pub full_psi: f64,
    /// Whether the input f was nonnegative; only then are the Φ/Ψ series
    /// guaranteed monotone (dominated convergence needs no monotonicity).
    pub nonnegative: bool,
    pub phi_monotone: bool,
    pub psi_monotone: bool,
    pub dominated: bool,
}

/// Truncates f to the sub-cube {0..m−1}ⁿ for each m and verifies dominance
/// Φ(f_m) ≤ Ψ(f_m) per level plus convergence toward the untruncated values.
pub fn truncation_dominance_check(f: &FunctionTable, ms: &[usize]) -> Result<TruncationReport> {
    if ms.is_empty() || ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "truncation levels must be strictly increasing".into(),
        ));
    }
    if *ms.last().unwrap() > f.a {
        return Err(Error::InvalidArgument(format!(
            "truncation level {} exceeds alphabet {}",
            ms.last().unwrap(),
            f.a
        )));
    }
    let spec = MetricSpec::hamming(f.a)?;
    let space = WeightedSpace::counting(f.n, f.a)?;
    let digits = DigitTable::new(f.n, f.a)?;
    let truncate = |m: usize| -> Result<FunctionTable> {
        let values = f
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                if digits.row(idx).iter().all(|&d| d < m) {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        FunctionTable::new(f.n, f.a, values)
    };
    let mut levels = Vec::new();
    for &m in ms {
        let fm = truncate(m)?;
        let phi = phi_norm(&fm, &spec, &space)?;
        let psi = psi_norm(&fm, &space)?;
        levels.push(TruncationLevel {
            m,
            phi,
            psi,
            dominated: phi <= psi + DOMINANCE_TOL,
        });
    }
    let full_phi = phi_norm(f, &spec, &space)?;
    let full_psi = psi_norm(f, &space)?;
    let monotone = |vals: Vec<f64>, cap: f64| {
        vals.windows(2).all(|w| w[0] <= w[1] + 1e-9)
            && vals.last().map_or(true, |&v| v <= cap + 1e-9)
    };
    Ok(TruncationReport {
        phi_monotone: monotone(levels.iter().map(|l| l.phi).collect(), full_phi),
        psi_monotone: monotone(levels.iter().map(|l| l.psi).collect(), full_psi),
        dominated: levels.iter().all(|l| l.dominated),
        nonnegative: f.values.iter().all(|&v| v >= 0.0),
        levels,
        full_phi,
        full_psi,
    })
}

//! Probability measures and signed densities on finite product spaces Σⁿ,
//! stored as dense tables over the counting carrying measure. Index order is
//! lexicographic with x₁ most significant (see `index`), so prefix blocks are
//! contiguous and conditionals are slices.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{pack, table_len, unpack_into};

const UNIT_MASS_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-12;
/// Bisection tolerance on the row constant of the row-homogeneous construction.
const ROW_CONSTANT_TOL: f64 = 1e-12;
const ROW_BISECTION_MAX_ITERS: usize = 80;

/// A probability measure on Σⁿ, Σ = {0, …, a−1}, as a dense density table
/// with respect to the counting measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub(crate) n: usize,
    pub(crate) a: usize,
    pub(crate) p: Vec<f64>,
}

/// A real table on Σⁿ with no sign or normalization constraint: densities of
/// signed measures, differences of probability densities, and similar.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDensity {
    pub n: usize,
    pub a: usize,
    pub h: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates nonnegativity, unit mass (within 1e-12) and the table cap.
    pub fn new(n: usize, a: usize, p: Vec<f64>) -> Result<Self> {
        if n == 0 || a == 0 {
            return Err(Error::InvalidArgument(
                "dimension and alphabet size must be positive".into(),
            ));
        }
        let len = table_len(n, a)?;
        if p.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "density table has {} entries, expected {}^{} = {}",
                p.len(),
                a,
                n,
                len
            )));
        }
        let mut sum = 0.0;
        for &v in &p {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "density entry {v} is negative or not finite"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > UNIT_MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "density sums to {sum}, not 1"
            )));
        }
        Ok(DiscreteMeasure { n, a, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.a
    }

    pub fn density(&self) -> &[f64] {
        &self.p
    }

    /// Probability of a single point given by its coordinates.
    pub fn prob(&self, x: &[usize]) -> f64 {
        self.p[pack(x, self.a)]
    }

    /// Marginal masses of every prefix of length i, for i = 0..=n.
    /// Level i is a table of length a^i; level 0 is the single entry 1.
    pub fn prefix_mass_tables(&self) -> Vec<Vec<f64>> {
        let mut levels = vec![Vec::new(); self.n + 1];
        levels[self.n] = self.p.clone();
        for i in (0..self.n).rev() {
            let child = &levels[i + 1];
            let mut cur = vec![0.0; child.len() / self.a];
            for (y, slot) in cur.iter_mut().enumerate() {
                for w in 0..self.a {
                    *slot += child[y * self.a + w];
                }
            }
            levels[i] = cur;
        }
        levels
    }

    /// Measure of the first k coordinates, summing out x_{k+1..n}.
    pub fn marginal_prefix(&self, k: usize) -> Result<DiscreteMeasure> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidArgument(format!(
                "marginal length {k} out of range 1..={}",
                self.n
            )));
        }
        let block = self.p.len() / table_len(k, self.a)?;
        let q: Vec<f64> = self
            .p
            .chunks_exact(block)
            .map(|chunk| chunk.iter().sum())
            .collect();
        DiscreteMeasure::new(k, self.a, q)
    }

    /// Conditional law of X_{i+1..n} given X_{1..i} = prefix.
    /// The empty prefix returns the measure itself.
    pub fn conditional(&self, prefix: &[usize]) -> Result<DiscreteMeasure> {
        let i = prefix.len();
        if i >= self.n {
            return Err(Error::InvalidArgument(format!(
                "prefix length {i} leaves no suffix in dimension {}",
                self.n
            )));
        }
        if prefix.iter().any(|&w| w >= self.a) {
            return Err(Error::InvalidArgument(format!(
                "prefix {prefix:?} has a coordinate outside the alphabet"
            )));
        }
        if i == 0 {
            return Ok(self.clone());
        }
        let block = self.p.len() / table_len(i, self.a)?;
        let start = pack(prefix, self.a) * block;
        let slice = &self.p[start..start + block];
        let mass: f64 = slice.iter().sum();
        if mass <= 0.0 {
            return Err(Error::ZeroProbabilityPrefix {
                prefix: prefix.to_vec(),
            });
        }
        let q: Vec<f64> = slice.iter().map(|&v| v / mass).collect();
        DiscreteMeasure::new(self.n - i, self.a, q)
    }

    /// Law of Y with Y_i = X_(perm i), the permutation given 0-based.
    pub fn reindex(&self, perm: &[usize]) -> Result<DiscreteMeasure> {
        if perm.len() != self.n {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        let mut seen = vec![false; self.n];
        for &j in perm {
            if j >= self.n || seen[j] {
                return Err(Error::InvalidPermutation(perm.to_vec()));
            }
            seen[j] = true;
        }
        let mut q = vec![0.0; self.p.len()];
        let mut xd = vec![0; self.n];
        let mut yd = vec![0; self.n];
        for (idx, &v) in self.p.iter().enumerate() {
            unpack_into(idx, self.a, &mut xd);
            for (i, &src) in perm.iter().enumerate() {
                yd[i] = xd[src];
            }
            q[pack(&yd, self.a)] = v;
        }
        DiscreteMeasure::new(self.n, self.a, q)
    }

    /// Difference of densities as a signed table (self − other).
    pub fn signed_difference(&self, other: &DiscreteMeasure) -> Result<SignedDensity> {
        if self.n != other.n || self.a != other.a {
            return Err(Error::ShapeMismatch(format!(
                "({},{}) vs ({},{})",
                self.n, self.a, other.n, other.a
            )));
        }
        let h = self.p.iter().zip(&other.p).map(|(&x, &y)| x - y).collect();
        Ok(SignedDensity {
            n: self.n,
            a: self.a,
            h,
        })
    }

    /// True when the table factorizes as a product of its coordinate
    /// marginals within the given tolerance.
    pub fn is_product(&self, tol: f64) -> bool {
        let marginals: Vec<Vec<f64>> = (0..self.n)
            .map(|coord| {
                let mut m = vec![0.0; self.a];
                let mut digits = vec![0; self.n];
                for (idx, &v) in self.p.iter().enumerate() {
                    unpack_into(idx, self.a, &mut digits);
                    m[digits[coord]] += v;
                }
                m
            })
            .collect();
        let mut digits = vec![0; self.n];
        for (idx, &v) in self.p.iter().enumerate() {
            unpack_into(idx, self.a, &mut digits);
            let prod: f64 = digits
                .iter()
                .enumerate()
                .map(|(coord, &d)| marginals[coord][d])
                .product();
            if (prod - v).abs() > tol {
                return false;
            }
        }
        true
    }
}

impl SignedDensity {
    pub fn new(n: usize, a: usize, h: Vec<f64>) -> Result<Self> {
        let len = table_len(n, a)?;
        if h.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "table has {} entries, expected {len}",
                h.len()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry".into()));
        }
        Ok(SignedDensity { n, a, h })
    }
}

/// Total variation of the signed measure with density h: (1/2)·Σ|h|.
pub fn total_variation(h: &SignedDensity) -> f64 {
    0.5 * h.h.iter().map(|v| v.abs()).sum::<f64>()
}

/// Integral of the positive part, Σ (h)₊. Equals `total_variation` for
/// balanced h (Σh = 0).
pub fn positive_part_mass(h: &SignedDensity) -> f64 {
    h.h.iter().map(|&v| v.max(0.0)).sum()
}

/// Product measure from per-coordinate marginals over a shared alphabet.
pub fn make_product(marginals: &[Vec<f64>]) -> Result<DiscreteMeasure> {
    if marginals.is_empty() {
        return Err(Error::InvalidArgument("no marginals given".into()));
    }
    let a = marginals[0].len();
    for (i, m) in marginals.iter().enumerate() {
        if m.len() != a {
            return Err(Error::ShapeMismatch(format!(
                "marginal {i} has length {}, expected {a}",
                m.len()
            )));
        }
        validate_distribution(m, &format!("marginal {i}"))?;
    }
    let n = marginals.len();
    let len = table_len(n, a)?;
    let mut p = vec![1.0; 1];
    for m in marginals {
        let mut next = Vec::with_capacity(p.len() * a);
        for &v in &p {
            for &mv in m {
                next.push(v * mv);
            }
        }
        p = next;
    }
    debug_assert_eq!(p.len(), len);
    DiscreteMeasure::new(n, a, p)
}

/// Markov measure: p(x) = init(x₁)·∏ kernel(xᵢ, xᵢ₊₁).
pub fn make_markov(init: &[f64], kernel: &[Vec<f64>], n: usize) -> Result<DiscreteMeasure> {
    let a = init.len();
    validate_distribution(init, "initial distribution")?;
    if kernel.len() != a {
        return Err(Error::ShapeMismatch(format!(
            "kernel has {} rows, expected {a}",
            kernel.len()
        )));
    }
    for (row, r) in kernel.iter().enumerate() {
        if r.len() != a {
            return Err(Error::ShapeMismatch(format!(
                "kernel row {row} has length {}, expected {a}",
                r.len()
            )));
        }
        let sum: f64 = r.iter().sum();
        if r.iter().any(|&v| !v.is_finite() || v < 0.0) || (sum - 1.0).abs() > UNIT_MASS_TOL {
            return Err(Error::NonStochasticKernel { row, sum });
        }
    }
    table_len(n, a)?;
    let mut p = init.to_vec();
    for _ in 1..n {
        let mut next = Vec::with_capacity(p.len() * a);
        for (idx, &v) in p.iter().enumerate() {
            let last = idx % a;
            for w in 0..a {
                next.push(v * kernel[last][w]);
            }
        }
        p = next;
    }
    DiscreteMeasure::new(n, a, p)
}

/// Uniform measure on the binary sequences with x₁ = x_n:
/// p(x) = 2^(−n+1)·1{x₁ = x_n}.
pub fn make_forbidden(n: usize) -> Result<DiscreteMeasure> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "forbidden measure needs n >= 2".into(),
        ));
    }
    let len = table_len(n, 2)?;
    let mass = (2.0f64).powi(-(n as i32) + 1);
    let p = (0..len)
        .map(|idx| {
            let first = (idx >> (n - 1)) & 1;
            let last = idx & 1;
            if first == last {
                mass
            } else {
                0.0
            }
        })
        .collect();
    DiscreteMeasure::new(n, 2, p)
}

/// Binary measure with η̄_ij = 1/(n−i) for all 1 ≤ i < j ≤ n, built by
/// reweighting the uniform measure level by level: at level k mass is split
/// between {x_k = x_n} (weight p_k) and its complement (weight 1−p_k), with
/// p_k chosen by bisection so the row constant η̄_{k,k+1} hits 1/(n−k).
pub fn make_row_homogeneous(n: usize) -> Result<DiscreteMeasure> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "row-homogeneous measure needs n >= 2".into(),
        ));
    }
    let len = table_len(n, 2)?;
    let mut p = vec![1.0 / len as f64; len];
    for k in 1..n {
        let target = 1.0 / (n - k) as f64;
        // x_k is bit n-k, x_n is bit 0 (lexicographic, x1 most significant)
        let good = |idx: usize| ((idx >> (n - k)) & 1) == (idx & 1);
        let build = |pk: f64, base: &[f64]| -> Vec<f64> {
            let mut q: Vec<f64> = base
                .iter()
                .enumerate()
                .map(|(idx, &v)| v * if good(idx) { pk } else { 1.0 - pk })
                .collect();
            let s: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= s);
            q
        };
        let row_constant = |pk: f64| -> Result<f64> {
            let q = build(pk, &p);
            let m = DiscreteMeasure { n, a: 2, p: q };
            crate::mixing::eta_bar(&m, k, k + 1)
        };
        let h0 = row_constant(0.0)?;
        let h_half = row_constant(0.5)?;
        if (h0 - 1.0).abs() > 1e-9 || h_half.abs() > 1e-9 {
            return Err(Error::ConstructionFailure(format!(
                "level {k}: bisection endpoints h(0)={h0}, h(1/2)={h_half} do not bracket"
            )));
        }
        let pk = if (h0 - target).abs() <= ROW_CONSTANT_TOL {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0f64, 0.5f64);
            let mut mid = 0.25;
            for _ in 0..ROW_BISECTION_MAX_ITERS {
                mid = 0.5 * (lo + hi);
                let hm = row_constant(mid)?;
                if (hm - target).abs() <= ROW_CONSTANT_TOL {
                    break;
                }
                if hm > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            mid
        };
        p = build(pk, &p);
    }
    let m = DiscreteMeasure::new(n, 2, p)?;
    for i in 1..n {
        for j in i + 1..=n {
            let e = crate::mixing::eta_bar(&m, i, j)?;
            let want = 1.0 / (n - i) as f64;
            if (e - want).abs() > 1e-9 {
                return Err(Error::ConstructionFailure(format!(
                    "eta_bar({i},{j}) = {e}, wanted {want}"
                )));
            }
        }
    }
    Ok(m)
}

fn validate_distribution(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what} is empty")));
    }
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > UNIT_MASS_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {sum}, not 1"
        )));
    }
    Ok(())
}

/// A consistent family of measures indexed by dimension k = 1..=n over a
/// shared alphabet: integrating out the last coordinate of member k yields
/// member k−1.
#[derive(Debug, Clone)]
pub struct MeasureFamily {
    members: Vec<DiscreteMeasure>,
}

impl MeasureFamily {
    pub fn new(members: Vec<DiscreteMeasure>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("empty family".into()));
        }
        let a = members[0].a;
        for (k, m) in members.iter().enumerate() {
            if m.a != a || m.n != k + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "member {} has (n={}, a={}), expected (n={}, a={a})",
                    k,
                    m.n,
                    m.a,
                    k + 1
                )));
            }
        }
        for k in 1..members.len() {
            let projected = members[k].marginal_prefix(k)?;
            let worst = projected
                .p
                .iter()
                .zip(&members[k - 1].p)
                .map(|(&x, &y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            if worst > CONSISTENCY_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "family inconsistent at dimension {}: max marginal error {worst:e}",
                    k + 1
                )));
            }
        }
        Ok(MeasureFamily { members })
    }

    pub fn from_product(marginals: &[Vec<f64>]) -> Result<Self> {
        let members = (1..=marginals.len())
            .map(|k| make_product(&marginals[..k]))
            .collect::<Result<Vec<_>>>()?;
        MeasureFamily::new(members)
    }

    pub fn from_markov(init: &[f64], kernel: &[Vec<f64>], n: usize) -> Result<Self> {
        let members = (1..=n)
            .map(|k| make_markov(init, kernel, k))
            .collect::<Result<Vec<_>>>()?;
        MeasureFamily::new(members)
    }

    pub fn members(&self) -> &[DiscreteMeasure] {
        &self.members
    }

    /// H_P(k) = ‖Δ_k‖_∞ for each member.
    pub fn h_profile(&self) -> Result<Vec<f64>> {
        self.members.iter().map(crate::mixing::h_p).collect()
    }

    /// Largest H_P over the family; the family is reported η-mixing when this
    /// stays bounded as members are added.
    pub fn h_sup(&self) -> Result<f64> {
        Ok(self.h_profile()?.into_iter().fold(1.0, f64::max))
    }
}

/// Serializable description of a measure. `Explicit` carries the full density
/// table; round-trips of binary64 values through JSON are bit-faithful.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Product {
        marginals: Vec<Vec<f64>>,
    },
    Markov {
        init: Vec<f64>,
        kernel: Vec<Vec<f64>>,
        n: usize,
    },
    Forbidden {
        n: usize,
    },
    RowHomogeneous {
        n: usize,
    },
    Explicit {
        n: usize,
        a: usize,
        p: Vec<f64>,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::Product { marginals } => make_product(marginals),
            MeasureSpec::Markov { init, kernel, n } => make_markov(init, kernel, *n),
            MeasureSpec::Forbidden { n } => make_forbidden(*n),
            MeasureSpec::RowHomogeneous { n } => make_row_homogeneous(*n),
            MeasureSpec::Explicit { n, a, p } => DiscreteMeasure::new(*n, *a, p.clone()),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

impl DiscreteMeasure {
    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec::Explicit {
            n: self.n,
            a: self.a,
            p: self.p.clone(),
        }
    }
}

//! Consistent metric families on Σⁿ and Lipschitz machinery for dense
//! function tables: distances, diameters, Lipschitz constants and moduli of
//! continuity by exhaustive pair enumeration, seeded 1-Lipschitz test
//! functions via infimal convolution, and the drop-a-shared-coordinate
//! consistency check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::index::{table_len, DigitTable};

/// Distance comparisons use this slack throughout.
pub const DISTANCE_TOL: f64 = 1e-12;
/// Pairwise enumeration cap: (a^n)^2 must stay within 2^24 pairs.
const MAX_PAIR_POINTS: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    /// Number of disagreeing coordinates.
    Hamming,
    /// Hamming divided by n.
    NormalizedHamming,
    /// Sum over coordinates of |z−z′|/(m−1), m the alphabet size.
    GridDm,
    /// ℓ_p distance between grid points i/m: (Σ (|Δ|/m)^p)^(1/p).
    GridLp { p: f64 },
}

/// A metric on Σⁿ for every n at once; grid kinds identify the alphabet with
/// m grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub a: usize,
}

impl MetricSpec {
    pub fn hamming(a: usize) -> Result<Self> {
        Self::new(MetricKind::Hamming, a)
    }

    pub fn normalized_hamming(a: usize) -> Result<Self> {
        Self::new(MetricKind::NormalizedHamming, a)
    }

    pub fn grid_dm(m: usize) -> Result<Self> {
        Self::new(MetricKind::GridDm, m)
    }

    pub fn grid_lp(p: f64, m: usize) -> Result<Self> {
        Self::new(MetricKind::GridLp { p }, m)
    }

    pub fn new(kind: MetricKind, a: usize) -> Result<Self> {
        if a < 2 {
            return Err(Error::InvalidArgument(
                "metric needs an alphabet of size at least 2".into(),
            ));
        }
        if let MetricKind::GridLp { p } = kind {
            if !p.is_finite() || p < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "lp exponent must be a finite real >= 1, got {p}"
                )));
            }
        }
        Ok(MetricSpec { kind, a })
    }

    /// CLI grammar: "hamming", "nhamming", "dm:m", "lp:p:m". The Hamming
    /// kinds take the alphabet from `alphabet`; grid kinds carry their own m
    /// which must agree with `alphabet` when one is supplied.
    pub fn parse(s: &str, alphabet: Option<usize>) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let spec =
            match parts.as_slice() {
                ["hamming"] => Self::hamming(alphabet.ok_or_else(|| {
                    Error::InvalidArgument("hamming needs an alphabet size".into())
                })?)?,
                ["nhamming"] => Self::normalized_hamming(alphabet.ok_or_else(|| {
                    Error::InvalidArgument("nhamming needs an alphabet size".into())
                })?)?,
                ["dm", m] => Self::grid_dm(parse_usize(m)?)?,
                ["lp", p, m] => Self::grid_lp(parse_f64(p)?, parse_usize(m)?)?,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                    "unrecognized metric spec '{s}' (expected hamming | nhamming | dm:m | lp:p:m)"
                )))
                }
            };
        if let Some(a) = alphabet {
            if spec.a != a {
                return Err(Error::InvalidArgument(format!(
                    "metric alphabet {} does not match requested alphabet {a}",
                    spec.a
                )));
            }
        }
        Ok(spec)
    }

    pub fn spec_string(&self) -> String {
        match self.kind {
            MetricKind::Hamming => "hamming".into(),
            MetricKind::NormalizedHamming => "nhamming".into(),
            MetricKind::GridDm => format!("dm:{}", self.a),
            MetricKind::GridLp { p } => format!("lp:{}:{}", p, self.a),
        }
    }

    pub fn distance(&self, x: &[usize], y: &[usize]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let n = x.len();
        match self.kind {
            MetricKind::Hamming => x.iter().zip(y).filter(|(a, b)| a != b).count() as f64,
            MetricKind::NormalizedHamming => {
                x.iter().zip(y).filter(|(a, b)| a != b).count() as f64 / n as f64
            }
            MetricKind::GridDm => {
                let m1 = (self.a - 1) as f64;
                x.iter()
                    .zip(y)
                    .map(|(&xa, &yb)| (xa as f64 - yb as f64).abs() / m1)
                    .sum()
            }
            MetricKind::GridLp { p } => {
                let m = self.a as f64;
                if p == 1.0 {
                    x.iter()
                        .zip(y)
                        .map(|(&xa, &yb)| (xa as f64 - yb as f64).abs() / m)
                        .sum()
                } else {
                    let s: f64 = x
                        .iter()
                        .zip(y)
                        .map(|(&xa, &yb)| ((xa as f64 - yb as f64).abs() / m).powf(p))
                        .sum();
                    s.powf(1.0 / p)
                }
            }
        }
    }

    pub fn diameter(&self, n: usize) -> f64 {
        match self.kind {
            MetricKind::Hamming => n as f64,
            MetricKind::NormalizedHamming => 1.0,
            MetricKind::GridDm => n as f64,
            MetricKind::GridLp { p } => {
                (n as f64).powf(1.0 / p) * (self.a - 1) as f64 / self.a as f64
            }
        }
    }

    /// Smallest distance between distinct points.
    pub fn min_positive_distance(&self, n: usize) -> f64 {
        match self.kind {
            MetricKind::Hamming => 1.0,
            MetricKind::NormalizedHamming => 1.0 / n as f64,
            MetricKind::GridDm => 1.0 / (self.a - 1) as f64,
            MetricKind::GridLp { .. } => 1.0 / self.a as f64,
        }
    }

    /// Edge generators of the path metric (elementary moves plus the step
    /// length), when the metric is one. ℓ_p with p > 1 is not a path metric:
    /// summing elementary steps only bounds the ℓ₁ distance.
    pub(crate) fn path_edges(&self, n: usize) -> Option<PathEdges> {
        match self.kind {
            MetricKind::Hamming => Some(PathEdges::AnyValue { weight: 1.0 }),
            MetricKind::NormalizedHamming => Some(PathEdges::AnyValue {
                weight: 1.0 / n as f64,
            }),
            MetricKind::GridDm => Some(PathEdges::UnitStep {
                weight: 1.0 / (self.a - 1) as f64,
            }),
            MetricKind::GridLp { p } if p == 1.0 => Some(PathEdges::UnitStep {
                weight: 1.0 / self.a as f64,
            }),
            MetricKind::GridLp { .. } => None,
        }
    }
}

/// Elementary moves generating a path metric on one coordinate.
pub(crate) enum PathEdges {
    /// Change a coordinate to any other value at fixed cost.
    AnyValue { weight: f64 },
    /// Change a coordinate by ±1 at fixed cost.
    UnitStep { weight: f64 },
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("expected an integer, got '{s}'")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("expected a number, got '{s}'")))
}

/// A real-valued function on Σⁿ as a dense table in the shared lexicographic
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    pub n: usize,
    pub a: usize,
    pub values: Vec<f64>,
}

impl FunctionTable {
    pub fn new(n: usize, a: usize, values: Vec<f64>) -> Result<Self> {
        let len = table_len(n, a)?;
        if values.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "table has {} values, expected {len}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite function value".into()));
        }
        Ok(FunctionTable { n, a, values })
    }

    pub fn constant(n: usize, a: usize, value: f64) -> Result<Self> {
        let len = table_len(n, a)?;
        FunctionTable::new(n, a, vec![value; len])
    }

    /// Values as a bare JSON array, the on-disk format.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.values)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>, n: usize, a: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let values: Vec<f64> = serde_json::from_str(&text)?;
        FunctionTable::new(n, a, values)
    }
}

fn check_pair_budget(n: usize, a: usize) -> Result<DigitTable> {
    let len = table_len(n, a)?;
    if len > MAX_PAIR_POINTS {
        return Err(Error::TooLarge(format!(
            "pairwise enumeration over {len} points exceeds 2^24 pairs"
        )));
    }
    DigitTable::new(n, a)
}

/// Smallest C with |f(x)−f(y)| ≤ C·ρ(x,y), by exhaustive pair enumeration.
pub fn lipschitz_constant(f: &FunctionTable, spec: &MetricSpec) -> Result<f64> {
    check_shapes(f, spec)?;
    let digits = check_pair_budget(f.n, f.a)?;
    let len = digits.len();
    let mut best = 0.0f64;
    for x in 0..len {
        for y in x + 1..len {
            let d = spec.distance(digits.row(x), digits.row(y));
            let ratio = (f.values[x] - f.values[y]).abs() / d;
            best = best.max(ratio);
        }
    }
    Ok(best)
}

/// Modulus of continuity ω_f(δ) = sup{|f(x)−f(y)| : ρ(x,y) < δ}; 0 when no
/// pair is that close.
pub fn modulus_of_continuity(f: &FunctionTable, spec: &MetricSpec, delta: f64) -> Result<f64> {
    if delta <= 0.0 {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    check_shapes(f, spec)?;
    let digits = check_pair_budget(f.n, f.a)?;
    let len = digits.len();
    let mut best = 0.0f64;
    for x in 0..len {
        for y in x + 1..len {
            if spec.distance(digits.row(x), digits.row(y)) < delta {
                best = best.max((f.values[x] - f.values[y]).abs());
            }
        }
    }
    Ok(best)
}

/// Seeded 1-Lipschitz test function with range in [0, diam]: the infimal
/// convolution g(x) = min_y (c(y) + ρ(x,y)) of random anchor values c,
/// clamped to the range.
pub fn random_lipschitz(spec: &MetricSpec, n: usize, seed: u64) -> Result<FunctionTable> {
    let digits = check_pair_budget(n, spec.a)?;
    let len = digits.len();
    let diam = spec.diameter(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchors: Vec<f64> = (0..len)
        .map(|_| rng.random_range(0.0..2.0 * diam))
        .collect();
    let mut values = vec![0.0; len];
    for x in 0..len {
        let mut best = f64::INFINITY;
        for y in 0..len {
            let v = anchors[y] + spec.distance(digits.row(x), digits.row(y));
            best = best.min(v);
        }
        values[x] = best.clamp(0.0, diam);
    }
    FunctionTable::new(n, spec.a, values)
}

/// True when dropping any shared coordinate preserves the distance for every
/// pair, i.e. the family is consistent across dimensions.
pub fn check_consistency(spec: &MetricSpec, n: usize) -> Result<bool> {
    if n < 2 {
        return Ok(true);
    }
    let digits = check_pair_budget(n, spec.a)?;
    let len = digits.len();
    let mut dx = vec![0; n - 1];
    let mut dy = vec![0; n - 1];
    for x in 0..len {
        for y in x + 1..len {
            let rx = digits.row(x);
            let ry = digits.row(y);
            let d = spec.distance(rx, ry);
            for i in 0..n {
                if rx[i] != ry[i] {
                    continue;
                }
                drop_coord(rx, i, &mut dx);
                drop_coord(ry, i, &mut dy);
                if (spec.distance(&dx, &dy) - d).abs() > DISTANCE_TOL {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn drop_coord(src: &[usize], i: usize, out: &mut [usize]) {
    out[..i].copy_from_slice(&src[..i]);
    out[i..].copy_from_slice(&src[i + 1..]);
}

fn check_shapes(f: &FunctionTable, spec: &MetricSpec) -> Result<()> {
    if f.a != spec.a {
        return Err(Error::ShapeMismatch(format!(
            "function alphabet {} vs metric alphabet {}",
            f.a, spec.a
        )));
    }
    Ok(())
}

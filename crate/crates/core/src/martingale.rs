//! Exact martingale differences of the coordinate filtration: conditional
//! means, the differences V_i and the two-point comparisons V̂_i, the signed
//! density representing V̂_i as a linear functional, sup norms over
//! positive-probability prefixes, and the check that max_i ‖V_i‖ stays below
//! Lip(f)·‖Δ_n‖_∞.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{pack, pow, unpack};
use crate::measure::{DiscreteMeasure, SignedDensity};
use crate::metric::{lipschitz_constant, FunctionTable, MetricSpec};
use crate::mixing::delta_matrix;

/// Conditional means E[f | X_{1..i} = y] and masses for every prefix,
/// built bottom-up so all levels share one pass over the table.
struct PrefixTables {
    masses: Vec<Vec<f64>>, // level i has a^i entries; level 0 is [1]
    fsums: Vec<Vec<f64>>,  // Σ_suffix p·f per prefix
}

impl PrefixTables {
    fn build(m: &DiscreteMeasure, f: &FunctionTable) -> Result<Self> {
        check_shapes(m, f)?;
        let n = m.n();
        let a = m.alphabet();
        let mut masses = vec![Vec::new(); n + 1];
        let mut fsums = vec![Vec::new(); n + 1];
        masses[n] = m.density().to_vec();
        fsums[n] = m
            .density()
            .iter()
            .zip(&f.values)
            .map(|(&p, &v)| p * v)
            .collect();
        for i in (0..n).rev() {
            let (mnext, fnext) = (&masses[i + 1], &fsums[i + 1]);
            let len = mnext.len() / a;
            let mut mcur = vec![0.0; len];
            let mut fcur = vec![0.0; len];
            for y in 0..len {
                for w in 0..a {
                    mcur[y] += mnext[y * a + w];
                    fcur[y] += fnext[y * a + w];
                }
            }
            masses[i] = mcur;
            fsums[i] = fcur;
        }
        Ok(PrefixTables { masses, fsums })
    }

    fn mean(&self, level: usize, prefix_idx: usize) -> Option<f64> {
        let mass = self.masses[level][prefix_idx];
        if mass > 0.0 {
            Some(self.fsums[level][prefix_idx] / mass)
        } else {
            None
        }
    }
}

fn check_shapes(m: &DiscreteMeasure, f: &FunctionTable) -> Result<()> {
    if f.n != m.n() || f.a != m.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "function is ({}, {}), measure is ({}, {})",
            f.n,
            f.a,
            m.n(),
            m.alphabet()
        )));
    }
    Ok(())
}

fn check_prefix(m: &DiscreteMeasure, prefix: &[usize]) -> Result<()> {
    if prefix.len() > m.n() || prefix.iter().any(|&w| w >= m.alphabet()) {
        return Err(Error::InvalidArgument(format!(
            "prefix {prefix:?} invalid for ({}, {})",
            m.n(),
            m.alphabet()
        )));
    }
    Ok(())
}

/// E[f(X) | X_{1..i} = prefix]; the empty prefix gives E f, a full-length
/// prefix gives f(prefix).
pub fn conditional_mean(m: &DiscreteMeasure, f: &FunctionTable, prefix: &[usize]) -> Result<f64> {
    check_shapes(m, f)?;
    check_prefix(m, prefix)?;
    let i = prefix.len();
    let block = pow(m.alphabet(), m.n() - i);
    let start = pack(prefix, m.alphabet()) * block;
    let p = &m.density()[start..start + block];
    let fv = &f.values[start..start + block];
    let mass: f64 = p.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroProbabilityPrefix {
            prefix: prefix.to_vec(),
        });
    }
    Ok(p.iter().zip(fv).map(|(&pv, &v)| pv * v).sum::<f64>() / mass)
}

/// Martingale difference V_i(f; y) = E[f | y_{1..i}] − E[f | y_{1..i−1}].
pub fn v_i(m: &DiscreteMeasure, f: &FunctionTable, i: usize, y: &[usize]) -> Result<f64> {
    if i == 0 || i > m.n() || y.len() != i {
        return Err(Error::InvalidArgument(format!(
            "level {i} needs a prefix of that length within 1..=n, got {} coordinates",
            y.len()
        )));
    }
    Ok(conditional_mean(m, f, y)? - conditional_mean(m, f, &y[..i - 1])?)
}

/// Two-point comparison V̂_i(f; y, w, w′) = E[f | y w] − E[f | y w′].
pub fn v_hat(
    m: &DiscreteMeasure,
    f: &FunctionTable,
    i: usize,
    y: &[usize],
    w: usize,
    w_prime: usize,
) -> Result<f64> {
    if i == 0 || i > m.n() || y.len() != i - 1 {
        return Err(Error::InvalidArgument(format!(
            "level {i} needs a stub of length {}, got {}",
            i.saturating_sub(1),
            y.len()
        )));
    }
    let mut yw = y.to_vec();
    yw.push(w);
    let left = conditional_mean(m, f, &yw)?;
    *yw.last_mut().unwrap() = w_prime;
    Ok(left - conditional_mean(m, f, &yw)?)
}

/// The signed density ĝ with ⟨f, ĝ⟩ = V̂_i(f; y, w, w′) for every f (counting
/// carrying measure): the conditional suffix density at [y w] minus the one
/// at [y w′], each supported on its own prefix cylinder.
pub fn ghat_density(
    m: &DiscreteMeasure,
    i: usize,
    y: &[usize],
    w: usize,
    w_prime: usize,
) -> Result<SignedDensity> {
    if i == 0 || i > m.n() || y.len() != i - 1 {
        return Err(Error::InvalidArgument(format!(
            "level {i} needs a stub of length {}, got {}",
            i.saturating_sub(1),
            y.len()
        )));
    }
    check_prefix(m, y)?;
    if w >= m.alphabet() || w_prime >= m.alphabet() {
        return Err(Error::InvalidArgument(
            "coordinate outside the alphabet".into(),
        ));
    }
    let a = m.alphabet();
    let n = m.n();
    let block = pow(a, n - i);
    let p = m.density();
    let mut h = vec![0.0; p.len()];
    for (value, sign) in [(w, 1.0), (w_prime, -1.0)] {
        let start = (pack(y, a) * a + value) * block;
        let mass: f64 = p[start..start + block].iter().sum();
        if mass <= 0.0 {
            return Err(Error::ZeroProbabilityPrefix {
                prefix: y.iter().copied().chain([value]).collect(),
            });
        }
        for (slot, &pv) in h[start..start + block]
            .iter_mut()
            .zip(&p[start..start + block])
        {
            *slot += sign * pv / mass;
        }
    }
    SignedDensity::new(n, a, h)
}

/// All martingale differences of f along the coordinate filtration:
/// `level(i)` tabulates V_i(f; y) over prefixes y ∈ Σⁱ (None on
/// zero-probability prefixes) and `sup_norms[i−1]` is ‖V_i‖_{L_∞(P)}.
#[derive(Debug, Clone)]
pub struct MartingaleProfile {
    levels: Vec<Vec<Option<f64>>>,
    sup_norms: Vec<f64>,
}

impl MartingaleProfile {
    pub fn level(&self, i: usize) -> &[Option<f64>] {
        &self.levels[i - 1]
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }

    /// Σ_i ‖V_i‖²_∞, the variance proxy fed to the Azuma bound.
    pub fn azuma_d2(&self) -> f64 {
        self.sup_norms.iter().map(|v| v * v).sum()
    }
}

pub fn martingale_profile(m: &DiscreteMeasure, f: &FunctionTable) -> Result<MartingaleProfile> {
    let tables = PrefixTables::build(m, f)?;
    let a = m.alphabet();
    let mut levels = Vec::with_capacity(m.n());
    let mut sup_norms = Vec::with_capacity(m.n());
    for i in 1..=m.n() {
        let mut level = vec![None; tables.masses[i].len()];
        let mut sup = 0.0f64;
        for (y, slot) in level.iter_mut().enumerate() {
            if let (Some(cur), Some(prev)) = (tables.mean(i, y), tables.mean(i - 1, y / a)) {
                let v = cur - prev;
                sup = sup.max(v.abs());
                *slot = Some(v);
            }
        }
        levels.push(level);
        sup_norms.push(sup);
    }
    Ok(MartingaleProfile { levels, sup_norms })
}

/// Report of the martingale-difference bound max_i ‖V_i‖ ≤ Lip(f)·‖Δ_n‖_∞.
#[derive(Debug, Clone, Serialize)]
pub struct VdReport {
    pub sup_norms: Vec<f64>,
    pub max_sup_norm: f64,
    pub lip: f64,
    pub delta_inf_norm: f64,
    pub bound: f64,
    /// bound − max_i ‖V_i‖; nonnegative (within 1e−9) iff the bound holds.
    pub slack: f64,
    pub pass: bool,
    /// Attaining (i, prefix) when the bound fails.
    pub witness: Option<(usize, Vec<usize>)>,
}

pub const VD_TOL: f64 = 1e-9;

pub fn check_vd_bound(
    m: &DiscreteMeasure,
    f: &FunctionTable,
    spec: &MetricSpec,
) -> Result<VdReport> {
    let profile = martingale_profile(m, f)?;
    let lip = lipschitz_constant(f, spec)?;
    let delta_inf_norm = delta_matrix(m)?.inf_norm();
    let bound = lip * delta_inf_norm;
    let max_sup_norm = profile.sup_norms.iter().copied().fold(0.0, f64::max);
    let pass = max_sup_norm <= bound + VD_TOL;
    let witness = if pass {
        None
    } else {
        let i = profile
            .sup_norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(idx, _)| idx + 1)
            .unwrap();
        let (y, _) = profile.levels[i - 1]
            .iter()
            .enumerate()
            .filter_map(|(y, v)| v.map(|v| (y, v.abs())))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        Some((i, unpack(y, i, m.alphabet())))
    };
    Ok(VdReport {
        sup_norms: profile.sup_norms.clone(),
        max_sup_norm,
        lip,
        delta_inf_norm,
        bound,
        slack: bound - max_sup_norm,
        pass,
        witness,
    })
}

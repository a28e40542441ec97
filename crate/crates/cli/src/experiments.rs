//! The two norm-asymptotics experiments: R_n = ‖Γ_n‖₂/‖Δ_n‖_∞ across the
//! row-homogeneous and forbidden families, and the effect of re-indexing the
//! forbidden measure's coordinates on its mixing norm.

use concentration_lab::bounds::main_bound;
use concentration_lab::measure::{make_forbidden, make_row_homogeneous};
use concentration_lab::metric::lipschitz_constant;
use concentration_lab::mixing::norm_summary;
use concentration_lab::{Error, FunctionTable, MetricSpec, Result};
use serde::Serialize;

use crate::output::CSV_VERSION_HEADER;

#[derive(Debug, Clone, Serialize)]
pub struct RnRow {
    pub family: &'static str,
    pub n: usize,
    pub delta_inf_norm: f64,
    pub gamma_spectral_norm: f64,
    pub r_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RnTable {
    pub rows: Vec<RnRow>,
}

impl RnTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_VERSION_HEADER);
        out.push('\n');
        out.push_str("family,n,delta_inf_norm,gamma_spectral_norm,r_n\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.family, r.n, r.delta_inf_norm, r.gamma_spectral_norm, r.r_n
            ));
        }
        out
    }

    pub fn family(&self, name: &str) -> Vec<&RnRow> {
        self.rows.iter().filter(|r| r.family == name).collect()
    }
}

/// Norms and R_n per dimension for both constructions.
pub fn rn_experiment(n_min: usize, n_max: usize) -> Result<RnTable> {
    if n_min < 2 || n_min > n_max || n_max > 16 {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= n_min <= n_max <= 16, got {n_min}..{n_max}"
        )));
    }
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        for (family, measure) in [
            ("row_homogeneous", make_row_homogeneous(n)?),
            ("forbidden", make_forbidden(n)?),
        ] {
            let s = norm_summary(&measure)?;
            rows.push(RnRow {
                family,
                n,
                delta_inf_norm: s.inf_norm,
                gamma_spectral_norm: s.spectral_norm,
                r_n: s.r_n,
            });
        }
    }
    Ok(RnTable { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReindexCurvePoint {
    pub t: f64,
    pub bound_original: f64,
    pub bound_reindexed: f64,
    pub exact_tail_original: f64,
    pub exact_tail_reindexed: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReindexReport {
    pub n: usize,
    pub inf_norm_original: f64,
    pub inf_norm_reindexed: f64,
    pub lip: f64,
    /// Exact deviation probabilities agree pointwise: the symmetric statistic
    /// has the same law under both coordinate orders.
    pub exact_deviation_equal: bool,
    pub points: Vec<ReindexCurvePoint>,
}

/// Swaps coordinates 2 and n of the forbidden measure and reports the mixing
/// norm and main-bound curve before and after, for the symmetric statistic
/// f = mean of bits under the normalized Hamming metric.
pub fn reindex_experiment(n: usize) -> Result<ReindexReport> {
    if n < 3 {
        return Err(Error::InvalidArgument("need n >= 3".into()));
    }
    let original = make_forbidden(n)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(1, n - 1);
    let reindexed = original.reindex(&perm)?;

    let inf_norm_original = norm_summary(&original)?.inf_norm;
    let inf_norm_reindexed = norm_summary(&reindexed)?.inf_norm;

    let metric = MetricSpec::normalized_hamming(2)?;
    let f = FunctionTable::new(
        n,
        2,
        (0..1usize << n)
            .map(|i| (i as u32).count_ones() as f64 / n as f64)
            .collect(),
    )?;
    let lip = lipschitz_constant(&f, &metric)?;

    let mean = |m: &concentration_lab::DiscreteMeasure| -> f64 {
        f.values.iter().zip(m.density()).map(|(&v, &p)| v * p).sum()
    };
    let tail = |m: &concentration_lab::DiscreteMeasure, center: f64, t: f64| -> f64 {
        f.values
            .iter()
            .zip(m.density())
            .filter(|(&v, _)| (v - center).abs() > t)
            .map(|(_, &p)| p)
            .sum()
    };
    let mu_orig = mean(&original);
    let mu_re = mean(&reindexed);

    let mut exact_deviation_equal = true;
    let points: Vec<ReindexCurvePoint> = (0..=20)
        .map(|k| {
            let t = k as f64 / 20.0;
            let exact_tail_original = tail(&original, mu_orig, t);
            let exact_tail_reindexed = tail(&reindexed, mu_re, t);
            if (exact_tail_original - exact_tail_reindexed).abs() > 1e-12 {
                exact_deviation_equal = false;
            }
            ReindexCurvePoint {
                t,
                bound_original: main_bound(n, lip, inf_norm_original, t, true),
                bound_reindexed: main_bound(n, lip, inf_norm_reindexed, t, true),
                exact_tail_original,
                exact_tail_reindexed,
            }
        })
        .collect();

    Ok(ReindexReport {
        n,
        inf_norm_original,
        inf_norm_reindexed,
        lip,
        exact_deviation_equal,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rn_table_shape_and_exact_columns() {
        let table = rn_experiment(4, 6).unwrap();
        assert_eq!(table.rows.len(), 6);
        for row in table.family("forbidden") {
            assert_eq!(row.delta_inf_norm, row.n as f64);
        }
        for row in table.family("row_homogeneous") {
            assert!((row.delta_inf_norm - 2.0).abs() < 1e-9);
        }
        let csv = table.to_csv();
        assert!(csv.starts_with("# concentration-lab v1\n"));
        assert!(csv.contains("forbidden,5,5,"));
    }

    #[test]
    fn rn_trends() {
        let table = rn_experiment(4, 8).unwrap();
        let rh: Vec<f64> = table
            .family("row_homogeneous")
            .iter()
            .map(|r| r.r_n)
            .collect();
        let fb: Vec<f64> = table.family("forbidden").iter().map(|r| r.r_n).collect();
        assert!(rh.windows(2).all(|w| w[1] > w[0]));
        assert!(fb.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rn_rejects_out_of_range() {
        assert!(rn_experiment(1, 5).is_err());
        assert!(rn_experiment(4, 17).is_err());
        assert!(rn_experiment(8, 4).is_err());
    }

    #[test]
    fn reindex_drops_norm_to_two() {
        let report = reindex_experiment(6).unwrap();
        assert_eq!(report.inf_norm_original, 6.0);
        assert_eq!(report.inf_norm_reindexed, 2.0);
        assert!(report.exact_deviation_equal);
        // the reindexed bound is pointwise at least as tight
        for p in &report.points {
            assert!(p.bound_reindexed <= p.bound_original + 1e-12);
        }
        assert!(reindex_experiment(2).is_err());
    }
}

//! Monte Carlo tail estimation against the implemented deviation bounds:
//! empirical exceedance frequencies with Wilson 95% intervals, one column per
//! bound, and violation flags for bounds undercut beyond sampling noise.

use concentration_lab::bounds::{azuma_bound, main_bound, mcdiarmid_bound, samson_bound};
use concentration_lab::martingale::martingale_profile;
use concentration_lab::metric::lipschitz_constant;
use concentration_lab::mixing::{delta_matrix, gamma_matrix};
use concentration_lab::{DiscreteMeasure, Error, FunctionTable, MetricSpec, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{wilson95, CSV_VERSION_HEADER};
use crate::sampler::{SequentialSampler, RNG_ALGORITHM};

/// Sampling is split into fixed-size batches; batch b is its own virtual
/// worker seeded with seed ⊕ b, so results do not depend on thread count.
const BATCH: u64 = 8192;
/// Expectations are exact below this table size, sample means above.
const EXACT_MEAN_CAP: usize = 1 << 20;

pub struct TailInputs {
    pub measure: DiscreteMeasure,
    pub metric: MetricSpec,
    pub f: FunctionTable,
    pub t_grid: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub convex_attested: bool,
    /// Center tails at the sample mean even when the exact one is available.
    pub force_sampled_mean: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundEval {
    pub name: &'static str,
    pub value: f64,
    pub applicable: bool,
    pub vacuous: bool,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub bounds: Vec<BoundEval>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub rng_algorithm: &'static str,
    pub seed: u64,
    pub samples: u64,
    pub mean: f64,
    pub mean_exact: bool,
    pub mean_std_error: Option<f64>,
    pub lip: f64,
    pub delta_inf_norm: f64,
    pub azuma_d2: f64,
    pub gamma_spectral_norm: f64,
    pub violations: usize,
    pub rows: Vec<TailRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailSummary {
    pub violations: usize,
    pub samples: u64,
    pub mean: f64,
    pub mean_exact: bool,
    pub rng_algorithm: &'static str,
    pub seed: u64,
}

impl TailReport {
    pub fn summary(&self) -> TailSummary {
        TailSummary {
            violations: self.violations,
            samples: self.samples,
            mean: self.mean,
            mean_exact: self.mean_exact,
            rng_algorithm: self.rng_algorithm,
            seed: self.seed,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_VERSION_HEADER);
        out.push('\n');
        out.push_str(&format!(
            "# rng {} seed {}\n",
            self.rng_algorithm, self.seed
        ));
        out.push_str("t,empirical,wilson_lo,wilson_hi");
        if let Some(first) = self.rows.first() {
            for b in &first.bounds {
                out.push_str(&format!(
                    ",{name},{name}_applicable,{name}_vacuous,{name}_violated",
                    name = b.name
                ));
            }
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}",
                row.t, row.empirical, row.wilson_lo, row.wilson_hi
            ));
            for b in &row.bounds {
                out.push_str(&format!(
                    ",{},{},{},{}",
                    b.value, b.applicable as u8, b.vacuous as u8, b.violated as u8
                ));
            }
            out.push('\n');
        }
        out
    }
}

/// Guarded exponential bounds: a constant f has zero scale, where every
/// deviation probability is 0 for t > 0 and the convention value is 2 at 0.
fn scaled_or_degenerate(t: f64, scale: f64, eval: impl Fn(f64) -> f64) -> f64 {
    if scale > 0.0 {
        eval(t / scale)
    } else if t == 0.0 {
        2.0
    } else {
        0.0
    }
}

pub fn monte_carlo_tail(inputs: &TailInputs) -> Result<TailReport> {
    let TailInputs {
        measure,
        metric,
        f,
        t_grid,
        samples,
        seed,
        convex_attested,
        force_sampled_mean,
    } = inputs;
    if *samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "t grid must be nonempty and strictly increasing".into(),
        ));
    }
    if f.n != measure.n() || f.a != measure.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "function is ({}, {}), measure is ({}, {})",
            f.n,
            f.a,
            measure.n(),
            measure.alphabet()
        )));
    }

    let n = measure.n();
    let a = measure.alphabet();
    let lip = lipschitz_constant(f, metric)?;
    let delta_inf_norm = delta_matrix(measure)?.inf_norm();
    let azuma_d2 = martingale_profile(measure, f)?.azuma_d2();
    let gamma_spectral_norm = gamma_matrix(measure)?.spectral_norm()?;
    let lip_normalized = lipschitz_constant(f, &MetricSpec::normalized_hamming(a)?)?;
    let lip_l2 = lipschitz_constant(f, &MetricSpec::grid_lp(2.0, a)?)?;
    let is_product = measure.is_product(1e-12);

    // one fixed batch partition regardless of thread count
    let sampler = SequentialSampler::new(measure);
    let n_batches = samples.div_ceil(BATCH);
    let values: Vec<f64> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let quota = BATCH.min(samples - b * BATCH);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ b);
            (0..quota)
                .map(|_| f.values[sampler.draw_index(&mut rng)])
                .collect::<Vec<f64>>()
        })
        .flatten()
        .collect();
    debug_assert_eq!(values.len() as u64, *samples);

    let (mean, mean_exact, mean_std_error) =
        if f.values.len() <= EXACT_MEAN_CAP && !force_sampled_mean {
            let exact: f64 = f
                .values
                .iter()
                .zip(measure.density())
                .map(|(&v, &p)| v * p)
                .sum();
            (exact, true, None)
        } else {
            let m = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                / (values.len() as f64 - 1.0).max(1.0);
            (m, false, Some((var / values.len() as f64).sqrt()))
        };

    let mut rows = Vec::with_capacity(t_grid.len());
    let mut violations = 0usize;
    for &t in t_grid {
        let exceed = values.iter().filter(|&&v| (v - mean).abs() > t).count() as u64;
        let empirical = exceed as f64 / *samples as f64;
        let (wilson_lo, wilson_hi) = wilson95(exceed, *samples);

        let main_value = if lip > 0.0 {
            main_bound(n, lip, delta_inf_norm, t, false)
        } else if t == 0.0 {
            2.0
        } else {
            0.0
        };
        let mcd_value = scaled_or_degenerate(t, lip_normalized, |s| mcdiarmid_bound(n, s));
        let azuma_value = if azuma_d2 > 0.0 {
            azuma_bound(azuma_d2, t)?
        } else if t == 0.0 {
            2.0
        } else {
            0.0
        };
        let samson_value =
            scaled_or_degenerate(t, lip_l2, |s| samson_bound(gamma_spectral_norm, s));

        let evals = [
            ("main", main_value, true),
            ("mcdiarmid", mcd_value, is_product),
            ("azuma", azuma_value, true),
            ("samson", samson_value, *convex_attested),
        ];
        let bounds: Vec<BoundEval> = evals
            .into_iter()
            .map(|(name, value, applicable)| {
                let violated = applicable && wilson_lo > value + 1e-12;
                if violated {
                    violations += 1;
                }
                BoundEval {
                    name,
                    value,
                    applicable,
                    vacuous: value > 1.0,
                    violated,
                }
            })
            .collect();
        rows.push(TailRow {
            t,
            empirical,
            wilson_lo,
            wilson_hi,
            bounds,
        });
    }

    Ok(TailReport {
        rng_algorithm: RNG_ALGORITHM,
        seed: *seed,
        samples: *samples,
        mean,
        mean_exact,
        mean_std_error,
        lip,
        delta_inf_norm,
        azuma_d2,
        gamma_spectral_norm,
        violations,
        rows,
    })
}

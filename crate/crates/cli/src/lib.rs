//! Library half of the command-line laboratory: experiment configuration,
//! sequential sampling, the Monte Carlo tail harness, and the norm-asymptotics
//! experiments. The binary in `main.rs` is a thin argument-parsing layer over
//! these.

pub mod experiments;
pub mod output;
pub mod sampler;
pub mod tail;

use std::path::{Path, PathBuf};

use concentration_lab::metric::random_lipschitz;
use concentration_lab::{Error, FunctionTable, MeasureSpec, MetricSpec, Result};
use serde::{Deserialize, Serialize};

use tail::TailInputs;

/// Function input for an experiment: either a JSON array on disk or a seed
/// for the 1-Lipschitz generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    File { file: PathBuf },
    Seed { seed: u64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

/// On-disk description of a tail experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Path to a measure-spec JSON file.
    pub measure: PathBuf,
    /// Metric spec string: hamming | nhamming | dm:m | lp:p:m.
    pub metric: String,
    pub function: FunctionSpec,
    pub t_grid: TGrid,
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub convex_attested: bool,
    /// Use the sample mean even when the exact expectation fits in memory.
    #[serde(default)]
    pub force_sampled_mean: bool,
    /// CSV destination; stdout when omitted.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        // paths inside the config resolve relative to the config file
        if let Some(dir) = path.parent() {
            if config.measure.is_relative() {
                config.measure = dir.join(&config.measure);
            }
            if let FunctionSpec::File { file } = &mut config.function {
                if file.is_relative() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn resolve(&self) -> Result<TailInputs> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument(
                "sample count must be at least 1".into(),
            ));
        }
        let measure = MeasureSpec::load(&self.measure)?.build()?;
        let metric = MetricSpec::parse(&self.metric, Some(measure.alphabet()))?;
        let f = match &self.function {
            FunctionSpec::File { file } => {
                FunctionTable::load(file, measure.n(), measure.alphabet())?
            }
            FunctionSpec::Seed { seed } => random_lipschitz(&metric, measure.n(), *seed)?,
        };
        let t_grid = output::t_grid(self.t_grid.start, self.t_grid.stop, self.t_grid.steps)?;
        Ok(TailInputs {
            measure,
            metric,
            f,
            t_grid,
            samples: self.samples,
            seed: self.seed,
            convex_attested: self.convex_attested,
            force_sampled_mean: self.force_sampled_mean,
        })
    }
}

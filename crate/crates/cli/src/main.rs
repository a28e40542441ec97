use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use concentration_lab::bounds::BoundCurve;
use concentration_lab::functionals::{check_psi_dominance, WeightedSpace};
use concentration_lab::martingale::check_vd_bound;
use concentration_lab::mixing::{delta_matrix, gamma_matrix, norm_summary, MixingMatrix};
use concentration_lab::{Error, FunctionTable, MeasureSpec, MetricSpec, Result};
use concentration_lab_cli::experiments::{reindex_experiment, rn_experiment};
use concentration_lab_cli::output::{parse_t_grid, CSV_VERSION_HEADER};
use concentration_lab_cli::tail::monte_carlo_tail;
use concentration_lab_cli::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "concentration-lab",
    version,
    about = "Mixing matrices, Lipschitz functionals and deviation bounds on finite product spaces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixArg {
    Delta,
    Gamma,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    /// Counting measure: every cell weighs 1.
    Counting,
    /// Grid measure on the unit interval: every coordinate cell weighs 1/a.
    Grid,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a measure spec; optionally take a prefix marginal and write
    /// the explicit density table back out.
    Measure {
        #[arg(long)]
        spec: PathBuf,
        /// Keep only the first K coordinates before reporting.
        #[arg(long)]
        marginal: Option<usize>,
        /// Write the (possibly marginalized) measure as an explicit spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixing matrix of a measure as CSV plus a JSON norm summary.
    Mixing {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_enum, default_value = "delta")]
        matrix: MatrixArg,
        /// Write (row, col, value) triplets here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random-function check that the Φ-norm stays below the Ψ-norm.
    Dominance {
        /// Metric spec: hamming | nhamming | dm:m | lp:p:m.
        #[arg(long)]
        metric: String,
        #[arg(long)]
        n: usize,
        /// Alphabet size; required for the Hamming kinds.
        #[arg(long)]
        a: Option<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "counting")]
        weights: WeightsArg,
    },
    /// Martingale difference profile of f and the Lip(f)·‖Δ‖ check.
    Martingale {
        #[arg(long)]
        measure: PathBuf,
        /// Function table as a JSON array matching the measure's shape.
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        metric: String,
    },
    /// Evaluate a named bound curve over a t grid as CSV.
    Bounds {
        /// azuma | main | mcdiarmid | marton | samson | constant.
        #[arg(long)]
        curve: String,
        /// Curve parameters as repeated key=value pairs.
        #[arg(long = "params")]
        params: Vec<String>,
        /// Grid start:stop:steps.
        #[arg(long = "t-grid")]
        t_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo tail frequencies against every applicable bound.
    Tail {
        #[arg(long)]
        config: PathBuf,
    },
    /// R_n = ‖Γ‖₂/‖Δ‖_∞ across the row-homogeneous and forbidden families.
    Rn {
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixing norm of the forbidden measure before and after swapping
    /// coordinates 2 and n.
    Reindex {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(violation_found) => {
            if violation_found {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

/// Ok(true) means a check ran and found a violation (exit code 1).
fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Measure {
            spec,
            marginal,
            out,
        } => {
            let mut measure = MeasureSpec::load(&spec)?.build()?;
            if let Some(k) = marginal {
                measure = measure.marginal_prefix(k)?;
            }
            if let Some(path) = &out {
                measure.to_spec().save(path)?;
            }
            let p = measure.density();
            let mass: f64 = p.iter().sum();
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "n": measure.n(),
                    "a": measure.alphabet(),
                    "entries": p.len(),
                    "mass": mass,
                    "min": p.iter().cloned().fold(f64::INFINITY, f64::min),
                    "max": p.iter().cloned().fold(0.0f64, f64::max),
                    "is_product": measure.is_product(1e-12),
                    "written": out,
                }))?
            );
            Ok(false)
        }
        Cmd::Mixing {
            measure,
            matrix,
            csv,
        } => {
            let m = MeasureSpec::load(&measure)?.build()?;
            let mat = match matrix {
                MatrixArg::Delta => delta_matrix(&m)?,
                MatrixArg::Gamma => gamma_matrix(&m)?,
            };
            if let Some(path) = csv {
                std::fs::write(&path, matrix_csv(&mat))?;
            }
            let summary = norm_summary(&m)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(false)
        }
        Cmd::Dominance {
            metric,
            n,
            a,
            trials,
            seed,
            weights,
        } => {
            let spec = MetricSpec::parse(&metric, a)?;
            let space = match weights {
                WeightsArg::Counting => WeightedSpace::counting(n, spec.a)?,
                WeightsArg::Grid => WeightedSpace::grid(n, spec.a)?,
            };
            let report = check_psi_dominance(&spec, &space, trials, seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "pass": report.pass,
                    "trials": report.trials,
                    "violations": report.violations,
                    "max_ratio": report.max_ratio,
                    "worst_f_digest": report.worst_f_digest,
                }))?
            );
            Ok(!report.pass)
        }
        Cmd::Martingale { measure, f, metric } => {
            let m = MeasureSpec::load(&measure)?.build()?;
            let table = FunctionTable::load(&f, m.n(), m.alphabet())?;
            let spec = MetricSpec::parse(&metric, Some(m.alphabet()))?;
            let report = check_vd_bound(&m, &table, &spec)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "sup_norms": report.sup_norms,
                    "lip": report.lip,
                    "delta_inf_norm": report.delta_inf_norm,
                    "vd_slack": report.slack,
                    "pass": report.pass,
                    "witness": report.witness,
                }))?
            );
            Ok(!report.pass)
        }
        Cmd::Bounds {
            curve,
            params,
            t_grid,
            out,
        } => {
            let curve = build_curve(&curve, &params)?;
            let grid = parse_t_grid(&t_grid)?;
            let mut csv = String::new();
            csv.push_str(CSV_VERSION_HEADER);
            csv.push('\n');
            csv.push_str("t,value,vacuous\n");
            for &t in &grid {
                let v = curve.eval(t);
                csv.push_str(&format!("{},{},{}\n", t, v, (v > 1.0) as u8));
            }
            match out {
                Some(path) => std::fs::write(&path, csv)?,
                None => print!("{csv}"),
            }
            Ok(false)
        }
        Cmd::Tail { config } => {
            let config = ExperimentConfig::load(&config)?;
            let inputs = config.resolve()?;
            let report = monte_carlo_tail(&inputs)?;
            let csv = report.to_csv();
            match &config.output {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            println!("{}", serde_json::to_string_pretty(&report.summary())?);
            Ok(report.violations > 0)
        }
        Cmd::Rn { n_min, n_max, out } => {
            let table = rn_experiment(n_min, n_max)?;
            let csv = table.to_csv();
            match out {
                Some(path) => std::fs::write(&path, csv)?,
                None => print!("{csv}"),
            }
            Ok(false)
        }
        Cmd::Reindex { n, out } => {
            let report = reindex_experiment(n)?;
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(&path, text)?,
                None => println!("{text}"),
            }
            Ok(false)
        }
    }
}

fn matrix_csv(mat: &MixingMatrix) -> String {
    let mut out = String::new();
    out.push_str(CSV_VERSION_HEADER);
    out.push('\n');
    out.push_str("row,col,value\n");
    for (i, j, v) in mat.triplets() {
        out.push_str(&format!("{i},{j},{v}\n"));
    }
    out
}

fn build_curve(name: &str, params: &[String]) -> Result<BoundCurve> {
    let mut map = HashMap::new();
    for p in params {
        let Some((k, v)) = p.split_once('=') else {
            return Err(Error::InvalidArgument(format!(
                "parameter '{p}' is not key=value"
            )));
        };
        map.insert(k.to_string(), v.to_string());
    }
    let num = |key: &str| -> Result<f64> {
        map.get(key)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("curve '{name}' needs --params {key}=..."))
            })?
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("parameter {key} is not a number")))
    };
    let int = |key: &str| -> Result<usize> { Ok(num(key)?.round() as usize) };
    match name {
        "azuma" => BoundCurve::azuma(num("d2")?),
        "main" => BoundCurve::main(
            int("n")?,
            num("lip")?,
            num("delta")?,
            map.get("normalized").map(|v| v == "1" || v == "true").unwrap_or(false),
        ),
        "mcdiarmid" => BoundCurve::mcdiarmid(int("n")?),
        "marton" => BoundCurve::marton(int("n")?, num("theta")?),
        "samson" => BoundCurve::samson(num("gamma2")?),
        "constant" => BoundCurve::constant(num("value")?),
        other => Err(Error::InvalidArgument(format!(
            "unknown curve '{other}' (expected azuma | main | mcdiarmid | marton | samson | constant)"
        ))),
    }
}

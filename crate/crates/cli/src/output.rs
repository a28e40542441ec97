//! CSV plumbing shared by the subcommands: the versioned header, Wilson
//! intervals, and the t-grid grammar.

use concentration_lab::{Error, Result};

/// Every CSV artifact starts with this schema-version comment.
pub const CSV_VERSION_HEADER: &str = "# concentration-lab v1";

/// Wilson 95% score interval for `successes` out of `trials`.
pub fn wilson95(successes: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// "a:b:steps" with steps points from a to b inclusive; strictly increasing.
pub fn parse_t_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, steps] = parts.as_slice() else {
        return Err(Error::InvalidArgument(format!(
            "t grid must look like start:stop:steps, got '{s}'"
        )));
    };
    let start: f64 = start
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad grid start '{start}'")))?;
    let stop: f64 = stop
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad grid stop '{stop}'")))?;
    let steps: usize = steps
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad grid step count '{steps}'")))?;
    t_grid(start, stop, steps)
}

pub fn t_grid(start: f64, stop: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "grid needs at least one point".into(),
        ));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    if !(stop > start) {
        return Err(Error::InvalidArgument(format!(
            "grid must be strictly increasing, got {start}..{stop}"
        )));
    }
    Ok((0..steps)
        .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
        .collect())
}

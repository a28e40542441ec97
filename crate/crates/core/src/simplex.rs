//! Dense primal simplex for the small LPs behind the Φ-norm: maximize c·x
//! subject to Ax ≤ b with x ≥ 0 and b ≥ 0, so the slack basis is feasible and
//! no phase-1 is needed. Pricing is Dantzig's rule with a switch to Bland's
//! rule after a burn-in to rule out cycling.

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

/// One row of Ax ≤ b in sparse form; rhs must be nonnegative.
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

pub fn solve_max(n_vars: usize, c: &[f64], constraints: &[Constraint]) -> Result<LpSolution> {
    debug_assert_eq!(c.len(), n_vars);
    let m = constraints.len();
    let width = n_vars + m + 1;
    let mut tab = vec![0.0f64; (m + 1) * width];
    for (r, con) in constraints.iter().enumerate() {
        if con.rhs < 0.0 {
            return Err(Error::LpFailure(format!(
                "negative rhs {} in row {r}; slack basis infeasible",
                con.rhs
            )));
        }
        let row = &mut tab[r * width..(r + 1) * width];
        for &(j, v) in &con.coeffs {
            row[j] += v;
        }
        row[n_vars + r] = 1.0;
        row[width - 1] = con.rhs;
    }
    let obj = m * width;
    for j in 0..n_vars {
        tab[obj + j] = -c[j];
    }

    let mut basis: Vec<usize> = (n_vars..n_vars + m).collect();
    let total = n_vars + m;
    let bland_after = 20 * (m + n_vars) + 1000;
    let max_iters = 400 * (m + n_vars) + 20_000;

    for iter in 0..max_iters {
        let entering = if iter < bland_after {
            let mut best_j = None;
            let mut best = -EPS;
            for j in 0..total {
                let rc = tab[obj + j];
                if rc < best {
                    best = rc;
                    best_j = Some(j);
                }
            }
            best_j
        } else {
            (0..total).find(|&j| tab[obj + j] < -EPS)
        };
        let Some(je) = entering else {
            let mut x = vec![0.0; n_vars];
            for (r, &bv) in basis.iter().enumerate() {
                if bv < n_vars {
                    x[bv] = tab[r * width + width - 1];
                }
            }
            let _ = iter;
            return Ok(LpSolution {
                objective: tab[obj + width - 1],
                x,
            });
        };

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coeff = tab[r * width + je];
            if coeff > EPS {
                let ratio = tab[r * width + width - 1] / coeff;
                let better = match leave {
                    None => true,
                    Some((rl, best)) => {
                        ratio < best - 1e-12 || (ratio < best + 1e-12 && basis[r] < basis[rl])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((rl, _)) = leave else {
            return Err(Error::LpFailure("objective unbounded".into()));
        };

        pivot(&mut tab, width, m, rl, je);
        basis[rl] = je;
    }
    Err(Error::LpFailure(format!(
        "no optimum after {max_iters} pivots"
    )))
}

fn pivot(tab: &mut [f64], width: usize, m: usize, rl: usize, je: usize) {
    let prow = rl * width;
    let pval = tab[prow + je];
    let inv = 1.0 / pval;
    for v in &mut tab[prow..prow + width] {
        *v *= inv;
    }
    tab[prow + je] = 1.0;
    for r in 0..=m {
        if r == rl {
            continue;
        }
        let factor = tab[r * width + je];
        if factor == 0.0 {
            continue;
        }
        let (head, tail) = tab.split_at_mut(prow.max(r * width));
        let (pivot_row, row) = if r * width < prow {
            (&tail[..width], &mut head[r * width..r * width + width])
        } else {
            (&head[prow..prow + width], &mut tail[..width])
        };
        for (slot, &pv) in row.iter_mut().zip(pivot_row) {
            *slot -= factor * pv;
        }
        row[je] = 0.0;
    }
}

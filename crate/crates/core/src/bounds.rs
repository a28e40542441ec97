//! Closed-form deviation bounds as evaluable curves, exact medians, the
//! brute-force concentration function α(t) over all half-mass sets, and the
//! Ledoux-style conversion between median- and mean-centered bounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::DigitTable;
use crate::measure::DiscreteMeasure;
use crate::metric::{FunctionTable, MetricSpec, DISTANCE_TOL};

/// t = 0 evaluates every exponential bound to its leading constant 2.
fn two_exp(exponent: f64) -> f64 {
    2.0 * exponent.exp()
}

/// Azuma: 2·exp(−t²/(2D²)) for D² ≥ Σ‖V_i‖²_∞.
pub fn azuma_bound(d2: f64, t: f64) -> Result<f64> {
    if !(d2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variance proxy must be positive, got {d2}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument("t must be nonnegative".into()));
    }
    Ok(two_exp(-t * t / (2.0 * d2)))
}

/// The main mixing bound 2·exp(−t²/(2n·Lip²·‖Δ_n‖²_∞)); with `normalized`
/// the metric is taken as ρ/n, giving 2·exp(−n·(t/Lip)²/(2‖Δ_n‖²_∞)).
pub fn main_bound(n: usize, lip: f64, delta_inf_norm: f64, t: f64, normalized: bool) -> f64 {
    if t == 0.0 {
        return 2.0;
    }
    let nf = n as f64;
    let exponent = if normalized {
        -nf * (t / lip).powi(2) / (2.0 * delta_inf_norm * delta_inf_norm)
    } else {
        -t * t / (2.0 * nf * lip * lip * delta_inf_norm * delta_inf_norm)
    };
    two_exp(exponent)
}

/// McDiarmid under the normalized Hamming metric with Lip ≤ 1: 2·exp(−2nt²).
pub fn mcdiarmid_bound(n: usize, t: f64) -> f64 {
    two_exp(-2.0 * n as f64 * t * t)
}

/// Marton's bound for contracting Markov measures, median-centered:
/// 2·exp(−2n·((t(1−θ) − sqrt(log 2/(2n)))₊)²). The printed form increases
/// near 0 where the inner expression is negative, so the ramp is applied to
/// keep the curve ≤ 2 and nonincreasing.
pub fn marton_bound(n: usize, theta: f64, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "Doeblin coefficient must lie in [0, 1), got {theta}"
        )));
    }
    let nf = n as f64;
    let inner = (t * (1.0 - theta) - (2.0f64.ln() / (2.0 * nf)).sqrt()).max(0.0);
    Ok(two_exp(-2.0 * nf * inner * inner))
}

/// Samson-type bound 2·exp(−t²/(2‖Γ_n‖₂²)); the caller attests that f is
/// convex with the appropriate Lipschitz normalization, which is not checked.
pub fn samson_bound(gamma_spectral_norm: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 2.0;
    }
    two_exp(-t * t / (2.0 * gamma_spectral_norm * gamma_spectral_norm))
}

/// A named deviation bound t ↦ value; values above 1 are reported as vacuous
/// rather than clipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "curve", rename_all = "snake_case")]
pub enum BoundCurve {
    Azuma {
        d2: f64,
    },
    Main {
        n: usize,
        lip: f64,
        delta_inf_norm: f64,
        normalized: bool,
    },
    McDiarmid {
        n: usize,
    },
    Marton {
        n: usize,
        theta: f64,
    },
    Samson {
        gamma2: f64,
    },
    Constant {
        value: f64,
    },
}

impl BoundCurve {
    pub fn azuma(d2: f64) -> Result<Self> {
        azuma_bound(d2, 0.0)?;
        Ok(BoundCurve::Azuma { d2 })
    }

    pub fn main(n: usize, lip: f64, delta_inf_norm: f64, normalized: bool) -> Result<Self> {
        if n == 0 || !(lip > 0.0) || !(delta_inf_norm > 0.0) {
            return Err(Error::InvalidArgument(
                "main bound needs positive n, Lipschitz constant and matrix norm".into(),
            ));
        }
        Ok(BoundCurve::Main {
            n,
            lip,
            delta_inf_norm,
            normalized,
        })
    }

    pub fn mcdiarmid(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        Ok(BoundCurve::McDiarmid { n })
    }

    pub fn marton(n: usize, theta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        marton_bound(n, theta, 0.0)?;
        Ok(BoundCurve::Marton { n, theta })
    }

    pub fn samson(gamma2: f64) -> Result<Self> {
        if !(gamma2 > 0.0) {
            return Err(Error::InvalidArgument("norm must be positive".into()));
        }
        Ok(BoundCurve::Samson { gamma2 })
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&value) {
            return Err(Error::InvalidArgument(
                "constant curve must lie in [0, 2]".into(),
            ));
        }
        Ok(BoundCurve::Constant { value })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundCurve::Azuma { .. } => "azuma",
            BoundCurve::Main { .. } => "main",
            BoundCurve::McDiarmid { .. } => "mcdiarmid",
            BoundCurve::Marton { .. } => "marton",
            BoundCurve::Samson { .. } => "samson",
            BoundCurve::Constant { .. } => "constant",
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            BoundCurve::Azuma { d2 } => azuma_bound(d2, t).expect("validated at construction"),
            BoundCurve::Main {
                n,
                lip,
                delta_inf_norm,
                normalized,
            } => main_bound(n, lip, delta_inf_norm, t, normalized),
            BoundCurve::McDiarmid { n } => mcdiarmid_bound(n, t),
            BoundCurve::Marton { n, theta } => {
                marton_bound(n, theta, t).expect("validated at construction")
            }
            BoundCurve::Samson { gamma2 } => samson_bound(gamma2, t),
            BoundCurve::Constant { value } => value,
        }
    }

    /// Bounds above 1 say nothing about a probability.
    pub fn is_vacuous_at(&self, t: f64) -> bool {
        self.eval(t) > 1.0
    }
}

/// Smallest attained value m with P(f ≤ m) ≥ 1/2 and P(f ≥ m) ≥ 1/2.
pub fn median(m: &DiscreteMeasure, f: &FunctionTable) -> f64 {
    let mut pairs: Vec<(f64, f64)> = f
        .values
        .iter()
        .zip(m.density())
        .filter(|(_, &p)| p > 0.0)
        .map(|(&v, &p)| (v, p))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|(_, p)| p).sum();
    let mut below = 0.0;
    for (idx, &(value, _)) in pairs.iter().enumerate() {
        // mass at or below this value, merging ties
        let mut le = below;
        let mut j = idx;
        while j < pairs.len() && pairs[j].0 == value {
            le += pairs[j].1;
            j += 1;
        }
        let ge = total - below;
        if le >= 0.5 - 1e-12 && ge >= 0.5 - 1e-12 {
            return value;
        }
        below = le;
    }
    pairs.last().map(|&(v, _)| v).unwrap_or(0.0)
}

const MAX_ALPHA_STATES: usize = 20;

/// Exact concentration function α(t) = 1 − inf{P(A_t) : P(A) ≥ 1/2} by
/// enumerating every subset of the (at most 20) states; the fattening A_t
/// uses closed balls ρ(x, A) ≤ t.
pub fn concentration_alpha(m: &DiscreteMeasure, spec: &MetricSpec, t: f64) -> Result<f64> {
    Ok(concentration_alpha_curve(m, spec, &[t])?[0])
}

/// α(t) for a batch of t values sharing the subset enumeration.
pub fn concentration_alpha_curve(
    m: &DiscreteMeasure,
    spec: &MetricSpec,
    ts: &[f64],
) -> Result<Vec<f64>> {
    if spec.a != m.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "metric alphabet {} vs measure alphabet {}",
            spec.a,
            m.alphabet()
        )));
    }
    let len = m.density().len();
    if len > MAX_ALPHA_STATES {
        return Err(Error::TooLarge(format!(
            "{len} states exceed the subset-enumeration cap of {MAX_ALPHA_STATES}; \
             estimate tails by Monte Carlo instead"
        )));
    }
    let digits = DigitTable::new(m.n(), m.alphabet())?;
    let p = m.density();

    // subset masses by dynamic programming over bitmasks
    let full = 1usize << len;
    let mut mass = vec![0.0f64; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + p[low];
    }

    let mut dist = vec![0.0f64; len * len];
    for x in 0..len {
        for y in 0..len {
            dist[x * len + y] = spec.distance(digits.row(x), digits.row(y));
        }
    }

    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        if t < 0.0 {
            return Err(Error::InvalidArgument("t must be nonnegative".into()));
        }
        let balls: Vec<usize> = (0..len)
            .map(|y| {
                (0..len)
                    .filter(|&x| dist[x * len + y] <= t + DISTANCE_TOL)
                    .fold(0usize, |acc, x| acc | 1 << x)
            })
            .collect();
        let mut min_fat = f64::INFINITY;
        for mask in 1..full {
            if mass[mask] < 0.5 - 1e-12 {
                continue;
            }
            let mut fat = 0usize;
            let mut rest = mask;
            while rest != 0 {
                let y = rest.trailing_zeros() as usize;
                fat |= balls[y];
                rest &= rest - 1;
            }
            min_fat = min_fat.min(mass[fat]);
        }
        out.push((1.0 - min_fat).clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Constants of the Ledoux conversion: r0 shifts a bound into a
/// median-centered one, ᾱ = ∫₀^∞ α into a mean-centered one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MedianMeanConversion {
    /// Smallest r with α(r) < 1/2.
    pub r0: f64,
    /// ∫₀^∞ α(r) dr; infinite when the curve does not decay.
    pub alpha_bar: f64,
}

/// For a nonincreasing curve with limit 0, finds r0 by bisection and ᾱ by
/// adaptive quadrature (tolerance 1e−8). A curve stuck at or above 1/2 over
/// the whole bracket is an error; a curve that never decays below 1e−14 on
/// the bracket reports ᾱ = ∞.
pub fn median_mean_convert(curve: &BoundCurve) -> Result<MedianMeanConversion> {
    let eval = |r: f64| curve.eval(r);
    let r0 = if eval(0.0) < 0.5 {
        0.0
    } else {
        let mut hi = 1.0;
        let mut doublings = 0;
        while eval(hi) >= 0.5 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 60 {
                return Err(Error::ConstructionFailure(
                    "curve stays at or above 1/2 over the whole bracket; no r0 exists".into(),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval(mid) < 0.5 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let mut reach = 1.0;
    let mut doublings = 0;
    let alpha_bar = loop {
        if eval(reach) < 1e-14 {
            break adaptive_simpson(&eval, 0.0, reach, 1e-8);
        }
        reach *= 2.0;
        doublings += 1;
        if doublings > 60 {
            break f64::INFINITY;
        }
    };
    Ok(MedianMeanConversion { r0, alpha_bar })
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{make_forbidden, make_product};

    #[test]
    fn azuma_examples() {
        assert_eq!(azuma_bound(1.0, 0.0).unwrap(), 2.0);
        assert!((azuma_bound(1.0, 2.0).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(azuma_bound(0.0, 1.0).is_err());
        assert!(azuma_bound(-1.0, 1.0).is_err());

        // genconc shape: D² = n·H²
        let (n, h) = (5usize, 0.3);
        let d2 = n as f64 * h * h;
        for t in [0.1, 0.5, 1.2] {
            let via_azuma = azuma_bound(d2, t).unwrap();
            let direct = 2.0 * (-t * t / (2.0 * n as f64 * h * h)).exp();
            assert!((via_azuma - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn main_bound_examples() {
        assert_eq!(main_bound(4, 1.0, 1.0, 0.0, false), 2.0);
        let v = main_bound(4, 1.0, 1.0, 2.0, false);
        assert!((v - 2.0 * (-0.5f64).exp()).abs() < 1e-15);

        // with ‖Δ‖ = 1 the unnormalized form is Azuma with D² = n·Lip²
        for t in [0.3, 1.0, 2.5] {
            let a = azuma_bound(4.0, t).unwrap();
            let m = main_bound(4, 1.0, 1.0, t, false);
            assert!((a - m).abs() < 1e-15);
        }

        // normalized form at lip = 1: 2exp(−nt²/2Δ²)
        let nv = main_bound(4, 1.0, 2.0, 0.5, true);
        assert!((nv - 2.0 * (-4.0 * 0.25 / 8.0f64).exp()).abs() < 1e-15);

        // the √n-scaled comparison form: evaluating the unnormalized bound at
        // t√n with Lip = 1 gives 2exp(−t²/2Δ²)
        for t in [0.4, 1.1] {
            let lhs = main_bound(9, 1.0, 1.5, t * 3.0, false);
            let rhs = 2.0 * (-t * t / (2.0 * 1.5f64 * 1.5)).exp();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn mcdiarmid_examples() {
        assert_eq!(mcdiarmid_bound(3, 0.0), 2.0);
        assert!((mcdiarmid_bound(2, 1.0) - 2.0 * (-4.0f64).exp()).abs() < 1e-15);

        // exponent 2n vs n/2: tighter than the normalized main bound with Δ=1
        for t in [0.2, 0.5, 0.9] {
            assert!(mcdiarmid_bound(6, t) <= main_bound(6, 1.0, 1.0, t, true) + 1e-15);
        }
    }

    #[test]
    fn marton_examples() {
        assert_eq!(marton_bound(8, 0.5, 0.0).unwrap(), 2.0);
        assert!(marton_bound(8, 1.0, 0.1).is_err());
        assert!(marton_bound(8, -0.1, 0.1).is_err());

        // theta = 0 recovers the product-case exponent once past the ramp
        let n = 8;
        let shift = (2.0f64.ln() / 16.0).sqrt();
        for t in [0.5, 1.0] {
            let v = marton_bound(n, 0.0, t).unwrap();
            let expect = 2.0 * (-2.0 * 8.0 * (t - shift).powi(2)).exp();
            assert!((v - expect).abs() < 1e-14);
        }

        let v = marton_bound(8, 0.5, 1.0).unwrap();
        let inner = (0.5 - shift).max(0.0);
        assert!((v - 2.0 * (-16.0 * inner * inner).exp()).abs() < 1e-14);
    }

    #[test]
    fn samson_examples() {
        assert_eq!(samson_bound(1.0, 0.0), 2.0);
        assert!((samson_bound(1.0, 2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        // √n conversion: applying the bound to n^(−1/2)f at t√n cancels
        assert_eq!(samson_bound(1.3, 2.0 * 3.0 / 3.0), samson_bound(1.3, 2.0));
    }

    #[test]
    fn curves_start_at_two_and_decrease() {
        let curves = [
            BoundCurve::azuma(0.7).unwrap(),
            BoundCurve::main(4, 0.8, 1.5, false).unwrap(),
            BoundCurve::main(4, 0.8, 1.5, true).unwrap(),
            BoundCurve::mcdiarmid(5).unwrap(),
            BoundCurve::marton(6, 0.4).unwrap(),
            BoundCurve::samson(1.2).unwrap(),
            BoundCurve::constant(0.9).unwrap(),
        ];
        for curve in &curves {
            assert!(curve.eval(0.0) <= 2.0);
            let mut prev = f64::INFINITY;
            for k in 0..100 {
                let v = curve.eval(0.05 * k as f64);
                assert!(v <= prev + 1e-15, "{} increased", curve.name());
                prev = v;
            }
        }
        assert!(BoundCurve::mcdiarmid(1).unwrap().is_vacuous_at(0.1));
        assert!(!BoundCurve::mcdiarmid(1).unwrap().is_vacuous_at(2.0));
    }

    #[test]
    fn median_examples() {
        let m = make_product(&[vec![0.5, 0.5]]).unwrap();
        let f = FunctionTable::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(median(&m, &f), 0.0);

        let constant = FunctionTable::constant(1, 2, 2.5).unwrap();
        assert_eq!(median(&m, &constant), 2.5);

        // -f: the smallest median of -f is the negative of the largest
        // median of f; both endpoints satisfy the defining conditions
        let neg = FunctionTable::new(1, 2, vec![0.0, -1.0]).unwrap();
        assert_eq!(median(&m, &neg), -1.0);

        // skewed: unique median
        let skew = make_product(&[vec![0.2, 0.8]]).unwrap();
        assert_eq!(median(&skew, &f), 1.0);
    }

    #[test]
    fn median_defining_conditions() {
        let m = make_forbidden(3).unwrap();
        let f = FunctionTable::new(3, 2, (0..8).map(|i| (i % 3) as f64).collect()).unwrap();
        let med = median(&m, &f);
        let le: f64 = f
            .values
            .iter()
            .zip(m.density())
            .filter(|(&v, _)| v <= med)
            .map(|(_, &p)| p)
            .sum();
        let ge: f64 = f
            .values
            .iter()
            .zip(m.density())
            .filter(|(&v, _)| v >= med)
            .map(|(_, &p)| p)
            .sum();
        assert!(le >= 0.5 - 1e-12 && ge >= 0.5 - 1e-12);
    }

    #[test]
    fn alpha_uniform_bit() {
        let m = make_product(&[vec![0.5, 0.5]]).unwrap();
        let spec = MetricSpec::hamming(2).unwrap();
        assert_eq!(concentration_alpha(&m, &spec, 0.5).unwrap(), 0.5);
        assert_eq!(concentration_alpha(&m, &spec, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn alpha_vanishes_at_diameter_and_decreases() {
        let m = make_forbidden(3).unwrap();
        let spec = MetricSpec::hamming(2).unwrap();
        let ts: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
        let alphas = concentration_alpha_curve(&m, &spec, &ts).unwrap();
        for w in alphas.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert_eq!(*alphas.last().unwrap(), 0.0);
        assert_eq!(alphas[ts.iter().position(|&t| t >= 3.0).unwrap()], 0.0);
    }

    #[test]
    fn alpha_too_large_directs_to_monte_carlo() {
        let m = make_forbidden(5).unwrap();
        let spec = MetricSpec::hamming(2).unwrap();
        let err = concentration_alpha(&m, &spec, 0.5).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
        assert!(err.to_string().contains("Monte Carlo"));
    }

    #[test]
    fn conversion_of_gaussian_curve() {
        // mcdiarmid(1) is 2e^(−2r²)
        let curve = BoundCurve::mcdiarmid(1).unwrap();
        let conv = median_mean_convert(&curve).unwrap();
        assert!((conv.r0 - (4.0f64.ln() / 2.0).sqrt()).abs() < 1e-8);
        assert!(
            (conv.alpha_bar - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-6,
            "alpha_bar = {}",
            conv.alpha_bar
        );
    }

    #[test]
    fn conversion_edge_cases() {
        // constant at 0.6: no r0 exists
        let stuck = BoundCurve::constant(0.6).unwrap();
        assert!(matches!(
            median_mean_convert(&stuck),
            Err(Error::ConstructionFailure(_))
        ));

        // constant below 1/2: r0 = 0 but the integral diverges
        let thin = BoundCurve::constant(0.4).unwrap();
        let conv = median_mean_convert(&thin).unwrap();
        assert_eq!(conv.r0, 0.0);
        assert!(conv.alpha_bar.is_infinite());
    }
}

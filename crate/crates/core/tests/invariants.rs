//! Cross-module invariants: deviation probabilities against the concentration
//! function, exact tails against the mixing bound, and the Lévy-family shape
//! of α for mixing families.

use concentration_lab::bounds::{
    concentration_alpha_curve, main_bound, marton_bound, median, median_mean_convert, BoundCurve,
};
use concentration_lab::martingale::check_vd_bound;
use concentration_lab::measure::{make_forbidden, make_markov, make_product, make_row_homogeneous};
use concentration_lab::metric::{lipschitz_constant, random_lipschitz};
use concentration_lab::mixing::{delta_matrix, h_p};
use concentration_lab::{DiscreteMeasure, FunctionTable, MetricSpec};

fn small_measures(n: usize) -> Vec<(&'static str, DiscreteMeasure)> {
    let q = |theta: f64| (1.0 - theta) / 2.0;
    let sym = |theta: f64| {
        vec![
            vec![1.0 - q(theta), q(theta)],
            vec![q(theta), 1.0 - q(theta)],
        ]
    };
    vec![
        ("product", make_product(&vec![vec![0.3, 0.7]; n]).unwrap()),
        (
            "markov-0.5",
            make_markov(&[0.5, 0.5], &sym(0.5), n).unwrap(),
        ),
        (
            "markov-0.8",
            make_markov(&[0.5, 0.5], &sym(0.8), n).unwrap(),
        ),
        ("row-homogeneous", make_row_homogeneous(n).unwrap()),
        ("forbidden", make_forbidden(n).unwrap()),
    ]
}

fn exact_tail(m: &DiscreteMeasure, f: &FunctionTable, center: f64, t: f64) -> f64 {
    f.values
        .iter()
        .zip(m.density())
        .filter(|(&v, _)| (v - center).abs() > t)
        .map(|(_, &p)| p)
        .sum()
}

fn exact_mean(m: &DiscreteMeasure, f: &FunctionTable) -> f64 {
    f.values.iter().zip(m.density()).map(|(&v, &p)| v * p).sum()
}

#[test]
fn deviation_from_median_bounded_by_alpha() {
    // P(|f − M_f| > t) <= 2·α(t / Lip f) on every small measure and metric
    for (name, m) in small_measures(3) {
        for spec in [
            MetricSpec::hamming(2).unwrap(),
            MetricSpec::normalized_hamming(2).unwrap(),
        ] {
            let diam = spec.diameter(3);
            for seed in 0..6 {
                let f = random_lipschitz(&spec, 3, seed).unwrap();
                let lip = lipschitz_constant(&f, &spec).unwrap();
                if lip == 0.0 {
                    continue;
                }
                let med = median(&m, &f);
                let ts: Vec<f64> = (0..=20).map(|k| diam * lip * k as f64 / 20.0).collect();
                let scaled: Vec<f64> = ts.iter().map(|&t| t / lip).collect();
                let alphas = concentration_alpha_curve(&m, &spec, &scaled).unwrap();
                for (&t, &alpha) in ts.iter().zip(&alphas) {
                    let tail = exact_tail(&m, &f, med, t);
                    assert!(
                        tail <= 2.0 * alpha + 1e-12,
                        "{name}/{}, seed {seed}, t={t}: {tail} > 2·{alpha}",
                        spec.spec_string()
                    );
                }
            }
        }
    }
}

#[test]
fn exact_tails_below_main_bound() {
    for (name, m) in small_measures(4) {
        let delta = delta_matrix(&m).unwrap().inf_norm();
        for spec in [
            MetricSpec::hamming(2).unwrap(),
            MetricSpec::normalized_hamming(2).unwrap(),
        ] {
            let diam = spec.diameter(4);
            for seed in 0..5 {
                let f = random_lipschitz(&spec, 4, seed).unwrap();
                let lip = lipschitz_constant(&f, &spec).unwrap();
                if lip == 0.0 {
                    continue;
                }
                let mean = exact_mean(&m, &f);
                for k in 0..=30 {
                    let t = diam * k as f64 / 30.0;
                    let tail = exact_tail(&m, &f, mean, t);
                    let bound = main_bound(4, lip, delta, t, false);
                    assert!(
                        tail <= bound + 1e-12,
                        "{name}/{} seed {seed} t={t}: {tail} > {bound}",
                        spec.spec_string()
                    );
                }
            }
        }
    }
}

#[test]
fn normal_levy_shape_for_mixing_families() {
    // For the η-mixing families, α under the normalized metric stays below
    // 2·exp(−n t² / (2 H̄²)) with H̄ the family's largest ‖Δ‖_∞ over n = 2, 3.
    let q = |theta: f64| (1.0 - theta) / 2.0;
    let sym = |theta: f64| {
        vec![
            vec![1.0 - q(theta), q(theta)],
            vec![q(theta), 1.0 - q(theta)],
        ]
    };
    let families: Vec<(&str, Vec<DiscreteMeasure>)> = vec![
        (
            "product",
            (2..=3)
                .map(|n| make_product(&vec![vec![0.4, 0.6]; n]).unwrap())
                .collect(),
        ),
        (
            "markov-0.5",
            (2..=3)
                .map(|n| make_markov(&[0.5, 0.5], &sym(0.5), n).unwrap())
                .collect(),
        ),
        (
            "row-homogeneous",
            (2..=3).map(|n| make_row_homogeneous(n).unwrap()).collect(),
        ),
    ];
    for (name, members) in families {
        let h_bar = members
            .iter()
            .map(|m| h_p(m).unwrap())
            .fold(1.0f64, f64::max);
        for m in &members {
            let n = m.n();
            let spec = MetricSpec::normalized_hamming(2).unwrap();
            let ts: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
            let alphas = concentration_alpha_curve(m, &spec, &ts).unwrap();
            for (&t, &alpha) in ts.iter().zip(&alphas) {
                let levy = 2.0 * (-(n as f64) * t * t / (2.0 * h_bar * h_bar)).exp();
                assert!(
                    alpha <= levy + 1e-12,
                    "{name} n={n} t={t}: α={alpha} > {levy}"
                );
            }
        }
    }
}

#[test]
fn vd_bound_across_measure_metric_grid() {
    for (name, m) in small_measures(5) {
        for spec in [
            MetricSpec::hamming(2).unwrap(),
            MetricSpec::normalized_hamming(2).unwrap(),
        ] {
            for seed in 0..4 {
                let f = random_lipschitz(&spec, 5, seed).unwrap();
                let report = check_vd_bound(&m, &f, &spec).unwrap();
                assert!(
                    report.pass,
                    "{name}/{} seed {seed}: slack {}",
                    spec.spec_string(),
                    report.slack
                );
            }
        }
    }
}

#[test]
fn marton_bound_holds_on_contracting_chains() {
    // median-centered tails of 1-Lipschitz (normalized Hamming) statistics
    // of a Doeblin-contracting chain stay below the ramped Marton bound
    let n = 6;
    let spec = MetricSpec::normalized_hamming(2).unwrap();
    for theta in [0.0, 0.5, 0.8] {
        let q = (1.0 - theta) / 2.0;
        let m = make_markov(&[0.5, 0.5], &[vec![1.0 - q, q], vec![q, 1.0 - q]], n).unwrap();
        for seed in 0..10 {
            let f = random_lipschitz(&spec, n, seed).unwrap();
            let med = median(&m, &f);
            for k in 0..=40 {
                let t = k as f64 / 40.0;
                let tail = exact_tail(&m, &f, med, t);
                let bound = marton_bound(n, theta, t).unwrap();
                assert!(
                    tail <= bound + 1e-12,
                    "theta={theta} seed {seed} t={t}: {tail} > {bound}"
                );
            }
        }
    }
}

#[test]
fn median_mean_conversion_shifts_exact_tails() {
    // if P(|f−Ef| ≥ r) ≤ α(r) then P(|f−M_f| ≥ r+r0) ≤ α(r) with α(r0) < 1/2,
    // and symmetrically with the mean and the integral shift ᾱ
    let n = 5;
    let spec = MetricSpec::normalized_hamming(2).unwrap();
    let m = make_markov(&[0.5, 0.5], &[vec![0.75, 0.25], vec![0.25, 0.75]], n).unwrap();
    let delta = delta_matrix(&m).unwrap().inf_norm();
    for seed in 0..8 {
        let f = random_lipschitz(&spec, n, seed).unwrap();
        let lip = lipschitz_constant(&f, &spec).unwrap();
        if lip == 0.0 {
            continue;
        }
        // the mean-centered curve is valid for exact tails (mixing bound)
        let curve = BoundCurve::main(n, lip, delta, true).unwrap();
        let conv = median_mean_convert(&curve).unwrap();
        assert!(curve.eval(conv.r0) <= 0.5 + 1e-9);
        assert!(conv.alpha_bar.is_finite());

        let mean = exact_mean(&m, &f);
        let med = median(&m, &f);
        for k in 0..=30 {
            let r = k as f64 / 30.0;
            let shifted_tail = exact_tail(&m, &f, med, r + conv.r0 - 1e-12);
            assert!(
                shifted_tail <= curve.eval(r) + 1e-12,
                "seed {seed} r={r}: median tail {shifted_tail} > {}",
                curve.eval(r)
            );
        }
        // |Ef − M_f| ≤ ᾱ when the curve integrates
        assert!(
            (mean - med).abs() <= conv.alpha_bar + 1e-12,
            "seed {seed}: |mean − median| = {} > ᾱ = {}",
            (mean - med).abs(),
            conv.alpha_bar
        );
    }
}

#[test]
fn concentration_needs_both_a_smooth_function_and_a_mixing_measure() {
    let n = 6;
    let uniform = make_product(&vec![vec![0.5, 0.5]; n]).unwrap();
    let copy_chain = make_markov(&[0.5, 0.5], &[vec![1.0, 0.0], vec![0.0, 1.0]], n).unwrap();
    let parity = FunctionTable::new(
        n,
        2,
        (0..1usize << n)
            .map(|i| ((i as u32).count_ones() % 2) as f64)
            .collect(),
    )
    .unwrap();
    let mean = FunctionTable::new(
        n,
        2,
        (0..1usize << n)
            .map(|i| (i as u32).count_ones() as f64 / n as f64)
            .collect(),
    )
    .unwrap();

    // oscillating statistic under the best-mixed measure: no concentration
    let mu = exact_mean(&uniform, &parity);
    assert_eq!(exact_tail(&uniform, &parity, mu, 0.4), 1.0);

    // smooth statistic under the worst-mixed measure: no concentration either
    let mu = exact_mean(&copy_chain, &mean);
    assert_eq!(exact_tail(&copy_chain, &mean, mu, 0.4), 1.0);

    // smooth statistic under the mixed measure concentrates
    let mu = exact_mean(&uniform, &mean);
    assert!(exact_tail(&uniform, &mean, mu, 0.4) < 0.05);

    // and the martingale increments tell the two failure modes apart: the
    // smooth f has 1/n-scale increments, parity has unit-scale ones
    let smooth = concentration_lab::martingale::martingale_profile(&uniform, &mean).unwrap();
    let rough = concentration_lab::martingale::martingale_profile(&uniform, &parity).unwrap();
    assert!(smooth
        .sup_norms()
        .iter()
        .all(|&s| s <= 0.5 / n as f64 + 1e-12));
    assert!(rough.sup_norms().iter().any(|&s| s >= 0.5));
}

#[test]
fn reindexing_preserves_symmetric_statistics() {
    let n = 5;
    let m = make_forbidden(n).unwrap();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(1, n - 1);
    let y = m.reindex(&perm).unwrap();

    assert_eq!(h_p(&m).unwrap(), n as f64);
    assert_eq!(h_p(&y).unwrap(), 2.0);

    // a symmetric function has the same law either way
    let mean = FunctionTable::new(
        n,
        2,
        (0..1usize << n)
            .map(|i| (i as u32).count_ones() as f64 / n as f64)
            .collect(),
    )
    .unwrap();
    let mu_x = exact_mean(&m, &mean);
    let mu_y = exact_mean(&y, &mean);
    assert!((mu_x - mu_y).abs() < 1e-14);
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let tx = exact_tail(&m, &mean, mu_x, t);
        let ty = exact_tail(&y, &mean, mu_y, t);
        assert!((tx - ty).abs() < 1e-12);
    }
}

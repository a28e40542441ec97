use proptest::prelude::*;

use concentration_lab::functionals::{psi_n, psi_norm, WeightedSpace};
use concentration_lab::measure::{positive_part_mass, total_variation};
use concentration_lab::{DiscreteMeasure, FunctionTable, SignedDensity};

fn density_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_map(|mut v| {
        let sum: f64 = v.iter().sum();
        if sum == 0.0 {
            v[0] = 1.0;
        } else {
            v.iter_mut().for_each(|x| *x /= sum);
        }
        // renormalize the largest entry so the total is exactly 1 up to one ulp
        let sum: f64 = v.iter().sum();
        let imax = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        v[imax] += 1.0 - sum;
        v
    })
}

fn table_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #[test]
    fn tv_of_density_difference_lives_in_unit_interval(
        p in density_strategy(8),
        q in density_strategy(8),
    ) {
        let mp = DiscreteMeasure::new(3, 2, p).unwrap();
        let mq = DiscreteMeasure::new(3, 2, q).unwrap();
        let tv = total_variation(&mp.signed_difference(&mq).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
        let self_tv = total_variation(&mp.signed_difference(&mp).unwrap());
        prop_assert_eq!(self_tv, 0.0);
    }

    #[test]
    fn balanced_positive_part_equals_tv(h in table_strategy(9)) {
        // balance the table, then the Hahn decomposition collapses
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        let balanced: Vec<f64> = h.iter().map(|v| v - mean).collect();
        let d = SignedDensity::new(2, 3, balanced).unwrap();
        prop_assert!((positive_part_mass(&d) - total_variation(&d)).abs() < 1e-9);
    }

    #[test]
    fn psi_norm_axioms(f in table_strategy(8), g in table_strategy(8), c in -5.0f64..5.0) {
        let space = WeightedSpace::counting(3, 2).unwrap();
        let ft = FunctionTable::new(3, 2, f.clone()).unwrap();
        let gt = FunctionTable::new(3, 2, g.clone()).unwrap();
        let pf = psi_norm(&ft, &space).unwrap();
        let pg = psi_norm(&gt, &space).unwrap();

        // sandwich against L1
        let l1 = space.l1_norm(&ft).unwrap();
        prop_assert!(0.5 * l1 <= pf + 1e-9);
        prop_assert!(pf <= 3.0 * l1 + 1e-9);
        prop_assert!(psi_n(&ft, &space).unwrap() <= 3.0 * l1 + 1e-9);

        // homogeneity
        let cf = FunctionTable::new(3, 2, f.iter().map(|v| c * v).collect()).unwrap();
        prop_assert!((psi_norm(&cf, &space).unwrap() - c.abs() * pf).abs() < 1e-8);

        // subadditivity
        let sum = FunctionTable::new(
            3,
            2,
            f.iter().zip(&g).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        prop_assert!(psi_norm(&sum, &space).unwrap() <= pf + pg + 1e-9);

        // positivity
        if f.iter().any(|&v| v != 0.0) {
            prop_assert!(pf > 0.0);
        }
    }

    #[test]
    fn prefix_marginals_are_consistent(p in density_strategy(16)) {
        let m = DiscreteMeasure::new(4, 2, p).unwrap();
        for k in 2..=4usize {
            let direct = m.marginal_prefix(k - 1).unwrap();
            let via = m.marginal_prefix(k).unwrap().marginal_prefix(k - 1).unwrap();
            for (a, b) in direct.density().iter().zip(via.density()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

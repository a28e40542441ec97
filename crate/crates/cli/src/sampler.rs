//! Sequential sampling from a discrete measure: X₁ from the first marginal,
//! then each coordinate from its conditional given the prefix so far, so the
//! sampled law is exactly the measure.

use concentration_lab::DiscreteMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RNG algorithm identifier recorded in output headers.
pub const RNG_ALGORITHM: &str = "chacha8";

pub struct SequentialSampler {
    n: usize,
    a: usize,
    levels: Vec<Vec<f64>>, // prefix masses per level
}

impl SequentialSampler {
    pub fn new(measure: &DiscreteMeasure) -> Self {
        SequentialSampler {
            n: measure.n(),
            a: measure.alphabet(),
            levels: measure.prefix_mass_tables(),
        }
    }

    /// Table index of one sample.
    pub fn draw_index<R: Rng>(&self, rng: &mut R) -> usize {
        let mut idx = 0usize;
        for level in 0..self.n {
            let parent_mass = self.levels[level][idx];
            let u: f64 = rng.random::<f64>() * parent_mass;
            let children = &self.levels[level + 1][idx * self.a..(idx + 1) * self.a];
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_positive = 0;
            for (w, &mass) in children.iter().enumerate() {
                if mass > 0.0 {
                    last_positive = w;
                }
                acc += mass;
                if u < acc && mass > 0.0 {
                    chosen = Some(w);
                    break;
                }
            }
            idx = idx * self.a + chosen.unwrap_or(last_positive);
        }
        idx
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let mut digits = vec![0; self.n];
        let mut idx = self.draw_index(rng);
        for slot in digits.iter_mut().rev() {
            *slot = idx % self.a;
            idx /= self.a;
        }
        digits
    }
}

/// One draw from a fresh generator.
pub fn sample_sequence(measure: &DiscreteMeasure, seed: u64) -> Vec<usize> {
    let sampler = SequentialSampler::new(measure);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sampler.draw(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use concentration_lab::measure::{make_forbidden, make_product};

    #[test]
    fn point_mass_always_sampled() {
        let m = make_product(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        for seed in 0..20 {
            assert_eq!(sample_sequence(&m, seed), vec![0, 1]);
        }
    }

    #[test]
    fn forbidden_support_respected() {
        let m = make_forbidden(4).unwrap();
        let sampler = SequentialSampler::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5000 {
            let x = sampler.draw(&mut rng);
            assert_eq!(x[0], x[3]);
        }
    }

    #[test]
    fn coordinate_frequencies_near_half() {
        let m = make_product(&vec![vec![0.5, 0.5]; 3]).unwrap();
        let sampler = SequentialSampler::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rounds = 100_000usize;
        let mut ones = [0usize; 3];
        for _ in 0..rounds {
            let x = sampler.draw(&mut rng);
            for (c, &xi) in ones.iter_mut().zip(&x) {
                *c += xi;
            }
        }
        // three-sigma band around 1/2 at 1e5 samples
        let band = 3.0 * (0.25f64 / rounds as f64).sqrt();
        for &c in &ones {
            let freq = c as f64 / rounds as f64;
            assert!((freq - 0.5).abs() < band, "freq {freq} outside ±{band}");
        }
    }

    #[test]
    fn chi_squared_goodness_of_fit() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};

        let measures = [
            make_forbidden(4).unwrap(),
            concentration_lab::measure::make_markov(
                &[0.4, 0.6],
                &[vec![0.7, 0.3], vec![0.2, 0.8]],
                3,
            )
            .unwrap(),
        ];
        for (which, m) in measures.iter().enumerate() {
            let sampler = SequentialSampler::new(m);
            let mut rng = ChaCha8Rng::seed_from_u64(2024 + which as u64);
            let rounds = 100_000usize;
            let mut counts = vec![0u64; m.density().len()];
            for _ in 0..rounds {
                counts[sampler.draw_index(&mut rng)] += 1;
            }
            let mut stat = 0.0;
            let mut dof = 0usize;
            for (&c, &p) in counts.iter().zip(m.density()) {
                if p > 0.0 {
                    let expected = p * rounds as f64;
                    stat += (c as f64 - expected).powi(2) / expected;
                    dof += 1;
                } else {
                    assert_eq!(c, 0, "sampled a zero-probability state");
                }
            }
            let dist = ChiSquared::new((dof - 1) as f64).unwrap();
            let p_value = 1.0 - dist.cdf(stat);
            assert!(
                p_value > 1e-6,
                "measure {which}: chi2 = {stat:.2}, p = {p_value:e}"
            );
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let m = make_forbidden(3).unwrap();
        assert_eq!(sample_sequence(&m, 42), sample_sequence(&m, 42));
    }
}

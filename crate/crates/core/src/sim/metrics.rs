//! Sample means with normal-approximation 95% confidence intervals.

use serde::{Deserialize, Serialize};

use crate::sim::episode::EpisodeResult;

const Z_95: f64 = 1.96;

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Mean and 95% half-width `1.96 · s / √n` (zero for a single sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanCi {
                mean: f64::NAN,
                half_width: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().copied().collect::<KahanSum>().total() / n as f64;
        let half_width = if n > 1 {
            let ss = xs.iter().map(|x| (x - mean).powi(2)).collect::<KahanSum>().total();
            Z_95 * (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        MeanCi { mean, half_width, n }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Per-run differences `a[i] − b[i]` of two paired samples.
///
/// # Panics
/// Panics if the samples have different lengths.
pub fn paired_difference(a: &[f64], b: &[f64]) -> MeanCi {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    MeanCi::from_samples(&diff)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub runs: usize,
    pub completion: MeanCi,
    pub cost: MeanCi,
    pub payment: MeanCi,
    pub slots_cellular: f64,
    pub slots_wifi: f64,
    pub slots_waiting: f64,
}

impl AggregateMetrics {
    pub fn from_episodes(episodes: &[EpisodeResult]) -> Self {
        let n = episodes.len();
        let col = |f: &dyn Fn(&EpisodeResult) -> f64| -> Vec<f64> { episodes.iter().map(f).collect() };
        let mean = |xs: Vec<f64>| xs.into_iter().collect::<KahanSum>().total() / n as f64;
        AggregateMetrics {
            runs: n,
            completion: MeanCi::from_samples(&col(&|e| f64::from(u8::from(e.completed)))),
            cost: MeanCi::from_samples(&col(&|e| e.total_cost)),
            payment: MeanCi::from_samples(&col(&|e| e.total_payment)),
            slots_cellular: mean(col(&|e| e.slots_cellular as f64)),
            slots_wifi: mean(col(&|e| e.slots_wifi as f64)),
            slots_waiting: mean(col(&|e| e.slots_waiting as f64)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 1000.0);
    }

    #[test]
    fn interval_formula() {
        let ci = MeanCi::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ci.mean, 2.5);
        let s = (5.0f64 / 3.0).sqrt();
        assert!((ci.half_width - 1.96 * s / 2.0).abs() < 1e-12);
        assert_eq!(MeanCi::from_samples(&[7.0]).half_width, 0.0);
    }

    #[test]
    fn single_episode_aggregate_equals_episode() {
        let e = EpisodeResult {
            completed: true,
            total_payment: 3.5,
            penalty_paid: 0.0,
            total_cost: 3.5,
            slots_cellular: 2,
            slots_wifi: 1,
            slots_waiting: 4,
            trajectory: Vec::new(),
        };
        let m = AggregateMetrics::from_episodes(std::slice::from_ref(&e));
        assert_eq!(m.completion.mean, 1.0);
        assert_eq!(m.cost.mean, 3.5);
        assert_eq!(m.payment.mean, 3.5);
        assert_eq!((m.slots_cellular, m.slots_wifi, m.slots_waiting), (2.0, 1.0, 4.0));
        assert_eq!(m.cost.half_width, 0.0);
    }

    proptest! {
        #[test]
        fn completion_is_a_probability(flags in proptest::collection::vec(any::<bool>(), 1..50)) {
            let eps: Vec<_> = flags.iter().map(|&c| EpisodeResult {
                completed: c,
                total_payment: 0.0,
                penalty_paid: 0.0,
                total_cost: 0.0,
                slots_cellular: 0,
                slots_wifi: 0,
                slots_waiting: 0,
                trajectory: Vec::new(),
            }).collect();
            let m = AggregateMetrics::from_episodes(&eps);
            prop_assert!((0.0..=1.0).contains(&m.completion.mean));
        }

        #[test]
        fn paired_difference_of_identical_samples_is_zero(xs in proptest::collection::vec(-1e6f64..1e6, 2..40)) {
            let d = paired_difference(&xs, &xs);
            prop_assert_eq!(d.mean, 0.0);
            prop_assert_eq!(d.half_width, 0.0);
        }
    }
}

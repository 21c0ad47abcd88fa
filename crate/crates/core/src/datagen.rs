//! Offline datasets drawn from a target kernel, reduced to transition counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TransitionKernel;

/// `N_{s,a}(s')` for every `(s, a, s')`, stored in `(s, a, s')` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    states: usize,
    actions: usize,
    data: Vec<u64>,
}

impl TransitionCounts {
    pub fn zeros(states: usize, actions: usize) -> Self {
        TransitionCounts { states, actions, data: vec![0; states * actions * states] }
    }

    pub fn from_flat(states: usize, actions: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != states * actions * states {
            return Err(Error::DimensionMismatch {
                expected: states * actions * states,
                found: data.len(),
            });
        }
        Ok(TransitionCounts { states, actions, data })
    }

    /// Builds counts from sparse `(s, a, s', count)` entries; repeated keys add up.
    pub fn from_sparse(
        states: usize,
        actions: usize,
        entries: impl IntoIterator<Item = (usize, usize, usize, u64)>,
    ) -> Result<Self> {
        let mut counts = Self::zeros(states, actions);
        for (s, a, next, c) in entries {
            if s >= states || a >= actions || next >= states {
                return Err(Error::ShapeMismatch(format!(
                    "entry ({s},{a},{next}) outside {states}x{actions}"
                )));
            }
            counts.data[(s * actions + a) * states + next] += c;
        }
        Ok(counts)
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, s: usize, a: usize) -> &[u64] {
        let start = (s * self.actions + a) * self.states;
        &self.data[start..start + self.states]
    }

    /// `N(s, a)`.
    pub fn total(&self, s: usize, a: usize) -> u64 {
        self.row(s, a).iter().sum()
    }

    /// Nonzero entries as `(s, a, s', count)` in `(s, a, s')` order.
    pub fn sparse_entries(&self) -> impl Iterator<Item = (usize, usize, usize, u64)> + '_ {
        let (sn, an) = (self.states, self.actions);
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (i / (an * sn), (i / sn) % an, i % sn, c))
    }
}

/// How `(s, a)` pairs are covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingMode {
    /// Exactly `n` successors for every pair.
    BalancedPerPair { n: u64 },
    /// `total` pairs drawn uniformly at random, one successor each.
    UniformPairs { total: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    #[serde(flatten)]
    pub mode: SamplingMode,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn balanced(n: u64, seed: u64) -> Self {
        SamplingPlan { mode: SamplingMode::BalancedPerPair { n }, seed }
    }

    pub fn uniform(total: u64, seed: u64) -> Self {
        SamplingPlan { mode: SamplingMode::UniformPairs { total }, seed }
    }
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    row.iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Smallest `j` with `u < cdf[j]`, for `u` scaled into `[0, cdf.last())`.
fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

fn pair_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws an offline dataset from `target` according to `plan`.
///
/// Balanced sampling gives every pair its own random stream, so results do
/// not depend on evaluation order.
pub fn sample_counts(target: &TransitionKernel, plan: &SamplingPlan) -> TransitionCounts {
    let (states, actions) = (target.num_states(), target.num_actions());
    let pairs = states * actions;
    let data = match plan.mode {
        SamplingMode::BalancedPerPair { n } => (0..pairs)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0u64; states];
                if n > 0 {
                    let cdf = cumulative(target.row(i / actions, i % actions));
                    let mut rng = pair_rng(plan.seed, i as u64);
                    for _ in 0..n {
                        row[inverse_cdf(&cdf, rng.gen::<f64>())] += 1;
                    }
                }
                row
            })
            .flatten()
            .collect(),
        SamplingMode::UniformPairs { total } => {
            let cdfs: Vec<Vec<f64>> = target.rows().map(cumulative).collect();
            let mut data = vec![0u64; pairs * states];
            let mut rng = pair_rng(plan.seed, pairs as u64);
            for _ in 0..total {
                let i = rng.gen_range(0..pairs);
                let next = inverse_cdf(&cdfs[i], rng.gen::<f64>());
                data[i * states + next] += 1;
            }
            data
        }
    };
    TransitionCounts { states, actions, data }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountsSummary {
    pub coverage_fraction: f64,
    pub min_n: u64,
    pub total: u64,
}

/// Coverage fraction, smallest `N(s, a)` and total sample count.
pub fn counts_summary(counts: &TransitionCounts) -> CountsSummary {
    let totals: Vec<u64> = (0..counts.states)
        .flat_map(|s| (0..counts.actions).map(move |a| (s, a)))
        .map(|(s, a)| counts.total(s, a))
        .collect();
    let covered = totals.iter().filter(|&&n| n > 0).count();
    CountsSummary {
        coverage_fraction: covered as f64 / totals.len() as f64,
        min_n: totals.iter().copied().min().unwrap_or(0),
        total: totals.iter().sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(rows: Vec<Vec<f64>>) -> TransitionKernel {
        let s = rows[0].len();
        let a = rows.len() / s;
        TransitionKernel::from_flat(s, a, rows.concat()).unwrap()
    }

    #[test]
    fn zero_budget_gives_zero_counts() {
        let k = TransitionKernel::uniform(3, 2);
        let c = sample_counts(&k, &SamplingPlan::balanced(0, 1));
        assert_eq!(c, TransitionCounts::zeros(3, 2));
        assert_eq!(counts_summary(&c).coverage_fraction, 0.0);
    }

    #[test]
    fn point_mass_rows_are_sampled_exactly() {
        let k = kernel(vec![vec![0.0, 1.0, 0.0]; 3]);
        let c = sample_counts(&k, &SamplingPlan::balanced(5, 9));
        for s in 0..3 {
            assert_eq!(c.row(s, 0), &[0, 5, 0]);
        }
        let summary = counts_summary(&c);
        assert_eq!(summary.coverage_fraction, 1.0);
        assert_eq!(summary.min_n, 5);
        assert_eq!(summary.total, 15);
    }

    #[test]
    fn fair_coin_concentrates() {
        let k = kernel(vec![vec![0.5, 0.5]; 2]);
        let c = sample_counts(&k, &SamplingPlan::balanced(1_000_000, 3));
        let f = c.row(0, 0)[0] as f64 / 1e6;
        assert!((f - 0.5).abs() < 3e-3);
    }

    #[test]
    fn trailing_zero_mass_is_never_drawn() {
        let k = kernel(vec![vec![0.3, 0.7, 0.0]; 3]);
        let c = sample_counts(&k, &SamplingPlan::balanced(10_000, 5));
        assert_eq!(c.row(2, 0)[2], 0);
    }

    #[test]
    fn chi_square_does_not_reject() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let k = kernel(vec![probs.to_vec(); 4]);
        let n = 100_000u64;
        let c = sample_counts(&k, &SamplingPlan::balanced(n, 11));
        // Critical value of chi-square with 3 degrees of freedom at 1e-6.
        let critical = 30.66;
        for s in 0..4 {
            let stat: f64 = c
                .row(s, 0)
                .iter()
                .zip(probs)
                .map(|(&o, p)| {
                    let e = p * n as f64;
                    (o as f64 - e).powi(2) / e
                })
                .sum();
            assert!(stat < critical, "state {s}: {stat}");
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let k = kernel(vec![vec![0.2, 0.3, 0.5]; 6]);
        for plan in [SamplingPlan::balanced(17, 4), SamplingPlan::uniform(50, 4)] {
            assert_eq!(sample_counts(&k, &plan), sample_counts(&k, &plan));
        }
        assert_ne!(
            sample_counts(&k, &SamplingPlan::balanced(17, 4)),
            sample_counts(&k, &SamplingPlan::balanced(17, 5))
        );
    }

    #[test]
    fn uniform_pairs_cover_about_one_minus_inverse_e() {
        let k = TransitionKernel::uniform(50, 4);
        let mut coverage = 0.0;
        for seed in 0..20 {
            let c = sample_counts(&k, &SamplingPlan::uniform(200, seed));
            let summary = counts_summary(&c);
            assert_eq!(summary.total, 200);
            coverage += summary.coverage_fraction / 20.0;
        }
        assert!((coverage - (1.0 - (-1.0f64).exp())).abs() < 0.02, "{coverage}");
    }

    #[test]
    fn sparse_round_trip() {
        let k = kernel(vec![vec![0.2, 0.3, 0.5]; 6]);
        let c = sample_counts(&k, &SamplingPlan::balanced(7, 2));
        let back = TransitionCounts::from_sparse(3, 2, c.sparse_entries()).unwrap();
        assert_eq!(back, c);
    }
}

//! Comparators: source-centered planning with inflated radii, and tabular
//! Q-learning on simulated target transitions.

use rand::Rng;
use ribe_core::mdp::{Policy, TabularMDP};

use crate::config::QLearningParams;

/// Per-pair radii `min(1, R + tv(P_s, P_t))`.
pub fn overconservative_radii(source_tv: &[f64], radius: f64) -> Vec<f64> {
    source_tv.iter().map(|d| (radius + d).min(1.0)).collect()
}

fn argmax_random_ties<R: Rng>(q: &[f64], rng: &mut R) -> usize {
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..q.len()).filter(|&a| q[a] == best).collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.gen_range(0..ties.len())]
    }
}

fn draw_next<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let u = rng.gen::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Tabular Q-learning for `budget` simulated target steps with ε-greedy
/// behavior. ε decays linearly from `epsilon_start` to `epsilon_end` over the
/// budget; the agent restarts from a uniformly drawn state every
/// `reset_every` steps. Returns the greedy policy (random tie-breaking).
pub fn q_learning<R: Rng>(mdp: &TabularMDP, budget: u64, params: &QLearningParams, rng: &mut R) -> Policy {
    let (states, actions) = (mdp.num_states(), mdp.num_actions());
    let cdfs: Vec<Vec<f64>> = mdp
        .kernel
        .rows()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, &p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let mut q = vec![0.0; states * actions];
    let mut s = 0;
    let span = budget.saturating_sub(1).max(1) as f64;
    for t in 0..budget {
        if t % params.reset_every == 0 {
            s = rng.gen_range(0..states);
        }
        let eps = params.epsilon_start + (params.epsilon_end - params.epsilon_start) * (t as f64 / span);
        let a = if rng.gen::<f64>() < eps {
            rng.gen_range(0..actions)
        } else {
            argmax_random_ties(&q[s * actions..(s + 1) * actions], rng)
        };
        let next = draw_next(&cdfs[s * actions + a], rng);
        let best_next = q[next * actions..(next + 1) * actions].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let target = mdp.reward(s, a) + mdp.gamma * best_next;
        let slot = &mut q[s * actions + a];
        *slot += params.learning_rate * (target - *slot);
        s = next;
    }
    Policy::Deterministic((0..states).map(|s| argmax_random_ties(&q[s * actions..(s + 1) * actions], rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use ribe_core::mdp::TransitionKernel;

    /// Two states, two actions; action 1 always moves to the rewarding state.
    fn two_state() -> TabularMDP {
        let kernel = TransitionKernel::from_rows(vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ])
        .unwrap();
        TabularMDP::new(kernel, vec![0.0, 1.0, 0.0, 1.0], 0.9).unwrap()
    }

    #[test]
    fn radii_are_inflated_and_clipped() {
        assert_eq!(overconservative_radii(&[0.2, 0.95], 0.1), vec![0.30000000000000004, 1.0]);
    }

    #[test]
    fn zero_budget_gives_a_random_greedy_policy() {
        let mdp = two_state();
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..16 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Policy::Deterministic(p) = q_learning(&mdp, 0, &QLearningParams::default(), &mut rng) {
                seen.insert(p);
            }
        }
        assert!(seen.len() > 1);
    }

    #[test]
    fn large_budget_finds_the_optimal_action() {
        let mdp = two_state();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let policy = q_learning(&mdp, 20_000, &QLearningParams::default(), &mut rng);
        assert_eq!(policy, Policy::Deterministic(vec![1, 1]));
    }

    #[test]
    fn learning_is_reproducible() {
        let mdp = two_state();
        let run = |seed| q_learning(&mdp, 500, &QLearningParams::default(), &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(run(3), run(3));
    }
}

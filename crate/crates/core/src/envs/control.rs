//! Discretized classic-control pairs: CartPole, Acrobot and Pendulum.
//!
//! States are cells of a bin grid over the observation ranges. For every
//! `(s, a)` two distinct successor states `x₁, x₂` are drawn uniformly from
//! the seeded RNG and shared by both domains. The source row puts `α r_s` on
//! `x₁`, `(1 − α) r_s` on `x₂` and `r_s/|S|` on every other state; the target
//! uses `(1 − α) r_t`, `α r_t` and `r_t/|S|`. Rows are normalized.
//!
//! Rewards depend on the state only and are evaluated at bin centers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{bin_centers, check_mixing, normalized, grid_indices, EnvMetadata, EnvName, EnvPair, DEFAULT_GAMMA};
use crate::error::{Error, Result};
use crate::mdp::{TabularMDP, TransitionKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlEnv {
    CartPole,
    Acrobot,
    Pendulum,
}

impl ControlEnv {
    pub fn default_bins(self) -> Vec<usize> {
        match self {
            ControlEnv::CartPole => vec![4, 4, 5, 3],
            ControlEnv::Acrobot => vec![6, 6, 2, 2],
            ControlEnv::Pendulum => vec![12, 20],
        }
    }

    /// Observation ranges per binned dimension.
    pub fn ranges(self) -> Vec<(f64, f64)> {
        match self {
            // Cart position, cart velocity, pole angle (degrees), pole
            // angular velocity.
            ControlEnv::CartPole => vec![(-4.8, 4.8), (-0.5, 0.5), (-24.0, 24.0), (-5.0, 5.0)],
            // cos θ₁, cos θ₂, θ̇₁, θ̇₂.
            ControlEnv::Acrobot => {
                vec![(-1.0, 1.0), (-1.0, 1.0), (-4.0 * PI, 4.0 * PI), (-9.0 * PI, 9.0 * PI)]
            }
            // Angle from upright, angular velocity.
            ControlEnv::Pendulum => vec![(-PI, PI), (-10.0, 10.0)],
        }
    }

    pub fn num_actions(self) -> usize {
        match self {
            ControlEnv::CartPole => 2,
            ControlEnv::Acrobot => 3,
            ControlEnv::Pendulum => 5,
        }
    }

    fn name(self) -> EnvName {
        match self {
            ControlEnv::CartPole => EnvName::CartPole,
            ControlEnv::Acrobot => EnvName::Acrobot,
            ControlEnv::Pendulum => EnvName::Pendulum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSpec {
    pub env: ControlEnv,
    pub r_s: f64,
    pub r_t: f64,
    pub alpha: f64,
    pub bins: Vec<usize>,
    pub seed: u64,
    pub gamma: f64,
}

impl ControlSpec {
    pub fn default_for(env: ControlEnv, seed: u64) -> Self {
        ControlSpec { env, r_s: 0.6, r_t: 0.7, alpha: 0.2, bins: env.default_bins(), seed, gamma: DEFAULT_GAMMA }
    }
}

/// Bin-center observations for every state, in row-major bin order.
pub(crate) fn observations(env: ControlEnv, bins: &[usize]) -> Vec<Vec<f64>> {
    let centers: Vec<Vec<f64>> =
        env.ranges().iter().zip(bins).map(|(&(lo, hi), &b)| bin_centers(lo, hi, b)).collect();
    grid_indices(bins)
        .into_iter()
        .map(|idx| idx.iter().enumerate().map(|(d, &i)| centers[d][i]).collect())
        .collect()
}

/// Observations scaled to `[−1, 1]` per dimension.
pub(crate) fn normalized_observations(env: ControlEnv, bins: &[usize]) -> Vec<Vec<f64>> {
    let ranges = env.ranges();
    observations(env, bins)
        .into_iter()
        .map(|obs| obs.iter().zip(&ranges).map(|(x, (lo, hi))| 2.0 * (x - lo) / (hi - lo) - 1.0).collect())
        .collect()
}

/// Whether the bin of width `width` centered at `center` contains 0.
fn holds_zero(center: f64, width: f64) -> bool {
    center.abs() < 0.5 * width
}

pub(crate) fn cartpole_reward(obs: &[f64], angle_width: f64) -> f64 {
    let (x, v, angle) = (obs[0], obs[1], obs[2]);
    let slow = v.abs() <= 0.17;
    if slow && holds_zero(angle, angle_width) {
        if x.abs() <= 1.6 {
            50.0
        } else {
            25.0
        }
    } else if slow && angle.abs() < 12.0 {
        10.0
    } else {
        0.0
    }
}

/// Tip height `−cos θ₁ − cos(θ₁ + θ₂)` with both angles taken in `[0, π]`.
pub(crate) fn acrobot_height(cos1: f64, cos2: f64) -> f64 {
    let (t1, t2) = (cos1.clamp(-1.0, 1.0).acos(), cos2.clamp(-1.0, 1.0).acos());
    -cos1 - (t1 + t2).cos()
}

fn acrobot_reward(obs: &[f64]) -> f64 {
    let h = acrobot_height(obs[0], obs[1]);
    if h >= 1.0 {
        20.0
    } else if h >= 0.5 {
        15.0
    } else if h >= 0.25 {
        10.0
    } else if h >= 0.0 {
        5.0
    } else {
        0.0
    }
}

fn pendulum_reward(obs: &[f64]) -> f64 {
    let (angle, omega) = (obs[0], obs[1]);
    if angle.abs() <= 1.0 && omega.abs() <= 1.0 {
        100.0
    } else if angle.abs() <= 0.5 {
        50.0
    } else {
        10.0
    }
}

/// Reward of every state.
pub(crate) fn state_rewards(env: ControlEnv, bins: &[usize]) -> Vec<f64> {
    let ranges = env.ranges();
    observations(env, bins)
        .iter()
        .map(|obs| match env {
            ControlEnv::CartPole => {
                cartpole_reward(obs, (ranges[2].1 - ranges[2].0) / bins[2] as f64)
            }
            ControlEnv::Acrobot => acrobot_reward(obs),
            ControlEnv::Pendulum => pendulum_reward(obs),
        })
        .collect()
}

/// Row with weight `w1` on `x1`, `w2` on `x2` and `background` elsewhere.
fn two_point_row(states: usize, x1: usize, x2: usize, w1: f64, w2: f64, background: f64) -> Vec<f64> {
    let mut row = vec![background; states];
    row[x1] = w1;
    row[x2] = w2;
    row
}

pub fn build_control(spec: &ControlSpec) -> Result<EnvPair> {
    check_mixing(spec.r_s, spec.r_t, spec.alpha)?;
    if spec.r_s == 0.0 || spec.r_t == 0.0 {
        return Err(Error::InvalidConstants("r_s and r_t must be positive".into()));
    }
    let dims = spec.env.ranges().len();
    if spec.bins.len() != dims || spec.bins.iter().any(|&b| b == 0) {
        return Err(Error::InvalidConstants(format!("expected {dims} positive bin counts, got {:?}", spec.bins)));
    }
    let states: usize = spec.bins.iter().product();
    if states < 2 {
        return Err(Error::InvalidConstants("need at least two states".into()));
    }
    let actions = spec.env.num_actions();
    let alpha = spec.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut source = Vec::with_capacity(states * actions * states);
    let mut target = Vec::with_capacity(states * actions * states);
    for _ in 0..states * actions {
        let x1 = rng.gen_range(0..states);
        let mut x2 = rng.gen_range(0..states - 1);
        if x2 >= x1 {
            x2 += 1;
        }
        let (bs, bt) = (spec.r_s / states as f64, spec.r_t / states as f64);
        let p = normalized(two_point_row(states, x1, x2, alpha * spec.r_s, (1.0 - alpha) * spec.r_s, bs));
        let q = normalized(two_point_row(states, x1, x2, (1.0 - alpha) * spec.r_t, alpha * spec.r_t, bt));
        source.extend(p);
        target.extend(q);
    }
    let per_state = state_rewards(spec.env, &spec.bins);
    let rewards: Vec<f64> = per_state.iter().flat_map(|&r| std::iter::repeat(r).take(actions)).collect();
    let metadata = EnvMetadata {
        name: spec.env.name(),
        constants: json!({
            "r_s": spec.r_s,
            "r_t": spec.r_t,
            "alpha": spec.alpha,
            "bins": spec.bins,
            "gamma": spec.gamma,
        }),
        seed: spec.seed,
        state_features: normalized_observations(spec.env, &spec.bins),
    };
    EnvPair::new(
        TabularMDP::new(TransitionKernel::from_flat(states, actions, source)?, rewards.clone(), spec.gamma)?,
        TabularMDP::new(TransitionKernel::from_flat(states, actions, target)?, rewards, spec.gamma)?,
        metadata,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn top_two(row: &[f64]) -> (usize, usize) {
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        (idx[0], idx[1])
    }

    #[test]
    fn state_counts() {
        for (env, states) in [(ControlEnv::CartPole, 240), (ControlEnv::Acrobot, 144), (ControlEnv::Pendulum, 240)] {
            let pair = build_control(&ControlSpec::default_for(env, 0)).unwrap();
            assert_eq!(pair.num_states(), states);
            assert_eq!(pair.num_actions(), env.num_actions());
        }
    }

    #[test]
    fn random_successors_are_shared() {
        let pair = build_control(&ControlSpec::default_for(ControlEnv::Acrobot, 9)).unwrap();
        for (p, q) in pair.source.kernel.rows().zip(pair.target.kernel.rows()) {
            let (a1, a2) = top_two(p);
            let (b1, b2) = top_two(q);
            assert_ne!(a1, a2);
            // Source favors x₂ and target favors x₁ at α = 0.2.
            assert_eq!((a1, a2), (b2, b1));
        }
    }

    #[test]
    fn half_mixing_with_equal_r_gives_identical_rows() {
        let spec = ControlSpec { r_t: 0.6, alpha: 0.5, ..ControlSpec::default_for(ControlEnv::Pendulum, 4) };
        let pair = build_control(&spec).unwrap();
        assert_eq!(pair.source.kernel, pair.target.kernel);
    }

    #[test]
    fn row_masses_match_the_construction() {
        let spec = ControlSpec::default_for(ControlEnv::CartPole, 1);
        let pair = build_control(&spec).unwrap();
        let s = 240.0;
        let total = 0.6 + 238.0 * 0.6 / s;
        let row = pair.source.kernel.row(17, 1);
        let (x2, x1) = top_two(row);
        assert!((row[x1] - 0.2 * 0.6 / total).abs() < 1e-14);
        assert!((row[x2] - 0.8 * 0.6 / total).abs() < 1e-14);
        let other = (0..240).find(|&j| j != x1 && j != x2).unwrap();
        assert!((row[other] - 0.6 / s / total).abs() < 1e-14);
    }

    #[test]
    fn different_seeds_give_different_kernels() {
        let a = build_control(&ControlSpec::default_for(ControlEnv::CartPole, 1)).unwrap();
        let b = build_control(&ControlSpec::default_for(ControlEnv::CartPole, 2)).unwrap();
        assert_ne!(a.source.kernel, b.source.kernel);
        assert_eq!(a.source.rewards(), b.source.rewards());
    }

    #[test]
    fn cartpole_reward_tiers() {
        let rewards = state_rewards(ControlEnv::CartPole, &[4, 4, 5, 3]);
        let mut tiers: Vec<f64> = rewards.clone();
        tiers.sort_by(f64::total_cmp);
        tiers.dedup();
        assert_eq!(tiers, vec![0.0, 10.0, 25.0, 50.0]);
        // Position bin 1 (center −1.2), velocity bin 1 (−0.125), angle bin 2
        // (upright), any angular velocity.
        let s = ((1 * 4 + 1) * 5 + 2) * 3;
        assert_eq!(rewards[s], 50.0);
        // Same but the cart is far out (position bin 0).
        assert_eq!(rewards[((0 * 4 + 1) * 5 + 2) * 3], 25.0);
        // Tilted by one bin (9.6°).
        assert_eq!(rewards[((1 * 4 + 1) * 5 + 3) * 3], 10.0);
        // Fast cart.
        assert_eq!(rewards[((1 * 4 + 0) * 5 + 2) * 3], 0.0);
    }

    #[test]
    fn acrobot_height_extremes() {
        // Hanging straight down: both cosines 1 means θ₁ = θ₂ = 0.
        assert!((acrobot_height(1.0, 1.0) + 2.0).abs() < 1e-12);
        // First link up, second aligned with it.
        assert!((acrobot_height(-1.0, 1.0) - 2.0).abs() < 1e-12);
        let rewards = state_rewards(ControlEnv::Acrobot, &[6, 6, 2, 2]);
        assert!(rewards.contains(&20.0) && rewards.contains(&0.0));
    }

    #[test]
    fn pendulum_reward_tiers() {
        let rewards = state_rewards(ControlEnv::Pendulum, &[12, 20]);
        // Angle bin 6 is centered at π/12; velocity bin 10 at 0.5.
        assert_eq!(rewards[6 * 20 + 10], 100.0);
        assert_eq!(rewards[6 * 20 + 19], 50.0);
        assert_eq!(rewards[0], 10.0);
    }

    #[test]
    fn bad_bins_are_rejected() {
        let spec = ControlSpec { bins: vec![4, 4], ..ControlSpec::default_for(ControlEnv::CartPole, 0) };
        assert!(matches!(build_control(&spec), Err(Error::InvalidConstants(_))));
    }
}

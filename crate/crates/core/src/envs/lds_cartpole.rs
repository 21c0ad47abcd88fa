//! CartPole with softmax kernels `P(s' | s, a) ∝ exp(θ_{sa}ᵀ φ(s'))`.
//!
//! `φ(s')` holds the four normalized bin-center observables. Source and
//! target parameters share their leading block and differ in the last
//! `private_dims` coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::control::{normalized_observations, state_rewards, ControlEnv};
use super::{EnvMetadata, EnvName, EnvPair, DEFAULT_GAMMA};
use crate::error::{Error, Result};
use crate::estimate::lds::softmax_row;
use crate::mdp::{TabularMDP, TransitionKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdsCartPoleSpec {
    pub seed: u64,
    /// Number of trailing parameter coordinates that differ between domains.
    pub private_dims: usize,
    /// Standard deviation of the normal parameter draws.
    pub scale: f64,
    /// Reuse the source private block for the target (identical domains).
    pub same_private: bool,
    pub gamma: f64,
}

impl LdsCartPoleSpec {
    pub fn new(seed: u64) -> Self {
        LdsCartPoleSpec { seed, private_dims: 2, scale: 1.0, same_private: false, gamma: DEFAULT_GAMMA }
    }
}

#[derive(Debug, Clone)]
pub struct LdsCartPole {
    pub pair: EnvPair,
    /// `φ` as one row per parameter coordinate, one column per next state.
    pub psi: Vec<Vec<f64>>,
    /// Per `(s, a)` in `(s, a)` order.
    pub theta_source: Vec<Vec<f64>>,
    pub theta_target: Vec<Vec<f64>>,
    pub shared_indices: Vec<usize>,
}

pub const FEATURE_DIM: usize = 4;

pub fn build_lds_cartpole(spec: &LdsCartPoleSpec) -> Result<LdsCartPole> {
    if spec.private_dims > FEATURE_DIM {
        return Err(Error::InvalidConstants(format!(
            "private_dims {} exceeds the feature dimension {FEATURE_DIM}",
            spec.private_dims
        )));
    }
    if !(spec.scale >= 0.0 && spec.scale.is_finite()) {
        return Err(Error::InvalidConstants(format!("scale {} must be finite and nonnegative", spec.scale)));
    }
    let env = ControlEnv::CartPole;
    let bins = env.default_bins();
    let features = normalized_observations(env, &bins);
    let states = features.len();
    let actions = env.num_actions();
    let psi: Vec<Vec<f64>> = (0..FEATURE_DIM).map(|k| features.iter().map(|f| f[k]).collect()).collect();
    let shared_dims = FEATURE_DIM - spec.private_dims;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len).map(|_| spec.scale * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect::<Vec<f64>>()
    };
    let mut theta_source = Vec::with_capacity(states * actions);
    let mut theta_target = Vec::with_capacity(states * actions);
    for _ in 0..states * actions {
        let shared = draw(shared_dims);
        let private_s = draw(spec.private_dims);
        let private_t = draw(spec.private_dims);
        let mut ts = shared.clone();
        ts.extend(&private_s);
        let mut tt = shared;
        tt.extend(if spec.same_private { &private_s } else { &private_t });
        theta_source.push(ts);
        theta_target.push(tt);
    }
    let kernel = |thetas: &[Vec<f64>]| -> Result<TransitionKernel> {
        let data: Vec<f64> = thetas.iter().flat_map(|t| softmax_row(&psi, t)).collect();
        TransitionKernel::from_flat(states, actions, data)
    };
    let per_state = state_rewards(env, &bins);
    let rewards: Vec<f64> = per_state.iter().flat_map(|&r| std::iter::repeat(r).take(actions)).collect();
    let metadata = EnvMetadata {
        name: EnvName::LdsCartPole,
        constants: json!({
            "feature_dim": FEATURE_DIM,
            "private_dims": spec.private_dims,
            "scale": spec.scale,
            "same_private": spec.same_private,
            "bins": bins,
            "gamma": spec.gamma,
        }),
        seed: spec.seed,
        state_features: features,
    };
    let pair = EnvPair::new(
        TabularMDP::new(kernel(&theta_source)?, rewards.clone(), spec.gamma)?,
        TabularMDP::new(kernel(&theta_target)?, rewards, spec.gamma)?,
        metadata,
    )?;
    Ok(LdsCartPole { pair, psi, theta_source, theta_target, shared_indices: (0..shared_dims).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::kernel_max_tv;

    #[test]
    fn shared_block_is_identical() {
        let lds = build_lds_cartpole(&LdsCartPoleSpec::new(5)).unwrap();
        assert_eq!(lds.shared_indices, vec![0, 1]);
        for (s, t) in lds.theta_source.iter().zip(&lds.theta_target) {
            assert_eq!(s[..2], t[..2]);
            assert_ne!(s[2..], t[2..]);
        }
    }

    #[test]
    fn same_private_block_gives_identical_kernels() {
        let spec = LdsCartPoleSpec { same_private: true, ..LdsCartPoleSpec::new(5) };
        let lds = build_lds_cartpole(&spec).unwrap();
        assert_eq!(lds.pair.source.kernel, lds.pair.target.kernel);
    }

    #[test]
    fn rows_are_strictly_positive() {
        let lds = build_lds_cartpole(&LdsCartPoleSpec::new(0)).unwrap();
        assert!(lds.pair.target.kernel.as_flat().iter().all(|&p| p > 0.0));
        assert_eq!(lds.psi.len(), 4);
        assert_eq!(lds.psi[0].len(), 240);
    }

    #[test]
    fn default_domains_differ() {
        let lds = build_lds_cartpole(&LdsCartPoleSpec::new(0)).unwrap();
        let gap = kernel_max_tv(&lds.pair.source.kernel, &lds.pair.target.kernel).unwrap();
        assert!(gap > 0.1 && gap < 1.0, "{gap}");
    }

    #[test]
    fn kernels_match_their_parameters() {
        let lds = build_lds_cartpole(&LdsCartPoleSpec::new(2)).unwrap();
        let pair = 7 * 2 + 1;
        let row = softmax_row(&lds.psi, &lds.theta_target[pair]);
        for (a, b) in lds.pair.target.kernel.row(7, 1).iter().zip(&row) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

//! Paired source/target environments that share states, actions, rewards
//! and discount and differ only in their transition kernels.

pub mod control;
pub mod lds_cartpole;
pub mod toy_text;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{CostMatrix, MdpDocument, TabularMDP};

pub use control::{build_control, ControlEnv, ControlSpec};
pub use lds_cartpole::{build_lds_cartpole, LdsCartPole, LdsCartPoleSpec};
pub use toy_text::{build_toy_text, ToyTextEnv, ToyTextSpec};

pub const DEFAULT_GAMMA: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    FrozenLake,
    CliffWalking,
    Taxi,
    CartPole,
    Acrobot,
    Pendulum,
    LdsCartPole,
}

impl EnvName {
    pub const ALL: [EnvName; 7] = [
        EnvName::FrozenLake,
        EnvName::CliffWalking,
        EnvName::Taxi,
        EnvName::CartPole,
        EnvName::Acrobot,
        EnvName::Pendulum,
        EnvName::LdsCartPole,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvName::FrozenLake => "frozen_lake",
            EnvName::CliffWalking => "cliff_walking",
            EnvName::Taxi => "taxi",
            EnvName::CartPole => "cart_pole",
            EnvName::Acrobot => "acrobot",
            EnvName::Pendulum => "pendulum",
            EnvName::LdsCartPole => "lds_cart_pole",
        }
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        EnvName::ALL.into_iter().find(|e| e.as_str() == key).ok_or_else(|| {
            let names: Vec<&str> = EnvName::ALL.iter().map(|e| e.as_str()).collect();
            Error::InvalidConstants(format!("unknown environment {s:?}; expected one of {names:?}"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvMetadata {
    pub name: EnvName,
    /// Construction constants (`r_s`, `r_t`, `alpha`, bins, ...).
    pub constants: serde_json::Value,
    pub seed: u64,
    /// A coordinate vector per state; Euclidean distances between them give
    /// the ground cost for W1 side information.
    pub state_features: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvPair {
    pub source: TabularMDP,
    pub target: TabularMDP,
    pub metadata: EnvMetadata,
}

#[derive(Serialize, Deserialize)]
struct EnvPairDocument {
    source: MdpDocument,
    target: MdpDocument,
    metadata: EnvMetadata,
}

impl EnvPair {
    pub(crate) fn new(source: TabularMDP, target: TabularMDP, metadata: EnvMetadata) -> Result<Self> {
        if !source.kernel.same_shape(&target.kernel)
            || source.rewards() != target.rewards()
            || source.gamma != target.gamma
        {
            return Err(Error::ShapeMismatch("source and target must share S, A, rewards and gamma".into()));
        }
        if metadata.state_features.len() != source.num_states() {
            return Err(Error::DimensionMismatch {
                expected: source.num_states(),
                found: metadata.state_features.len(),
            });
        }
        Ok(EnvPair { source, target, metadata })
    }

    pub fn num_states(&self) -> usize {
        self.source.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.source.num_actions()
    }

    /// Euclidean ground cost over the state features.
    pub fn ground_cost(&self) -> CostMatrix {
        CostMatrix::euclidean(&self.metadata.state_features)
            .expect("state features have a common dimension")
    }

    /// Both MDPs with rewards mapped onto `[0, 1]`.
    pub fn rescaled(&self) -> EnvPair {
        EnvPair {
            source: self.source.rescaled(),
            target: self.target.rescaled(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EnvPairDocument {
            source: MdpDocument::from(&self.source),
            target: MdpDocument::from(&self.target),
            metadata: self.metadata.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnvPairDocument = serde_json::from_str(text)?;
        EnvPair::new(doc.source.try_into()?, doc.target.try_into()?, doc.metadata)
    }
}

/// Builds the named environment with its default constants.
pub fn build_env(name: EnvName, seed: u64) -> Result<EnvPair> {
    match name {
        EnvName::FrozenLake => build_toy_text(&ToyTextSpec::default_for(ToyTextEnv::FrozenLake)),
        EnvName::CliffWalking => build_toy_text(&ToyTextSpec::default_for(ToyTextEnv::CliffWalking)),
        EnvName::Taxi => build_toy_text(&ToyTextSpec::default_for(ToyTextEnv::Taxi)),
        EnvName::CartPole => build_control(&ControlSpec::default_for(ControlEnv::CartPole, seed)),
        EnvName::Acrobot => build_control(&ControlSpec::default_for(ControlEnv::Acrobot, seed)),
        EnvName::Pendulum => build_control(&ControlSpec::default_for(ControlEnv::Pendulum, seed)),
        EnvName::LdsCartPole => Ok(build_lds_cartpole(&LdsCartPoleSpec::new(seed))?.pair),
    }
}

fn check_mixing(r_s: f64, r_t: f64, alpha: f64) -> Result<()> {
    for (label, v) in [("r_s", r_s), ("r_t", r_t), ("alpha", alpha)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidConstants(format!("{label} = {v} must lie in [0, 1]")));
        }
    }
    Ok(())
}

/// Divides a nonnegative row with positive sum by its sum.
pub(crate) fn normalized(mut row: Vec<f64>) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
    row
}

/// Centers of `bins` equal-width bins over `[lo, hi]`.
pub(crate) fn bin_centers(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect()
}

/// Row-major enumeration of a multi-dimensional bin grid; the last
/// dimension varies fastest.
pub(crate) fn grid_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut flat| {
            let mut idx = vec![0; dims.len()];
            for (slot, &d) in idx.iter_mut().zip(dims).rev() {
                *slot = flat % d;
                flat /= d;
            }
            idx
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::validate_kernel;

    #[test]
    fn names_round_trip() {
        for name in EnvName::ALL {
            assert_eq!(name.as_str().parse::<EnvName>().unwrap(), name);
        }
        assert_eq!("Frozen-Lake".parse::<EnvName>().unwrap(), EnvName::FrozenLake);
        assert!("lunar_lander".parse::<EnvName>().is_err());
    }

    #[test]
    fn every_environment_is_valid_and_paired() {
        for name in EnvName::ALL {
            let pair = build_env(name, 3).unwrap();
            validate_kernel(&pair.source.kernel).unwrap();
            validate_kernel(&pair.target.kernel).unwrap();
            assert_eq!(pair.source.rewards(), pair.target.rewards());
            assert_ne!(pair.source.kernel, pair.target.kernel, "{name}");
            assert_eq!(pair.source.gamma, DEFAULT_GAMMA);
        }
    }

    #[test]
    fn serialization_is_deterministic_and_round_trips() {
        for name in EnvName::ALL {
            let a = build_env(name, 11).unwrap().to_json().unwrap();
            let b = build_env(name, 11).unwrap().to_json().unwrap();
            assert_eq!(a, b);
            let back = EnvPair::from_json(&a).unwrap();
            assert_eq!(back.to_json().unwrap(), a);
        }
    }

    #[test]
    fn grid_indices_are_row_major() {
        assert_eq!(grid_indices(&[2, 3])[4], vec![1, 1]);
        assert_eq!(grid_indices(&[4, 4, 5, 3]).len(), 240);
    }

    #[test]
    fn bin_centers_split_the_range() {
        assert_eq!(bin_centers(-1.0, 1.0, 4), vec![-0.75, -0.25, 0.25, 0.75]);
    }
}

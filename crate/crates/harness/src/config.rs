//! Experiment configuration, read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ribe_core::envs::EnvName;
use ribe_core::estimate::{PriorDefault, SideInfo};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_SAMPLE_SIZES: [u64; 10] = [1, 5, 10, 50, 100, 150, 500, 1000, 5000, 10_000];
pub const DEFAULT_SEEDS: usize = 20;

/// A transfer method: an IBE variant with oracle side information, or one of
/// the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Empirical frequencies, uniform row for unsampled pairs.
    Vanilla,
    /// Empirical frequencies, source row for unsampled pairs.
    VanillaSource,
    DistanceTv,
    DistanceW1,
    Moment,
    DensityGlobal,
    DensityLocal,
    ValueAware,
    Lds,
    /// Source-centered planning with per-pair radius `R + tv(P_s, P_t)`.
    OverConservative,
    QLearning,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Vanilla,
        Method::VanillaSource,
        Method::DistanceTv,
        Method::DistanceW1,
        Method::Moment,
        Method::DensityGlobal,
        Method::DensityLocal,
        Method::ValueAware,
        Method::Lds,
        Method::OverConservative,
        Method::QLearning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::VanillaSource => "vanilla_source",
            Method::DistanceTv => "distance_tv",
            Method::DistanceW1 => "distance_w1",
            Method::Moment => "moment",
            Method::DensityGlobal => "density_global",
            Method::DensityLocal => "density_local",
            Method::ValueAware => "value_aware",
            Method::Lds => "lds",
            Method::OverConservative => "over_conservative",
            Method::QLearning => "q_learning",
        }
    }

    /// Whether the method plans on an estimate-centered set, which is where
    /// the value-error bounds apply.
    pub fn is_ibe(self) -> bool {
        !matches!(self, Method::OverConservative | Method::QLearning)
    }

    /// Default method list for an environment.
    pub fn defaults_for(env: EnvName) -> Vec<Method> {
        match env {
            EnvName::LdsCartPole => vec![Method::Vanilla, Method::Lds],
            EnvName::CartPole => Method::ALL
                .into_iter()
                .filter(|m| !matches!(m, Method::DistanceW1 | Method::ValueAware | Method::Lds))
                .collect(),
            _ => Method::ALL.into_iter().filter(|m| *m != Method::Lds).collect(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Method::ALL.into_iter().find(|m| m.as_str() == key).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
            HarnessError::Config(format!("unknown estimator {s:?}; expected one of {names:?}"))
        })
    }
}

/// An estimator entry: a method name, or user-supplied side information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorEntry {
    Named(Method),
    Custom {
        label: String,
        side_info: SideInfo,
        #[serde(default)]
        prior: Option<PriorDefault>,
    },
}

impl EstimatorEntry {
    pub fn label(&self) -> String {
        match self {
            EstimatorEntry::Named(m) => m.as_str().to_string(),
            EstimatorEntry::Custom { label, .. } => label.clone(),
        }
    }
}

/// Training radius `R′` (estimate-centered planning) and evaluation radius
/// `R` (target-centered evaluation). A bare number sets both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusSetting {
    Same(f64),
    Split { train: f64, eval: f64 },
}

impl RadiusSetting {
    pub fn train(&self) -> f64 {
        match *self {
            RadiusSetting::Same(r) => r,
            RadiusSetting::Split { train, .. } => train,
        }
    }

    pub fn eval(&self) -> f64 {
        match *self {
            RadiusSetting::Same(r) => r,
            RadiusSetting::Split { eval, .. } => eval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// The grid value is the per-pair sample count.
    #[default]
    Balanced,
    /// The grid value is the total number of uniformly drawn pairs.
    Uniform,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::Balanced => "balanced",
            Sampling::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QLearningParams {
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Steps between resets to a uniformly drawn state.
    pub reset_every: u64,
}

impl Default for QLearningParams {
    fn default() -> Self {
        QLearningParams { learning_rate: 0.1, epsilon_start: 1.0, epsilon_end: 0.05, reset_every: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: EnvName,
    /// Seed for environments with random construction (control tasks).
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Free text carried into run metadata.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub env: EnvSpec,
    /// Defaults to every method applicable to the environment.
    #[serde(default)]
    pub estimators: Option<Vec<EstimatorEntry>>,
    #[serde(default = "default_sample_sizes")]
    pub sample_sizes: Vec<u64>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_radii")]
    pub radii: Vec<RadiusSetting>,
    /// Fallback row for unsampled pairs in the side-informed estimators.
    #[serde(default = "default_prior")]
    pub prior: PriorDefault,
    #[serde(default)]
    pub rescale_rewards: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub q_learning: QLearningParams,
    #[serde(default = "default_tol")]
    pub planning_tol: f64,
}

fn default_sample_sizes() -> Vec<u64> {
    DEFAULT_SAMPLE_SIZES.to_vec()
}

fn default_seeds() -> usize {
    DEFAULT_SEEDS
}

fn default_radii() -> Vec<RadiusSetting> {
    vec![RadiusSetting::Same(0.0), RadiusSetting::Same(0.1)]
}

fn default_prior() -> PriorDefault {
    PriorDefault::SourceKernel
}

fn default_tol() -> f64 {
    ribe_core::robust::DEFAULT_TOL
}

impl ExperimentConfig {
    /// Defaults for everything but the environment.
    pub fn new(env: EnvName) -> Self {
        ExperimentConfig {
            description: None,
            env: EnvSpec { name: env, seed: 0 },
            estimators: None,
            sample_sizes: default_sample_sizes(),
            sampling: Sampling::default(),
            seeds: DEFAULT_SEEDS,
            base_seed: 0,
            radii: default_radii(),
            prior: default_prior(),
            rescale_rewards: false,
            out_dir: None,
            q_learning: QLearningParams::default(),
            planning_tol: default_tol(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn estimator_list(&self) -> Vec<EstimatorEntry> {
        match &self.estimators {
            Some(list) => list.clone(),
            None => Method::defaults_for(self.env.name).into_iter().map(EstimatorEntry::Named).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.sample_sizes.is_empty() {
            return fail("sample_sizes must not be empty".into());
        }
        if self.seeds == 0 {
            return fail("seeds must be at least 1".into());
        }
        if self.radii.is_empty() {
            return fail("radii must not be empty".into());
        }
        if matches!(&self.estimators, Some(list) if list.is_empty()) {
            return fail("estimators must not be empty".into());
        }
        for r in &self.radii {
            for v in [r.train(), r.eval()] {
                if !(0.0..=1.0).contains(&v) {
                    return fail(format!("radius {v} must lie in [0, 1]"));
                }
            }
        }
        if !(self.planning_tol > 0.0) {
            return fail(format!("planning_tol {} must be positive", self.planning_tol));
        }
        let q = &self.q_learning;
        if !(q.learning_rate > 0.0 && q.learning_rate <= 1.0) {
            return fail(format!("q_learning.learning_rate {} must lie in (0, 1]", q.learning_rate));
        }
        for e in [q.epsilon_start, q.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return fail(format!("q_learning epsilon {e} must lie in [0, 1]"));
            }
        }
        if q.reset_every == 0 {
            return fail("q_learning.reset_every must be at least 1".into());
        }
        for entry in self.estimator_list() {
            if entry == EstimatorEntry::Named(Method::Lds) && self.env.name != EnvName::LdsCartPole {
                return fail(format!("the lds estimator needs the lds_cart_pole environment, not {}", self.env.name));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"env": {"name": "frozen_lake"}}"#).unwrap();
        assert_eq!(cfg.seeds, 20);
        assert_eq!(cfg.radii, vec![RadiusSetting::Same(0.0), RadiusSetting::Same(0.1)]);
        assert_eq!(cfg.sample_sizes[0], 1);
        assert_eq!(*cfg.sample_sizes.last().unwrap(), 10_000);
        assert!(cfg.estimator_list().contains(&EstimatorEntry::Named(Method::DensityLocal)));
        assert!(!cfg.estimator_list().contains(&EstimatorEntry::Named(Method::Lds)));
    }

    #[test]
    fn estimators_accept_names_and_custom_side_info() {
        let cfg = ExperimentConfig::from_json(
            r#"{"env": {"name": "taxi"},
                "estimators": ["vanilla", {"label": "tv_0.2", "side_info": {"kind": "distance_tv", "d": 0.2}}],
                "radii": [0.1, {"train": 0.0, "eval": 0.1}]}"#,
        )
        .unwrap();
        let list = cfg.estimator_list();
        assert_eq!(list[0], EstimatorEntry::Named(Method::Vanilla));
        assert_eq!(list[1].label(), "tv_0.2");
        assert_eq!(cfg.radii[1].train(), 0.0);
        assert_eq!(cfg.radii[1].eval(), 0.1);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            r#"{"env": {"name": "frozen_lake"}, "sample_sizes": []}"#,
            r#"{"env": {"name": "frozen_lake"}, "seeds": 0}"#,
            r#"{"env": {"name": "frozen_lake"}, "radii": [1.5]}"#,
            r#"{"env": {"name": "frozen_lake"}, "estimators": ["lds"]}"#,
            r#"{"env": {"name": "frozen_lake"}, "estimators": ["bogus"]}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!(Method::defaults_for(EnvName::CartPole).iter().all(|m| *m != Method::DistanceW1));
    }
}

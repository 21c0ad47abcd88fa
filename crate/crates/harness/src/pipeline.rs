//! The transfer pipeline: sample target data, estimate the target kernel,
//! plan on the estimate-centered set and evaluate on the target-centered set.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ribe_core::datagen::{sample_counts, SamplingPlan, TransitionCounts};
use ribe_core::envs::{build_env, build_lds_cartpole, EnvName, EnvPair, LdsCartPoleSpec};
use ribe_core::error::Error as CoreError;
use ribe_core::estimate::{
    derive_true_side_info, estimate_kernel, value_aware_metric, DeriveOptions, LdsTheta, PriorDefault,
    SideInfo, SideInfoKind,
};
use ribe_core::mdp::{kernel_max_tv, kernel_mean_tv, kernel_row_tv, Policy, Radius, TransitionKernel, UncertaintySet};
use ribe_core::robust::{average_value, robust_policy_evaluation, robust_value_iteration, DEFAULT_MAX_ITERS};
use serde::{Deserialize, Serialize};

use crate::baselines::{overconservative_radii, q_learning};
use crate::config::{EstimatorEntry, ExperimentConfig, Method, Sampling};
use crate::error::{HarnessError, Result};

/// How a configured estimator is run.
#[derive(Debug, Clone)]
pub enum MethodKind {
    Ibe { info: SideInfo, prior: PriorDefault },
    OverConservative,
    QLearning,
}

#[derive(Debug, Clone)]
pub struct PreparedMethod {
    pub label: String,
    pub method: Option<Method>,
    pub kind: MethodKind,
}

impl PreparedMethod {
    pub fn is_ibe(&self) -> bool {
        matches!(self.kind, MethodKind::Ibe { .. })
    }
}

/// The target-optimal robust policy at one evaluation radius and its value.
#[derive(Debug, Clone)]
pub struct Reference {
    pub radius: f64,
    pub value: Vec<f64>,
    pub policy: Policy,
}

/// Everything shared by the cells of one experiment.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: ExperimentConfig,
    pub pair: EnvPair,
    pub methods: Vec<PreparedMethod>,
    pub references: Vec<Reference>,
    /// `tv(P_s, P_t)` per `(s, a)`.
    pub source_tv: Vec<f64>,
    /// `max r − min r`; 1 for rescaled rewards.
    pub reward_range: f64,
}

/// One result cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub env: String,
    pub sampling: String,
    pub estimator: String,
    pub n: u64,
    pub seed: usize,
    pub train_radius: f64,
    pub eval_radius: f64,
    pub rescaled: bool,
    /// State-averaged robust value of the learned policy on the target set.
    pub avg_value: f64,
    /// Largest per-pair TV distance between the planning center and the target.
    pub delta_n: Option<f64>,
    /// Pair-averaged TV distance between the planning center and the target.
    pub mean_tv: Option<f64>,
    /// State-averaged value of the learned policy on its own planning set.
    pub train_value: Option<f64>,
    pub train_error: Option<f64>,
    pub train_bound: Option<f64>,
    /// Sup-norm gap to the target-optimal robust value.
    pub eval_error: f64,
    pub bound_value: Option<f64>,
    pub wallclock_ms: f64,
}

/// Records in configuration order plus the first failure, if any. Records
/// of cells that completed are kept even when others failed.
#[derive(Debug)]
pub struct GridRun {
    pub records: Vec<RunRecord>,
    pub failure: Option<HarnessError>,
}

/// Mixes a base seed and a run index into a dataset seed.
pub fn dataset_seed(base: u64, run: usize) -> u64 {
    let mut z = base ^ (run as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let (raw, lds) = match cfg.env.name {
            EnvName::LdsCartPole => {
                let lds = build_lds_cartpole(&LdsCartPoleSpec::new(cfg.env.seed))?;
                (lds.pair.clone(), Some(lds))
            }
            name => (build_env(name, cfg.env.seed)?, None),
        };
        let pair = if cfg.rescale_rewards { raw.rescaled() } else { raw };
        let rewards = pair.source.rewards();
        let reward_range = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - rewards.iter().copied().fold(f64::INFINITY, f64::min);

        let mut methods = Vec::new();
        for entry in cfg.estimator_list() {
            let label = entry.label();
            let prepared = match entry {
                EstimatorEntry::Custom { side_info, prior, .. } => PreparedMethod {
                    label,
                    method: None,
                    kind: MethodKind::Ibe { info: side_info, prior: prior.unwrap_or(cfg.prior) },
                },
                EstimatorEntry::Named(method) => {
                    let kind = match method {
                        Method::OverConservative => MethodKind::OverConservative,
                        Method::QLearning => MethodKind::QLearning,
                        Method::Vanilla => MethodKind::Ibe { info: SideInfo::None, prior: PriorDefault::Uniform },
                        Method::VanillaSource => {
                            MethodKind::Ibe { info: SideInfo::None, prior: PriorDefault::SourceKernel }
                        }
                        Method::Lds => {
                            let lds = lds.as_ref().ok_or_else(|| {
                                HarnessError::Config("the lds estimator needs the lds_cart_pole environment".into())
                            })?;
                            let info = SideInfo::Lds {
                                psi: lds.psi.clone(),
                                shared_indices: lds.shared_indices.clone(),
                                theta_source: LdsTheta::PerPair(lds.theta_source.clone()),
                            };
                            MethodKind::Ibe { info, prior: cfg.prior }
                        }
                        other => MethodKind::Ibe { info: oracle_side_info(&pair, other)?, prior: cfg.prior },
                    };
                    PreparedMethod { label, method: Some(method), kind }
                }
            };
            methods.push(prepared);
        }

        let mut references: Vec<Reference> = Vec::new();
        for r in &cfg.radii {
            let radius = r.eval();
            if references.iter().any(|x| x.radius == radius) {
                continue;
            }
            let rad = Radius::Scalar(radius);
            let unc = UncertaintySet::new(&pair.target.kernel, &rad)?;
            let plan = robust_value_iteration(&pair.target, &unc, DEFAULT_MAX_ITERS, cfg.planning_tol)?;
            // Evaluated exactly like learned policies, so a learned policy
            // equal to the optimal one has zero gap.
            let value =
                robust_policy_evaluation(&pair.target, &unc, &plan.policy, DEFAULT_MAX_ITERS, cfg.planning_tol)?;
            references.push(Reference { radius, value: value.value.0, policy: plan.policy });
        }
        let source_tv = kernel_row_tv(&pair.source.kernel, &pair.target.kernel)?;
        Ok(Context { cfg: cfg.clone(), pair, methods, references, source_tv, reward_range })
    }

    pub fn reference(&self, radius: f64) -> &Reference {
        self.references.iter().find(|r| r.radius == radius).expect("reference for every eval radius")
    }

    pub fn gamma(&self) -> f64 {
        self.pair.target.gamma
    }

    /// `2δ·range/(1−γ)²`, the training-error bound.
    pub fn train_bound(&self, delta: f64) -> f64 {
        2.0 * delta * self.reward_range / (1.0 - self.gamma()).powi(2)
    }

    /// `4δ·range/(1−γ)²`, the evaluation-error bound.
    pub fn eval_bound(&self, delta: f64) -> f64 {
        4.0 * delta * self.reward_range / (1.0 - self.gamma()).powi(2)
    }

    /// Numerical allowance for the finite value-iteration tolerance when
    /// comparing measured errors with the bounds.
    pub fn bound_slack(&self) -> f64 {
        4.0 * self.cfg.planning_tol / (1.0 - self.gamma())
    }

    pub fn sampling_plan(&self, n: u64, run: usize) -> SamplingPlan {
        let seed = dataset_seed(self.cfg.base_seed, run);
        match self.cfg.sampling {
            Sampling::Balanced => SamplingPlan::balanced(n, seed),
            Sampling::Uniform => SamplingPlan::uniform(n, seed),
        }
    }

    /// Target samples in a cell, for budget parity with Q-learning.
    pub fn sample_budget(&self, n: u64) -> u64 {
        match self.cfg.sampling {
            Sampling::Balanced => n * (self.pair.num_states() * self.pair.num_actions()) as u64,
            Sampling::Uniform => n,
        }
    }

    pub fn counts(&self, n: u64, run: usize) -> TransitionCounts {
        sample_counts(&self.pair.target.kernel, &self.sampling_plan(n, run))
    }

    /// Estimates the target kernel for one IBE method.
    pub fn estimate(&self, method: &PreparedMethod, counts: &TransitionCounts) -> Result<TransitionKernel> {
        match &method.kind {
            MethodKind::Ibe { info, prior } => {
                Ok(estimate_kernel(counts, &self.pair.source.kernel, info, *prior)?.kernel)
            }
            _ => Err(HarnessError::Config(format!("{} does not estimate a kernel", method.label))),
        }
    }

    /// Plans on `center` with radius `train`, evaluates on the target set of
    /// radius `eval`. Returns (planning value, policy, target value).
    fn plan_and_evaluate(
        &self,
        center: &TransitionKernel,
        train: &Radius,
        eval: f64,
    ) -> Result<(Vec<f64>, Policy, Vec<f64>)> {
        let tol = self.cfg.planning_tol;
        let mdp = self.pair.target.with_kernel(center.clone())?;
        let unc = UncertaintySet::new(center, train)?;
        let plan = robust_value_iteration(&mdp, &unc, DEFAULT_MAX_ITERS, tol)?;
        let value = self.evaluate(&plan.policy, eval)?;
        Ok((plan.value.0, plan.policy, value))
    }

    /// Robust value of `policy` on the target-centered set of radius `eval`.
    pub fn evaluate(&self, policy: &Policy, eval: f64) -> Result<Vec<f64>> {
        let rad = Radius::Scalar(eval);
        let unc = UncertaintySet::new(&self.pair.target.kernel, &rad)?;
        let res = robust_policy_evaluation(&self.pair.target, &unc, policy, DEFAULT_MAX_ITERS, self.cfg.planning_tol)?;
        Ok(res.value.0)
    }

    fn base_record(&self, method: &PreparedMethod, n: u64, run: usize, train: f64, eval: f64) -> RunRecord {
        RunRecord {
            env: self.cfg.env.name.to_string(),
            sampling: self.cfg.sampling.as_str().to_string(),
            estimator: method.label.clone(),
            n,
            seed: run,
            train_radius: train,
            eval_radius: eval,
            rescaled: self.cfg.rescale_rewards,
            avg_value: f64::NAN,
            delta_n: None,
            mean_tv: None,
            train_value: None,
            train_error: None,
            train_bound: None,
            eval_error: f64::NAN,
            bound_value: None,
            wallclock_ms: 0.0,
        }
    }

    /// All radius rows of one (method, n, run) cell.
    pub fn run_cell(
        &self,
        method: &PreparedMethod,
        n: u64,
        run: usize,
        counts: &TransitionCounts,
    ) -> Result<Vec<RunRecord>> {
        let started = Instant::now();
        let mut rows = Vec::with_capacity(self.cfg.radii.len());
        match &method.kind {
            MethodKind::Ibe { .. } => {
                let est = self.estimate(method, counts)?;
                let delta = kernel_max_tv(&est, &self.pair.target.kernel)?;
                let mean_tv = kernel_mean_tv(&est, &self.pair.target.kernel)?;
                let shared_ms = started.elapsed().as_secs_f64() * 1e3;
                for r in &self.cfg.radii {
                    let t0 = Instant::now();
                    let (train, eval) = (r.train(), r.eval());
                    let (plan_value, _, value) = self.plan_and_evaluate(&est, &Radius::Scalar(train), eval)?;
                    let reference = self.reference(eval);
                    let mut rec = self.base_record(method, n, run, train, eval);
                    rec.avg_value = average_value(&value);
                    rec.delta_n = Some(delta);
                    rec.mean_tv = Some(mean_tv);
                    rec.train_value = Some(average_value(&plan_value));
                    rec.eval_error = sup_gap(&value, &reference.value);
                    if train == eval {
                        rec.train_error = Some(sup_gap(&plan_value, &reference.value));
                        rec.train_bound = Some(self.train_bound(delta));
                        rec.bound_value = Some(self.eval_bound(delta));
                    }
                    rec.wallclock_ms = shared_ms + t0.elapsed().as_secs_f64() * 1e3;
                    rows.push(rec);
                }
            }
            MethodKind::OverConservative => {
                let center = &self.pair.source.kernel;
                let delta = self.source_tv.iter().copied().fold(0.0, f64::max);
                let mean_tv = self.source_tv.iter().sum::<f64>() / self.source_tv.len() as f64;
                for r in &self.cfg.radii {
                    let t0 = Instant::now();
                    let (train, eval) = (r.train(), r.eval());
                    let radii = Radius::PerPair(overconservative_radii(&self.source_tv, train));
                    let (plan_value, _, value) = self.plan_and_evaluate(center, &radii, eval)?;
                    let mut rec = self.base_record(method, n, run, train, eval);
                    rec.avg_value = average_value(&value);
                    rec.delta_n = Some(delta);
                    rec.mean_tv = Some(mean_tv);
                    rec.train_value = Some(average_value(&plan_value));
                    rec.eval_error = sup_gap(&value, &self.reference(eval).value);
                    rec.wallclock_ms = t0.elapsed().as_secs_f64() * 1e3;
                    rows.push(rec);
                }
            }
            MethodKind::QLearning => {
                let mut rng = ChaCha8Rng::seed_from_u64(dataset_seed(self.cfg.base_seed, run));
                rng.set_stream(n.wrapping_add(1));
                let policy = q_learning(&self.pair.target, self.sample_budget(n), &self.cfg.q_learning, &mut rng);
                let learn_ms = started.elapsed().as_secs_f64() * 1e3;
                for r in &self.cfg.radii {
                    let t0 = Instant::now();
                    let (train, eval) = (r.train(), r.eval());
                    let value = self.evaluate(&policy, eval)?;
                    let mut rec = self.base_record(method, n, run, train, eval);
                    rec.avg_value = average_value(&value);
                    rec.eval_error = sup_gap(&value, &self.reference(eval).value);
                    rec.wallclock_ms = learn_ms + t0.elapsed().as_secs_f64() * 1e3;
                    rows.push(rec);
                }
            }
        }
        Ok(rows)
    }

    /// Every (method, n, run) cell. Cells sharing (n, run) share one dataset.
    pub fn run_grid(&self) -> GridRun {
        let sizes = &self.cfg.sample_sizes;
        let tasks: Vec<(usize, usize)> =
            (0..sizes.len()).flat_map(|i| (0..self.cfg.seeds).map(move |run| (i, run))).collect();
        let results: Vec<Vec<(usize, usize, usize, Result<Vec<RunRecord>>)>> = tasks
            .par_iter()
            .map(|&(i, run)| {
                let n = sizes[i];
                let counts = self.counts(n, run);
                self.methods
                    .iter()
                    .enumerate()
                    .map(|(m, method)| {
                        let res = self.run_cell(method, n, run, &counts).map_err(|e| cell_error(method, n, run, e));
                        (m, i, run, res)
                    })
                    .collect()
            })
            .collect();
        let mut flat: Vec<_> = results.into_iter().flatten().collect();
        flat.sort_by_key(|(m, i, run, _)| (*m, *i, *run));
        let mut records = Vec::new();
        let mut failure = None;
        for (_, _, _, res) in flat {
            match res {
                Ok(rows) => records.extend(rows),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        GridRun { records, failure }
    }
}

fn cell_error(method: &PreparedMethod, n: u64, seed: usize, e: HarnessError) -> HarnessError {
    match e {
        HarnessError::Core(source) => HarnessError::Cell { estimator: method.label.clone(), n, seed, source },
        other => other,
    }
}

/// Side information with oracle constants for a named IBE method.
pub fn oracle_side_info(pair: &EnvPair, method: Method) -> Result<SideInfo> {
    let kind = match method {
        Method::DistanceTv => SideInfoKind::DistanceTv,
        Method::DistanceW1 => SideInfoKind::DistanceW1,
        Method::Moment => SideInfoKind::Moment,
        Method::DensityGlobal => SideInfoKind::DensityGlobal,
        Method::DensityLocal => SideInfoKind::DensityLocal,
        Method::ValueAware => SideInfoKind::ValueAware,
        Method::Vanilla | Method::VanillaSource => SideInfoKind::None,
        other => return Err(HarnessError::Config(format!("{other} has no oracle side information"))),
    };
    let mut opts = DeriveOptions::default();
    match kind {
        SideInfoKind::DistanceW1 => opts.cost = Some(pair.ground_cost()),
        SideInfoKind::ValueAware => opts.metric = Some(value_aware_metric(&pair.source)),
        _ => {}
    }
    let (source, target) = (&pair.source.kernel, &pair.target.kernel);
    match derive_true_side_info(source, target, kind, &opts) {
        Err(CoreError::AtPair { source: inner, .. })
            if matches!(*inner, CoreError::SupportMismatch { .. }) =>
        {
            opts.smoothing = true;
            Ok(derive_true_side_info(source, target, kind, &opts)?)
        }
        other => Ok(other?),
    }
}

/// Runs the configured grid. With rescaled rewards, any cell whose measured
/// training or evaluation error exceeds its bound turns the run into a
/// correctness failure; all records are still returned.
pub fn run_transfer_grid(cfg: &ExperimentConfig) -> Result<GridRun> {
    let ctx = Context::new(cfg)?;
    let mut run = ctx.run_grid();
    if cfg.rescale_rewards && run.failure.is_none() {
        let violations = bound_violations(&run.records, ctx.bound_slack());
        if let Some(first) = violations.first() {
            run.failure = Some(HarnessError::BoundViolated { count: violations.len(), first: first.clone() });
        }
    }
    Ok(run)
}

/// Descriptions of every record whose errors exceed their bounds.
pub fn bound_violations(records: &[RunRecord], slack: f64) -> Vec<String> {
    let mut out = Vec::new();
    for r in records {
        let checks = [("train", r.train_error, r.train_bound), ("eval", Some(r.eval_error), r.bound_value)];
        for (label, err, bound) in checks {
            if let (Some(e), Some(b)) = (err, bound) {
                if !(e <= b + slack) {
                    out.push(format!(
                        "{label} error {e} > bound {b} ({}, n={}, seed={}, R={})",
                        r.estimator, r.n, r.seed, r.eval_radius
                    ));
                }
            }
        }
    }
    out
}

pub fn write_records<W: std::io::Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

//! Constrained maximum-likelihood estimation of target transition rows from
//! counts plus side information tying them to the source kernel.

pub mod density;
pub mod distance;
pub mod fw;
pub mod instances;
pub mod lds;
pub mod moment;
pub mod oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::TransitionCounts;
use crate::error::{Error, Result};
use crate::mdp::{tv_unchecked, w1_distance, CostMatrix, TabularMDP, TransitionKernel};
use crate::robust::value_iteration;

pub use density::estimate_density;
pub use distance::{estimate_distance_tv, estimate_distance_w1, estimate_value_aware};
pub use lds::estimate_lds;
pub use moment::estimate_moment;

/// Mixing weight of the uniform distribution used to smooth source rows.
pub const SMOOTHING_WEIGHT: f64 = 1e-6;

/// A fitted row with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RowEstimate {
    pub q: Vec<f64>,
    pub log_likelihood: f64,
    /// Distance to the constraint boundary; negative means violated.
    pub slack: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RowEstimate {
    pub(crate) fn new(
        counts: &[u64],
        q: Vec<f64>,
        slack: f64,
        iterations: usize,
        converged: bool,
    ) -> Self {
        RowEstimate { log_likelihood: log_likelihood(counts, &q), q, slack, iterations, converged }
    }
}

/// `Σ N_j·log q_j` with `0·log 0 = 0`.
pub fn log_likelihood(counts: &[u64], q: &[f64]) -> f64 {
    counts.iter().zip(q).filter(|(&c, _)| c > 0).map(|(&c, &p)| c as f64 * p.ln()).sum()
}

pub(crate) fn check_counts(counts: &[u64]) -> Result<()> {
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyCounts);
    }
    Ok(())
}

/// Empirical frequencies `N_j / n`.
pub fn vanilla_mle(counts: &[u64]) -> Result<Vec<f64>> {
    check_counts(counts)?;
    let n: u64 = counts.iter().sum();
    Ok(counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// A constant that is either global or given per `(s, a)` in `(s, a)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerPair {
    Scalar(f64),
    PerPair(Vec<f64>),
}

impl PerPair {
    pub fn at(&self, pair: usize) -> f64 {
        match self {
            PerPair::Scalar(v) => *v,
            PerPair::PerPair(v) => v[pair],
        }
    }

    fn check_len(&self, pairs: usize) -> Result<()> {
        match self {
            PerPair::PerPair(v) if v.len() != pairs => {
                Err(Error::DimensionMismatch { expected: pairs, found: v.len() })
            }
            _ => Ok(()),
        }
    }
}

/// Moment tolerances: one value for all features, one per feature, or one
/// vector per `(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MomentTolerance {
    Scalar(f64),
    PerFeature(Vec<f64>),
    PerPair(Vec<Vec<f64>>),
}

impl MomentTolerance {
    fn at(&self, pair: usize, features: usize) -> Vec<f64> {
        match self {
            MomentTolerance::Scalar(b) => vec![*b; features],
            MomentTolerance::PerFeature(b) => b.clone(),
            MomentTolerance::PerPair(b) => b[pair].clone(),
        }
    }
}

/// Density-ratio caps: one ratio for everything, one per `(s, a)`, or one per
/// `(s, a, s')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityCaps {
    Scalar(f64),
    PerPair(Vec<f64>),
    PerEntry(Vec<Vec<f64>>),
}

impl DensityCaps {
    fn at(&self, pair: usize, states: usize) -> Vec<f64> {
        match self {
            DensityCaps::Scalar(b) => vec![*b; states],
            DensityCaps::PerPair(b) => vec![b[pair]; states],
            DensityCaps::PerEntry(b) => b[pair].clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    Global,
    Local,
}

/// Source parameters for the softmax model: one vector shared by all pairs
/// or one per `(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LdsTheta {
    Shared(Vec<f64>),
    PerPair(Vec<Vec<f64>>),
}

impl LdsTheta {
    pub fn at(&self, pair: usize) -> &[f64] {
        match self {
            LdsTheta::Shared(t) => t,
            LdsTheta::PerPair(t) => &t[pair],
        }
    }
}

/// Side information relating target rows to source rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SideInfo {
    None,
    DistanceTv {
        d: PerPair,
    },
    DistanceW1 {
        d: PerPair,
        cost: CostMatrix,
    },
    Moment {
        /// One row per feature, one column per next state.
        features: Vec<Vec<f64>>,
        beta: MomentTolerance,
    },
    DensityRatio {
        caps: DensityCaps,
        mode: DensityMode,
        #[serde(default)]
        smoothing: bool,
    },
    Lds {
        /// One row per parameter, one column per next state.
        psi: Vec<Vec<f64>>,
        shared_indices: Vec<usize>,
        theta_source: LdsTheta,
    },
    ValueAware {
        beta1: PerPair,
        metric: CostMatrix,
    },
}

impl SideInfo {
    fn validate(&self, states: usize, actions: usize) -> Result<()> {
        let pairs = states * actions;
        match self {
            SideInfo::None => Ok(()),
            SideInfo::DistanceTv { d } => {
                d.check_len(pairs)?;
                match d {
                    PerPair::Scalar(r) => check_unit(*r),
                    PerPair::PerPair(rs) => rs.iter().try_for_each(|&r| check_unit(r)),
                }
            }
            SideInfo::DistanceW1 { d, cost } | SideInfo::ValueAware { beta1: d, metric: cost } => {
                d.check_len(pairs)?;
                if cost.len() != states {
                    return Err(Error::DimensionMismatch { expected: states, found: cost.len() });
                }
                Ok(())
            }
            SideInfo::Moment { features, beta } => {
                if let MomentTolerance::PerPair(b) = beta {
                    if b.len() != pairs {
                        return Err(Error::DimensionMismatch { expected: pairs, found: b.len() });
                    }
                }
                match features.iter().find(|r| r.len() != states) {
                    Some(r) => Err(Error::DimensionMismatch { expected: states, found: r.len() }),
                    None => Ok(()),
                }
            }
            SideInfo::DensityRatio { caps, .. } => match caps {
                DensityCaps::PerPair(b) if b.len() != pairs => {
                    Err(Error::DimensionMismatch { expected: pairs, found: b.len() })
                }
                DensityCaps::PerEntry(b) if b.len() != pairs => {
                    Err(Error::DimensionMismatch { expected: pairs, found: b.len() })
                }
                _ => Ok(()),
            },
            SideInfo::Lds { psi, shared_indices, theta_source } => {
                if let Some(&k) = shared_indices.iter().find(|&&k| k >= psi.len()) {
                    return Err(Error::InvalidSideInfo(format!("shared index {k} out of range")));
                }
                if let LdsTheta::PerPair(t) = theta_source {
                    if t.len() != pairs {
                        return Err(Error::DimensionMismatch { expected: pairs, found: t.len() });
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_unit(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidRadius(r))
    }
}

/// Fallback row for pairs without samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorDefault {
    SourceKernel,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub s: usize,
    pub a: usize,
    pub n: u64,
    pub log_likelihood: f64,
    pub slack: f64,
    pub iterations: usize,
    pub fallback: bool,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub kernel: TransitionKernel,
    pub diagnostics: Vec<RowDiagnostics>,
    /// Fitted softmax parameters per `(s, a)`, for the LDS estimator.
    pub theta: Option<Vec<Vec<f64>>>,
}

impl EstimateReport {
    /// One CSV line per `(s, a)`: `s,a,N,loglik,slack,iters,fallback`.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("s,a,N,loglik,slack,iters,fallback\n");
        for d in &self.diagnostics {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                d.s, d.a, d.n, d.log_likelihood, d.slack, d.iterations, d.fallback
            ));
        }
        out
    }
}

/// Mixes every row with the uniform distribution at [`SMOOTHING_WEIGHT`].
pub fn smooth_kernel(kernel: &TransitionKernel) -> TransitionKernel {
    let s = kernel.num_states() as f64;
    let data = kernel
        .as_flat()
        .iter()
        .map(|p| (1.0 - SMOOTHING_WEIGHT) * p + SMOOTHING_WEIGHT / s)
        .collect();
    TransitionKernel::from_flat(kernel.num_states(), kernel.num_actions(), data)
        .expect("mixture of simplex points")
}

fn estimate_row(
    counts: &[u64],
    source: &[f64],
    info: &SideInfo,
    pair: usize,
) -> Result<(RowEstimate, Option<Vec<f64>>)> {
    let states = counts.len();
    let plain = |r: RowEstimate| Ok((r, None));
    match info {
        SideInfo::None => {
            let q = vanilla_mle(counts)?;
            plain(RowEstimate::new(counts, q, 0.0, 0, true))
        }
        SideInfo::DistanceTv { d } => plain(estimate_distance_tv(counts, source, d.at(pair))?),
        SideInfo::DistanceW1 { d, cost } => {
            plain(estimate_distance_w1(counts, source, cost, d.at(pair))?)
        }
        SideInfo::ValueAware { beta1, metric } => {
            plain(estimate_value_aware(counts, source, metric, beta1.at(pair))?)
        }
        SideInfo::Moment { features, beta } => {
            let mu = moment::moments(features, source);
            let b = beta.at(pair, features.len());
            plain(moment::estimate_moment_from(counts, features, &mu, &b, Some(source))?)
        }
        SideInfo::DensityRatio { caps, .. } => {
            plain(estimate_density(counts, source, &caps.at(pair, states))?)
        }
        SideInfo::Lds { psi, shared_indices, theta_source } => {
            let (r, theta) = estimate_lds(counts, psi, theta_source.at(pair), shared_indices)?;
            Ok((r, Some(theta)))
        }
    }
}

/// Estimates every row of the target kernel. Pairs without samples get the
/// prior row (the uniform row for the LDS model).
pub fn estimate_kernel(
    counts: &TransitionCounts,
    source: &TransitionKernel,
    info: &SideInfo,
    prior: PriorDefault,
) -> Result<EstimateReport> {
    let (states, actions) = (source.num_states(), source.num_actions());
    if counts.num_states() != states || counts.num_actions() != actions {
        return Err(Error::ShapeMismatch(format!(
            "counts are {}x{}, source is {states}x{actions}",
            counts.num_states(),
            counts.num_actions()
        )));
    }
    info.validate(states, actions)?;
    let smoothed;
    let source = match info {
        SideInfo::DensityRatio { smoothing: true, .. } => {
            smoothed = smooth_kernel(source);
            &smoothed
        }
        _ => source,
    };
    let uniform = vec![1.0 / states as f64; states];
    let rows: Vec<(Vec<f64>, RowDiagnostics, Option<Vec<f64>>)> = (0..states * actions)
        .into_par_iter()
        .map(|pair| {
            let (s, a) = (pair / actions, pair % actions);
            let row_counts = counts.row(s, a);
            let n = counts.total(s, a);
            if n == 0 {
                let fallback = match (info, prior) {
                    (SideInfo::Lds { .. }, _) | (_, PriorDefault::Uniform) => uniform.clone(),
                    (_, PriorDefault::SourceKernel) => source.row(s, a).to_vec(),
                };
                let diag = RowDiagnostics {
                    s,
                    a,
                    n,
                    log_likelihood: 0.0,
                    slack: 0.0,
                    iterations: 0,
                    fallback: true,
                    converged: true,
                };
                return Ok((fallback, diag, None));
            }
            let (r, theta) =
                estimate_row(row_counts, source.row(s, a), info, pair).map_err(|e| e.at(s, a))?;
            let diag = RowDiagnostics {
                s,
                a,
                n,
                log_likelihood: r.log_likelihood,
                slack: r.slack,
                iterations: r.iterations,
                fallback: false,
                converged: r.converged,
            };
            Ok((r.q, diag, theta))
        })
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(states * actions * states);
    let mut diagnostics = Vec::with_capacity(rows.len());
    let mut thetas = Vec::new();
    let is_lds = matches!(info, SideInfo::Lds { .. });
    for (pair, (q, diag, theta)) in rows.into_iter().enumerate() {
        data.extend(q);
        diagnostics.push(diag);
        if is_lds {
            let source_theta = match info {
                SideInfo::Lds { theta_source, .. } => theta_source.at(pair).to_vec(),
                _ => unreachable!(),
            };
            thetas.push(theta.unwrap_or(source_theta));
        }
    }
    let kernel = TransitionKernel::from_flat(states, actions, data)?;
    Ok(EstimateReport { kernel, diagnostics, theta: is_lds.then_some(thetas) })
}

/// Which oracle side information to derive from a known source/target pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideInfoKind {
    None,
    DistanceTv,
    DistanceW1,
    Moment,
    DensityGlobal,
    DensityLocal,
    ValueAware,
}

/// Extra inputs for [`derive_true_side_info`].
#[derive(Debug, Clone, Default)]
pub struct DeriveOptions {
    /// Ground cost for the W1 variant.
    pub cost: Option<CostMatrix>,
    /// Moment features (rows); defaults to `(x, x²)` of the normalized index.
    pub features: Option<Vec<Vec<f64>>>,
    /// Pseudometric for the value-aware variant.
    pub metric: Option<CostMatrix>,
    /// Smooth source rows before forming density caps.
    pub smoothing: bool,
}

/// Side information with every constant set to its true value for the pair.
pub fn derive_true_side_info(
    source: &TransitionKernel,
    target: &TransitionKernel,
    kind: SideInfoKind,
    opts: &DeriveOptions,
) -> Result<SideInfo> {
    if !source.same_shape(target) {
        return Err(Error::ShapeMismatch("source and target kernels differ in shape".into()));
    }
    let pairs = || source.rows().zip(target.rows());
    let info = match kind {
        SideInfoKind::None => SideInfo::None,
        SideInfoKind::DistanceTv => SideInfo::DistanceTv {
            d: PerPair::PerPair(pairs().map(|(p, q)| tv_unchecked(p, q).min(1.0)).collect()),
        },
        SideInfoKind::DistanceW1 => {
            let cost = opts
                .cost
                .clone()
                .ok_or_else(|| Error::InvalidSideInfo("W1 side information needs a cost".into()))?;
            let d = pairs().map(|(p, q)| w1_distance(p, q, &cost)).collect::<Result<_>>()?;
            SideInfo::DistanceW1 { d: PerPair::PerPair(d), cost }
        }
        SideInfoKind::ValueAware => {
            let metric = opts.metric.clone().ok_or_else(|| {
                Error::InvalidSideInfo("value-aware side information needs a metric".into())
            })?;
            let d = pairs().map(|(p, q)| w1_distance(p, q, &metric)).collect::<Result<_>>()?;
            SideInfo::ValueAware { beta1: PerPair::PerPair(d), metric }
        }
        SideInfoKind::Moment => {
            let features =
                opts.features.clone().unwrap_or_else(|| moment::default_features(source.num_states()));
            let beta = pairs()
                .map(|(p, q)| {
                    let (mp, mq) = (moment::moments(&features, p), moment::moments(&features, q));
                    mp.iter().zip(&mq).map(|(a, b)| (a - b).abs()).collect()
                })
                .collect();
            SideInfo::Moment { features, beta: MomentTolerance::PerPair(beta) }
        }
        SideInfoKind::DensityGlobal | SideInfoKind::DensityLocal => {
            let smoothed;
            let base = if opts.smoothing {
                smoothed = smooth_kernel(source);
                &smoothed
            } else {
                source
            };
            let actions = source.num_actions();
            let mut ratios = Vec::with_capacity(source.num_states() * actions);
            for (pair, (p, q)) in base.rows().zip(target.rows()).enumerate() {
                let mut row = Vec::with_capacity(p.len());
                for (next, (&ps, &pt)) in p.iter().zip(q).enumerate() {
                    if ps == 0.0 {
                        if pt > 0.0 {
                            return Err(Error::SupportMismatch { next }
                                .at(pair / actions, pair % actions));
                        }
                        row.push(0.0);
                    } else {
                        row.push(pt / ps);
                    }
                }
                ratios.push(row);
            }
            if kind == SideInfoKind::DensityGlobal {
                SideInfo::DensityRatio {
                    caps: DensityCaps::PerPair(
                        ratios.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect(),
                    ),
                    mode: DensityMode::Global,
                    smoothing: opts.smoothing,
                }
            } else {
                SideInfo::DensityRatio {
                    caps: DensityCaps::PerEntry(
                        ratios.iter().map(|r| r.iter().map(|x| x + 1.0).collect()).collect(),
                    ),
                    mode: DensityMode::Local,
                    smoothing: opts.smoothing,
                }
            }
        }
    };
    Ok(info)
}

/// The pseudometric `|V(s) − V(s')|` built from the optimal non-robust value
/// of the source MDP.
pub fn value_aware_metric(source: &TabularMDP) -> CostMatrix {
    let plan = value_iteration(source, crate::robust::DEFAULT_MAX_ITERS, crate::robust::DEFAULT_TOL);
    CostMatrix::from_positions(&plan.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_kernels() -> (TransitionKernel, TransitionKernel) {
        let s = TransitionKernel::from_rows(vec![vec![vec![0.5, 0.5]], vec![vec![0.2, 0.8]]])
            .unwrap();
        let t = TransitionKernel::from_rows(vec![vec![vec![0.75, 0.25]], vec![vec![0.2, 0.8]]])
            .unwrap();
        (s, t)
    }

    #[test]
    fn vanilla_examples() {
        assert_eq!(vanilla_mle(&[3, 1]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(vanilla_mle(&[0, 0, 5]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(vanilla_mle(&[1, 1, 1, 1]).unwrap(), vec![0.25; 4]);
        assert_eq!(vanilla_mle(&[0, 0]), Err(Error::EmptyCounts));
    }

    #[test]
    fn empty_counts_fall_back_to_prior() {
        let (s, _) = pair_kernels();
        let counts = TransitionCounts::zeros(2, 1);
        let r = estimate_kernel(&counts, &s, &SideInfo::None, PriorDefault::SourceKernel).unwrap();
        assert_eq!(r.kernel, s);
        assert!(r.diagnostics.iter().all(|d| d.fallback));
        let r = estimate_kernel(&counts, &s, &SideInfo::None, PriorDefault::Uniform).unwrap();
        assert_eq!(r.kernel, TransitionKernel::uniform(2, 1));
    }

    #[test]
    fn identical_kernels_give_trivial_side_info() {
        let (s, _) = pair_kernels();
        let opts = DeriveOptions::default();
        match derive_true_side_info(&s, &s, SideInfoKind::DistanceTv, &opts).unwrap() {
            SideInfo::DistanceTv { d: PerPair::PerPair(d) } => assert!(d.iter().all(|&x| x == 0.0)),
            other => panic!("{other:?}"),
        }
        match derive_true_side_info(&s, &s, SideInfoKind::Moment, &opts).unwrap() {
            SideInfo::Moment { beta: MomentTolerance::PerPair(b), .. } => {
                assert!(b.iter().flatten().all(|&x| x == 0.0))
            }
            other => panic!("{other:?}"),
        }
        match derive_true_side_info(&s, &s, SideInfoKind::DensityGlobal, &opts).unwrap() {
            SideInfo::DensityRatio { caps: DensityCaps::PerPair(b), .. } => {
                assert!(b.iter().all(|&x| x == 1.0))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn half_half_versus_three_quarters() {
        let (s, t) = pair_kernels();
        let opts = DeriveOptions::default();
        let SideInfo::DistanceTv { d } =
            derive_true_side_info(&s, &t, SideInfoKind::DistanceTv, &opts).unwrap()
        else {
            panic!()
        };
        assert_eq!(d.at(0), 0.25);
        let SideInfo::DensityRatio { caps, .. } =
            derive_true_side_info(&s, &t, SideInfoKind::DensityGlobal, &opts).unwrap()
        else {
            panic!()
        };
        assert_eq!(caps, DensityCaps::PerPair(vec![1.5, 1.0]));
        let SideInfo::DensityRatio { caps: DensityCaps::PerEntry(local), .. } =
            derive_true_side_info(&s, &t, SideInfoKind::DensityLocal, &opts).unwrap()
        else {
            panic!()
        };
        assert_eq!(local[0], vec![2.5, 1.5]);
    }

    #[test]
    fn support_mismatch_unless_smoothed() {
        let s = TransitionKernel::from_rows(vec![vec![vec![1.0, 0.0]], vec![vec![0.5, 0.5]]])
            .unwrap();
        let t = TransitionKernel::from_rows(vec![vec![vec![0.9, 0.1]], vec![vec![0.5, 0.5]]])
            .unwrap();
        let err = derive_true_side_info(&s, &t, SideInfoKind::DensityLocal, &DeriveOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::AtPair { state: 0, action: 0, .. }));
        let opts = DeriveOptions { smoothing: true, ..Default::default() };
        let info = derive_true_side_info(&s, &t, SideInfoKind::DensityLocal, &opts).unwrap();
        let counts = TransitionCounts::from_sparse(2, 1, [(0, 0, 1, 3), (0, 0, 0, 1)]).unwrap();
        let r = estimate_kernel(&counts, &s, &info, PriorDefault::SourceKernel).unwrap();
        assert!(r.diagnostics.iter().all(|d| d.slack >= -1e-6));
        assert!(r.kernel.row(0, 0)[1] <= 0.1 + 1e-5);
    }

    #[test]
    fn side_info_json_has_kind_tag() {
        let info = SideInfo::DistanceTv { d: PerPair::Scalar(0.1) };
        let text = serde_json::to_string(&info).unwrap();
        assert_eq!(text, r#"{"kind":"distance_tv","d":0.1}"#);
        let back: SideInfo = serde_json::from_str(&text).unwrap();
        assert_eq!(back, info);
        let none: SideInfo = serde_json::from_str(r#"{"kind":"none"}"#).unwrap();
        assert_eq!(none, SideInfo::None);
    }

    #[test]
    fn diagnostics_csv_has_one_line_per_pair() {
        let (s, t) = pair_kernels();
        let counts = crate::datagen::sample_counts(&t, &crate::datagen::SamplingPlan::balanced(5, 1));
        let info = derive_true_side_info(&s, &t, SideInfoKind::DistanceTv, &DeriveOptions::default())
            .unwrap();
        let r = estimate_kernel(&counts, &s, &info, PriorDefault::SourceKernel).unwrap();
        let csv = r.diagnostics_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("s,a,N,loglik,slack,iters,fallback\n0,0,5,"));
    }
}

//! Likelihood maximization under a box on feature moments,
//! `|A q − μ| ≤ β` elementwise.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};

use super::fw::{self, FwOptions, LinearOracle, LogLikelihood};
use super::{check_counts, vanilla_mle, RowEstimate};
use crate::error::{Error, Result};
use crate::lp;

/// Default moment features `(x, x²)` with `x = s/(S − 1)`, one row per
/// feature.
pub fn default_features(states: usize) -> Vec<Vec<f64>> {
    let x: Vec<f64> = (0..states)
        .map(|s| if states > 1 { s as f64 / (states - 1) as f64 } else { 0.0 })
        .collect();
    vec![x.clone(), x.iter().map(|v| v * v).collect()]
}

/// `A·q` for a feature matrix given as rows.
pub fn moments(features: &[Vec<f64>], q: &[f64]) -> Vec<f64> {
    features.iter().map(|row| row.iter().zip(q).map(|(a, b)| a * b).sum()).collect()
}

/// The moment polytope `{q ∈ Δ : lo ≤ A q ≤ hi}`.
pub struct MomentBox<'a> {
    features: &'a [Vec<f64>],
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> MomentBox<'a> {
    pub fn new(features: &'a [Vec<f64>], mu: &[f64], beta: &[f64]) -> Self {
        MomentBox {
            features,
            lo: mu.iter().zip(beta).map(|(m, b)| m - b).collect(),
            hi: mu.iter().zip(beta).map(|(m, b)| m + b).collect(),
        }
    }

    /// Smallest margin to the box; negative when violated.
    pub fn slack(&self, q: &[f64]) -> f64 {
        moments(self.features, q)
            .iter()
            .enumerate()
            .map(|(k, m)| (m - self.lo[k]).min(self.hi[k] - m))
            .fold(f64::INFINITY, f64::min)
    }

    fn problem(&self, objective: &[f64]) -> (Problem, Vec<Variable>) {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let q: Vec<Variable> = objective.iter().map(|&c| problem.add_var(c, (0.0, 1.0))).collect();
        let mut mass = LinearExpr::empty();
        q.iter().for_each(|&v| mass.add(v, 1.0));
        problem.add_constraint(mass, ComparisonOp::Eq, 1.0);
        for (k, row) in self.features.iter().enumerate() {
            let mut lo = LinearExpr::empty();
            let mut hi = LinearExpr::empty();
            for (&v, &a) in q.iter().zip(row) {
                if a != 0.0 {
                    lo.add(v, a);
                    hi.add(v, a);
                }
            }
            problem.add_constraint(lo, ComparisonOp::Ge, self.lo[k]);
            problem.add_constraint(hi, ComparisonOp::Le, self.hi[k]);
        }
        (problem, q)
    }

    /// A feasible point with the largest possible smallest coordinate.
    pub fn interior_point(&self) -> Result<(Vec<f64>, f64)> {
        let states = self.features.first().map_or(0, |r| r.len());
        self.inner_point(&vec![true; states])
    }

    /// A feasible point maximizing the smallest mass on `observed`
    /// coordinates, with that smallest mass.
    fn inner_point(&self, observed: &[bool]) -> Result<(Vec<f64>, f64)> {
        let (mut problem, q) = self.problem(&vec![0.0; observed.len()]);
        let tau = problem.add_var(1.0, (0.0, 1.0));
        for (&v, _) in q.iter().zip(observed).filter(|(_, &o)| o) {
            let mut e = LinearExpr::empty();
            e.add(v, 1.0);
            e.add(tau, -1.0);
            problem.add_constraint(e, ComparisonOp::Ge, 0.0);
        }
        let sol = lp::solve(&problem).map_err(|e| match e {
            Error::LpInfeasible => {
                Error::InfeasibleConstraint("moment box does not meet the simplex".into())
            }
            other => other,
        })?;
        Ok((clean(q.iter().map(|&v| sol.var_value(v)).collect()), sol.var_value(tau)))
    }
}

fn clean(mut q: Vec<f64>) -> Vec<f64> {
    q.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= s);
    q
}

impl LinearOracle for MomentBox<'_> {
    fn argmax(&mut self, g: &[f64]) -> Result<Vec<f64>> {
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let objective: Vec<f64> =
            g.iter().map(|v| if scale > 0.0 { v / scale } else { 0.0 }).collect();
        let (problem, q) = self.problem(&objective);
        let sol = lp::solve(&problem)?;
        Ok(clean(q.iter().map(|&v| sol.var_value(v)).collect()))
    }
}

/// Largest `t ∈ [0, 1]` keeping `A(y + t(m − y))` inside the box, given `y`
/// feasible.
fn step_to_boundary(set: &MomentBox<'_>, y: &[f64], m: &[f64]) -> f64 {
    let ay = moments(set.features, y);
    let am = moments(set.features, m);
    let mut t = 1.0f64;
    for k in 0..ay.len() {
        let delta = am[k] - ay[k];
        if delta > 0.0 {
            t = t.min(((set.hi[k] - ay[k]) / delta).max(0.0));
        } else if delta < 0.0 {
            t = t.min(((set.lo[k] - ay[k]) / delta).max(0.0));
        }
    }
    t
}

/// Likelihood maximizer over `{q ∈ Δ : |A q − mu_source| ≤ beta}`.
pub fn estimate_moment(
    counts: &[u64],
    features: &[Vec<f64>],
    mu_source: &[f64],
    beta: &[f64],
) -> Result<RowEstimate> {
    estimate_moment_from(counts, features, mu_source, beta, None)
}

/// As [`estimate_moment`], optionally starting from a known feasible anchor
/// such as the source row.
pub fn estimate_moment_from(
    counts: &[u64],
    features: &[Vec<f64>],
    mu_source: &[f64],
    beta: &[f64],
    anchor: Option<&[f64]>,
) -> Result<RowEstimate> {
    check_counts(counts)?;
    let s = counts.len();
    if features.iter().any(|row| row.len() != s) {
        return Err(Error::DimensionMismatch { expected: s, found: features[0].len() });
    }
    if mu_source.len() != features.len() || beta.len() != features.len() {
        return Err(Error::DimensionMismatch { expected: features.len(), found: beta.len() });
    }
    if let Some(&b) = beta.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::InvalidSideInfo(format!("negative moment tolerance {b}")));
    }
    let mut set = MomentBox::new(features, mu_source, beta);
    let mle = vanilla_mle(counts)?;
    let slack = set.slack(&mle);
    if slack >= 0.0 {
        return Ok(RowEstimate::new(counts, mle, slack, 0, true));
    }
    let observed: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let anchored = anchor
        .filter(|y| set.slack(y) >= 0.0)
        .map(|y| (y.to_vec(), step_to_boundary(&set, y, &mle)))
        .filter(|(_, t)| *t > 0.0);
    let x0 = match anchored {
        Some((y, t)) => y.iter().zip(&mle).map(|(a, m)| a + t * (m - a)).collect(),
        None => {
            let (y, tau) = set.inner_point(&observed)?;
            if tau <= fw::EPSILON {
                // Every feasible point starves an observed state; the
                // likelihood is −∞ throughout, so report the feasible point.
                let slack = set.slack(&y);
                return Ok(RowEstimate::new(counts, y, slack, 0, true));
            }
            let t = step_to_boundary(&set, &y, &mle);
            y.iter().zip(&mle).map(|(a, m)| a + t * (m - a)).collect()
        }
    };
    let obj = LogLikelihood::new(counts);
    let out = fw::maximize(&obj, &mut set, x0, FwOptions::default())?;
    let slack = set.slack(&out.x);
    Ok(RowEstimate::new(counts, out.x, slack, out.iterations, out.converged))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_moment_example() {
        let features = vec![vec![0.0, 1.0]];
        let r = estimate_moment(&[3, 1], &features, &[0.5], &[0.1]).unwrap();
        assert!((r.q[0] - 0.6).abs() < 1e-9 && (r.q[1] - 0.4).abs() < 1e-9, "{:?}", r.q);
        assert!(r.slack >= -1e-9);
    }

    #[test]
    fn loose_tolerance_returns_mle() {
        let features = default_features(3);
        let r = estimate_moment(&[1, 2, 5], &features, &[0.5, 0.4], &[10.0, 10.0]).unwrap();
        assert_eq!(r.q, vec![0.125, 0.25, 0.625]);
    }

    #[test]
    fn zero_tolerance_with_full_rank_features_pins_the_source() {
        let p = [0.2, 0.5, 0.3];
        let features = default_features(3);
        let mu = moments(&features, &p);
        let r = estimate_moment(&[4, 0, 1], &features, &mu, &[0.0, 0.0]).unwrap();
        for (a, b) in r.q.iter().zip(p) {
            assert!((a - b).abs() < 1e-9, "{:?}", r.q);
        }
    }

    #[test]
    fn anchored_and_lp_starts_agree() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let features = default_features(4);
        let mu = moments(&features, &p);
        let counts = [7, 1, 0, 2];
        let a = estimate_moment_from(&counts, &features, &mu, &[0.05, 0.05], Some(&p)).unwrap();
        let b = estimate_moment(&counts, &features, &mu, &[0.05, 0.05]).unwrap();
        assert!(crate::mdp::tv_distance(&a.q, &b.q).unwrap() < 1e-4);
    }

    #[test]
    fn empty_box_is_infeasible() {
        let features = vec![vec![0.0, 1.0]];
        assert!(matches!(
            estimate_moment(&[1, 1], &features, &[2.0], &[0.5]),
            Err(Error::InfeasibleConstraint(_))
        ));
    }
}

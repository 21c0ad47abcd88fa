//! Fisher information and Cramér–Rao bounds for a categorical row, with and
//! without moment constraints, and the minimum-information program over
//! moment-bounded distributions.

use nalgebra::{DMatrix, DVector};
use ribe_core::error::Error as CoreError;
use ribe_core::estimate::fw::{maximize, ConcaveObjective, FwOptions, SimplexOracle};
use ribe_core::estimate::moment::MomentBox;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

fn check_positive(p: &[f64]) -> Result<()> {
    match p.iter().position(|&v| !(v > 0.0)) {
        Some(index) => Err(HarnessError::ZeroProbability { index, value: p[index] }),
        None => Ok(()),
    }
}

/// `n·diag(1/pᵢ)`.
pub fn fim(p: &[f64], n: u64) -> Result<DMatrix<f64>> {
    check_positive(p)?;
    Ok(DMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|&v| n as f64 / v))))
}

/// `(diag(p) − ppᵀ)/n`, the bound under the normalization constraint alone.
pub fn regular_crb(p: &[f64], n: u64) -> Result<DMatrix<f64>> {
    check_positive(p)?;
    if n == 0 {
        return Err(HarnessError::Config("the Cramér–Rao bound needs n ≥ 1".into()));
    }
    let v = DVector::from_column_slice(p);
    Ok((DMatrix::from_diagonal(&v) - &v * v.transpose()) / n as f64)
}

/// The reduction `Δ` of the bound from knowing `E_p[φ]`, where `features`
/// holds one row per moment function. Uses the pseudo-inverse of the
/// feature covariance, so degenerate features give a smaller (possibly zero)
/// reduction.
pub fn moment_reduction(p: &[f64], n: u64, features: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_positive(p)?;
    if n == 0 {
        return Err(HarnessError::Config("the Cramér–Rao bound needs n ≥ 1".into()));
    }
    let k = p.len();
    let m = features.len();
    if let Some(row) = features.iter().find(|r| r.len() != k) {
        return Err(CoreError::DimensionMismatch { expected: k, found: row.len() }.into());
    }
    // aᵢ = φ(xᵢ) − φ(x_k), one column per state.
    let a = DMatrix::from_fn(m, k, |j, i| features[j][i] - features[j][k - 1]);
    let abar: DVector<f64> = (0..k).fold(DVector::zeros(m), |acc, i| acc + a.column(i) * p[i]);
    let centered = DMatrix::from_fn(m, k, |j, i| a[(j, i)] - abar[j]);
    let cov = (0..k).fold(DMatrix::zeros(m, m), |acc, i| {
        let c = centered.column(i);
        acc + c * c.transpose() * p[i]
    });
    // Δ = (1/n)·D·Cov⁺·Dᵀ with rows Dᵢ = pᵢ(aᵢ − ā).
    let d = DMatrix::from_fn(k, m, |i, j| p[i] * centered[(j, i)]);
    let scale = cov.amax();
    let pinv = if scale > 0.0 {
        cov.pseudo_inverse(scale * 1e-10).map_err(|e| HarnessError::Config(e.to_string()))?
    } else {
        DMatrix::zeros(m, m)
    };
    Ok(&d * pinv * d.transpose() / n as f64)
}

#[derive(Debug, Clone)]
pub struct CrbReport {
    pub regular: DMatrix<f64>,
    pub constrained: Option<DMatrix<f64>>,
}

impl CrbReport {
    pub fn trace_regular(&self) -> f64 {
        self.regular.trace()
    }

    pub fn trace_constrained(&self) -> Option<f64> {
        self.constrained.as_ref().map(|c| c.trace())
    }

    /// Smallest eigenvalue of `C_regular − C_constrained`.
    pub fn min_gap_eigenvalue(&self) -> Option<f64> {
        self.constrained.as_ref().map(|c| {
            let diff = &self.regular - c;
            let sym = (&diff + diff.transpose()) * 0.5;
            sym.symmetric_eigenvalues().min()
        })
    }
}

/// The regular bound and, when features are given, the moment-constrained
/// bound `C_R − Δ`.
pub fn crb(p: &[f64], n: u64, features: Option<&[Vec<f64>]>) -> Result<CrbReport> {
    let regular = regular_crb(p, n)?;
    let constrained = match features {
        Some(f) => Some(&regular - moment_reduction(p, n, f)?),
        None => None,
    };
    Ok(CrbReport { regular, constrained })
}

/// `−Σ 1/qᵢ`, concave on the positive orthant.
struct NegInverseSum;

impl ConcaveObjective for NegInverseSum {
    fn value(&self, x: &[f64]) -> f64 {
        -x.iter().map(|v| 1.0 / v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = 1.0 / (v * v);
        }
    }

    fn slope(&self, x: &[f64], d: &[f64], gamma: f64) -> f64 {
        x.iter()
            .zip(d)
            .map(|(v, dv)| {
                let y = v + gamma * dv;
                if y <= 0.0 {
                    if *dv < 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        0.0
                    }
                } else {
                    dv / (y * y)
                }
            })
            .sum()
    }

    fn curvature(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(x.iter().map(|v| 2.0 / (v * v * v)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSolution {
    pub q: Vec<f64>,
    /// `trace J(q) = n·Σ 1/qᵢ`.
    pub trace: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimTrace {
    pub n: u64,
    pub with_constraints: TraceSolution,
    pub without_constraints: TraceSolution,
    /// `with / without`.
    pub ratio: f64,
}

/// Powers `xʲ`, `j = 1..=m`, of the normalized state index `x = s/(S−1)`.
pub fn power_features(states: usize, m: usize) -> Vec<Vec<f64>> {
    let denom = (states.max(2) - 1) as f64;
    (1..=m).map(|j| (0..states).map(|s| (s as f64 / denom).powi(j as i32)).collect()).collect()
}

fn fw_options(reference: f64) -> FwOptions {
    FwOptions { tol: 1e-10 * reference.abs().max(1.0), max_iters: 20_000 }
}

/// Minimizes `trace J(q) = n·Σ 1/qᵢ` over the simplex, with and without the
/// upper moment bounds `Σ qᵢ·features[j][i] ≤ c[j]`.
pub fn fim_trace_program(features: &[Vec<f64>], c: &[f64], states: usize, n: u64) -> Result<FimTrace> {
    if features.len() != c.len() {
        return Err(CoreError::DimensionMismatch { expected: features.len(), found: c.len() }.into());
    }
    if let Some(row) = features.iter().find(|r| r.len() != states) {
        return Err(CoreError::DimensionMismatch { expected: states, found: row.len() }.into());
    }
    let uniform = vec![1.0 / states as f64; states];
    let obj = NegInverseSum;
    let free = maximize(&obj, &mut SimplexOracle, uniform.clone(), fw_options(obj.value(&uniform)))?;
    let nf = n as f64;
    let without = TraceSolution { trace: -nf * obj.value(&free.x), q: free.x, converged: free.converged };

    if features.is_empty() {
        let ratio = 1.0;
        return Ok(FimTrace { n, with_constraints: without.clone(), without_constraints: without, ratio });
    }
    // Lower sides sit below every attainable moment, so only the upper bounds bind.
    let lo: Vec<f64> = features.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min) - 1.0).collect();
    let mu: Vec<f64> = c.iter().zip(&lo).map(|(c, l)| 0.5 * (c + l)).collect();
    let beta: Vec<f64> = c.iter().zip(&lo).map(|(c, l)| 0.5 * (c - l)).collect();
    if beta.iter().any(|b| *b < 0.0) {
        return Err(HarnessError::InfeasibleBounds);
    }
    let mut set = MomentBox::new(features, &mu, &beta);
    let (start, margin) = set.interior_point().map_err(|e| match e {
        CoreError::InfeasibleConstraint(_) | CoreError::LpInfeasible => HarnessError::InfeasibleBounds,
        other => other.into(),
    })?;
    let with = if margin > 0.0 {
        let start_value = obj.value(&start);
        let out = maximize(&obj, &mut set, start, fw_options(start_value))?;
        TraceSolution { trace: -nf * obj.value(&out.x), q: out.x, converged: out.converged }
    } else {
        // Every feasible point has a zero coordinate.
        TraceSolution { q: start, trace: f64::INFINITY, converged: true }
    };
    let ratio = with.trace / without.trace;
    Ok(FimTrace { n, with_constraints: with, without_constraints: without, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fim_examples() {
        assert_eq!(fim(&[0.5, 0.5], 10).unwrap(), DMatrix::from_diagonal(&DVector::from_vec(vec![20.0, 20.0])));
        assert_eq!(fim(&[0.25; 4], 0).unwrap(), DMatrix::zeros(4, 4));
        let f = fim(&[0.2; 5], 7).unwrap();
        assert!(f.diagonal().iter().all(|&d| (d - 35.0).abs() < 1e-12));
        assert!(matches!(fim(&[1.0, 0.0], 3), Err(HarnessError::ZeroProbability { index: 1, .. })));
    }

    #[test]
    fn regular_bound_is_binomial_variance() {
        let c = crb(&[0.5, 0.5], 10, None).unwrap();
        assert!((c.regular[(0, 0)] - 0.025).abs() < 1e-15);
        assert!((c.regular[(1, 1)] - 0.025).abs() < 1e-15);
        assert!((c.regular[(0, 1)] + 0.025).abs() < 1e-15);
    }

    #[test]
    fn constant_features_carry_no_information() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let c = crb(&p, 50, Some(&[vec![2.0; 4]])).unwrap();
        assert_eq!(c.constrained.unwrap(), c.regular);
    }

    #[test]
    fn full_information_removes_all_variance() {
        // Three features on three states pin p down completely.
        let p = [0.2, 0.3, 0.5];
        let features = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let c = crb(&p, 10, Some(&features)).unwrap();
        assert!(c.trace_constrained().unwrap().abs() < 1e-12);
    }

    #[test]
    fn unconstrained_program_is_uniform() {
        let out = fim_trace_program(&[], &[], 5, 10).unwrap();
        assert!((out.without_constraints.trace - 250.0).abs() < 1e-9);
        assert!(out.without_constraints.q.iter().all(|q| (q - 0.2).abs() < 1e-12));
    }

    #[test]
    fn inactive_bounds_change_nothing() {
        let features = power_features(6, 2);
        let out = fim_trace_program(&features, &[0.9, 0.9], 6, 4).unwrap();
        assert!((out.with_constraints.trace - out.without_constraints.trace).abs() < 1e-6);
        assert!((out.ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn binding_first_moment_raises_the_trace() {
        let features = power_features(6, 1);
        let out = fim_trace_program(&features, &[0.3], 6, 4).unwrap();
        assert!(out.with_constraints.converged);
        assert!(out.with_constraints.trace > out.without_constraints.trace);
        let mean: f64 = out.with_constraints.q.iter().zip(&features[0]).map(|(q, x)| q * x).sum();
        assert!(mean <= 0.3 + 1e-9);
        // Stationarity: n/qᵢ² = ν + λxᵢ, so 1/qᵢ² is affine in xᵢ.
        let g: Vec<f64> = out.with_constraints.q.iter().map(|q| 1.0 / (q * q)).collect();
        let step = g[1] - g[0];
        for i in 2..6 {
            assert!((g[i] - g[i - 1] - step).abs() < 1e-3 * g[i], "{g:?}");
        }
    }

    #[test]
    fn infeasible_bounds_are_reported() {
        let features = power_features(4, 1);
        assert!(matches!(fim_trace_program(&features, &[-0.5], 4, 3), Err(HarnessError::InfeasibleBounds)));
    }

    proptest! {
        #[test]
        fn moment_bound_is_below_regular_bound(
            raw in proptest::collection::vec(0.05f64..1.0, 2..8),
            seed_features in proptest::collection::vec(-2.0f64..2.0, 16),
            m in 1usize..3,
            n in 1u64..1000,
        ) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let k = p.len();
            let features: Vec<Vec<f64>> =
                (0..m).map(|j| (0..k).map(|i| seed_features[(j * k + i) % 16]).collect()).collect();
            let c = crb(&p, n, Some(&features)).unwrap();
            prop_assert!(c.min_gap_eigenvalue().unwrap() >= -1e-10);
            prop_assert!(c.trace_constrained().unwrap() <= c.trace_regular() + 1e-12);
        }
    }
}

//! Softmax-parameterized rows `q ∝ exp(θᵀψ)` where some coordinates of `θ`
//! are shared with the source and only the rest are fitted.

use super::{check_counts, RowEstimate};
use crate::error::{Error, Result};

const GRAD_TOL: f64 = 1e-8;
const MAX_STEPS: usize = 10_000;

/// `softmax(θᵀψ)` for `ψ` given as one row per parameter.
pub fn softmax_row(psi: &[Vec<f64>], theta: &[f64]) -> Vec<f64> {
    let states = psi.first().map_or(0, Vec::len);
    let logits: Vec<f64> =
        (0..states).map(|j| psi.iter().zip(theta).map(|(row, t)| row[j] * t).sum()).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - top).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

fn mean_loglik(weights: &[f64], psi: &[Vec<f64>], theta: &[f64]) -> f64 {
    let p = softmax_row(psi, theta);
    weights.iter().zip(&p).filter(|(w, _)| **w > 0.0).map(|(w, q)| w * q.ln()).sum()
}

/// Solves `m x = b` for a small symmetric positive-definite `m`; `None` if a
/// pivot vanishes.
pub(crate) fn cholesky_solve(mut m: Vec<Vec<f64>>, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut d = m[j][j];
        for k in 0..j {
            d -= m[j][k] * m[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        m[j][j] = d;
        for i in (j + 1)..n {
            let mut v = m[i][j];
            for k in 0..j {
                v -= m[i][k] * m[j][k];
            }
            m[i][j] = v / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= m[i][k] * y[k];
        }
        y[i] /= m[i][i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= m[k][i] * y[k];
        }
        y[i] /= m[i][i];
    }
    Some(y)
}

/// Fits the free block of `θ` by maximum likelihood with the shared block
/// fixed at `theta_source`. Returns the fitted row and the full `θ̂`.
///
/// Uses damped Newton ascent with backtracking; stops when the gradient of
/// the mean log-likelihood has sup-norm at most `1e-8`.
pub fn estimate_lds(
    counts: &[u64],
    psi: &[Vec<f64>],
    theta_source: &[f64],
    shared: &[usize],
) -> Result<(RowEstimate, Vec<f64>)> {
    check_counts(counts)?;
    let dim = psi.len();
    if theta_source.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: theta_source.len() });
    }
    if let Some(row) = psi.iter().find(|r| r.len() != counts.len()) {
        return Err(Error::DimensionMismatch { expected: counts.len(), found: row.len() });
    }
    if let Some(&k) = shared.iter().find(|&&k| k >= dim) {
        return Err(Error::InvalidSideInfo(format!("shared index {k} >= dimension {dim}")));
    }
    let free: Vec<usize> = (0..dim).filter(|k| !shared.contains(k)).collect();
    let n: f64 = counts.iter().sum::<u64>() as f64;
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let mut theta = theta_source.to_vec();
    let mut steps = 0;
    let mut converged = free.is_empty();
    while !converged && steps < MAX_STEPS {
        let p = softmax_row(psi, &theta);
        let mean: Vec<f64> =
            free.iter().map(|&k| psi[k].iter().zip(&p).map(|(a, b)| a * b).sum()).collect();
        let grad: Vec<f64> = free
            .iter()
            .map(|&k| psi[k].iter().zip(weights.iter().zip(&p)).map(|(a, (w, q))| a * (w - q)).sum())
            .collect();
        if grad.iter().all(|g| g.abs() <= GRAD_TOL) {
            converged = true;
            break;
        }
        steps += 1;
        // Negative Hessian: the covariance of ψ_free under p.
        let m = free.len();
        let mut cov = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..=a {
                let (ka, kb) = (free[a], free[b]);
                let e: f64 = (0..p.len()).map(|j| psi[ka][j] * psi[kb][j] * p[j]).sum();
                cov[a][b] = e - mean[a] * mean[b];
                cov[b][a] = cov[a][b];
            }
            cov[a][a] += 1e-12;
        }
        let direction = cholesky_solve(cov, &grad).unwrap_or_else(|| grad.clone());
        let slope: f64 = direction.iter().zip(&grad).map(|(d, g)| d * g).sum();
        let (direction, slope) = if slope > 0.0 {
            (direction, slope)
        } else {
            (grad.clone(), grad.iter().map(|g| g * g).sum())
        };
        let base = mean_loglik(&weights, psi, &theta);
        let mut step = 1.0;
        let mut trial = theta.clone();
        loop {
            for (i, &k) in free.iter().enumerate() {
                trial[k] = theta[k] + step * direction[i];
            }
            if mean_loglik(&weights, psi, &trial) >= base + 1e-4 * step * slope || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        if trial == theta {
            break;
        }
        theta = trial;
    }
    let q = softmax_row(psi, &theta);
    Ok((RowEstimate::new(counts, q, 0.0, steps, converged), theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_parameter_logit() {
        let psi = vec![vec![0.0, 1.0]];
        let (r, theta) = estimate_lds(&[3, 1], &psi, &[0.0], &[]).unwrap();
        assert!((theta[0] - (1.0f64 / 3.0).ln()).abs() < 1e-7, "{theta:?}");
        assert!((r.q[0] - 0.75).abs() < 1e-8);
    }

    #[test]
    fn all_shared_returns_source_row() {
        let psi = vec![vec![0.0, 1.0, -1.0], vec![1.0, 0.5, 0.0]];
        let theta = [0.3, -1.2];
        let (r, fitted) = estimate_lds(&[5, 0, 1], &psi, &theta, &[0, 1]).unwrap();
        assert_eq!(fitted, theta.to_vec());
        assert_eq!(r.q, softmax_row(&psi, &theta));
    }

    #[test]
    fn shared_block_is_untouched() {
        let psi = vec![
            vec![-1.0, -0.3, 0.4, 1.0],
            vec![0.5, -1.0, 0.2, 0.1],
            vec![1.0, 0.0, -0.5, 0.3],
        ];
        let theta = [0.1234567, -0.7, 0.9];
        let (_, fitted) = estimate_lds(&[4, 2, 7, 1], &psi, &theta, &[0]).unwrap();
        assert_eq!(fitted[0].to_bits(), theta[0].to_bits());
        assert_ne!(fitted[1], theta[1]);
    }

    #[test]
    fn fit_recovers_frequencies_when_fully_free() {
        // With ψ spanning all logit differences the fit is the MLE.
        let psi = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let (r, _) = estimate_lds(&[2, 3, 5], &psi, &[0.0, 0.0], &[]).unwrap();
        for (a, b) in r.q.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

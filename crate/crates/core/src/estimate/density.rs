//! Likelihood maximization under elementwise density-ratio caps,
//! `q(s') ≤ cap(s')·p_source(s')`, solved in closed form by water-filling.

use super::{check_counts, RowEstimate};
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Likelihood maximizer over `{q ∈ Δ : q ≤ caps·p_source}`.
///
/// Observed coordinates take `min(N_j/λ, u_j)` with `λ` found by bisection.
/// If the observed coordinates cannot absorb all mass even at their caps,
/// they sit at their caps and the remainder goes to unobserved coordinates
/// in proportion to their caps.
pub fn estimate_density(counts: &[u64], p_source: &[f64], caps: &[f64]) -> Result<RowEstimate> {
    check_counts(counts)?;
    let s = counts.len();
    if p_source.len() != s || caps.len() != s {
        return Err(Error::DimensionMismatch { expected: s, found: caps.len().min(p_source.len()) });
    }
    if let Some(&c) = caps.iter().find(|c| !(**c >= 0.0)) {
        return Err(Error::InvalidSideInfo(format!("negative density cap {c}")));
    }
    let upper: Vec<f64> = caps.iter().zip(p_source).map(|(c, p)| c * p).collect();
    let capacity: f64 = upper.iter().sum();
    if capacity < 1.0 - 1e-9 {
        return Err(Error::InfeasibleCaps(capacity));
    }
    let n: f64 = counts.iter().sum::<u64>() as f64;
    let observed_capacity: f64 =
        upper.iter().zip(counts).filter(|(_, &c)| c > 0).map(|(u, _)| u).sum();

    let fill = |lambda: f64| -> f64 {
        counts
            .iter()
            .zip(&upper)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &u)| (c as f64 / lambda).min(u))
            .sum()
    };

    let mut q = vec![0.0; s];
    let mut iterations = 0;
    if observed_capacity <= 1.0 {
        let spare = 1.0 - observed_capacity;
        let unobserved: f64 = upper.iter().zip(counts).filter(|(_, &c)| c == 0).map(|(u, _)| u).sum();
        for j in 0..s {
            q[j] = if counts[j] > 0 {
                upper[j]
            } else if unobserved > 0.0 {
                spare * upper[j] / unobserved
            } else {
                0.0
            };
        }
    } else {
        // fill is nonincreasing in λ; fill(n) ≤ 1 and fill(λ) → capacity > 1
        // as λ → 0.
        let mut hi = n;
        let mut lo = n;
        while fill(lo) <= 1.0 {
            lo *= 0.5;
        }
        let mut lambda = hi;
        for _ in 0..200 {
            iterations += 1;
            lambda = 0.5 * (lo + hi);
            let f = fill(lambda);
            if (f - 1.0).abs() <= SUM_TOL || lambda <= lo || lambda >= hi {
                break;
            }
            if f > 1.0 {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        for j in 0..s {
            if counts[j] > 0 {
                q[j] = (counts[j] as f64 / lambda).min(upper[j]);
            }
        }
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
    }
    let slack = upper.iter().zip(&q).map(|(u, v)| u - v).fold(f64::INFINITY, f64::min);
    Ok(RowEstimate::new(counts, q, slack, iterations, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::vanilla_mle;

    #[test]
    fn binding_cap() {
        let r = estimate_density(&[3, 1], &[0.5, 0.5], &[1.2, 1.2]).unwrap();
        assert!((r.q[0] - 0.6).abs() < 1e-11 && (r.q[1] - 0.4).abs() < 1e-11, "{:?}", r.q);
    }

    #[test]
    fn cap_exactly_at_the_mle() {
        let r = estimate_density(&[3, 1], &[0.5, 0.5], &[1.5, 1.5]).unwrap();
        assert!((r.q[0] - 0.75).abs() < 1e-11);
    }

    #[test]
    fn huge_caps_give_the_mle() {
        let p = [0.1, 0.3, 0.6];
        let b = 3.0 / 0.1;
        let r = estimate_density(&[2, 5, 1], &p, &[b; 3]).unwrap();
        let mle = vanilla_mle(&[2, 5, 1]).unwrap();
        for (a, m) in r.q.iter().zip(mle) {
            assert!((a - m).abs() < 1e-11);
        }
    }

    #[test]
    fn spare_mass_goes_to_unobserved_states() {
        // Observed state 0 can hold at most 0.4.
        let r = estimate_density(&[5, 0, 0], &[0.2, 0.3, 0.5], &[2.0, 2.0, 2.0]).unwrap();
        assert!((r.q[0] - 0.4).abs() < 1e-12);
        assert!((r.q[1] - 0.6 * 0.6 / 1.6).abs() < 1e-12);
        assert!((r.q[2] - 0.6 * 1.0 / 1.6).abs() < 1e-12);
    }

    #[test]
    fn infeasible_caps() {
        assert!(matches!(
            estimate_density(&[1, 1], &[0.5, 0.5], &[0.5, 0.5]),
            Err(Error::InfeasibleCaps(_))
        ));
    }

    #[test]
    fn water_filling_structure() {
        let counts = [9, 3, 1, 0, 2];
        let p = [0.1, 0.2, 0.3, 0.2, 0.2];
        let caps = [2.0, 1.5, 1.2, 1.1, 1.0];
        let r = estimate_density(&counts, &p, &caps).unwrap();
        let mut lambdas = Vec::new();
        for j in 0..5 {
            let u = caps[j] * p[j];
            if (r.q[j] - u).abs() > 1e-9 && counts[j] > 0 {
                lambdas.push(counts[j] as f64 / r.q[j]);
            }
        }
        for l in &lambdas {
            assert!((l - lambdas[0]).abs() < 1e-6 * lambdas[0]);
        }
        assert!(r.slack >= -1e-12);
    }
}

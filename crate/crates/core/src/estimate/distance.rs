//! Likelihood maximization inside TV and Wasserstein-1 balls around the
//! source row.

use super::fw::{self, FwOptions, LinearOracle, LogLikelihood};
use super::{check_counts, vanilla_mle, RowEstimate};
use crate::error::{Error, Result};
use crate::mdp::{tv_unchecked, w1_distance, CostMatrix};
use crate::robust::support_tv;

/// Linear maximization over `{q ∈ Δ : tv(q, center) ≤ radius}`.
pub struct TvBallOracle<'a> {
    pub center: &'a [f64],
    pub radius: f64,
}

impl LinearOracle for TvBallOracle<'_> {
    fn argmax(&mut self, g: &[f64]) -> Result<Vec<f64>> {
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        Ok(support_tv(self.center, &neg, self.radius)?.worst_case_distribution)
    }
}

/// Linear maximization over `{q ∈ Δ : W1(q, center) ≤ radius}`.
///
/// Each unit of source mass at `i` may be shipped to any `j` at cost
/// `c(i, j)` for value `g_j`. This is a continuous multiple-choice knapsack:
/// per source the useful options form an increasing concave chain in
/// (cost, value), and the optimum buys chain segments in order of decreasing
/// value-per-cost until the budget runs out.
pub struct W1BallOracle<'a> {
    pub center: &'a [f64],
    pub cost: &'a CostMatrix,
    pub radius: f64,
}

struct Segment {
    source: usize,
    step: usize,
    slope: f64,
    spend: f64,
}

/// Upper-left concave chain of the options `(c(i, j), g_j)`, as target indices.
fn concave_chain(cost: &[f64], g: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| {
        cost[a].total_cmp(&cost[b]).then(g[b].total_cmp(&g[a])).then(a.cmp(&b))
    });
    let mut chain: Vec<usize> = Vec::new();
    for j in order {
        if let Some(&last) = chain.last() {
            if g[j] <= g[last] {
                continue;
            }
        }
        while chain.len() >= 2 {
            let (a, b) = (chain[chain.len() - 2], chain[chain.len() - 1]);
            // Drop b when it lies on or below the segment from a to j.
            let lhs = (g[b] - g[a]) * (cost[j] - cost[a]);
            let rhs = (g[j] - g[a]) * (cost[b] - cost[a]);
            if lhs <= rhs {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(j);
    }
    chain
}

impl LinearOracle for W1BallOracle<'_> {
    fn argmax(&mut self, g: &[f64]) -> Result<Vec<f64>> {
        let n = g.len();
        let mut chains = Vec::with_capacity(n);
        let mut segments = Vec::new();
        for i in 0..n {
            let mass = self.center[i];
            if mass <= 0.0 {
                chains.push(Vec::new());
                continue;
            }
            let row = self.cost.row(i);
            let chain = concave_chain(row, g);
            for step in 0..chain.len().saturating_sub(1) {
                let (a, b) = (chain[step], chain[step + 1]);
                let dc = row[b] - row[a];
                segments.push(Segment {
                    source: i,
                    step,
                    slope: (g[b] - g[a]) / dc,
                    spend: mass * dc,
                });
            }
            chains.push(chain);
        }
        segments.sort_by(|a, b| {
            b.slope.total_cmp(&a.slope).then(a.source.cmp(&b.source)).then(a.step.cmp(&b.step))
        });
        let mut position = vec![0usize; n];
        let mut split: Option<(usize, f64)> = None;
        let mut budget = self.radius;
        for seg in &segments {
            if budget <= 0.0 {
                break;
            }
            if seg.spend <= budget {
                position[seg.source] = seg.step + 1;
                budget -= seg.spend;
            } else {
                split = Some((seg.source, budget / seg.spend));
                break;
            }
        }
        let mut q = vec![0.0; n];
        for i in 0..n {
            let mass = self.center[i];
            if mass <= 0.0 {
                continue;
            }
            let chain = &chains[i];
            let here = chain[position[i]];
            match split {
                Some((src, frac)) if src == i => {
                    q[here] += mass * (1.0 - frac);
                    q[chain[position[i] + 1]] += mass * frac;
                }
                _ => q[here] += mass,
            }
        }
        Ok(q)
    }
}

fn check_row(counts: &[u64], p_source: &[f64]) -> Result<()> {
    if counts.len() != p_source.len() {
        return Err(Error::DimensionMismatch { expected: p_source.len(), found: counts.len() });
    }
    check_counts(counts)
}

/// Shared driver: returns the MLE when it lies within `d` of the source,
/// the source itself when `d = 0`, and otherwise runs Frank–Wolfe from the
/// point where the segment source → MLE leaves the ball.
fn ball_mle<O: LinearOracle>(
    counts: &[u64],
    p_source: &[f64],
    d: f64,
    distance: impl Fn(&[f64]) -> Result<f64>,
    oracle: &mut O,
) -> Result<RowEstimate> {
    let mle = vanilla_mle(counts)?;
    let to_mle = distance(&mle)?;
    if to_mle <= d {
        return Ok(RowEstimate::new(counts, mle, d - to_mle, 0, true));
    }
    if d == 0.0 {
        return Ok(RowEstimate::new(counts, p_source.to_vec(), 0.0, 0, true));
    }
    // Both balls are norm balls in q − p_source, so distance scales linearly
    // along the segment.
    let t = d / to_mle;
    let x0: Vec<f64> = p_source.iter().zip(&mle).map(|(p, m)| p + t * (m - p)).collect();
    let obj = LogLikelihood::new(counts);
    let out = fw::maximize(&obj, oracle, x0, FwOptions::default())?;
    let slack = d - distance(&out.x)?;
    Ok(RowEstimate::new(counts, out.x, slack, out.iterations, out.converged))
}

/// Likelihood maximizer over `{q : tv(q, p_source) ≤ d}`.
pub fn estimate_distance_tv(counts: &[u64], p_source: &[f64], d: f64) -> Result<RowEstimate> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidRadius(d));
    }
    check_row(counts, p_source)?;
    let mut oracle = TvBallOracle { center: p_source, radius: d };
    ball_mle(counts, p_source, d, |q| Ok(tv_unchecked(q, p_source)), &mut oracle)
}

/// Likelihood maximizer over `{q : W1_cost(q, p_source) ≤ d}`.
pub fn estimate_distance_w1(
    counts: &[u64],
    p_source: &[f64],
    cost: &CostMatrix,
    d: f64,
) -> Result<RowEstimate> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidRadius(d));
    }
    check_row(counts, p_source)?;
    if cost.len() != p_source.len() {
        return Err(Error::DimensionMismatch { expected: p_source.len(), found: cost.len() });
    }
    let mut oracle = W1BallOracle { center: p_source, cost, radius: d };
    ball_mle(counts, p_source, d, |q| w1_distance(q, p_source, cost), &mut oracle)
}

/// Value-aware variant: the W1 ball under a pseudometric built from a value
/// function.
pub fn estimate_value_aware(
    counts: &[u64],
    p_source: &[f64],
    metric: &CostMatrix,
    beta1: f64,
) -> Result<RowEstimate> {
    estimate_distance_w1(counts, p_source, metric, beta1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
    use proptest::prelude::*;

    /// Coupling-variable LP for the same linear maximization.
    fn w1_ball_lp(center: &[f64], cost: &CostMatrix, radius: f64, g: &[f64]) -> f64 {
        let n = g.len();
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let mut budget = LinearExpr::empty();
        let mut rows = vec![LinearExpr::empty(); n];
        for i in 0..n {
            for j in 0..n {
                let v = problem.add_var(g[j], (0.0, f64::INFINITY));
                rows[i].add(v, 1.0);
                budget.add(v, cost.get(i, j));
            }
        }
        for (i, row) in rows.into_iter().enumerate() {
            problem.add_constraint(row, ComparisonOp::Eq, center[i]);
        }
        problem.add_constraint(budget, ComparisonOp::Le, radius);
        problem.solve().unwrap().into_solution().unwrap().objective()
    }

    #[test]
    fn tv_examples() {
        let r = estimate_distance_tv(&[3, 1], &[0.5, 0.5], 0.0).unwrap();
        assert_eq!(r.q, vec![0.5, 0.5]);
        let r = estimate_distance_tv(&[3, 1], &[0.5, 0.5], 1.0).unwrap();
        assert_eq!(r.q, vec![0.75, 0.25]);
        let r = estimate_distance_tv(&[3, 1], &[0.5, 0.5], 0.1).unwrap();
        assert!((r.q[0] - 0.6).abs() < 1e-9 && (r.q[1] - 0.4).abs() < 1e-9, "{:?}", r.q);
    }

    #[test]
    fn w1_examples() {
        let unit = CostMatrix::discrete(2);
        let r = estimate_distance_w1(&[3, 1], &[0.5, 0.5], &unit, 0.1).unwrap();
        assert!((r.q[0] - 0.6).abs() < 1e-9, "{:?}", r.q);
        let r = estimate_distance_w1(&[3, 1], &[0.5, 0.5], &unit, 0.0).unwrap();
        assert_eq!(r.q, vec![0.5, 0.5]);
        let r = estimate_distance_w1(&[3, 1], &[0.5, 0.5], &unit, 0.25).unwrap();
        assert_eq!(r.q, vec![0.75, 0.25]);
    }

    #[test]
    fn zero_metric_returns_mle() {
        let zero = CostMatrix::from_positions(&[1.0, 1.0, 1.0]);
        let r = estimate_value_aware(&[2, 0, 6], &[0.3, 0.3, 0.4], &zero, 0.0).unwrap();
        // β = 0 pins q to the source under a genuine metric, but every point is
        // at pseudo-distance 0 here.
        assert_eq!(r.q, vec![0.25, 0.0, 0.75]);
    }

    #[test]
    fn chain_skips_dominated_options() {
        let cost = [0.0, 1.0, 2.0, 3.0];
        let g = [0.0, 1.0, 1.5, 3.5];
        // (1,1) lies below the segment (0,0)-(3,3.5) and (2,1.5) too.
        assert_eq!(concave_chain(&cost, &g), vec![0, 3]);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
        (2usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n),
                prop::collection::vec(0.0..5.0f64, n),
                prop::collection::vec(prop_oneof![Just(0.5), -2.0..2.0f64], n),
                0.0..2.0f64,
            )
                .prop_filter_map("empty", |(p, x, g, r)| {
                    let s: f64 = p.iter().sum();
                    (s > 1e-6).then(|| (p.iter().map(|v| v / s).collect(), x, g, r))
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn knapsack_oracle_matches_coupling_lp((p, x, g, r) in instance()) {
            let cost = CostMatrix::from_positions(&x);
            let q = W1BallOracle { center: &p, cost: &cost, radius: r }.argmax(&g).unwrap();
            let value: f64 = q.iter().zip(&g).map(|(a, b)| a * b).sum();
            let lp = w1_ball_lp(&p, &cost, r, &g);
            prop_assert!((value - lp).abs() < 1e-8, "{value} vs {lp}");
            prop_assert!(w1_distance(&q, &p, &cost).unwrap() <= r + 1e-9);
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn tv_estimate_dominated_by_mle(
            counts in prop::collection::vec(0u64..6, 3),
            p in prop::collection::vec(0.05..1.0f64, 3),
            d in 0.0..1.0f64,
        ) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let s: f64 = p.iter().sum();
            let p: Vec<f64> = p.iter().map(|v| v / s).collect();
            let r = estimate_distance_tv(&counts, &p, d).unwrap();
            let mle = vanilla_mle(&counts).unwrap();
            let ll = LogLikelihood::new(&counts);
            use super::super::fw::ConcaveObjective;
            prop_assert!(ll.value(&r.q) <= ll.value(&mle) + 1e-12);
            prop_assert!(r.slack >= -1e-6);
        }
    }
}

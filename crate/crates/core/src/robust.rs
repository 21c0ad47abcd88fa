//! Robust dynamic programming over `(s, a)`-rectangular TV balls.
//!
//! The inner problem `min { q·v : q ∈ Δ, tv(q, p0) ≤ R }` is solved exactly by
//! moving mass greedily from the highest-valued states onto the lowest one.
//! It also has a dual form, a maximum over shifts `α` of
//! `p0·(v − α) − R·span(v − α)`, which needs an inner search over `α`; the LP
//! in [`support_tv_lp_oracle`] serves as the independent cross-check instead.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMDP, UncertaintySet, ValueFunction};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Worst-case expectation over a TV ball and a distribution attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportResult {
    pub value: f64,
    pub worst_case_distribution: Vec<f64>,
}

/// State ordering of a value vector shared by every row of a sweep:
/// indices by decreasing value (ties by lowest index) and the lowest-index
/// argmin.
#[derive(Debug, Clone)]
pub struct ValueOrder {
    descending: Vec<usize>,
    argmin: usize,
}

impl ValueOrder {
    pub fn new(v: &[f64]) -> Self {
        let mut descending: Vec<usize> = (0..v.len()).collect();
        descending.sort_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)));
        let mut argmin = 0;
        for (i, &x) in v.iter().enumerate() {
            if x < v[argmin] {
                argmin = i;
            }
        }
        ValueOrder { descending, argmin }
    }

    pub fn argmin(&self) -> usize {
        self.argmin
    }
}

#[inline]
pub(crate) fn dot(p: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Greedy support value using a precomputed ordering of `v`.
#[inline]
pub fn support_value_ordered(p0: &[f64], v: &[f64], order: &ValueOrder, radius: f64) -> f64 {
    let mut value = dot(p0, v);
    if radius <= 0.0 {
        return value;
    }
    let vmin = v[order.argmin];
    let mut budget = radius;
    for &i in &order.descending {
        if v[i] <= vmin || budget <= 0.0 {
            break;
        }
        let take = p0[i].min(budget);
        value -= take * (v[i] - vmin);
        budget -= take;
    }
    value
}

fn check_radius(radius: f64) -> Result<()> {
    if (0.0..=1.0).contains(&radius) {
        Ok(())
    } else {
        Err(Error::InvalidRadius(radius))
    }
}

fn check_dims(p0: &[f64], v: &[f64]) -> Result<()> {
    if p0.len() != v.len() || p0.is_empty() {
        return Err(Error::DimensionMismatch { expected: p0.len(), found: v.len() });
    }
    Ok(())
}

/// `min { q·v : q ∈ Δ, tv(q, p0) ≤ R }` by greedy mass transport.
pub fn support_tv(p0: &[f64], v: &[f64], radius: f64) -> Result<SupportResult> {
    check_radius(radius)?;
    check_dims(p0, v)?;
    let order = ValueOrder::new(v);
    let vmin = v[order.argmin];
    let mut q = p0.to_vec();
    let mut budget = radius;
    let mut moved = 0.0;
    for &i in &order.descending {
        if v[i] <= vmin || budget <= 0.0 {
            break;
        }
        let take = q[i].min(budget);
        q[i] -= take;
        moved += take;
        budget -= take;
    }
    q[order.argmin] += moved;
    Ok(SupportResult {
        value: support_value_ordered(p0, v, &order, radius),
        worst_case_distribution: q,
    })
}

/// The same minimization posed as an explicit LP with `q − p0 = u − w`,
/// `½Σ(u + w) ≤ R`. Meant for testing only.
pub fn support_tv_lp_oracle(p0: &[f64], v: &[f64], radius: f64) -> Result<SupportResult> {
    check_radius(radius)?;
    check_dims(p0, v)?;
    let n = p0.len();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let q: Vec<_> = v.iter().map(|&vi| problem.add_var(vi, (0.0, 1.0))).collect();
    let u: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let w: Vec<_> = (0..n).map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let mut mass = LinearExpr::empty();
    let mut budget = LinearExpr::empty();
    for j in 0..n {
        let mut split = LinearExpr::empty();
        split.add(q[j], 1.0);
        split.add(u[j], -1.0);
        split.add(w[j], 1.0);
        problem.add_constraint(split, ComparisonOp::Eq, p0[j]);
        mass.add(q[j], 1.0);
        budget.add(u[j], 0.5);
        budget.add(w[j], 0.5);
    }
    problem.add_constraint(mass, ComparisonOp::Eq, 1.0);
    problem.add_constraint(budget, ComparisonOp::Le, radius);
    let solution = crate::lp::solve(&problem)?;
    let dist: Vec<f64> = q.iter().map(|&var| solution.var_value(var).max(0.0)).collect();
    Ok(SupportResult { value: solution.objective(), worst_case_distribution: dist })
}

/// Result of (robust) value iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub value: ValueFunction,
    pub policy: Policy,
    pub iterations: usize,
    pub residual: f64,
    #[serde(default = "yes")]
    pub converged: bool,
}

fn yes() -> bool {
    true
}

/// Result of (robust) policy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: ValueFunction,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn check_set(mdp: &TabularMDP, unc: &UncertaintySet<'_>) -> Result<()> {
    if !mdp.kernel.same_shape(unc.center) {
        return Err(Error::ShapeMismatch("uncertainty set center differs from MDP".into()));
    }
    Ok(())
}

fn robust_q(
    mdp: &TabularMDP,
    unc: &UncertaintySet<'_>,
    v: &[f64],
    order: &ValueOrder,
    s: usize,
    a: usize,
) -> f64 {
    let sigma = support_value_ordered(unc.center.row(s, a), v, order, unc.radius_at(s, a));
    mdp.reward(s, a) + mdp.gamma * sigma
}

fn bellman_optimality(
    mdp: &TabularMDP,
    unc: &UncertaintySet<'_>,
    v: &[f64],
    out: &mut [f64],
) {
    let order = ValueOrder::new(v);
    for (s, slot) in out.iter_mut().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for a in 0..mdp.num_actions() {
            best = best.max(robust_q(mdp, unc, v, &order, s, a));
        }
        *slot = best;
    }
}

/// One application of the robust Bellman optimality operator.
pub fn robust_bellman_update(
    mdp: &TabularMDP,
    unc: &UncertaintySet<'_>,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_set(mdp, unc)?;
    if v.len() != mdp.num_states() {
        return Err(Error::DimensionMismatch { expected: mdp.num_states(), found: v.len() });
    }
    let mut out = vec![0.0; v.len()];
    bellman_optimality(mdp, unc, v, &mut out);
    Ok(out)
}

/// Greedy deterministic policy for `v`; ties go to the lowest action index.
pub fn greedy_policy(mdp: &TabularMDP, unc: &UncertaintySet<'_>, v: &[f64]) -> Policy {
    let order = ValueOrder::new(v);
    let actions = (0..mdp.num_states())
        .map(|s| {
            let mut best = 0;
            let mut best_q = f64::NEG_INFINITY;
            for a in 0..mdp.num_actions() {
                let q = robust_q(mdp, unc, v, &order, s, a);
                if q > best_q {
                    best_q = q;
                    best = a;
                }
            }
            best
        })
        .collect();
    Policy::Deterministic(actions)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Robust value iteration from `V₀ = 0`, stopping when the sup-norm residual
/// drops to `tol` or after `max_iters` sweeps.
pub fn robust_value_iteration(
    mdp: &TabularMDP,
    unc: &UncertaintySet<'_>,
    max_iters: usize,
    tol: f64,
) -> Result<PlanResult> {
    check_set(mdp, unc)?;
    let n = mdp.num_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        bellman_optimality(mdp, unc, &v, &mut next);
        residual = sup_diff(&next, &v);
        std::mem::swap(&mut v, &mut next);
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    let policy = greedy_policy(mdp, unc, &v);
    Ok(PlanResult {
        value: ValueFunction(v),
        policy,
        iterations,
        residual,
        converged: residual <= tol,
    })
}

/// Robust evaluation of a fixed policy from `V₀ = 0`.
pub fn robust_policy_evaluation(
    mdp: &TabularMDP,
    unc: &UncertaintySet<'_>,
    policy: &Policy,
    max_iters: usize,
    tol: f64,
) -> Result<EvalResult> {
    check_set(mdp, unc)?;
    policy.validate(mdp.num_states(), mdp.num_actions())?;
    let n = mdp.num_states();
    let probs: Vec<Vec<(usize, f64)>> = (0..n).map(|s| policy.action_probs(s)).collect();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let order = ValueOrder::new(&v);
        for (s, slot) in next.iter_mut().enumerate() {
            *slot = probs[s]
                .iter()
                .map(|&(a, pa)| pa * robust_q(mdp, unc, &v, &order, s, a))
                .sum();
        }
        residual = sup_diff(&next, &v);
        std::mem::swap(&mut v, &mut next);
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    Ok(EvalResult { value: ValueFunction(v), iterations, residual, converged: residual <= tol })
}

/// Standard (non-robust) value iteration on the MDP's own kernel, used as the
/// reference for the zero-radius reduction.
pub fn value_iteration(mdp: &TabularMDP, max_iters: usize, tol: f64) -> PlanResult {
    let n = mdp.num_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let q = |v: &[f64], s: usize, a: usize| mdp.reward(s, a) + mdp.gamma * dot(mdp.kernel.row(s, a), v);
    while iterations < max_iters {
        for (s, slot) in next.iter_mut().enumerate() {
            *slot = (0..mdp.num_actions()).map(|a| q(&v, s, a)).fold(f64::NEG_INFINITY, f64::max);
        }
        residual = sup_diff(&next, &v);
        std::mem::swap(&mut v, &mut next);
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    let actions = (0..n)
        .map(|s| {
            let mut best = 0;
            for a in 1..mdp.num_actions() {
                if q(&v, s, a) > q(&v, s, best) {
                    best = a;
                }
            }
            best
        })
        .collect();
    PlanResult {
        value: ValueFunction(v),
        policy: Policy::Deterministic(actions),
        iterations,
        residual,
        converged: residual <= tol,
    }
}

/// State-averaged value `(1/S)·Σ V(s)`.
pub fn average_value(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Radius, TransitionKernel};
    use proptest::prelude::*;

    fn simplex(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    }

    #[test]
    fn zero_radius_is_the_dot_product() {
        let r = support_tv(&[0.2, 0.3, 0.5], &[1.0, 4.0, -2.0], 0.0).unwrap();
        assert_eq!(r.value, 0.2 * 1.0 + 0.3 * 4.0 + 0.5 * -2.0);
        assert_eq!(r.worst_case_distribution, vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn unit_radius_collapses_onto_argmin() {
        let r = support_tv(&[0.2, 0.3, 0.5], &[1.0, 4.0, -2.0], 1.0).unwrap();
        assert!((r.value + 2.0).abs() < 1e-15);
        assert_eq!(r.worst_case_distribution, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn small_ball_example() {
        let r = support_tv(&[0.5, 0.5, 0.0], &[1.0, 0.0, 2.0], 0.2).unwrap();
        assert!((r.value - 0.3).abs() < 1e-15);
        assert!((r.worst_case_distribution[0] - 0.3).abs() < 1e-15);
        assert!((r.worst_case_distribution[1] - 0.7).abs() < 1e-15);
        let lp = support_tv_lp_oracle(&[0.5, 0.5, 0.0], &[1.0, 0.0, 2.0], 0.2).unwrap();
        assert!((lp.value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn point_mass_half_radius() {
        let v = [3.0, -1.0, 2.0];
        let r = support_tv(&[0.0, 0.0, 1.0], &v, 0.5).unwrap();
        assert!((r.value - (0.5 * -1.0 + 0.5 * 2.0)).abs() < 1e-15);
        let lp = support_tv_lp_oracle(&[0.0, 0.0, 1.0], &v, 0.5).unwrap();
        assert!((lp.value - r.value).abs() < 1e-9);
    }

    #[test]
    fn invalid_radius() {
        assert!(matches!(support_tv(&[1.0], &[0.0], 1.5), Err(Error::InvalidRadius(_))));
        assert!(matches!(support_tv(&[1.0], &[0.0], -0.1), Err(Error::InvalidRadius(_))));
    }

    #[test]
    fn single_state_value() {
        let mdp = TabularMDP::new(TransitionKernel::uniform(1, 2), vec![0.5, 1.0], 0.9).unwrap();
        for r in [0.0, 0.4, 1.0] {
            let radius = Radius::Scalar(r);
            let unc = UncertaintySet::new(&mdp.kernel, &radius).unwrap();
            let plan = robust_value_iteration(&mdp, &unc, 10_000, 1e-12).unwrap();
            assert!((plan.value[0] - 10.0).abs() < 1e-9);
            assert_eq!(plan.policy, Policy::Deterministic(vec![1]));
        }
    }

    #[test]
    fn two_state_chain_matches_linear_solve() {
        // s0 -> s1 -> s0 deterministically, r = (1, 0):
        // V0 = 1 + γ V1, V1 = γ V0  =>  V0 = 1 / (1 − γ²).
        let k = TransitionKernel::from_rows(vec![
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        ])
        .unwrap();
        let mdp = TabularMDP::new(k, vec![1.0, 1.0, 0.0, 0.0], 0.9).unwrap();
        let radius = Radius::Scalar(0.0);
        let unc = UncertaintySet::new(&mdp.kernel, &radius).unwrap();
        let plan = robust_value_iteration(&mdp, &unc, 10_000, 1e-12).unwrap();
        let v0 = 1.0 / (1.0 - 0.81);
        assert!((plan.value[0] - v0).abs() < 1e-9);
        assert!((plan.value[1] - 0.9 * v0).abs() < 1e-9);
        assert!(plan.converged);
    }

    #[test]
    fn symmetric_mdp_gives_symmetric_values() {
        let k = TransitionKernel::from_rows(vec![
            vec![vec![0.7, 0.3], vec![0.2, 0.8]],
            vec![vec![0.3, 0.7], vec![0.8, 0.2]],
        ])
        .unwrap();
        let mdp = TabularMDP::new(k, vec![1.0, 0.0, 1.0, 0.0], 0.9).unwrap();
        let radius = Radius::Scalar(0.1);
        let unc = UncertaintySet::new(&mdp.kernel, &radius).unwrap();
        let pi = Policy::uniform(2, 2);
        let ev = robust_policy_evaluation(&mdp, &unc, &pi, 10_000, 1e-12).unwrap();
        assert!((ev.value[0] - ev.value[1]).abs() < 1e-9);
    }

    #[test]
    fn average_value_examples() {
        assert_eq!(average_value(&[3.0, 3.0, 3.0]), 3.0);
        assert_eq!(average_value(&[0.0, 2.0]), 1.0);
    }

    #[test]
    fn plan_result_json_shape() {
        let plan = PlanResult {
            value: ValueFunction(vec![1.0, 2.0]),
            policy: Policy::Deterministic(vec![0, 1]),
            iterations: 3,
            residual: 0.0,
            converged: true,
        };
        let text = serde_json::to_string(&plan).unwrap();
        assert!(text.starts_with(r#"{"value":[1.0,2.0],"policy":[0,1],"iterations":3,"residual":0.0"#));
    }

    fn random_mdp(seed: u64, states: usize, actions: usize) -> TabularMDP {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        for _ in 0..states * actions {
            let row: Vec<f64> = (0..states)
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() })
                .collect();
            let row = if row.iter().sum::<f64>() == 0.0 { vec![1.0; states] } else { row };
            data.extend(simplex(row));
        }
        let k = TransitionKernel::from_flat(states, actions, data).unwrap();
        let rewards = (0..states * actions).map(|_| rng.gen::<f64>()).collect();
        TabularMDP::new(k, rewards, 0.9).unwrap()
    }

    /// Policy evaluation by Gaussian elimination on `(I − γP_π) V = r_π`.
    fn exact_evaluation(mdp: &TabularMDP, actions: &[usize]) -> Vec<f64> {
        let n = mdp.num_states();
        let mut m = vec![vec![0.0; n + 1]; n];
        for s in 0..n {
            let row = mdp.kernel.row(s, actions[s]);
            for j in 0..n {
                m[s][j] = if s == j { 1.0 } else { 0.0 } - mdp.gamma * row[j];
            }
            m[s][n] = mdp.reward(s, actions[s]);
        }
        for c in 0..n {
            let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            m.swap(c, p);
            for r in 0..n {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for k in c..=n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
        (0..n).map(|s| m[s][n] / m[s][s]).collect()
    }

    #[test]
    fn zero_radius_evaluation_matches_linear_solve() {
        for seed in 0..5 {
            let mdp = random_mdp(seed, 12, 3);
            let actions: Vec<usize> = (0..12).map(|s| (s + seed as usize) % 3).collect();
            let radius = Radius::Scalar(0.0);
            let unc = UncertaintySet::new(&mdp.kernel, &radius).unwrap();
            let ev = robust_policy_evaluation(
                &mdp,
                &unc,
                &Policy::Deterministic(actions.clone()),
                10_000,
                1e-12,
            )
            .unwrap();
            let exact = exact_evaluation(&mdp, &actions);
            for (a, b) in ev.value.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_radius_planning_is_plain_value_iteration() {
        for seed in 0..5 {
            let mdp = random_mdp(100 + seed, 15, 4);
            let radius = Radius::Scalar(0.0);
            let unc = UncertaintySet::new(&mdp.kernel, &radius).unwrap();
            let robust = robust_value_iteration(&mdp, &unc, 10_000, 1e-8).unwrap();
            let plain = value_iteration(&mdp, 10_000, 1e-8);
            assert_eq!(robust, plain);
        }
    }

    #[test]
    fn larger_radius_is_more_pessimistic() {
        let mdp = random_mdp(7, 10, 3);
        let mut previous: Option<Vec<f64>> = None;
        for r in [0.0, 0.05, 0.2, 0.5, 1.0] {
            let radius = Radius::Scalar(r);
            let unc = UncertaintySet::new(&mdp.kernel, &radius).unwrap();
            let v = robust_value_iteration(&mdp, &unc, 10_000, 1e-11).unwrap().value.0;
            if let Some(prev) = &previous {
                for (a, b) in v.iter().zip(prev) {
                    assert!(*a <= b + 1e-9);
                }
            }
            previous = Some(v);
        }
    }

    fn arb_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (2usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n),
                prop::collection::vec(prop_oneof![Just(1.0), -5.0..5.0f64], n),
                0.0..=1.0f64,
            )
                .prop_filter_map("empty simplex", |(p, v, r)| {
                    (p.iter().sum::<f64>() > 1e-6).then(|| (simplex(p), v, r))
                })
        })
    }

    proptest! {
        #[test]
        fn greedy_matches_lp((p, v, r) in arb_instance()) {
            let g = support_tv(&p, &v, r).unwrap();
            let lp = support_tv_lp_oracle(&p, &v, r).unwrap();
            prop_assert!((g.value - lp.value).abs() <= 1e-9);
            let q = &g.worst_case_distribution;
            prop_assert!(crate::mdp::tv_distance(q, &p).unwrap() <= r + 1e-9);
            prop_assert!((dot(q, &v) - g.value).abs() <= 1e-9);
            prop_assert!(q.iter().all(|&x| x >= -1e-15));
        }

        #[test]
        fn support_is_bounded_and_monotone((p, v, r) in arb_instance(), extra in 0.0..1.0f64) {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let a = support_tv(&p, &v, r).unwrap().value;
            let b = support_tv(&p, &v, (r + extra).min(1.0)).unwrap().value;
            prop_assert!(a <= dot(&p, &v) + 1e-12);
            prop_assert!(a >= lo - 1e-12);
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn support_translates((p, v, r) in arb_instance(), c in -10.0..10.0f64) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = support_tv(&p, &v, r).unwrap().value;
            let b = support_tv(&p, &shifted, r).unwrap().value;
            prop_assert!((a + c - b).abs() <= 1e-9);
        }

        #[test]
        fn bellman_update_contracts(seed in 0u64..1000, r in 0.0..=1.0f64) {
            use rand::{Rng, SeedableRng};
            let mdp = random_mdp(seed, 6, 2);
            let radius = Radius::Scalar(r);
            let unc = UncertaintySet::new(&mdp.kernel, &radius).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let u: Vec<f64> = (0..6).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let w: Vec<f64> = (0..6).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let tu = robust_bellman_update(&mdp, &unc, &u).unwrap();
            let tw = robust_bellman_update(&mdp, &unc, &w).unwrap();
            prop_assert!(sup_diff(&tu, &tw) <= (mdp.gamma + 1e-12) * sup_diff(&u, &w));
        }

        #[test]
        fn robust_evaluation_is_pessimistic(seed in 0u64..500, r in 0.01..=1.0f64) {
            let mdp = random_mdp(seed, 5, 2);
            let pi = Policy::uniform(5, 2);
            let zero = Radius::Scalar(0.0);
            let radius = Radius::Scalar(r);
            let plain = robust_policy_evaluation(
                &mdp, &UncertaintySet::new(&mdp.kernel, &zero).unwrap(), &pi, 10_000, 1e-10).unwrap();
            let robust = robust_policy_evaluation(
                &mdp, &UncertaintySet::new(&mdp.kernel, &radius).unwrap(), &pi, 10_000, 1e-10).unwrap();
            for (a, b) in robust.value.iter().zip(plain.value.iter()) {
                prop_assert!(*a <= b + 1e-8);
            }
        }
    }
}

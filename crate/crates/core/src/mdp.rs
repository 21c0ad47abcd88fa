//! Finite MDP primitives: simplex points, transition kernels, reward tables,
//! policies, value vectors, TV uncertainty sets and the distances between
//! next-state distributions.

use std::ops::Deref;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries and row sums are accepted within this tolerance and silently
/// renormalized.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Checks that `row` is a simplex point within [`SIMPLEX_TOL`] and
/// renormalizes it in place. Rows within `1e-12` of summing to one are left
/// as they are, which keeps the operation idempotent.
pub fn normalize_row(row: &mut [f64]) -> Result<()> {
    let mut sum = 0.0;
    for (index, p) in row.iter_mut().enumerate() {
        if !p.is_finite() || *p < -SIMPLEX_TOL {
            return Err(Error::NegativeMass { index, value: *p });
        }
        if *p < 0.0 {
            *p = 0.0;
        }
        sum += *p;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::RowSumMismatch { sum });
    }
    if (sum - 1.0).abs() > 1e-12 {
        row.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

/// A probability vector over next states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        normalize_row(&mut probs)?;
        Ok(Distribution(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Distribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Distribution {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Distribution::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Vec<f64> {
        d.0
    }
}

/// Next-state distributions for every (state, action) pair, stored densely in
/// row-major `(s, a, s')` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    states: usize,
    actions: usize,
    data: Vec<f64>,
}

impl TransitionKernel {
    /// Builds a kernel from flat `(s, a, s')` data, validating and
    /// renormalizing every row.
    pub fn from_flat(states: usize, actions: usize, mut data: Vec<f64>) -> Result<Self> {
        if states == 0 || actions == 0 {
            return Err(Error::ShapeMismatch("S and A must be positive".into()));
        }
        if data.len() != states * actions * states {
            return Err(Error::DimensionMismatch {
                expected: states * actions * states,
                found: data.len(),
            });
        }
        for (i, row) in data.chunks_mut(states).enumerate() {
            normalize_row(row).map_err(|e| e.at(i / actions, i % actions))?;
        }
        Ok(TransitionKernel { states, actions, data })
    }

    /// Builds a kernel from nested `[s][a][s']` rows.
    pub fn from_rows(rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let states = rows.len();
        let actions = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(states * actions * states);
        for (s, per_action) in rows.into_iter().enumerate() {
            if per_action.len() != actions {
                return Err(Error::ShapeMismatch(format!(
                    "state {s} has {} actions, expected {actions}",
                    per_action.len()
                )));
            }
            for (a, row) in per_action.into_iter().enumerate() {
                if row.len() != states {
                    return Err(Error::DimensionMismatch { expected: states, found: row.len() }
                        .at(s, a));
                }
                data.extend(row);
            }
        }
        Self::from_flat(states, actions, data)
    }

    pub fn uniform(states: usize, actions: usize) -> Self {
        TransitionKernel {
            states,
            actions,
            data: vec![1.0 / states as f64; states * actions * states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.actions + a) * self.states;
        &self.data[start..start + self.states]
    }

    /// Rows in `(s, a)` order.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.states)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn same_shape(&self, other: &TransitionKernel) -> bool {
        self.states == other.states && self.actions == other.actions
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.states)
            .map(|s| (0..self.actions).map(|a| self.row(s, a).to_vec()).collect())
            .collect()
    }
}

/// Re-checks every row of an existing kernel against the simplex tolerance.
pub fn validate_kernel(kernel: &TransitionKernel) -> Result<()> {
    for (i, row) in kernel.rows().enumerate() {
        let mut copy = row.to_vec();
        normalize_row(&mut copy).map_err(|e| e.at(i / kernel.actions, i % kernel.actions))?;
    }
    Ok(())
}

#[inline]
pub(crate) fn tv_unchecked(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Total-variation distance `½·Σ|pᵢ − qᵢ|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    Ok(tv_unchecked(p, q))
}

/// Largest per-row TV distance between two kernels.
pub fn kernel_max_tv(p: &TransitionKernel, q: &TransitionKernel) -> Result<f64> {
    check_same_shape(p, q)?;
    Ok(p.rows().zip(q.rows()).map(|(a, b)| tv_unchecked(a, b)).fold(0.0, f64::max))
}

/// Row-averaged TV distance `(1/SA)·Σ tv(P^{s,a}, Q^{s,a})`.
pub fn kernel_mean_tv(p: &TransitionKernel, q: &TransitionKernel) -> Result<f64> {
    check_same_shape(p, q)?;
    let total: f64 = p.rows().zip(q.rows()).map(|(a, b)| tv_unchecked(a, b)).sum();
    Ok(total / (p.states * p.actions) as f64)
}

/// Per-row TV distances in `(s, a)` order.
pub fn kernel_row_tv(p: &TransitionKernel, q: &TransitionKernel) -> Result<Vec<f64>> {
    check_same_shape(p, q)?;
    Ok(p.rows().zip(q.rows()).map(|(a, b)| tv_unchecked(a, b)).collect())
}

fn check_same_shape(p: &TransitionKernel, q: &TransitionKernel) -> Result<()> {
    if !p.same_shape(q) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            p.states, p.actions, q.states, q.actions
        )));
    }
    Ok(())
}

/// `max − min` of the entries.
pub fn span(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

/// Symmetric, nonnegative ground cost between states with a zero diagonal.
/// Pseudometrics (zero off-diagonal entries) are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidCost(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let c = data[i * n + j];
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidCost(format!("entry ({i},{j}) = {c}")));
                }
                if (c - data[j * n + i]).abs() > 1e-12 * c.abs().max(1.0) {
                    return Err(Error::InvalidCost(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(CostMatrix { n, data })
    }

    /// Euclidean distance between per-state feature vectors.
    pub fn euclidean(features: &[Vec<f64>]) -> Result<Self> {
        let n = features.len();
        let dim = features.first().map_or(0, Vec::len);
        if features.iter().any(|f| f.len() != dim) {
            return Err(Error::InvalidCost("feature vectors of unequal dimension".into()));
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = features[i]
                    .iter()
                    .zip(&features[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Ok(CostMatrix { n, data })
    }

    /// The discrete metric: 1 off the diagonal.
    pub fn discrete(n: usize) -> Self {
        let mut data = vec![1.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 0.0);
        CostMatrix { n, data }
    }

    /// `|xᵢ − xⱼ|` for scalar positions, e.g. a value function.
    pub fn from_positions(x: &[f64]) -> Self {
        let n = x.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (x[i] - x[j]).abs();
            }
        }
        CostMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Wasserstein-1 distance under `cost`: the optimal value of the transport LP
/// with marginals `p` and `q`.
pub fn w1_distance(p: &[f64], q: &[f64], cost: &CostMatrix) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    if cost.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: cost.len() });
    }
    // Mass that stays in place costs nothing, so only the excess of p over q
    // has to be shipped to the deficit.
    let supply: Vec<(usize, f64)> =
        (0..p.len()).filter(|&i| p[i] > q[i]).map(|i| (i, p[i] - q[i])).collect();
    let demand: Vec<(usize, f64)> =
        (0..p.len()).filter(|&j| q[j] > p[j]).map(|j| (j, q[j] - p[j])).collect();
    if supply.is_empty() || demand.is_empty() {
        return Ok(0.0);
    }
    let total_supply: f64 = supply.iter().map(|x| x.1).sum();
    let total_demand: f64 = demand.iter().map(|x| x.1).sum();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut rows = vec![LinearExpr::empty(); supply.len()];
    let mut cols = vec![LinearExpr::empty(); demand.len()];
    for (k, &(i, _)) in supply.iter().enumerate() {
        for (l, &(j, _)) in demand.iter().enumerate() {
            let var = problem.add_var(cost.get(i, j), (0.0, f64::INFINITY));
            rows[k].add(var, 1.0);
            cols[l].add(var, 1.0);
        }
    }
    // Balance the two sides exactly so rounding cannot make the LP infeasible.
    let scale = total_supply / total_demand;
    for (expr, &(_, mass)) in rows.into_iter().zip(&supply) {
        problem.add_constraint(expr, ComparisonOp::Eq, mass);
    }
    for (expr, &(_, mass)) in cols.into_iter().zip(&demand) {
        problem.add_constraint(expr, ComparisonOp::Eq, mass * scale);
    }
    let solution = crate::lp::solve(&problem)?;
    Ok(solution.objective().max(0.0))
}

/// Finite discounted MDP: kernel, reward table `r(s, a)` and discount.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMDP {
    pub kernel: TransitionKernel,
    rewards: Vec<f64>,
    pub gamma: f64,
    /// Whether rewards were affinely mapped into `[0, 1]`.
    pub rewards_rescaled: bool,
}

impl TabularMDP {
    pub fn new(kernel: TransitionKernel, rewards: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidDiscount(gamma));
        }
        let expected = kernel.num_states() * kernel.num_actions();
        if rewards.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: rewards.len() });
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidConstants("non-finite reward".into()));
        }
        Ok(TabularMDP { kernel, rewards, gamma, rewards_rescaled: false })
    }

    pub fn num_states(&self) -> usize {
        self.kernel.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.kernel.num_actions()
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.kernel.num_actions() + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Same MDP with a different kernel.
    pub fn with_kernel(&self, kernel: TransitionKernel) -> Result<Self> {
        if !kernel.same_shape(&self.kernel) {
            return Err(Error::ShapeMismatch("kernel shape differs from MDP".into()));
        }
        Ok(TabularMDP { kernel, ..self.clone() })
    }

    /// Affine map of the rewards onto `[0, 1]` (`(r − min)/(max − min)`).
    /// A constant reward table maps to all zeros.
    pub fn rescaled(&self) -> Self {
        let lo = self.rewards.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = hi - lo;
        let rewards = self
            .rewards
            .iter()
            .map(|r| if width > 0.0 { (r - lo) / width } else { 0.0 })
            .collect();
        TabularMDP { rewards, rewards_rescaled: true, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MdpDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<MdpDocument>(text)?.try_into()
    }
}

/// JSON layout: `{"S", "A", "gamma", "rewards": [[..]], "kernel": [[[..]]]}`
/// with `(s, a, s')` nesting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDocument {
    #[serde(rename = "S")]
    pub states: usize,
    #[serde(rename = "A")]
    pub actions: usize,
    pub gamma: f64,
    pub rewards: Vec<Vec<f64>>,
    pub kernel: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rewards_rescaled: bool,
}

impl From<&TabularMDP> for MdpDocument {
    fn from(mdp: &TabularMDP) -> Self {
        let a = mdp.num_actions();
        MdpDocument {
            states: mdp.num_states(),
            actions: a,
            gamma: mdp.gamma,
            rewards: mdp.rewards.chunks(a).map(<[f64]>::to_vec).collect(),
            kernel: mdp.kernel.to_nested(),
            rewards_rescaled: mdp.rewards_rescaled,
        }
    }
}

impl TryFrom<MdpDocument> for TabularMDP {
    type Error = Error;
    fn try_from(doc: MdpDocument) -> Result<Self> {
        let kernel = TransitionKernel::from_rows(doc.kernel)?;
        if kernel.num_states() != doc.states || kernel.num_actions() != doc.actions {
            return Err(Error::ShapeMismatch("S/A fields disagree with kernel".into()));
        }
        if doc.rewards.len() != doc.states || doc.rewards.iter().any(|r| r.len() != doc.actions) {
            return Err(Error::ShapeMismatch("reward table is not S x A".into()));
        }
        let mut mdp = TabularMDP::new(kernel, doc.rewards.concat(), doc.gamma)?;
        mdp.rewards_rescaled = doc.rewards_rescaled;
        Ok(mdp)
    }
}

/// Stationary policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Policy {
    /// One action index per state.
    Deterministic(Vec<usize>),
    /// `S × A` action probabilities, one row per state.
    Stochastic(Vec<Vec<f64>>),
}

impl Policy {
    pub fn uniform(states: usize, actions: usize) -> Self {
        Policy::Stochastic(vec![vec![1.0 / actions as f64; actions]; states])
    }

    pub fn num_states(&self) -> usize {
        match self {
            Policy::Deterministic(v) => v.len(),
            Policy::Stochastic(v) => v.len(),
        }
    }

    pub fn validate(&self, states: usize, actions: usize) -> Result<()> {
        if self.num_states() != states {
            return Err(Error::InvalidPolicy(format!(
                "policy covers {} states, MDP has {states}",
                self.num_states()
            )));
        }
        match self {
            Policy::Deterministic(v) => {
                if let Some((s, a)) = v.iter().enumerate().find(|(_, &a)| a >= actions) {
                    return Err(Error::InvalidPolicy(format!("action {a} at state {s} >= A")));
                }
            }
            Policy::Stochastic(rows) => {
                for (s, row) in rows.iter().enumerate() {
                    if row.len() != actions {
                        return Err(Error::InvalidPolicy(format!("row {s} has wrong length")));
                    }
                    let mut copy = row.clone();
                    normalize_row(&mut copy)
                        .map_err(|e| Error::InvalidPolicy(format!("row {s}: {e}")))?;
                }
            }
        }
        Ok(())
    }

    /// Nonzero `(action, probability)` pairs at state `s`.
    pub fn action_probs(&self, s: usize) -> Vec<(usize, f64)> {
        match self {
            Policy::Deterministic(v) => vec![(v[s], 1.0)],
            Policy::Stochastic(rows) => {
                rows[s].iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect()
            }
        }
    }
}

/// State values `V(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn zeros(states: usize) -> Self {
        ValueFunction(vec![0.0; states])
    }

    pub fn span(&self) -> f64 {
        span(&self.0)
    }

    /// Sup-norm distance to another value vector.
    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Deref for ValueFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// TV radius of an uncertainty set: global or per `(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Radius {
    Scalar(f64),
    PerPair(Vec<f64>),
}

/// `(s, a)`-rectangular product of TV balls around the rows of `center`.
#[derive(Debug, Clone, Copy)]
pub struct UncertaintySet<'k> {
    pub center: &'k TransitionKernel,
    radius: &'k Radius,
}

impl<'k> UncertaintySet<'k> {
    pub fn new(center: &'k TransitionKernel, radius: &'k Radius) -> Result<Self> {
        let check = |r: f64| {
            if (0.0..=1.0).contains(&r) {
                Ok(())
            } else {
                Err(Error::InvalidRadius(r))
            }
        };
        match radius {
            Radius::Scalar(r) => check(*r)?,
            Radius::PerPair(rs) => {
                let expected = center.num_states() * center.num_actions();
                if rs.len() != expected {
                    return Err(Error::DimensionMismatch { expected, found: rs.len() });
                }
                rs.iter().try_for_each(|&r| check(r))?;
            }
        }
        Ok(UncertaintySet { center, radius })
    }

    #[inline]
    pub fn radius_at(&self, s: usize, a: usize) -> f64 {
        match self.radius {
            Radius::Scalar(r) => *r,
            Radius::PerPair(rs) => rs[s * self.center.num_actions() + a],
        }
    }

    pub fn is_point(&self) -> bool {
        match self.radius {
            Radius::Scalar(r) => *r == 0.0,
            Radius::PerPair(rs) => rs.iter().all(|&r| r == 0.0),
        }
    }
}

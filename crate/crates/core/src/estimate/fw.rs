//! Pairwise Frank–Wolfe for maximizing a smooth concave function over a
//! polytope that is only accessible through a linear maximization oracle.
//!
//! Iterates are kept as convex combinations of oracle vertices (plus the
//! starting point). Each step moves weight from the worst active atom to the
//! oracle vertex, with an exact line search along that direction. Objectives
//! that report their curvature also get Newton steps on the atom weights,
//! which settle the iterate on the optimal face in a handful of oracle calls.

use super::lds::cholesky_solve;
use crate::error::Result;

/// Newton steps on the atom weights after each pairwise step.
const CORRECTIVE_STEPS: usize = 8;
/// Atoms whose weight falls below this are dropped.
const WEIGHT_FLOOR: f64 = 1e-14;

/// A concave objective on a convex set.
pub trait ConcaveObjective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Derivative of `γ ↦ f(x + γ·d)`; must be nonincreasing in `γ`.
    fn slope(&self, x: &[f64], d: &[f64], gamma: f64) -> f64;
    /// Diagonal of `−∇²f(x)` for separable objectives.
    fn curvature(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Returns a point of the feasible set maximizing `g·v`.
pub trait LinearOracle {
    fn argmax(&mut self, g: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct FwOptions {
    /// Stop once the duality gap `g·(s − x)` is at most this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        FwOptions { tol: 1e-8, max_iters: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct FwOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Root of the nonincreasing `slope` on `[0, hi]`, or `hi` if it stays
/// nonnegative there.
fn line_search<F: ConcaveObjective + ?Sized>(obj: &F, x: &[f64], d: &[f64], hi: f64) -> f64 {
    if obj.slope(x, d, hi) >= 0.0 {
        return hi;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..64 {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if obj.slope(x, d, mid) >= 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    lo
}

/// Maximizes `obj` from the feasible point `x0`.
pub fn maximize<F, O>(obj: &F, oracle: &mut O, x0: Vec<f64>, opts: FwOptions) -> Result<FwOutcome>
where
    F: ConcaveObjective + ?Sized,
    O: LinearOracle + ?Sized,
{
    let n = x0.len();
    let mut atoms: Vec<Vec<f64>> = vec![x0.clone()];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        obj.gradient(&x, &mut g);
        let s = oracle.argmax(&g)?;
        gap = dot(&g, &s) - dot(&g, &x);
        if gap <= opts.tol {
            break;
        }
        iterations += 1;
        let mut away = 0;
        let mut away_score = f64::INFINITY;
        for (k, atom) in atoms.iter().enumerate() {
            let score = dot(&g, atom);
            if score < away_score {
                away_score = score;
                away = k;
            }
        }
        for j in 0..n {
            d[j] = s[j] - atoms[away][j];
        }
        let step = line_search(obj, &x, &d, weights[away]);
        if step <= 0.0 {
            break;
        }
        for j in 0..n {
            x[j] += step * d[j];
        }
        match atoms.iter().position(|a| *a == s) {
            Some(k) => weights[k] += step,
            None => {
                atoms.push(s);
                weights.push(step);
            }
        }
        if step >= weights[away] {
            atoms.swap_remove(away);
            weights.swap_remove(away);
            // Rebuild from the atoms so dropped weight leaves no residue.
            rebuild(&atoms, &weights, &mut x);
        } else {
            weights[away] -= step;
        }
        correct(obj, &mut atoms, &mut weights, &mut x, opts.tol);
    }
    let converged = gap <= opts.tol;
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(FwOutcome { x, iterations, gap, converged })
}

fn rebuild(atoms: &[Vec<f64>], weights: &[f64], x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = 0.0);
    for (atom, &w) in atoms.iter().zip(weights) {
        for (xj, aj) in x.iter_mut().zip(atom) {
            *xj += w * aj;
        }
    }
}

/// Maximizes over the hull of the current atoms with Newton steps in the
/// weights: the quadratic model `gᵀδ − ½ δᵀ(VᵀHV)δ` subject to `Σδ = 0`,
/// followed by an exact line search that stops where a weight reaches zero.
fn correct<F: ConcaveObjective + ?Sized>(
    obj: &F,
    atoms: &mut Vec<Vec<f64>>,
    weights: &mut Vec<f64>,
    x: &mut Vec<f64>,
    tol: f64,
) {
    let n = x.len();
    let mut g = vec![0.0; n];
    for _ in 0..CORRECTIVE_STEPS {
        let k = atoms.len();
        if k < 2 {
            return;
        }
        let Some(h) = obj.curvature(x) else { return };
        obj.gradient(x, &mut g);
        let ga: Vec<f64> = atoms.iter().map(|a| dot(&g, a)).collect();
        let hi = ga.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ga.iter().copied().fold(f64::INFINITY, f64::min);
        if hi - lo <= tol {
            return;
        }
        let mut m = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..=a {
                let v: f64 = (0..n).map(|j| h[j] * atoms[a][j] * atoms[b][j]).sum();
                m[a][b] = v;
                m[b][a] = v;
            }
        }
        let scale = (0..k).map(|a| m[a][a]).fold(0.0, f64::max);
        if !(scale > 0.0 && scale.is_finite()) {
            return;
        }
        for (a, row) in m.iter_mut().enumerate() {
            row[a] += 1e-10 * scale;
        }
        let ones = vec![1.0; k];
        let (Some(u), Some(v)) = (cholesky_solve(m.clone(), &ga), cholesky_solve(m, &ones)) else {
            return;
        };
        let mu = -u.iter().sum::<f64>() / v.iter().sum::<f64>();
        let delta: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + mu * b).collect();
        let mut cap = f64::INFINITY;
        for (w, dk) in weights.iter().zip(&delta) {
            if *dk < 0.0 {
                cap = cap.min(w / -dk);
            }
        }
        if !cap.is_finite() {
            return;
        }
        let mut d = vec![0.0; n];
        for (atom, dk) in atoms.iter().zip(&delta) {
            for (dj, aj) in d.iter_mut().zip(atom) {
                *dj += dk * aj;
            }
        }
        let step = line_search(obj, x, &d, cap);
        if !(step > 0.0) {
            return;
        }
        for (w, dk) in weights.iter_mut().zip(&delta) {
            *w += step * dk;
        }
        let mut i = 0;
        while i < atoms.len() {
            if weights[i] <= WEIGHT_FLOOR {
                atoms.swap_remove(i);
                weights.swap_remove(i);
            } else {
                i += 1;
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        rebuild(atoms, weights, x);
    }
}

/// Interior floor used when evaluating the log-likelihood gradient.
pub const EPSILON: f64 = 1e-12;

/// Mean multinomial log-likelihood `(1/n)·Σ N_j·log q_j` with `0·log 0 = 0`.
#[derive(Debug, Clone)]
pub struct LogLikelihood {
    weights: Vec<f64>,
}

impl LogLikelihood {
    pub fn new(counts: &[u64]) -> Self {
        let n: u64 = counts.iter().sum();
        let weights = counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect();
        LogLikelihood { weights }
    }
}

impl ConcaveObjective for LogLikelihood {
    fn value(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, q)| w * q.ln())
            .sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &w), &q) in out.iter_mut().zip(&self.weights).zip(x) {
            *o = if w > 0.0 { w / q.max(EPSILON) } else { 0.0 };
        }
    }

    fn slope(&self, x: &[f64], d: &[f64], gamma: f64) -> f64 {
        let mut total = 0.0;
        for ((&w, &q), &dj) in self.weights.iter().zip(x).zip(d) {
            if w > 0.0 && dj != 0.0 {
                let at = q + gamma * dj;
                if at <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += w * dj / at;
            }
        }
        total
    }

    fn curvature(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.weights.iter().zip(x).map(|(&w, &q)| if w > 0.0 { w / (q * q).max(EPSILON) } else { 0.0 }).collect())
    }
}

/// Linear maximization over the probability simplex: a vertex at the
/// lowest-index argmax of `g`.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOracle;

impl LinearOracle for SimplexOracle {
    fn argmax(&mut self, g: &[f64]) -> Result<Vec<f64>> {
        let mut best = 0;
        for (j, &v) in g.iter().enumerate() {
            if v > g[best] {
                best = j;
            }
        }
        let mut e = vec![0.0; g.len()];
        e[best] = 1.0;
        Ok(e)
    }
}

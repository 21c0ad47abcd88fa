//! Brute-force reference solutions for small state spaces, written
//! independently of the production estimators so the two can be compared.
//!
//! The simplex is scanned exhaustively on the lattice `k/1000`, pruning
//! branches whose unconstrained likelihood bound cannot beat the incumbent.
//! A final scan at step `1/10000` inside a `±0.006` box around the `1/1000`
//! winner removes most of the lattice error near faces where several
//! constraints meet.

/// Feasible-set membership test for the grid scan.
#[derive(Debug, Clone)]
pub enum GridConstraint {
    None,
    Tv { center: Vec<f64>, d: f64 },
    /// W1 under the cost `|x_i − x_j|` for scalar positions `x`.
    W1Line { center: Vec<f64>, positions: Vec<f64>, d: f64 },
    Moment { features: Vec<Vec<f64>>, lo: Vec<f64>, hi: Vec<f64> },
    Upper { caps: Vec<f64> },
}

const FEAS_TOL: f64 = 1e-12;

fn line_w1(p: &[f64], q: &[f64], positions: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
    let (mut fp, mut fq, mut total) = (0.0, 0.0, 0.0);
    for w in order.windows(2) {
        fp += p[w[0]];
        fq += q[w[0]];
        total += (fp - fq).abs() * (positions[w[1]] - positions[w[0]]);
    }
    total
}

impl GridConstraint {
    /// The same constraint loosened by `eps` (in TV units; W1 radii scale
    /// with the spread of the positions).
    pub fn relaxed(&self, eps: f64) -> GridConstraint {
        match self.clone() {
            GridConstraint::None => GridConstraint::None,
            GridConstraint::Tv { center, d } => GridConstraint::Tv { center, d: d + eps },
            GridConstraint::W1Line { center, positions, d } => {
                let lo = positions.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                GridConstraint::W1Line { center, d: d + eps * (hi - lo).max(1.0), positions }
            }
            GridConstraint::Moment { features, lo, hi } => {
                let scale: Vec<f64> = features
                    .iter()
                    .map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12))
                    .collect();
                GridConstraint::Moment {
                    lo: lo.iter().zip(&scale).map(|(v, s)| v - eps * s).collect(),
                    hi: hi.iter().zip(&scale).map(|(v, s)| v + eps * s).collect(),
                    features,
                }
            }
            GridConstraint::Upper { caps } => {
                GridConstraint::Upper { caps: caps.iter().map(|c| c + eps).collect() }
            }
        }
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        match self {
            GridConstraint::None => true,
            GridConstraint::Tv { center, d } => {
                let tv: f64 = 0.5 * q.iter().zip(center).map(|(a, b)| (a - b).abs()).sum::<f64>();
                tv <= d + FEAS_TOL
            }
            GridConstraint::W1Line { center, positions, d } => {
                line_w1(q, center, positions) <= d + FEAS_TOL
            }
            GridConstraint::Moment { features, lo, hi } => features.iter().enumerate().all(|(k, row)| {
                let m: f64 = row.iter().zip(q).map(|(a, b)| a * b).sum();
                m >= lo[k] - FEAS_TOL && m <= hi[k] + FEAS_TOL
            }),
            GridConstraint::Upper { caps } => q.iter().zip(caps).all(|(a, c)| *a <= c + FEAS_TOL),
        }
    }

    /// Necessary condition for some completion of `prefix` with total mass
    /// `rest` to be feasible. For `W1Line` the positions must be sorted.
    fn prefix_feasible(&self, prefix: &[f64], rest: f64) -> bool {
        let j = prefix.len();
        match self {
            GridConstraint::None => true,
            GridConstraint::Tv { center, d } => {
                let head: f64 = prefix.iter().zip(center).map(|(a, b)| (a - b).abs()).sum();
                let tail: f64 = center[j..].iter().sum();
                0.5 * (head + (rest - tail).abs()) <= d + FEAS_TOL
            }
            GridConstraint::W1Line { center, positions, d } => {
                let (mut fq, mut fp, mut total) = (0.0, 0.0, 0.0);
                for i in 0..j.min(positions.len() - 1) {
                    fq += prefix[i];
                    fp += center[i];
                    total += (fq - fp).abs() * (positions[i + 1] - positions[i]);
                }
                total <= d + FEAS_TOL
            }
            GridConstraint::Moment { features, lo, hi } => features.iter().enumerate().all(|(k, row)| {
                let head: f64 = row.iter().zip(prefix).map(|(a, b)| a * b).sum();
                let tail = &row[j..];
                let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
                let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (reach_lo, reach_hi) =
                    if tail.is_empty() { (head, head) } else { (head + rest * min, head + rest * max) };
                reach_hi >= lo[k] - FEAS_TOL && reach_lo <= hi[k] + FEAS_TOL
            }),
            GridConstraint::Upper { caps } => prefix.iter().zip(caps).all(|(a, c)| *a <= c + FEAS_TOL),
        }
    }

    /// The constraint with coordinates reordered so that new coordinate `i`
    /// is old coordinate `order[i]`.
    fn permuted(&self, order: &[usize]) -> GridConstraint {
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        match self {
            GridConstraint::None => GridConstraint::None,
            GridConstraint::Tv { center, d } => GridConstraint::Tv { center: pick(center), d: *d },
            GridConstraint::W1Line { center, positions, d } => {
                GridConstraint::W1Line { center: pick(center), positions: pick(positions), d: *d }
            }
            GridConstraint::Moment { features, lo, hi } => GridConstraint::Moment {
                features: features.iter().map(|r| pick(r)).collect(),
                lo: lo.clone(),
                hi: hi.clone(),
            },
            GridConstraint::Upper { caps } => GridConstraint::Upper { caps: pick(caps) },
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub q: Vec<f64>,
    pub log_likelihood: f64,
}

struct Scan<'a> {
    counts: &'a [u64],
    constraint: &'a GridConstraint,
    resolution: i64,
    lo: &'a [i64],
    hi: &'a [i64],
    logs: Vec<f64>,
    /// `Σ_{i ≥ j} N_i` for each depth `j`.
    rest_counts: Vec<f64>,
    current: Vec<i64>,
    q: Vec<f64>,
    best: Option<(Vec<i64>, f64)>,
}

impl Scan<'_> {
    /// Largest `Σ_{i ≥ j} N_i log q_i` over any split of the remaining mass,
    /// ignoring the constraint: `q_i ∝ N_i`.
    fn bound(&self, j: usize, remaining: i64) -> f64 {
        let total = self.rest_counts[j];
        if total == 0.0 {
            return 0.0;
        }
        if remaining == 0 {
            return f64::NEG_INFINITY;
        }
        let mass = remaining as f64 / self.resolution as f64;
        self.counts[j..]
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| c as f64 * (c as f64 * mass / total).ln())
            .sum()
    }

    fn visit(&mut self, remaining: i64, partial: f64) {
        let j = self.current.len();
        let parts = self.counts.len();
        if let Some((_, best)) = &self.best {
            if partial + self.bound(j, remaining) <= *best {
                return;
            }
        }
        if j + 1 == parts {
            if remaining < self.lo[j] || remaining > self.hi[j] {
                return;
            }
            let ll = partial + self.term(j, remaining);
            if ll == f64::NEG_INFINITY || self.best.as_ref().is_some_and(|(_, b)| ll <= *b) {
                return;
            }
            self.current.push(remaining);
            for (slot, &k) in self.q.iter_mut().zip(&self.current) {
                *slot = k as f64 / self.resolution as f64;
            }
            if self.constraint.contains(&self.q) {
                self.best = Some((self.current.clone(), ll));
            }
            self.current.pop();
            return;
        }
        let rest_lo: i64 = self.lo[j + 1..].iter().sum();
        let rest_hi: i64 = self.hi[j + 1..].iter().sum();
        let from = self.lo[j].max(remaining - rest_hi);
        let to = self.hi[j].min(remaining - rest_lo);
        for k in from..=to {
            let t = self.term(j, k);
            if t == f64::NEG_INFINITY {
                continue;
            }
            self.current.push(k);
            self.q[j] = k as f64 / self.resolution as f64;
            let rest = (remaining - k) as f64 / self.resolution as f64;
            if self.constraint.prefix_feasible(&self.q[..=j], rest) {
                self.visit(remaining - k, partial + t);
            }
            self.current.pop();
        }
    }

    fn term(&self, j: usize, k: i64) -> f64 {
        if self.counts[j] > 0 {
            self.counts[j] as f64 * self.logs[k as usize]
        } else {
            0.0
        }
    }
}

/// Exhaustive branch-and-bound scan of the lattice points `k/resolution`
/// with `lo ≤ k ≤ hi` coordinatewise. `incumbent` must be a feasible point of
/// this lattice; it only speeds up pruning.
fn scan(
    counts: &[u64],
    constraint: &GridConstraint,
    resolution: i64,
    lo: &[i64],
    hi: &[i64],
    incumbent: Option<(Vec<i64>, f64)>,
) -> Option<(Vec<i64>, f64)> {
    let mut rest_counts = vec![0.0; counts.len() + 1];
    for j in (0..counts.len()).rev() {
        rest_counts[j] = rest_counts[j + 1] + counts[j] as f64;
    }
    let mut state = Scan {
        counts,
        constraint,
        resolution,
        lo,
        hi,
        logs: (0..=resolution).map(|k| (k as f64 / resolution as f64).ln()).collect(),
        rest_counts,
        current: Vec::with_capacity(counts.len()),
        q: vec![0.0; counts.len()],
        best: incumbent,
    };
    state.visit(resolution, 0.0);
    state.best
}

/// Best feasible lattice point for `Σ N_j log q_j`, or `None` if no lattice
/// point with finite likelihood is feasible.
pub fn grid_search(counts: &[u64], constraint: &GridConstraint) -> Option<GridResult> {
    let s = counts.len();
    assert!((2..=4).contains(&s), "grid oracle supports 2 to 4 states");
    let order: Vec<usize> = match constraint {
        GridConstraint::W1Line { positions, .. } => {
            let mut order: Vec<usize> = (0..s).collect();
            order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
            order
        }
        _ => (0..s).collect(),
    };
    let counts: Vec<u64> = order.iter().map(|&i| counts[i]).collect();
    let constraint = constraint.permuted(&order);
    let (counts, constraint) = (&counts[..], &constraint);
    const COARSE: i64 = 100;
    const FINE: i64 = 1000;
    const FINEST: i64 = 10_000;
    let scale = |found: Option<(Vec<i64>, f64)>, by: i64| {
        found.map(|(ks, ll)| (ks.iter().map(|k| k * by).collect::<Vec<_>>(), ll))
    };
    let coarse = scan(counts, constraint, COARSE, &vec![0; s], &vec![COARSE; s], None);
    let fine = scan(counts, constraint, FINE, &vec![0; s], &vec![FINE; s], scale(coarse, 10))?;
    let lo: Vec<i64> = fine.0.iter().map(|&k| (k * 10 - 60).max(0)).collect();
    let hi: Vec<i64> = fine.0.iter().map(|&k| (k * 10 + 60).min(FINEST)).collect();
    let (ks, ll) = scan(counts, constraint, FINEST, &lo, &hi, scale(Some(fine), 10))?;
    let mut q = vec![0.0; s];
    for (slot, &k) in order.iter().zip(&ks) {
        q[*slot] = k as f64 / FINEST as f64;
    }
    Some(GridResult { q, log_likelihood: ll })
}

/// Best softmax row over a lattice of the free parameters: step `0.05` over
/// `[−8, 8]` per free coordinate, then step `0.001` within `±0.1` of the
/// coarse winner. At most two free coordinates.
///
/// The lattice lives in whitened coordinates `θ_free = W·u`, where `W`
/// makes the centered free features orthonormal, so a lattice step moves
/// every logit by at most one step even when the features are nearly
/// collinear.
pub fn lds_grid_search(
    counts: &[u64],
    psi: &[Vec<f64>],
    theta_source: &[f64],
    shared: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let free: Vec<usize> = (0..psi.len()).filter(|k| !shared.contains(k)).collect();
    assert!(free.len() <= 2, "lattice search supports at most two free parameters");
    let row = |theta: &[f64]| -> (Vec<f64>, f64) {
        let z: Vec<f64> = (0..counts.len())
            .map(|j| psi.iter().zip(theta).map(|(r, t)| r[j] * t).sum())
            .collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let q: Vec<f64> = z.iter().map(|v| (v - lse).exp()).collect();
        let ll = counts.iter().zip(&z).map(|(&c, v)| c as f64 * (v - lse)).sum();
        (q, ll)
    };
    let whiten = whitening(psi, &free, counts.len());
    let at = |u: &[f64]| -> Vec<f64> {
        let mut theta = theta_source.to_vec();
        for (r, &slot) in free.iter().enumerate() {
            theta[slot] = whiten[r].iter().zip(u).map(|(w, x)| w * x).sum();
        }
        theta
    };
    // Returns the best lattice point and whether it lies on the box edge.
    let search = |center: &[f64], half: f64, step: f64| -> (Vec<f64>, bool) {
        let steps = (2.0 * half / step).round() as i64;
        let mut best = (center.to_vec(), f64::NEG_INFINITY, false);
        let mut u = center.to_vec();
        let grid1 = 0..=steps;
        let grid2 = if free.len() == 2 { 0..=steps } else { 0..=0 };
        for i in grid1 {
            for k in grid2.clone() {
                for ((slot, idx), c) in u.iter_mut().zip([i, k]).zip(center) {
                    *slot = c - half + idx as f64 * step;
                }
                let (_, ll) = row(&at(&u));
                if ll > best.1 {
                    let edge = [i, k].iter().take(free.len()).any(|&x| x == 0 || x == steps);
                    best = (u.clone(), ll, edge);
                }
            }
        }
        (best.0, best.2)
    };
    if free.is_empty() {
        return (row(theta_source).0, theta_source.to_vec());
    }
    // The likelihood is concave in θ, so walking the box toward an edge
    // winner reaches the maximizer when it is finite.
    let (mut coarse, mut edge) = search(&vec![0.0; free.len()], 8.0, 0.05);
    for _ in 0..100 {
        if !edge {
            break;
        }
        (coarse, edge) = search(&coarse, 8.0, 0.05);
    }
    let (mut fine, mut edge) = search(&coarse, 0.1, 0.001);
    for _ in 0..1000 {
        if !edge {
            break;
        }
        (fine, edge) = search(&fine, 0.1, 0.001);
    }
    let theta = at(&fine);
    (row(&theta).0, theta)
}

/// `W` (free × free, row per free coordinate) with `Wᵀ·G·W = I` for the Gram
/// matrix `G` of the state-centered free features. Directions that do not
/// move the logits keep unit scale.
fn whitening(psi: &[Vec<f64>], free: &[usize], states: usize) -> Vec<Vec<f64>> {
    let centered: Vec<Vec<f64>> = free
        .iter()
        .map(|&k| {
            let m = psi[k].iter().sum::<f64>() / states as f64;
            psi[k].iter().map(|v| v - m).collect()
        })
        .collect();
    let g = |a: usize, b: usize| centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum::<f64>();
    let scale = |lambda: f64| if lambda > 1e-12 { 1.0 / lambda.sqrt() } else { 1.0 };
    match free.len() {
        1 => vec![vec![scale(g(0, 0))]],
        2 => {
            let (a, b, c) = (g(0, 0), g(0, 1), g(1, 1));
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let (l1, l2) = (mid + rad, mid - rad);
            // Unit eigenvectors of the symmetric 2×2 matrix.
            let v1 = if b.abs() > 1e-300 {
                let (x, y) = (b, l1 - a);
                let norm = x.hypot(y);
                [x / norm, y / norm]
            } else if a >= c {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            };
            let v2 = [-v1[1], v1[0]];
            let (s1, s2) = (scale(l1), scale(l2));
            vec![vec![v1[0] * s1, v2[0] * s2], vec![v1[1] * s1, v2[1] * s2]]
        }
        _ => Vec::new(),
    }
}

/// TV distance after merging all unobserved coordinates into one bucket.
///
/// The likelihood is strictly concave in the observed coordinates, so their
/// optimal values are unique, while mass on unobserved coordinates can be
/// split arbitrarily without changing the objective.
pub fn merged_tv(counts: &[u64], a: &[f64], b: &[f64]) -> f64 {
    let (mut rest_a, mut rest_b, mut total) = (0.0, 0.0, 0.0);
    for j in 0..counts.len() {
        if counts[j] > 0 {
            total += (a[j] - b[j]).abs();
        } else {
            rest_a += a[j];
            rest_b += b[j];
        }
    }
    0.5 * (total + (rest_a - rest_b).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_grid_finds_frequencies() {
        let r = grid_search(&[3, 1, 0], &GridConstraint::None).unwrap();
        assert_eq!(r.q, vec![0.75, 0.25, 0.0]);
    }

    #[test]
    fn tv_grid_example() {
        let c = GridConstraint::Tv { center: vec![0.5, 0.5], d: 0.1 };
        let r = grid_search(&[3, 1], &c).unwrap();
        assert!((r.q[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn four_states_two_level() {
        let r = grid_search(&[1, 2, 3, 4], &GridConstraint::None).unwrap();
        for (a, b) in r.q.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn line_w1_matches_hand_value() {
        assert!((line_w1(&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5], &[0.0, 1.0, 2.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lds_lattice_logit() {
        let (q, theta) = lds_grid_search(&[3, 1], &[vec![0.0, 1.0]], &[0.0], &[]);
        assert!((theta[0] - (1.0f64 / 3.0).ln()).abs() < 1e-3);
        assert!((q[0] - 0.75).abs() < 1e-3);
    }

    #[test]
    fn lds_lattice_follows_a_narrow_ridge() {
        // Nearly collinear features put the maximizer at |θ| in the hundreds.
        let psi = [vec![0.95, 0.17, 0.135], vec![0.136, 0.507, 0.522]];
        let (q, _) = lds_grid_search(&[3, 2, 7], &psi, &[0.0, 0.0], &[]);
        for (a, b) in q.iter().zip([3.0 / 12.0, 2.0 / 12.0, 7.0 / 12.0]) {
            assert!((a - b).abs() < 1e-3, "{q:?}");
        }
    }

    #[test]
    fn merged_tv_ignores_split_of_unobserved_mass() {
        let counts = [2, 0, 0];
        assert_eq!(merged_tv(&counts, &[0.5, 0.5, 0.0], &[0.5, 0.0, 0.5]), 0.0);
    }
}

//! Grid-world pairs: Frozen Lake, Cliff Walking and Taxi.
//!
//! Each `(s, a)` has an intended successor and an opposite successor (the
//! move in the reverse direction). With `c = r + 2(1 − r)/|S|`, the source
//! row puts `(1 − α)c` on the intended state, `αc` on the opposite one and
//! `(1 − r_s)/|S|` on every other state; the target swaps the roles of `α`
//! and `1 − α` and uses `r_t`. Rows are normalized afterwards.
//!
//! Terminal states (holes, goals, delivered passenger) self-loop with zero
//! reward. The reward of `(s, a)` is the reward for entering its intended
//! successor.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_mixing, normalized, EnvMetadata, EnvName, EnvPair, DEFAULT_GAMMA};
use crate::error::Result;
use crate::mdp::{TabularMDP, TransitionKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyTextEnv {
    FrozenLake,
    CliffWalking,
    Taxi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyTextSpec {
    pub env: ToyTextEnv,
    pub r_s: f64,
    pub r_t: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl ToyTextSpec {
    pub fn default_for(env: ToyTextEnv) -> Self {
        let (r_s, r_t, alpha) = match env {
            ToyTextEnv::FrozenLake => (0.3, 0.8, 0.7),
            ToyTextEnv::CliffWalking => (0.8, 0.2, 0.3),
            ToyTextEnv::Taxi => (0.4, 0.8, 0.2),
        };
        ToyTextSpec { env, r_s, r_t, alpha, gamma: DEFAULT_GAMMA }
    }
}

/// Where `(s, a)` leads. `opposite` is `None` for actions without a
/// direction; the intended state then takes both tiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outcome {
    pub intended: usize,
    pub opposite: Option<usize>,
    pub reward: f64,
}

/// A deterministic grid world: per-state features, terminal flags and the
/// outcome of every non-terminal `(s, a)`.
pub(crate) struct Layout {
    pub actions: usize,
    pub features: Vec<Vec<f64>>,
    pub terminal: Vec<bool>,
    pub outcome: Box<dyn Fn(usize, usize) -> Outcome>,
}

/// `(dr, dc)` for up, right, down, left.
const MOVES: [(i64, i64); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

fn reverse(m: usize) -> usize {
    (m + 2) % 4
}

fn step(rows: usize, cols: usize, (r, c): (usize, usize), m: usize) -> (usize, usize) {
    let (dr, dc) = MOVES[m];
    let nr = (r as i64 + dr).clamp(0, rows as i64 - 1) as usize;
    let nc = (c as i64 + dc).clamp(0, cols as i64 - 1) as usize;
    (nr, nc)
}

pub(crate) const FROZEN_HOLES: [(usize, usize); 2] = [(1, 1), (2, 3)];
pub(crate) const FROZEN_GOAL: (usize, usize) = (3, 3);

/// 4×4 lake, start at the top-left corner, goal (the prize) at the
/// bottom-right. Actions: up, right, down, left.
pub(crate) fn frozen_lake() -> Layout {
    let n = 4;
    let index = move |(r, c): (usize, usize)| r * n + c;
    let terminal: Vec<bool> = (0..n * n)
        .map(|s| {
            let cell = (s / n, s % n);
            FROZEN_HOLES.contains(&cell) || cell == FROZEN_GOAL
        })
        .collect();
    let reward = |cell: (usize, usize)| {
        if FROZEN_HOLES.contains(&cell) {
            -1.0
        } else if cell == FROZEN_GOAL {
            5.0
        } else {
            -0.04
        }
    };
    Layout {
        actions: 4,
        features: (0..n * n).map(|s| vec![(s / n) as f64, (s % n) as f64]).collect(),
        terminal,
        outcome: Box::new(move |s, a| {
            let cell = (s / n, s % n);
            let to = step(n, n, cell, a);
            Outcome {
                intended: index(to),
                opposite: Some(index(step(n, n, cell, reverse(a)))),
                reward: reward(to),
            }
        }),
    }
}

/// 4×12 grid whose bottom row between start and goal is cliff. Cliff cells
/// are not states: walking into one costs −100 and returns the agent to the
/// start. Actions: up, right, down, left.
pub(crate) fn cliff_walking() -> Layout {
    let (rows, cols) = (4, 12);
    let is_cliff = move |(r, c): (usize, usize)| r == rows - 1 && c > 0 && c < cols - 1;
    let cells: Vec<(usize, usize)> =
        (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).filter(|&x| !is_cliff(x)).collect();
    let start = (rows - 1, 0);
    let goal = (rows - 1, cols - 1);
    let index = {
        let cells = cells.clone();
        move |cell: (usize, usize)| cells.iter().position(|&x| x == cell).expect("grid cell")
    };
    let land = move |to: (usize, usize)| -> (usize, f64) {
        if is_cliff(to) {
            (index(start), -100.0)
        } else if to == goal {
            (index(to), 50.0)
        } else {
            (index(to), -1.0)
        }
    };
    Layout {
        actions: 4,
        features: cells.iter().map(|&(r, c)| vec![r as f64, c as f64]).collect(),
        terminal: cells.iter().map(|&x| x == goal).collect(),
        outcome: Box::new(move |s, a| {
            let cell = cells[s];
            let (intended, reward) = land(step(rows, cols, cell, a));
            let (opposite, _) = land(step(rows, cols, cell, reverse(a)));
            Outcome { intended, opposite: Some(opposite), reward }
        }),
    }
}

pub(crate) const TAXI_SIZE: usize = 6;
pub(crate) const TAXI_PICKUP: (usize, usize) = (0, 0);
pub(crate) const TAXI_DROPOFF: (usize, usize) = (5, 5);

/// Passenger status in a Taxi state.
pub(crate) const WAITING: usize = 0;
pub(crate) const RIDING: usize = 1;
pub(crate) const DELIVERED: usize = 2;

pub(crate) fn taxi_index((r, c): (usize, usize), passenger: usize) -> usize {
    (r * TAXI_SIZE + c) * 3 + passenger
}

/// Open 6×6 grid with fixed pick-up and drop-off cells; the passenger waits
/// at the pick-up cell, rides in the taxi, or has been delivered (terminal).
/// Actions: up, right, down, left, pick up, drop off.
pub(crate) fn taxi() -> Layout {
    let n = TAXI_SIZE;
    let states = n * n * 3;
    let decode = move |s: usize| ((s / 3 / n, s / 3 % n), s % 3);
    Layout {
        actions: 6,
        features: (0..states)
            .map(|s| {
                let ((r, c), p) = decode(s);
                vec![r as f64, c as f64, p as f64]
            })
            .collect(),
        terminal: (0..states).map(|s| s % 3 == DELIVERED).collect(),
        outcome: Box::new(move |s, a| {
            let (cell, passenger) = decode(s);
            match a {
                0..=3 => Outcome {
                    intended: taxi_index(step(n, n, cell, a), passenger),
                    opposite: Some(taxi_index(step(n, n, cell, reverse(a)), passenger)),
                    reward: -1.0,
                },
                4 if passenger == WAITING && cell == TAXI_PICKUP => {
                    Outcome { intended: taxi_index(cell, RIDING), opposite: None, reward: 20.0 }
                }
                5 if passenger == RIDING && cell == TAXI_DROPOFF => {
                    Outcome { intended: taxi_index(cell, DELIVERED), opposite: None, reward: 50.0 }
                }
                _ => Outcome { intended: s, opposite: None, reward: -10.0 },
            }
        }),
    }
}

/// One kernel row. `swap` exchanges the intended and opposite weights, as
/// the target construction does.
pub(crate) fn mixing_row(states: usize, outcome: &Outcome, r: f64, alpha: f64, swap: bool) -> Vec<f64> {
    let other = (1.0 - r) / states as f64;
    let tier = r + 2.0 * other;
    let (w_int, w_opp) = if swap { (alpha, 1.0 - alpha) } else { (1.0 - alpha, alpha) };
    let mut row = vec![other; states];
    match outcome.opposite {
        Some(opp) if opp != outcome.intended => {
            row[outcome.intended] = w_int * tier;
            row[opp] = w_opp * tier;
        }
        _ => row[outcome.intended] = tier,
    }
    row
}

pub fn build_toy_text(spec: &ToyTextSpec) -> Result<EnvPair> {
    check_mixing(spec.r_s, spec.r_t, spec.alpha)?;
    let layout = match spec.env {
        ToyTextEnv::FrozenLake => frozen_lake(),
        ToyTextEnv::CliffWalking => cliff_walking(),
        ToyTextEnv::Taxi => taxi(),
    };
    let states = layout.features.len();
    let actions = layout.actions;
    let mut source = Vec::with_capacity(states * actions * states);
    let mut target = Vec::with_capacity(states * actions * states);
    let mut rewards = Vec::with_capacity(states * actions);
    for s in 0..states {
        for a in 0..actions {
            if layout.terminal[s] {
                let mut row = vec![0.0; states];
                row[s] = 1.0;
                source.extend_from_slice(&row);
                target.extend(row);
                rewards.push(0.0);
                continue;
            }
            let outcome = (layout.outcome)(s, a);
            let p = normalized(mixing_row(states, &outcome, spec.r_s, spec.alpha, false));
            let q = normalized(mixing_row(states, &outcome, spec.r_t, spec.alpha, true));
            source.extend(p);
            target.extend(q);
            rewards.push(outcome.reward);
        }
    }
    let name = match spec.env {
        ToyTextEnv::FrozenLake => EnvName::FrozenLake,
        ToyTextEnv::CliffWalking => EnvName::CliffWalking,
        ToyTextEnv::Taxi => EnvName::Taxi,
    };
    let metadata = EnvMetadata {
        name,
        constants: json!({"r_s": spec.r_s, "r_t": spec.r_t, "alpha": spec.alpha, "gamma": spec.gamma}),
        seed: 0,
        state_features: layout.features,
    };
    EnvPair::new(
        TabularMDP::new(TransitionKernel::from_flat(states, actions, source)?, rewards.clone(), spec.gamma)?,
        TabularMDP::new(TransitionKernel::from_flat(states, actions, target)?, rewards, spec.gamma)?,
        metadata,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn frozen_lake_intended_mass_before_normalization() {
        let layout = frozen_lake();
        // State 1 moving right: intended 2, opposite 0.
        let outcome = (layout.outcome)(1, 1);
        assert_eq!((outcome.intended, outcome.opposite), (2, Some(0)));
        let row = mixing_row(16, &outcome, 0.3, 0.7, false);
        assert!((row[2] - 0.11625).abs() < 1e-15);
        assert!((row[0] - 0.7 * 0.3875).abs() < 1e-15);
        assert!((row[5] - 0.7 / 16.0).abs() < 1e-15);
        // Distinct intended and opposite states: the tiers already sum to 1.
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_constants_give_identical_kernels() {
        let spec = ToyTextSpec { r_t: 0.3, alpha: 0.5, ..ToyTextSpec::default_for(ToyTextEnv::FrozenLake) };
        let pair = build_toy_text(&spec).unwrap();
        assert_eq!(pair.source.kernel, pair.target.kernel);
    }

    #[test]
    fn state_counts() {
        for (env, states, actions) in [
            (ToyTextEnv::FrozenLake, 16, 4),
            (ToyTextEnv::CliffWalking, 38, 4),
            (ToyTextEnv::Taxi, 108, 6),
        ] {
            let pair = build_toy_text(&ToyTextSpec::default_for(env)).unwrap();
            assert_eq!((pair.num_states(), pair.num_actions()), (states, actions));
        }
    }

    #[test]
    fn terminal_states_are_absorbing() {
        let pair = build_toy_text(&ToyTextSpec::default_for(ToyTextEnv::FrozenLake)).unwrap();
        for s in [5, 11, 15] {
            for a in 0..4 {
                assert_eq!(pair.target.kernel.row(s, a)[s], 1.0);
                assert_eq!(pair.target.reward(s, a), 0.0);
            }
        }
        assert_eq!(pair.source.reward(14, 1), 5.0);
        assert_eq!(pair.source.reward(4, 1), -1.0);
        assert_eq!(pair.source.reward(0, 1), -0.04);
    }

    #[test]
    fn wall_bump_merges_tiers() {
        // Corner state 0 moving up stays put; the opposite move goes down.
        let outcome = (frozen_lake().outcome)(0, 0);
        assert_eq!((outcome.intended, outcome.opposite), (0, Some(4)));
        // Pick-up has no direction, so the intended state takes both tiers.
        let pickup = (taxi().outcome)(taxi_index(TAXI_PICKUP, WAITING), 4);
        assert_eq!(pickup.opposite, None);
        let row = mixing_row(108, &pickup, 0.4, 0.2, false);
        assert!((row[pickup.intended] - (0.4 + 1.2 / 108.0)).abs() < 1e-15);
    }

    #[test]
    fn cliff_sends_the_agent_back_to_the_start() {
        let layout = cliff_walking();
        let start = layout.features.iter().position(|f| f == &vec![3.0, 0.0]).unwrap();
        let above = layout.features.iter().position(|f| f == &vec![2.0, 4.0]).unwrap();
        let down = (layout.outcome)(above, 2);
        assert_eq!(down.intended, start);
        assert_eq!(down.reward, -100.0);
        let right = (layout.outcome)(start, 1);
        assert_eq!((right.intended, right.reward), (start, -100.0));
        let up = (layout.outcome)(above, 0);
        assert_eq!(up.reward, -1.0);
        assert_eq!(up.opposite, Some(start));
    }

    #[test]
    fn taxi_rewards() {
        let layout = taxi();
        let at_pickup = taxi_index(TAXI_PICKUP, WAITING);
        assert_eq!((layout.outcome)(at_pickup, 4).reward, 20.0);
        assert_eq!((layout.outcome)(at_pickup, 5).reward, -10.0);
        let riding = taxi_index(TAXI_DROPOFF, RIDING);
        let drop = (layout.outcome)(riding, 5);
        assert_eq!((drop.intended, drop.reward), (taxi_index(TAXI_DROPOFF, DELIVERED), 50.0));
        assert_eq!((layout.outcome)(riding, 4).reward, -10.0);
        assert_eq!((layout.outcome)(riding, 2).reward, -1.0);
    }

    #[test]
    fn invalid_constants_are_rejected() {
        let spec = ToyTextSpec { alpha: 1.5, ..ToyTextSpec::default_for(ToyTextEnv::Taxi) };
        assert!(matches!(build_toy_text(&spec), Err(Error::InvalidConstants(_))));
    }
}

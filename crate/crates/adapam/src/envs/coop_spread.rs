//! Cooperative spread: 3 agents cover 3 landmarks on the unit square.
//!
//! State (12): agent positions (x, y) x 3, then landmark positions
//! (x, y) x 3, all in [0, 1]. Actions (5): {stay, +x, -x, +y, -y} with
//! step 0.05 and positions clipped to [0, 1]. Reward per step is
//! `-sum_landmarks min_agents dist - 0.5 * #(agent pairs closer than 0.1)`,
//! so it is always <= 0. Horizon 25, no win flag.
//!
//! Observation (12, all coordinates in [-1, 1]): own position mapped to
//! 2p - 1, then relative positions of the 3 landmarks, then relative
//! positions of the 2 other agents in index order (differences of unit-
//! square coordinates are already in [-1, 1]).

use rand::Rng;

use crate::envs::{EnvSpec, GlobalState, Observation, StepResult};
use crate::error::Result;
use crate::ndmath::Array;
use crate::rng::rng_from;

pub const SPEC: EnvSpec = EnvSpec {
    n_agents: 3,
    obs_dim: 12,
    action_count: 5,
    state_dim: 12,
    horizon: 25,
    has_win_flag: false,
};

const STEP_SIZE: f64 = 0.05;
const COLLISION_DIST: f64 = 0.1;
const COLLISION_PENALTY: f64 = 0.5;

fn agent_pos(state: &GlobalState, i: usize) -> (f64, f64) {
    let d = state.vector.data();
    (d[2 * i], d[2 * i + 1])
}

fn landmark_pos(state: &GlobalState, l: usize) -> (f64, f64) {
    let d = state.vector.data();
    (d[6 + 2 * l], d[6 + 2 * l + 1])
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn reset(seed: u64) -> GlobalState {
    let mut rng = rng_from(seed, 0);
    let vector: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..1.0)).collect();
    GlobalState {
        vector: Array::from_vec(vector),
        t: 0,
    }
}

pub fn observe(state: &GlobalState, agent: usize) -> Result<Observation> {
    let (ox, oy) = agent_pos(state, agent);
    let mut v = Vec::with_capacity(12);
    v.push(2.0 * ox - 1.0);
    v.push(2.0 * oy - 1.0);
    for l in 0..3 {
        let (lx, ly) = landmark_pos(state, l);
        v.push(lx - ox);
        v.push(ly - oy);
    }
    for j in 0..3 {
        if j == agent {
            continue;
        }
        let (jx, jy) = agent_pos(state, j);
        v.push(jx - ox);
        v.push(jy - oy);
    }
    Ok(Observation {
        vector: Array::from_vec(v),
        agent,
    })
}

pub fn step(state: &GlobalState, joint_action: &[usize]) -> Result<StepResult> {
    let mut vector = state.vector.data().to_vec();
    for (i, &action) in joint_action.iter().enumerate() {
        let (dx, dy) = match action {
            0 => (0.0, 0.0),
            1 => (STEP_SIZE, 0.0),
            2 => (-STEP_SIZE, 0.0),
            3 => (0.0, STEP_SIZE),
            _ => (0.0, -STEP_SIZE),
        };
        vector[2 * i] = (vector[2 * i] + dx).clamp(0.0, 1.0);
        vector[2 * i + 1] = (vector[2 * i + 1] + dy).clamp(0.0, 1.0);
    }
    let next_state = GlobalState {
        vector: Array::from_vec(vector),
        t: state.t + 1,
    };
    let reward = reward_of(&next_state);
    Ok(StepResult {
        done: next_state.t >= SPEC.horizon,
        next_state,
        reward,
        win: None,
    })
}

/// Reward evaluated on a state: negated coverage distance minus the
/// crowding penalty.
pub fn reward_of(state: &GlobalState) -> f64 {
    let mut total = 0.0;
    for l in 0..3 {
        let lp = landmark_pos(state, l);
        let min_dist = (0..3)
            .map(|i| dist(agent_pos(state, i), lp))
            .fold(f64::INFINITY, f64::min);
        total -= min_dist;
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            if dist(agent_pos(state, i), agent_pos(state, j)) < COLLISION_DIST {
                total -= COLLISION_PENALTY;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_samples_unit_square() {
        let s = reset(0);
        assert!(s.vector.data().iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(s.t, 0);
    }

    #[test]
    fn stay_actions_keep_positions_and_reward_formula_holds() {
        // Spread-out fixture: no pair within 0.1, so no collision term.
        let s = GlobalState {
            vector: Array::from_vec(vec![
                0.1, 0.1, 0.5, 0.5, 0.9, 0.9, // agents
                0.2, 0.1, 0.5, 0.6, 0.8, 0.9, // landmarks
            ]),
            t: 0,
        };
        let r = step(&s, &[0, 0, 0]).unwrap();
        assert_eq!(&r.next_state.vector.data()[..6], &s.vector.data()[..6]);
        // Each landmark's nearest agent sits exactly 0.1 away.
        let expect = -0.3;
        assert!((r.reward - expect).abs() < 1e-12, "{} vs {expect}", r.reward);
        assert!(!r.done);
        assert!(r.win.is_none());
    }

    #[test]
    fn crowded_agents_pay_collision_penalty() {
        let s = GlobalState {
            vector: Array::from_vec(vec![
                0.50, 0.50, 0.52, 0.50, 0.90, 0.90, //
                0.50, 0.50, 0.52, 0.50, 0.90, 0.90,
            ]),
            t: 0,
        };
        // Exactly one pair (agents 0 and 1) is within 0.1.
        let r = step(&s, &[0, 0, 0]).unwrap();
        assert!((r.reward - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn agent_on_its_landmark_sees_zero_relative_pair() {
        let s = GlobalState {
            vector: Array::from_vec(vec![
                0.3, 0.7, 0.9, 0.1, 0.1, 0.9, //
                0.3, 0.7, 0.5, 0.5, 0.6, 0.6,
            ]),
            t: 0,
        };
        let obs = observe(&s, 0).unwrap();
        assert_eq!(obs.vector.data()[2], 0.0);
        assert_eq!(obs.vector.data()[3], 0.0);
    }

    #[test]
    fn movement_clips_to_unit_square() {
        let s = GlobalState {
            vector: Array::from_vec(vec![
                0.0, 1.0, 0.5, 0.5, 1.0, 0.0, //
                0.2, 0.2, 0.5, 0.5, 0.8, 0.8,
            ]),
            t: 0,
        };
        let r = step(&s, &[2, 0, 1]).unwrap(); // agent 0 -x, agent 2 +x
        assert_eq!(r.next_state.vector.data()[0], 0.0);
        assert_eq!(r.next_state.vector.data()[4], 1.0);
    }

    #[test]
    fn horizon_terminates_episode() {
        let mut s = reset(5);
        let mut done = false;
        for _ in 0..SPEC.horizon {
            let r = step(&s, &[1, 2, 3]).unwrap();
            done = r.done;
            s = r.next_state;
        }
        assert!(done);
        assert_eq!(s.t, SPEC.horizon);
    }
}

//! Grid battle: 3 controlled melee units vs 3 scripted enemies on an
//! 8x8 grid.
//!
//! State (24): per unit `[x, y, hp, alive]` for units 0..6, where units
//! 0-2 are the controlled team and 3-5 the scripted enemies; x and y in
//! [0, 7], hp in [0, 3], alive in {0, 1}. Units start with hp 3; melee
//! range is Chebyshev distance 1 and damage is 1.
//!
//! Actions (6): {stay, up (y-1), down (y+1), left (x-1), right (x+1),
//! attack_nearest}. Units process in index order, controlled team
//! first; moves into occupied or off-grid cells are no-ops; a unit that
//! died earlier in the step does not act. attack_nearest hits the
//! nearest living enemy within range (ties: lowest index) and does
//! nothing when none is in range.
//!
//! Scripted enemy policy: attack the nearest living controlled unit in
//! range (ties: lowest index); otherwise step toward the nearest living
//! controlled unit along the axis with the larger gap (ties: x axis).
//!
//! Reward per step: +1 per damage dealt to enemies, -1 per damage taken,
//! +10 when all enemies die (win), -10 when all controlled units die;
//! horizon 40, timeout counts as a loss with no terminal bonus.
//!
//! Observation (23, all coordinates in [-1, 1]): own
//! `[2x/7-1, 2y/7-1, hp/3]`, then for each of the 5 other units in index
//! order `[dx/7, dy/7, hp/3, alive]`, zeroed for dead units.

use rand::seq::SliceRandom;

use crate::envs::{EnvSpec, GlobalState, Observation, StepResult};
use crate::error::{Error, Result};
use crate::ndmath::Array;
use crate::rng::rng_from;

pub const SPEC: EnvSpec = EnvSpec {
    n_agents: 3,
    obs_dim: 23,
    action_count: 6,
    state_dim: 24,
    horizon: 40,
    has_win_flag: true,
};

const GRID: i64 = 8;
const UNITS: usize = 6;
const MAX_HP: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Unit {
    x: i64,
    y: i64,
    hp: i64,
    alive: bool,
}

fn unpack(state: &GlobalState) -> Vec<Unit> {
    let d = state.vector.data();
    (0..UNITS)
        .map(|u| Unit {
            x: d[4 * u] as i64,
            y: d[4 * u + 1] as i64,
            hp: d[4 * u + 2] as i64,
            alive: d[4 * u + 3] > 0.5,
        })
        .collect()
}

fn pack(units: &[Unit], t: usize) -> GlobalState {
    let mut v = Vec::with_capacity(UNITS * 4);
    for u in units {
        v.push(u.x as f64);
        v.push(u.y as f64);
        v.push(u.hp as f64);
        v.push(if u.alive { 1.0 } else { 0.0 });
    }
    GlobalState {
        vector: Array::from_vec(v),
        t,
    }
}

fn chebyshev(a: &Unit, b: &Unit) -> i64 {
    (a.x - b.x).abs().max((a.y - b.y).abs())
}

pub fn unit_alive(state: &GlobalState, unit: usize) -> bool {
    unit < UNITS && state.vector.data()[4 * unit + 3] > 0.5
}

pub fn reset(seed: u64) -> GlobalState {
    let mut rng = rng_from(seed, 0);
    // Controlled units spawn in the two left columns, enemies in the
    // two right columns; cells within a side are distinct.
    let mut left: Vec<(i64, i64)> = (0..2).flat_map(|x| (0..GRID).map(move |y| (x, y))).collect();
    let mut right: Vec<(i64, i64)> =
        (GRID - 2..GRID).flat_map(|x| (0..GRID).map(move |y| (x, y))).collect();
    left.shuffle(&mut rng);
    right.shuffle(&mut rng);
    let mut units = Vec::with_capacity(UNITS);
    for side in [left, right] {
        for &(x, y) in side.iter().take(3) {
            units.push(Unit {
                x,
                y,
                hp: MAX_HP as i64,
                alive: true,
            });
        }
    }
    pack(&units, 0)
}

pub fn observe(state: &GlobalState, agent: usize) -> Result<Observation> {
    let units = unpack(state);
    let me = &units[agent];
    if !me.alive {
        return Err(Error::Argument(format!("agent {agent} is dead")));
    }
    let mut v = Vec::with_capacity(SPEC.obs_dim);
    let span = (GRID - 1) as f64;
    v.push(2.0 * me.x as f64 / span - 1.0);
    v.push(2.0 * me.y as f64 / span - 1.0);
    v.push(me.hp as f64 / MAX_HP);
    for (j, other) in units.iter().enumerate() {
        if j == agent {
            continue;
        }
        if other.alive {
            v.push((other.x - me.x) as f64 / span);
            v.push((other.y - me.y) as f64 / span);
            v.push(other.hp as f64 / MAX_HP);
            v.push(1.0);
        } else {
            v.extend_from_slice(&[0.0, 0.0, 0.0, 0.0]);
        }
    }
    Ok(Observation {
        vector: Array::from_vec(v),
        agent,
    })
}

/// Nearest living unit of the opposing team, ties to the lowest index.
fn nearest_opponent(units: &[Unit], me: usize) -> Option<usize> {
    let (lo, hi) = if me < 3 { (3, UNITS) } else { (0, 3) };
    let mut best: Option<(i64, usize)> = None;
    for j in lo..hi {
        if !units[j].alive {
            continue;
        }
        let d = chebyshev(&units[me], &units[j]);
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map(|(_, j)| j)
}

fn cell_occupied(units: &[Unit], x: i64, y: i64) -> bool {
    units.iter().any(|u| u.alive && u.x == x && u.y == y)
}

fn try_move(units: &mut [Unit], me: usize, dx: i64, dy: i64) {
    let (nx, ny) = (units[me].x + dx, units[me].y + dy);
    if !(0..GRID).contains(&nx) || !(0..GRID).contains(&ny) {
        return;
    }
    if cell_occupied(units, nx, ny) {
        return;
    }
    units[me].x = nx;
    units[me].y = ny;
}

/// Damage the target; returns 1 when a hit landed.
fn attack(units: &mut [Unit], target: usize) -> i64 {
    units[target].hp -= 1;
    if units[target].hp <= 0 {
        units[target].alive = false;
    }
    1
}

pub fn step(state: &GlobalState, joint_action: &[usize]) -> Result<StepResult> {
    let mut units = unpack(state);
    let mut damage_dealt = 0;
    let mut damage_taken = 0;

    for me in 0..3 {
        if !units[me].alive {
            continue;
        }
        match joint_action[me] {
            0 => {}
            1 => try_move(&mut units, me, 0, -1),
            2 => try_move(&mut units, me, 0, 1),
            3 => try_move(&mut units, me, -1, 0),
            4 => try_move(&mut units, me, 1, 0),
            _ => {
                if let Some(j) = nearest_opponent(&units, me) {
                    if chebyshev(&units[me], &units[j]) <= 1 {
                        damage_dealt += attack(&mut units, j);
                    }
                }
            }
        }
    }

    for me in 3..UNITS {
        if !units[me].alive {
            continue;
        }
        if let Some(j) = nearest_opponent(&units, me) {
            let dx = units[j].x - units[me].x;
            let dy = units[j].y - units[me].y;
            if dx.abs().max(dy.abs()) <= 1 {
                damage_taken += attack(&mut units, j);
            } else if dx.abs() >= dy.abs() {
                try_move(&mut units, me, dx.signum(), 0);
            } else {
                try_move(&mut units, me, 0, dy.signum());
            }
        }
    }

    let enemies_alive = units[3..].iter().any(|u| u.alive);
    let allies_alive = units[..3].iter().any(|u| u.alive);
    let t = state.t + 1;
    let mut reward = (damage_dealt - damage_taken) as f64;
    let (done, win) = if !enemies_alive {
        reward += 10.0;
        (true, true)
    } else if !allies_alive {
        reward -= 10.0;
        (true, false)
    } else {
        (t >= SPEC.horizon, false)
    };
    Ok(StepResult {
        next_state: pack(&units, t),
        reward,
        done,
        win: Some(win),
    })
}

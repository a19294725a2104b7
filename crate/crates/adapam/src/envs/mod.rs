//! Desk-scale cooperative multi-agent environments.
//!
//! Both tasks expose the same surface: a global state vector, per-agent
//! observations normalized to [-1, 1], discrete per-agent actions, a
//! shared reward, and (for the battle task) a win/lose outcome. All
//! stochasticity is consumed at `reset`; `step` and `observe` are pure,
//! so full episodes replay bit-identically from a seed and an action log.

mod coop_spread;
mod grid_battle;
pub mod log;

use crate::error::{Error, Result};
use crate::ndmath::Array;

/// Static description of an environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvSpec {
    pub n_agents: usize,
    pub obs_dim: usize,
    pub action_count: usize,
    pub state_dim: usize,
    pub horizon: usize,
    pub has_win_flag: bool,
}

/// Global environment state: the full state vector plus the timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState {
    pub vector: Array,
    pub t: usize,
}

/// One agent's local view of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub vector: Array,
    pub agent: usize,
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: GlobalState,
    pub reward: f64,
    pub done: bool,
    /// Present exactly when the environment has a win flag;
    /// `Some(true)` once the controlled team has won.
    pub win: Option<bool>,
}

/// The two built-in environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// Three agents cover three landmarks on the unit square.
    CoopSpread,
    /// Three controlled melee units against three scripted enemies on
    /// an 8x8 grid.
    GridBattle,
}

impl EnvKind {
    pub fn parse(name: &str) -> Result<EnvKind> {
        match name {
            "coop_spread" => Ok(EnvKind::CoopSpread),
            "grid_battle" => Ok(EnvKind::GridBattle),
            other => Err(Error::Config(format!(
                "unknown environment '{other}' (expected coop_spread or grid_battle)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::CoopSpread => "coop_spread",
            EnvKind::GridBattle => "grid_battle",
        }
    }

    pub fn spec(&self) -> EnvSpec {
        match self {
            EnvKind::CoopSpread => coop_spread::SPEC,
            EnvKind::GridBattle => grid_battle::SPEC,
        }
    }

    /// Deterministic initial state for the seed; t = 0.
    pub fn reset(&self, seed: u64) -> GlobalState {
        match self {
            EnvKind::CoopSpread => coop_spread::reset(seed),
            EnvKind::GridBattle => grid_battle::reset(seed),
        }
    }

    /// Local observation of `agent`; layout documented per environment.
    pub fn observe(&self, state: &GlobalState, agent: usize) -> Result<Observation> {
        let spec = self.spec();
        if agent >= spec.n_agents {
            return Err(Error::Argument(format!(
                "agent index {agent} out of range for {} agents",
                spec.n_agents
            )));
        }
        match self {
            EnvKind::CoopSpread => coop_spread::observe(state, agent),
            EnvKind::GridBattle => grid_battle::observe(state, agent),
        }
    }

    /// Pure transition: dynamics and reward as documented per
    /// environment. Entries of `joint_action` for dead agents are ignored.
    pub fn step(&self, state: &GlobalState, joint_action: &[usize]) -> Result<StepResult> {
        let spec = self.spec();
        if joint_action.len() != spec.n_agents {
            return Err(Error::Argument(format!(
                "joint action length {} does not match {} agents",
                joint_action.len(),
                spec.n_agents
            )));
        }
        if let Some(&bad) = joint_action.iter().find(|&&a| a >= spec.action_count) {
            return Err(Error::Argument(format!(
                "action index {bad} out of range for {} actions",
                spec.action_count
            )));
        }
        match self {
            EnvKind::CoopSpread => coop_spread::step(state, joint_action),
            EnvKind::GridBattle => grid_battle::step(state, joint_action),
        }
    }

    /// Whether `agent` is still alive in `state`. Always true for
    /// coop_spread.
    pub fn agent_alive(&self, state: &GlobalState, agent: usize) -> bool {
        match self {
            EnvKind::CoopSpread => true,
            EnvKind::GridBattle => grid_battle::unit_alive(state, agent),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn parse_rejects_unknown_names() {
        assert!(EnvKind::parse("coop_spread").is_ok());
        assert!(EnvKind::parse("grid_battle").is_ok());
        assert!(matches!(EnvKind::parse("smac"), Err(Error::Config(_))));
    }

    #[test]
    fn reset_is_deterministic() {
        for env in [EnvKind::CoopSpread, EnvKind::GridBattle] {
            let a = env.reset(0);
            let b = env.reset(0);
            assert_eq!(a, b);
            assert_eq!(a.t, 0);
        }
    }

    #[test]
    fn observe_is_pure_and_checks_range() {
        let env = EnvKind::CoopSpread;
        let s = env.reset(4);
        assert_eq!(env.observe(&s, 1).unwrap(), env.observe(&s, 1).unwrap());
        assert!(env.observe(&s, 3).is_err());
    }

    #[test]
    fn step_validates_joint_action() {
        let env = EnvKind::CoopSpread;
        let s = env.reset(0);
        assert!(env.step(&s, &[0, 0]).is_err());
        assert!(env.step(&s, &[0, 0, 9]).is_err());
    }

    #[test]
    fn episode_replay_is_bit_identical() {
        for env in [EnvKind::CoopSpread, EnvKind::GridBattle] {
            let spec = env.spec();
            let mut rng = crate::rng::rng_from(11, 0);
            let actions: Vec<Vec<usize>> = (0..spec.horizon)
                .map(|_| (0..spec.n_agents).map(|_| rng.gen_range(0..spec.action_count)).collect())
                .collect();
            let run = |actions: &[Vec<usize>]| {
                let mut s = env.reset(3);
                let mut trace = Vec::new();
                for a in actions {
                    let r = env.step(&s, a).unwrap();
                    trace.push((r.next_state.clone(), r.reward.to_bits(), r.done, r.win));
                    if r.done {
                        break;
                    }
                    s = r.next_state;
                }
                trace
            };
            assert_eq!(run(&actions), run(&actions));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Observations stay inside the [-1, 1] clipping box and rewards
        /// stay inside their documented bounds on random episodes.
        #[test]
        fn observation_box_and_reward_bounds(seed in 0u64..500, actions_seed in 0u64..500) {
            for env in [EnvKind::CoopSpread, EnvKind::GridBattle] {
                let spec = env.spec();
                let mut rng = crate::rng::rng_from(actions_seed, 7);
                let mut state = env.reset(seed);
                let mut living_before = spec.n_agents * 2;
                loop {
                    for agent in 0..spec.n_agents {
                        if env.agent_alive(&state, agent) {
                            let obs = env.observe(&state, agent).unwrap();
                            prop_assert_eq!(obs.vector.len(), spec.obs_dim);
                            prop_assert!(obs.vector.data().iter().all(|x| (-1.0..=1.0).contains(x)));
                        }
                    }
                    let joint: Vec<usize> =
                        (0..spec.n_agents).map(|_| rng.gen_range(0..spec.action_count)).collect();
                    let r = env.step(&state, &joint).unwrap();
                    match env {
                        EnvKind::CoopSpread => prop_assert!(r.reward <= 0.0),
                        EnvKind::GridBattle => prop_assert!((-13.0..=13.0).contains(&r.reward)),
                    }
                    if env == EnvKind::GridBattle {
                        let living: usize = (0..6)
                            .filter(|&u| grid_battle::unit_alive(&r.next_state, u))
                            .count();
                        prop_assert!(living <= living_before);
                        living_before = living;
                    }
                    prop_assert!(r.next_state.t <= spec.horizon);
                    prop_assert_eq!(r.win.is_some(), spec.has_win_flag);
                    if r.done {
                        break;
                    }
                    state = r.next_state;
                }
            }
        }
    }
}

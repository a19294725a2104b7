//! Instrumented episode rollouts with an optional attack hook.

use crate::envs::log::{AttackRecord, EpisodeLog, StepRecord};
use crate::envs::{EnvKind, GlobalState};
use crate::error::Result;
use crate::ndmath::Array;
use crate::rng::derive_seed;
use crate::victim::VictimPolicy;

/// Everything a hook may inspect before the agents act.
pub struct StepContext<'a> {
    pub episode: usize,
    pub t: usize,
    pub state: &'a GlobalState,
    /// Clean observation per agent; `None` for dead agents.
    pub clean_obs: &'a [Option<Array>],
}

/// What a hook does to one timestep: replace observations, force
/// actions, and annotate the log. Overrides addressed to dead agents
/// are ignored (the annotation is still recorded with
/// `target_alive = false`).
#[derive(Debug, Default)]
pub struct StepIntervention {
    pub obs_overrides: Vec<(usize, Array)>,
    pub action_overrides: Vec<(usize, usize)>,
    pub annotations: Vec<AttackRecord>,
}

/// Per-step interference with a rollout. Implementations must be
/// deterministic given their own seeds for replays to be exact.
pub trait AttackHook {
    fn intervene(&mut self, ctx: &StepContext<'_>) -> Result<StepIntervention>;
}

/// Per-episode outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub total_reward: f64,
    pub win: Option<bool>,
}

/// Aggregates over a batch of episodes.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RolloutSummary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub stderr_reward: f64,
    pub win_rate: Option<f64>,
}

/// Recompute summary statistics from episode logs. The only way
/// summaries are produced, so stored aggregates are reproducible from
/// records by construction.
pub fn summarize(env: EnvKind, episodes: &[EpisodeLog]) -> RolloutSummary {
    let rewards: Vec<f64> = episodes.iter().map(EpisodeLog::total_reward).collect();
    let n = rewards.len().max(1) as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = if rewards.len() > 1 {
        rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let win_rate = env.spec().has_win_flag.then(|| {
        episodes
            .iter()
            .filter(|e| e.win() == Some(true))
            .count() as f64
            / n
    });
    RolloutSummary {
        episodes: rewards.len(),
        mean_reward: mean,
        stderr_reward: (var / n).sqrt(),
        win_rate,
    }
}

/// Run `n_episodes` episodes of `victim` in `env`. Episode `e` resets
/// from a seed derived from (`seed`, `e`), so batches with the same
/// seed are paired across callers. The hook, when present, may replace
/// observations and actions before the environment transition.
pub fn rollout(
    env: EnvKind,
    victim: &VictimPolicy,
    n_episodes: usize,
    seed: u64,
    mut hook: Option<&mut dyn AttackHook>,
) -> Result<(Vec<EpisodeLog>, RolloutSummary)> {
    let spec = env.spec();
    let mut episodes = Vec::with_capacity(n_episodes);
    for episode in 0..n_episodes {
        let mut state = env.reset(derive_seed(seed, episode as u64));
        let mut steps = Vec::new();
        loop {
            let clean_obs: Vec<Option<Array>> = (0..spec.n_agents)
                .map(|agent| {
                    env.agent_alive(&state, agent)
                        .then(|| env.observe(&state, agent).map(|o| o.vector))
                        .transpose()
                })
                .collect::<Result<_>>()?;

            let mut intervention = match hook.as_deref_mut() {
                Some(h) => h.intervene(&StepContext {
                    episode,
                    t: state.t,
                    state: &state,
                    clean_obs: &clean_obs,
                })?,
                None => StepIntervention::default(),
            };

            let mut acted_obs = clean_obs;
            for (agent, obs) in intervention.obs_overrides {
                if acted_obs[agent].is_some() {
                    acted_obs[agent] = Some(obs);
                }
            }

            let mut actions: Vec<Option<usize>> = Vec::with_capacity(spec.n_agents);
            for (agent, obs) in acted_obs.iter().enumerate() {
                actions.push(match obs {
                    Some(o) => Some(victim.act(agent, o)?),
                    None => None,
                });
            }
            for (agent, forced) in intervention.action_overrides {
                if actions[agent].is_some() {
                    actions[agent] = Some(forced);
                }
            }

            for record in &mut intervention.annotations {
                if let (Some(target), Some(Some(executed))) = (
                    record.malicious_action,
                    actions.get(record.agent),
                ) {
                    record.success_victim = Some(*executed == target);
                }
            }

            let joint: Vec<usize> = actions.iter().map(|a| a.unwrap_or(0)).collect();
            let result = env.step(&state, &joint)?;
            steps.push(StepRecord {
                episode,
                t: state.t,
                state: state.vector.data().to_vec(),
                observations: acted_obs
                    .iter()
                    .map(|o| o.as_ref().map(|a| a.data().to_vec()))
                    .collect(),
                actions,
                reward: result.reward,
                done: result.done,
                win: result.win,
                attacks: intervention.annotations,
            });
            if result.done {
                break;
            }
            state = result.next_state;
        }
        episodes.push(EpisodeLog { episode, steps });
    }
    let summary = summarize(env, &episodes);
    Ok((episodes, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::victim::untrained_victim;

    struct IdentityHook;
    impl AttackHook for IdentityHook {
        fn intervene(&mut self, _ctx: &StepContext<'_>) -> Result<StepIntervention> {
            Ok(StepIntervention::default())
        }
    }

    struct ZeroObsHook;
    impl AttackHook for ZeroObsHook {
        fn intervene(&mut self, ctx: &StepContext<'_>) -> Result<StepIntervention> {
            Ok(StepIntervention {
                obs_overrides: ctx
                    .clean_obs
                    .iter()
                    .enumerate()
                    .filter_map(|(i, o)| o.as_ref().map(|a| (i, Array::zeros(vec![a.len()]))))
                    .collect(),
                ..Default::default()
            })
        }
    }

    #[test]
    fn identity_hook_matches_no_hook_run() {
        let env = EnvKind::CoopSpread;
        let victim = untrained_victim(env, &[8], 0);
        let (eps_a, sum_a) = rollout(env, &victim, 4, 7, None).unwrap();
        let mut hook = IdentityHook;
        let (eps_b, sum_b) = rollout(env, &victim, 4, 7, Some(&mut hook)).unwrap();
        assert_eq!(eps_a, eps_b);
        assert_eq!(sum_a, sum_b);
    }

    #[test]
    fn win_rate_counts_winning_episodes() {
        let env = EnvKind::GridBattle;
        let victim = untrained_victim(env, &[8], 1);
        let (episodes, summary) = rollout(env, &victim, 5, 3, None).unwrap();
        let wins = episodes.iter().filter(|e| e.win() == Some(true)).count();
        assert_eq!(summary.win_rate, Some(wins as f64 / 5.0));
    }

    #[test]
    fn summary_is_recomputable_from_records() {
        let env = EnvKind::CoopSpread;
        let victim = untrained_victim(env, &[8], 2);
        let (episodes, summary) = rollout(env, &victim, 6, 11, None).unwrap();
        assert_eq!(summarize(env, &episodes), summary);
    }

    #[test]
    fn override_hooks_change_play_deterministically() {
        let env = EnvKind::CoopSpread;
        let victim = untrained_victim(env, &[8], 3);
        let mut h1 = ZeroObsHook;
        let mut h2 = ZeroObsHook;
        let (a, _) = rollout(env, &victim, 3, 5, Some(&mut h1)).unwrap();
        let (b, _) = rollout(env, &victim, 3, 5, Some(&mut h2)).unwrap();
        assert_eq!(a, b);
    }
}

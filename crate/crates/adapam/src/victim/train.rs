//! Independent per-agent Q-learning on the shared reward.
//!
//! Each agent trains its own action-value network from a shared replay
//! of joint transitions, with epsilon-greedy exploration and a
//! periodically synced target network. The result is frozen into a
//! [`VictimPolicy`] only if it beats a uniform-random joint policy by a
//! configured margin on paired evaluation episodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::ndmath::{adam_step, argmax, grad, AdamState, Array, LossHead, Mlp, MlpSpec};
use crate::rng::{derive_seed, rng_from};
use crate::victim::rollout::{rollout, AttackHook, StepContext, StepIntervention};
use crate::victim::VictimPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VictimTrainConfig {
    pub episodes: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which epsilon decays linearly from start to end.
    pub epsilon_decay_episodes: usize,
    /// Hard target-network sync period, in gradient updates.
    pub target_sync_updates: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Train once every this many environment steps.
    pub train_every: usize,
    /// Environment steps before the first gradient update.
    pub warmup_steps: usize,
    pub hidden: Vec<usize>,
    /// Paired evaluation episodes for the under-trained guard.
    pub eval_episodes: usize,
    /// Required mean-reward margin over the uniform-random policy.
    pub min_margin: f64,
    pub seed: u64,
}

impl VictimTrainConfig {
    pub fn default_for(env: EnvKind) -> Self {
        let common = Self {
            episodes: 600,
            learning_rate: 1e-3,
            discount: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 400,
            target_sync_updates: 200,
            replay_capacity: 20_000,
            batch_size: 64,
            train_every: 4,
            warmup_steps: 500,
            hidden: vec![64, 64],
            eval_episodes: 100,
            min_margin: 0.1,
            seed: 0,
        };
        match env {
            EnvKind::CoopSpread => Self {
                episodes: 500,
                discount: 0.9,
                ..common
            },
            EnvKind::GridBattle => common,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.episodes == 0
            || self.batch_size == 0
            || self.replay_capacity == 0
            || self.train_every == 0
            || self.target_sync_updates == 0
            || self.eval_episodes == 0
        {
            return Err(Error::Config(
                "victim training counts must be positive".into(),
            ));
        }
        if self.learning_rate <= 0.0 || !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::Config(
                "victim learning rate must be positive and discount in [0, 1]".into(),
            ));
        }
        if self.epsilon_start < self.epsilon_end {
            return Err(Error::Config(
                "epsilon schedule must be non-increasing".into(),
            ));
        }
        Ok(())
    }

    fn epsilon_at(&self, episode: usize) -> f64 {
        if self.epsilon_decay_episodes == 0 || episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let frac = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }
}

/// Training-curve row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimEpochStats {
    pub episode: usize,
    pub epsilon: f64,
    /// Mean training-episode reward over the last logging window.
    pub mean_reward: f64,
    pub win_rate: Option<f64>,
}

struct JointTransition {
    obs: Vec<Option<Array>>,
    actions: Vec<Option<usize>>,
    reward: f64,
    next_obs: Vec<Option<Array>>,
    done: bool,
}

/// Uniform-random joint policy, used as the under-trained baseline.
pub(crate) struct RandomPolicyHook {
    rng: rand_chacha::ChaCha8Rng,
    action_count: usize,
}

impl RandomPolicyHook {
    pub(crate) fn new(seed: u64, action_count: usize) -> Self {
        Self {
            rng: rng_from(seed, 90),
            action_count,
        }
    }
}

impl AttackHook for RandomPolicyHook {
    fn intervene(&mut self, ctx: &StepContext<'_>) -> Result<StepIntervention> {
        let overrides = ctx
            .clean_obs
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_some())
            .map(|(i, _)| (i, self.rng.gen_range(0..self.action_count)))
            .collect();
        Ok(StepIntervention {
            action_overrides: overrides,
            ..Default::default()
        })
    }
}

/// Train and freeze the target joint policy.
pub fn train_victim(
    env: EnvKind,
    config: &VictimTrainConfig,
) -> Result<(VictimPolicy, Vec<VictimEpochStats>)> {
    config.validate()?;
    let spec = env.spec();
    let mut sizes = vec![spec.obs_dim];
    sizes.extend_from_slice(&config.hidden);
    sizes.push(spec.action_count);
    let net_spec = MlpSpec::tanh(sizes)?;

    let mut online: Vec<Mlp> = (0..spec.n_agents)
        .map(|i| Mlp::init(net_spec.clone(), derive_seed(config.seed, 1000 + i as u64)))
        .collect::<Result<_>>()?;
    let mut target: Vec<Mlp> = online.clone();
    let mut opt: Vec<AdamState> = online.iter().map(|n| AdamState::new(&n.params)).collect();

    let mut replay: Vec<JointTransition> = Vec::new();
    let mut replay_head = 0usize;
    let mut rng = rng_from(config.seed, 2);
    let mut total_steps = 0usize;
    let mut updates = 0usize;

    let mut curve = Vec::new();
    let mut window_rewards: Vec<f64> = Vec::new();
    let mut window_wins: Vec<bool> = Vec::new();
    let log_every = (config.episodes / 20).max(1);

    for episode in 0..config.episodes {
        let epsilon = config.epsilon_at(episode);
        let mut state = env.reset(derive_seed(config.seed, 10_000 + episode as u64));
        let mut episode_reward = 0.0;
        let mut win = false;
        loop {
            let obs: Vec<Option<Array>> = (0..spec.n_agents)
                .map(|agent| {
                    env.agent_alive(&state, agent)
                        .then(|| env.observe(&state, agent).map(|o| o.vector))
                        .transpose()
                })
                .collect::<Result<_>>()?;
            let actions: Vec<Option<usize>> = obs
                .iter()
                .enumerate()
                .map(|(agent, o)| match o {
                    None => Ok(None),
                    Some(o) => {
                        if rng.gen::<f64>() < epsilon {
                            Ok(Some(rng.gen_range(0..spec.action_count)))
                        } else {
                            Ok(Some(argmax(online[agent].forward(o)?.data())))
                        }
                    }
                })
                .collect::<Result<_>>()?;
            let joint: Vec<usize> = actions.iter().map(|a| a.unwrap_or(0)).collect();
            let result = env.step(&state, &joint)?;
            episode_reward += result.reward;
            win = result.win == Some(true);

            let next_obs: Vec<Option<Array>> = (0..spec.n_agents)
                .map(|agent| {
                    env.agent_alive(&result.next_state, agent)
                        .then(|| env.observe(&result.next_state, agent).map(|o| o.vector))
                        .transpose()
                })
                .collect::<Result<_>>()?;
            let transition = JointTransition {
                obs,
                actions,
                reward: result.reward,
                next_obs,
                done: result.done,
            };
            if replay.len() < config.replay_capacity {
                replay.push(transition);
            } else {
                replay[replay_head] = transition;
                replay_head = (replay_head + 1) % config.replay_capacity;
            }
            total_steps += 1;

            if total_steps >= config.warmup_steps
                && total_steps % config.train_every == 0
                && replay.len() >= config.batch_size
            {
                let indices: Vec<usize> = (0..config.batch_size)
                    .map(|_| rng.gen_range(0..replay.len()))
                    .collect();
                for agent in 0..spec.n_agents {
                    train_agent_batch(
                        agent,
                        &indices,
                        &replay,
                        &mut online[agent],
                        &target[agent],
                        &mut opt[agent],
                        config,
                    )?;
                }
                updates += 1;
                if updates % config.target_sync_updates == 0 {
                    target = online.clone();
                }
            }

            if result.done {
                break;
            }
            state = result.next_state;
        }

        window_rewards.push(episode_reward);
        window_wins.push(win);
        if (episode + 1) % log_every == 0 {
            let mean = window_rewards.iter().sum::<f64>() / window_rewards.len() as f64;
            curve.push(VictimEpochStats {
                episode: episode + 1,
                epsilon,
                mean_reward: mean,
                win_rate: spec.has_win_flag.then(|| {
                    window_wins.iter().filter(|&&w| w).count() as f64 / window_wins.len() as f64
                }),
            });
            window_rewards.clear();
            window_wins.clear();
        }
    }

    let policy = VictimPolicy::from_nets(env, online);

    // Under-trained guard: paired shared-seed evaluation against a
    // uniform-random joint policy.
    let eval_seed = derive_seed(config.seed, 77);
    let (_, trained_summary) = rollout(env, &policy, config.eval_episodes, eval_seed, None)?;
    let mut random_hook = RandomPolicyHook::new(config.seed, spec.action_count);
    let (_, random_summary) = rollout(
        env,
        &policy,
        config.eval_episodes,
        eval_seed,
        Some(&mut random_hook),
    )?;
    let margin = trained_summary.mean_reward - random_summary.mean_reward;
    if margin < config.min_margin {
        return Err(Error::training(
            "victim under-trained: margin over random policy below configured minimum",
            &[
                ("mean_reward_trained", trained_summary.mean_reward),
                ("mean_reward_random", random_summary.mean_reward),
                ("margin", margin),
                ("min_margin", config.min_margin),
                ("win_rate", trained_summary.win_rate.unwrap_or(f64::NAN)),
            ],
        ));
    }
    curve.push(VictimEpochStats {
        episode: config.episodes,
        epsilon: config.epsilon_at(config.episodes),
        mean_reward: trained_summary.mean_reward,
        win_rate: trained_summary.win_rate,
    });
    Ok((policy, curve))
}

fn train_agent_batch(
    agent: usize,
    indices: &[usize],
    replay: &[JointTransition],
    online: &mut Mlp,
    target: &Mlp,
    opt: &mut AdamState,
    config: &VictimTrainConfig,
) -> Result<()> {
    let mut grads = online.params.zeros_like();
    let mut used = 0usize;
    for &idx in indices {
        let tr = &replay[idx];
        let (Some(obs), Some(action)) = (&tr.obs[agent], tr.actions[agent]) else {
            continue;
        };
        // Bootstrap only when the episode continues and the agent is
        // still alive afterwards.
        let bootstrap = match (&tr.next_obs[agent], tr.done) {
            (Some(next), false) => {
                let values = target.forward(next)?;
                config.discount * values.data().iter().cloned().fold(f64::MIN, f64::max)
            }
            _ => 0.0,
        };
        let td_target = tr.reward + bootstrap;
        let g = grad(
            &online.params,
            &online.spec,
            obs,
            &LossHead::HalfSquaredError {
                index: action,
                target: td_target,
            },
        )?;
        for (name, acc) in grads.iter_mut() {
            let part = g.d_params.get(name).unwrap();
            for (a, b) in acc.data_mut().iter_mut().zip(part.data()) {
                *a += b;
            }
        }
        used += 1;
    }
    if used == 0 {
        return Ok(());
    }
    let scale = 1.0 / used as f64;
    for (_, g) in grads.iter_mut() {
        for v in g.data_mut() {
            *v *= scale;
        }
    }
    let (new_params, new_state) = adam_step(
        &online.params,
        &grads,
        std::mem::replace(opt, AdamState::new(&online.params)),
        config.learning_rate,
    )?;
    online.params = new_params;
    *opt = new_state;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(seed: u64) -> VictimTrainConfig {
        VictimTrainConfig {
            episodes: 12,
            epsilon_decay_episodes: 8,
            warmup_steps: 20,
            eval_episodes: 4,
            min_margin: f64::NEG_INFINITY,
            hidden: vec![8],
            seed,
            ..VictimTrainConfig::default_for(EnvKind::CoopSpread)
        }
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let env = EnvKind::CoopSpread;
        let (a, _) = train_victim(env, &tiny_config(5)).unwrap();
        let (b, _) = train_victim(env, &tiny_config(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let pa = dir.path().join("a");
        let pb = dir.path().join("b");
        a.save(&pa).unwrap();
        b.save(&pb).unwrap();
        for i in 0..3 {
            let fa = std::fs::read(pa.join(format!("agent_{i}.ckpt"))).unwrap();
            let fb = std::fs::read(pb.join(format!("agent_{i}.ckpt"))).unwrap();
            assert_eq!(fa, fb);
        }
    }

    #[test]
    fn impossible_margin_fails_loudly_with_metrics() {
        let mut config = tiny_config(1);
        config.min_margin = 1e9;
        match train_victim(EnvKind::CoopSpread, &config) {
            Err(Error::Training { metrics, .. }) => {
                assert!(metrics.contains_key("mean_reward_trained"));
                assert!(metrics.contains_key("mean_reward_random"));
            }
            other => panic!("expected training failure, got {other:?}"),
        }
    }

    #[test]
    fn epsilon_schedule_is_monotone() {
        let config = tiny_config(0);
        let mut last = f64::INFINITY;
        for e in 0..=config.episodes {
            let eps = config.epsilon_at(e);
            assert!(eps <= last + 1e-12);
            last = eps;
        }
        assert!(config.epsilon_at(0) == config.epsilon_start);
        assert!(config.epsilon_at(config.episodes) == config.epsilon_end);
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let mut config = tiny_config(0);
        config.epsilon_start = 0.0;
        config.epsilon_end = 0.5;
        assert!(matches!(
            train_victim(EnvKind::CoopSpread, &config),
            Err(Error::Config(_))
        ));
    }
}

//! The target multi-agent system: training, the frozen deployment
//! policy, and instrumented rollouts.
//!
//! Everything outside this module interacts with the victim only
//! through [`VictimPolicy::act`] and [`rollout`] — parameters are not
//! exported, which enforces the black-box boundary at the interface
//! level.

mod rollout;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::ndmath::{argmax, load_checkpoint, save_checkpoint, Array, Mlp, MlpSpec};

pub use rollout::{
    rollout, AttackHook, EpisodeOutcome, RolloutSummary, StepContext, StepIntervention,
};
pub use train::{train_victim, VictimEpochStats, VictimTrainConfig};

/// Frozen joint policy of the target system: one action-value network
/// per agent, deterministic argmax at deployment with lowest-index tie
/// breaking.
#[derive(Debug, Clone)]
pub struct VictimPolicy {
    env: EnvKind,
    nets: Vec<Mlp>,
    deterministic: bool,
}

impl VictimPolicy {
    pub(crate) fn from_nets(env: EnvKind, nets: Vec<Mlp>) -> Self {
        debug_assert_eq!(nets.len(), env.spec().n_agents);
        Self {
            env,
            nets,
            deterministic: true,
        }
    }

    pub fn env(&self) -> EnvKind {
        self.env
    }

    pub fn n_agents(&self) -> usize {
        self.nets.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// The deployed action for `agent` given its local observation:
    /// argmax over the agent's value head, ties to the lowest index.
    /// Pure function of the observation.
    pub fn act(&self, agent: usize, observation: &Array) -> Result<usize> {
        let net = self
            .nets
            .get(agent)
            .ok_or_else(|| Error::Argument(format!("agent index {agent} out of range")))?;
        let values = net.forward(observation)?;
        Ok(argmax(values.data()))
    }

    /// Save one checkpoint per agent plus a joint manifest.
    pub fn save(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let mut manifest = VictimManifest {
            env: self.env.name().to_string(),
            agents: Vec::new(),
        };
        for (i, net) in self.nets.iter().enumerate() {
            let file = dir.join(format!("agent_{i}.ckpt"));
            save_checkpoint(&file, &net.params)?;
            manifest.agents.push(VictimAgentEntry {
                file: format!("agent_{i}.ckpt"),
                spec: net.spec.clone(),
            });
            paths.push(file);
        }
        let manifest_path = dir.join("victim.json");
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
        paths.push(manifest_path);
        Ok(paths)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: VictimManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("victim.json"))?)?;
        let env = EnvKind::parse(&manifest.env)?;
        let mut nets = Vec::new();
        for entry in &manifest.agents {
            let params = load_checkpoint(&dir.join(&entry.file))?;
            nets.push(Mlp {
                spec: entry.spec.clone(),
                params,
            });
        }
        if nets.len() != env.spec().n_agents {
            return Err(Error::Integrity(format!(
                "victim manifest lists {} agents, environment has {}",
                nets.len(),
                env.spec().n_agents
            )));
        }
        Ok(Self::from_nets(env, nets))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VictimManifest {
    env: String,
    agents: Vec<VictimAgentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VictimAgentEntry {
    file: String,
    spec: MlpSpec,
}

/// Test/ablation constructor: a victim with freshly initialized
/// (untrained) networks.
pub fn untrained_victim(env: EnvKind, hidden: &[usize], seed: u64) -> VictimPolicy {
    let spec = env.spec();
    let mut sizes = vec![spec.obs_dim];
    sizes.extend_from_slice(hidden);
    sizes.push(spec.action_count);
    let nets = (0..spec.n_agents)
        .map(|i| {
            Mlp::init(
                MlpSpec::tanh(sizes.clone()).unwrap(),
                crate::rng::derive_seed(seed, 1000 + i as u64),
            )
            .unwrap()
        })
        .collect();
    VictimPolicy::from_nets(env, nets)
}

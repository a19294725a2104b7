//! Episode logs: JSON-lines, one header record then one record per
//! timestep with the state vector, per-agent observations, actions,
//! reward, and attack annotations when present.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EPISODE_LOG_FORMAT: &str = "adapam-ep-1";

/// First line of a log file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLogHeader {
    pub format: String,
    pub env: String,
    pub n_agents: usize,
    pub episodes: usize,
    pub seed: u64,
}

/// Annotation of one attack applied at a timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub agent: usize,
    /// Action the attacker tried to induce; absent for pure-noise attacks.
    pub malicious_action: Option<usize>,
    /// Additive observation perturbation (perturbed minus clean);
    /// absent for action-override attacks.
    pub perturbation: Option<Vec<f64>>,
    pub linf: f64,
    pub l2: f64,
    /// Whether the proxy predicted the malicious action on the
    /// perturbed observation (crafted attacks only).
    pub success_proxy: Option<bool>,
    /// Whether the victim executed the malicious action.
    pub success_victim: Option<bool>,
    /// True when the attacked agent was alive and acting this step.
    pub target_alive: bool,
}

/// One timestep of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub t: usize,
    pub state: Vec<f64>,
    /// Observation each agent acted on (after any attack); `None` for
    /// dead agents.
    pub observations: Vec<Option<Vec<f64>>>,
    pub actions: Vec<Option<usize>>,
    pub reward: f64,
    pub done: bool,
    pub win: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attacks: Vec<AttackRecord>,
}

/// In-memory log of one full episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn win(&self) -> Option<bool> {
        self.steps.last().and_then(|s| s.win)
    }
}

pub fn write_episode_log(
    path: &Path,
    header: &EpisodeLogHeader,
    episodes: &[EpisodeLog],
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut file, header)?;
    file.write_all(b"\n")?;
    for ep in episodes {
        for step in &ep.steps {
            serde_json::to_writer(&mut file, step)?;
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_episode_log(path: &Path) -> Result<(EpisodeLogHeader, Vec<EpisodeLog>)> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Integrity(format!("{}: empty log", path.display())))??;
    let header: EpisodeLogHeader = serde_json::from_str(&header_line)?;
    if header.format != EPISODE_LOG_FORMAT {
        return Err(Error::Integrity(format!(
            "{}: unsupported log format '{}'",
            path.display(),
            header.format
        )));
    }
    let mut episodes: Vec<EpisodeLog> = Vec::new();
    for line in lines {
        let record: StepRecord = serde_json::from_str(&line?)?;
        match episodes.last_mut() {
            Some(ep) if ep.episode == record.episode => ep.steps.push(record),
            _ => episodes.push(EpisodeLog {
                episode: record.episode,
                steps: vec![record],
            }),
        }
    }
    Ok((header, episodes))
}

//! Run manifests: everything needed to reproduce a training run.
//!
//! A manifest pins the full scenario, the seed list, the policy, and the
//! episode budget. Re-running the same manifest reproduces every
//! deterministic artifact byte for byte (wall-clock timings live in
//! separate files).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;
use skyslice::agents::Algo;
use skyslice::config::ScenarioConfig;

/// What drives the drones: a learner or one of the built-in controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    Learner(Algo),
    Random,
    Hover,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Learner(a) => a.name(),
            PolicyKind::Random => "random",
            PolicyKind::Hover => "hover",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "hover" => Ok(PolicyKind::Hover),
            other => other.parse::<Algo>().map(PolicyKind::Learner),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    pub policy: PolicyKind,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub dump_trajectory: bool,
    /// Checkpoint cadence in episodes; 0 means final checkpoint only.
    pub checkpoint_every: usize,
    /// Artifact version tag recorded with every run.
    pub version_tag: String,
    pub out_dir: PathBuf,
}

impl RunManifest {
    pub fn version_tag_default() -> String {
        format!("skyslice-{}", env!("CARGO_PKG_VERSION"))
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("seed_{seed}"))
    }

    /// Persist the manifest: the scenario file plus a JSON run descriptor.
    pub fn save(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        std::fs::write(
            self.out_dir.join("config.scn"),
            self.config.to_file_string(),
        )?;
        let descriptor = json!({
            "policy": self.policy.name(),
            "seeds": self.seeds,
            "episodes": self.episodes,
            "dump_trajectory": self.dump_trajectory,
            "checkpoint_every": self.checkpoint_every,
            "version": self.version_tag,
        });
        std::fs::write(
            self.out_dir.join("manifest.json"),
            serde_json::to_string_pretty(&descriptor)?,
        )?;
        Ok(())
    }

    /// Reload a manifest previously written by [`RunManifest::save`].
    pub fn load(out_dir: &Path) -> Result<Self> {
        let config_path = out_dir.join("config.scn");
        let config_text = std::fs::read_to_string(&config_path)
            .with_context(|| format!("reading {}", config_path.display()))?;
        let config = ScenarioConfig::parse_str(&config_text)?;
        let descriptor: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json"))?)?;
        let policy: PolicyKind = descriptor["policy"]
            .as_str()
            .context("manifest missing policy")?
            .parse()
            .map_err(|e: String| anyhow::anyhow!(e))?;
        let seeds: Vec<u64> = descriptor["seeds"]
            .as_array()
            .context("manifest missing seeds")?
            .iter()
            .map(|v| v.as_u64().context("seed is not an integer"))
            .collect::<Result<_>>()?;
        if seeds.is_empty() {
            bail!("manifest has an empty seed list");
        }
        Ok(Self {
            config,
            policy,
            seeds,
            episodes: descriptor["episodes"].as_u64().context("missing episodes")? as usize,
            dump_trajectory: descriptor["dump_trajectory"].as_bool().unwrap_or(false),
            checkpoint_every: descriptor["checkpoint_every"].as_u64().unwrap_or(0) as usize,
            version_tag: descriptor["version"]
                .as_str()
                .unwrap_or("unknown")
                .to_string(),
            out_dir: out_dir.to_path_buf(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skyslice::config::ScenarioKind;

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = RunManifest {
            config: ScenarioConfig::preset(ScenarioKind::Urban),
            policy: PolicyKind::Learner(Algo::Madqn),
            seeds: vec![1, 2, 3],
            episodes: 7,
            dump_trajectory: true,
            checkpoint_every: 2,
            version_tag: RunManifest::version_tag_default(),
            out_dir: dir.path().to_path_buf(),
        };
        manifest.save().unwrap();
        let loaded = RunManifest::load(dir.path()).unwrap();
        assert_eq!(loaded.config, manifest.config);
        assert_eq!(loaded.policy, manifest.policy);
        assert_eq!(loaded.seeds, manifest.seeds);
        assert_eq!(loaded.episodes, 7);
        assert!(loaded.dump_trajectory);
        assert_eq!(loaded.checkpoint_every, 2);
    }

    #[test]
    fn policy_kind_parses() {
        assert_eq!("random".parse::<PolicyKind>().unwrap(), PolicyKind::Random);
        assert_eq!("hover".parse::<PolicyKind>().unwrap(), PolicyKind::Hover);
        assert_eq!(
            "mappo".parse::<PolicyKind>().unwrap(),
            PolicyKind::Learner(Algo::Mappo)
        );
        assert!("warpdrive".parse::<PolicyKind>().is_err());
    }
}

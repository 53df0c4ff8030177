//! Seeded training execution: episode loops, metric/trajectory export,
//! checkpointing, and resume.
//!
//! Every per-seed run writes into its own directory:
//!
//! ```text
//! out/
//!   manifest.json, config.scn
//!   seed_<s>/
//!     metrics.csv        one row per episode, fully deterministic
//!     trajectory.jsonl   optional per-step records (--dump-trajectory)
//!     stats.json         service statistics and timing summary
//!     timings.csv        wall-clock per episode (non-deterministic)
//!     checkpoints/       latest.ckpt, final.ckpt, ep<k>.ckpt
//! ```
//!
//! Episode streams are derived from `(seed, episode)`, so a manifest
//! re-run reproduces `metrics.csv` and `trajectory.jsonl` byte for byte;
//! wall-clock columns are quarantined in `timings.csv` and `stats.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;
use skyslice::config::{ScenarioConfig, UserClass};
use skyslice::qos::ClassAggregates;
use skyslice::rng::{derive_seed, Stream};
use skyslice::world::{StepOutcome, WorldState};

use crate::manifest::{PolicyKind, RunManifest};
use crate::policy::Policy;
use crate::sysinfo::peak_rss_mb;

/// Stream tags for harness-owned randomness; disjoint from the world's
/// internal stream ids.
const TAG_AGENT_INIT: u64 = 100;
const TAG_EPISODE_BASE: u64 = 1_000;

pub const METRICS_HEADER: &str = "episode,steps,cum_reward,mean_r_latency,mean_r_throughput,mean_r_sinr,mean_r_eff,mean_r_bonus,mean_p_low,mean_e_total,mean_r_energy,mean_qos_a,mean_qos_b,mean_qos_c,mean_objective,battery_min,battery_mean,served_a_mean,served_b_mean,served_c_mean,unserved_mean,violations_velocity,violations_grid,violations_altitude,violations_separation,violations_station,low_battery_events";

/// Per-class generated/served-at-least-once tallies for a whole run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UserServiceStats {
    pub generated: [u64; 3],
    pub served_at_least_once: [u64; 3],
}

impl UserServiceStats {
    pub fn add_episode(&mut self, world: &WorldState) {
        for user in &world.users {
            let idx = user.class.priority();
            self.generated[idx] += 1;
            if user.ever_served {
                self.served_at_least_once[idx] += 1;
            }
        }
    }

    pub fn served_fraction(&self, class: UserClass) -> f64 {
        let idx = class.priority();
        if self.generated[idx] == 0 {
            return 0.0;
        }
        self.served_at_least_once[idx] as f64 / self.generated[idx] as f64
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("user type | total generated | served at least once\n");
        out.push_str("----------|-----------------|----------------------\n");
        for class in UserClass::ALL {
            let idx = class.priority();
            out.push_str(&format!(
                "{:<9} | {:>15} | {:>20}\n",
                class.label(),
                self.generated[idx],
                self.served_at_least_once[idx]
            ));
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
struct EpisodeAccumulator {
    steps: usize,
    cum_reward: f64,
    r_latency: f64,
    r_throughput: f64,
    r_sinr: f64,
    r_eff: f64,
    r_bonus: f64,
    p_low: f64,
    e_total: f64,
    r_energy: f64,
    qos: [f64; 3],
    objective: f64,
    battery_min: f64,
    battery_mean: f64,
    served: [f64; 3],
    unserved: f64,
}

impl EpisodeAccumulator {
    fn new() -> Self {
        Self {
            battery_min: f64::INFINITY,
            ..Self::default()
        }
    }

    fn add(&mut self, outcome: &StepOutcome, config: &ScenarioConfig) {
        let r = &outcome.reward;
        self.steps += 1;
        self.cum_reward += r.total;
        self.r_latency += r.r_latency;
        self.r_throughput += r.r_throughput;
        self.r_sinr += r.r_sinr;
        self.r_eff += r.r_eff;
        self.r_bonus += r.r_bonus;
        self.p_low += r.p_low;
        self.e_total += r.e_total;
        self.r_energy += r.r_energy;
        for (i, class) in UserClass::ALL.iter().enumerate() {
            self.qos[i] +=
                skyslice::qos::qos_score(&outcome.info.aggregates[i], config.targets(*class));
        }
        self.objective += outcome.info.objective;
        self.battery_min = self.battery_min.min(outcome.info.battery_min);
        self.battery_mean += outcome.info.battery_mean;
        for i in 0..3 {
            self.served[i] += outcome.info.served_per_class[i] as f64;
        }
        self.unserved += outcome.info.unserved as f64;
    }

    fn csv_row(&self, episode: usize, world: &WorldState) -> String {
        let n = self.steps.max(1) as f64;
        let v = &world.violations;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            episode,
            self.steps,
            self.cum_reward,
            self.r_latency / n,
            self.r_throughput / n,
            self.r_sinr / n,
            self.r_eff / n,
            self.r_bonus / n,
            self.p_low / n,
            self.e_total / n,
            self.r_energy / n,
            self.qos[0] / n,
            self.qos[1] / n,
            self.qos[2] / n,
            self.objective / n,
            self.battery_min,
            self.battery_mean / n,
            self.served[0] / n,
            self.served[1] / n,
            self.served[2] / n,
            self.unserved / n,
            v.velocity_clips,
            v.grid_clamps,
            v.altitude_clamps,
            v.separation_pushes,
            v.station_clips,
            v.low_battery_events
        )
    }
}

fn aggregates_json(aggs: &ClassAggregates) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for agg in aggs {
        let entry = match &agg.means {
            Some(m) => json!({
                "count": agg.count,
                "latency_ms": m.latency_ms,
                "throughput_mbps": m.throughput_mbps,
                "sinr_db": m.sinr_db,
            }),
            None => json!({ "count": 0 }),
        };
        map.insert(agg.class.label().to_string(), entry);
    }
    serde_json::Value::Object(map)
}

fn episode_start_record(episode: usize, seed: u64, world: &WorldState) -> serde_json::Value {
    json!({
        "kind": "episode_start",
        "episode": episode,
        "seed": seed,
        "drones": world.drones.len(),
        "users": world
            .users
            .iter()
            .map(|u| json!({ "id": u.id, "class": u.class.label() }))
            .collect::<Vec<_>>(),
    })
}

fn step_record(episode: usize, t: usize, outcome: &StepOutcome, world: &WorldState) -> serde_json::Value {
    let r = &outcome.reward;
    json!({
        "kind": "step",
        "episode": episode,
        "t": t,
        "positions": world.drones.iter().map(|d| d.position).collect::<Vec<_>>(),
        "velocities": world.drones.iter().map(|d| d.velocity).collect::<Vec<_>>(),
        "batteries": world.drones.iter().map(|d| d.battery).collect::<Vec<_>>(),
        "charging": outcome.info.charging,
        "station": world.station.position,
        "served": outcome.info.served_user_ids,
        "counts": outcome.info.served_per_class,
        "covered_a": outcome.info.covered_a,
        "aggregates": aggregates_json(&outcome.info.aggregates),
        "reward": {
            "r_latency": r.r_latency,
            "r_throughput": r.r_throughput,
            "r_sinr": r.r_sinr,
            "r_eff": r.r_eff,
            "r_bonus": r.r_bonus,
            "p_low": r.p_low,
            "e_total": r.e_total,
            "r_energy": r.r_energy,
            "total": r.total,
        },
        "objective": outcome.info.objective,
    })
}

pub struct SeedRunSummary {
    pub seed: u64,
    pub seed_dir: PathBuf,
    pub episodes_run: usize,
    pub stats: UserServiceStats,
    pub wall_seconds: f64,
}

/// Train (or roll out a control policy) for every seed in the manifest.
pub fn run_training(manifest: &RunManifest) -> Result<Vec<SeedRunSummary>> {
    manifest.config.validate()?;
    manifest.save()?;
    let mut summaries = Vec::new();
    for &seed in &manifest.seeds {
        summaries.push(run_seed(manifest, seed, false)?);
    }
    Ok(summaries)
}

/// Resume every seed of a previously saved manifest from its latest
/// checkpoint (learners only; control policies just re-run).
pub fn resume_training(manifest: &RunManifest) -> Result<Vec<SeedRunSummary>> {
    let mut summaries = Vec::new();
    for &seed in &manifest.seeds {
        summaries.push(run_seed(manifest, seed, true)?);
    }
    Ok(summaries)
}

struct ResumePoint {
    policy: Policy,
    next_episode: usize,
    stats: UserServiceStats,
}

fn load_resume_point(manifest: &RunManifest, seed: u64) -> Result<Option<ResumePoint>> {
    let seed_dir = manifest.seed_dir(seed);
    let marker = seed_dir.join("checkpoints/latest.json");
    if !marker.exists() {
        return Ok(None);
    }
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&marker)?)?;
    let next_episode = meta["next_episode"].as_u64().context("bad marker")? as usize;
    let mut stats = UserServiceStats::default();
    for (i, _) in UserClass::ALL.iter().enumerate() {
        stats.generated[i] = meta["generated"][i].as_u64().unwrap_or(0);
        stats.served_at_least_once[i] = meta["served"][i].as_u64().unwrap_or(0);
    }
    let bundle_path = seed_dir.join("checkpoints/latest.ckpt");
    let policy = if bundle_path.exists() {
        Policy::from_bundle(skyslice::agents::AgentBundle::load(&bundle_path)?)
    } else {
        match manifest.policy {
            PolicyKind::Random => Policy::random(&manifest.config),
            PolicyKind::Hover => Policy::hover(&manifest.config),
            PolicyKind::Learner(_) => anyhow::bail!(
                "resume marker exists but checkpoint {} is missing",
                bundle_path.display()
            ),
        }
    };
    Ok(Some(ResumePoint {
        policy,
        next_episode,
        stats,
    }))
}

/// Drop metrics/trajectory rows from episodes at or past `from_episode`
/// so a resumed run appends cleanly.
fn truncate_exports(seed_dir: &Path, from_episode: usize, dump: bool) -> Result<()> {
    let metrics = seed_dir.join("metrics.csv");
    if metrics.exists() {
        let text = std::fs::read_to_string(&metrics)?;
        let mut kept: Vec<&str> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                kept.push(line);
                continue;
            }
            let episode: usize = line.split(',').next().unwrap_or("0").parse().unwrap_or(0);
            if episode < from_episode {
                kept.push(line);
            }
        }
        std::fs::write(&metrics, kept.join("\n") + "\n")?;
    }
    let trajectory = seed_dir.join("trajectory.jsonl");
    if dump && trajectory.exists() {
        let text = std::fs::read_to_string(&trajectory)?;
        let kept: Vec<&str> = text
            .lines()
            .filter(|line| {
                serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|v| v["episode"].as_u64())
                    .map(|e| (e as usize) < from_episode)
                    .unwrap_or(false)
            })
            .collect();
        std::fs::write(&trajectory, kept.join("\n") + "\n")?;
    }
    Ok(())
}

fn run_seed(manifest: &RunManifest, seed: u64, resume: bool) -> Result<SeedRunSummary> {
    let config = &manifest.config;
    let seed_dir = manifest.seed_dir(seed);
    std::fs::create_dir_all(seed_dir.join("checkpoints"))
        .with_context(|| format!("creating {}", seed_dir.display()))?;

    let resume_point = if resume { load_resume_point(manifest, seed)? } else { None };
    let (mut policy, start_episode, mut stats) = match resume_point {
        Some(p) => (p.policy, p.next_episode, p.stats),
        None => {
            let mut init_rng = Stream::from_seed(derive_seed(seed, TAG_AGENT_INIT));
            let policy = match manifest.policy {
                PolicyKind::Learner(algo) => Policy::new_learner(algo, config, &mut init_rng),
                PolicyKind::Random => Policy::random(config),
                PolicyKind::Hover => Policy::hover(config),
            };
            (policy, 0, UserServiceStats::default())
        }
    };

    let fresh = start_episode == 0;
    if fresh {
        std::fs::write(
            seed_dir.join("metrics.csv"),
            format!("{METRICS_HEADER}\n"),
        )?;
        std::fs::write(seed_dir.join("timings.csv"), "episode,wall_ms,steps_per_s\n")?;
        if manifest.dump_trajectory {
            std::fs::write(seed_dir.join("trajectory.jsonl"), "")?;
        }
    } else {
        truncate_exports(&seed_dir, start_episode, manifest.dump_trajectory)?;
    }

    let mut metrics = BufWriter::new(
        File::options()
            .append(true)
            .open(seed_dir.join("metrics.csv"))?,
    );
    let mut timings = BufWriter::new(
        File::options()
            .append(true)
            .create(true)
            .open(seed_dir.join("timings.csv"))?,
    );
    let mut trajectory = if manifest.dump_trajectory {
        Some(BufWriter::new(
            File::options()
                .append(true)
                .create(true)
                .open(seed_dir.join("trajectory.jsonl"))?,
        ))
    } else {
        None
    };

    let run_start = Instant::now();
    let mut total_steps = 0usize;
    let mut sharp_eff_warned = false;
    for episode in start_episode..manifest.episodes {
        let episode_start = Instant::now();
        let episode_seed = derive_seed(seed, TAG_EPISODE_BASE + episode as u64);
        let (mut world, mut obs) = WorldState::reset(config, episode_seed);
        if let Some(w) = trajectory.as_mut() {
            serde_json::to_writer(&mut *w, &episode_start_record(episode, episode_seed, &world))?;
            w.write_all(b"\n")?;
        }
        let mut acc = EpisodeAccumulator::new();
        for t in 0..config.max_steps {
            let (action, meta) = policy.act(obs.as_slice(), &mut world.rng.exploration)?;
            let prev_obs: Vec<f64> = obs.as_slice().to_vec();
            let outcome = world.step(config, &action)?;
            // Split borrow: the learner may sample its buffer from the
            // exploration stream while the outcome is already owned.
            policy.observe(
                &prev_obs,
                meta,
                &action,
                &outcome,
                &mut world.rng.exploration,
            )?;
            acc.add(&outcome, config);
            if !sharp_eff_warned && outcome.reward.r_eff.abs() > 1e3 {
                eprintln!(
                    "warning: efficiency reward hit its sharp edge (|r_eff| = {:.3e} at episode {episode}, step {t})",
                    outcome.reward.r_eff
                );
                sharp_eff_warned = true;
            }
            if let Some(w) = trajectory.as_mut() {
                serde_json::to_writer(&mut *w, &step_record(episode, t, &outcome, &world))?;
                w.write_all(b"\n")?;
            }
            obs = outcome.observation;
            total_steps += 1;
        }
        policy.end_episode();
        stats.add_episode(&world);
        writeln!(metrics, "{}", acc.csv_row(episode, &world))?;
        let wall_ms = episode_start.elapsed().as_secs_f64() * 1e3;
        writeln!(
            timings,
            "{},{:.3},{:.1}",
            episode,
            wall_ms,
            config.max_steps as f64 / (wall_ms / 1e3).max(1e-9)
        )?;

        let cadence_hit =
            manifest.checkpoint_every > 0 && (episode + 1) % manifest.checkpoint_every == 0;
        if cadence_hit || episode + 1 == manifest.episodes {
            metrics.flush()?;
            timings.flush()?;
            if let Some(w) = trajectory.as_mut() {
                w.flush()?;
            }
            write_checkpoint(&seed_dir, &policy, episode + 1, &stats, cadence_hit)?;
        }
    }
    metrics.flush()?;
    timings.flush()?;
    if let Some(w) = trajectory.as_mut() {
        w.flush()?;
    }

    let wall_seconds = run_start.elapsed().as_secs_f64();
    if let Some(bundle) = policy.to_bundle() {
        bundle.save(&seed_dir.join("checkpoints/final.ckpt"))?;
    }
    let stats_json = json!({
        "scenario": config.scenario_kind.name(),
        "policy": manifest.policy.name(),
        "seed": seed,
        "episodes": manifest.episodes,
        "steps_per_episode": config.max_steps,
        "version": manifest.version_tag,
        "user_stats": user_stats_json(&stats),
        "timing": {
            "wall_s": wall_seconds,
            "steps_per_s": total_steps as f64 / wall_seconds.max(1e-9),
            "peak_rss_mb": peak_rss_mb(),
        },
    });
    std::fs::write(
        seed_dir.join("stats.json"),
        serde_json::to_string_pretty(&stats_json)?,
    )?;

    Ok(SeedRunSummary {
        seed,
        seed_dir,
        episodes_run: manifest.episodes - start_episode,
        stats,
        wall_seconds,
    })
}

pub fn user_stats_json(stats: &UserServiceStats) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for class in UserClass::ALL {
        let idx = class.priority();
        map.insert(
            class.label().to_string(),
            json!({
                "generated": stats.generated[idx],
                "served_at_least_once": stats.served_at_least_once[idx],
            }),
        );
    }
    serde_json::Value::Object(map)
}

fn write_checkpoint(
    seed_dir: &Path,
    policy: &Policy,
    next_episode: usize,
    stats: &UserServiceStats,
    keep_numbered: bool,
) -> Result<()> {
    let dir = seed_dir.join("checkpoints");
    if let Some(bundle) = policy.to_bundle() {
        bundle.save(&dir.join("latest.ckpt"))?;
        if keep_numbered {
            bundle.save(&dir.join(format!("ep{next_episode}.ckpt")))?;
        }
    }
    let marker = json!({
        "next_episode": next_episode,
        "generated": stats.generated,
        "served": stats.served_at_least_once,
    });
    std::fs::write(dir.join("latest.json"), serde_json::to_string(&marker)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use skyslice::agents::Algo;
    use skyslice::config::{ClassRange, ScenarioKind};

    fn tiny_manifest(dir: &Path, policy: PolicyKind, dump: bool) -> RunManifest {
        let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
        config.n_drones = 2;
        config.max_steps = 25;
        config.users_a = ClassRange { min: 4, max: 4 };
        config.users_b = ClassRange { min: 3, max: 3 };
        config.users_c = ClassRange { min: 2, max: 2 };
        config.agents.madqn.hidden = [16, 16];
        config.agents.madqn.batch_size = 16;
        config.agents.madqn.buffer_size = 256;
        RunManifest {
            config,
            policy,
            seeds: vec![3],
            episodes: 2,
            dump_trajectory: dump,
            checkpoint_every: 0,
            version_tag: RunManifest::version_tag_default(),
            out_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn training_produces_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_manifest(dir.path(), PolicyKind::Learner(Algo::Madqn), true);
        let summaries = run_training(&manifest).unwrap();
        assert_eq!(summaries.len(), 1);
        let seed_dir = &summaries[0].seed_dir;
        for f in ["metrics.csv", "trajectory.jsonl", "stats.json", "timings.csv"] {
            assert!(seed_dir.join(f).exists(), "missing {f}");
        }
        assert!(seed_dir.join("checkpoints/final.ckpt").exists());
        let metrics = std::fs::read_to_string(seed_dir.join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 3); // header + 2 episodes
        assert!(metrics.starts_with(METRICS_HEADER));
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let manifest_a = tiny_manifest(dir_a.path(), PolicyKind::Random, true);
        let manifest_b = tiny_manifest(dir_b.path(), PolicyKind::Random, true);
        run_training(&manifest_a).unwrap();
        run_training(&manifest_b).unwrap();
        for f in ["metrics.csv", "trajectory.jsonl"] {
            let a = std::fs::read(manifest_a.seed_dir(3).join(f)).unwrap();
            let b = std::fs::read(manifest_b.seed_dir(3).join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between identical manifests");
        }
    }

    #[test]
    fn cumulative_reward_matches_trajectory_recount() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_manifest(dir.path(), PolicyKind::Random, true);
        run_training(&manifest).unwrap();
        let seed_dir = manifest.seed_dir(3);
        let metrics = std::fs::read_to_string(seed_dir.join("metrics.csv")).unwrap();
        let trajectory = std::fs::read_to_string(seed_dir.join("trajectory.jsonl")).unwrap();
        let mut sums = vec![0.0f64; manifest.episodes];
        for line in trajectory.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            if v["kind"] == "step" {
                let e = v["episode"].as_u64().unwrap() as usize;
                sums[e] += v["reward"]["total"].as_f64().unwrap();
            }
        }
        for (row, line) in metrics.lines().skip(1).enumerate() {
            let cum: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!(
                (cum - sums[row]).abs() <= 1e-9 * cum.abs().max(1.0),
                "episode {row}: csv {cum} vs recount {}",
                sums[row]
            );
        }
    }

    #[test]
    fn resume_continues_to_completion() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = tiny_manifest(dir.path(), PolicyKind::Learner(Algo::Madqn), false);
        manifest.episodes = 1;
        manifest.checkpoint_every = 1;
        run_training(&manifest).unwrap();
        // Extend the budget and resume from the checkpoint.
        manifest.episodes = 3;
        manifest.save().unwrap();
        let summaries = resume_training(&manifest).unwrap();
        assert_eq!(summaries[0].episodes_run, 2);
        let metrics = std::fs::read_to_string(manifest.seed_dir(3).join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 4); // header + 3 episodes
    }
}

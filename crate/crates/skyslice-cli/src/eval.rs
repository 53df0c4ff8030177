//! Policy evaluation: greedy rollouts of a trained checkpoint alongside
//! the built-in random and static-hover controls, with per-seed sign
//! tests of the trained-vs-control ordering.

use std::path::Path;

use anyhow::Result;
use serde_json::json;
use skyslice::agents::AgentBundle;
use skyslice::config::{ScenarioConfig, UserClass};
use skyslice::error::SimError;
use skyslice::rng::derive_seed;
use skyslice::world::WorldState;

use crate::policy::Policy;
use crate::runner::UserServiceStats;

/// Evaluation episodes derive their streams from this tag family, so
/// evaluation never replays training episodes.
const TAG_EVAL_BASE: u64 = 50_000;

#[derive(Clone, Debug)]
pub struct PolicyEval {
    pub name: String,
    /// Mean cumulative reward per seed (averaged over episodes).
    pub per_seed_returns: Vec<f64>,
    pub return_mean: f64,
    pub return_std: f64,
    /// Per-class mean latency/throughput/SINR over all served steps.
    pub class_means: [Option<[f64; 3]>; 3],
    pub energy_per_episode: f64,
    pub service: UserServiceStats,
}

#[derive(Clone, Debug)]
pub struct SignTest {
    pub baseline: String,
    pub wins: usize,
    pub seeds: usize,
    /// One-sided binomial tail probability of at least `wins` wins under
    /// a fair coin.
    pub p_value: f64,
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub policies: Vec<PolicyEval>,
    pub sign_tests: Vec<SignTest>,
}

fn binomial_tail_at_least(wins: usize, n: usize) -> f64 {
    let mut tail = 0.0;
    for k in wins..=n {
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        tail += c * 0.5f64.powi(n as i32);
    }
    tail.min(1.0)
}

struct EvalAccumulator {
    returns_by_seed: Vec<f64>,
    metric_sums: [[f64; 3]; 3],
    metric_counts: [usize; 3],
    energy: f64,
    episodes: usize,
    service: UserServiceStats,
}

impl EvalAccumulator {
    fn new() -> Self {
        Self {
            returns_by_seed: Vec::new(),
            metric_sums: [[0.0; 3]; 3],
            metric_counts: [0; 3],
            energy: 0.0,
            episodes: 0,
            service: UserServiceStats::default(),
        }
    }

    fn finish(self, name: &str) -> PolicyEval {
        let n = self.returns_by_seed.len().max(1) as f64;
        let mean = self.returns_by_seed.iter().sum::<f64>() / n;
        let var = self
            .returns_by_seed
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / n;
        let mut class_means = [None; 3];
        for i in 0..3 {
            if self.metric_counts[i] > 0 {
                let c = self.metric_counts[i] as f64;
                class_means[i] = Some([
                    self.metric_sums[i][0] / c,
                    self.metric_sums[i][1] / c,
                    self.metric_sums[i][2] / c,
                ]);
            }
        }
        PolicyEval {
            name: name.to_string(),
            per_seed_returns: self.returns_by_seed,
            return_mean: mean,
            return_std: var.sqrt(),
            class_means,
            energy_per_episode: self.energy / self.episodes.max(1) as f64,
            service: self.service,
        }
    }
}

/// Greedy evaluation of one policy over `seeds x episodes`.
pub fn evaluate(
    policy: &Policy,
    name: &str,
    config: &ScenarioConfig,
    seeds: &[u64],
    episodes: usize,
) -> Result<PolicyEval> {
    let mut acc = EvalAccumulator::new();
    for &seed in seeds {
        let mut seed_return = 0.0;
        for episode in 0..episodes {
            let episode_seed = derive_seed(seed, TAG_EVAL_BASE + episode as u64);
            let (mut world, mut obs) = WorldState::reset(config, episode_seed);
            let mut cum = 0.0;
            for _ in 0..config.max_steps {
                let action = policy.act_greedy(obs.as_slice(), &mut world.rng.exploration)?;
                let outcome = world.step(config, &action)?;
                cum += outcome.reward.total;
                for (i, agg) in outcome.info.aggregates.iter().enumerate() {
                    if let Some(m) = &agg.means {
                        acc.metric_sums[i][0] += m.latency_ms;
                        acc.metric_sums[i][1] += m.throughput_mbps;
                        acc.metric_sums[i][2] += m.sinr_db;
                        acc.metric_counts[i] += 1;
                    }
                }
                acc.energy += outcome.info.energy_per_drone.iter().sum::<f64>();
                obs = outcome.observation;
            }
            acc.service.add_episode(&world);
            acc.episodes += 1;
            seed_return += cum;
        }
        acc.returns_by_seed.push(seed_return / episodes as f64);
    }
    Ok(acc.finish(name))
}

/// Evaluate a checkpoint against the built-in controls.
pub fn evaluate_checkpoint(
    checkpoint: &Path,
    config: &ScenarioConfig,
    seeds: &[u64],
    episodes: usize,
) -> Result<EvalReport> {
    let bundle = AgentBundle::load(checkpoint)?;
    if bundle.obs_dim() != config.observation_dim() {
        return Err(SimError::DimensionMismatch {
            checkpoint: bundle.obs_dim(),
            scenario: config.observation_dim(),
        }
        .into());
    }
    let name = format!("trained-{}", bundle.algo().name());
    let trained = Policy::from_bundle(bundle);
    evaluate_with_controls(&trained, &name, config, seeds, episodes)
}

/// Evaluate any policy next to the random and hover controls.
pub fn evaluate_with_controls(
    policy: &Policy,
    name: &str,
    config: &ScenarioConfig,
    seeds: &[u64],
    episodes: usize,
) -> Result<EvalReport> {
    let trained_eval = evaluate(policy, name, config, seeds, episodes)?;
    let random_eval = evaluate(&Policy::random(config), "random", config, seeds, episodes)?;
    let hover_eval = evaluate(&Policy::hover(config), "hover", config, seeds, episodes)?;

    let mut sign_tests = Vec::new();
    for control in [&random_eval, &hover_eval] {
        let wins = trained_eval
            .per_seed_returns
            .iter()
            .zip(&control.per_seed_returns)
            .filter(|(t, c)| t > c)
            .count();
        sign_tests.push(SignTest {
            baseline: control.name.clone(),
            wins,
            seeds: seeds.len(),
            p_value: binomial_tail_at_least(wins, seeds.len()),
        });
    }
    Ok(EvalReport {
        scenario: config.scenario_kind.name().to_string(),
        seeds: seeds.to_vec(),
        episodes,
        policies: vec![trained_eval, random_eval, hover_eval],
        sign_tests,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "scenario": self.scenario,
            "seeds": self.seeds,
            "episodes": self.episodes,
            "policies": self.policies.iter().map(|p| json!({
                "name": p.name,
                "per_seed_returns": p.per_seed_returns,
                "return_mean": p.return_mean,
                "return_std": p.return_std,
                "energy_per_episode": p.energy_per_episode,
                "class_means": UserClass::ALL.iter().enumerate().map(|(i, c)| {
                    let entry = match p.class_means[i] {
                        Some([l, t, s]) => json!({
                            "latency_ms": l,
                            "throughput_mbps": t,
                            "sinr_db": s,
                        }),
                        None => json!(null),
                    };
                    (c.label().to_string(), entry)
                }).collect::<serde_json::Map<_, _>>(),
                "service": crate::runner::user_stats_json(&p.service),
            })).collect::<Vec<_>>(),
            "sign_tests": self.sign_tests.iter().map(|t| json!({
                "baseline": t.baseline,
                "wins": t.wins,
                "seeds": t.seeds,
                "p_value": t.p_value,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "evaluation on {} ({} seeds x {} episodes)\n\n",
            self.scenario,
            self.seeds.len(),
            self.episodes
        ));
        out.push_str("policy            |     mean return |      std | energy/ep\n");
        out.push_str("------------------|-----------------|----------|----------\n");
        for p in &self.policies {
            out.push_str(&format!(
                "{:<17} | {:>15.2} | {:>8.2} | {:>8.2}\n",
                p.name, p.return_mean, p.return_std, p.energy_per_episode
            ));
        }
        out.push('\n');
        for t in &self.sign_tests {
            out.push_str(&format!(
                "vs {:<9}: {}/{} seeds better (sign-test p = {:.4})\n",
                t.baseline, t.wins, t.seeds, t.p_value
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skyslice::config::{ClassRange, ScenarioKind};

    fn tiny_config() -> ScenarioConfig {
        let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
        config.n_drones = 2;
        config.max_steps = 20;
        config.users_a = ClassRange { min: 4, max: 4 };
        config.users_b = ClassRange { min: 2, max: 2 };
        config.users_c = ClassRange { min: 2, max: 2 };
        config
    }

    #[test]
    fn binomial_tail_values() {
        assert!((binomial_tail_at_least(0, 5) - 1.0).abs() < 1e-12);
        assert!((binomial_tail_at_least(5, 5) - 0.03125).abs() < 1e-12);
        assert!((binomial_tail_at_least(4, 5) - 0.1875).abs() < 1e-12);
    }

    #[test]
    fn report_includes_both_controls() {
        let config = tiny_config();
        let hover = Policy::hover(&config);
        let report = evaluate_with_controls(&hover, "hover-candidate", &config, &[1, 2], 1).unwrap();
        let names: Vec<&str> = report.policies.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["hover-candidate", "random", "hover"]);
        assert_eq!(report.sign_tests.len(), 2);
        // Candidate equals the hover control on the same seeds: no wins.
        assert_eq!(report.sign_tests[1].wins, 0);
        let text = report.render_text();
        assert!(text.contains("random"));
        assert!(text.contains("sign-test"));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let config = tiny_config();
        let policy = Policy::random(&config);
        let a = evaluate(&policy, "random", &config, &[7], 2).unwrap();
        let b = evaluate(&policy, "random", &config, &[7], 2).unwrap();
        assert_eq!(a.per_seed_returns, b.per_seed_returns);
    }
}

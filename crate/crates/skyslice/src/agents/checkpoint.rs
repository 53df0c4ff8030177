//! Bundle checkpoints: hyperparameter header, exploration state, and all
//! networks with their optimizer moments. Replay contents are not
//! persisted; a resumed run refills its buffer from fresh experience.

use std::io::Read;
use std::path::Path;

use super::maddpg::MaddpgAgent;
use super::madqn::MadqnAgent;
use super::mappo::MappoAgent;
use super::replay::{ReplayBuffer, RolloutBuffer};
use super::{ActionGrid, AgentBundle, Algo};
use crate::config::{MaddpgParams, MadqnParams, MappoParams};
use crate::error::SimError;
use crate::nn::checkpoint::{
    read_f64, read_network, read_u32, read_u64, write_f64, write_network, write_u32, write_u64,
};
use crate::nn::Adam;

const MAGIC: &[u8; 4] = b"SSAB";
const VERSION: u32 = 1;

fn write_scale(buf: &mut Vec<u8>, scale: &[f64]) -> Result<(), SimError> {
    write_u64(buf, scale.len() as u64)?;
    for x in scale {
        write_f64(buf, *x)?;
    }
    Ok(())
}

fn read_scale(r: &mut impl Read) -> Result<Vec<f64>, SimError> {
    read_vec(r)
}

fn algo_tag(algo: Algo) -> u8 {
    match algo {
        Algo::Mappo => 0,
        Algo::Maddpg => 1,
        Algo::Madqn => 2,
    }
}

fn write_adam(buf: &mut Vec<u8>, adam: &Adam) -> Result<(), SimError> {
    write_f64(buf, adam.learning_rate)?;
    write_u64(buf, adam.step_count)?;
    let (m, v) = adam.moments();
    write_u32(buf, m.len() as u32)?;
    for (mw, mb) in m {
        write_u64(buf, mw.len() as u64)?;
        for x in mw {
            write_f64(buf, *x)?;
        }
        write_u64(buf, mb.len() as u64)?;
        for x in mb {
            write_f64(buf, *x)?;
        }
    }
    for (vw, vb) in v {
        write_u64(buf, vw.len() as u64)?;
        for x in vw {
            write_f64(buf, *x)?;
        }
        write_u64(buf, vb.len() as u64)?;
        for x in vb {
            write_f64(buf, *x)?;
        }
    }
    Ok(())
}

fn read_vec(r: &mut impl Read) -> Result<Vec<f64>, SimError> {
    let len = read_u64(r)? as usize;
    if len > 64 * 1024 * 1024 {
        return Err(SimError::Checkpoint(format!("implausible vector length {len}")));
    }
    let mut out = vec![0.0; len];
    for x in out.iter_mut() {
        *x = read_f64(r)?;
    }
    Ok(out)
}

fn read_adam(r: &mut impl Read) -> Result<Adam, SimError> {
    let learning_rate = read_f64(r)?;
    let step_count = read_u64(r)?;
    let layers = read_u32(r)? as usize;
    let mut m = Vec::with_capacity(layers);
    for _ in 0..layers {
        let mw = read_vec(r)?;
        let mb = read_vec(r)?;
        m.push((mw, mb));
    }
    let mut v = Vec::with_capacity(layers);
    for _ in 0..layers {
        let vw = read_vec(r)?;
        let vb = read_vec(r)?;
        v.push((vw, vb));
    }
    Ok(Adam::from_parts(learning_rate, step_count, m, v))
}

fn write_mappo_params(buf: &mut Vec<u8>, p: &MappoParams) -> Result<(), SimError> {
    write_f64(buf, p.gamma)?;
    write_f64(buf, p.tau)?;
    write_f64(buf, p.clip)?;
    write_f64(buf, p.learning_rate)?;
    write_u64(buf, p.hidden[0] as u64)?;
    write_u64(buf, p.hidden[1] as u64)?;
    write_f64(buf, p.gae_lambda)?;
    write_u64(buf, p.horizon as u64)?;
    write_u64(buf, p.epochs as u64)?;
    write_u64(buf, p.minibatch as u64)?;
    write_f64(buf, p.entropy_coef)?;
    Ok(())
}

fn read_mappo_params(r: &mut impl Read) -> Result<MappoParams, SimError> {
    Ok(MappoParams {
        gamma: read_f64(r)?,
        tau: read_f64(r)?,
        clip: read_f64(r)?,
        learning_rate: read_f64(r)?,
        hidden: [read_u64(r)? as usize, read_u64(r)? as usize],
        gae_lambda: read_f64(r)?,
        horizon: read_u64(r)? as usize,
        epochs: read_u64(r)? as usize,
        minibatch: read_u64(r)? as usize,
        entropy_coef: read_f64(r)?,
    })
}

fn write_maddpg_params(buf: &mut Vec<u8>, p: &MaddpgParams) -> Result<(), SimError> {
    write_f64(buf, p.gamma)?;
    write_f64(buf, p.tau)?;
    write_f64(buf, p.epsilon)?;
    write_f64(buf, p.learning_rate)?;
    write_u64(buf, p.hidden[0] as u64)?;
    write_u64(buf, p.hidden[1] as u64)?;
    write_u64(buf, p.batch_size as u64)?;
    write_u64(buf, p.buffer_size as u64)?;
    write_f64(buf, p.priority_alpha)?;
    write_f64(buf, p.beta0)?;
    write_u64(buf, p.beta_anneal_steps as u64)?;
    write_u64(buf, p.train_every as u64)?;
    Ok(())
}

fn read_maddpg_params(r: &mut impl Read) -> Result<MaddpgParams, SimError> {
    Ok(MaddpgParams {
        gamma: read_f64(r)?,
        tau: read_f64(r)?,
        epsilon: read_f64(r)?,
        learning_rate: read_f64(r)?,
        hidden: [read_u64(r)? as usize, read_u64(r)? as usize],
        batch_size: read_u64(r)? as usize,
        buffer_size: read_u64(r)? as usize,
        priority_alpha: read_f64(r)?,
        beta0: read_f64(r)?,
        beta_anneal_steps: read_u64(r)? as usize,
        train_every: read_u64(r)? as usize,
    })
}

fn write_madqn_params(buf: &mut Vec<u8>, p: &MadqnParams) -> Result<(), SimError> {
    write_f64(buf, p.gamma)?;
    write_f64(buf, p.tau)?;
    write_f64(buf, p.epsilon_start)?;
    write_f64(buf, p.epsilon_min)?;
    write_f64(buf, p.epsilon_decay)?;
    write_f64(buf, p.learning_rate)?;
    write_u64(buf, p.hidden[0] as u64)?;
    write_u64(buf, p.hidden[1] as u64)?;
    write_u64(buf, p.batch_size as u64)?;
    write_u64(buf, p.buffer_size as u64)?;
    write_f64(buf, p.priority_alpha)?;
    write_f64(buf, p.beta0)?;
    write_u64(buf, p.beta_anneal_steps as u64)?;
    write_u64(buf, p.train_every as u64)?;
    write_u64(buf, p.points_per_dim as u64)?;
    Ok(())
}

fn read_madqn_params(r: &mut impl Read) -> Result<MadqnParams, SimError> {
    Ok(MadqnParams {
        gamma: read_f64(r)?,
        tau: read_f64(r)?,
        epsilon_start: read_f64(r)?,
        epsilon_min: read_f64(r)?,
        epsilon_decay: read_f64(r)?,
        learning_rate: read_f64(r)?,
        hidden: [read_u64(r)? as usize, read_u64(r)? as usize],
        batch_size: read_u64(r)? as usize,
        buffer_size: read_u64(r)? as usize,
        priority_alpha: read_f64(r)?,
        beta0: read_f64(r)?,
        beta_anneal_steps: read_u64(r)? as usize,
        train_every: read_u64(r)? as usize,
        points_per_dim: read_u64(r)? as usize,
    })
}

pub fn save_bundle(path: &Path, bundle: &AgentBundle) -> Result<(), SimError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    write_u32(&mut buf, VERSION)?;
    buf.push(algo_tag(bundle.algo()));
    write_u64(&mut buf, bundle.obs_dim() as u64)?;
    write_u64(&mut buf, bundle.n_drones() as u64)?;
    match bundle {
        AgentBundle::Mappo(a) => {
            write_f64(&mut buf, a.v_max)?;
            write_scale(&mut buf, &a.obs_scale)?;
            write_mappo_params(&mut buf, &a.params)?;
            write_u64(&mut buf, a.policy_version)?;
            write_u32(&mut buf, a.actors.len() as u32)?;
            for actor in &a.actors {
                write_network(&mut buf, actor)?;
            }
            write_network(&mut buf, &a.critic)?;
            for opt in &a.actor_opts {
                write_adam(&mut buf, opt)?;
            }
            write_adam(&mut buf, &a.critic_opt)?;
        }
        AgentBundle::Maddpg(a) => {
            write_f64(&mut buf, a.v_max)?;
            write_scale(&mut buf, &a.obs_scale)?;
            write_maddpg_params(&mut buf, &a.params)?;
            write_u64(&mut buf, a.learn_calls)?;
            write_u32(&mut buf, a.actors.len() as u32)?;
            for net in a.actors.iter().chain(&a.actor_targets) {
                write_network(&mut buf, net)?;
            }
            write_network(&mut buf, &a.critic)?;
            write_network(&mut buf, &a.critic_target)?;
            for opt in &a.actor_opts {
                write_adam(&mut buf, opt)?;
            }
            write_adam(&mut buf, &a.critic_opt)?;
        }
        AgentBundle::Madqn(a) => {
            write_f64(&mut buf, a.grid.a_min.abs())?;
            write_scale(&mut buf, &a.obs_scale)?;
            write_madqn_params(&mut buf, &a.params)?;
            write_f64(&mut buf, a.epsilon)?;
            write_u64(&mut buf, a.learn_calls)?;
            write_f64(&mut buf, a.grid.a_min)?;
            write_f64(&mut buf, a.grid.step)?;
            write_u64(&mut buf, a.grid.points_per_dim as u64)?;
            write_u64(&mut buf, a.grid.dims as u64)?;
            write_network(&mut buf, &a.q)?;
            write_network(&mut buf, &a.q_target)?;
            write_adam(&mut buf, &a.optimizer)?;
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<AgentBundle, SimError> {
    let data = std::fs::read(path)?;
    let mut r = data.as_slice();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SimError::Checkpoint("not an agent checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SimError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let obs_dim = read_u64(&mut r)? as usize;
    let n_drones = read_u64(&mut r)? as usize;
    match tag[0] {
        0 => {
            let v_max = read_f64(&mut r)?;
            let obs_scale = read_scale(&mut r)?;
            let params = read_mappo_params(&mut r)?;
            let policy_version = read_u64(&mut r)?;
            let n_actors = read_u32(&mut r)? as usize;
            let mut actors = Vec::with_capacity(n_actors);
            for _ in 0..n_actors {
                actors.push(read_network(&mut r)?);
            }
            let critic = read_network(&mut r)?;
            let mut actor_opts = Vec::with_capacity(n_actors);
            for _ in 0..n_actors {
                actor_opts.push(read_adam(&mut r)?);
            }
            let critic_opt = read_adam(&mut r)?;
            let horizon = params.horizon;
            Ok(AgentBundle::Mappo(MappoAgent {
                params,
                n_drones,
                obs_dim,
                v_max,
                obs_scale,
                actors,
                critic,
                actor_opts,
                critic_opt,
                policy_version,
                rollout: RolloutBuffer::new(horizon, policy_version),
            }))
        }
        1 => {
            let v_max = read_f64(&mut r)?;
            let obs_scale = read_scale(&mut r)?;
            let params = read_maddpg_params(&mut r)?;
            let learn_calls = read_u64(&mut r)?;
            let n_actors = read_u32(&mut r)? as usize;
            let mut nets = Vec::with_capacity(2 * n_actors);
            for _ in 0..2 * n_actors {
                nets.push(read_network(&mut r)?);
            }
            let actor_targets = nets.split_off(n_actors);
            let actors = nets;
            let critic = read_network(&mut r)?;
            let critic_target = read_network(&mut r)?;
            let mut actor_opts = Vec::with_capacity(n_actors);
            for _ in 0..n_actors {
                actor_opts.push(read_adam(&mut r)?);
            }
            let critic_opt = read_adam(&mut r)?;
            let buffer = ReplayBuffer::new(
                params.buffer_size,
                params.priority_alpha,
                params.beta0,
                params.beta_anneal_steps,
            );
            Ok(AgentBundle::Maddpg(MaddpgAgent {
                params,
                n_drones,
                obs_dim,
                v_max,
                obs_scale,
                actors,
                actor_targets,
                critic,
                critic_target,
                actor_opts,
                critic_opt,
                buffer,
                learn_calls,
            }))
        }
        2 => {
            let _v_max = read_f64(&mut r)?;
            let obs_scale = read_scale(&mut r)?;
            let params = read_madqn_params(&mut r)?;
            let epsilon = read_f64(&mut r)?;
            let learn_calls = read_u64(&mut r)?;
            let a_min = read_f64(&mut r)?;
            let step = read_f64(&mut r)?;
            let points = read_u64(&mut r)? as usize;
            let dims = read_u64(&mut r)? as usize;
            let grid = ActionGrid::new(a_min, step, points, dims)?;
            let q = read_network(&mut r)?;
            let q_target = read_network(&mut r)?;
            let optimizer = read_adam(&mut r)?;
            let buffer = ReplayBuffer::new(
                params.buffer_size,
                params.priority_alpha,
                params.beta0,
                params.beta_anneal_steps,
            );
            Ok(AgentBundle::Madqn(MadqnAgent {
                params,
                n_drones,
                obs_dim,
                obs_scale,
                grid,
                q,
                q_target,
                optimizer,
                epsilon,
                buffer,
                learn_calls,
            }))
        }
        other => Err(SimError::Checkpoint(format!("unknown algorithm tag {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScenarioConfig, ScenarioKind};
    use crate::rng::Stream;

    fn small_config() -> ScenarioConfig {
        let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
        config.n_drones = 2;
        config.agents.mappo.hidden = [8, 8];
        config.agents.maddpg.hidden = [8, 8];
        config.agents.madqn.hidden = [8, 8];
        config
    }

    #[test]
    fn round_trip_preserves_greedy_policy() {
        let config = small_config();
        let dir = tempfile::tempdir().unwrap();
        let mut rng = Stream::from_seed(5);
        let obs = vec![0.25; config.observation_dim()];
        for algo in [Algo::Mappo, Algo::Maddpg, Algo::Madqn] {
            let bundle = AgentBundle::new(algo, &config, &mut rng);
            let path = dir.path().join(format!("{}.ckpt", algo.name()));
            bundle.save(&path).unwrap();
            let loaded = AgentBundle::load(&path).unwrap();
            assert_eq!(loaded.algo(), algo);
            assert_eq!(loaded.obs_dim(), bundle.obs_dim());
            assert_eq!(
                bundle.act_greedy(&obs).unwrap(),
                loaded.act_greedy(&obs).unwrap()
            );
        }
    }

    #[test]
    fn exploration_state_round_trips() {
        let config = small_config();
        let mut rng = Stream::from_seed(6);
        let AgentBundle::Madqn(mut dqn) = AgentBundle::new(Algo::Madqn, &config, &mut rng) else {
            unreachable!()
        };
        dqn.end_episode();
        dqn.end_episode();
        let eps = dqn.epsilon;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dqn.ckpt");
        AgentBundle::Madqn(dqn).save(&path).unwrap();
        let AgentBundle::Madqn(loaded) = AgentBundle::load(&path).unwrap() else {
            panic!("algo changed in round trip");
        };
        assert_eq!(loaded.epsilon, eps);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"SSNNnope").unwrap();
        assert!(load_bundle(&path).is_err());
    }
}

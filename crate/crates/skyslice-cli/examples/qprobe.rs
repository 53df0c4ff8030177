//! Scratch Q-value introspection (not part of the deliverable).
use skyslice::agents::AgentBundle;
use skyslice::rng::derive_seed;
use skyslice::world::WorldState;
use skyslice_cli::reduced_rural;

fn main() {
    let seed: u64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let config = reduced_rural();
    let bundle = AgentBundle::load(std::path::Path::new(&format!("/tmp/probe_seed{seed}.ckpt"))).unwrap();
    let AgentBundle::Madqn(agent) = bundle else { panic!() };
    for ep in 0..2u64 {
        let episode_seed = derive_seed(seed, 50_000 + ep);
        let (_, obs) = WorldState::reset(&config, episode_seed);
        let scaled: Vec<f64> = obs.as_slice().iter().zip(&agent.obs_scale).map(|(x, s)| x * s).collect();
        let q = agent.q.infer(&scaled).unwrap();
        for head in 0..2 {
            let vals = &q[head * 27..(head + 1) * 27];
            let mut idx: Vec<usize> = (0..27).collect();
            idx.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
            println!("ep{ep} head{head}: stay(13) q={:.1}; top3: {:?} range [{:.1}, {:.1}]",
                vals[13],
                idx[..3].iter().map(|&i| (i, agent.grid.vector(i), vals[i])).collect::<Vec<_>>(),
                vals[idx[26]], vals[idx[0]]);
        }
    }
}

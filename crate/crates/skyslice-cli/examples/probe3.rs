//! Scratch probe for a single trained seed (not part of the deliverable).
use skyslice::agents::AgentBundle;
use skyslice::rng::derive_seed;
use skyslice::world::WorldState;
use skyslice_cli::manifest::{PolicyKind, RunManifest};
use skyslice_cli::policy::Policy;
use skyslice_cli::reduced_rural;
use skyslice_cli::runner::run_training;

fn main() {
    let seed: u64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let config = reduced_rural();
    let ckpt = std::path::PathBuf::from(format!("/tmp/probe_seed{seed}.ckpt"));
    if !ckpt.exists() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = RunManifest {
            config: config.clone(), policy: PolicyKind::Learner(skyslice::agents::Algo::Madqn),
            seeds: vec![seed], episodes: 150, dump_trajectory: false, checkpoint_every: 0,
            version_tag: RunManifest::version_tag_default(), out_dir: dir.path().to_path_buf(),
        };
        let s = run_training(&manifest).unwrap();
        std::fs::copy(s[0].seed_dir.join("checkpoints/final.ckpt"), &ckpt).unwrap();
    }
    let bundle = AgentBundle::load(&ckpt).unwrap();
    let policy = Policy::from_bundle(bundle);
    for ep in 0..5u64 {
        let episode_seed = derive_seed(seed, 50_000 + ep);
        let (mut world, mut obs) = WorldState::reset(&config, episode_seed);
        let mut sums = [0.0f64; 9];
        let mut worst_step = (0usize, 0.0f64);
        for t in 0..config.max_steps {
            let action = policy.act_greedy(obs.as_slice(), &mut world.rng.exploration).unwrap();
            if t < 3 {
                let mv: Vec<f64> = action.0.iter().map(|a| (a[0]*a[0]+a[1]*a[1]+a[2]*a[2]).sqrt()).collect();
                println!("  ep{ep} t{t} |a| = {mv:?}");
            }
            let out = world.step(&config, &action).unwrap();
            let r = &out.reward;
            for (i, v) in [r.r_latency, r.r_throughput, r.r_sinr, r.r_eff, r.r_bonus, r.p_low, r.e_total, r.r_energy, r.total].iter().enumerate() {
                sums[i] += v;
            }
            if r.total < worst_step.1 { worst_step = (t, r.total); }
        }
        println!("ep{ep}: lat {:.0} thr {:.0} sinr {:.0} eff {:.0} bonus {:.0} plow {:.0} etot {:.0} renergy {:.0} TOTAL {:.0} worst step {} ({:.0})",
            sums[0], sums[1], sums[2], sums[3], sums[4], sums[5], sums[6], sums[7], sums[8], worst_step.0, worst_step.1);
    }
}

//! Scratch desk-scale experiment driver (not part of the deliverable tests).
use skyslice::agents::Algo;
use skyslice_cli::eval::evaluate;
use skyslice_cli::manifest::{PolicyKind, RunManifest};
use skyslice_cli::policy::Policy;
use skyslice_cli::reduced_rural;
use skyslice_cli::runner::run_training;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let algo = if args.get(1).map(|s| s.as_str()) == Some("mappo") { Algo::Mappo } else { Algo::Madqn };
    let seeds: Vec<u64> = args.get(2).map(|s| s.split(',').map(|x| x.parse().unwrap()).collect()).unwrap_or_else(|| vec![1]);
    let episodes: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(150);
    let config = reduced_rural();
    let t0 = std::time::Instant::now();
    let bundles: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds.iter().map(|&seed| {
            let config = config.clone();
            scope.spawn(move || {
                let dir = tempfile::tempdir().unwrap();
                let manifest = RunManifest {
                    config: config.clone(), policy: PolicyKind::Learner(algo), seeds: vec![seed],
                    episodes, dump_trajectory: false, checkpoint_every: 0,
                    version_tag: RunManifest::version_tag_default(), out_dir: dir.path().to_path_buf(),
                };
                let summaries = run_training(&manifest).unwrap();
                let m = std::fs::read_to_string(summaries[0].seed_dir.join("metrics.csv")).unwrap();
                let rows: Vec<&str> = m.lines().skip(1).collect();
                let cum = |line: &str| line.split(',').nth(2).unwrap().parse::<f64>().unwrap();
                eprintln!("seed {} train cum_reward: first {:.0} mid {:.0} last {:.0}",
                    seed, cum(rows[0]), cum(rows[rows.len()/2]), cum(rows[rows.len()-1]));
                skyslice::agents::AgentBundle::load(&summaries[0].seed_dir.join("checkpoints/final.ckpt")).unwrap()
            })
        }).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    println!("trained {} seeds in {:.0}s", seeds.len(), t0.elapsed().as_secs_f64());
    let mut wins_r = 0; let mut wins_h = 0;
    let mut t_sum = 0.0; let mut r_sum = 0.0; let mut h_sum = 0.0;
    for (bundle, &seed) in bundles.into_iter().zip(&seeds) {
        let policy = Policy::from_bundle(bundle);
        let t = evaluate(&policy, "trained", &config, &[seed], 5).unwrap();
        let r = evaluate(&Policy::random(&config), "random", &config, &[seed], 5).unwrap();
        let h = evaluate(&Policy::hover(&config), "hover", &config, &[seed], 5).unwrap();
        let (tv, rv, hv) = (t.per_seed_returns[0], r.per_seed_returns[0], h.per_seed_returns[0]);
        println!("seed {seed}: trained {tv:.0}  random {rv:.0}  hover {hv:.0}  | A_frac {:.3} C_frac {:.3}",
            t.service.served_fraction(skyslice::config::UserClass::A),
            t.service.served_fraction(skyslice::config::UserClass::C));
        if tv > rv { wins_r += 1; } if tv > hv { wins_h += 1; }
        t_sum += tv; r_sum += rv; h_sum += hv;
    }
    let n = seeds.len() as f64;
    println!("means: trained {:.0} random {:.0} hover {:.0}; wins vs random {wins_r}/{} vs hover {wins_h}/{}",
        t_sum/n, r_sum/n, h_sum/n, seeds.len(), seeds.len());
}

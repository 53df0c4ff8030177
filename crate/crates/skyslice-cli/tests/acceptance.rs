//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured values (run with `--nocapture` to see them).
//!
//! The heavyweight learning-sanity criterion trains five seeds of MADQN
//! and MAPPO at desk scale; both it and the priority-ordering criterion
//! share that training through a `OnceLock`.

use std::sync::OnceLock;
use std::time::Instant;

use skyslice::agents::{Algo, ReplayBuffer};
use skyslice::channel::{compute_sinr, path_gain, sample_link, ChannelParams, LinkSample};
use skyslice::config::{ScenarioConfig, ScenarioKind, UserClass};
use skyslice::nn::{check_gradients, Activation, Adam, Network, SquaredErrorLoss};
use skyslice::observation::ObsLayout;
use skyslice::qos::{latency_proxy, throughput_from_sinr, LatencyParams, DEFAULT_BANDWIDTH_MHZ};
use skyslice::rng::{derive_seed, Stream};
use skyslice::world::{JointAction, WorldState};
use skyslice_cli::eval::{evaluate, PolicyEval};
use skyslice_cli::manifest::{PolicyKind, RunManifest};
use skyslice_cli::policy::Policy;
use skyslice_cli::reduced_rural;
use skyslice_cli::runner::run_training;

fn random_action(n: usize, v_max: f64, rng: &mut Stream) -> JointAction {
    JointAction(
        (0..n)
            .map(|_| {
                [
                    rng.uniform_range(-1.5 * v_max, 1.5 * v_max),
                    rng.uniform_range(-1.5 * v_max, 1.5 * v_max),
                    rng.uniform_range(-1.5 * v_max, 1.5 * v_max),
                ]
            })
            .collect(),
    )
}

#[test]
fn c01_reward_ledger_identity() {
    let start = Instant::now();
    let config = ScenarioConfig::preset(ScenarioKind::Rural);
    let (mut world, _) = WorldState::reset(&config, 42);
    let mut action_rng = Stream::from_seed(derive_seed(42, 777));
    for t in 0..1000 {
        let action = random_action(config.n_drones, config.v_max, &mut action_rng);
        let outcome = world.step(&config, &action).unwrap();
        assert!(
            outcome
                .reward
                .identities_hold(config.qos_weight, config.energy_weight),
            "ledger identity broke at step {t}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.2}s, budget 10s");
    println!(
        "PASS criterion 1: reward-ledger identity bit-exact over 1000 random steps ({elapsed:.2}s)"
    );
}

#[test]
fn c02_constraint_suite() {
    let start = Instant::now();
    let mut total_steps = 0usize;
    for kind in [ScenarioKind::Urban, ScenarioKind::Rural] {
        let config = ScenarioConfig::preset(kind);
        for episode in 0..5u64 {
            let (mut world, _) = WorldState::reset(&config, 10 + episode);
            let mut action_rng = Stream::from_seed(derive_seed(episode, 31337));
            let mut prev_station = world.station.position;
            for _ in 0..1000 {
                let action = random_action(config.n_drones, config.v_max, &mut action_rng);
                world.step(&config, &action).unwrap();
                if let Some(violation) = world.check_invariants(&config) {
                    panic!("{} t={}: {violation}", kind.name(), world.t);
                }
                let moved = ((world.station.position[0] - prev_station[0]).powi(2)
                    + (world.station.position[1] - prev_station[1]).powi(2))
                .sqrt();
                assert!(
                    moved <= config.delta_station + 1e-9,
                    "station moved {moved} > {}",
                    config.delta_station
                );
                prev_station = world.station.position;
                total_steps += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(total_steps, 10_000);
    assert!(elapsed < 60.0, "took {elapsed:.2}s, budget 60s");
    println!(
        "PASS criterion 2: zero post-step constraint violations over {total_steps} random steps across both presets ({elapsed:.2}s)"
    );
}

#[test]
fn c03_observation_contract() {
    let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
    for (n, want) in [(2usize, 24usize), (3, 30), (4, 36), (6, 48)] {
        config.n_drones = n;
        let layout = ObsLayout::new(n);
        assert_eq!(layout.len(), 6 * n + 12);
        assert_eq!(layout.positions(), 0..3 * n);
        assert_eq!(layout.batteries(), 3 * n..4 * n);
        assert_eq!(layout.counts(), 4 * n..4 * n + 3);
        assert_eq!(layout.velocities(), 4 * n + 3..6 * n + 3);
        assert_eq!(layout.qos(), 6 * n + 3..6 * n + 12);

        let (mut world, obs) = WorldState::reset(&config, 5);
        assert_eq!(obs.len(), want, "reset observation length at N={n}");
        assert!(obs.batteries().iter().all(|&b| b == 100.0));
        let outcome = world
            .step(&config, &JointAction::zeros(config.n_drones))
            .unwrap();
        let obs = &outcome.observation;
        assert_eq!(obs.len(), want, "step observation length at N={n}");
        // Index-map spot checks against the world state.
        for (i, drone) in world.drones.iter().enumerate() {
            assert_eq!(obs.as_slice()[3 * i], drone.position[0]);
            assert_eq!(obs.as_slice()[3 * n + i], drone.battery);
            assert_eq!(obs.as_slice()[4 * n + 3 + 2 * i], drone.velocity[0]);
            assert_eq!(obs.as_slice()[4 * n + 3 + 2 * i + 1], drone.velocity[1]);
        }
        let counts = obs.counts();
        let served: f64 = outcome.info.served_per_class.iter().map(|&c| c as f64).sum();
        assert_eq!(counts.iter().sum::<f64>(), served);
    }
    assert_eq!(ObsLayout::new(4).len(), 36);
    println!("PASS criterion 3: observation length 6N+12 for N in {{2,3,4,6}} with asserted index map (36 at N=4)");
}

#[test]
fn c04_metric_oracles() {
    // Throughput oracle, exact.
    assert_eq!(throughput_from_sinr(1.0, 36.0).unwrap(), 36.0);
    assert_eq!(throughput_from_sinr(1.0, DEFAULT_BANDWIDTH_MHZ).unwrap(), 36.0);

    // SINR hand case: unit link, noise 0.1.
    let mut params = ChannelParams::rural_default();
    params.noise_power = 0.1;
    let serving = LinkSample {
        los: true,
        distance: 1.0,
        power_gain: 1.0,
    };
    let sinr = compute_sinr(&serving, &[], &params);
    assert!((sinr.linear - 10.0).abs() < 1e-12);
    assert!((sinr.db - 10.0).abs() < 1e-9, "sinr {} dB", sinr.db);

    // Latency band over 1e5 random links through the full metric path.
    let latency_params = LatencyParams::default();
    let channel = ChannelParams::urban_default();
    let mut rng = Stream::from_seed(1234);
    for _ in 0..100_000 {
        let a = [
            rng.uniform_range(0.0, 10.0),
            rng.uniform_range(0.0, 10.0),
            rng.uniform_range(1.0, 10.0),
        ];
        let b = [rng.uniform_range(0.0, 10.0), rng.uniform_range(0.0, 10.0), 0.0];
        let link = sample_link(&mut rng, a, b, &channel);
        let sinr = compute_sinr(&link, &[], &channel);
        let throughput = throughput_from_sinr(sinr.linear, DEFAULT_BANDWIDTH_MHZ).unwrap();
        let speed = rng.uniform_range(0.0, 1.0);
        let latency = latency_proxy(link.distance, throughput, speed, &latency_params);
        assert!(
            (1.0..=40.0).contains(&latency),
            "latency {latency} outside [1, 40]"
        );
    }
    println!("PASS criterion 4: throughput(1,36)=36 exactly, SINR hand case 10 dB, latency in [1,40] ms over 1e5 links");
}

#[test]
fn c05_gradient_checks() {
    let start = Instant::now();
    let obs_dim = 36;
    let n_drones = 4;
    let specs: [(&str, Vec<usize>, Activation); 3] = [
        ("actor", vec![obs_dim, 128, 128, 3], Activation::Tanh),
        (
            "critic",
            vec![obs_dim + 3 * n_drones, 128, 128, 1],
            Activation::Linear,
        ),
        ("q-network", vec![obs_dim, 128, 128, 27], Activation::Linear),
    ];
    let mut worst: f64 = 0.0;
    for (name, sizes, head) in specs {
        let mut rng = Stream::from_seed(2024);
        let mut net = Network::mlp(&sizes, Activation::Relu, head, &mut rng);
        let input: Vec<f64> = (0..sizes[0]).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let target: Vec<f64> = (0..*sizes.last().unwrap())
            .map(|_| rng.uniform_range(-1.0, 1.0))
            .collect();
        let loss = SquaredErrorLoss { input, target };

        let at_init = check_gradients(&net, &loss, 1e-4).unwrap();
        assert!(
            at_init.pass,
            "{name} at init: max rel error {}",
            at_init.max_rel_error
        );

        let mut adam = Adam::new(&net, 0.001);
        for _ in 0..100 {
            let grads = loss.gradients(&net).unwrap();
            adam.step(&mut net, &grads).unwrap();
        }
        let trained = check_gradients(&net, &loss, 1e-4).unwrap();
        assert!(
            trained.pass,
            "{name} after 100 updates: max rel error {}",
            trained.max_rel_error
        );
        worst = worst.max(at_init.max_rel_error).max(trained.max_rel_error);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.2}s, budget 60s");
    println!(
        "PASS criterion 5: gradient checks for actor/critic/q-network at init and after 100 updates, worst rel error {worst:.3e} ({elapsed:.2}s)"
    );
}

#[test]
fn c06_prioritized_replay_law() {
    // Two items with raw priorities 8 and 1 at alpha = 0.6.
    let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(2, 0.6, 1.0, 0);
    buf.push(0);
    buf.push(1);
    buf.set_raw_priority(0, 8.0);
    buf.set_raw_priority(1, 1.0);
    let mut rng = Stream::from_seed(99);
    let mut counts = [0usize; 2];
    for _ in 0..50_000 {
        let batch = buf.sample(2, &mut rng).unwrap();
        for idx in batch.indices {
            counts[idx] += 1;
        }
    }
    let ratio = counts[0] as f64 / counts[1] as f64;
    let expect = 8f64.powf(0.6);
    let rel = (ratio - expect).abs() / expect;
    assert!(rel < 0.05, "ratio {ratio:.3} vs {expect:.3} ({rel:.3} off)");

    // Uniform priorities: chi-squared uniformity at p > 0.01.
    let n = 16;
    let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(n, 0.6, 1.0, 0);
    for i in 0..n as u32 {
        buf.push(i);
    }
    let mut counts = vec![0usize; n];
    let draws = 100_000;
    let mut rng = Stream::from_seed(101);
    for _ in 0..draws / n {
        let batch = buf.sample(n, &mut rng).unwrap();
        for idx in batch.indices {
            counts[idx] += 1;
        }
    }
    let expected = draws as f64 / n as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 15 degrees of freedom: the p = 0.01 critical value is 30.578.
    assert!(chi2 < 30.578, "chi2 {chi2:.2} rejects uniformity at p=0.01");
    println!(
        "PASS criterion 6: sampling ratio {ratio:.3} within 5% of 8^0.6 = {expect:.3}; uniform chi2 {chi2:.2} < 30.578"
    );
}

#[test]
fn c07_exploration_schedule() {
    let config = reduced_rural();
    let mut rng = Stream::from_seed(7);
    let skyslice::agents::AgentBundle::Madqn(mut agent) =
        skyslice::agents::AgentBundle::new(Algo::Madqn, &config, &mut rng)
    else {
        unreachable!()
    };
    assert_eq!(agent.epsilon, 1.0);
    for k in 1..=30 {
        agent.end_episode();
        let expect = 0.9f64.powi(k).max(0.5);
        assert!(
            (agent.epsilon - expect).abs() < 1e-12,
            "episode {k}: eps {} vs max(0.5, 0.9^{k}) = {expect}",
            agent.epsilon
        );
    }
    assert_eq!(agent.epsilon, 0.5);
    println!("PASS criterion 7: MADQN epsilon trace equals max(0.5, 0.9^k), floor binds from episode 7");
}

struct TrainedSet {
    seeds: Vec<u64>,
    madqn: PolicyEval,
    madqn_random: PolicyEval,
    madqn_hover: PolicyEval,
    mappo: PolicyEval,
    mappo_random: PolicyEval,
    mappo_hover: PolicyEval,
    train_seconds: f64,
}

static TRAINED: OnceLock<TrainedSet> = OnceLock::new();

const EVAL_EPISODES: usize = 5;

fn train_one(
    config: &ScenarioConfig,
    algo: Algo,
    seed: u64,
    episodes: usize,
) -> skyslice::agents::AgentBundle {
    let dir = tempfile::tempdir().expect("tempdir");
    let manifest = RunManifest {
        config: config.clone(),
        policy: PolicyKind::Learner(algo),
        seeds: vec![seed],
        episodes,
        dump_trajectory: false,
        checkpoint_every: 0,
        version_tag: RunManifest::version_tag_default(),
        out_dir: dir.path().to_path_buf(),
    };
    let summaries = run_training(&manifest).expect("training run");
    skyslice::agents::AgentBundle::load(&summaries[0].seed_dir.join("checkpoints/final.ckpt"))
        .expect("final checkpoint")
}

fn eval_trained_per_seed(
    config: &ScenarioConfig,
    bundles: Vec<skyslice::agents::AgentBundle>,
    seeds: &[u64],
    name: &str,
) -> PolicyEval {
    // Each seed's bundle is evaluated on its own seed, then stitched into
    // one per-seed report.
    let mut per_seed_returns = Vec::new();
    let mut merged: Option<PolicyEval> = None;
    for (bundle, &seed) in bundles.into_iter().zip(seeds) {
        let policy = Policy::from_bundle(bundle);
        let eval = evaluate(&policy, name, config, &[seed], EVAL_EPISODES).expect("eval");
        per_seed_returns.push(eval.per_seed_returns[0]);
        merged = Some(match merged {
            None => eval,
            Some(mut acc) => {
                for i in 0..3 {
                    acc.service.generated[i] += eval.service.generated[i];
                    acc.service.served_at_least_once[i] += eval.service.served_at_least_once[i];
                }
                acc
            }
        });
    }
    let mut out = merged.expect("at least one seed");
    let n = per_seed_returns.len() as f64;
    out.return_mean = per_seed_returns.iter().sum::<f64>() / n;
    let var = per_seed_returns
        .iter()
        .map(|r| (r - out.return_mean) * (r - out.return_mean))
        .sum::<f64>()
        / n;
    out.return_std = var.sqrt();
    out.per_seed_returns = per_seed_returns;
    out
}

fn trained_set() -> &'static TrainedSet {
    TRAINED.get_or_init(|| {
        let start = Instant::now();
        let config = reduced_rural();
        let seeds: Vec<u64> = vec![1, 2, 3, 4, 5];
        let madqn_episodes = 150;
        // 100 updates x 512-step horizon over 200-step episodes.
        let mappo_episodes = 100 * config.agents.mappo.horizon / config.max_steps;

        let train_all = |algo: Algo, episodes: usize| -> Vec<skyslice::agents::AgentBundle> {
            std::thread::scope(|scope| {
                let handles: Vec<_> = seeds
                    .iter()
                    .map(|&seed| {
                        let config = config.clone();
                        scope.spawn(move || train_one(&config, algo, seed, episodes))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            })
        };

        let madqn_bundles = train_all(Algo::Madqn, madqn_episodes);
        let mappo_bundles = train_all(Algo::Mappo, mappo_episodes);

        let madqn = eval_trained_per_seed(&config, madqn_bundles, &seeds, "trained-madqn");
        let mappo = eval_trained_per_seed(&config, mappo_bundles, &seeds, "trained-mappo");
        let madqn_random =
            evaluate(&Policy::random(&config), "random", &config, &seeds, EVAL_EPISODES).unwrap();
        let madqn_hover =
            evaluate(&Policy::hover(&config), "hover", &config, &seeds, EVAL_EPISODES).unwrap();
        TrainedSet {
            seeds,
            madqn,
            mappo,
            mappo_random: madqn_random.clone(),
            mappo_hover: madqn_hover.clone(),
            madqn_random,
            madqn_hover,
            train_seconds: start.elapsed().as_secs_f64(),
        }
    })
}

fn check_learning(name: &str, trained: &PolicyEval, random: &PolicyEval, hover: &PolicyEval) {
    let wins_random = trained
        .per_seed_returns
        .iter()
        .zip(&random.per_seed_returns)
        .filter(|(t, r)| t > r)
        .count();
    let wins_hover = trained
        .per_seed_returns
        .iter()
        .zip(&hover.per_seed_returns)
        .filter(|(t, h)| t > h)
        .count();
    assert!(
        trained.return_mean > random.return_mean,
        "{name} mean {} <= random mean {}",
        trained.return_mean,
        random.return_mean
    );
    assert!(
        trained.return_mean > hover.return_mean,
        "{name} mean {} <= hover mean {}",
        trained.return_mean,
        hover.return_mean
    );
    assert!(
        wins_random >= 4,
        "{name} beats random on only {wins_random}/5 seeds"
    );
    assert!(
        wins_hover >= 4,
        "{name} beats hover on only {wins_hover}/5 seeds"
    );
    println!(
        "  {name}: mean {:.0} vs random {:.0} (wins {wins_random}/5) and hover {:.0} (wins {wins_hover}/5)",
        trained.return_mean, random.return_mean, hover.return_mean
    );
}

#[test]
fn c08_learning_sanity_at_desk_scale() {
    let set = trained_set();
    check_learning("madqn", &set.madqn, &set.madqn_random, &set.madqn_hover);
    check_learning("mappo", &set.mappo, &set.mappo_random, &set.mappo_hover);
    let minutes = set.train_seconds / 60.0;
    assert!(
        set.train_seconds < 1200.0,
        "training took {minutes:.1} min, target 20 min"
    );
    println!(
        "PASS criterion 8: trained MADQN and MAPPO beat random and hover on >=4/5 seeds ({minutes:.1} min training)"
    );
}

#[test]
fn c09_priority_ordering() {
    let set = trained_set();
    for (name, eval) in [("madqn", &set.madqn), ("mappo", &set.mappo)] {
        let frac_a = eval.service.served_fraction(UserClass::A);
        let frac_c = eval.service.served_fraction(UserClass::C);
        assert!(
            frac_a >= frac_c,
            "{name}: class A served fraction {frac_a:.3} < class C {frac_c:.3}"
        );
        println!(
            "  {name}: served-at-least-once fraction A {frac_a:.3} >= C {frac_c:.3} over {} seeds",
            set.seeds.len()
        );
    }
    println!("PASS criterion 9: class A served fraction >= class C under both trained policies");
}

#[test]
fn c10_determinism() {
    let make_manifest = |dir: &std::path::Path| {
        let mut config = reduced_rural();
        config.max_steps = 100;
        RunManifest {
            config,
            policy: PolicyKind::Random,
            seeds: vec![21, 22],
            episodes: 2,
            dump_trajectory: true,
            checkpoint_every: 0,
            version_tag: RunManifest::version_tag_default(),
            out_dir: dir.to_path_buf(),
        }
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_training(&make_manifest(dir_a.path())).unwrap();
    run_training(&make_manifest(dir_b.path())).unwrap();
    for seed in [21, 22] {
        for file in ["metrics.csv", "trajectory.jsonl"] {
            let a = std::fs::read(dir_a.path().join(format!("seed_{seed}/{file}"))).unwrap();
            let b = std::fs::read(dir_b.path().join(format!("seed_{seed}/{file}"))).unwrap();
            assert_eq!(a, b, "seed {seed}: {file} differs between identical manifests");
        }
    }
    println!("PASS criterion 10: identical manifests produce byte-identical metrics.csv and trajectory.jsonl");
}

#[test]
fn c11_channel_statistics() {
    // Shadowing: dB std within 5% of sigma with fading and LoS pinned.
    let mut params = ChannelParams::rural_default();
    params.shadowing_sigma_los_db = 6.0;
    params.shadowing_sigma_nlos_db = 6.0;
    params.rician_k_db = 300.0;
    params.los_prob_d0 = 1e12;
    let mut rng = Stream::from_seed(303);
    let n = 200_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let link = sample_link(&mut rng, [0.0; 3], [1.0, 0.0, 0.0], &params);
        let db = 10.0 * link.power_gain.log10();
        sum += db;
        sq += db * db;
    }
    let mean = sum / n as f64;
    let std = (sq / n as f64 - mean * mean).sqrt();
    assert!(
        (std - 6.0).abs() / 6.0 < 0.05,
        "shadowing std {std:.3} dB vs sigma 6"
    );

    // Rician fading: unit mean power within 1% over 1e6 draws (shadowing
    // off, LoS pinned, unit path gain).
    let mut params = ChannelParams::urban_default();
    params.shadowing_sigma_los_db = 0.0;
    params.shadowing_sigma_nlos_db = 0.0;
    params.los_prob_d0 = 1e12;
    let mut rng = Stream::from_seed(404);
    let draws = 1_000_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        acc += sample_link(&mut rng, [0.0; 3], [1.0, 0.0, 0.0], &params).power_gain;
    }
    let fading_mean = acc / draws as f64;
    assert!(
        (fading_mean - 1.0).abs() < 0.01,
        "Rician mean power {fading_mean:.4}"
    );

    // Path-gain monotonicity on a 100-point distance sweep, both states.
    let params = ChannelParams::rural_default();
    for los in [true, false] {
        let mut last = f64::INFINITY;
        for i in 1..=100 {
            let d = params.min_distance + i as f64 * 0.15;
            let g = path_gain(d, los, &params);
            assert!(g < last, "gain not strictly decreasing at d={d} (los={los})");
            last = g;
        }
    }
    println!(
        "PASS criterion 11: shadowing std {std:.3} dB (sigma 6), Rician mean power {fading_mean:.4}, path gain monotone on 100-point sweep"
    );
}

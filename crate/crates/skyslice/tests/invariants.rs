//! Property tests over the simulator's cross-module invariants.

use proptest::prelude::*;
use skyslice::channel::{compute_sinr, sample_link, ChannelParams, LinkSample, TxParams};
use skyslice::config::{ClassRange, ScenarioConfig, ScenarioKind, SliceTargets, UserClass};
use skyslice::qos::{latency_proxy, qos_score, ClassAggregate, ClassMeans, LatencyParams};
use skyslice::rng::Stream;
use skyslice::world::{JointAction, WorldState};

#[test]
fn service_sets_disjoint_over_random_layouts() {
    // 1000 random layouts; nearest-drone assignment never double-serves.
    let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
    config.users_a = ClassRange { min: 5, max: 30 };
    config.users_b = ClassRange { min: 5, max: 20 };
    config.users_c = ClassRange { min: 5, max: 15 };
    for seed in 0..1000u64 {
        let (mut world, _) = WorldState::reset(&config, seed);
        world.associate_users(&config);
        let mut seen = std::collections::HashSet::new();
        for drone in &world.drones {
            for uid in &drone.served_users {
                assert!(seen.insert(*uid), "seed {seed}: user {uid} double-served");
            }
        }
    }
}

proptest! {
    #[test]
    fn latency_proxy_stays_in_band(
        distance in 0.0..50.0f64,
        throughput in 0.0..5000.0f64,
        speed in 0.0..3.0f64,
    ) {
        let ms = latency_proxy(distance, throughput, speed, &LatencyParams::default());
        prop_assert!((1.0..=40.0).contains(&ms));
    }

    #[test]
    fn qos_score_affine_in_throughput(
        latency in 0.5..40.0f64,
        sinr in -5.0..40.0f64,
        t1 in 1.0..2000.0f64,
        t2 in 1.0..2000.0f64,
    ) {
        // Affinity: score(t) is linear in throughput with slope 1/target.
        let targets = SliceTargets {
            latency_target_ms: 10.0,
            throughput_target_mbps: 350.0,
            sinr_target_db: 15.0,
        };
        let agg = |t: f64| ClassAggregate {
            class: UserClass::B,
            count: 1,
            means: Some(ClassMeans {
                latency_ms: latency,
                throughput_mbps: t,
                sinr_db: sinr,
            }),
        };
        let s1 = qos_score(&agg(t1), &targets);
        let s2 = qos_score(&agg(t2), &targets);
        let slope = (s2 - s1) / (t2 - t1);
        if (t1 - t2).abs() > 1e-6 {
            prop_assert!((slope - 1.0 / 350.0).abs() < 1e-9);
        }
        // Raising throughput never lowers the score.
        if t2 > t1 {
            prop_assert!(s2 >= s1);
        }
    }

    #[test]
    fn sinr_scale_invariance(
        serving_gain in 1e-6..10.0f64,
        interferer_gain in 1e-6..10.0f64,
        noise in 1e-6..1.0f64,
        scale in 0.1..100.0f64,
    ) {
        let mut params = ChannelParams::rural_default();
        params.noise_power = noise;
        let serving = LinkSample { los: true, distance: 1.0, power_gain: serving_gain };
        let interferer = LinkSample { los: false, distance: 2.0, power_gain: interferer_gain };
        let tx = TxParams { power: params.tx_power, gain_tx: params.gain_tx };
        let base = compute_sinr(&serving, &[(interferer, tx)], &params);

        let mut scaled = params;
        scaled.tx_power *= scale;
        scaled.noise_power *= scale;
        let stx = TxParams { power: tx.power * scale, gain_tx: tx.gain_tx };
        let after = compute_sinr(&serving, &[(interferer, stx)], &scaled);
        prop_assert!((base.linear - after.linear).abs() <= 1e-9 * base.linear.abs());
    }

    #[test]
    fn link_samples_have_positive_gain(
        ax in 0.0..10.0f64, ay in 0.0..10.0f64, az in 1.0..10.0f64,
        bx in 0.0..10.0f64, by in 0.0..10.0f64,
        seed in 0u64..1000,
    ) {
        let params = ChannelParams::urban_default();
        let mut rng = Stream::from_seed(seed);
        let link = sample_link(&mut rng, [ax, ay, az], [bx, by, 0.0], &params);
        prop_assert!(link.power_gain > 0.0);
        prop_assert!(link.distance >= params.min_distance);
    }

    #[test]
    fn config_round_trip_under_mutation(
        n_drones in 1usize..8,
        seed in 0u64..1_000_000,
        noise in 1e-6..1.0f64,
        hover in 0.0..2.0f64,
        max_steps in 1usize..2000,
    ) {
        let mut config = ScenarioConfig::preset(ScenarioKind::Urban);
        config.n_drones = n_drones;
        config.seed = seed;
        config.channel.noise_power = noise;
        config.energy.hover_cost = hover;
        config.max_steps = max_steps;
        let text = config.to_file_string();
        let parsed = ScenarioConfig::parse_str(&text).unwrap();
        prop_assert_eq!(parsed, config);
    }
}

#[test]
fn episode_invariants_with_recharge_cycles() {
    // Long horizon with a tiny battery threshold-to-full band forces many
    // charging round trips; the constraint set must hold throughout.
    let mut config = ScenarioConfig::preset(ScenarioKind::Urban);
    config.max_steps = 2000;
    config.energy.hover_cost = 0.5;
    config.users_a = ClassRange { min: 10, max: 10 };
    config.users_b = ClassRange { min: 5, max: 5 };
    config.users_c = ClassRange { min: 5, max: 5 };
    let (mut world, _) = WorldState::reset(&config, 77);
    let mut rng = Stream::from_seed(78);
    let mut saw_charging = false;
    for _ in 0..config.max_steps {
        let action = JointAction(
            (0..config.n_drones)
                .map(|_| {
                    [
                        rng.uniform_range(-1.0, 1.0),
                        rng.uniform_range(-1.0, 1.0),
                        rng.uniform_range(-1.0, 1.0),
                    ]
                })
                .collect(),
        );
        world.step(&config, &action).unwrap();
        saw_charging |= world.drones.iter().any(|d| d.charging);
        if let Some(violation) = world.check_invariants(&config) {
            panic!("t={}: {violation}", world.t);
        }
    }
    assert!(saw_charging, "scenario never exercised the charging path");
    // Drones must also have completed at least one recharge.
    assert!(world.violations.low_battery_events > 0);
}

#[test]
fn observation_is_constant_length_across_episode() {
    let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
    config.max_steps = 300;
    let (mut world, obs) = WorldState::reset(&config, 3);
    let expect = obs.len();
    let mut rng = Stream::from_seed(4);
    for _ in 0..config.max_steps {
        let action = JointAction(
            (0..config.n_drones)
                .map(|_| [rng.uniform_range(-1.0, 1.0), 0.0, 0.0])
                .collect(),
        );
        let outcome = world.step(&config, &action).unwrap();
        assert_eq!(outcome.observation.len(), expect);
    }
}

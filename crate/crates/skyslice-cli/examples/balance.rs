//! Scratch reward-balance probe (not part of the deliverable).
use skyslice::config::ClassRange;
use skyslice::world::{JointAction, WorldState};
use skyslice_cli::reduced_rural;

fn main() {
    let mut config = reduced_rural();
    let args: Vec<String> = std::env::args().collect();
    if let Some(g) = args.get(1) { config.grid_extent = g.parse().unwrap(); }
    if let Some(n) = args.get(2) { config.channel.noise_power = n.parse().unwrap(); }
    config.users_a = ClassRange { min: 10, max: 10 };
    config.users_b = ClassRange { min: 6, max: 6 };
    config.users_c = ClassRange { min: 4, max: 4 };
    // Hover policy from several seeds; report mean per-step breakdown.
    let mut sums = [0.0f64; 9];
    let mut steps = 0usize;
    for seed in 0..6u64 {
        let (mut world, _) = WorldState::reset(&config, seed);
        for _ in 0..config.max_steps {
            let out = world.step(&config, &JointAction::zeros(config.n_drones)).unwrap();
            let r = &out.reward;
            for (i, v) in [r.r_latency, r.r_throughput, r.r_sinr, r.r_eff, r.r_bonus, r.p_low, r.e_total, r.r_energy, r.total].iter().enumerate() {
                sums[i] += v;
            }
            steps += 1;
        }
    }
    let n = steps as f64;
    println!("grid {} noise {}: per-step lat {:.2} thr {:.2} sinr {:.2} eff {:.3} bonus {:.2} plow {:.3} etot {:.3} total {:.2}",
        config.grid_extent, config.channel.noise_power,
        sums[0]/n, sums[1]/n, sums[2]/n, sums[3]/n, sums[4]/n, sums[5]/n, sums[6]/n, sums[8]/n);
}

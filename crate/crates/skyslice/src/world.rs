//! The simulated world: drone kinematics under operational constraints,
//! user mobility, association, energy and charging, the relocatable
//! charging station, and per-step metric/reward computation.
//!
//! One step applies the phases in a fixed order: enforce actions →
//! associate users → sample channels and compute metrics → assemble the
//! reward → update energy and charging → relocate the station → move
//! users → build the observation → advance the clock. Metrics are
//! measured after movement so the reward reflects the action just taken.

use crate::channel::{compute_sinr, sample_link, TxParams};
use crate::config::{ScenarioConfig, UserClass};
use crate::error::SimError;
use crate::observation::{ObsLayout, Observation};
use crate::qos::{
    aggregate_class_metrics, empty_aggregates, latency_proxy, qos_score, scalarized_objective,
    throughput_from_sinr, ClassAggregates, LatencyParams, LinkMetrics, DEFAULT_BANDWIDTH_MHZ,
};
use crate::rewards::{
    coverage_bonus, efficiency_reward, low_battery_penalty, qos_reward_terms, total_energy,
    total_reward, RewardBreakdown,
};
use crate::rng::RngStreams;

/// Initial station position on a reference 3-unit axis; scaled to the
/// actual grid extent at reset (z is the fixed station height).
const STATION_REF: [f64; 3] = [2.5, 1.0, 1.0];
const STATION_REF_AXIS: f64 = 3.0;

/// Iteration cap for the pairwise separation projection.
const SEPARATION_PASSES: usize = 64;

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Reflect a coordinate into `[0, extent]`.
fn reflect(mut x: f64, extent: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > extent {
            x = 2.0 * extent - x;
        } else {
            return x;
        }
    }
}

/// One drone.
#[derive(Clone, Debug, PartialEq)]
pub struct DroneState {
    pub id: usize,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// Battery percentage in [0, 100].
    pub battery: f64,
    /// Users served this step, by id.
    pub served_users: Vec<u32>,
    pub charging: bool,
}

impl DroneState {
    pub fn speed(&self) -> f64 {
        norm3(self.velocity)
    }
}

/// One ground user.
#[derive(Clone, Debug, PartialEq)]
pub struct UserState {
    pub id: u32,
    pub class: UserClass,
    pub position: [f64; 2],
    /// Units per step when the user moves.
    pub speed: f64,
    pub served_by: Option<usize>,
    pub ever_served: bool,
}

impl UserState {
    pub fn position3(&self) -> [f64; 3] {
        [self.position[0], self.position[1], 0.0]
    }
}

/// The relocatable charging facility.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargingStation {
    pub position: [f64; 3],
    pub occupancy: Vec<usize>,
}

/// Tallies of constraint-enforcement events. These count projections and
/// clamps applied while enforcing the motion constraints, not residual
/// violations: after enforcement the state always satisfies them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ViolationCounters {
    pub velocity_clips: u64,
    pub grid_clamps: u64,
    pub altitude_clamps: u64,
    pub separation_pushes: u64,
    pub station_clips: u64,
    pub low_battery_events: u64,
}

impl ViolationCounters {
    pub fn total(&self) -> u64 {
        self.velocity_clips
            + self.grid_clamps
            + self.altitude_clamps
            + self.separation_pushes
            + self.station_clips
            + self.low_battery_events
    }
}

/// Full mutable simulation state.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub t: usize,
    pub drones: Vec<DroneState>,
    pub users: Vec<UserState>,
    pub station: ChargingStation,
    pub rng: RngStreams,
    pub violations: ViolationCounters,
}

/// Per-drone 3D displacement commands, one entry per drone.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAction(pub Vec<[f64; 3]>);

impl JointAction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![[0.0; 3]; n])
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        Self(
            flat.chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect(),
        )
    }
}

/// Everything a step reports besides the observation and the reward.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    /// Global per-class aggregates over all served users.
    pub aggregates: ClassAggregates,
    /// Per-drone per-class aggregates feeding the QoS reward terms.
    pub per_drone_aggregates: Vec<ClassAggregates>,
    pub served_per_class: [usize; 3],
    pub unserved: usize,
    /// Class-A users within coverage range of an in-service drone.
    pub covered_a: usize,
    /// Whether each drone served at least one class-A user this step.
    pub serving_a: Vec<bool>,
    /// Speed norms of all drones this step.
    pub speed_norms: Vec<f64>,
    /// Battery levels at reward time (before this step's drain).
    pub batteries_at_reward: Vec<f64>,
    /// Battery actually drained per drone this step.
    pub energy_per_drone: Vec<f64>,
    pub charging: Vec<bool>,
    pub utilities: Vec<f64>,
    /// Diagnostic scalarized objective (utility minus weighted energy).
    pub objective: f64,
    pub violations: ViolationCounters,
    pub served_user_ids: Vec<Vec<u32>>,
    pub battery_min: f64,
    pub battery_mean: f64,
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

impl WorldState {
    /// Build a fresh world from a configuration and a seed. Identical
    /// `(config, seed)` pairs produce bit-identical worlds.
    pub fn reset(config: &ScenarioConfig, seed: u64) -> (Self, Observation) {
        let mut rng = RngStreams::from_master(seed);
        let mut drones = Vec::with_capacity(config.n_drones);
        for id in 0..config.n_drones {
            let position = [
                rng.init.uniform_range(0.0, config.grid_extent),
                rng.init.uniform_range(0.0, config.grid_extent),
                rng.init.uniform_range(config.h_min, config.h_max),
            ];
            drones.push(DroneState {
                id,
                position,
                velocity: [0.0; 3],
                battery: 100.0,
                served_users: Vec::new(),
                charging: false,
            });
        }

        let mut users = Vec::new();
        let mut next_id = 0u32;
        for class in UserClass::ALL {
            let range = config.user_range(class);
            let count = range.min + rng.init.uniform_usize(range.max - range.min + 1);
            for _ in 0..count {
                users.push(UserState {
                    id: next_id,
                    class,
                    position: [
                        rng.init.uniform_range(0.0, config.grid_extent),
                        rng.init.uniform_range(0.0, config.grid_extent),
                    ],
                    speed: rng.init.uniform_range(1.0, 3.0),
                    served_by: None,
                    ever_served: false,
                });
                next_id += 1;
            }
        }

        let scale = config.grid_extent / STATION_REF_AXIS;
        let station = ChargingStation {
            position: [STATION_REF[0] * scale, STATION_REF[1] * scale, STATION_REF[2]],
            occupancy: Vec::new(),
        };

        let mut world = WorldState {
            t: 0,
            drones,
            users,
            station,
            rng,
            violations: ViolationCounters::default(),
        };
        // Initial placement honors the separation constraint, silently.
        world.enforce_separation_and_bounds(config, false);
        world.associate_users(config);
        let counts = world.served_counts();
        let obs = world.build_observation(config, &empty_aggregates(), counts);
        (world, obs)
    }

    /// Advance the world by one step under `actions`.
    pub fn step(
        &mut self,
        config: &ScenarioConfig,
        actions: &JointAction,
    ) -> Result<StepOutcome, SimError> {
        if self.t >= config.max_steps {
            return Err(SimError::EpisodeOver { t: self.t });
        }
        self.apply_actions(config, actions)?;
        self.associate_users(config);

        let metrics = self.measure_links(config);
        let per_drone_aggregates: Vec<ClassAggregates> = self
            .drones
            .iter()
            .map(|d| {
                let rows: Vec<LinkMetrics> = metrics
                    .iter()
                    .filter(|m| d.served_users.contains(&m.user_id))
                    .copied()
                    .collect();
                aggregate_class_metrics(&rows)
            })
            .collect();
        let aggregates = aggregate_class_metrics(&metrics);

        let speed_norms: Vec<f64> = self.drones.iter().map(|d| d.speed()).collect();
        let batteries_at_reward: Vec<f64> = self.drones.iter().map(|d| d.battery).collect();
        let serving_a: Vec<bool> = self
            .drones
            .iter()
            .map(|d| {
                d.served_users.iter().any(|uid| {
                    self.users
                        .iter()
                        .any(|u| u.id == *uid && u.class == UserClass::A)
                })
            })
            .collect();
        let covered_a = self.covered_class_a(config);

        let weights = [config.omega_a, config.omega_b, config.omega_c];
        let (r_latency, r_throughput, r_sinr) =
            qos_reward_terms(&per_drone_aggregates, |c| *config.targets(c), weights);
        let r_eff = efficiency_reward(&speed_norms, &batteries_at_reward, config.e_max);
        let r_bonus = coverage_bonus(covered_a);
        let p_low = low_battery_penalty(
            &self
                .drones
                .iter()
                .zip(&serving_a)
                .map(|(d, &a)| (d.battery, a))
                .collect::<Vec<_>>(),
        );
        let service_load: Vec<(f64, usize)> = self
            .drones
            .iter()
            .filter(|d| !d.charging)
            .map(|d| (d.speed(), d.served_users.len()))
            .collect();
        let e_total = total_energy(&service_load, &config.energy);
        let reward = total_reward(
            r_latency,
            r_throughput,
            r_sinr,
            r_eff,
            r_bonus,
            p_low,
            e_total,
            config.qos_weight,
            config.energy_weight,
        );

        let utilities: Vec<f64> = per_drone_aggregates
            .iter()
            .map(|aggs| {
                let scores = [
                    qos_score(&aggs[0], config.targets(UserClass::A)),
                    qos_score(&aggs[1], config.targets(UserClass::B)),
                    qos_score(&aggs[2], config.targets(UserClass::C)),
                ];
                crate::qos::drone_utility(scores, weights)
            })
            .collect();

        let energy_per_drone = self.update_energy(config);
        let objective =
            scalarized_objective(&utilities, &energy_per_drone, config.lambda_tradeoff);
        self.relocate_station(config);
        self.advance_users(config);

        let counts = self.served_counts();
        let observation = self.build_observation(config, &aggregates, counts);

        self.t += 1;
        let done = self.t == config.max_steps;

        let served_per_class = counts;
        let served_total: usize = served_per_class.iter().sum();
        let battery_min = self
            .drones
            .iter()
            .map(|d| d.battery)
            .fold(f64::INFINITY, f64::min);
        let battery_mean =
            self.drones.iter().map(|d| d.battery).sum::<f64>() / self.drones.len() as f64;

        let info = StepInfo {
            aggregates,
            per_drone_aggregates,
            served_per_class,
            unserved: self.users.len() - served_total,
            covered_a,
            serving_a,
            speed_norms,
            batteries_at_reward,
            energy_per_drone,
            charging: self.drones.iter().map(|d| d.charging).collect(),
            utilities,
            objective,
            violations: self.violations,
            served_user_ids: self.drones.iter().map(|d| d.served_users.clone()).collect(),
            battery_min,
            battery_mean,
        };
        Ok(StepOutcome {
            observation,
            reward,
            done,
            info,
        })
    }

    /// Enforce and apply the joint action: velocity clip, bound clamps,
    /// pairwise separation. Charging drones ignore their command and fly
    /// toward the station instead.
    pub fn apply_actions(
        &mut self,
        config: &ScenarioConfig,
        actions: &JointAction,
    ) -> Result<(), SimError> {
        if actions.0.len() != self.drones.len() {
            return Err(SimError::ActionArity {
                got: actions.0.len(),
                expected: self.drones.len(),
            });
        }
        for (drone, a) in self.drones.iter().zip(&actions.0) {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(SimError::NonFiniteAction { drone: drone.id });
            }
        }
        let max_move = config.v_max * config.dt;
        let old_positions: Vec<[f64; 3]> = self.drones.iter().map(|d| d.position).collect();
        let station = self.station.position;
        for (drone, a) in self.drones.iter_mut().zip(&actions.0) {
            let displacement = if drone.charging {
                let to_station = [
                    station[0] - drone.position[0],
                    station[1] - drone.position[1],
                    station[2] - drone.position[2],
                ];
                let dist = norm3(to_station);
                if dist <= max_move || dist == 0.0 {
                    to_station
                } else {
                    let s = max_move / dist;
                    [to_station[0] * s, to_station[1] * s, to_station[2] * s]
                }
            } else {
                let norm = norm3(*a);
                if norm > max_move {
                    self.violations.velocity_clips += 1;
                    let s = max_move / norm;
                    [a[0] * s, a[1] * s, a[2] * s]
                } else {
                    *a
                }
            };
            drone.position[0] += displacement[0];
            drone.position[1] += displacement[1];
            drone.position[2] += displacement[2];
        }
        self.enforce_separation_and_bounds(config, true);
        for (drone, old) in self.drones.iter_mut().zip(&old_positions) {
            drone.velocity = [
                (drone.position[0] - old[0]) / config.dt,
                (drone.position[1] - old[1]) / config.dt,
                (drone.position[2] - old[2]) / config.dt,
            ];
        }
        Ok(())
    }

    /// Clamp into the admissible box, then restore pairwise separation
    /// with bounds-preserving fixes: the symmetric push runs along the 3D
    /// connecting axis when both endpoints stay inside the box, and falls
    /// back to a horizontal resolution (with a joint translation back into
    /// the grid) otherwise. A fixed pair always ends exactly separated and
    /// in bounds; passes repeat until no pair moves.
    fn enforce_separation_and_bounds(&mut self, config: &ScenarioConfig, count: bool) {
        for drone in self.drones.iter_mut() {
            let p = &mut drone.position;
            for axis in [0, 1] {
                let clamped = p[axis].clamp(0.0, config.grid_extent);
                if clamped != p[axis] {
                    p[axis] = clamped;
                    if count {
                        self.violations.grid_clamps += 1;
                    }
                }
            }
            let clamped = p[2].clamp(config.h_min, config.h_max);
            if clamped != p[2] {
                p[2] = clamped;
                if count {
                    self.violations.altitude_clamps += 1;
                }
            }
        }
        for _pass in 0..SEPARATION_PASSES {
            let mut dirty = false;
            for i in 0..self.drones.len() {
                for j in (i + 1)..self.drones.len() {
                    if self.separate_pair(config, i, j) {
                        dirty = true;
                        if count {
                            self.violations.separation_pushes += 1;
                        }
                    }
                }
            }
            if !dirty {
                return;
            }
        }
    }

    /// Restore `d_min` separation for one pair without leaving the box.
    /// Returns whether the pair moved.
    fn separate_pair(&mut self, config: &ScenarioConfig, i: usize, j: usize) -> bool {
        let (pi, pj) = (self.drones[i].position, self.drones[j].position);
        let dist = dist3(pi, pj);
        // Slack of one part in 1e12 so a freshly fixed pair that rounds a
        // hair under d_min is not re-fixed forever.
        if dist >= config.d_min * (1.0 - 1e-12) {
            return false;
        }
        // Symmetric push along the 3D connecting axis, when it stays in
        // the box.
        if dist > 0.0 {
            let axis = [
                (pj[0] - pi[0]) / dist,
                (pj[1] - pi[1]) / dist,
                (pj[2] - pi[2]) / dist,
            ];
            let push = (config.d_min - dist) / 2.0;
            let ni = [
                pi[0] - axis[0] * push,
                pi[1] - axis[1] * push,
                pi[2] - axis[2] * push,
            ];
            let nj = [
                pj[0] + axis[0] * push,
                pj[1] + axis[1] * push,
                pj[2] + axis[2] * push,
            ];
            let in_box = |p: &[f64; 3]| {
                (0.0..=config.grid_extent).contains(&p[0])
                    && (0.0..=config.grid_extent).contains(&p[1])
                    && (config.h_min..=config.h_max).contains(&p[2])
            };
            if in_box(&ni) && in_box(&nj) {
                self.drones[i].position = ni;
                self.drones[j].position = nj;
                return true;
            }
        }
        // Horizontal resolution: keep altitudes, widen the ground-plane
        // gap until the 3D distance is exactly d_min, then translate the
        // pair jointly back into the grid (which preserves separation).
        // |dz| < d_min here, otherwise the pair would not be violating.
        let dz = pj[2] - pi[2];
        let needed = (config.d_min * config.d_min - dz * dz).max(0.0).sqrt();
        let (dx, dy) = (pj[0] - pi[0], pj[1] - pi[1]);
        let horizontal = (dx * dx + dy * dy).sqrt();
        let axis = if horizontal > 0.0 {
            [dx / horizontal, dy / horizontal]
        } else {
            // Vertically stacked or coincident: the lower id yields
            // along -x.
            [1.0, 0.0]
        };
        let push = (needed - horizontal) / 2.0;
        let mut ni = [pi[0] - axis[0] * push, pi[1] - axis[1] * push];
        let mut nj = [pj[0] + axis[0] * push, pj[1] + axis[1] * push];
        for axis in [0, 1] {
            let lo = ni[axis].min(nj[axis]);
            let hi = ni[axis].max(nj[axis]);
            let shift = if lo < 0.0 {
                -lo
            } else if hi > config.grid_extent {
                config.grid_extent - hi
            } else {
                0.0
            };
            ni[axis] += shift;
            nj[axis] += shift;
        }
        self.drones[i].position = [ni[0], ni[1], pi[2]];
        self.drones[j].position = [nj[0], nj[1], pj[2]];
        true
    }

    /// Assign each user to the nearest in-service drone within
    /// communication range; class A first, ties to the lower drone id.
    /// Assignment sets are disjoint by construction.
    pub fn associate_users(&mut self, config: &ScenarioConfig) {
        for drone in self.drones.iter_mut() {
            drone.served_users.clear();
        }
        for class in UserClass::ALL {
            for user in self.users.iter_mut().filter(|u| u.class == class) {
                let upos = user.position3();
                let mut best: Option<(usize, f64)> = None;
                for drone in self.drones.iter().filter(|d| !d.charging) {
                    let dist = dist3(drone.position, upos);
                    if dist > config.comm_range {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((_, bd)) => dist < bd,
                    };
                    if better {
                        best = Some((drone.id, dist));
                    }
                }
                user.served_by = best.map(|(id, _)| id);
                if let Some((id, _)) = best {
                    self.drones[id].served_users.push(user.id);
                    user.ever_served = true;
                }
            }
        }
        self.station.occupancy = self
            .drones
            .iter()
            .filter(|d| d.charging && dist3(d.position, self.station.position) <= config.d_min)
            .map(|d| d.id)
            .collect();
    }

    /// Channel sampling and per-user metrics for every served user.
    fn measure_links(&mut self, config: &ScenarioConfig) -> Vec<LinkMetrics> {
        let latency_params = LatencyParams::default();
        let mut out = Vec::new();
        let active: Vec<usize> = self
            .drones
            .iter()
            .filter(|d| !d.charging)
            .map(|d| d.id)
            .collect();
        for &i in &active {
            let served = self.drones[i].served_users.clone();
            let speed = self.drones[i].speed();
            for uid in served {
                let user = self
                    .users
                    .iter()
                    .find(|u| u.id == uid)
                    .expect("served user exists");
                let upos = user.position3();
                let serving = sample_link(
                    &mut self.rng.channel,
                    self.drones[i].position,
                    upos,
                    &config.channel,
                );
                let mut interferers = Vec::with_capacity(active.len().saturating_sub(1));
                for &k in &active {
                    if k == i {
                        continue;
                    }
                    let link = sample_link(
                        &mut self.rng.channel,
                        self.drones[k].position,
                        upos,
                        &config.channel,
                    );
                    interferers.push((
                        link,
                        TxParams {
                            power: config.channel.tx_power,
                            gain_tx: config.channel.gain_tx,
                        },
                    ));
                }
                let sinr = compute_sinr(&serving, &interferers, &config.channel);
                let throughput = throughput_from_sinr(sinr.linear, DEFAULT_BANDWIDTH_MHZ)
                    .expect("linear SINR is non-negative");
                let latency = latency_proxy(serving.distance, throughput, speed, &latency_params);
                out.push(LinkMetrics {
                    user_id: uid,
                    class: user.class,
                    sinr_db: sinr.db,
                    throughput_mbps: throughput,
                    latency_ms: latency,
                });
            }
        }
        out
    }

    /// Class-A users within coverage range of an in-service drone.
    fn covered_class_a(&self, config: &ScenarioConfig) -> usize {
        self.users
            .iter()
            .filter(|u| u.class == UserClass::A)
            .filter(|u| {
                self.drones
                    .iter()
                    .filter(|d| !d.charging)
                    .any(|d| dist3(d.position, u.position3()) <= config.coverage_range)
            })
            .count()
    }

    /// Drain service drones, flip empty ones into charging, and recharge
    /// drones parked at the station. Returns the battery actually drained
    /// per drone.
    pub fn update_energy(&mut self, config: &ScenarioConfig) -> Vec<f64> {
        let station = self.station.position;
        let mut drained = vec![0.0; self.drones.len()];
        for drone in self.drones.iter_mut() {
            if !drone.charging {
                let drain = config.energy.velocity_cost_coeff * drone.speed()
                    + config.energy.hover_cost
                    + drone.served_users.len() as f64 * config.energy.per_user_cost;
                drained[drone.id] = drain.min(drone.battery);
                drone.battery = (drone.battery - drain).clamp(0.0, 100.0);
                if drone.battery < config.b_min {
                    drone.charging = true;
                    drone.served_users.clear();
                    self.violations.low_battery_events += 1;
                }
            } else if dist3(drone.position, station) <= config.d_min {
                drone.battery = (drone.battery + config.energy.recharge_rate).clamp(0.0, 100.0);
                if drone.battery >= config.energy.full_charge_level {
                    drone.charging = false;
                }
            }
        }
        drained
    }

    /// Move the station toward the centroid of current user positions,
    /// at most `delta_station` per step.
    pub fn relocate_station(&mut self, config: &ScenarioConfig) {
        if self.users.is_empty() {
            return;
        }
        let n = self.users.len() as f64;
        let cx = self.users.iter().map(|u| u.position[0]).sum::<f64>() / n;
        let cy = self.users.iter().map(|u| u.position[1]).sum::<f64>() / n;
        let dx = cx - self.station.position[0];
        let dy = cy - self.station.position[1];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist <= config.delta_station {
            self.station.position[0] = cx;
            self.station.position[1] = cy;
        } else {
            let s = config.delta_station / dist;
            self.station.position[0] += dx * s;
            self.station.position[1] += dy * s;
            self.violations.station_clips += 1;
        }
    }

    /// Random-walk user mobility: each user moves with the scenario's move
    /// probability, at its own speed, in a uniform direction, reflected at
    /// the grid boundary.
    pub fn advance_users(&mut self, config: &ScenarioConfig) {
        for user in self.users.iter_mut() {
            let gate = self.rng.mobility.uniform();
            if gate >= config.move_probability {
                continue;
            }
            let theta = self.rng.mobility.uniform() * std::f64::consts::TAU;
            let step = user.speed * config.dt;
            let nx = user.position[0] + step * theta.cos();
            let ny = user.position[1] + step * theta.sin();
            user.position[0] = reflect(nx, config.grid_extent);
            user.position[1] = reflect(ny, config.grid_extent);
        }
    }

    fn served_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for drone in &self.drones {
            for uid in &drone.served_users {
                let class = self
                    .users
                    .iter()
                    .find(|u| u.id == *uid)
                    .map(|u| u.class)
                    .expect("served user exists");
                counts[class.priority()] += 1;
            }
        }
        counts
    }

    /// Assemble the observation vector for the current state.
    pub fn build_observation(
        &self,
        config: &ScenarioConfig,
        aggregates: &ClassAggregates,
        counts: [usize; 3],
    ) -> Observation {
        let layout = ObsLayout::new(config.n_drones);
        let mut v = Vec::with_capacity(layout.len());
        for drone in &self.drones {
            v.extend_from_slice(&drone.position);
        }
        for drone in &self.drones {
            v.push(drone.battery);
        }
        for c in counts {
            v.push(c as f64);
        }
        for drone in &self.drones {
            v.push(drone.velocity[0]);
            v.push(drone.velocity[1]);
        }
        for agg in aggregates {
            match &agg.means {
                Some(m) => {
                    v.push(m.latency_ms);
                    v.push(m.throughput_mbps);
                    v.push(m.sinr_db);
                }
                None => v.extend_from_slice(&[0.0, 0.0, 0.0]),
            }
        }
        Observation::from_parts(v, layout)
    }

    /// Check the post-step operational constraints; returns the first
    /// violated constraint's description, if any.
    pub fn check_invariants(&self, config: &ScenarioConfig) -> Option<String> {
        const TOL: f64 = 1e-9;
        for d in &self.drones {
            let p = d.position;
            if p[0] < -TOL || p[0] > config.grid_extent + TOL || p[1] < -TOL
                || p[1] > config.grid_extent + TOL
            {
                return Some(format!("drone {} outside grid at {:?}", d.id, p));
            }
            if p[2] < config.h_min - TOL || p[2] > config.h_max + TOL {
                return Some(format!("drone {} altitude {} out of bounds", d.id, p[2]));
            }
            if !(0.0..=100.0).contains(&d.battery) {
                return Some(format!("drone {} battery {} out of range", d.id, d.battery));
            }
        }
        for i in 0..self.drones.len() {
            for j in (i + 1)..self.drones.len() {
                let dist = dist3(self.drones[i].position, self.drones[j].position);
                if dist < config.d_min - TOL {
                    return Some(format!("drones {i} and {j} separated by {dist}"));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for d in &self.drones {
            for uid in &d.served_users {
                if !seen.insert(*uid) {
                    return Some(format!("user {uid} served by two drones"));
                }
            }
        }
        for u in &self.users {
            if u.position[0] < -TOL
                || u.position[0] > config.grid_extent + TOL
                || u.position[1] < -TOL
                || u.position[1] > config.grid_extent + TOL
            {
                return Some(format!("user {} outside grid", u.id));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioKind;

    fn rural() -> ScenarioConfig {
        ScenarioConfig::preset(ScenarioKind::Rural)
    }

    #[test]
    fn reset_is_deterministic() {
        let config = rural();
        let (a, oa) = WorldState::reset(&config, 7);
        let (b, ob) = WorldState::reset(&config, 7);
        assert_eq!(a, b);
        assert_eq!(oa, ob);
        let (c, _) = WorldState::reset(&config, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn reset_observation_shape_and_batteries() {
        let config = rural();
        let (_, obs) = WorldState::reset(&config, 1);
        assert_eq!(obs.len(), 36);
        assert_eq!(obs.batteries(), &[100.0, 100.0, 100.0, 100.0]);
        assert!(obs.velocities().iter().all(|&v| v == 0.0));
        assert!(obs.qos().iter().all(|&q| q == 0.0));
    }

    #[test]
    fn observation_length_scales_with_fleet() {
        let mut config = rural();
        for (n, want) in [(2usize, 24usize), (3, 30), (4, 36), (6, 48)] {
            config.n_drones = n;
            let (_, obs) = WorldState::reset(&config, 3);
            assert_eq!(obs.len(), want);
        }
    }

    #[test]
    fn zero_action_keeps_positions() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 2);
        let before: Vec<[f64; 3]> = world.drones.iter().map(|d| d.position).collect();
        world
            .apply_actions(&config, &JointAction::zeros(config.n_drones))
            .unwrap();
        for (d, b) in world.drones.iter().zip(&before) {
            assert_eq!(d.position, *b);
            assert_eq!(d.velocity, [0.0; 3]);
        }
    }

    #[test]
    fn oversized_action_is_clipped_to_max_speed() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 3);
        // Place drones far apart so separation does not interfere.
        for (i, d) in world.drones.iter_mut().enumerate() {
            d.position = [i as f64 * 2.5, 5.0, 5.0];
        }
        let before = world.drones[0].position;
        let mut actions = JointAction::zeros(config.n_drones);
        actions.0[0] = [2.0, 0.0, 0.0];
        world.apply_actions(&config, &actions).unwrap();
        let moved = dist3(world.drones[0].position, before);
        assert!((moved - 1.0).abs() < 1e-12, "moved {moved}");
        assert!(world.violations.velocity_clips >= 1);
    }

    #[test]
    fn nonfinite_action_is_rejected() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 3);
        let mut actions = JointAction::zeros(config.n_drones);
        actions.0[1] = [f64::NAN, 0.0, 0.0];
        assert!(matches!(
            world.apply_actions(&config, &actions),
            Err(SimError::NonFiniteAction { drone: 1 })
        ));
    }

    #[test]
    fn close_drones_are_pushed_to_separation() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 4);
        world.drones[0].position = [5.0, 5.0, 5.0];
        world.drones[1].position = [5.3, 5.0, 5.0];
        world.drones[2].position = [1.0, 1.0, 5.0];
        world.drones[3].position = [9.0, 9.0, 5.0];
        let before = world.violations.separation_pushes;
        world
            .apply_actions(&config, &JointAction::zeros(config.n_drones))
            .unwrap();
        let dist = dist3(world.drones[0].position, world.drones[1].position);
        assert!((dist - config.d_min).abs() < 1e-12, "dist {dist}");
        assert_eq!(world.violations.separation_pushes, before + 1);
    }

    #[test]
    fn exact_overlap_lower_id_yields() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 4);
        world.drones[0].position = [5.0, 5.0, 5.0];
        world.drones[1].position = [5.0, 5.0, 5.0];
        world.drones[2].position = [1.0, 1.0, 5.0];
        world.drones[3].position = [9.0, 9.0, 5.0];
        world
            .apply_actions(&config, &JointAction::zeros(config.n_drones))
            .unwrap();
        assert!(world.drones[0].position[0] < 5.0);
        assert!(world.drones[1].position[0] > 5.0);
        let dist = dist3(world.drones[0].position, world.drones[1].position);
        assert!((dist - config.d_min).abs() < 1e-12);
    }

    #[test]
    fn association_is_disjoint_and_range_limited() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 5);
        world.associate_users(&config);
        let mut seen = std::collections::HashSet::new();
        for d in &world.drones {
            for uid in &d.served_users {
                assert!(seen.insert(*uid), "user {uid} double-served");
            }
        }
        for u in &world.users {
            if let Some(id) = u.served_by {
                let dist = dist3(world.drones[id].position, u.position3());
                assert!(dist <= config.comm_range + 1e-12);
            } else {
                for d in world.drones.iter().filter(|d| !d.charging) {
                    assert!(dist3(d.position, u.position3()) > config.comm_range);
                }
            }
        }
    }

    #[test]
    fn association_tie_goes_to_lower_id() {
        let mut config = rural();
        config.users_a = crate::config::ClassRange { min: 1, max: 1 };
        config.users_b = crate::config::ClassRange { min: 0, max: 0 };
        config.users_c = crate::config::ClassRange { min: 0, max: 0 };
        let (mut world, _) = WorldState::reset(&config, 1);
        world.users[0].position = [5.0, 5.0];
        world.drones[0].position = [4.0, 5.0, 1.0];
        world.drones[1].position = [6.0, 5.0, 1.0];
        world.drones[2].position = [1.0, 1.0, 9.0];
        world.drones[3].position = [9.0, 9.0, 9.0];
        for d in world.drones.iter_mut() {
            d.charging = false;
        }
        world.associate_users(&config);
        assert_eq!(world.users[0].served_by, Some(0));
    }

    #[test]
    fn energy_drain_hand_case() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 6);
        let d = &mut world.drones[0];
        d.velocity = [2.0, 0.0, 0.0];
        d.battery = 50.0;
        d.served_users = vec![0, 1, 2, 3, 4];
        d.charging = false;
        for other in world.drones.iter_mut().skip(1) {
            other.velocity = [0.0; 3];
            other.served_users.clear();
        }
        let drained = world.update_energy(&config);
        // 0.5 * 2 + 0.1 + 5 * 0.02 = 1.2
        assert!((drained[0] - 1.2).abs() < 1e-12, "drained {}", drained[0]);
        assert!((world.drones[0].battery - 48.8).abs() < 1e-12);
    }

    #[test]
    fn low_battery_switches_to_charging() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 6);
        world.drones[0].battery = 8.0;
        world.drones[0].served_users = vec![0];
        world.update_energy(&config);
        assert!(world.drones[0].charging);
        assert!(world.drones[0].served_users.is_empty());
    }

    #[test]
    fn recharge_completes_at_full_charge_level() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 6);
        world.drones[0].charging = true;
        world.drones[0].battery = 88.0;
        world.drones[0].position = world.station.position;
        world.update_energy(&config);
        assert_eq!(world.drones[0].battery, 90.0);
        assert!(!world.drones[0].charging);
    }

    #[test]
    fn charging_away_from_station_gains_nothing() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 6);
        world.drones[0].charging = true;
        world.drones[0].battery = 20.0;
        world.drones[0].position = [
            world.station.position[0] + 3.0,
            world.station.position[1],
            5.0,
        ];
        world.update_energy(&config);
        assert_eq!(world.drones[0].battery, 20.0);
        assert!(world.drones[0].charging);
    }

    #[test]
    fn station_moves_toward_centroid() {
        let mut config = rural();
        config.users_a = crate::config::ClassRange { min: 3, max: 3 };
        config.users_b = crate::config::ClassRange { min: 0, max: 0 };
        config.users_c = crate::config::ClassRange { min: 0, max: 0 };
        let (mut world, _) = WorldState::reset(&config, 1);
        world.users[0].position = [0.0, 0.0];
        world.users[1].position = [2.0, 2.0];
        world.users[2].position = [4.0, 4.0];
        world.station.position = [2.0, 2.0, 1.0];
        world.relocate_station(&config);
        assert!((world.station.position[0] - 2.0).abs() < 1e-12);
        assert!((world.station.position[1] - 2.0).abs() < 1e-12);

        // Far target: unit-vector step of length delta_station.
        world.station.position = [0.0, 0.0, 1.0];
        world.users[0].position = [3.0, 4.0];
        world.users[1].position = [3.0, 4.0];
        world.users[2].position = [3.0, 4.0];
        world.relocate_station(&config);
        assert!((world.station.position[0] - 0.6).abs() < 1e-12);
        assert!((world.station.position[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn station_unmoved_without_users() {
        let mut config = rural();
        config.users_a = crate::config::ClassRange { min: 0, max: 0 };
        config.users_b = crate::config::ClassRange { min: 0, max: 0 };
        config.users_c = crate::config::ClassRange { min: 0, max: 0 };
        let (mut world, _) = WorldState::reset(&config, 1);
        let before = world.station.position;
        world.relocate_station(&config);
        assert_eq!(world.station.position, before);
    }

    #[test]
    fn users_frozen_at_zero_move_probability() {
        let mut config = rural();
        config.move_probability = 0.0;
        let (mut world, _) = WorldState::reset(&config, 2);
        let before: Vec<[f64; 2]> = world.users.iter().map(|u| u.position).collect();
        world.advance_users(&config);
        let after: Vec<[f64; 2]> = world.users.iter().map(|u| u.position).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn users_reflect_at_boundaries() {
        let mut config = rural();
        config.move_probability = 1.0;
        let (mut world, _) = WorldState::reset(&config, 2);
        for _ in 0..50 {
            world.advance_users(&config);
            for u in &world.users {
                assert!((0.0..=config.grid_extent).contains(&u.position[0]));
                assert!((0.0..=config.grid_extent).contains(&u.position[1]));
            }
        }
    }

    #[test]
    fn step_respects_episode_end() {
        let mut config = rural();
        config.max_steps = 3;
        let (mut world, _) = WorldState::reset(&config, 4);
        let actions = JointAction::zeros(config.n_drones);
        for t in 1..=3 {
            let out = world.step(&config, &actions).unwrap();
            assert_eq!(out.done, t == 3);
        }
        assert!(matches!(
            world.step(&config, &actions),
            Err(SimError::EpisodeOver { t: 3 })
        ));
    }

    #[test]
    fn reward_matches_ledger_recomputation() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 11);
        let actions = JointAction::zeros(config.n_drones);
        for _ in 0..20 {
            let out = world.step(&config, &actions).unwrap();
            // Recompute every term from the info fields alone.
            let weights = [config.omega_a, config.omega_b, config.omega_c];
            let (l, t, s) = crate::rewards::qos_reward_terms(
                &out.info.per_drone_aggregates,
                |c| *config.targets(c),
                weights,
            );
            let r_eff = crate::rewards::efficiency_reward(
                &out.info.speed_norms,
                &out.info.batteries_at_reward,
                config.e_max,
            );
            let r_bonus = crate::rewards::coverage_bonus(out.info.covered_a);
            let pairs: Vec<(f64, bool)> = out
                .info
                .batteries_at_reward
                .iter()
                .zip(&out.info.serving_a)
                .map(|(&b, &a)| (b, a))
                .collect();
            let p_low = crate::rewards::low_battery_penalty(&pairs);
            let load: Vec<(f64, usize)> = out
                .info
                .charging
                .iter()
                .enumerate()
                .filter(|(_, &c)| !c)
                .map(|(i, _)| (out.info.speed_norms[i], out.info.served_user_ids[i].len()))
                .collect();
            let e_total = crate::rewards::total_energy(&load, &config.energy);
            let expect = crate::rewards::total_reward(
                l,
                t,
                s,
                r_eff,
                r_bonus,
                p_low,
                e_total,
                config.qos_weight,
                config.energy_weight,
            );
            assert_eq!(expect, out.reward);
        }
    }

    #[test]
    fn full_episode_determinism() {
        let mut config = rural();
        config.max_steps = 60;
        let run = |seed: u64| {
            let (mut world, _) = WorldState::reset(&config, seed);
            let actions = JointAction::zeros(config.n_drones);
            let mut rewards = Vec::new();
            for _ in 0..config.max_steps {
                rewards.push(world.step(&config, &actions).unwrap().reward.total);
            }
            (world, rewards)
        };
        let (wa, ra) = run(21);
        let (wb, rb) = run(21);
        assert_eq!(wa, wb);
        assert_eq!(ra, rb);
    }

    #[test]
    fn invariants_hold_under_random_actions() {
        let mut config = rural();
        config.max_steps = 300;
        let (mut world, _) = WorldState::reset(&config, 9);
        let mut action_rng = crate::rng::Stream::from_seed(999);
        for _ in 0..config.max_steps {
            let actions = JointAction(
                (0..config.n_drones)
                    .map(|_| {
                        [
                            action_rng.uniform_range(-1.5, 1.5),
                            action_rng.uniform_range(-1.5, 1.5),
                            action_rng.uniform_range(-1.5, 1.5),
                        ]
                    })
                    .collect(),
            );
            world.step(&config, &actions).unwrap();
            if let Some(violation) = world.check_invariants(&config) {
                panic!("invariant violated at t={}: {violation}", world.t);
            }
        }
    }

    #[test]
    fn battery_total_non_increasing_without_recharge() {
        let mut config = rural();
        config.energy.recharge_rate = 0.0;
        config.max_steps = 200;
        let (mut world, _) = WorldState::reset(&config, 13);
        let actions = JointAction::zeros(config.n_drones);
        let mut last: f64 = world.drones.iter().map(|d| d.battery).sum();
        for _ in 0..config.max_steps {
            world.step(&config, &actions).unwrap();
            let total: f64 = world.drones.iter().map(|d| d.battery).sum();
            assert!(total <= last + 1e-12);
            last = total;
        }
    }

    #[test]
    fn observation_battery_block_tracks_drain() {
        let config = rural();
        let (mut world, _) = WorldState::reset(&config, 14);
        let out = world
            .step(&config, &JointAction::zeros(config.n_drones))
            .unwrap();
        for (obs_b, drone) in out.observation.batteries().iter().zip(&world.drones) {
            assert_eq!(*obs_b, drone.battery);
            assert!(*obs_b < 100.0);
        }
    }
}

//! Scenario configuration: the immutable description of a world.
//!
//! A [`ScenarioConfig`] collects everything that defines an experiment:
//! grid geometry, drone fleet size, per-class QoS targets, priority and
//! reward weights, channel and energy parameters, and learner
//! hyperparameters. Two built-in presets (`urban`, `rural`) are provided;
//! configs can also be loaded from a flat key/value scenario file (see
//! [`ScenarioConfig::parse_str`]). Parsing is fail-fast: unknown sections,
//! unknown keys and duplicate keys are errors, so a scenario file never
//! silently drifts from the code that reads it.

use crate::channel::ChannelParams;
use crate::error::ConfigError;

/// User priority class. `A` (Premium) outranks `B` (Silver) outranks
/// `C` (Bronze); the ordering is total and fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UserClass {
    A,
    B,
    C,
}

impl UserClass {
    pub const ALL: [UserClass; 3] = [UserClass::A, UserClass::B, UserClass::C];

    /// 0 for the highest-priority class.
    pub fn priority(self) -> usize {
        match self {
            UserClass::A => 0,
            UserClass::B => 1,
            UserClass::C => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            UserClass::A => "A",
            UserClass::B => "B",
            UserClass::C => "C",
        }
    }
}

/// Per-class QoS targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceTargets {
    pub latency_target_ms: f64,
    pub throughput_target_mbps: f64,
    pub sinr_target_db: f64,
}

/// Battery model parameters, in percent of capacity per step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParams {
    pub hover_cost: f64,
    pub velocity_cost_coeff: f64,
    pub per_user_cost: f64,
    pub recharge_rate: f64,
    pub full_charge_level: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            hover_cost: 0.1,
            velocity_cost_coeff: 0.5,
            per_user_cost: 0.02,
            recharge_rate: 2.0,
            full_charge_level: 90.0,
        }
    }
}

/// Inclusive range for how many users of one class a reset may draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Urban,
    Rural,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Urban => "urban",
            ScenarioKind::Rural => "rural",
        }
    }
}

/// MAPPO hyperparameters. `clip` bounds the policy ratio in the clipped
/// surrogate objective.
#[derive(Clone, Debug, PartialEq)]
pub struct MappoParams {
    pub gamma: f64,
    pub tau: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub hidden: [usize; 2],
    pub gae_lambda: f64,
    pub horizon: usize,
    pub epochs: usize,
    pub minibatch: usize,
    pub entropy_coef: f64,
}

impl Default for MappoParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            clip: 0.2,
            learning_rate: 0.001,
            hidden: [128, 128],
            gae_lambda: 0.95,
            horizon: 512,
            epochs: 4,
            minibatch: 128,
            entropy_coef: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaddpgParams {
    pub gamma: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub hidden: [usize; 2],
    pub batch_size: usize,
    pub buffer_size: usize,
    pub priority_alpha: f64,
    pub beta0: f64,
    pub beta_anneal_steps: usize,
    pub train_every: usize,
}

impl Default for MaddpgParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            tau: 0.01,
            epsilon: 0.1,
            learning_rate: 0.001,
            hidden: [128, 128],
            batch_size: 128,
            buffer_size: 50_000,
            priority_alpha: 0.6,
            beta0: 0.4,
            beta_anneal_steps: 100_000,
            train_every: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MadqnParams {
    pub gamma: f64,
    pub tau: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    pub learning_rate: f64,
    pub hidden: [usize; 2],
    pub batch_size: usize,
    pub buffer_size: usize,
    pub priority_alpha: f64,
    pub beta0: f64,
    pub beta_anneal_steps: usize,
    pub train_every: usize,
    /// Discrete points per action dimension; the joint grid has
    /// `points_per_dim^3` entries per drone.
    pub points_per_dim: usize,
}

impl Default for MadqnParams {
    fn default() -> Self {
        Self {
            gamma: 0.01,
            tau: 0.01,
            epsilon_start: 1.0,
            epsilon_min: 0.5,
            epsilon_decay: 0.9,
            learning_rate: 0.001,
            hidden: [128, 128],
            batch_size: 128,
            buffer_size: 50_000,
            priority_alpha: 0.6,
            beta0: 0.4,
            beta_anneal_steps: 100_000,
            train_every: 1,
            points_per_dim: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct AgentParams {
    pub mappo: MappoParams,
    pub maddpg: MaddpgParams,
    pub madqn: MadqnParams,
}

/// Immutable description of a world.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario_kind: ScenarioKind,
    /// Side length of the square ground area, in normalized units.
    pub grid_extent: f64,
    pub n_drones: usize,
    /// Maximum drone-to-user association distance.
    pub comm_range: f64,
    /// Radius within which a user counts as covered (drives the class-A
    /// coverage bonus).
    pub coverage_range: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub v_max: f64,
    pub dt: f64,
    /// Minimum inter-drone separation.
    pub d_min: f64,
    /// Maximum charging-station displacement per step.
    pub delta_station: f64,
    /// Battery percentage below which a drone heads for the station.
    pub b_min: f64,
    pub e_max: f64,
    pub max_steps: usize,
    /// Probability that a user moves on a given step.
    pub move_probability: f64,
    pub users_a: ClassRange,
    pub users_b: ClassRange,
    pub users_c: ClassRange,
    pub targets_a: SliceTargets,
    pub targets_b: SliceTargets,
    pub targets_c: SliceTargets,
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    /// QoS weight in the total reward.
    pub qos_weight: f64,
    /// Energy weight in the total reward.
    pub energy_weight: f64,
    /// Trade-off weight of the diagnostic scalarized objective; never part
    /// of the training reward.
    pub lambda_tradeoff: f64,
    pub seed: u64,
    pub energy: EnergyParams,
    pub channel: ChannelParams,
    pub agents: AgentParams,
}

impl ScenarioConfig {
    /// Built-in preset by kind.
    pub fn preset(kind: ScenarioKind) -> Self {
        let base_targets_a = SliceTargets {
            latency_target_ms: 1.0,
            throughput_target_mbps: 500.0,
            sinr_target_db: 25.0,
        };
        let base_targets_b = SliceTargets {
            latency_target_ms: 10.0,
            throughput_target_mbps: 350.0,
            sinr_target_db: 15.0,
        };
        let base_targets_c = SliceTargets {
            latency_target_ms: 40.0,
            throughput_target_mbps: 200.0,
            sinr_target_db: 10.0,
        };
        let common = |kind, grid, com, cov, move_p, channel| ScenarioConfig {
            scenario_kind: kind,
            grid_extent: grid,
            n_drones: 4,
            comm_range: com,
            coverage_range: cov,
            h_min: 1.0,
            h_max: 10.0,
            v_max: 1.0,
            dt: 1.0,
            d_min: 0.5,
            delta_station: 1.0,
            b_min: 10.0,
            e_max: 100.0,
            max_steps: 1000,
            move_probability: move_p,
            users_a: ClassRange { min: 1, max: 90 },
            users_b: ClassRange { min: 1, max: 50 },
            users_c: ClassRange { min: 1, max: 40 },
            targets_a: base_targets_a,
            targets_b: base_targets_b,
            targets_c: base_targets_c,
            omega_a: 4.5,
            omega_b: 2.5,
            omega_c: 1.5,
            qos_weight: 4.0,
            energy_weight: 1.0,
            lambda_tradeoff: 1.0,
            seed: 0,
            energy: EnergyParams::default(),
            channel,
            agents: AgentParams::default(),
        };
        match kind {
            ScenarioKind::Urban => common(
                kind,
                3.0,
                2.0,
                1.5,
                0.9,
                ChannelParams::urban_default(),
            ),
            ScenarioKind::Rural => common(
                kind,
                10.0,
                5.0,
                3.0,
                0.5,
                ChannelParams::rural_default(),
            ),
        }
    }

    /// Resolve `"urban"`, `"rural"`, or a path to a scenario file.
    pub fn load(source: &str) -> Result<Self, ConfigError> {
        match source {
            "urban" => Ok(Self::preset(ScenarioKind::Urban)),
            "rural" => Ok(Self::preset(ScenarioKind::Rural)),
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                    path: path.to_string(),
                    source: e,
                })?;
                Self::parse_str(&text)
            }
        }
    }

    pub fn targets(&self, class: UserClass) -> &SliceTargets {
        match class {
            UserClass::A => &self.targets_a,
            UserClass::B => &self.targets_b,
            UserClass::C => &self.targets_c,
        }
    }

    pub fn user_range(&self, class: UserClass) -> ClassRange {
        match class {
            UserClass::A => self.users_a,
            UserClass::B => self.users_b,
            UserClass::C => self.users_c,
        }
    }

    pub fn omega(&self, class: UserClass) -> f64 {
        match class {
            UserClass::A => self.omega_a,
            UserClass::B => self.omega_b,
            UserClass::C => self.omega_c,
        }
    }

    /// Observation vector length for this fleet size.
    pub fn observation_dim(&self) -> usize {
        6 * self.n_drones + 12
    }

    /// Check every invariant; called automatically after parsing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Validation {
                    field: name.to_string(),
                    message: format!("must be positive, got {v}"),
                })
            }
        }
        positive("grid_extent", self.grid_extent)?;
        positive("comm_range", self.comm_range)?;
        positive("coverage_range", self.coverage_range)?;
        positive("v_max", self.v_max)?;
        positive("dt", self.dt)?;
        positive("d_min", self.d_min)?;
        positive("delta_station", self.delta_station)?;
        positive("e_max", self.e_max)?;
        positive("qos_weight", self.qos_weight)?;
        positive("energy_weight", self.energy_weight)?;
        if self.n_drones == 0 {
            return Err(ConfigError::Validation {
                field: "n_drones".into(),
                message: "at least one drone required".into(),
            });
        }
        if self.max_steps == 0 {
            return Err(ConfigError::Validation {
                field: "max_steps".into(),
                message: "episode length must be positive".into(),
            });
        }
        if self.d_min > self.grid_extent {
            return Err(ConfigError::Validation {
                field: "d_min".into(),
                message: "separation distance cannot exceed the grid extent".into(),
            });
        }
        if !(self.h_min < self.h_max) {
            return Err(ConfigError::Validation {
                field: "h_min".into(),
                message: format!("h_min ({}) must be below h_max ({})", self.h_min, self.h_max),
            });
        }
        if !(self.b_min > 0.0 && self.b_min < 100.0) {
            return Err(ConfigError::Validation {
                field: "b_min".into(),
                message: format!("must lie in (0, 100), got {}", self.b_min),
            });
        }
        if !(self.omega_a > self.omega_b && self.omega_b > self.omega_c && self.omega_c > 0.0) {
            return Err(ConfigError::Validation {
                field: "omega_a".into(),
                message: format!(
                    "priority weights must satisfy omega_a > omega_b > omega_c > 0, got ({}, {}, {})",
                    self.omega_a, self.omega_b, self.omega_c
                ),
            });
        }
        if self.lambda_tradeoff < 0.0 {
            return Err(ConfigError::Validation {
                field: "lambda_tradeoff".into(),
                message: "must be non-negative".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.move_probability) {
            return Err(ConfigError::Validation {
                field: "move_probability".into(),
                message: "must lie in [0, 1]".into(),
            });
        }
        for (name, range) in [
            ("users_a", self.users_a),
            ("users_b", self.users_b),
            ("users_c", self.users_c),
        ] {
            if range.min > range.max {
                return Err(ConfigError::Validation {
                    field: name.into(),
                    message: format!("empty range {}..{}", range.min, range.max),
                });
            }
        }
        for class in UserClass::ALL {
            let t = self.targets(class);
            for (name, v) in [
                ("latency_ms", t.latency_target_ms),
                ("throughput_mbps", t.throughput_target_mbps),
                ("sinr_db", t.sinr_target_db),
            ] {
                positive(&format!("targets.{}.{}", class.label(), name), v)?;
            }
        }
        let e = &self.energy;
        for (name, v) in [
            ("hover_cost", e.hover_cost),
            ("velocity_cost_coeff", e.velocity_cost_coeff),
            ("per_user_cost", e.per_user_cost),
            ("recharge_rate", e.recharge_rate),
            ("full_charge_level", e.full_charge_level),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(ConfigError::Validation {
                    field: format!("energy.{name}"),
                    message: format!("must be non-negative, got {v}"),
                });
            }
        }
        if self.energy.full_charge_level > self.e_max {
            return Err(ConfigError::Validation {
                field: "energy.full_charge_level".into(),
                message: "cannot exceed battery capacity".into(),
            });
        }
        self.channel.validate().map_err(|(field, message)| ConfigError::Validation {
            field: format!("channel.{field}"),
            message,
        })?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Scenario file format
// ---------------------------------------------------------------------------

const WORLD_KEYS: &[&str] = &[
    "scenario_kind",
    "grid_extent",
    "n_drones",
    "comm_range",
    "coverage_range",
    "h_min",
    "h_max",
    "v_max",
    "dt",
    "d_min",
    "delta_station",
    "b_min",
    "e_max",
    "max_steps",
    "move_probability",
    "users_a_min",
    "users_a_max",
    "users_b_min",
    "users_b_max",
    "users_c_min",
    "users_c_max",
    "omega_a",
    "omega_b",
    "omega_c",
    "qos_weight",
    "energy_weight",
    "lambda_tradeoff",
    "seed",
];

const TARGET_KEYS: &[&str] = &["latency_ms", "throughput_mbps", "sinr_db"];

const ENERGY_KEYS: &[&str] = &[
    "hover_cost",
    "velocity_cost_coeff",
    "per_user_cost",
    "recharge_rate",
    "full_charge_level",
];

const CHANNEL_KEYS: &[&str] = &[
    "tx_power",
    "gain_tx",
    "gain_rx",
    "noise_power",
    "pathloss_exp_los",
    "pathloss_exp_nlos",
    "shadowing_sigma_los_db",
    "shadowing_sigma_nlos_db",
    "rician_k_db",
    "los_prob_d0",
    "los_prob_slope",
    "ref_distance",
    "nlos_excess_db",
    "min_distance",
];

const MAPPO_KEYS: &[&str] = &[
    "gamma",
    "tau",
    "clip",
    "learning_rate",
    "hidden1",
    "hidden2",
    "gae_lambda",
    "horizon",
    "epochs",
    "minibatch",
    "entropy_coef",
];

const MADDPG_KEYS: &[&str] = &[
    "gamma",
    "tau",
    "epsilon",
    "learning_rate",
    "hidden1",
    "hidden2",
    "batch_size",
    "buffer_size",
    "priority_alpha",
    "beta0",
    "beta_anneal_steps",
    "train_every",
];

const MADQN_KEYS: &[&str] = &[
    "gamma",
    "tau",
    "epsilon_start",
    "epsilon_min",
    "epsilon_decay",
    "learning_rate",
    "hidden1",
    "hidden2",
    "batch_size",
    "buffer_size",
    "priority_alpha",
    "beta0",
    "beta_anneal_steps",
    "train_every",
    "points_per_dim",
];

fn section_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "world" => Some(WORLD_KEYS),
        "targets.A" | "targets.B" | "targets.C" => Some(TARGET_KEYS),
        "energy" => Some(ENERGY_KEYS),
        "channel" => Some(CHANNEL_KEYS),
        "agents.mappo" => Some(MAPPO_KEYS),
        "agents.maddpg" => Some(MADDPG_KEYS),
        "agents.madqn" => Some(MADQN_KEYS),
        _ => None,
    }
}

struct RawEntry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

fn tokenize(text: &str) -> Result<Vec<RawEntry>, ConfigError> {
    let mut entries = Vec::new();
    let mut section = String::new();
    let mut seen: std::collections::HashSet<(String, String)> = std::collections::HashSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if section_keys(name).is_none() {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = name.to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        if section.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                message: "key outside of any section".into(),
            });
        }
        let key = key.trim().to_string();
        let keys = section_keys(&section).expect("section checked above");
        if !keys.contains(&key.as_str()) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("unknown key `{key}` in section [{section}]"),
            });
        }
        if !seen.insert((section.clone(), key.clone())) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key `{key}` in section [{section}]"),
            });
        }
        entries.push(RawEntry {
            section: section.clone(),
            key,
            value: value.trim().to_string(),
            line: line_no,
        });
    }
    Ok(entries)
}

fn parse_f64(e: &RawEntry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line: e.line,
        message: format!("field `{}.{}`: expected a number, got `{}`", e.section, e.key, e.value),
    })
}

fn parse_usize(e: &RawEntry) -> Result<usize, ConfigError> {
    e.value.parse::<usize>().map_err(|_| ConfigError::Parse {
        line: e.line,
        message: format!(
            "field `{}.{}`: expected a non-negative integer, got `{}`",
            e.section, e.key, e.value
        ),
    })
}

fn parse_u64(e: &RawEntry) -> Result<u64, ConfigError> {
    e.value.parse::<u64>().map_err(|_| ConfigError::Parse {
        line: e.line,
        message: format!(
            "field `{}.{}`: expected a non-negative integer, got `{}`",
            e.section, e.key, e.value
        ),
    })
}

impl ScenarioConfig {
    /// Parse a scenario file. The file must name its `scenario_kind`; all
    /// other keys override the corresponding preset value.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let entries = tokenize(text)?;
        let kind_entry = entries
            .iter()
            .find(|e| e.section == "world" && e.key == "scenario_kind")
            .ok_or(ConfigError::MissingKey {
                section: "world".into(),
                key: "scenario_kind".into(),
            })?;
        let kind = match kind_entry.value.as_str() {
            "urban" => ScenarioKind::Urban,
            "rural" => ScenarioKind::Rural,
            other => {
                return Err(ConfigError::Parse {
                    line: kind_entry.line,
                    message: format!(
                        "field `world.scenario_kind`: expected `urban` or `rural`, got `{other}`"
                    ),
                })
            }
        };
        let mut cfg = ScenarioConfig::preset(kind);
        for e in &entries {
            cfg.apply_entry(e)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_entry(&mut self, e: &RawEntry) -> Result<(), ConfigError> {
        match e.section.as_str() {
            "world" => match e.key.as_str() {
                "scenario_kind" => {} // handled during kind resolution
                "grid_extent" => self.grid_extent = parse_f64(e)?,
                "n_drones" => self.n_drones = parse_usize(e)?,
                "comm_range" => self.comm_range = parse_f64(e)?,
                "coverage_range" => self.coverage_range = parse_f64(e)?,
                "h_min" => self.h_min = parse_f64(e)?,
                "h_max" => self.h_max = parse_f64(e)?,
                "v_max" => self.v_max = parse_f64(e)?,
                "dt" => self.dt = parse_f64(e)?,
                "d_min" => self.d_min = parse_f64(e)?,
                "delta_station" => self.delta_station = parse_f64(e)?,
                "b_min" => self.b_min = parse_f64(e)?,
                "e_max" => self.e_max = parse_f64(e)?,
                "max_steps" => self.max_steps = parse_usize(e)?,
                "move_probability" => self.move_probability = parse_f64(e)?,
                "users_a_min" => self.users_a.min = parse_usize(e)?,
                "users_a_max" => self.users_a.max = parse_usize(e)?,
                "users_b_min" => self.users_b.min = parse_usize(e)?,
                "users_b_max" => self.users_b.max = parse_usize(e)?,
                "users_c_min" => self.users_c.min = parse_usize(e)?,
                "users_c_max" => self.users_c.max = parse_usize(e)?,
                "omega_a" => self.omega_a = parse_f64(e)?,
                "omega_b" => self.omega_b = parse_f64(e)?,
                "omega_c" => self.omega_c = parse_f64(e)?,
                "qos_weight" => self.qos_weight = parse_f64(e)?,
                "energy_weight" => self.energy_weight = parse_f64(e)?,
                "lambda_tradeoff" => self.lambda_tradeoff = parse_f64(e)?,
                "seed" => self.seed = parse_u64(e)?,
                _ => unreachable!("key validated by tokenizer"),
            },
            "targets.A" | "targets.B" | "targets.C" => {
                let t = match e.section.as_str() {
                    "targets.A" => &mut self.targets_a,
                    "targets.B" => &mut self.targets_b,
                    _ => &mut self.targets_c,
                };
                match e.key.as_str() {
                    "latency_ms" => t.latency_target_ms = parse_f64(e)?,
                    "throughput_mbps" => t.throughput_target_mbps = parse_f64(e)?,
                    "sinr_db" => t.sinr_target_db = parse_f64(e)?,
                    _ => unreachable!(),
                }
            }
            "energy" => match e.key.as_str() {
                "hover_cost" => self.energy.hover_cost = parse_f64(e)?,
                "velocity_cost_coeff" => self.energy.velocity_cost_coeff = parse_f64(e)?,
                "per_user_cost" => self.energy.per_user_cost = parse_f64(e)?,
                "recharge_rate" => self.energy.recharge_rate = parse_f64(e)?,
                "full_charge_level" => self.energy.full_charge_level = parse_f64(e)?,
                _ => unreachable!(),
            },
            "channel" => match e.key.as_str() {
                "tx_power" => self.channel.tx_power = parse_f64(e)?,
                "gain_tx" => self.channel.gain_tx = parse_f64(e)?,
                "gain_rx" => self.channel.gain_rx = parse_f64(e)?,
                "noise_power" => self.channel.noise_power = parse_f64(e)?,
                "pathloss_exp_los" => self.channel.pathloss_exp_los = parse_f64(e)?,
                "pathloss_exp_nlos" => self.channel.pathloss_exp_nlos = parse_f64(e)?,
                "shadowing_sigma_los_db" => self.channel.shadowing_sigma_los_db = parse_f64(e)?,
                "shadowing_sigma_nlos_db" => self.channel.shadowing_sigma_nlos_db = parse_f64(e)?,
                "rician_k_db" => self.channel.rician_k_db = parse_f64(e)?,
                "los_prob_d0" => self.channel.los_prob_d0 = parse_f64(e)?,
                "los_prob_slope" => self.channel.los_prob_slope = parse_f64(e)?,
                "ref_distance" => self.channel.ref_distance = parse_f64(e)?,
                "nlos_excess_db" => self.channel.nlos_excess_db = parse_f64(e)?,
                "min_distance" => self.channel.min_distance = parse_f64(e)?,
                _ => unreachable!(),
            },
            "agents.mappo" => {
                let p = &mut self.agents.mappo;
                match e.key.as_str() {
                    "gamma" => p.gamma = parse_f64(e)?,
                    "tau" => p.tau = parse_f64(e)?,
                    "clip" => p.clip = parse_f64(e)?,
                    "learning_rate" => p.learning_rate = parse_f64(e)?,
                    "hidden1" => p.hidden[0] = parse_usize(e)?,
                    "hidden2" => p.hidden[1] = parse_usize(e)?,
                    "gae_lambda" => p.gae_lambda = parse_f64(e)?,
                    "horizon" => p.horizon = parse_usize(e)?,
                    "epochs" => p.epochs = parse_usize(e)?,
                    "minibatch" => p.minibatch = parse_usize(e)?,
                    "entropy_coef" => p.entropy_coef = parse_f64(e)?,
                    _ => unreachable!(),
                }
            }
            "agents.maddpg" => {
                let p = &mut self.agents.maddpg;
                match e.key.as_str() {
                    "gamma" => p.gamma = parse_f64(e)?,
                    "tau" => p.tau = parse_f64(e)?,
                    "epsilon" => p.epsilon = parse_f64(e)?,
                    "learning_rate" => p.learning_rate = parse_f64(e)?,
                    "hidden1" => p.hidden[0] = parse_usize(e)?,
                    "hidden2" => p.hidden[1] = parse_usize(e)?,
                    "batch_size" => p.batch_size = parse_usize(e)?,
                    "buffer_size" => p.buffer_size = parse_usize(e)?,
                    "priority_alpha" => p.priority_alpha = parse_f64(e)?,
                    "beta0" => p.beta0 = parse_f64(e)?,
                    "beta_anneal_steps" => p.beta_anneal_steps = parse_usize(e)?,
                    "train_every" => p.train_every = parse_usize(e)?,
                    _ => unreachable!(),
                }
            }
            "agents.madqn" => {
                let p = &mut self.agents.madqn;
                match e.key.as_str() {
                    "gamma" => p.gamma = parse_f64(e)?,
                    "tau" => p.tau = parse_f64(e)?,
                    "epsilon_start" => p.epsilon_start = parse_f64(e)?,
                    "epsilon_min" => p.epsilon_min = parse_f64(e)?,
                    "epsilon_decay" => p.epsilon_decay = parse_f64(e)?,
                    "learning_rate" => p.learning_rate = parse_f64(e)?,
                    "hidden1" => p.hidden[0] = parse_usize(e)?,
                    "hidden2" => p.hidden[1] = parse_usize(e)?,
                    "batch_size" => p.batch_size = parse_usize(e)?,
                    "buffer_size" => p.buffer_size = parse_usize(e)?,
                    "priority_alpha" => p.priority_alpha = parse_f64(e)?,
                    "beta0" => p.beta0 = parse_f64(e)?,
                    "beta_anneal_steps" => p.beta_anneal_steps = parse_usize(e)?,
                    "train_every" => p.train_every = parse_usize(e)?,
                    "points_per_dim" => p.points_per_dim = parse_usize(e)?,
                    _ => unreachable!(),
                }
            }
            _ => unreachable!("section validated by tokenizer"),
        }
        Ok(())
    }

    /// Render the full configuration in scenario-file syntax. Parsing the
    /// result yields an equal config.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        out.push_str("[world]\n");
        kv(&mut out, "scenario_kind", self.scenario_kind.name().into());
        kv(&mut out, "grid_extent", format!("{}", self.grid_extent));
        kv(&mut out, "n_drones", format!("{}", self.n_drones));
        kv(&mut out, "comm_range", format!("{}", self.comm_range));
        kv(&mut out, "coverage_range", format!("{}", self.coverage_range));
        kv(&mut out, "h_min", format!("{}", self.h_min));
        kv(&mut out, "h_max", format!("{}", self.h_max));
        kv(&mut out, "v_max", format!("{}", self.v_max));
        kv(&mut out, "dt", format!("{}", self.dt));
        kv(&mut out, "d_min", format!("{}", self.d_min));
        kv(&mut out, "delta_station", format!("{}", self.delta_station));
        kv(&mut out, "b_min", format!("{}", self.b_min));
        kv(&mut out, "e_max", format!("{}", self.e_max));
        kv(&mut out, "max_steps", format!("{}", self.max_steps));
        kv(&mut out, "move_probability", format!("{}", self.move_probability));
        kv(&mut out, "users_a_min", format!("{}", self.users_a.min));
        kv(&mut out, "users_a_max", format!("{}", self.users_a.max));
        kv(&mut out, "users_b_min", format!("{}", self.users_b.min));
        kv(&mut out, "users_b_max", format!("{}", self.users_b.max));
        kv(&mut out, "users_c_min", format!("{}", self.users_c.min));
        kv(&mut out, "users_c_max", format!("{}", self.users_c.max));
        kv(&mut out, "omega_a", format!("{}", self.omega_a));
        kv(&mut out, "omega_b", format!("{}", self.omega_b));
        kv(&mut out, "omega_c", format!("{}", self.omega_c));
        kv(&mut out, "qos_weight", format!("{}", self.qos_weight));
        kv(&mut out, "energy_weight", format!("{}", self.energy_weight));
        kv(&mut out, "lambda_tradeoff", format!("{}", self.lambda_tradeoff));
        kv(&mut out, "seed", format!("{}", self.seed));
        for (name, t) in [
            ("A", &self.targets_a),
            ("B", &self.targets_b),
            ("C", &self.targets_c),
        ] {
            out.push_str(&format!("\n[targets.{name}]\n"));
            kv(&mut out, "latency_ms", format!("{}", t.latency_target_ms));
            kv(&mut out, "throughput_mbps", format!("{}", t.throughput_target_mbps));
            kv(&mut out, "sinr_db", format!("{}", t.sinr_target_db));
        }
        out.push_str("\n[energy]\n");
        kv(&mut out, "hover_cost", format!("{}", self.energy.hover_cost));
        kv(&mut out, "velocity_cost_coeff", format!("{}", self.energy.velocity_cost_coeff));
        kv(&mut out, "per_user_cost", format!("{}", self.energy.per_user_cost));
        kv(&mut out, "recharge_rate", format!("{}", self.energy.recharge_rate));
        kv(&mut out, "full_charge_level", format!("{}", self.energy.full_charge_level));
        out.push_str("\n[channel]\n");
        let c = &self.channel;
        kv(&mut out, "tx_power", format!("{}", c.tx_power));
        kv(&mut out, "gain_tx", format!("{}", c.gain_tx));
        kv(&mut out, "gain_rx", format!("{}", c.gain_rx));
        kv(&mut out, "noise_power", format!("{}", c.noise_power));
        kv(&mut out, "pathloss_exp_los", format!("{}", c.pathloss_exp_los));
        kv(&mut out, "pathloss_exp_nlos", format!("{}", c.pathloss_exp_nlos));
        kv(&mut out, "shadowing_sigma_los_db", format!("{}", c.shadowing_sigma_los_db));
        kv(&mut out, "shadowing_sigma_nlos_db", format!("{}", c.shadowing_sigma_nlos_db));
        kv(&mut out, "rician_k_db", format!("{}", c.rician_k_db));
        kv(&mut out, "los_prob_d0", format!("{}", c.los_prob_d0));
        kv(&mut out, "los_prob_slope", format!("{}", c.los_prob_slope));
        kv(&mut out, "ref_distance", format!("{}", c.ref_distance));
        kv(&mut out, "nlos_excess_db", format!("{}", c.nlos_excess_db));
        kv(&mut out, "min_distance", format!("{}", c.min_distance));
        out.push_str("\n[agents.mappo]\n");
        let p = &self.agents.mappo;
        kv(&mut out, "gamma", format!("{}", p.gamma));
        kv(&mut out, "tau", format!("{}", p.tau));
        kv(&mut out, "clip", format!("{}", p.clip));
        kv(&mut out, "learning_rate", format!("{}", p.learning_rate));
        kv(&mut out, "hidden1", format!("{}", p.hidden[0]));
        kv(&mut out, "hidden2", format!("{}", p.hidden[1]));
        kv(&mut out, "gae_lambda", format!("{}", p.gae_lambda));
        kv(&mut out, "horizon", format!("{}", p.horizon));
        kv(&mut out, "epochs", format!("{}", p.epochs));
        kv(&mut out, "minibatch", format!("{}", p.minibatch));
        kv(&mut out, "entropy_coef", format!("{}", p.entropy_coef));
        out.push_str("\n[agents.maddpg]\n");
        let p = &self.agents.maddpg;
        kv(&mut out, "gamma", format!("{}", p.gamma));
        kv(&mut out, "tau", format!("{}", p.tau));
        kv(&mut out, "epsilon", format!("{}", p.epsilon));
        kv(&mut out, "learning_rate", format!("{}", p.learning_rate));
        kv(&mut out, "hidden1", format!("{}", p.hidden[0]));
        kv(&mut out, "hidden2", format!("{}", p.hidden[1]));
        kv(&mut out, "batch_size", format!("{}", p.batch_size));
        kv(&mut out, "buffer_size", format!("{}", p.buffer_size));
        kv(&mut out, "priority_alpha", format!("{}", p.priority_alpha));
        kv(&mut out, "beta0", format!("{}", p.beta0));
        kv(&mut out, "beta_anneal_steps", format!("{}", p.beta_anneal_steps));
        kv(&mut out, "train_every", format!("{}", p.train_every));
        out.push_str("\n[agents.madqn]\n");
        let p = &self.agents.madqn;
        kv(&mut out, "gamma", format!("{}", p.gamma));
        kv(&mut out, "tau", format!("{}", p.tau));
        kv(&mut out, "epsilon_start", format!("{}", p.epsilon_start));
        kv(&mut out, "epsilon_min", format!("{}", p.epsilon_min));
        kv(&mut out, "epsilon_decay", format!("{}", p.epsilon_decay));
        kv(&mut out, "learning_rate", format!("{}", p.learning_rate));
        kv(&mut out, "hidden1", format!("{}", p.hidden[0]));
        kv(&mut out, "hidden2", format!("{}", p.hidden[1]));
        kv(&mut out, "batch_size", format!("{}", p.batch_size));
        kv(&mut out, "buffer_size", format!("{}", p.buffer_size));
        kv(&mut out, "priority_alpha", format!("{}", p.priority_alpha));
        kv(&mut out, "beta0", format!("{}", p.beta0));
        kv(&mut out, "beta_anneal_steps", format!("{}", p.beta_anneal_steps));
        kv(&mut out, "train_every", format!("{}", p.train_every));
        kv(&mut out, "points_per_dim", format!("{}", p.points_per_dim));
        out
    }
}

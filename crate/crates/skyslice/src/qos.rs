//! Per-user and per-class QoS: throughput mapping, latency proxy,
//! class aggregation, normalized QoS scores, drone utilities, and the
//! scalarized QoS-energy objective.
//!
//! Conventions: SINR enters scores and rewards in dB (targets are given
//! in dB); the throughput mapping consumes linear SINR. A class with no
//! served users is *absent* — its aggregate carries no means and its
//! score is 0, never NaN.

use crate::config::{SliceTargets, UserClass};

/// Effective per-user bandwidth for the Shannon-like throughput mapping,
/// in MHz.
pub const DEFAULT_BANDWIDTH_MHZ: f64 = 36.0;

/// Constants of the latency proxy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyParams {
    /// Guard against division by zero in the service term.
    pub epsilon: f64,
    /// Velocity sensitivity of the proxy.
    pub kappa: f64,
    /// Propagation speed in grid units per second. Grid units are
    /// normalized, so the propagation term is tiny; it is kept for shape.
    pub propagation_speed: f64,
    /// Raw-proxy value mapped to the 1 ms floor: zero distance at
    /// unbounded throughput.
    pub raw_lo: f64,
    /// Raw-proxy value mapped to the 40 ms ceiling: the service-starved
    /// limit `1/epsilon`.
    pub raw_hi: f64,
}

impl Default for LatencyParams {
    fn default() -> Self {
        let epsilon = 1e-3;
        Self {
            epsilon,
            kappa: 0.05,
            propagation_speed: 3.0e8,
            raw_lo: 0.0,
            raw_hi: 1.0 / epsilon,
        }
    }
}

pub const LATENCY_FLOOR_MS: f64 = 1.0;
pub const LATENCY_CEIL_MS: f64 = 40.0;

/// Metrics of one served user for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkMetrics {
    pub user_id: u32,
    pub class: UserClass,
    pub sinr_db: f64,
    pub throughput_mbps: f64,
    pub latency_ms: f64,
}

/// Means over the served users of one class. Present only when at least
/// one user was served.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMeans {
    pub latency_ms: f64,
    pub throughput_mbps: f64,
    pub sinr_db: f64,
}

/// Aggregate of one class: a count plus optional means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassAggregate {
    pub class: UserClass,
    pub count: usize,
    pub means: Option<ClassMeans>,
}

impl ClassAggregate {
    pub fn empty(class: UserClass) -> Self {
        Self {
            class,
            count: 0,
            means: None,
        }
    }
}

/// Aggregates for all three classes, indexed by priority.
pub type ClassAggregates = [ClassAggregate; 3];

pub fn empty_aggregates() -> ClassAggregates {
    [
        ClassAggregate::empty(UserClass::A),
        ClassAggregate::empty(UserClass::B),
        ClassAggregate::empty(UserClass::C),
    ]
}

/// Shannon-like throughput from linear SINR: `B * log2(1 + sinr)`.
pub fn throughput_from_sinr(sinr_linear: f64, bandwidth_mhz: f64) -> Result<f64, String> {
    if sinr_linear < 0.0 || !sinr_linear.is_finite() {
        return Err(format!("linear SINR must be non-negative, got {sinr_linear}"));
    }
    Ok(bandwidth_mhz * (1.0 + sinr_linear).log2())
}

/// Normalized latency proxy in milliseconds, always within `[1, 40]`.
///
/// The raw proxy combines a propagation term and an inverse-throughput
/// service term, inflated by the serving drone's speed:
/// `raw = (d / c + 1 / (T + eps)) * (1 + kappa * v)`. The raw value is
/// mapped affinely from `[raw_lo, raw_hi]` onto `[1, 40]` ms and clamped.
pub fn latency_proxy(
    distance: f64,
    throughput_mbps: f64,
    drone_speed: f64,
    params: &LatencyParams,
) -> f64 {
    let service = 1.0 / (throughput_mbps.max(0.0) + params.epsilon);
    let propagation = distance.max(0.0) / params.propagation_speed;
    let raw = (propagation + service) * (1.0 + params.kappa * drone_speed);
    let span = params.raw_hi - params.raw_lo;
    let t = (raw - params.raw_lo) / span;
    let ms = LATENCY_FLOOR_MS + t * (LATENCY_CEIL_MS - LATENCY_FLOOR_MS);
    ms.clamp(LATENCY_FLOOR_MS, LATENCY_CEIL_MS)
}

/// Arithmetic means per class over served users.
pub fn aggregate_class_metrics(per_user: &[LinkMetrics]) -> ClassAggregates {
    let mut sums = [[0.0f64; 3]; 3];
    let mut counts = [0usize; 3];
    for m in per_user {
        let idx = m.class.priority();
        counts[idx] += 1;
        sums[idx][0] += m.latency_ms;
        sums[idx][1] += m.throughput_mbps;
        sums[idx][2] += m.sinr_db;
    }
    let mut out = empty_aggregates();
    for (idx, class) in UserClass::ALL.iter().enumerate() {
        let n = counts[idx];
        out[idx] = ClassAggregate {
            class: *class,
            count: n,
            means: (n > 0).then(|| ClassMeans {
                latency_ms: sums[idx][0] / n as f64,
                throughput_mbps: sums[idx][1] / n as f64,
                sinr_db: sums[idx][2] / n as f64,
            }),
        };
    }
    out
}

/// Normalized QoS score of one class aggregate against its targets:
/// `(L_t - L)/L_t + (T - T_t)/T_t + (S - S_t)/S_t`. An absent class
/// scores 0.
pub fn qos_score(agg: &ClassAggregate, targets: &SliceTargets) -> f64 {
    match &agg.means {
        None => 0.0,
        Some(m) => {
            (targets.latency_target_ms - m.latency_ms) / targets.latency_target_ms
                + (m.throughput_mbps - targets.throughput_target_mbps)
                    / targets.throughput_target_mbps
                + (m.sinr_db - targets.sinr_target_db) / targets.sinr_target_db
        }
    }
}

/// Priority-weighted sum of per-class QoS scores for one drone.
pub fn drone_utility(scores: [f64; 3], weights: [f64; 3]) -> f64 {
    weights[0] * scores[0] + weights[1] * scores[1] + weights[2] * scores[2]
}

/// Diagnostic scalarized objective: total utility minus `lambda` times
/// total energy spent. Reported per step; never part of the training
/// reward.
pub fn scalarized_objective(utilities: &[f64], energies: &[f64], lambda: f64) -> f64 {
    let u: f64 = utilities.iter().sum();
    let e: f64 = energies.iter().sum();
    u - lambda * e
}

//! The reward ledger, itemized for testability.
//!
//! Every step produces a [`RewardBreakdown`] whose parts satisfy two exact
//! identities (checked on every step of every run):
//!
//! * `r_energy = r_eff + r_bonus - e_total + p_low`
//! * `total = qos_weight * (r_latency + r_throughput + r_sinr) + energy_weight * r_energy`
//!
//! The reward is shared: the same scalar is broadcast to every agent.

use crate::config::{EnergyParams, SliceTargets, UserClass};
use crate::qos::ClassAggregates;

/// Itemized reward terms plus the scalar total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardBreakdown {
    pub r_latency: f64,
    pub r_throughput: f64,
    pub r_sinr: f64,
    pub r_eff: f64,
    pub r_bonus: f64,
    pub p_low: f64,
    pub e_total: f64,
    pub r_energy: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Recompute both identities exactly as they were assembled.
    pub fn identities_hold(&self, qos_weight: f64, energy_weight: f64) -> bool {
        let r_energy = self.r_eff + self.r_bonus - self.e_total + self.p_low;
        let total = qos_weight * (self.r_latency + self.r_throughput + self.r_sinr)
            + energy_weight * r_energy;
        r_energy.to_bits() == self.r_energy.to_bits() && total.to_bits() == self.total.to_bits()
    }
}

/// Per-class QoS reward terms summed over drones.
///
/// Latency is penalized above target, throughput and SINR rewarded above
/// target, each deviation normalized by its target and weighted by the
/// class priority. Classes a drone does not serve contribute nothing.
pub fn qos_reward_terms(
    per_drone: &[ClassAggregates],
    targets: impl Fn(UserClass) -> SliceTargets,
    weights: [f64; 3],
) -> (f64, f64, f64) {
    let mut r_latency = 0.0;
    let mut r_throughput = 0.0;
    let mut r_sinr = 0.0;
    for aggs in per_drone {
        for agg in aggs {
            let Some(m) = &agg.means else { continue };
            let t = targets(agg.class);
            let w = weights[agg.class.priority()];
            r_latency -= w * (m.latency_ms - t.latency_target_ms) / t.latency_target_ms;
            r_throughput +=
                w * (m.throughput_mbps - t.throughput_target_mbps) / t.throughput_target_mbps;
            r_sinr += w * (m.sinr_db - t.sinr_target_db) / t.sinr_target_db;
        }
    }
    (r_latency, r_throughput, r_sinr)
}

/// Movement cost relative to fleet-wide battery depletion:
/// `-sum(|v_i|) / (sum(e_max - e_i) + 1e-5)`.
///
/// At full batteries the denominator collapses to `1e-5`, so any movement
/// produces a value near `-1e5`. That sharp edge is kept as designed; the
/// harness logs a warning when it fires.
pub fn efficiency_reward(speed_norms: &[f64], batteries: &[f64], e_max: f64) -> f64 {
    let motion: f64 = speed_norms.iter().sum();
    let depletion: f64 = batteries.iter().map(|b| e_max - b).sum();
    -motion / (depletion + 1e-5)
}

/// Coverage bonus for high-priority users: `5 * n_a`, where `n_a` counts
/// class-A users inside some active drone's coverage radius.
pub fn coverage_bonus(n_a: usize) -> f64 {
    5.0 * n_a as f64
}

/// Low-battery penalty per drone: -5 when nearly empty but still serving
/// class A, -10 when nearly empty and not, 0 otherwise.
pub fn low_battery_penalty(drones: &[(f64, bool)]) -> f64 {
    drones
        .iter()
        .map(|&(battery, serving_a)| {
            if battery < 10.0 {
                if serving_a {
                    -5.0
                } else {
                    -10.0
                }
            } else {
                0.0
            }
        })
        .sum()
}

/// Fleet energy expenditure this step:
/// `sum(0.5 * |v_i| + hover + n_users_i * per_user)` over drones in
/// service (charging drones spend nothing).
pub fn total_energy(per_drone: &[(f64, usize)], params: &EnergyParams) -> f64 {
    per_drone
        .iter()
        .map(|&(speed, users)| {
            params.velocity_cost_coeff * speed
                + params.hover_cost
                + users as f64 * params.per_user_cost
        })
        .sum()
}

/// Assemble the breakdown from computed parts. The stored `r_energy` and
/// `total` are exactly the expressions in the module docs.
#[allow(clippy::too_many_arguments)]
pub fn total_reward(
    r_latency: f64,
    r_throughput: f64,
    r_sinr: f64,
    r_eff: f64,
    r_bonus: f64,
    p_low: f64,
    e_total: f64,
    qos_weight: f64,
    energy_weight: f64,
) -> RewardBreakdown {
    let r_energy = r_eff + r_bonus - e_total + p_low;
    let total = qos_weight * (r_latency + r_throughput + r_sinr) + energy_weight * r_energy;
    RewardBreakdown {
        r_latency,
        r_throughput,
        r_sinr,
        r_eff,
        r_bonus,
        p_low,
        e_total,
        r_energy,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qos::{empty_aggregates, ClassAggregate, ClassMeans};

    fn targets(class: UserClass) -> SliceTargets {
        match class {
            UserClass::A => SliceTargets {
                latency_target_ms: 1.0,
                throughput_target_mbps: 500.0,
                sinr_target_db: 25.0,
            },
            UserClass::B => SliceTargets {
                latency_target_ms: 10.0,
                throughput_target_mbps: 350.0,
                sinr_target_db: 15.0,
            },
            UserClass::C => SliceTargets {
                latency_target_ms: 40.0,
                throughput_target_mbps: 200.0,
                sinr_target_db: 10.0,
            },
        }
    }

    const W: [f64; 3] = [4.5, 2.5, 1.5];

    fn drone_with_a(latency: f64, throughput: f64, sinr: f64) -> ClassAggregates {
        let mut aggs = empty_aggregates();
        aggs[0] = ClassAggregate {
            class: UserClass::A,
            count: 1,
            means: Some(ClassMeans {
                latency_ms: latency,
                throughput_mbps: throughput,
                sinr_db: sinr,
            }),
        };
        aggs
    }

    #[test]
    fn on_target_terms_are_zero() {
        let drones = vec![drone_with_a(1.0, 500.0, 25.0)];
        let (l, t, s) = qos_reward_terms(&drones, targets, W);
        assert_eq!((l, t, s), (0.0, 0.0, 0.0));
    }

    #[test]
    fn latency_above_target_penalized() {
        // Class A at 2 ms against a 1 ms target, weight 4.5.
        let drones = vec![drone_with_a(2.0, 500.0, 25.0)];
        let (l, _, _) = qos_reward_terms(&drones, targets, W);
        assert!((l + 4.5).abs() < 1e-12, "r_latency {l}");
    }

    #[test]
    fn throughput_above_target_rewarded() {
        let drones = vec![drone_with_a(1.0, 1000.0, 25.0)];
        let (_, t, _) = qos_reward_terms(&drones, targets, W);
        assert!((t - 4.5).abs() < 1e-12, "r_throughput {t}");
    }

    #[test]
    fn absent_classes_contribute_nothing() {
        let drones = vec![empty_aggregates(), empty_aggregates()];
        assert_eq!(qos_reward_terms(&drones, targets, W), (0.0, 0.0, 0.0));
    }

    #[test]
    fn latency_term_non_increasing_in_latency() {
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let l_ms = 0.5 + i as f64 * 0.5;
            let drones = vec![drone_with_a(l_ms, 500.0, 25.0)];
            let (l, _, _) = qos_reward_terms(&drones, targets, W);
            assert!(l <= last);
            last = l;
        }
    }

    #[test]
    fn efficiency_reward_cases() {
        assert_eq!(efficiency_reward(&[0.0, 0.0], &[50.0, 60.0], 100.0), -0.0);
        let r = efficiency_reward(&[2.0], &[90.0], 100.0);
        assert!((r + 2.0 / 10.00001).abs() < 1e-12, "r_eff {r}");
        // Sharp edge at zero depletion.
        let edge = efficiency_reward(&[1.0], &[100.0], 100.0);
        assert!((edge + 1e5).abs() < 1e-6, "edge {edge}");
    }

    #[test]
    fn coverage_bonus_is_linear() {
        assert_eq!(coverage_bonus(0), 0.0);
        assert_eq!(coverage_bonus(3), 15.0);
        assert_eq!(coverage_bonus(90), 450.0);
    }

    #[test]
    fn low_battery_penalty_cases() {
        assert_eq!(low_battery_penalty(&[(5.0, true)]), -5.0);
        assert_eq!(low_battery_penalty(&[(5.0, false)]), -10.0);
        assert_eq!(low_battery_penalty(&[(50.0, true)]), 0.0);
        assert_eq!(
            low_battery_penalty(&[(5.0, true), (9.9, false), (10.0, false)]),
            -15.0
        );
    }

    #[test]
    fn total_energy_cases() {
        let p = EnergyParams::default();
        let idle = vec![(0.0, 0usize); 4];
        assert!((total_energy(&idle, &p) - 0.4).abs() < 1e-12);
        let one = vec![(2.0, 5usize)];
        assert!((total_energy(&one, &p) - 1.2).abs() < 1e-12);
        assert_eq!(total_energy(&[], &p), 0.0);
    }

    #[test]
    fn total_reward_assembly() {
        let zero = total_reward(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0, 1.0);
        assert_eq!(zero.total, 0.0);
        // QoS terms (1,1,1), r_energy parts summing to -2, weights (4,1).
        let b = total_reward(1.0, 1.0, 1.0, -2.0, 0.0, 0.0, 0.0, 4.0, 1.0);
        assert_eq!(b.r_energy, -2.0);
        assert_eq!(b.total, 10.0);
        assert!(b.identities_hold(4.0, 1.0));
    }

    #[test]
    fn identity_is_bit_exact() {
        let b = total_reward(
            0.123456,
            -7.89,
            3.21,
            -0.000314,
            45.0,
            -10.0,
            1.777,
            4.0,
            1.0,
        );
        assert!(b.identities_hold(4.0, 1.0));
        // Resumming through the same expression reproduces the stored bits.
        let re = b.r_eff + b.r_bonus - b.e_total + b.p_low;
        assert_eq!(re.to_bits(), b.r_energy.to_bits());
    }
}

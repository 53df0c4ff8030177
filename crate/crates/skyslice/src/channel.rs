//! Air-to-ground channel: LoS state, path loss, shadowing, Rician fading,
//! and interference-aware SINR.
//!
//! All gains live in the linear power domain and are normalized so that a
//! line-of-sight link at the reference distance with shadowing and fading
//! disabled has unit gain. Distances use the same normalized spatial units
//! as the grid, so absolute link budgets are intentionally non-physical;
//! only relative behavior matters.
//!
//! Per link the sampler (i) draws a LoS/NLoS state from a distance-dependent
//! probability, (ii) applies the matching path-loss law, and (iii) multiplies
//! in log-normal shadowing and Rician fading, both redrawn every step
//! (block fading).

use crate::rng::Stream;

/// Propagation and radio parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    /// Transmit power, normalized to [0, 1].
    pub tx_power: f64,
    pub gain_tx: f64,
    pub gain_rx: f64,
    pub noise_power: f64,
    pub pathloss_exp_los: f64,
    pub pathloss_exp_nlos: f64,
    pub shadowing_sigma_los_db: f64,
    pub shadowing_sigma_nlos_db: f64,
    /// Rician K-factor in dB; higher K is more LoS-like.
    pub rician_k_db: f64,
    /// Distance at which the LoS probability crosses 0.5.
    pub los_prob_d0: f64,
    /// Sharpness of the LoS probability roll-off.
    pub los_prob_slope: f64,
    /// Distance with unit LoS gain.
    pub ref_distance: f64,
    /// Extra NLoS attenuation at the reference distance, in dB. Together
    /// with `min_distance` it keeps the NLoS gain at or below the LoS gain
    /// over the whole admissible distance range.
    pub nlos_excess_db: f64,
    /// Distance floor applied to every link.
    pub min_distance: f64,
}

impl ChannelParams {
    /// Dense-obstacle preset: lower K-factor, heavier shadowing, short LoS
    /// roll-off.
    pub fn urban_default() -> Self {
        Self {
            tx_power: 1.0,
            gain_tx: 1.0,
            gain_rx: 1.0,
            noise_power: 0.001,
            pathloss_exp_los: 2.2,
            pathloss_exp_nlos: 3.5,
            shadowing_sigma_los_db: 6.0,
            shadowing_sigma_nlos_db: 8.0,
            rician_k_db: 5.0,
            los_prob_d0: 1.0,
            los_prob_slope: 3.0,
            ref_distance: 1.0,
            nlos_excess_db: 13.0,
            min_distance: 0.1,
        }
    }

    /// Open-area preset: stronger direct component, lighter shadowing,
    /// LoS likely out to several units.
    pub fn rural_default() -> Self {
        Self {
            tx_power: 1.0,
            gain_tx: 1.0,
            gain_rx: 1.0,
            noise_power: 0.001,
            pathloss_exp_los: 2.2,
            pathloss_exp_nlos: 3.5,
            shadowing_sigma_los_db: 4.0,
            shadowing_sigma_nlos_db: 6.0,
            rician_k_db: 9.0,
            los_prob_d0: 4.0,
            los_prob_slope: 1.0,
            ref_distance: 1.0,
            nlos_excess_db: 13.0,
            min_distance: 0.1,
        }
    }

    /// Parameters for drone-to-drone and drone-to-station links: the same
    /// large-scale model with the LoS crossover pushed out (predominantly
    /// LoS conditions).
    pub fn for_drone_links(&self) -> Self {
        let mut p = *self;
        p.los_prob_d0 *= 2.0;
        p
    }

    pub(crate) fn validate(&self) -> Result<(), (String, String)> {
        let pos = [
            ("tx_power", self.tx_power),
            ("gain_tx", self.gain_tx),
            ("gain_rx", self.gain_rx),
            ("noise_power", self.noise_power),
            ("pathloss_exp_los", self.pathloss_exp_los),
            ("pathloss_exp_nlos", self.pathloss_exp_nlos),
            ("los_prob_d0", self.los_prob_d0),
            ("ref_distance", self.ref_distance),
            ("min_distance", self.min_distance),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err((name.into(), format!("must be positive, got {v}")));
            }
        }
        if self.pathloss_exp_nlos < self.pathloss_exp_los {
            return Err((
                "pathloss_exp_nlos".into(),
                "NLoS exponent must be at least the LoS exponent".into(),
            ));
        }
        if self.shadowing_sigma_los_db < 0.0 || self.shadowing_sigma_nlos_db < 0.0 {
            return Err((
                "shadowing_sigma_los_db".into(),
                "shadowing deviations must be non-negative".into(),
            ));
        }
        if self.nlos_excess_db < 0.0 {
            return Err(("nlos_excess_db".into(), "must be non-negative".into()));
        }
        Ok(())
    }
}

/// One sampled link realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSample {
    pub los: bool,
    pub distance: f64,
    /// Linear power gain |h|^2, combining path loss, shadowing and fading.
    pub power_gain: f64,
}

/// Per-transmitter radiated quantities of an interferer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TxParams {
    pub power: f64,
    pub gain_tx: f64,
}

/// SINR in both domains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sinr {
    pub linear: f64,
    pub db: f64,
}

/// Probability that a link of length `distance` is line-of-sight.
///
/// Logistic in log-distance: `1 / (1 + (d/d0)^slope)`. It tends to 1 as the
/// link shrinks to nothing, crosses 0.5 at `d0`, and decays monotonically.
pub fn los_probability(distance: f64, params: &ChannelParams) -> Result<f64, String> {
    if !(distance > 0.0) {
        return Err(format!("distance must be positive, got {distance}"));
    }
    let ratio = distance / params.los_prob_d0;
    Ok(1.0 / (1.0 + ratio.powf(params.los_prob_slope)))
}

/// Deterministic part of the link gain for a given LoS state.
pub fn path_gain(distance: f64, los: bool, params: &ChannelParams) -> f64 {
    let d = distance.max(params.min_distance);
    let exponent = if los {
        params.pathloss_exp_los
    } else {
        params.pathloss_exp_nlos
    };
    let base = (params.ref_distance / d).powf(exponent);
    if los {
        base
    } else {
        base * db_to_linear(-params.nlos_excess_db)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Draw one Rician power-gain sample with unit mean.
fn rician_power(k_db: f64, rng: &mut Stream) -> f64 {
    let k = db_to_linear(k_db);
    let mean = (k / (k + 1.0)).sqrt();
    let sigma = (1.0 / (2.0 * (k + 1.0))).sqrt();
    let re = mean + sigma * rng.normal();
    let im = sigma * rng.normal();
    re * re + im * im
}

/// Sample the link between points `a` and `b`.
///
/// The draw order (LoS state, shadowing, fading real, fading imaginary) is
/// fixed, so a given stream state always yields the same realization.
pub fn sample_link(rng: &mut Stream, a: [f64; 3], b: [f64; 3], params: &ChannelParams) -> LinkSample {
    let mut d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    if d < params.min_distance {
        d = params.min_distance;
    }
    let p_los = 1.0 / (1.0 + (d / params.los_prob_d0).powf(params.los_prob_slope));
    let los = rng.uniform() < p_los;
    let sigma_db = if los {
        params.shadowing_sigma_los_db
    } else {
        params.shadowing_sigma_nlos_db
    };
    let shadowing = db_to_linear(sigma_db * rng.normal());
    let fading = rician_power(params.rician_k_db, rng);
    LinkSample {
        los,
        distance: d,
        power_gain: path_gain(d, los, params) * shadowing * fading,
    }
}

/// Interference-aware SINR for a serving link against a set of co-channel
/// interferers. An empty interferer list is the noise-limited case.
pub fn compute_sinr(
    serving: &LinkSample,
    interferers: &[(LinkSample, TxParams)],
    params: &ChannelParams,
) -> Sinr {
    let signal = params.tx_power * params.gain_tx * params.gain_rx * serving.power_gain;
    let interference: f64 = interferers
        .iter()
        .map(|(link, tx)| tx.power * tx.gain_tx * params.gain_rx * link.power_gain)
        .sum();
    let linear = signal / (interference + params.noise_power);
    Sinr {
        linear,
        db: linear_to_db(linear),
    }
}

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const LAMBDA_HAT_RANGE: (f64, f64) = (0.2, 0.3);
pub const BACKGROUND_RANGE: (f64, f64) = (5e6, 8e6);
pub const TROUGH_RANGE: (f64, f64) = (7e6, 12e6);
pub const PEAK_RANGE: (f64, f64) = (17e6, 27e6);

/// Where the mean load used by the reward scaling factor comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSource {
    /// The episode's configured `lambda_hat`.
    Configured,
    /// Running mean of the observed total-demand ratio.
    Online,
}

/// Environment constants shared by every episode. All of these can be
/// overridden from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub capacity_mpls: f64,
    pub capacity_internet: f64,
    pub queue_packets: f64,
    pub packet_bytes: f64,
    pub base_delay: f64,
    pub sub_steps: usize,
    pub flow_rate: f64,
    pub mean_flow_duration: f64,
    pub mean_background_duration: f64,
    pub rate_ceiling: f64,
    pub decrease_factor: f64,
    pub increase_fraction: f64,
    pub wave_period: f64,
    pub reward_alpha: f64,
    pub reward_beta: f64,
    pub lambda_source: LambdaSource,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            capacity_mpls: 6e6,
            capacity_internet: 15e6,
            queue_packets: 100.0,
            packet_bytes: 1500.0,
            base_delay: 0.01,
            sub_steps: 10,
            flow_rate: 150e3,
            mean_flow_duration: 10.0,
            mean_background_duration: 10.0,
            rate_ceiling: 1.0,
            decrease_factor: 0.5,
            increase_fraction: 0.1,
            wave_period: 100.0,
            reward_alpha: 1.0,
            reward_beta: 0.2,
            lambda_source: LambdaSource::Configured,
        }
    }
}

impl SimParams {
    pub fn total_capacity(&self) -> f64 {
        self.capacity_mpls + self.capacity_internet
    }

    pub fn queue_capacity_bits(&self) -> f64 {
        self.queue_packets * self.packet_bytes * 8.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("capacity_mpls", self.capacity_mpls),
            ("capacity_internet", self.capacity_internet),
            ("packet_bytes", self.packet_bytes),
            ("flow_rate", self.flow_rate),
            ("mean_flow_duration", self.mean_flow_duration),
            ("mean_background_duration", self.mean_background_duration),
            ("wave_period", self.wave_period),
            ("reward_beta", self.reward_beta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.queue_packets.is_finite() && self.queue_packets >= 0.0) {
            return Err(Error::Config("queue_packets must be non-negative".into()));
        }
        if !(self.base_delay.is_finite() && self.base_delay >= 0.0) {
            return Err(Error::Config("base_delay must be non-negative".into()));
        }
        if self.sub_steps == 0 {
            return Err(Error::Config("sub_steps must be at least 1".into()));
        }
        if !(self.rate_ceiling.is_finite() && self.rate_ceiling >= 1.0) {
            return Err(Error::Config("rate_ceiling must be >= 1".into()));
        }
        if !(self.decrease_factor > 0.0 && self.decrease_factor < 1.0) {
            return Err(Error::Config("decrease_factor must lie in (0, 1)".into()));
        }
        if !(self.increase_fraction.is_finite() && self.increase_fraction > 0.0) {
            return Err(Error::Config("increase_fraction must be positive".into()));
        }
        if !self.reward_alpha.is_finite() {
            return Err(Error::Config("reward_alpha must be finite".into()));
        }
        Ok(())
    }
}

/// Per-episode randomization: mean load, wave shape and phase, background
/// load, and the seed of the episode's random streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub lambda_hat: f64,
    pub wave_phase: f64,
    pub wave_trough: f64,
    pub wave_peak: f64,
    pub background_rate: f64,
    pub seed: u64,
    pub step_duration: f64,
    pub steps_per_episode: usize,
}

impl EpisodeConfig {
    /// Builds a config whose wave trough and peak are linearly selected by
    /// `lambda_hat`: 0.2 maps to 7/17 Mbps and 0.3 to 12/27 Mbps.
    pub fn from_lambda_hat(lambda_hat: f64, wave_phase: f64, background_rate: f64, seed: u64) -> Self {
        let (trough, peak) = wave_bounds(lambda_hat);
        Self {
            lambda_hat,
            wave_phase,
            wave_trough: trough,
            wave_peak: peak,
            background_rate,
            seed,
            step_duration: 2.0,
            steps_per_episode: 50,
        }
    }

    /// Draws the episode-level randomization from `seed`.
    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0xE915);
        let lambda_hat = rng.random_range(LAMBDA_HAT_RANGE.0..=LAMBDA_HAT_RANGE.1);
        let phase = rng.random_range(0.0..2.0 * PI);
        let background = rng.random_range(BACKGROUND_RANGE.0..=BACKGROUND_RANGE.1);
        Self::from_lambda_hat(lambda_hat, phase, background, seed)
    }

    pub fn episode_seconds(&self) -> f64 {
        self.step_duration * self.steps_per_episode as f64
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |name: &str, v: f64, (lo, hi): (f64, f64)| {
            // tolerate rounding from the lambda_hat mapping
            let tol = 1e-9 * hi.abs();
            if v.is_finite() && v >= lo - tol && v <= hi + tol {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} outside [{lo}, {hi}]")))
            }
        };
        in_range("lambda_hat", self.lambda_hat, LAMBDA_HAT_RANGE)?;
        in_range("background_rate", self.background_rate, BACKGROUND_RANGE)?;
        in_range("wave_trough", self.wave_trough, TROUGH_RANGE)?;
        in_range("wave_peak", self.wave_peak, PEAK_RANGE)?;
        if !self.wave_phase.is_finite() {
            return Err(Error::Config("wave_phase must be finite".into()));
        }
        if !(self.step_duration.is_finite() && self.step_duration > 0.0) {
            return Err(Error::Config(format!(
                "step_duration must be positive, got {}",
                self.step_duration
            )));
        }
        if self.steps_per_episode == 0 {
            return Err(Error::Config("steps_per_episode must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trough and peak (bits/s) selected by `lambda_hat`.
pub fn wave_bounds(lambda_hat: f64) -> (f64, f64) {
    let t = (lambda_hat - LAMBDA_HAT_RANGE.0) / (LAMBDA_HAT_RANGE.1 - LAMBDA_HAT_RANGE.0);
    (
        TROUGH_RANGE.0 + t * (TROUGH_RANGE.1 - TROUGH_RANGE.0),
        PEAK_RANGE.0 + t * (PEAK_RANGE.1 - PEAK_RANGE.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_hat_maps_to_wave_bounds() {
        let (t, p) = wave_bounds(0.2);
        assert!((t - 7e6).abs() < 1e-6 && (p - 17e6).abs() < 1e-6);
        let (t, p) = wave_bounds(0.3);
        assert!((t - 12e6).abs() < 1e-6 && (p - 27e6).abs() < 1e-6);
    }

    #[test]
    fn sampled_configs_are_valid() {
        for seed in 0..200 {
            EpisodeConfig::sample(seed).validate().unwrap();
        }
    }

    #[test]
    fn background_out_of_range_is_rejected() {
        let mut cfg = EpisodeConfig::sample(3);
        cfg.background_rate = 9e6;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn non_positive_duration_is_rejected() {
        let mut cfg = EpisodeConfig::sample(3);
        cfg.step_duration = 0.0;
        assert!(cfg.validate().is_err());
    }
}

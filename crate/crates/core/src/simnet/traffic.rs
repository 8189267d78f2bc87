//! Main-traffic and background-traffic flow arrivals.
//!
//! Main traffic follows a non-homogeneous Poisson process whose offered load
//! traces a sine wave between the episode's trough and peak. Each flow asks
//! for `flow_rate` bits/s for an exponentially distributed lifetime, so the
//! arrival rate is `load(t) / (flow_rate * mean_duration)`. Background flows
//! arrive the same way at a constant load and always use the Internet link.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use super::config::{EpisodeConfig, SimParams};
use super::link::LinkId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub id: u64,
    pub desired_rate: f64,
    pub send_rate: f64,
    pub link: Option<LinkId>,
    pub remaining_duration: f64,
    pub delivered_this_step: f64,
    /// Seconds of the current step during which the flow was alive.
    pub active_this_step: f64,
    pub is_background: bool,
}

impl Flow {
    pub fn new(id: u64, desired_rate: f64, duration: f64, is_background: bool) -> Self {
        Self {
            id,
            desired_rate,
            send_rate: desired_rate,
            link: is_background.then_some(LinkId::Internet),
            remaining_duration: duration,
            delivered_this_step: 0.0,
            active_this_step: 0.0,
            is_background,
        }
    }

    /// Bits the flow wanted during the step.
    pub fn desired_bits_this_step(&self) -> f64 {
        self.desired_rate * self.active_this_step
    }

    /// `min(1, delivered / desired)` for the current step.
    pub fn satisfaction(&self) -> f64 {
        let want = self.desired_bits_this_step();
        if want <= 0.0 {
            1.0
        } else {
            (self.delivered_this_step / want).min(1.0)
        }
    }
}

/// Sine-shaped offered-load profile in bits/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub trough: f64,
    pub peak: f64,
    pub phase: f64,
    pub period: f64,
}

impl WaveProfile {
    pub fn new(trough: f64, peak: f64, phase: f64, period: f64) -> Self {
        Self {
            trough,
            peak,
            phase,
            period,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    pub fn load_at(&self, t: f64) -> f64 {
        let mid = 0.5 * (self.trough + self.peak);
        let amp = 0.5 * (self.peak - self.trough);
        (mid + amp * (2.0 * PI * t / self.period + self.phase).sin()).max(0.0)
    }

    /// Exact mean of `load_at` over `[0, horizon]`.
    pub fn mean_over(&self, horizon: f64) -> f64 {
        let mid = 0.5 * (self.trough + self.peak);
        let amp = 0.5 * (self.peak - self.trough);
        let w = 2.0 * PI / self.period;
        mid + amp * (self.phase.cos() - (w * horizon + self.phase).cos()) / (w * horizon)
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 || !mean.is_finite() {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Owns the arrival and background random streams of one episode.
#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    pub wave: WaveProfile,
    pub background_rate: f64,
    flow_rate: f64,
    mean_duration: f64,
    mean_background_duration: f64,
    arrivals_rng: ChaCha8Rng,
    background_rng: ChaCha8Rng,
    next_id: u64,
}

pub(crate) const ARRIVAL_STREAM: u64 = 1;
pub(crate) const BACKGROUND_STREAM: u64 = 2;
pub(crate) const TIEBREAK_STREAM: u64 = 3;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl TrafficGenerator {
    pub fn new(params: &SimParams, config: &EpisodeConfig) -> Self {
        let wave = WaveProfile::new(config.wave_trough, config.wave_peak, config.wave_phase, params.wave_period);
        Self::with_profile(params, wave, config.background_rate, config.seed)
    }

    pub fn with_profile(params: &SimParams, wave: WaveProfile, background_rate: f64, seed: u64) -> Self {
        Self {
            wave,
            background_rate,
            flow_rate: params.flow_rate,
            mean_duration: params.mean_flow_duration,
            mean_background_duration: params.mean_background_duration,
            arrivals_rng: stream_rng(seed, ARRIVAL_STREAM),
            background_rng: stream_rng(seed, BACKGROUND_STREAM),
            next_id: 0,
        }
    }

    /// Expected number of main-flow arrivals in `[t, t + dt)`.
    pub fn expected_main_arrivals(&self, t: f64, dt: f64) -> f64 {
        self.wave.load_at(t + 0.5 * dt) * dt / (self.flow_rate * self.mean_duration)
    }

    pub fn expected_background_arrivals(&self, dt: f64) -> f64 {
        self.background_rate * dt / (self.flow_rate * self.mean_background_duration)
    }

    /// Flows arriving in `[t, t + dt)`: main flows first (unplaced), then
    /// background flows (already on the Internet link).
    pub fn generate_arrivals(&mut self, t: f64, dt: f64) -> Vec<Flow> {
        let (mean_main, mean_bg) = (self.expected_main_arrivals(t, dt), self.expected_background_arrivals(dt));
        let n_main = poisson_count(&mut self.arrivals_rng, mean_main);
        let n_bg = poisson_count(&mut self.background_rng, mean_bg);
        let mut out = Vec::with_capacity((n_main + n_bg) as usize);
        for _ in 0..n_main {
            let d = exp_sample(&mut self.arrivals_rng, self.mean_duration);
            out.push(Flow::new(self.next_id, self.flow_rate, d, false));
            self.next_id += 1;
        }
        for _ in 0..n_bg {
            let d = exp_sample(&mut self.background_rng, self.mean_background_duration);
            out.push(Flow::new(self.next_id, self.flow_rate, d, true));
            self.next_id += 1;
        }
        out
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let d: f64 = Exp::new(1.0 / mean).map(|e| e.sample(rng)).unwrap_or(mean);
    d.max(1e-9)
}

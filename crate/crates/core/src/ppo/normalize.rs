use serde::{Deserialize, Serialize};

/// Running mean and variance over a stream of scalars (parallel-merge form).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningMeanStd {
    pub mean: f64,
    pub var: f64,
    pub count: f64,
}

impl Default for RunningMeanStd {
    fn default() -> Self {
        Self {
            mean: 0.0,
            var: 1.0,
            count: 1e-4,
        }
    }
}

impl RunningMeanStd {
    pub fn update(&mut self, xs: &[f64]) {
        if xs.is_empty() {
            return;
        }
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let delta = m - self.mean;
        let total = self.count + n;
        let m2 = self.var * self.count + v * n + delta * delta * self.count * n / total;
        self.mean += delta * n / total;
        self.var = m2 / total;
        self.count = total;
    }
}

/// Divides rewards by the running standard deviation of the discounted
/// return, then clips them to `[-clip, clip]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    pub gamma: f64,
    pub clip: f64,
    pub rms: RunningMeanStd,
    ret: f64,
}

impl RewardNormalizer {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            clip: 10.0,
            rms: RunningMeanStd::default(),
            ret: 0.0,
        }
    }

    /// Scales `rewards` in place; `dones[t]` ends the running return after step `t`.
    pub fn apply(&mut self, rewards: &mut [f64], dones: &[bool]) {
        let mut returns = Vec::with_capacity(rewards.len());
        for (r, &d) in rewards.iter().zip(dones) {
            self.ret = self.ret * self.gamma + r;
            returns.push(self.ret);
            if d {
                self.ret = 0.0;
            }
        }
        self.rms.update(&returns);
        let sd = (self.rms.var + 1e-8).sqrt();
        rewards.iter_mut().for_each(|r| *r = (*r / sd).clamp(-self.clip, self.clip));
    }
}

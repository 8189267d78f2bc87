use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkId {
    Mpls,
    Internet,
}

impl LinkId {
    pub const ALL: [LinkId; 2] = [LinkId::Mpls, LinkId::Internet];

    pub fn index(self) -> usize {
        match self {
            LinkId::Mpls => 0,
            LinkId::Internet => 1,
        }
    }
}

/// Bits moved through one link during one sub-step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SubStepFlow {
    pub offered: f64,
    pub delivered: f64,
    pub lost: f64,
}

/// One drop-tail link. Counters cover the current environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub capacity: f64,
    pub queue_bits: f64,
    pub queue_capacity_bits: f64,
    pub base_delay: f64,
    pub offered_bits: f64,
    pub delivered_bits: f64,
    pub lost_bits: f64,
    pub queue_at_step_start: f64,
    /// Sum of end-of-sub-step queue occupancies, for the mean queueing delay.
    queue_integral: f64,
    sub_steps_run: usize,
    pub flow_ids: BTreeSet<u64>,
}

impl LinkState {
    pub fn new(capacity: f64, queue_capacity_bits: f64, base_delay: f64) -> Self {
        Self {
            capacity,
            queue_bits: 0.0,
            queue_capacity_bits,
            base_delay,
            offered_bits: 0.0,
            delivered_bits: 0.0,
            lost_bits: 0.0,
            queue_at_step_start: 0.0,
            queue_integral: 0.0,
            sub_steps_run: 0,
            flow_ids: BTreeSet::new(),
        }
    }

    pub fn begin_step(&mut self) {
        self.offered_bits = 0.0;
        self.delivered_bits = 0.0;
        self.lost_bits = 0.0;
        self.queue_at_step_start = self.queue_bits;
        self.queue_integral = 0.0;
        self.sub_steps_run = 0;
    }

    /// Serves `offered` new bits plus the backlog for `dt` seconds. Whatever
    /// cannot be sent waits in the queue; what does not fit in the queue is
    /// dropped.
    pub fn serve(&mut self, offered: f64, dt: f64) -> SubStepFlow {
        let available = self.queue_bits + offered;
        let delivered = available.min(self.capacity * dt);
        let backlog = available - delivered;
        let queued = backlog.min(self.queue_capacity_bits);
        let lost = backlog - queued;
        self.queue_bits = queued;

        self.offered_bits += offered;
        self.delivered_bits += delivered;
        self.lost_bits += lost;
        self.queue_integral += queued;
        self.sub_steps_run += 1;
        SubStepFlow {
            offered,
            delivered,
            lost,
        }
    }

    /// `offered - delivered - lost - queue change` for the current step.
    pub fn conservation_residual(&self) -> f64 {
        self.offered_bits - self.delivered_bits - self.lost_bits - (self.queue_bits - self.queue_at_step_start)
    }

    pub fn utilization(&self, step_duration: f64) -> f64 {
        (self.delivered_bits / (self.capacity * step_duration)).clamp(0.0, 1.0)
    }

    pub fn loss_ratio(&self) -> f64 {
        if self.offered_bits > 0.0 {
            (self.lost_bits / self.offered_bits).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn mean_queue_bits(&self) -> f64 {
        if self.sub_steps_run == 0 {
            self.queue_bits
        } else {
            self.queue_integral / self.sub_steps_run as f64
        }
    }

    pub fn delay_for_queue(&self, queue_bits: f64) -> f64 {
        self.base_delay + queue_bits.max(0.0) / self.capacity
    }

    /// Base delay plus the mean queueing delay over the step.
    pub fn delay(&self) -> f64 {
        self.delay_for_queue(self.mean_queue_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link() -> LinkState {
        LinkState::new(6e6, 1.2e6, 0.01)
    }

    #[test]
    fn light_load_passes_through() {
        let mut l = link();
        l.begin_step();
        let f = l.serve(1e5, 0.2);
        assert_eq!(f.delivered, 1e5);
        assert_eq!(f.lost, 0.0);
        assert_eq!(l.queue_bits, 0.0);
    }

    #[test]
    fn overload_fills_queue_then_drops() {
        let mut l = link();
        l.begin_step();
        // 1.2 Mbit serviceable per 0.2 s; offer 3 Mbit twice
        l.serve(3e6, 0.2);
        assert_eq!(l.queue_bits, 1.2e6);
        assert!((l.lost_bits - 0.6e6).abs() < 1e-6);
        l.serve(3e6, 0.2);
        assert_eq!(l.queue_bits, 1.2e6);
        assert!(l.conservation_residual().abs() < 1e-6);
        assert!(l.utilization(0.4) <= 1.0);
    }

    #[test]
    fn delay_is_monotone_in_queue() {
        let l = link();
        let mut prev = l.delay_for_queue(0.0);
        assert_eq!(prev, 0.01);
        for q in 1..=100 {
            let d = l.delay_for_queue(q as f64 * 12_000.0);
            assert!(d > prev);
            prev = d;
        }
    }

    #[test]
    fn zero_offered_has_zero_loss_ratio() {
        let mut l = link();
        l.begin_step();
        l.serve(0.0, 0.2);
        assert_eq!(l.loss_ratio(), 0.0);
    }
}

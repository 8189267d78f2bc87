//! Flow placement: the target-ratio controller driven by the policy, and the
//! capacity-proportional (EL) baseline.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::link::LinkId;

/// Capacity-normalized flow ratio shifted to `[-1, 1]`:
/// `2 (n_m/C_m) / (n_m/C_m + n_i/C_i) - 1`.
///
/// Returns `None` when no flows are placed, where the ratio is undefined.
pub fn compute_action_ratio(n_mpls: usize, n_internet: usize, cap_mpls: f64, cap_internet: f64) -> Option<f64> {
    if n_mpls + n_internet == 0 {
        return None;
    }
    let m = n_mpls as f64 / cap_mpls;
    let i = n_internet as f64 / cap_internet;
    Some((2.0 * m / (m + i) - 1.0).clamp(-1.0, 1.0))
}

/// Tracks main-flow counts per link and places new flows.
#[derive(Debug, Clone)]
pub struct Controller {
    pub cap_mpls: f64,
    pub cap_internet: f64,
    pub n_mpls: usize,
    pub n_internet: usize,
    last_ratio: f64,
    tiebreak: ChaCha8Rng,
}

impl Controller {
    pub fn new(cap_mpls: f64, cap_internet: f64, tiebreak: ChaCha8Rng) -> Self {
        Self {
            cap_mpls,
            cap_internet,
            n_mpls: 0,
            n_internet: 0,
            last_ratio: 0.0,
            tiebreak,
        }
    }

    /// Current achieved ratio; falls back to the last defined value (0 at
    /// start) when no main flows are placed.
    pub fn achieved_ratio(&mut self) -> f64 {
        if let Some(r) = compute_action_ratio(self.n_mpls, self.n_internet, self.cap_mpls, self.cap_internet) {
            self.last_ratio = r;
        }
        self.last_ratio
    }

    /// Steers the achieved ratio toward `target`: MPLS when below, Internet
    /// when above, a fair coin on ties.
    pub fn place_flow(&mut self, target: f64) -> LinkId {
        let achieved = self.achieved_ratio();
        let link = if achieved < target {
            LinkId::Mpls
        } else if achieved > target {
            LinkId::Internet
        } else if self.tiebreak.random_bool(0.5) {
            LinkId::Mpls
        } else {
            LinkId::Internet
        };
        self.record(link);
        link
    }

    /// Places on the link whose flow-count share is furthest below its
    /// capacity share; ties go to MPLS.
    pub fn el_baseline_place(&mut self) -> LinkId {
        let n = (self.n_mpls + self.n_internet) as f64;
        let (share_m, share_i) = if n > 0.0 {
            (self.n_mpls as f64 / n, self.n_internet as f64 / n)
        } else {
            (0.0, 0.0)
        };
        let total = self.cap_mpls + self.cap_internet;
        let deficit_m = self.cap_mpls / total - share_m;
        let deficit_i = self.cap_internet / total - share_i;
        let link = if deficit_i > deficit_m {
            LinkId::Internet
        } else {
            LinkId::Mpls
        };
        self.record(link);
        link
    }

    fn record(&mut self, link: LinkId) {
        match link {
            LinkId::Mpls => self.n_mpls += 1,
            LinkId::Internet => self.n_internet += 1,
        }
    }

    pub fn remove(&mut self, link: LinkId) {
        match link {
            LinkId::Mpls => self.n_mpls = self.n_mpls.saturating_sub(1),
            LinkId::Internet => self.n_internet = self.n_internet.saturating_sub(1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::traffic::stream_rng;

    fn controller(cm: f64, ci: f64) -> Controller {
        Controller::new(cm, ci, stream_rng(5, 3))
    }

    #[test]
    fn ratio_is_zero_when_balanced_by_capacity() {
        assert_eq!(compute_action_ratio(2, 5, 6e6, 15e6), Some(0.0));
    }

    #[test]
    fn ratio_boundaries() {
        assert_eq!(compute_action_ratio(3, 0, 6e6, 15e6), Some(1.0));
        assert_eq!(compute_action_ratio(0, 4, 6e6, 15e6), Some(-1.0));
        assert_eq!(compute_action_ratio(0, 0, 6e6, 15e6), None);
    }

    #[test]
    fn below_target_goes_to_mpls() {
        let mut c = controller(6e6, 15e6);
        c.n_internet = 4; // achieved = -1
        assert_eq!(c.place_flow(1.0), LinkId::Mpls);
    }

    #[test]
    fn above_target_goes_to_internet() {
        let mut c = controller(6e6, 15e6);
        c.n_mpls = 4; // achieved = 1
        assert_eq!(c.place_flow(-1.0), LinkId::Internet);
    }

    #[test]
    fn ties_are_a_fair_coin() {
        let mut c = controller(6e6, 15e6);
        let mut mpls = 0;
        let trials = 10_000;
        for _ in 0..trials {
            c.n_mpls = 2;
            c.n_internet = 5; // achieved = 0
            if c.place_flow(0.0) == LinkId::Mpls {
                mpls += 1;
            }
        }
        let freq = mpls as f64 / trials as f64;
        assert!((freq - 0.5).abs() <= 0.05, "freq {freq}");
    }

    #[test]
    fn el_first_two_arrivals() {
        let mut c = controller(6e6, 15e6);
        assert_eq!(c.el_baseline_place(), LinkId::Internet);
        assert_eq!(c.el_baseline_place(), LinkId::Mpls);
    }

    #[test]
    fn el_equal_capacities_alternate() {
        let mut c = controller(10e6, 10e6);
        let seq: Vec<_> = (0..6).map(|_| c.el_baseline_place()).collect();
        for w in seq.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn el_converges_to_capacity_shares() {
        let mut c = controller(6e6, 15e6);
        for _ in 0..21_000 {
            c.el_baseline_place();
        }
        let share_m = c.n_mpls as f64 / 21_000.0;
        assert!((share_m - 6.0 / 21.0).abs() < 0.01);
    }
}

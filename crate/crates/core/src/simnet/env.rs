use super::config::{EpisodeConfig, LambdaSource, SimParams};
use super::controller::Controller;
use super::link::{LinkId, LinkState};
use super::reward::{reward_loss, reward_utility, scaling_factor};
use super::traffic::{stream_rng, Flow, TrafficGenerator, TIEBREAK_STREAM};
use super::{ObsVector, StepInfo, StepOutcome};
use crate::{Error, Result};

/// How main flows arriving during a step are placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Steer the achieved ratio toward this target (clipped to `[-1, 1]`).
    Target(f64),
    /// Keep the flow-count split proportional to link capacities.
    CapacityProportional,
}

/// The two-link environment. Single-threaded; owns its random streams.
#[derive(Debug, Clone)]
pub struct LoadBalancerEnv {
    params: SimParams,
    config: Option<EpisodeConfig>,
    links: [LinkState; 2],
    flows: Vec<Flow>,
    traffic: Option<TrafficGenerator>,
    controller: Controller,
    step_index: usize,
    time: f64,
    done: bool,
    observed_lambda_sum: f64,
}

impl LoadBalancerEnv {
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let links = Self::fresh_links(&params);
        let controller = Controller::new(params.capacity_mpls, params.capacity_internet, stream_rng(0, TIEBREAK_STREAM));
        Ok(Self {
            params,
            config: None,
            links,
            flows: Vec::new(),
            traffic: None,
            controller,
            step_index: 0,
            time: 0.0,
            done: false,
            observed_lambda_sum: 0.0,
        })
    }

    fn fresh_links(params: &SimParams) -> [LinkState; 2] {
        let q = params.queue_capacity_bits();
        [
            LinkState::new(params.capacity_mpls, q, params.base_delay),
            LinkState::new(params.capacity_internet, q, params.base_delay),
        ]
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn config(&self) -> Option<&EpisodeConfig> {
        self.config.as_ref()
    }

    pub fn link(&self, id: LinkId) -> &LinkState {
        &self.links[id.index()]
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn reset(&mut self, config: EpisodeConfig) -> Result<ObsVector> {
        config.validate()?;
        self.links = Self::fresh_links(&self.params);
        self.flows.clear();
        self.traffic = Some(TrafficGenerator::new(&self.params, &config));
        self.controller = Controller::new(
            self.params.capacity_mpls,
            self.params.capacity_internet,
            stream_rng(config.seed, TIEBREAK_STREAM),
        );
        self.step_index = 0;
        self.time = 0.0;
        self.done = false;
        self.observed_lambda_sum = 0.0;
        self.config = Some(config);
        Ok(ObsVector {
            d_m_x10: 10.0 * self.params.base_delay,
            d_i_x10: 10.0 * self.params.base_delay,
            ..ObsVector::default()
        })
    }

    /// Advances one step with the policy's target ratio.
    pub fn step(&mut self, action: f64) -> Result<StepOutcome> {
        if !action.is_finite() {
            return Err(Error::Domain(format!("action must be finite, got {action}")));
        }
        self.step_with(Placement::Target(action.clamp(-1.0, 1.0)))
    }

    pub fn step_with(&mut self, placement: Placement) -> Result<StepOutcome> {
        let config = self
            .config
            .clone()
            .ok_or_else(|| Error::State("step called before reset".into()))?;
        if self.done {
            return Err(Error::State("step called after the episode ended".into()));
        }
        let traffic = self.traffic.as_mut().expect("traffic exists after reset");

        for link in &mut self.links {
            link.begin_step();
        }
        for f in &mut self.flows {
            f.delivered_this_step = 0.0;
            f.active_this_step = 0.0;
        }

        let sub_dt = config.step_duration / self.params.sub_steps as f64;
        let mut arrived_load = 0.0;
        let mut departed_load = 0.0;
        let mut finished_main: Vec<(f64, f64)> = Vec::new();

        for s in 0..self.params.sub_steps {
            let t = self.time + s as f64 * sub_dt;
            for mut flow in traffic.generate_arrivals(t, sub_dt) {
                if !flow.is_background {
                    let link = match placement {
                        Placement::Target(target) => self.controller.place_flow(target),
                        Placement::CapacityProportional => self.controller.el_baseline_place(),
                    };
                    flow.link = Some(link);
                    arrived_load += flow.desired_rate;
                }
                let link = flow.link.expect("placed");
                self.links[link.index()].flow_ids.insert(flow.id);
                self.flows.push(flow);
            }

            let mut offered = [0.0f64; 2];
            for f in &self.flows {
                let active = f.remaining_duration.min(sub_dt);
                offered[f.link.expect("placed").index()] += f.send_rate * active;
            }
            let mut dropped = [false; 2];
            let mut pass = [1.0f64; 2];
            for (k, link) in self.links.iter_mut().enumerate() {
                let r = link.serve(offered[k], sub_dt);
                dropped[k] = r.lost > 0.0;
                if r.offered > 0.0 {
                    pass[k] = 1.0 - r.lost / r.offered;
                }
            }

            let ceiling = self.params.rate_ceiling;
            for f in &mut self.flows {
                let k = f.link.expect("placed").index();
                let active = f.remaining_duration.min(sub_dt);
                f.delivered_this_step += f.send_rate * active * pass[k];
                f.active_this_step += active;
                if dropped[k] {
                    f.send_rate *= self.params.decrease_factor;
                } else {
                    f.send_rate = (f.send_rate + self.params.increase_fraction * f.desired_rate)
                        .min(f.desired_rate * ceiling);
                }
                f.remaining_duration -= sub_dt;
            }

            let mut i = 0;
            while i < self.flows.len() {
                if self.flows[i].remaining_duration <= 0.0 {
                    let f = self.flows.swap_remove(i);
                    let link = f.link.expect("placed");
                    self.links[link.index()].flow_ids.remove(&f.id);
                    if !f.is_background {
                        self.controller.remove(link);
                        departed_load += f.desired_rate;
                        finished_main.push((f.delivered_this_step, f.desired_bits_this_step()));
                    }
                } else {
                    i += 1;
                }
            }
        }
        // swap_remove scrambles order; keep iteration order a function of ids
        self.flows.sort_unstable_by_key(|f| f.id);

        self.time += config.step_duration;
        self.step_index += 1;
        self.done = self.step_index >= config.steps_per_episode;

        let satisfaction: Vec<(f64, f64)> = finished_main
            .into_iter()
            .chain(
                self.flows
                    .iter()
                    .filter(|f| !f.is_background)
                    .map(|f| (f.delivered_this_step, f.desired_bits_this_step())),
            )
            .collect();

        let cap_total = self.params.total_capacity();
        let (main_m, main_i) = self.flows.iter().filter(|f| !f.is_background).fold((0.0, 0.0), |acc, f| {
            match f.link {
                Some(LinkId::Mpls) => (acc.0 + f.desired_rate, acc.1),
                _ => (acc.0, acc.1 + f.desired_rate),
            }
        });
        let [m, i] = &self.links;
        let dt = config.step_duration;
        let obs = ObsVector {
            lambda: (main_m + main_i) / cap_total,
            delta_lambda: (arrived_load - departed_load) / cap_total,
            lambda_m: main_m / m.capacity,
            d_m_x10: 10.0 * m.delay(),
            l_m_x10: 10.0 * m.loss_ratio(),
            u_m: m.utilization(dt),
            lambda_i: main_i / i.capacity,
            d_i_x10: 10.0 * i.delay(),
            l_i_x10: 10.0 * i.loss_ratio(),
            u_i: i.utilization(dt),
        };

        self.observed_lambda_sum += obs.lambda;
        let lambda_for_scale = match self.params.lambda_source {
            LambdaSource::Configured => config.lambda_hat,
            LambdaSource::Online => (self.observed_lambda_sum / self.step_index as f64).max(1e-3),
        };
        let scale = scaling_factor(lambda_for_scale, self.params.reward_alpha, self.params.reward_beta)?;

        let mut info = StepInfo {
            delay_m: m.delay(),
            delay_i: i.delay(),
            loss_m: m.loss_ratio(),
            loss_i: i.loss_ratio(),
            util_m: m.utilization(dt),
            util_i: i.utilization(dt),
            achieved_ratio: self.controller.achieved_ratio(),
            n_main_m: self.controller.n_mpls,
            n_main_i: self.controller.n_internet,
            n_background: self.flows.iter().filter(|f| f.is_background).count(),
            offered_m: m.offered_bits,
            offered_i: i.offered_bits,
            delivered_m: m.delivered_bits,
            delivered_i: i.delivered_bits,
            lost_m: m.lost_bits,
            lost_i: i.lost_bits,
            overall_delay: 0.0,
            overall_loss: 0.0,
            overall_utility: 1.0,
            scale,
        };
        let (delay, loss) = info.recompose_overall();
        info.overall_delay = delay;
        info.overall_loss = loss.clamp(0.0, 1.0);
        if !satisfaction.is_empty() {
            info.overall_utility = satisfaction
                .iter()
                .map(|&(got, want)| if want > 0.0 { (got / want).min(1.0) } else { 1.0 })
                .sum::<f64>()
                / satisfaction.len() as f64;
        }

        Ok(StepOutcome {
            obs,
            reward_utility: reward_utility(&satisfaction, scale),
            reward_loss: reward_loss(info.overall_loss, scale)?,
            done: self.done,
            info,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> LoadBalancerEnv {
        LoadBalancerEnv::new(SimParams::default()).unwrap()
    }

    #[test]
    fn reset_returns_rest_observation() {
        let mut e = env();
        let obs = e.reset(EpisodeConfig::sample(1)).unwrap();
        assert_eq!(obs.l_m_x10, 0.0);
        assert_eq!(obs.l_i_x10, 0.0);
        assert_eq!(obs.u_m, 0.0);
        assert_eq!(obs.u_i, 0.0);
        assert_eq!(e.link(LinkId::Mpls).queue_bits, 0.0);
        assert!(e.flows().is_empty());
    }

    #[test]
    fn step_before_reset_is_a_state_error() {
        let mut e = env();
        assert!(matches!(e.step(0.0), Err(Error::State(_))));
    }

    #[test]
    fn step_after_done_is_a_state_error() {
        let mut e = env();
        e.reset(EpisodeConfig::sample(2)).unwrap();
        for k in 0..50 {
            let out = e.step(0.0).unwrap();
            assert_eq!(out.done, k == 49);
        }
        assert!(matches!(e.step(0.0), Err(Error::State(_))));
    }

    #[test]
    fn invalid_config_rejected_on_reset() {
        let mut e = env();
        let mut cfg = EpisodeConfig::sample(2);
        cfg.background_rate = 9e6;
        assert!(matches!(e.reset(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn light_load_is_lossless_and_satisfied() {
        // huge links: offered load stays far below capacity
        let params = SimParams {
            capacity_mpls: 600e6,
            capacity_internet: 1500e6,
            ..SimParams::default()
        };
        let mut e = LoadBalancerEnv::new(params).unwrap();
        e.reset(EpisodeConfig::sample(3)).unwrap();
        for _ in 0..50 {
            let out = e.step(0.3).unwrap();
            assert_eq!(out.reward_loss, 0.0);
            assert_eq!(out.reward_utility, 0.0);
        }
    }

    #[test]
    fn out_of_range_actions_are_clipped() {
        let mut a = env();
        let mut b = env();
        a.reset(EpisodeConfig::sample(8)).unwrap();
        b.reset(EpisodeConfig::sample(8)).unwrap();
        for _ in 0..10 {
            assert_eq!(a.step(7.0).unwrap(), b.step(1.0).unwrap());
        }
        assert!(a.step(f64::NAN).is_err());
    }
}

//! Episode traces as CSV with a fixed header.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ObsVector, StepOutcome};
use crate::Result;

pub const TRACE_HEADER: [&str; 21] = [
    "step",
    "lambda",
    "delta_lambda",
    "lambda_m",
    "d_m_x10",
    "l_m_x10",
    "u_m",
    "lambda_i",
    "d_i_x10",
    "l_i_x10",
    "u_i",
    "action",
    "achieved_ratio",
    "reward_utility",
    "reward_loss",
    "delay_m",
    "delay_i",
    "loss_m",
    "loss_i",
    "util_m",
    "util_i",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub lambda: f64,
    pub delta_lambda: f64,
    pub lambda_m: f64,
    pub d_m_x10: f64,
    pub l_m_x10: f64,
    pub u_m: f64,
    pub lambda_i: f64,
    pub d_i_x10: f64,
    pub l_i_x10: f64,
    pub u_i: f64,
    pub action: f64,
    pub achieved_ratio: f64,
    pub reward_utility: f64,
    pub reward_loss: f64,
    pub delay_m: f64,
    pub delay_i: f64,
    pub loss_m: f64,
    pub loss_i: f64,
    pub util_m: f64,
    pub util_i: f64,
}

impl TraceRow {
    pub fn new(step: usize, action: f64, out: &StepOutcome) -> Self {
        let ObsVector {
            lambda,
            delta_lambda,
            lambda_m,
            d_m_x10,
            l_m_x10,
            u_m,
            lambda_i,
            d_i_x10,
            l_i_x10,
            u_i,
        } = out.obs;
        Self {
            step,
            lambda,
            delta_lambda,
            lambda_m,
            d_m_x10,
            l_m_x10,
            u_m,
            lambda_i,
            d_i_x10,
            l_i_x10,
            u_i,
            action,
            achieved_ratio: out.info.achieved_ratio,
            reward_utility: out.reward_utility,
            reward_loss: out.reward_loss,
            delay_m: out.info.delay_m,
            delay_i: out.info.delay_i,
            loss_m: out.info.loss_m,
            loss_i: out.info.loss_i,
            util_m: out.info.util_m,
            util_i: out.info.util_i,
        }
    }
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(crate::Error::Config(format!("unexpected trace header: {headers:?}")));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::{EpisodeConfig, LoadBalancerEnv, SimParams};

    #[test]
    fn header_and_round_trip() {
        let mut env = LoadBalancerEnv::new(SimParams::default()).unwrap();
        env.reset(EpisodeConfig::sample(9)).unwrap();
        let rows: Vec<_> = (0..5).map(|k| TraceRow::new(k, 0.1, &env.step(0.1).unwrap())).collect();
        let mut buf = Vec::new();
        write_trace(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER.join(","));
        assert_eq!(read_trace(&buf[..]).unwrap(), rows);
    }
}

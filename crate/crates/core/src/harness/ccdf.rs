use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Empirical `P(X > x)` at the sorted unique sample values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfTable {
    pub x: Vec<f64>,
    pub ccdf: Vec<f64>,
    pub samples: usize,
}

pub fn ccdf(samples: &[f64]) -> Result<CcdfTable> {
    if samples.is_empty() {
        return Err(Error::Domain("ccdf of an empty sample".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("ccdf of non-finite samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (mut x, mut ccdf) = (Vec::new(), Vec::new());
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == v {
            j += 1;
        }
        x.push(v);
        ccdf.push((n - j) as f64 / n as f64);
        i = j;
    }
    Ok(CcdfTable { x, ccdf, samples: n })
}

impl CcdfTable {
    /// `P(X > x)` for any `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        // index of the last threshold <= x
        let k = self.x.partition_point(|&t| t <= x);
        if k == 0 {
            1.0
        } else {
            self.ccdf[k - 1]
        }
    }

    /// Checks the monotonicity and range invariants.
    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.ccdf.len() || self.x.is_empty() {
            return Err(Error::State("ccdf table is empty or ragged".into()));
        }
        if self.x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::State("ccdf thresholds not strictly increasing".into()));
        }
        if self.ccdf.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::State("ccdf values increase".into()));
        }
        if self.ccdf.iter().any(|v| !(0.0..=1.0).contains(v)) || *self.ccdf.last().unwrap() != 0.0 {
            return Err(Error::State("ccdf values out of range".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_examples() {
        let t = ccdf(&[1.0, 2.0, 3.0]).unwrap();
        assert!((t.value_at(1.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.value_at(0.0), 1.0);
        assert_eq!(t.value_at(3.0), 0.0);
        assert_eq!(t.value_at(1.0), 2.0 / 3.0);
        t.validate().unwrap();
    }

    #[test]
    fn ties_collapse() {
        let t = ccdf(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.x, vec![0.0, 1.0]);
        assert_eq!(t.ccdf, vec![0.25, 0.0]);
    }

    #[test]
    fn empty_rejected() {
        assert!(ccdf(&[]).is_err());
        assert!(ccdf(&[f64::NAN]).is_err());
    }
}

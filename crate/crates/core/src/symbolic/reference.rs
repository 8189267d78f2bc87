//! The four published controller equations as ready-made expressions.
//!
//! Delay and loss inputs are already ×10-scaled, so a printed `10 d_i`
//! is the `d_i_x10` input and `30 l_i / 32` is `3 * l_i_x10 / 32`.

use std::fmt;
use std::str::FromStr;

use super::expr::Expr;
use super::parse::parse_infix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceId {
    /// KAN-symbolic, throughput utility.
    Eq3,
    /// KAN-symbolic, loss.
    Eq4,
    /// Distilled, throughput utility.
    Eq5,
    /// Distilled, loss.
    Eq6,
}

impl ReferenceId {
    pub const ALL: [ReferenceId; 4] = [ReferenceId::Eq3, ReferenceId::Eq4, ReferenceId::Eq5, ReferenceId::Eq6];

    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceId::Eq3 => "eq3",
            ReferenceId::Eq4 => "eq4",
            ReferenceId::Eq5 => "eq5",
            ReferenceId::Eq6 => "eq6",
        }
    }

    fn infix(self) -> &'static str {
        match self {
            ReferenceId::Eq3 => {
                "1.3 - lambda / 5 - square(0.9 * delta_lambda + 1) / 3 - 2 * lambda_i / 5 \
                 + 3 * square(d_i_x10 + 0.6) / 32 - 3 * l_i_x10 / 32"
            }
            ReferenceId::Eq4 => {
                "1.9 - 1.1 * square(2 * delta_lambda / 3 + 1) - 2 * lambda_i / 5 + d_i_x10 / 3 + u_i / 10"
            }
            ReferenceId::Eq5 => "(2.0 - 8 * delta_lambda - 2 * d_m_x10 - l_i_x10) / exp(lambda_i - u_i)",
            ReferenceId::Eq6 => "exp(0 - square(11 * delta_lambda + l_i_x10) / 4)",
        }
    }
}

impl fmt::Display for ReferenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReferenceId::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnresolvedPolicy(format!("unknown reference policy '{s}' (expected eq3, eq4, eq5 or eq6)")))
    }
}

pub fn reference_policy(id: ReferenceId) -> Expr {
    parse_infix(id.infix()).expect("reference equations parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_references_parse_and_use_valid_inputs() {
        for id in ReferenceId::ALL {
            let e = reference_policy(id);
            assert!(e.validate().is_ok());
            assert!(e.eval(&[0.4; 10]).abs() <= 1.0);
        }
    }

    #[test]
    fn unknown_id_is_rejected() {
        assert!("eq7".parse::<ReferenceId>().is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::Strategy;
use crate::error::{Error, Result};

/// Which coreset the flow tries first once local inference is unaffordable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowOrder {
    /// Clustering (D3) before sampling (D4).
    Cascade,
    /// Cheapest coreset first: D4 before D3 with the default table.
    TableGreedy,
}

/// Node-side scheduling policy.
///
/// Written in configs and on the command line as `seeker`,
/// `seeker-table-greedy`, `err<n>` (for example `err3`) or `forced-<s>`
/// (for example `forced-d3`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    Seeker(FlowOrder),
    /// Round robin: `n` store cycles, then one execute cycle that tries
    /// local inference.
    Err(usize),
    /// Always attempt one strategy.
    Forced(Strategy),
}

impl Default for Policy {
    fn default() -> Self {
        Policy::Seeker(FlowOrder::Cascade)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Seeker(FlowOrder::Cascade) => f.write_str("seeker"),
            Policy::Seeker(FlowOrder::TableGreedy) => f.write_str("seeker-table-greedy"),
            Policy::Err(n) => write!(f, "err{n}"),
            Policy::Forced(s) => write!(f, "forced-{}", s.name().to_ascii_lowercase()),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "seeker" | "seeker-cascade" => return Ok(Policy::Seeker(FlowOrder::Cascade)),
            "seeker-table-greedy" => return Ok(Policy::Seeker(FlowOrder::TableGreedy)),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("err") {
            let n: usize = n.trim_start_matches(['(', '-']).trim_end_matches(')').parse().map_err(|_| bad(&s))?;
            if n == 0 {
                return Err(Error::config("err(n) needs n >= 1"));
            }
            return Ok(Policy::Err(n));
        }
        if let Some(st) = s.strip_prefix("forced-") {
            let st: Strategy = st.parse()?;
            if st == Strategy::Drop {
                return Err(bad(&s));
            }
            return Ok(Policy::Forced(st));
        }
        Err(bad(&s))
    }
}

fn bad(s: &str) -> Error {
    Error::config(format!("unknown policy '{s}' (expected seeker, seeker-table-greedy, err<n> or forced-<d0..d4>)"))
}

impl TryFrom<String> for Policy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> String {
        p.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in [
            Policy::Seeker(FlowOrder::Cascade),
            Policy::Seeker(FlowOrder::TableGreedy),
            Policy::Err(3),
            Policy::Err(12),
            Policy::Forced(Strategy::D3),
            Policy::Forced(Strategy::D0),
        ] {
            assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
        assert_eq!("ERR(6)".parse::<Policy>().unwrap(), Policy::Err(6));
        for bad in ["err0", "errx", "forced-drop", "greedy"] {
            assert!(bad.parse::<Policy>().is_err(), "{bad}");
        }
    }
}

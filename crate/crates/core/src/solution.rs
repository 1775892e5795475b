use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    /// `+1` for minimization, `-1` for maximization: multiply to get a value to minimize.
    pub fn to_min(self) -> f64 {
        match self {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        }
    }

    /// True if `a` is strictly better than `b` in this sense.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Min => a < b,
            Sense::Max => a > b,
        }
    }

    /// Worst possible value.
    pub fn worst(self) -> f64 {
        match self {
            Sense::Min => f64::INFINITY,
            Sense::Max => f64::NEG_INFINITY,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Min => "min",
            Sense::Max => "max",
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "min" => Ok(Sense::Min),
            "max" => Ok(Sense::Max),
            other => Err(Error::Input(format!("sense must be `min` or `max`, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    /// The gap certificate meets the configured tolerance (or the method is exact).
    Optimal,
    /// A node or time limit stopped the search first.
    Incomplete,
    /// Heuristic result with no certificate (genetic algorithm).
    Heuristic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub evaluations: u64,
    pub wall_time: Duration,
}

/// Result of an optimizer run.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub sense: Sense,
    pub x: Vec<f64>,
    pub value: f64,
    /// Best proven bound in the same sense as `value` (upper bound for max).
    pub bound: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

/// `|value - bound| / max(1, |value|)`.
pub fn relative_gap(value: f64, bound: f64) -> f64 {
    if value == bound {
        return 0.0;
    }
    (value - bound).abs() / value.abs().max(1.0)
}

impl Solution {
    pub fn is_complete(&self) -> bool {
        self.status != SolveStatus::Incomplete
    }

    /// `key value` lines: sense, status, value, bound, gap, x, nodes, millis.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sense {}", self.sense);
        let status = match self.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Incomplete => "incomplete",
            SolveStatus::Heuristic => "heuristic",
        };
        let _ = writeln!(s, "status {status}");
        let _ = writeln!(s, "value {:.16e}", self.value);
        let _ = writeln!(s, "bound {:.16e}", self.bound);
        let _ = writeln!(s, "gap {:.6e}", self.gap);
        let xs: Vec<String> = self.x.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(s, "x {}", xs.join(" "));
        let _ = writeln!(s, "nodes {}", self.stats.nodes);
        let _ = writeln!(s, "lp_iterations {}", self.stats.lp_iterations);
        let _ = writeln!(s, "evaluations {}", self.stats.evaluations);
        let _ = writeln!(s, "millis {}", self.stats.wall_time.as_millis());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(5.0, 5.0), 0.0);
        assert_eq!(relative_gap(0.5, 0.25), 0.25);
        assert_eq!(relative_gap(-10.0, -11.0), 0.1);
    }

    #[test]
    fn text_output_has_fields() {
        let s = Solution {
            sense: Sense::Max,
            x: vec![1.0, 2.0],
            value: 3.0,
            bound: 3.0,
            gap: 0.0,
            status: SolveStatus::Optimal,
            stats: SolveStats::default(),
        };
        let t = s.to_text();
        for key in ["sense max", "value ", "bound ", "gap ", "x ", "nodes 0", "millis 0"] {
            assert!(t.contains(key), "{key} missing in {t}");
        }
        assert_eq!("max".parse::<Sense>().unwrap(), Sense::Max);
        assert!("up".parse::<Sense>().is_err());
    }
}

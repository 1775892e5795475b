use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const F4_C: [f64; 10] = [
    -0.6089, -17.164, -34.054, -5.914, -24.721, -14.986, -24.100, -10.708, -26.662, -22.179,
];

/// Analytic test functions with their boxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestFunction {
    F1,
    F2,
    F3,
    F4,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [
        TestFunction::F1,
        TestFunction::F2,
        TestFunction::F3,
        TestFunction::F4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::F1 => "f1",
            TestFunction::F2 => "f2",
            TestFunction::F3 => "f3",
            TestFunction::F4 => "f4",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            TestFunction::F1 | TestFunction::F2 => 2,
            TestFunction::F3 | TestFunction::F4 => 10,
        }
    }

    /// Symmetric half-width of the box on every variable.
    pub fn half_width(self) -> f64 {
        match self {
            TestFunction::F1 => 2.0,
            TestFunction::F2 => 20.0,
            TestFunction::F3 | TestFunction::F4 => 10.0,
        }
    }

    pub fn lower(self) -> Vec<f64> {
        vec![-self.half_width(); self.dim()]
    }

    pub fn upper(self) -> Vec<f64> {
        vec![self.half_width(); self.dim()]
    }

    pub fn eval(self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Input(format!(
                "{} takes {} variables, got {}",
                self.name(),
                self.dim(),
                x.len()
            )));
        }
        Ok(match self {
            TestFunction::F1 => eval_f1(x[0], x[1]),
            TestFunction::F2 => eval_f2(x[0], x[1]),
            TestFunction::F3 => eval_f3(x),
            TestFunction::F4 => eval_f4(x),
        })
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown test function `{s}` (expected f1..f4)")))
    }
}

pub fn eval_f1(x1: f64, x2: f64) -> f64 {
    3.0 * (1.0 - x1).powi(2) * (-x1 * x1 - (x2 + 1.0).powi(2)).exp()
        - 10.0 * (x1 / 5.0 - x1.powi(3) - x2.powi(5)) * (-x1 * x1 - x2 * x2).exp()
        - (-(x1 + 1.0).powi(2) - x2 * x2).exp() / 3.0
        + 2.0 * x1
}

pub fn eval_f2(x1: f64, x2: f64) -> f64 {
    (PI * x1 / 12.0).sin() * (PI * x2 / 16.0).cos()
}

pub fn eval_f3(x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[0] * x[1] - 14.0 * x[0] - 16.0 * x[1]
        + (x[2] - 10.0).powi(2)
        - 4.0 * (x[3] - 5.0).powi(2)
        + (x[4] - 3.0).powi(2)
        + 2.0 * (x[5] - 1.0).powi(2)
        + 5.0 * x[6] * x[6]
        + 7.0 * (x[7] - 11.0).powi(2)
        + 2.0 * (x[8] - 10.0).powi(2)
        + 2.0 * (x[9] - 7.0).powi(2)
        + 45.0
}

pub fn eval_f4(x: &[f64]) -> f64 {
    // log-sum-exp with the max factored out
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    x.iter()
        .zip(F4_C)
        .map(|(&xj, c)| xj.exp() * (c + xj - lse))
        .sum()
}

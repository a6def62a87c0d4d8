//! Queue-length weight functions.
//!
//! Each kind supplies `f(x)` (the base of the contention rate) and
//! `g(x) = ln f(x)` (the scheduling weight per packet). All kinds satisfy
//! `f(0) = 1`, are non-decreasing on `[0, inf)` and diverge as `x` grows.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WeightFunction {
    /// `f(x) = e^x`
    #[default]
    Exp,
    /// `f(x) = x + 1`
    LinearPlusOne,
    /// `f(x) = e^sqrt(x)`
    ExpSqrt,
    /// `f(x) = ln(x + e)`
    LogPlusE,
}

impl WeightFunction {
    pub const ALL: [WeightFunction; 4] = [
        WeightFunction::Exp,
        WeightFunction::LinearPlusOne,
        WeightFunction::ExpSqrt,
        WeightFunction::LogPlusE,
    ];

    /// Evaluates `f(x)`. May overflow to infinity for the exponential kinds;
    /// callers that need robustness should work with [`Self::g`].
    pub fn f(self, x: f64) -> f64 {
        match self {
            WeightFunction::Exp => x.exp(),
            WeightFunction::LinearPlusOne => x + 1.0,
            WeightFunction::ExpSqrt => x.sqrt().exp(),
            WeightFunction::LogPlusE => (x + std::f64::consts::E).ln(),
        }
    }

    /// Evaluates `g(x) = ln f(x)` without forming `f(x)`.
    pub fn g(self, x: f64) -> f64 {
        match self {
            WeightFunction::Exp => x,
            WeightFunction::LinearPlusOne => x.ln_1p(),
            WeightFunction::ExpSqrt => x.sqrt(),
            WeightFunction::LogPlusE => (x + std::f64::consts::E).ln().ln(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightFunction::Exp => "exp",
            WeightFunction::LinearPlusOne => "linear-plus-one",
            WeightFunction::ExpSqrt => "exp-sqrt",
            WeightFunction::LogPlusE => "log-plus-e",
        }
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WeightFunction::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown weight function `{s}` (expected exp, linear-plus-one, exp-sqrt or log-plus-e)")
            })
    }
}

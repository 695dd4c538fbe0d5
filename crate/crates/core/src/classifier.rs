//! Micro / meso / macro classification by the chance that at least one of
//! `N` constituents confirms.

use serde::Serialize;
use thiserror::Error;

use crate::amplitudes::{prob_cw, prob_no_cw, CouplingConstant};
use crate::count::Count;

pub const DEFAULT_EPS_MACRO: f64 = 1e-6;
pub const DEFAULT_DELTA_MICRO: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("thresholds must satisfy 0 < delta_micro < 1 - eps_macro < 1 (got eps_macro = {eps_macro}, delta_micro = {delta_micro})")]
    InvalidThresholds { eps_macro: f64, delta_micro: f64 },
    #[error("target probability {0} must lie in (0, 1)")]
    InvalidTarget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Scale {
    Micro,
    Meso,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Macro when `P(no CW) <= eps_macro`.
    pub eps_macro: f64,
    /// Micro when `P(CW) <= delta_micro`.
    pub delta_micro: f64,
}

impl Thresholds {
    pub fn new(eps_macro: f64, delta_micro: f64) -> Result<Self, ClassifyError> {
        let ok = eps_macro > 0.0 && delta_micro > 0.0 && delta_micro < 1.0 - eps_macro && 1.0 - eps_macro < 1.0;
        if ok {
            Ok(Thresholds { eps_macro, delta_micro })
        } else {
            Err(ClassifyError::InvalidThresholds { eps_macro, delta_micro })
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_macro: DEFAULT_EPS_MACRO, delta_micro: DEFAULT_DELTA_MICRO }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleClass {
    pub class: Scale,
    pub prob_cw: f64,
    pub prob_no_cw: f64,
    pub log10_prob_no_cw: f64,
}

pub fn classify(n: Count, alpha: CouplingConstant, thresholds: Thresholds) -> ScaleClass {
    let none = prob_no_cw(alpha, n);
    let some = prob_cw(alpha, n);
    let class = if none.prob <= thresholds.eps_macro {
        Scale::Macro
    } else if some <= thresholds.delta_micro {
        Scale::Micro
    } else {
        Scale::Meso
    };
    ScaleClass { class, prob_cw: some, prob_no_cw: none.prob, log10_prob_no_cw: none.log10_prob }
}

/// Smallest `n` with `P(CW) >= target`.
///
/// Starts from `ceil(ln(1 - target) / ln(1 - α))` and then settles the
/// boundary exactly, comparing `n ln(1 - α) <= ln(1 - target)` in log space.
pub fn threshold_count(alpha: CouplingConstant, target: f64) -> Result<u64, ClassifyError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(ClassifyError::InvalidTarget(target));
    }
    let per = alpha.ln_survival();
    if per == f64::NEG_INFINITY {
        return Ok(1);
    }
    let goal = (-target).ln_1p();
    let reaches = |n: u64| n as f64 * per <= goal;
    let mut n = (goal / per).ceil().max(0.0) as u64;
    while !reaches(n) {
        n += 1;
    }
    while n > 0 && reaches(n - 1) {
        n -= 1;
    }
    Ok(n)
}

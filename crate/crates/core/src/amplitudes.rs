//! First-order transition amplitudes and the confirmation-probability
//! algebra `(1 - α)^N`.
//!
//! The time integral in the amplitude is evaluated in closed form,
//! `∫_0^τ e^{iΔt} dt = τ e^{iΔτ/2} sinc(Δτ/2)`, which stays finite and
//! continuous through resonance. Probabilities over `N` constituents are
//! carried in log space so that `N = 10^23` yields an exact logarithm even
//! though the probability itself underflows.

use std::f64::consts::LN_10;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::count::Count;

/// The rounded coupling used throughout: `α ≈ .007`.
pub const DEFAULT_ALPHA: f64 = 0.007;

/// CODATA fine-structure constant, for runs that want the physical value.
pub const FINE_STRUCTURE: f64 = 1.0 / 137.035_999_084;

/// Below this `|Δτ|` the sinc factor switches to its Taylor series.
const SERIES_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplitudeError {
    #[error("coupling α = {0} must lie in (0, 1]")]
    InvalidAlpha(f64),
}

/// Per-constituent probability of confirmation in one tick.
///
/// Physical values lie strictly inside (0, 1); `α = 1` is also accepted as
/// the degenerate certain-response limit used by deterministic checks.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CouplingConstant(f64);

impl CouplingConstant {
    pub fn new(alpha: f64) -> Result<Self, AmplitudeError> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(CouplingConstant(alpha))
        } else {
            Err(AmplitudeError::InvalidAlpha(alpha))
        }
    }

    pub fn fine_structure() -> Self {
        CouplingConstant(FINE_STRUCTURE)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `ln(1 - α)`; `-∞` at `α = 1`.
    pub fn ln_survival(self) -> f64 {
        (-self.0).ln_1p()
    }
}

impl Default for CouplingConstant {
    fn default() -> Self {
        CouplingConstant(DEFAULT_ALPHA)
    }
}

impl TryFrom<f64> for CouplingConstant {
    type Error = AmplitudeError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        CouplingConstant::new(v)
    }
}

impl From<CouplingConstant> for f64 {
    fn from(c: CouplingConstant) -> f64 {
        c.0
    }
}

/// Selects the `∓ω` term: absorption subtracts the field quantum, emission
/// adds it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Absorption,
    Emission,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionParams {
    pub matrix_element: f64,
    pub e_initial: f64,
    pub e_final: f64,
    pub omega: f64,
    pub sign: Sign,
    pub tau: f64,
}

/// `Δ = E_final - E_initial ∓ ω`.
pub fn detuning(p: &TransitionParams) -> f64 {
    let base = p.e_final - p.e_initial;
    match p.sign {
        Sign::Absorption => base - p.omega,
        Sign::Emission => base + p.omega,
    }
}

/// `∫_0^τ e^{iΔt} dt` for a given detuning.
pub fn time_integral(detuning: f64, tau: f64) -> Complex64 {
    let half = 0.5 * detuning * tau;
    let sinc = if (detuning * tau).abs() < SERIES_CUTOFF {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    Complex64::from_polar(tau * sinc, half)
}

/// `c_m(τ) = -i M ∫_0^τ e^{iΔt} dt`.
pub fn transition_amplitude(p: &TransitionParams) -> Complex64 {
    amplitude_at(p.matrix_element, detuning(p), p.tau)
}

/// Amplitude from a detuning supplied directly.
pub fn amplitude_at(matrix_element: f64, detuning: f64, tau: f64) -> Complex64 {
    Complex64::new(0.0, -1.0) * matrix_element * time_integral(detuning, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionProbability {
    /// `min(|c_m|², 1)`.
    pub probability: f64,
    pub unclamped: f64,
    /// Set when `|c_m|²` exceeded 1 and first-order theory no longer applies.
    pub breakdown: bool,
}

pub fn transition_probability(p: &TransitionParams) -> TransitionProbability {
    clamp_probability(transition_amplitude(p).norm_sqr())
}

pub(crate) fn clamp_probability(raw: f64) -> TransitionProbability {
    TransitionProbability { probability: raw.min(1.0), unclamped: raw, breakdown: raw > 1.0 }
}

/// Probability that none of `n` constituents confirms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoConfirmation {
    /// `(1 - α)^n`; may underflow to 0.
    pub prob: f64,
    /// `n log10(1 - α)`, finite whenever `α < 1`.
    pub log10_prob: f64,
}

fn ln_prob_no_cw(alpha: CouplingConstant, n: Count) -> f64 {
    if n.get() == 0 {
        0.0
    } else {
        n.as_f64() * alpha.ln_survival()
    }
}

pub fn prob_no_cw(alpha: CouplingConstant, n: Count) -> NoConfirmation {
    let ln_p = ln_prob_no_cw(alpha, n);
    let prob = if n.get() == 1 { 1.0 - alpha.value() } else { ln_p.exp() };
    NoConfirmation { prob, log10_prob: ln_p / LN_10 }
}

/// `1 - (1 - α)^n`, via `expm1` so small probabilities keep their digits.
pub fn prob_cw(alpha: CouplingConstant, n: Count) -> f64 {
    match n.get() {
        0 => 0.0,
        1 => alpha.value(),
        _ => -ln_prob_no_cw(alpha, n).exp_m1(),
    }
}

//! Source-type rules for what can carry an offer, and the library of
//! contingent-absorber scenarios.
//!
//! Only a massless boson qualifies as a long-range offer. A bound state's
//! centre-of-mass motion is not an offer at all, a fermion never closes a
//! transaction without a boson mediating it, and a massive boson reaches at
//! most its Compton range `1/m`.

use num_complex::Complex64;
use serde::Serialize;

use crate::amplitudes::CouplingConstant;
use crate::count::Count;
use crate::engine::{Scenario, Simulation};
use crate::substratum::{
    eligible_absorbers, mk_offer_wave, BoundStateSpec, Channel, ChannelId, DetectorSpec, EmitterState,
    SubstratumError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GateRule {
    NotAnOfferWave,
    FermionUnmediated,
    ShortRange,
    NoAbsorbers,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{rule:?}: {message}")]
pub struct GateRejection {
    pub rule: GateRule,
    pub message: String,
}

impl GateRejection {
    fn new(rule: GateRule, message: impl Into<String>) -> Self {
        GateRejection { rule, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SourceKind {
    MasslessBoson,
    MassiveBoson { mass: f64 },
    FermionDirect { mass: f64 },
    BoundStateMotion { mass: f64 },
}

impl SourceKind {
    pub fn mass(self) -> f64 {
        match self {
            SourceKind::MasslessBoson => 0.0,
            SourceKind::MassiveBoson { mass }
            | SourceKind::FermionDirect { mass }
            | SourceKind::BoundStateMotion { mass } => mass,
        }
    }

    /// Reach of the field, `None` when unbounded.
    pub fn range(self) -> Option<f64> {
        match self {
            SourceKind::MassiveBoson { mass } if mass > 0.0 => Some(mass.recip()),
            _ => None,
        }
    }
}

pub fn validate_source(kind: SourceKind, intended_range: f64) -> Result<(), GateRejection> {
    match kind {
        SourceKind::MasslessBoson => Ok(()),
        SourceKind::BoundStateMotion { .. } => Err(GateRejection::new(
            GateRule::NotAnOfferWave,
            "a slow-moving quantum is a bound state, not an offer wave",
        )),
        SourceKind::FermionDirect { .. } => Err(GateRejection::new(
            GateRule::FermionUnmediated,
            "fermions transact only through boson mediation; there is no fermion offer/confirmation pair",
        )),
        SourceKind::MassiveBoson { mass } => match kind.range() {
            Some(reach) if intended_range > reach => Err(GateRejection::new(
                GateRule::ShortRange,
                format!("massive boson (m = {mass}) reaches at most 1/m = {reach}, asked for {intended_range}"),
            )),
            _ => Ok(()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaudlinVariant {
    /// Slow massive quantum, detector A at x on the right, movable B at 2x.
    AsProposed,
    /// The same geometry with a photon and a background absorber C.
    PhotonAnalog,
}

/// Knobs for the photon version of the contingent-absorber experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonAnalogConfig {
    /// `|a_L|²`; the right channel gets the rest.
    pub left_weight: f64,
    /// Whether background absorber C sits on the left.
    pub background: bool,
    /// Tick from which B has been swung to the left, if at all.
    pub swing_b_at: Option<u64>,
    /// Constituents in each macroscopic detector.
    pub detector_size: Count,
}

impl Default for PhotonAnalogConfig {
    fn default() -> Self {
        PhotonAnalogConfig {
            left_weight: 0.5,
            background: true,
            swing_b_at: Some(2),
            detector_size: Count(10u128.pow(23)),
        }
    }
}

/// Distance of detector A in the as-proposed setup, in units of the
/// source's Compton length.
const MAUDLIN_X: f64 = 1.0;

pub fn maudlin_scenario(variant: MaudlinVariant) -> Result<Scenario, GateRejection> {
    match variant {
        MaudlinVariant::AsProposed => {
            validate_source(SourceKind::BoundStateMotion { mass: 1.0 }, 2.0 * MAUDLIN_X)?;
            unreachable!("bound-state motion never validates as an offer")
        }
        MaudlinVariant::PhotonAnalog => Ok(photon_analog(PhotonAnalogConfig::default())),
    }
}

/// Photon emitter with channels L/R. A is a macroscopic detector on R, C a
/// background detector on L, and B joins L at `swing_b_at`.
pub fn photon_analog(config: PhotonAnalogConfig) -> Scenario {
    let source = SourceKind::MasslessBoson;
    validate_source(source, 2.0 * MAUDLIN_X).expect("photons are valid offers at any range");
    let gap = 1.0;
    let emitter = EmitterState::new("E", BoundStateSpec::two_level(gap, 0.1).expect("valid spec"), 1)
        .expect("valid level");
    let left = config.left_weight.sqrt();
    let right = (1.0 - config.left_weight).sqrt();
    let channels = vec![
        Channel::new("L", "left", Complex64::new(left, 0.0)),
        Channel::new("R", "right", Complex64::new(right, 0.0)),
    ];
    let detector = |id: &str, channel: &str, active_from: u64| DetectorSpec {
        id: id.to_string(),
        channel: ChannelId::new(channel),
        n: config.detector_size,
        gap,
        active_from,
    };
    let mut detectors = vec![detector("A", "R", 0)];
    if let Some(t) = config.swing_b_at {
        detectors.push(detector("B", "L", t));
    }
    if config.background {
        detectors.push(detector("C", "L", 0));
    }
    let mut s = Scenario::new(vec![emitter], vec![], detectors, channels).with_alpha(CouplingConstant::default());
    s.max_ticks = 1_000;
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelAudit {
    pub emitter: String,
    pub transition: (usize, usize),
    pub channel: ChannelId,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AuditReport {
    pub channels: Vec<ChannelAudit>,
    /// Excited emitters with no transition that any absorber could take up.
    pub unable_to_emit: Vec<String>,
    /// Components found in a constructed offer without absorber support;
    /// always expected empty.
    pub unsupported_components: Vec<ChannelAudit>,
}

impl AuditReport {
    pub fn pruned(&self) -> impl Iterator<Item = &ChannelAudit> {
        self.channels.iter().filter(|c| !c.retained)
    }

    pub fn rejection(&self) -> Option<GateRejection> {
        (!self.unable_to_emit.is_empty()).then(|| {
            GateRejection::new(
                GateRule::NoAbsorbers,
                format!("nothing is emitted without absorbers: {}", self.unable_to_emit.join(", ")),
            )
        })
    }
}

/// Checks, at the scenario's first tick, which offer components would
/// survive construction for every excited emitter and transition.
pub fn light_tight_audit(scenario: &Scenario) -> Result<AuditReport, crate::engine::EngineError> {
    let sim = Simulation::new(scenario)?;
    let registry = sim.active_sites(1);
    let tol = sim.energy_tol();
    let mut report = AuditReport::default();
    for emitter in sim.emitters().iter().filter(|e| e.is_excited()) {
        let mut emits = false;
        for (to, _) in emitter.spec.downward_from(emitter.current_level) {
            let transition = (emitter.current_level, to);
            let offer = match mk_offer_wave(emitter, transition, sim.channels(), &registry, tol) {
                Ok(ow) => Some(ow),
                Err(SubstratumError::NoAbsorbers { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            emits |= offer.is_some();
            for c in sim.channels() {
                let retained = offer.as_ref().is_some_and(|ow| ow.component(&c.id).is_some());
                report.channels.push(ChannelAudit {
                    emitter: emitter.id.clone(),
                    transition,
                    channel: c.id.clone(),
                    retained,
                });
            }
            if let Some(ow) = &offer {
                let elig = eligible_absorbers(ow, &registry, tol);
                for g in elig.groups.iter().filter(|g| g.members.is_empty()) {
                    report.unsupported_components.push(ChannelAudit {
                        emitter: emitter.id.clone(),
                        transition,
                        channel: g.channel.clone(),
                        retained: true,
                    });
                }
            }
        }
        if !emits {
            report.unable_to_emit.push(emitter.id.clone());
        }
    }
    Ok(report)
}

//! Emitters, absorbers, detectors and the offer/confirmation wave records
//! exchanged between them.
//!
//! All energies are in natural units (ħ = c = 1), so an emitted frequency is
//! the bare level gap `E_from - E_to`. Spatial structure is reduced to a
//! finite list of channels, each carrying one complex amplitude.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::count::Count;

/// Default relative tolerance for matching an absorber gap to an offered ω.
pub const DEFAULT_ENERGY_TOL: f64 = 1e-9;

/// Tolerance on `Σ|a_k|² = 1` after normalization.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubstratumError {
    #[error("bound-state spec has no levels")]
    NoLevels,
    #[error("level energies must be strictly increasing (level {index} is not above level {})", index - 1)]
    NonIncreasingLevels { index: usize },
    #[error("level {level} does not exist")]
    UnknownLevel { level: usize },
    #[error("transition ({level}, {level}) is a self-pair")]
    SelfTransition { level: usize },
    #[error("matrix element for ({from}, {to}) must be positive and finite, got {value}")]
    BadMatrixElement { from: usize, to: usize, value: f64 },
    #[error("energy {value} at level {index} is not finite")]
    NonFiniteEnergy { index: usize, value: f64 },
    #[error("transition {from}->{to} is forbidden for emitter {emitter}")]
    ForbiddenTransition { emitter: String, from: usize, to: usize },
    #[error("emitter {emitter} is in its ground state and cannot emit")]
    GroundStateEmitter { emitter: String },
    #[error("no channel of emitter {emitter}'s offer has an eligible absorber")]
    NoAbsorbers { emitter: String },
    #[error("no channels supplied for emitter {emitter}'s offer")]
    NoChannels { emitter: String },
    #[error("absorber {absorber} sits on channel {channel}, which is not a component of the offer")]
    ChannelMismatch { absorber: String, channel: ChannelId },
    #[error("absorber {absorber} has no allowed transition matching ω = {omega}")]
    EnergyMismatch { absorber: String, omega: f64 },
}

/// Identifier of a spatial mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelId(pub String);

impl ChannelId {
    pub fn new(id: impl Into<String>) -> Self {
        ChannelId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub index: usize,
    pub energy: f64,
}

/// Energy ladder of a bound system plus its allowed transitions.
///
/// Transitions are stored as supplied, but lookups are symmetric: listing
/// `(1, 0)` allows both the 1→0 emission and the 0→1 absorption, since
/// `|⟨m|H|l⟩| = |⟨l|H|m⟩|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateSpec {
    levels: Vec<EnergyLevel>,
    transitions: BTreeMap<(usize, usize), f64>,
}

impl BoundStateSpec {
    pub fn new(
        energies: &[f64],
        transitions: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self, SubstratumError> {
        if energies.is_empty() {
            return Err(SubstratumError::NoLevels);
        }
        for (index, &value) in energies.iter().enumerate() {
            if !value.is_finite() {
                return Err(SubstratumError::NonFiniteEnergy { index, value });
            }
            if index > 0 && value <= energies[index - 1] {
                return Err(SubstratumError::NonIncreasingLevels { index });
            }
        }
        let mut map = BTreeMap::new();
        for ((from, to), value) in transitions {
            for level in [from, to] {
                if level >= energies.len() {
                    return Err(SubstratumError::UnknownLevel { level });
                }
            }
            if from == to {
                return Err(SubstratumError::SelfTransition { level: from });
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(SubstratumError::BadMatrixElement { from, to, value });
            }
            map.insert((from, to), value);
        }
        let levels = energies
            .iter()
            .enumerate()
            .map(|(index, &energy)| EnergyLevel { index, energy })
            .collect();
        Ok(BoundStateSpec { levels, transitions: map })
    }

    /// Ground state at 0 and one excited level at `gap`.
    pub fn two_level(gap: f64, matrix_element: f64) -> Result<Self, SubstratumError> {
        Self::new(&[0.0, gap], [((1, 0), matrix_element)])
    }

    /// Evenly spaced ladder with nearest-neighbour transitions only.
    pub fn ladder(levels: usize, spacing: f64, matrix_element: f64) -> Result<Self, SubstratumError> {
        let energies: Vec<f64> = (0..levels).map(|i| i as f64 * spacing).collect();
        Self::new(&energies, (1..levels).map(|i| ((i, i - 1), matrix_element)))
    }

    pub fn levels(&self) -> &[EnergyLevel] {
        &self.levels
    }

    pub fn energy(&self, level: usize) -> Option<f64> {
        self.levels.get(level).map(|l| l.energy)
    }

    /// Transitions exactly as supplied: `(from, to, |⟨to|H|from⟩|)`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.transitions.iter().map(|(&(a, b), &m)| (a, b, m))
    }

    pub fn matrix_element(&self, a: usize, b: usize) -> Option<f64> {
        self.transitions
            .get(&(a, b))
            .or_else(|| self.transitions.get(&(b, a)))
            .copied()
    }

    pub fn is_allowed(&self, a: usize, b: usize) -> bool {
        self.matrix_element(a, b).is_some()
    }

    fn neighbours(&self, level: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.transitions.iter().filter_map(move |(&(a, b), &m)| {
            if a == level {
                Some((b, m))
            } else if b == level {
                Some((a, m))
            } else {
                None
            }
        })
    }

    /// Allowed downward targets from `level`, ascending by target index.
    pub fn downward_from(&self, level: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<_> = self.neighbours(level).filter(|&(t, _)| t < level).collect();
        out.sort_by_key(|&(t, _)| t);
        out.dedup_by_key(|&mut (t, _)| t);
        out
    }

    /// Allowed upward targets from `level`, ascending by target index.
    pub fn upward_from(&self, level: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<_> = self.neighbours(level).filter(|&(t, _)| t > level).collect();
        out.sort_by_key(|&(t, _)| t);
        out.dedup_by_key(|&mut (t, _)| t);
        out
    }

    /// Upward transition from `level` whose gap best matches `omega`, if any
    /// lies within `|gap - ω| <= tol * ω`.
    pub fn absorbing_target(&self, level: usize, omega: f64, tol: f64) -> Option<(usize, f64)> {
        let base = self.energy(level)?;
        self.upward_from(level)
            .into_iter()
            .map(|(to, _)| (to, self.levels[to].energy - base))
            .filter(|&(_, gap)| (gap - omega).abs() <= tol * omega)
            .min_by(|a, b| (a.1 - omega).abs().total_cmp(&(b.1 - omega).abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitterState {
    pub id: String,
    pub spec: BoundStateSpec,
    pub current_level: usize,
}

impl EmitterState {
    pub fn new(id: impl Into<String>, spec: BoundStateSpec, current_level: usize) -> Result<Self, SubstratumError> {
        if current_level >= spec.levels().len() {
            return Err(SubstratumError::UnknownLevel { level: current_level });
        }
        Ok(EmitterState { id: id.into(), spec, current_level })
    }

    pub fn is_excited(&self) -> bool {
        self.current_level > 0
    }

    pub fn energy(&self) -> f64 {
        self.spec.levels()[self.current_level].energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorberState {
    pub id: String,
    pub spec: BoundStateSpec,
    pub current_level: usize,
    pub channel: ChannelId,
    /// First tick at which this absorber is present on its channel.
    pub active_from: u64,
}

impl AbsorberState {
    pub fn new(
        id: impl Into<String>,
        spec: BoundStateSpec,
        current_level: usize,
        channel: ChannelId,
    ) -> Result<Self, SubstratumError> {
        if current_level >= spec.levels().len() {
            return Err(SubstratumError::UnknownLevel { level: current_level });
        }
        Ok(AbsorberState { id: id.into(), spec, current_level, channel, active_from: 0 })
    }

    pub fn with_active_from(mut self, tick: u64) -> Self {
        self.active_from = tick;
        self
    }

    pub fn energy(&self) -> f64 {
        self.spec.levels()[self.current_level].energy
    }

    pub fn can_absorb(&self, omega: f64, tol: f64) -> bool {
        self.spec.absorbing_target(self.current_level, omega, tol).is_some()
    }
}

/// A conglomerate of `n` identical two-level micro-absorbers sharing one
/// channel. Constituents are not materialized; only the number already
/// excited is tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub id: String,
    pub channel: ChannelId,
    pub n: Count,
    pub gap: f64,
    pub active_from: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    pub spec: DetectorSpec,
    pub excited: u128,
}

impl DetectorState {
    pub fn new(spec: DetectorSpec) -> Self {
        DetectorState { spec, excited: 0 }
    }

    pub fn ground_constituents(&self) -> u128 {
        self.spec.n.get() - self.excited
    }

    /// Total energy stored in excited constituents.
    pub fn energy(&self) -> f64 {
        self.excited as f64 * self.spec.gap
    }
}

/// Anything an offer component can land on.
pub trait Receiver {
    fn receiver_id(&self) -> &str;
    fn channel(&self) -> &ChannelId;
    /// How many constituents could absorb a quantum of `omega` right now.
    fn eligible_constituents(&self, omega: f64, tol: f64) -> u128;
}

impl Receiver for AbsorberState {
    fn receiver_id(&self) -> &str {
        &self.id
    }

    fn channel(&self) -> &ChannelId {
        &self.channel
    }

    fn eligible_constituents(&self, omega: f64, tol: f64) -> u128 {
        u128::from(self.can_absorb(omega, tol))
    }
}

impl Receiver for DetectorState {
    fn receiver_id(&self) -> &str {
        &self.spec.id
    }

    fn channel(&self) -> &ChannelId {
        &self.spec.channel
    }

    fn eligible_constituents(&self, omega: f64, tol: f64) -> u128 {
        if (self.spec.gap - omega).abs() <= tol * omega {
            self.ground_constituents()
        } else {
            0
        }
    }
}

impl<R: Receiver + ?Sized> Receiver for &R {
    fn receiver_id(&self) -> &str {
        (**self).receiver_id()
    }

    fn channel(&self) -> &ChannelId {
        (**self).channel()
    }

    fn eligible_constituents(&self, omega: f64, tol: f64) -> u128 {
        (**self).eligible_constituents(omega, tol)
    }
}

/// One spatial component of an offer wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub id: ChannelId,
    pub label: String,
    pub amplitude: Complex64,
}

impl Channel {
    pub fn new(id: impl Into<String>, label: impl Into<String>, amplitude: Complex64) -> Self {
        Channel { id: ChannelId(id.into()), label: label.into(), amplitude }
    }

    pub fn weight(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Scales amplitudes to unit total weight. Already-normalized inputs are
/// returned untouched so that normalization is idempotent bit for bit.
/// Returns `None` when every amplitude is zero.
pub fn normalize_channels(channels: &mut [Channel]) -> Option<()> {
    let total: f64 = channels.iter().map(Channel::weight).sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    if (total - 1.0).abs() > 4.0 * f64::EPSILON {
        let scale = total.sqrt().recip();
        for c in channels.iter_mut() {
            c.amplitude *= scale;
        }
    }
    Some(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfferWave {
    pub emitter: String,
    pub transition: (usize, usize),
    pub omega: f64,
    pub components: Vec<Channel>,
}

impl OfferWave {
    pub fn component(&self, channel: &ChannelId) -> Option<&Channel> {
        self.components.iter().find(|c| &c.id == channel)
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(Channel::weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfirmationWave {
    pub absorber: String,
    pub channel: ChannelId,
    pub response_amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transaction {
    pub tick: u64,
    pub emitter: String,
    pub winner: String,
    pub channel: ChannelId,
    pub transition: (usize, usize),
    pub omega: f64,
    pub emission_event: u64,
    pub absorption_event: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullMeasurement {
    pub tick: u64,
    pub absorber: String,
    pub channel: ChannelId,
}

/// Builds the offer an excited emitter sends along `transition`.
///
/// Channels that host no absorber able to take up ω, and channels with zero
/// amplitude, carry no component at all; what survives is renormalized.
pub fn mk_offer_wave<R: Receiver>(
    emitter: &EmitterState,
    transition: (usize, usize),
    raw_channels: &[Channel],
    registry: &[R],
    energy_tol: f64,
) -> Result<OfferWave, SubstratumError> {
    if !emitter.is_excited() {
        return Err(SubstratumError::GroundStateEmitter { emitter: emitter.id.clone() });
    }
    let (from, to) = transition;
    let forbidden = || SubstratumError::ForbiddenTransition { emitter: emitter.id.clone(), from, to };
    if from != emitter.current_level || to >= from || !emitter.spec.is_allowed(from, to) {
        return Err(forbidden());
    }
    if raw_channels.is_empty() {
        return Err(SubstratumError::NoChannels { emitter: emitter.id.clone() });
    }
    let levels = emitter.spec.levels();
    let omega = levels[from].energy - levels[to].energy;
    let mut components: Vec<Channel> = raw_channels
        .iter()
        .filter(|c| c.weight() > 0.0)
        .filter(|c| {
            registry
                .iter()
                .any(|r| r.channel() == &c.id && r.eligible_constituents(omega, energy_tol) > 0)
        })
        .cloned()
        .collect();
    if normalize_channels(&mut components).is_none() || components.is_empty() {
        return Err(SubstratumError::NoAbsorbers { emitter: emitter.id.clone() });
    }
    Ok(OfferWave { emitter: emitter.id.clone(), transition, omega, components })
}

/// The advanced response of `absorber` to the offer component on its channel.
pub fn conjugate_response<R: Receiver>(
    ow: &OfferWave,
    absorber: &R,
    energy_tol: f64,
) -> Result<ConfirmationWave, SubstratumError> {
    let component = ow.component(absorber.channel()).ok_or_else(|| SubstratumError::ChannelMismatch {
        absorber: absorber.receiver_id().to_string(),
        channel: absorber.channel().clone(),
    })?;
    if absorber.eligible_constituents(ow.omega, energy_tol) == 0 {
        return Err(SubstratumError::EnergyMismatch {
            absorber: absorber.receiver_id().to_string(),
            omega: ow.omega,
        });
    }
    Ok(ConfirmationWave {
        absorber: absorber.receiver_id().to_string(),
        channel: component.id.clone(),
        response_amplitude: component.amplitude.conj(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EligibleMember {
    /// Position of the receiver in the registry slice that was scanned.
    pub registry_index: usize,
    pub id: String,
    pub constituents: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGroup {
    pub channel: ChannelId,
    /// `|a_k|²` of the offer component on this channel.
    pub weight: f64,
    pub members: Vec<EligibleMember>,
}

/// Eligible receivers grouped by offer component, in component order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Eligibility {
    pub groups: Vec<ChannelGroup>,
}

impl Eligibility {
    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(|g| g.members.is_empty())
    }

    pub fn members(&self) -> impl Iterator<Item = (&ChannelGroup, &EligibleMember)> {
        self.groups.iter().flat_map(|g| g.members.iter().map(move |m| (g, m)))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.members().map(|(_, m)| m.id.as_str()).collect()
    }
}

/// Receivers on the offer's support that can absorb ω within
/// `|gap - ω| <= energy_tol * ω`.
pub fn eligible_absorbers<R: Receiver>(ow: &OfferWave, registry: &[R], energy_tol: f64) -> Eligibility {
    assert!(energy_tol >= 0.0, "energy tolerance must be nonnegative");
    let groups = ow
        .components
        .iter()
        .map(|c| ChannelGroup {
            channel: c.id.clone(),
            weight: c.weight(),
            members: registry
                .iter()
                .enumerate()
                .filter(|(_, r)| r.channel() == &c.id)
                .filter_map(|(registry_index, r)| {
                    let constituents = r.eligible_constituents(ow.omega, energy_tol);
                    (constituents > 0).then(|| EligibleMember {
                        registry_index,
                        id: r.receiver_id().to_string(),
                        constituents,
                    })
                })
                .collect(),
        })
        .collect();
    Eligibility { groups }
}

//! The measurement-transition state machine.
//!
//! One tick, per excited emitter (in id order):
//!
//! ```text
//! offer   = mk_offer_wave(emitter, transition, channels, active receivers)
//! elig    = eligible_absorbers(offer)
//! resp    = cw_trials(elig, α)            -- independent Bernoulli(α) each
//! if resp nonempty:
//!     winner = collapse(offer, elig)      -- channel by |a_k|², then uniform
//!     actualize(offer, winner)            -- levels move, causet grows
//!     nulls  = resp \ {winner}
//! ```
//!
//! The gate (`resp` nonempty) decides *whether* the transition happens; the
//! winner is drawn over every eligible constituent, not only the ones that
//! responded, which is what keeps detection frequencies at `|a_k|²`.
//!
//! Ensembles derive one ChaCha stream per run from `(seed, run index)` and
//! aggregate in run order, so statistics are identical for any thread count.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::amplitudes::{amplitude_at, clamp_probability, prob_cw, CouplingConstant};
use crate::causet::{CausalSet, CausetError};
use crate::count::Count;
use crate::substratum::{
    conjugate_response, eligible_absorbers, mk_offer_wave, AbsorberState, Channel, ChannelId, ConfirmationWave,
    DetectorSpec, DetectorState, EligibleMember, Eligibility, EmitterState, NullMeasurement, OfferWave, Receiver,
    SubstratumError, Transaction, DEFAULT_ENERGY_TOL, NORM_TOL,
};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_MAX_TICKS: u64 = 10_000;

/// Receivers with more eligible constituents than this are gated with a
/// single `Bernoulli(1 - (1-α)^n)` draw instead of `n` separate trials.
pub const DEFAULT_ANALYTIC_THRESHOLD: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario has no emitters")]
    NoEmitters,
    #[error("scenario has no channels")]
    NoChannels,
    #[error("max_ticks must be at least 1")]
    ZeroMaxTicks,
    #[error("energy tolerance {0} must be finite and nonnegative")]
    BadEnergyTol(f64),
    #[error("channel id {0} is used twice")]
    DuplicateChannel(ChannelId),
    #[error("channel amplitudes sum to {0} in probability, expected 1")]
    Unnormalized(f64),
    #[error("system id {0} is used twice")]
    DuplicateSystem(String),
    #[error("{system} refers to unknown channel {channel}")]
    UnknownChannel { system: String, channel: ChannelId },
    #[error("detector {detector} gap {gap} must be positive and finite")]
    BadDetectorGap { detector: String, gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Substratum(#[from] SubstratumError),
    #[error(transparent)]
    Causet(#[from] CausetError),
    #[error("no system with id {0}")]
    UnknownSystem(String),
    #[error("collapse found no eligible absorber")]
    NoEligible,
    #[error("ensemble needs at least one run")]
    NoRuns,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// How the winner is weighted inside the chosen channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WinnerWeighting {
    /// Every eligible constituent equally likely.
    #[default]
    Uniform,
    /// Each constituent additionally weighted by its first-order
    /// `|c_m(τ)|²` for the offered ω.
    TransitionProbability { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub analytic_threshold: u128,
    pub weighting: WinnerWeighting,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { analytic_threshold: DEFAULT_ANALYTIC_THRESHOLD, weighting: WinnerWeighting::Uniform }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub emitters: Vec<EmitterState>,
    pub absorbers: Vec<AbsorberState>,
    pub detectors: Vec<DetectorSpec>,
    pub channels: Vec<Channel>,
    pub alpha: CouplingConstant,
    pub energy_tol: f64,
    pub max_ticks: u64,
    pub seed: u64,
    pub options: EngineOptions,
}

impl Scenario {
    pub fn new(
        emitters: Vec<EmitterState>,
        absorbers: Vec<AbsorberState>,
        detectors: Vec<DetectorSpec>,
        channels: Vec<Channel>,
    ) -> Self {
        Scenario {
            emitters,
            absorbers,
            detectors,
            channels,
            alpha: CouplingConstant::default(),
            energy_tol: DEFAULT_ENERGY_TOL,
            max_ticks: DEFAULT_MAX_TICKS,
            seed: DEFAULT_SEED,
            options: EngineOptions::default(),
        }
    }

    pub fn with_alpha(mut self, alpha: CouplingConstant) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_max_ticks(mut self, max_ticks: u64) -> Self {
        self.max_ticks = max_ticks;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.emitters.is_empty() {
            return Err(ScenarioError::NoEmitters);
        }
        if self.channels.is_empty() {
            return Err(ScenarioError::NoChannels);
        }
        if self.max_ticks == 0 {
            return Err(ScenarioError::ZeroMaxTicks);
        }
        if !(self.energy_tol.is_finite() && self.energy_tol >= 0.0) {
            return Err(ScenarioError::BadEnergyTol(self.energy_tol));
        }
        let mut channel_ids = std::collections::BTreeSet::new();
        for c in &self.channels {
            if !channel_ids.insert(&c.id) {
                return Err(ScenarioError::DuplicateChannel(c.id.clone()));
            }
        }
        let total: f64 = self.channels.iter().map(Channel::weight).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(ScenarioError::Unnormalized(total));
        }
        let mut systems = std::collections::BTreeSet::new();
        let ids = self
            .emitters
            .iter()
            .map(|e| &e.id)
            .chain(self.absorbers.iter().map(|a| &a.id))
            .chain(self.detectors.iter().map(|d| &d.id));
        for id in ids {
            if !systems.insert(id) {
                return Err(ScenarioError::DuplicateSystem(id.clone()));
            }
        }
        let placed = self
            .absorbers
            .iter()
            .map(|a| (&a.id, &a.channel))
            .chain(self.detectors.iter().map(|d| (&d.id, &d.channel)));
        for (system, channel) in placed {
            if !channel_ids.contains(channel) {
                return Err(ScenarioError::UnknownChannel { system: system.clone(), channel: channel.clone() });
            }
        }
        for d in &self.detectors {
            if !(d.gap.is_finite() && d.gap > 0.0) {
                return Err(ScenarioError::BadDetectorGap { detector: d.id.clone(), gap: d.gap });
            }
        }
        Ok(())
    }
}

/// A receiver as it lives inside a running simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Site {
    Absorber(AbsorberState),
    Detector(DetectorState),
}

impl Site {
    pub fn active_from(&self) -> u64 {
        match self {
            Site::Absorber(a) => a.active_from,
            Site::Detector(d) => d.spec.active_from,
        }
    }

    pub fn energy(&self) -> f64 {
        match self {
            Site::Absorber(a) => a.energy(),
            Site::Detector(d) => d.energy(),
        }
    }

    /// Relative weight of this site's constituents in a collapse under
    /// `weighting`, for a quantum of `omega`.
    fn collapse_weight(&self, constituents: u128, omega: f64, tol: f64, weighting: WinnerWeighting) -> f64 {
        let count = constituents as f64;
        match weighting {
            WinnerWeighting::Uniform => count,
            WinnerWeighting::TransitionProbability { tau } => {
                let (m, gap) = match self {
                    Site::Absorber(a) => match a.spec.absorbing_target(a.current_level, omega, tol) {
                        Some((to, gap)) => (a.spec.matrix_element(a.current_level, to).unwrap_or(0.0), gap),
                        None => return 0.0,
                    },
                    Site::Detector(d) => (1.0, d.spec.gap),
                };
                count * clamp_probability(amplitude_at(m, gap - omega, tau).norm_sqr()).probability
            }
        }
    }
}

impl Receiver for Site {
    fn receiver_id(&self) -> &str {
        match self {
            Site::Absorber(a) => a.receiver_id(),
            Site::Detector(d) => d.receiver_id(),
        }
    }

    fn channel(&self) -> &ChannelId {
        match self {
            Site::Absorber(a) => a.channel(),
            Site::Detector(d) => d.channel(),
        }
    }

    fn eligible_constituents(&self, omega: f64, tol: f64) -> u128 {
        match self {
            Site::Absorber(a) => a.eligible_constituents(omega, tol),
            Site::Detector(d) => d.eligible_constituents(omega, tol),
        }
    }
}

/// An eligible receiver that produced at least one confirmation this tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Responder {
    pub registry_index: usize,
    pub id: String,
    pub channel: ChannelId,
}

/// Independent confirmation trials. A receiver with `n` eligible
/// constituents responds if any of its constituents does; above
/// `analytic_threshold` that is drawn once with probability `1 - (1-α)^n`.
pub fn cw_trials<R: Rng + ?Sized>(
    eligible: &Eligibility,
    alpha: CouplingConstant,
    analytic_threshold: u128,
    rng: &mut R,
) -> Vec<Responder> {
    let a = alpha.value();
    eligible
        .members()
        .filter(|(_, m)| {
            let n = m.constituents;
            if n == 1 {
                rng.random_bool(a)
            } else if n > analytic_threshold {
                rng.random_bool(prob_cw(alpha, Count(n)))
            } else {
                (0..n).any(|_| rng.random_bool(a))
            }
        })
        .map(|(g, m)| Responder { registry_index: m.registry_index, id: m.id.clone(), channel: g.channel.clone() })
        .collect()
}

/// Picks the receiver that absorbs the quantum: a channel with probability
/// `|a_k|²` (renormalized over channels that have eligible weight), then a
/// member with probability proportional to `member_weight`.
pub fn collapse<R: Rng + ?Sized>(
    eligible: &Eligibility,
    member_weight: impl Fn(&EligibleMember) -> f64,
    rng: &mut R,
) -> Result<EligibleMember, EngineError> {
    let groups: Vec<(f64, Vec<f64>)> = eligible
        .groups
        .iter()
        .map(|g| (g.weight, g.members.iter().map(&member_weight).collect()))
        .collect();
    let channel_weights: Vec<f64> = groups
        .iter()
        .map(|(w, members)| if members.iter().any(|&x| x > 0.0) { *w } else { 0.0 })
        .collect();
    let channel = WeightedIndex::new(&channel_weights).map_err(|_| EngineError::NoEligible)?.sample(rng);
    let member = WeightedIndex::new(&groups[channel].1).map_err(|_| EngineError::NoEligible)?.sample(rng);
    Ok(eligible.groups[channel].members[member].clone())
}

/// Everything that happened for one emitter in one tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickOutcome {
    pub tick: u64,
    pub emitter: String,
    pub offer: OfferWave,
    pub cw_set: Vec<ConfirmationWave>,
    pub transaction: Option<Transaction>,
    pub nulls: Vec<NullMeasurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickReport {
    pub tick: u64,
    pub outcomes: Vec<TickOutcome>,
    /// Excited emitters that could not send any offer this tick.
    pub blocked: Vec<String>,
    pub excited: usize,
}

impl TickReport {
    pub fn transactions(&self) -> impl Iterator<Item = &Transaction> {
        self.outcomes.iter().filter_map(|o| o.transaction.as_ref())
    }
}

/// Mutable state of one trajectory.
#[derive(Debug, Clone)]
pub struct Simulation {
    emitters: Vec<EmitterState>,
    // shared between clones until a run mutates one
    sites: Vec<Arc<Site>>,
    emitter_index: Arc<HashMap<String, usize>>,
    site_index: Arc<HashMap<String, usize>>,
    channels: Vec<Channel>,
    alpha: CouplingConstant,
    energy_tol: f64,
    options: EngineOptions,
    tick: u64,
    next_event: u64,
    causet: CausalSet,
    transactions: Vec<Transaction>,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, EngineError> {
        scenario.validate()?;
        let mut emitters = scenario.emitters.clone();
        emitters.sort_by(|a, b| a.id.cmp(&b.id));
        let sites: Vec<Arc<Site>> = scenario
            .absorbers
            .iter()
            .cloned()
            .map(Site::Absorber)
            .chain(scenario.detectors.iter().cloned().map(|d| Site::Detector(DetectorState::new(d))))
            .map(Arc::new)
            .collect();
        let emitter_index = Arc::new(emitters.iter().enumerate().map(|(i, e)| (e.id.clone(), i)).collect());
        let site_index = Arc::new(sites.iter().enumerate().map(|(i, s)| (s.receiver_id().to_string(), i)).collect());
        Ok(Simulation {
            emitters,
            sites,
            emitter_index,
            site_index,
            channels: scenario.channels.clone(),
            alpha: scenario.alpha,
            energy_tol: scenario.energy_tol,
            options: scenario.options,
            tick: 0,
            next_event: 0,
            causet: CausalSet::new(),
            transactions: Vec::new(),
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn emitters(&self) -> &[EmitterState] {
        &self.emitters
    }

    pub fn sites(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter().map(|s| s.as_ref())
    }

    pub fn site(&self, id: &str) -> Option<&Site> {
        self.site_index.get(id).map(|&i| self.sites[i].as_ref())
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn energy_tol(&self) -> f64 {
        self.energy_tol
    }

    pub fn causet(&self) -> &CausalSet {
        &self.causet
    }

    pub fn into_causet(self) -> CausalSet {
        self.causet
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    /// Receivers present on their channel at `tick`.
    pub fn active_sites(&self, tick: u64) -> Vec<&Site> {
        self.sites.iter().map(|s| s.as_ref()).filter(|s| s.active_from() <= tick).collect()
    }

    fn has_pending_sites(&self) -> bool {
        self.sites.iter().any(|s| s.active_from() > self.tick)
    }

    /// Sum of all bound-state energies held by emitters and receivers.
    pub fn total_energy(&self) -> f64 {
        self.emitters.iter().map(EmitterState::energy).sum::<f64>() + self.sites.iter().map(|s| s.energy()).sum::<f64>()
    }

    /// Level of every emitter and absorber plus excitations per detector.
    pub fn fingerprint(&self) -> Vec<u128> {
        self.emitters
            .iter()
            .map(|e| e.current_level as u128)
            .chain(self.sites.iter().map(|s| match s.as_ref() {
                Site::Absorber(a) => a.current_level as u128,
                Site::Detector(d) => d.excited,
            }))
            .collect()
    }

    /// Advances one tick.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<TickReport, EngineError> {
        self.tick += 1;
        let tick = self.tick;
        let mut outcomes = Vec::new();
        let mut blocked = Vec::new();
        let mut excited = 0;
        for ei in 0..self.emitters.len() {
            if !self.emitters[ei].is_excited() {
                continue;
            }
            excited += 1;
            match self.attempt(ei, tick, rng)? {
                Some(outcome) => outcomes.push(outcome),
                None => blocked.push(self.emitters[ei].id.clone()),
            }
        }
        Ok(TickReport { tick, outcomes, blocked, excited })
    }

    /// One emission attempt; `None` when no transition has absorber support.
    fn attempt<R: Rng + ?Sized>(&mut self, ei: usize, tick: u64, rng: &mut R) -> Result<Option<TickOutcome>, EngineError> {
        let tol = self.energy_tol;
        let active: Vec<usize> = (0..self.sites.len()).filter(|&i| self.sites[i].active_from() <= tick).collect();
        let (offer, responders, cw_set, winner) = {
            let registry: Vec<&Site> = active.iter().map(|&i| self.sites[i].as_ref()).collect();
            let emitter = &self.emitters[ei];
            let level = emitter.current_level;
            let mut offers = Vec::new();
            for (to, m) in emitter.spec.downward_from(level) {
                match mk_offer_wave(emitter, (level, to), &self.channels, &registry, tol) {
                    Ok(ow) => offers.push((ow, m)),
                    Err(SubstratumError::NoAbsorbers { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            let offer = match offers.len() {
                0 => return Ok(None),
                1 => offers.pop().map(|(ow, _)| ow).expect("one offer"),
                _ => {
                    let weights: Vec<f64> = offers.iter().map(|(_, m)| m * m).collect();
                    let pick = WeightedIndex::new(&weights).expect("positive matrix elements").sample(rng);
                    offers.swap_remove(pick).0
                }
            };
            let eligible = eligible_absorbers(&offer, &registry, tol);
            let responders = cw_trials(&eligible, self.alpha, self.options.analytic_threshold, rng);
            let cw_set = responders
                .iter()
                .map(|r| conjugate_response(&offer, registry[r.registry_index], tol))
                .collect::<Result<Vec<_>, _>>()?;
            let winner = if responders.is_empty() {
                None
            } else {
                let weighting = self.options.weighting;
                let omega = offer.omega;
                Some(collapse(
                    &eligible,
                    |m| registry[m.registry_index].collapse_weight(m.constituents, omega, tol, weighting),
                    rng,
                )?)
            };
            (offer, responders, cw_set, winner)
        };
        let Some(winner) = winner else {
            return Ok(Some(TickOutcome {
                tick,
                emitter: offer.emitter.clone(),
                offer,
                cw_set,
                transaction: None,
                nulls: Vec::new(),
            }));
        };
        let transaction = self.actualize(&offer, &winner.id, tick)?;
        let nulls = responders
            .into_iter()
            .filter(|r| r.id != winner.id)
            .map(|r| NullMeasurement { tick, absorber: r.id, channel: r.channel })
            .collect();
        Ok(Some(TickOutcome {
            tick,
            emitter: offer.emitter.clone(),
            offer,
            cw_set,
            transaction: Some(transaction),
            nulls,
        }))
    }

    /// Transfers ω from the offer's emitter to `winner` and records the
    /// emission/absorption pair in the causal set. Irreversible: nothing
    /// lowers an absorber or raises an emitter afterwards.
    pub fn actualize(&mut self, offer: &OfferWave, winner: &str, tick: u64) -> Result<Transaction, EngineError> {
        let tol = self.energy_tol;
        let ei = *self.emitter_index.get(&offer.emitter).ok_or_else(|| EngineError::UnknownSystem(offer.emitter.clone()))?;
        let si = *self.site_index.get(winner).ok_or_else(|| EngineError::UnknownSystem(winner.to_string()))?;
        let (from, to) = offer.transition;
        let emitter = &self.emitters[ei];
        if emitter.current_level != from || !emitter.spec.is_allowed(from, to) || to >= from {
            return Err(SubstratumError::ForbiddenTransition { emitter: emitter.id.clone(), from, to }.into());
        }
        let mismatch = || SubstratumError::EnergyMismatch { absorber: winner.to_string(), omega: offer.omega };
        let channel = self.sites[si].channel().clone();
        if offer.component(&channel).is_none() {
            return Err(SubstratumError::ChannelMismatch { absorber: winner.to_string(), channel }.into());
        }
        match Arc::make_mut(&mut self.sites[si]) {
            Site::Absorber(a) => {
                let (target, _) = a.spec.absorbing_target(a.current_level, offer.omega, tol).ok_or_else(mismatch)?;
                a.current_level = target;
            }
            Site::Detector(d) => {
                if d.eligible_constituents(offer.omega, tol) == 0 {
                    return Err(mismatch().into());
                }
                d.excited += 1;
            }
        }
        self.emitters[ei].current_level = to;
        let transaction = Transaction {
            tick,
            emitter: offer.emitter.clone(),
            winner: winner.to_string(),
            channel,
            transition: offer.transition,
            omega: offer.omega,
            emission_event: self.next_event,
            absorption_event: self.next_event + 1,
        };
        self.next_event += 2;
        self.causet.add_transaction(&transaction)?;
        self.transactions.push(transaction.clone());
        Ok(transaction)
    }
}

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Stopped after the tick containing the first transaction.
    Transaction,
    /// Reached `max_ticks`.
    MaxTicks,
    /// Excited emitters remain but none can address any absorber.
    NoAbsorbers,
    /// No excited emitter is left.
    Inert,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Transaction => "transaction",
            RunStatus::MaxTicks => "max_ticks",
            RunStatus::NoAbsorbers => "no_absorbers",
            RunStatus::Inert => "inert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    FirstTransaction,
    /// Keep ticking until no emitter can act or `max_ticks` is reached.
    Exhaustion,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub run: u64,
    pub status: RunStatus,
    pub ticks: u64,
    pub transactions: Vec<Transaction>,
    pub nulls: Vec<NullMeasurement>,
    pub causet: CausalSet,
}

/// The RNG stream for run `run` of an ensemble seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

pub fn run_trajectory(scenario: &Scenario, run: u64, stop: StopRule) -> Result<Trajectory, EngineError> {
    drive(Simulation::new(scenario)?, scenario, run, stop)
}

/// Steps a freshly built simulation of `scenario` until `stop` applies.
fn drive(mut sim: Simulation, scenario: &Scenario, run: u64, stop: StopRule) -> Result<Trajectory, EngineError> {
    let mut rng = run_rng(scenario.seed, run);
    let mut nulls = Vec::new();
    let mut status = RunStatus::MaxTicks;
    while sim.tick() < scenario.max_ticks {
        let report = sim.step(&mut rng)?;
        let transacted = report.transactions().next().is_some();
        nulls.extend(report.outcomes.into_iter().flat_map(|o| o.nulls));
        if transacted && stop == StopRule::FirstTransaction {
            status = RunStatus::Transaction;
            break;
        }
        if report.excited == 0 {
            status = RunStatus::Inert;
            break;
        }
        if report.blocked.len() == report.excited && !sim.has_pending_sites() {
            status = RunStatus::NoAbsorbers;
            break;
        }
    }
    let ticks = sim.tick();
    let transactions = sim.transactions().to_vec();
    Ok(Trajectory { run, status, ticks, transactions, nulls, causet: sim.into_causet() })
}

/// Per-run record kept by an ensemble (the causal set is dropped).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: u64,
    pub status: RunStatus,
    pub ticks: u64,
    pub transactions: Vec<Transaction>,
    pub nulls: Vec<NullMeasurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub runs: u64,
    pub seed: u64,
    pub runs_with_transaction: u64,
    pub no_detection: u64,
    pub status_counts: BTreeMap<String, u64>,
    pub transactions: u64,
    pub channel_counts: BTreeMap<String, u64>,
    /// Fractions of all transactions; sum to 1 when any occurred.
    pub channel_frequencies: BTreeMap<String, f64>,
    pub absorber_counts: BTreeMap<String, u64>,
    pub absorber_frequencies: BTreeMap<String, f64>,
    pub null_counts: BTreeMap<String, u64>,
    /// Mean tick of each run's first transaction.
    pub mean_ticks_to_transaction: Option<f64>,
}

impl EnsembleStats {
    pub fn channel_frequency(&self, channel: &str) -> f64 {
        self.channel_frequencies.get(channel).copied().unwrap_or(0.0)
    }

    pub fn no_detection_frequency(&self) -> f64 {
        self.no_detection as f64 / self.runs as f64
    }

    fn aggregate(scenario: &Scenario, runs: &[RunSummary]) -> Self {
        let zeroed = |keys: Vec<String>| keys.into_iter().map(|k| (k, 0u64)).collect::<BTreeMap<_, _>>();
        let mut channel_counts = zeroed(scenario.channels.iter().map(|c| c.id.0.clone()).collect());
        let receivers: Vec<String> = scenario
            .absorbers
            .iter()
            .map(|a| a.id.clone())
            .chain(scenario.detectors.iter().map(|d| d.id.clone()))
            .collect();
        let mut absorber_counts = zeroed(receivers.clone());
        let mut null_counts = zeroed(receivers);
        let mut status_counts = BTreeMap::new();
        let mut with_tx = 0u64;
        let mut tick_sum = 0u128;
        let mut transactions = 0u64;
        for r in runs {
            *status_counts.entry(r.status.as_str().to_string()).or_insert(0) += 1;
            if let Some(first) = r.transactions.first() {
                with_tx += 1;
                tick_sum += first.tick as u128;
            }
            for t in &r.transactions {
                transactions += 1;
                *channel_counts.entry(t.channel.0.clone()).or_insert(0) += 1;
                *absorber_counts.entry(t.winner.clone()).or_insert(0) += 1;
            }
            for n in &r.nulls {
                *null_counts.entry(n.absorber.clone()).or_insert(0) += 1;
            }
        }
        let freqs = |counts: &BTreeMap<String, u64>| -> BTreeMap<String, f64> {
            counts
                .iter()
                .map(|(k, &v)| (k.clone(), if transactions == 0 { 0.0 } else { v as f64 / transactions as f64 }))
                .collect()
        };
        EnsembleStats {
            runs: runs.len() as u64,
            seed: scenario.seed,
            runs_with_transaction: with_tx,
            no_detection: runs.len() as u64 - with_tx,
            status_counts,
            transactions,
            channel_frequencies: freqs(&channel_counts),
            absorber_frequencies: freqs(&absorber_counts),
            channel_counts,
            absorber_counts,
            null_counts,
            mean_ticks_to_transaction: (with_tx > 0).then(|| tick_sum as f64 / with_tx as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnsembleOptions {
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub stats: EnsembleStats,
    pub runs: Vec<RunSummary>,
}

pub fn run_ensemble(scenario: &Scenario, runs: u64) -> Result<EnsembleStats, EngineError> {
    run_ensemble_with(scenario, runs, EnsembleOptions::default()).map(|r| r.stats)
}

/// Runs `runs` independent trajectories, each ending at its first
/// transaction, and aggregates them in run order.
pub fn run_ensemble_with(scenario: &Scenario, runs: u64, opts: EnsembleOptions) -> Result<EnsembleResult, EngineError> {
    if runs == 0 {
        return Err(EngineError::NoRuns);
    }
    // validated and indexed once; every run starts from a copy
    let prototype = Simulation::new(scenario)?;
    let one = |run: u64| {
        drive(prototype.clone(), scenario, run, StopRule::FirstTransaction).map(|t| RunSummary {
            run,
            status: t.status,
            ticks: t.ticks,
            transactions: t.transactions,
            nulls: t.nulls,
        })
    };
    let collect = || (0..runs).into_par_iter().map(one).collect::<Result<Vec<_>, _>>();
    let summaries = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| EngineError::ThreadPool(e.to_string()))?
            .install(collect)?,
        None => collect()?,
    };
    Ok(EnsembleResult { stats: EnsembleStats::aggregate(scenario, &summaries), runs: summaries })
}

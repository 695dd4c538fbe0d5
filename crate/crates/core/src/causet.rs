//! Causal set grown by actualized transactions.
//!
//! Each transaction appends an emission event and an absorption event
//! joined by an interval link. Successive events at the same emitter or
//! absorber are chained by worldline links, so separate transactions become
//! ordered through the systems they share. Ticks are labels only; order is
//! defined by the links.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::substratum::Transaction;

pub type EventId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CausetError {
    #[error("event {0} already exists")]
    DuplicateEvent(EventId),
    #[error("transaction uses the same id {0} for emission and absorption")]
    SameEventIds(EventId),
    #[error("event {0} does not exist")]
    UnknownEvent(EventId),
    #[error("malformed causal-set document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Emission,
    Absorption,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub kind: EventKind,
    /// Emitter id for emissions, absorber or detector id for absorptions.
    pub system: String,
    pub tick: u64,
}

/// Event and link counts observed at some point in the set's history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Watermark {
    pub events: usize,
    pub links: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CausalSet {
    events: Vec<Event>,
    index: HashMap<EventId, usize>,
    links: BTreeSet<(EventId, EventId)>,
    children: HashMap<EventId, Vec<EventId>>,
    latest: HashMap<String, EventId>,
    watermark: Watermark,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    CycleDetected { events: Vec<EventId> },
    SelfLink { event: EventId },
    DanglingLink { cause: EventId, effect: EventId },
    DuplicateEvent { event: EventId },
    AbsorptionWithoutEmission { absorption: EventId, emissions: usize },
    AbsorptionBeforeEmission { emission: EventId, absorption: EventId },
    WatermarkMismatch { recorded: Watermark, found: Watermark },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct InvariantReport {
    pub events: usize,
    pub links: usize,
    pub violations: Vec<Violation>,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

#[derive(Serialize, Deserialize)]
struct Document {
    events: Vec<Event>,
    links: Vec<(EventId, EventId)>,
}

impl CausalSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a set from raw parts without checking any invariant; use
    /// [`CausalSet::check_invariants`] to audit the result.
    pub fn from_parts(events: Vec<Event>, links: impl IntoIterator<Item = (EventId, EventId)>) -> Self {
        let mut cs = CausalSet::default();
        for e in events {
            cs.index.entry(e.id).or_insert(cs.events.len());
            cs.latest.insert(e.system.clone(), e.id);
            cs.events.push(e);
        }
        for (a, b) in links {
            if cs.links.insert((a, b)) {
                cs.children.entry(a).or_default().push(b);
            }
        }
        cs.watermark = Watermark { events: cs.events.len(), links: cs.links.len() };
        cs
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, CausetError> {
        let doc: Document = serde_json::from_slice(bytes).map_err(|e| CausetError::Malformed(e.to_string()))?;
        Ok(Self::from_parts(doc.events, doc.links))
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, id: EventId) -> Option<&Event> {
        self.index.get(&id).map(|&i| &self.events[i])
    }

    pub fn links(&self) -> impl Iterator<Item = (EventId, EventId)> + '_ {
        self.links.iter().copied()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn watermark(&self) -> Watermark {
        self.watermark
    }

    /// Smallest id not used by any event, for allocating a transaction's pair.
    pub fn next_event_id(&self) -> EventId {
        self.events.iter().map(|e| e.id + 1).max().unwrap_or(0)
    }

    /// Appends a transaction's emission and absorption, the interval link
    /// between them, and worldline links from each system's latest event.
    pub fn add_transaction(&mut self, t: &Transaction) -> Result<(), CausetError> {
        let (em, ab) = (t.emission_event, t.absorption_event);
        if em == ab {
            return Err(CausetError::SameEventIds(em));
        }
        for id in [em, ab] {
            if self.index.contains_key(&id) {
                return Err(CausetError::DuplicateEvent(id));
            }
        }
        let new_links: Vec<(EventId, EventId)> = [
            self.latest.get(&t.emitter).map(|&prev| (prev, em)),
            Some((em, ab)),
            self.latest.get(&t.winner).map(|&prev| (prev, ab)),
        ]
        .into_iter()
        .flatten()
        .collect();
        self.push_event(Event { id: em, kind: EventKind::Emission, system: t.emitter.clone(), tick: t.tick });
        self.push_event(Event { id: ab, kind: EventKind::Absorption, system: t.winner.clone(), tick: t.tick });
        for (a, b) in new_links {
            if self.links.insert((a, b)) {
                self.children.entry(a).or_default().push(b);
            }
        }
        self.watermark = Watermark { events: self.events.len(), links: self.links.len() };
        Ok(())
    }

    fn push_event(&mut self, e: Event) {
        self.index.insert(e.id, self.events.len());
        self.latest.insert(e.system.clone(), e.id);
        self.events.push(e);
    }

    /// `a ≺ b`: `b` is reachable from `a` through one or more links.
    pub fn precedes(&self, a: EventId, b: EventId) -> Result<bool, CausetError> {
        for id in [a, b] {
            if !self.index.contains_key(&id) {
                return Err(CausetError::UnknownEvent(id));
            }
        }
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<EventId> = self.successors(a).collect();
        while let Some(x) = queue.pop_front() {
            if x == b {
                return Ok(true);
            }
            if seen.insert(x) {
                queue.extend(self.successors(x));
            }
        }
        Ok(false)
    }

    fn successors(&self, id: EventId) -> impl Iterator<Item = EventId> + '_ {
        self.children.get(&id).into_iter().flatten().copied()
    }

    pub fn check_invariants(&self) -> InvariantReport {
        let mut violations = Vec::new();
        let found = Watermark { events: self.events.len(), links: self.links.len() };
        if found != self.watermark {
            violations.push(Violation::WatermarkMismatch { recorded: self.watermark, found });
        }
        if self.index.len() != self.events.len() {
            let mut seen = BTreeSet::new();
            for e in &self.events {
                if !seen.insert(e.id) {
                    violations.push(Violation::DuplicateEvent { event: e.id });
                }
            }
        }
        for &(a, b) in &self.links {
            if a == b {
                violations.push(Violation::SelfLink { event: a });
            }
            if !self.index.contains_key(&a) || !self.index.contains_key(&b) {
                violations.push(Violation::DanglingLink { cause: a, effect: b });
            }
        }
        let stuck = self.kahn_residue();
        if !stuck.is_empty() {
            violations.push(Violation::CycleDetected { events: stuck });
        }

        let mut emission_parents: HashMap<EventId, Vec<EventId>> = HashMap::new();
        for &(a, b) in &self.links {
            if let (Some(ea), Some(eb)) = (self.event(a), self.event(b)) {
                if ea.kind == EventKind::Emission && eb.kind == EventKind::Absorption {
                    emission_parents.entry(b).or_default().push(a);
                }
            }
        }
        for e in self.events.iter().filter(|e| e.kind == EventKind::Absorption) {
            let parents = emission_parents.get(&e.id).map(Vec::as_slice).unwrap_or(&[]);
            if parents.len() != 1 {
                violations.push(Violation::AbsorptionWithoutEmission { absorption: e.id, emissions: parents.len() });
                continue;
            }
            let em = parents[0];
            let tick_ok = self.event(em).is_some_and(|x| x.tick <= e.tick);
            let order_ok = self.precedes(em, e.id).unwrap_or(false) && !self.precedes(e.id, em).unwrap_or(true);
            if !(tick_ok && order_ok) {
                violations.push(Violation::AbsorptionBeforeEmission { emission: em, absorption: e.id });
            }
        }
        InvariantReport { events: self.events.len(), links: self.links.len(), violations }
    }

    /// Events left over after Kahn's algorithm; nonempty iff there is a cycle.
    fn kahn_residue(&self) -> Vec<EventId> {
        let mut indegree: HashMap<EventId, usize> = self.events.iter().map(|e| (e.id, 0)).collect();
        for &(_, b) in &self.links {
            *indegree.entry(b).or_default() += 1;
        }
        let mut ready: VecDeque<EventId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        while let Some(x) = ready.pop_front() {
            indegree.remove(&x);
            for y in self.successors(x) {
                if let Some(d) = indegree.get_mut(&y) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push_back(y);
                    }
                }
            }
        }
        let mut stuck: Vec<EventId> = indegree.into_keys().collect();
        stuck.sort_unstable();
        stuck
    }

    fn sorted_events(&self) -> Vec<&Event> {
        let mut evs: Vec<&Event> = self.events.iter().collect();
        evs.sort_by_key(|e| e.id);
        evs
    }

    pub fn to_dot(&self) -> String {
        if self.events.is_empty() && self.links.is_empty() {
            return "digraph {}\n".to_string();
        }
        let mut out = String::from("digraph {\n");
        for e in self.sorted_events() {
            let _ = writeln!(out, "  {} [label=\"{:?}@{}\"];", e.id, e.kind, e.tick);
        }
        for (a, b) in &self.links {
            let _ = writeln!(out, "  {a} -> {b};");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        let doc = Document {
            events: self.sorted_events().into_iter().cloned().collect(),
            links: self.links.iter().copied().collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("causet document serializes");
        s.push('\n');
        s
    }

    pub fn export(&self, format: ExportFormat) -> Vec<u8> {
        match format {
            ExportFormat::Dot => self.to_dot().into_bytes(),
            ExportFormat::Json => self.to_json().into_bytes(),
        }
    }
}

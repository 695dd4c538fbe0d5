mod common;

use common::*;
use proptest::prelude::*;
use rti_core::amplitudes::CouplingConstant;
use rti_core::causet::{CausalSet, EventKind};
use rti_core::engine::{run_trajectory, RunStatus, Scenario, StopRule};
use rti_core::substratum::{AbsorberState, BoundStateSpec, ChannelId, EmitterState, Transaction};
use rti_testkit::graph::{respects, topo_sort, Closure};

fn edges(cs: &CausalSet) -> Vec<(u64, u64)> {
    cs.links().collect()
}

fn ids(cs: &CausalSet) -> Vec<u64> {
    cs.events().iter().map(|e| e.id).collect()
}

/// Ladder emitters and absorbers wired so that exhaustion yields exactly
/// `emitters * (levels - 1)` transactions.
fn cascade(emitters: usize, levels: usize, absorbers: usize, seed: u64) -> Scenario {
    let ems = (0..emitters)
        .map(|i| EmitterState::new(format!("E{i:02}"), BoundStateSpec::ladder(levels, 1.0, 0.1).unwrap(), levels - 1).unwrap())
        .collect();
    let capacity = emitters * (levels - 1) / absorbers + 2;
    let abs = (0..absorbers)
        .map(|i| {
            let ch = ["L", "M", "R"][i % 3];
            AbsorberState::new(format!("A{i:02}"), BoundStateSpec::ladder(capacity, 1.0, 0.1).unwrap(), 0, ChannelId::new(ch))
                .unwrap()
        })
        .collect();
    Scenario::new(ems, abs, vec![], channels(&[("L", 0.5), ("M", 0.3), ("R", 0.2)]))
        .with_alpha(CouplingConstant::new(0.3).unwrap())
        .with_max_ticks(100_000)
        .with_seed(seed)
}

#[test]
fn successive_emissions_are_ordered_by_the_worldline() {
    let spec = BoundStateSpec::ladder(3, 1.0, 0.1).unwrap();
    let e = EmitterState::new("E", spec, 2).unwrap();
    let s = Scenario::new(vec![e], vec![absorber("A", "L"), absorber("B", "L")], vec![], channels(&[("L", 1.0)]))
        .with_alpha(CouplingConstant::new(1.0).unwrap());
    let t = run_trajectory(&s, 0, StopRule::Exhaustion).unwrap();
    assert_eq!(t.transactions.len(), 2);
    let cs = &t.causet;
    assert_eq!(cs.len(), 4);
    let closure = Closure::new(&ids(cs), &edges(cs));
    let (e1, e2) = (t.transactions[0].emission_event, t.transactions[1].emission_event);
    assert!(closure.reaches(e1, e2));
    assert!(cs.precedes(e1, e2).unwrap());
    assert!(!cs.precedes(e2, e1).unwrap());
}

#[test]
fn unrelated_transactions_stay_unordered() {
    let s = Scenario::new(
        vec![two_level_emitter("E1"), two_level_emitter("E2")],
        vec![absorber("A", "L"), absorber("B", "L")],
        vec![],
        channels(&[("L", 1.0)]),
    )
    .with_alpha(CouplingConstant::new(1.0).unwrap());
    let t = run_trajectory(&s, 0, StopRule::Exhaustion).unwrap();
    assert_eq!(t.transactions.len(), 2);
    let cs = &t.causet;
    let closure = Closure::new(&ids(cs), &edges(cs));
    let (a, b) = (&t.transactions[0], &t.transactions[1]);
    for x in [a.emission_event, a.absorption_event] {
        for y in [b.emission_event, b.absorption_event] {
            assert!(!closure.reaches(x, y) && !closure.reaches(y, x));
            assert!(!cs.precedes(x, y).unwrap() && !cs.precedes(y, x).unwrap());
        }
    }
}

#[test]
fn thousand_transaction_run_is_a_clean_partial_order() {
    let t = run_trajectory(&cascade(20, 51, 12, 2024), 0, StopRule::Exhaustion).unwrap();
    assert_eq!(t.status, RunStatus::Inert);
    assert_eq!(t.transactions.len(), 1000);
    let cs = &t.causet;
    assert_eq!(cs.len(), 2000);
    assert!(cs.check_invariants().is_clean());
    let order = topo_sort(&ids(cs), &edges(cs)).expect("acyclic");
    assert!(respects(&order, &edges(cs)));
    for tx in &t.transactions {
        assert!(cs.precedes(tx.emission_event, tx.absorption_event).unwrap());
    }
}

#[test]
fn equal_seeds_export_identical_bytes() {
    let a = run_trajectory(&cascade(4, 6, 3, 99), 0, StopRule::Exhaustion).unwrap();
    let b = run_trajectory(&cascade(4, 6, 3, 99), 0, StopRule::Exhaustion).unwrap();
    assert_eq!(a.causet.to_dot(), b.causet.to_dot());
    assert_eq!(a.causet.to_json(), b.causet.to_json());
    let c = run_trajectory(&cascade(4, 6, 3, 100), 0, StopRule::Exhaustion).unwrap();
    assert_ne!(a.causet.to_json(), c.causet.to_json());
}

fn arb_transactions() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..4, 0usize..5), 0..25)
}

proptest! {
    #[test]
    fn link_closure_is_a_strict_partial_order(pairs in arb_transactions()) {
        let mut cs = CausalSet::new();
        let mut history = Vec::new();
        for (i, (e, a)) in pairs.iter().enumerate() {
            let before = cs.events().to_vec();
            let links_before: Vec<_> = cs.links().collect();
            let t = Transaction {
                tick: i as u64 + 1,
                emitter: format!("E{e}"),
                winner: format!("A{a}"),
                channel: ChannelId::new("L"),
                transition: (1, 0),
                omega: 1.0,
                emission_event: 2 * i as u64,
                absorption_event: 2 * i as u64 + 1,
            };
            cs.add_transaction(&t).unwrap();
            // append-only: earlier events and links survive untouched
            prop_assert_eq!(&cs.events()[..before.len()], &before[..]);
            let now: Vec<_> = cs.links().collect();
            prop_assert!(links_before.iter().all(|l| now.contains(l)));
            prop_assert!(cs.watermark().events >= before.len());
            history.push(t);
        }
        let closure = Closure::new(&ids(&cs), &edges(&cs));
        prop_assert!(closure.is_irreflexive());
        prop_assert!(closure.is_transitive());
        prop_assert!(closure.is_antisymmetric());
        for x in ids(&cs) {
            for y in ids(&cs) {
                prop_assert_eq!(cs.precedes(x, y).unwrap(), closure.reaches(x, y));
            }
        }
        for ev in cs.events().iter().filter(|e| e.kind == EventKind::Absorption) {
            let parents: Vec<_> = cs
                .links()
                .filter(|&(a, b)| b == ev.id && cs.event(a).unwrap().kind == EventKind::Emission)
                .collect();
            prop_assert_eq!(parents.len(), 1);
            prop_assert!(cs.event(parents[0].0).unwrap().tick <= ev.tick);
        }
        prop_assert!(cs.check_invariants().is_clean());
        prop_assert_eq!(history.len(), cs.len() / 2);
    }
}

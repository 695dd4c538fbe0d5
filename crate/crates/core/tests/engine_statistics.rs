mod common;

use common::*;
use rti_core::amplitudes::{prob_no_cw, CouplingConstant};
use rti_core::engine::{
    cw_trials, run_ensemble, run_ensemble_with, run_rng, EnsembleOptions, Scenario, DEFAULT_ANALYTIC_THRESHOLD,
};
use rti_core::relativistic_gate::{photon_analog, PhotonAnalogConfig};
use rti_core::substratum::{ChannelGroup, ChannelId, EligibleMember, Eligibility};
use rti_core::Count;
use rti_testkit::enumerate::conditional_channel_probs;
use rti_testkit::stats::{binomial_sigma, within_sigma};

#[test]
fn gate_frequency_tracks_no_cw_probability() {
    let alpha = CouplingConstant::default();
    for n in [1usize, 10, 100, 1000] {
        let runs = 10_000;
        let stats = run_ensemble(&crowd(n, 0.007, 1).with_seed(n as u64), runs).unwrap();
        let expected = prob_no_cw(alpha, Count(n as u128)).prob;
        let observed = stats.no_detection_frequency();
        assert!(within_sigma(observed, expected, runs, 3.0), "N={n}: {observed} vs {expected}");
    }
}

#[test]
fn single_absorber_transacts_at_alpha_per_tick() {
    let runs = 100_000;
    let stats = run_ensemble(&crowd(1, 0.007, 1).with_seed(11), runs).unwrap();
    let freq = stats.runs_with_transaction as f64 / runs as f64;
    assert!(within_sigma(freq, 0.007, runs, 3.0), "{freq}");
}

#[test]
fn ten_thousand_eligible_never_all_silent() {
    let members = (0..10_000)
        .map(|i| EligibleMember { registry_index: i, id: format!("a{i}"), constituents: 1 })
        .collect();
    let elig = Eligibility { groups: vec![ChannelGroup { channel: ChannelId::new("L"), weight: 1.0, members }] };
    let mut rng = run_rng(3, 0);
    for _ in 0..1_000 {
        assert!(!cw_trials(&elig, CouplingConstant::default(), DEFAULT_ANALYTIC_THRESHOLD, &mut rng).is_empty());
    }
}

#[test]
fn mean_ticks_follow_the_geometric_law() {
    let stats = run_ensemble(&crowd(100, 0.007, 10_000).with_seed(5), 10_000).unwrap();
    // 1 / (1 - 0.993^100) = 1.981628187767569
    let expected = 1.981_628_187_767_569;
    let mean = stats.mean_ticks_to_transaction.unwrap();
    assert!(((mean - expected) / expected).abs() < 0.05, "{mean}");
}

#[test]
fn symmetric_channels_split_evenly() {
    let runs = 100_000;
    let s = photon_analog(PhotonAnalogConfig::default()).with_seed(42);
    let stats = run_ensemble(&s, runs).unwrap();
    assert_eq!(stats.runs_with_transaction, runs);
    let left = stats.channel_frequency("L");
    assert!((left - 0.5).abs() <= 0.005, "{left}");
}

#[test]
fn asymmetric_channels_follow_enumeration_oracle() {
    // two absorbers on L, one on R, |a_L|² = 0.64
    let alpha = 0.05;
    let expected = conditional_channel_probs(&[0, 0, 1], &[0.64, 0.36], alpha, false);
    let responders_only = conditional_channel_probs(&[0, 0, 1], &[0.64, 0.36], alpha, true);
    assert!((expected[0] - 0.64).abs() < 1e-12);
    let s = Scenario::new(
        vec![two_level_emitter("E")],
        vec![absorber("a", "L"), absorber("b", "L"), absorber("c", "R")],
        vec![],
        channels(&[("L", 0.64), ("R", 0.36)]),
    )
    .with_alpha(CouplingConstant::new(alpha).unwrap())
    .with_seed(9);
    let runs = 100_000;
    let stats = run_ensemble(&s, runs).unwrap();
    let left = stats.channel_frequency("L");
    let sigma = binomial_sigma(expected[0], runs);
    assert!((left - expected[0]).abs() <= 3.0 * sigma, "{left}");
    // weighting only the responders would put L far off the Born weight
    assert!((left - responders_only[0]).abs() > 10.0 * sigma, "{left} vs {}", responders_only[0]);
}

#[test]
fn analytic_and_explicit_gates_agree() {
    let make = |threshold: u128| {
        let mut s = Scenario::new(vec![two_level_emitter("E")], vec![], vec![detector("D", "L", 100)], channels(&[("L", 1.0)]))
            .with_max_ticks(1)
            .with_seed(17);
        s.options.analytic_threshold = threshold;
        s
    };
    let runs = 20_000;
    let expected = prob_no_cw(CouplingConstant::default(), Count(100)).prob;
    let analytic = run_ensemble(&make(0), runs).unwrap().no_detection_frequency();
    let explicit = run_ensemble(&make(u128::MAX), runs).unwrap().no_detection_frequency();
    assert!(within_sigma(analytic, expected, runs, 3.0), "{analytic}");
    assert!(within_sigma(explicit, expected, runs, 3.0), "{explicit}");
    assert!((analytic - explicit).abs() <= 3.0 * 2f64.sqrt() * binomial_sigma(expected, runs));
}

#[test]
fn macroscopic_detector_fires_on_the_first_tick() {
    let s = Scenario::new(
        vec![two_level_emitter("E")],
        vec![],
        vec![detector("D", "L", 10u128.pow(23))],
        channels(&[("L", 1.0)]),
    )
    .with_max_ticks(1);
    let stats = run_ensemble(&s, 1_000).unwrap();
    assert_eq!(stats.runs_with_transaction, 1_000);
    assert_eq!(stats.mean_ticks_to_transaction, Some(1.0));
}

#[test]
fn thread_count_does_not_change_results() {
    let s = crowd(30, 0.02, 500).with_seed(1234);
    let one = run_ensemble_with(&s, 3_000, EnsembleOptions { threads: Some(1) }).unwrap();
    let eight = run_ensemble_with(&s, 3_000, EnsembleOptions { threads: Some(8) }).unwrap();
    assert_eq!(one.stats, eight.stats);
    assert_eq!(one.runs, eight.runs);
    let again = run_ensemble_with(&s, 3_000, EnsembleOptions { threads: Some(3) }).unwrap();
    assert_eq!(
        serde_json::to_string(&one.stats).unwrap(),
        serde_json::to_string(&again.stats).unwrap()
    );
}

#[test]
fn frequencies_sum_to_one() {
    let s = crowd(5, 0.1, 100).with_seed(77);
    let stats = run_ensemble(&s, 2_000).unwrap();
    let total: f64 = stats.channel_frequencies.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let total: f64 = stats.absorber_frequencies.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn optional_amplitude_weighting_favours_resonant_absorbers() {
    use rti_core::engine::WinnerWeighting;
    use rti_core::substratum::{AbsorberState, BoundStateSpec};
    // both absorbers within tolerance, but one is detuned by 0.5%
    let near = AbsorberState::new("near", BoundStateSpec::two_level(1.0, 1e-4).unwrap(), 0, ChannelId::new("L")).unwrap();
    let far = AbsorberState::new("far", BoundStateSpec::two_level(1.005, 1e-4).unwrap(), 0, ChannelId::new("L")).unwrap();
    let mut s = Scenario::new(vec![two_level_emitter("E")], vec![near, far], vec![], channels(&[("L", 1.0)]))
        .with_alpha(CouplingConstant::new(1.0).unwrap());
    s.energy_tol = 0.01;
    let uniform = run_ensemble(&s, 4_000).unwrap();
    assert!(within_sigma(uniform.absorber_frequencies["near"], 0.5, 4_000, 3.0));
    s.options.weighting = WinnerWeighting::TransitionProbability { tau: 1000.0 };
    let weighted = run_ensemble(&s, 4_000).unwrap();
    assert!(weighted.absorber_frequencies["near"] > 0.9);
}

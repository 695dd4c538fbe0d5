#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use rti_core::amplitudes::CouplingConstant;
use rti_core::engine::Scenario;
use rti_core::substratum::{AbsorberState, BoundStateSpec, Channel, ChannelId, DetectorSpec, EmitterState};
use rti_core::Count;

pub fn two_level_emitter(id: &str) -> EmitterState {
    EmitterState::new(id, BoundStateSpec::two_level(1.0, 0.1).unwrap(), 1).unwrap()
}

pub fn absorber(id: &str, channel: &str) -> AbsorberState {
    AbsorberState::new(id, BoundStateSpec::two_level(1.0, 0.1).unwrap(), 0, ChannelId::new(channel)).unwrap()
}

pub fn channels(weights: &[(&str, f64)]) -> Vec<Channel> {
    weights
        .iter()
        .map(|&(id, w)| Channel::new(id, id.to_lowercase(), Complex64::new(w.sqrt(), 0.0)))
        .collect()
}

pub fn detector(id: &str, channel: &str, n: u128) -> DetectorSpec {
    DetectorSpec { id: id.into(), channel: ChannelId::new(channel), n: Count(n), gap: 1.0, active_from: 0 }
}

/// `n` two-level absorbers on one channel, one excited emitter.
pub fn crowd(n: usize, alpha: f64, max_ticks: u64) -> Scenario {
    let absorbers = (0..n).map(|i| absorber(&format!("a{i:04}"), "L")).collect();
    Scenario::new(vec![two_level_emitter("E")], absorbers, vec![], channels(&[("L", 1.0)]))
        .with_alpha(CouplingConstant::new(alpha).unwrap())
        .with_max_ticks(max_ticks)
}

const GAPS: [f64; 3] = [0.5, 1.0, 1.5];

/// Random scenarios over a handful of channels: ladder emitters and
/// absorbers whose gaps are drawn from a shared menu, so some match and
/// some do not, and some channels end up empty.
pub fn arb_scenario() -> impl Strategy<Value = Scenario> {
    let channel_weights = prop::collection::vec(0.05f64..1.0, 1..5);
    let emitters = prop::collection::vec((0usize..3, 2usize..5), 1..4);
    let absorbers = prop::collection::vec((0usize..3, 2usize..6, 0usize..5, 0usize..2), 0..8);
    let detectors = prop::collection::vec((0usize..5, 1u64..200), 0..2);
    (channel_weights, emitters, absorbers, detectors, 0.05f64..1.0, any::<u64>()).prop_map(
        |(weights, emitters, absorbers, detectors, alpha, seed)| {
            let k = weights.len();
            let total: f64 = weights.iter().sum();
            let chans: Vec<Channel> = weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let amp = Complex64::from_polar((w / total).sqrt(), i as f64);
                    Channel::new(format!("c{i}"), format!("chan{i}"), amp)
                })
                .collect();
            let emitters = emitters
                .into_iter()
                .enumerate()
                .map(|(i, (g, levels))| {
                    let spec = BoundStateSpec::ladder(levels, GAPS[g], 0.1).unwrap();
                    EmitterState::new(format!("e{i}"), spec, levels - 1).unwrap()
                })
                .collect();
            let absorbers = absorbers
                .into_iter()
                .enumerate()
                .map(|(i, (g, levels, ch, start))| {
                    let spec = BoundStateSpec::ladder(levels, GAPS[g], 0.1).unwrap();
                    AbsorberState::new(format!("a{i}"), spec, start.min(levels - 1), ChannelId::new(format!("c{}", ch % k)))
                        .unwrap()
                })
                .collect();
            let detectors = detectors
                .into_iter()
                .enumerate()
                .map(|(i, (ch, n))| DetectorSpec {
                    id: format!("d{i}"),
                    channel: ChannelId::new(format!("c{}", ch % k)),
                    n: Count(n as u128),
                    gap: 1.0,
                    active_from: 0,
                })
                .collect();
            Scenario::new(emitters, absorbers, detectors, chans)
                .with_alpha(CouplingConstant::new(alpha).unwrap())
                .with_max_ticks(40)
                .with_seed(seed)
        },
    )
}

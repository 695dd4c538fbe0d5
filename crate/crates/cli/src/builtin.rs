//! Scenarios addressable by name instead of a file path.

use num_complex::Complex64;
use rti_core::amplitudes::CouplingConstant;
use rti_core::engine::Scenario;
use rti_core::relativistic_gate::{maudlin_scenario, photon_analog, MaudlinVariant, PhotonAnalogConfig};
use rti_core::substratum::{AbsorberState, BoundStateSpec, Channel, ChannelId, EmitterState};

use crate::error::CliError;

pub const NAMES: &[&str] = &[
    "maudlin-as-proposed",
    "maudlin-photon-analog",
    "maudlin-photon-analog-asymmetric",
    "maudlin-photon-analog-no-background",
    "certain-response",
];

/// One emitter, one absorber, and a coupling of 1: every run is a single
/// transaction on the first tick.
fn certain_response() -> Scenario {
    let spec = || BoundStateSpec::two_level(1.0, 0.1).expect("valid spec");
    let emitter = EmitterState::new("E", spec(), 1).expect("valid level");
    let absorber = AbsorberState::new("A", spec(), 0, ChannelId::new("L")).expect("valid level");
    let channels = vec![Channel::new("L", "only", Complex64::new(1.0, 0.0))];
    Scenario::new(vec![emitter], vec![absorber], vec![], channels)
        .with_alpha(CouplingConstant::new(1.0).expect("1 is a valid coupling"))
        .with_max_ticks(10)
}

/// `None` when `name` is not a built-in.
pub fn builtin(name: &str) -> Option<Result<Scenario, CliError>> {
    let analog = |config| Ok(photon_analog(config));
    Some(match name {
        "maudlin-as-proposed" => maudlin_scenario(MaudlinVariant::AsProposed).map_err(CliError::Gate),
        "maudlin-photon-analog" => maudlin_scenario(MaudlinVariant::PhotonAnalog).map_err(CliError::Gate),
        "maudlin-photon-analog-asymmetric" => {
            analog(PhotonAnalogConfig { left_weight: 0.64, ..PhotonAnalogConfig::default() })
        }
        "maudlin-photon-analog-no-background" => {
            analog(PhotonAnalogConfig { background: false, swing_b_at: None, ..PhotonAnalogConfig::default() })
        }
        "certain-response" => Ok(certain_response()),
        _ => return None,
    })
}

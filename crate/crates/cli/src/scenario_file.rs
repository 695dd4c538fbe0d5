//! JSON scenario files.
//!
//! ```json
//! {
//!   "alpha": 0.007,            // optional
//!   "energy_tol": 1e-9,        // optional, relative
//!   "max_ticks": 1000,
//!   "seed": 42,                // optional
//!   "channels":  [{"id": "L", "label": "left", "re": 1, "im": 0}],
//!   "emitters":  [{"id": "E", "levels": [0, 1], "allowed": [[1, 0]],
//!                  "matrix_elements": {"1-0": 0.1}, "initial_level": 1}],
//!   "absorbers": [{"id": "A", "channel": "L", "levels": [0, 1], "allowed": [[0, 1]],
//!                  "initial_level": 0,
//!                  "matrix_elements": {"0-1": 0.1},   // optional, default 1 per pair
//!                  "active_from": 0}],                // optional
//!   "detectors": [{"id": "D", "channel": "L", "n": "1e23", "gap": 1,
//!                  "active_from": 0}]                 // list optional
//! }
//! ```
//!
//! Unknown keys are rejected with the JSON path of the offending field.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rti_core::amplitudes::CouplingConstant;
use rti_core::count::Count;
use rti_core::engine::{Scenario, ScenarioError, DEFAULT_SEED};
use rti_core::substratum::{
    normalize_channels, AbsorberState, BoundStateSpec, Channel, ChannelId, DetectorSpec, EmitterState,
    DEFAULT_ENERGY_TOL,
};
use serde_json::{json, Map, Value};

use crate::error::CliError;

type Obj = Map<String, Value>;

fn object<'a>(v: &'a Value, path: &str, required: &[&str], optional: &[&str]) -> Result<&'a Obj, CliError> {
    let obj = v.as_object().ok_or_else(|| CliError::schema(path, "expected an object"))?;
    for key in obj.keys() {
        if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
            return Err(CliError::schema(format!("{path}.{key}"), "unknown key"));
        }
    }
    for key in required {
        if !obj.contains_key(*key) {
            return Err(CliError::schema(format!("{path}.{key}"), "missing required key"));
        }
    }
    Ok(obj)
}

fn number(v: &Value, path: &str) -> Result<f64, CliError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::schema(path, "expected a finite number"))
}

fn uint(v: &Value, path: &str) -> Result<u64, CliError> {
    v.as_u64().ok_or_else(|| CliError::schema(path, "expected a nonnegative integer"))
}

fn index(v: &Value, path: &str) -> Result<usize, CliError> {
    uint(v, path).map(|x| x as usize)
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str, CliError> {
    v.as_str().ok_or_else(|| CliError::schema(path, "expected a string"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array().ok_or_else(|| CliError::schema(path, "expected an array"))
}

fn levels(v: &Value, path: &str) -> Result<Vec<f64>, CliError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn allowed(v: &Value, path: &str) -> Result<Vec<(usize, usize)>, CliError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let p = format!("{path}[{i}]");
            match array(pair, &p)?.as_slice() {
                [a, b] => Ok((index(a, &format!("{p}[0]"))?, index(b, &format!("{p}[1]"))?)),
                _ => Err(CliError::schema(p, "expected a [from, to] pair")),
            }
        })
        .collect()
}

fn matrix_elements(v: &Value, path: &str) -> Result<BTreeMap<(usize, usize), f64>, CliError> {
    let obj = v.as_object().ok_or_else(|| CliError::schema(path, "expected an object"))?;
    obj.iter()
        .map(|(key, value)| {
            let p = format!("{path}.{key}");
            let pair = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| CliError::schema(&p, "key must look like \"from-to\""))?;
            Ok((pair, number(value, &p)?))
        })
        .collect()
}

fn bound_state(
    obj: &Obj,
    path: &str,
    supplied: Option<BTreeMap<(usize, usize), f64>>,
    default_element: Option<f64>,
) -> Result<BoundStateSpec, CliError> {
    let energies = levels(&obj["levels"], &format!("{path}.levels"))?;
    let pairs = allowed(&obj["allowed"], &format!("{path}.allowed"))?;
    let mut supplied = supplied.unwrap_or_default();
    let mut transitions = Vec::with_capacity(pairs.len());
    for (from, to) in pairs {
        let m = supplied
            .remove(&(from, to))
            .or(default_element)
            .ok_or_else(|| CliError::schema(format!("{path}.matrix_elements.{from}-{to}"), "missing matrix element"))?;
        transitions.push(((from, to), m));
    }
    if let Some(((a, b), _)) = supplied.into_iter().next() {
        return Err(CliError::schema(
            format!("{path}.matrix_elements.{a}-{b}"),
            "matrix element for a transition that is not allowed",
        ));
    }
    BoundStateSpec::new(&energies, transitions).map_err(|e| CliError::schema(path, e.to_string()))
}

fn scenario_error(e: ScenarioError, s: &Scenario) -> CliError {
    let absorber_path = |id: &str| {
        s.absorbers
            .iter()
            .position(|a| a.id == id)
            .map(|i| format!("$.absorbers[{i}]"))
            .or_else(|| s.detectors.iter().position(|d| d.id == id).map(|i| format!("$.detectors[{i}]")))
    };
    match &e {
        ScenarioError::NoEmitters => CliError::schema("$.emitters", e.to_string()),
        ScenarioError::NoChannels => CliError::schema("$.channels", e.to_string()),
        ScenarioError::ZeroMaxTicks => CliError::schema("$.max_ticks", e.to_string()),
        ScenarioError::BadEnergyTol(_) => CliError::schema("$.energy_tol", e.to_string()),
        ScenarioError::DuplicateChannel(_) | ScenarioError::Unnormalized(_) => CliError::schema("$.channels", e.to_string()),
        ScenarioError::UnknownChannel { system, .. } => CliError::schema(
            absorber_path(system).map(|p| format!("{p}.channel")).unwrap_or_else(|| "$".into()),
            e.to_string(),
        ),
        ScenarioError::BadDetectorGap { detector, .. } => CliError::schema(
            absorber_path(detector).map(|p| format!("{p}.gap")).unwrap_or_else(|| "$".into()),
            e.to_string(),
        ),
        ScenarioError::DuplicateSystem(_) => CliError::schema("$", e.to_string()),
    }
}

/// A parsed file plus whether it pinned its own seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub scenario: Scenario,
    pub file_seed: Option<u64>,
}

pub fn parse_scenario_file(bytes: &[u8]) -> Result<ParsedScenario, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::schema("$", format!("not UTF-8: {e}")))?;
    let root: Value = serde_json::from_str(text).map_err(|e| CliError::schema("$", format!("invalid JSON: {e}")))?;
    let top = object(
        &root,
        "$",
        &["max_ticks", "channels", "emitters", "absorbers"],
        &["alpha", "energy_tol", "seed", "detectors"],
    )?;

    let alpha = match top.get("alpha") {
        Some(v) => CouplingConstant::new(number(v, "$.alpha")?).map_err(|e| CliError::schema("$.alpha", e.to_string()))?,
        None => CouplingConstant::default(),
    };
    let energy_tol = match top.get("energy_tol") {
        Some(v) => number(v, "$.energy_tol")?,
        None => DEFAULT_ENERGY_TOL,
    };
    let max_ticks = uint(&top["max_ticks"], "$.max_ticks")?;
    let file_seed = top.get("seed").map(|v| uint(v, "$.seed")).transpose()?;

    let mut channels = Vec::new();
    for (i, c) in array(&top["channels"], "$.channels")?.iter().enumerate() {
        let p = format!("$.channels[{i}]");
        let o = object(c, &p, &["id", "label", "re", "im"], &[])?;
        channels.push(Channel {
            id: ChannelId::new(string(&o["id"], &format!("{p}.id"))?),
            label: string(&o["label"], &format!("{p}.label"))?.to_string(),
            amplitude: Complex64::new(number(&o["re"], &format!("{p}.re"))?, number(&o["im"], &format!("{p}.im"))?),
        });
    }
    if !channels.is_empty() && normalize_channels(&mut channels).is_none() {
        return Err(CliError::Normalization);
    }

    let mut emitters = Vec::new();
    for (i, e) in array(&top["emitters"], "$.emitters")?.iter().enumerate() {
        let p = format!("$.emitters[{i}]");
        let o = object(e, &p, &["id", "levels", "allowed", "matrix_elements", "initial_level"], &[])?;
        let elements = matrix_elements(&o["matrix_elements"], &format!("{p}.matrix_elements"))?;
        let spec = bound_state(o, &p, Some(elements), None)?;
        let level = index(&o["initial_level"], &format!("{p}.initial_level"))?;
        let id = string(&o["id"], &format!("{p}.id"))?;
        emitters.push(
            EmitterState::new(id, spec, level).map_err(|e| CliError::schema(format!("{p}.initial_level"), e.to_string()))?,
        );
    }

    let mut absorbers = Vec::new();
    for (i, a) in array(&top["absorbers"], "$.absorbers")?.iter().enumerate() {
        let p = format!("$.absorbers[{i}]");
        let o = object(
            a,
            &p,
            &["id", "channel", "levels", "allowed", "initial_level"],
            &["matrix_elements", "active_from"],
        )?;
        let elements = o
            .get("matrix_elements")
            .map(|v| matrix_elements(v, &format!("{p}.matrix_elements")))
            .transpose()?;
        let spec = bound_state(o, &p, elements, Some(1.0))?;
        let level = index(&o["initial_level"], &format!("{p}.initial_level"))?;
        let channel = ChannelId::new(string(&o["channel"], &format!("{p}.channel"))?);
        let id = string(&o["id"], &format!("{p}.id"))?;
        let active_from = o.get("active_from").map(|v| uint(v, &format!("{p}.active_from"))).transpose()?.unwrap_or(0);
        absorbers.push(
            AbsorberState::new(id, spec, level, channel)
                .map_err(|e| CliError::schema(format!("{p}.initial_level"), e.to_string()))?
                .with_active_from(active_from),
        );
    }

    let mut detectors = Vec::new();
    if let Some(list) = top.get("detectors") {
        for (i, d) in array(list, "$.detectors")?.iter().enumerate() {
            let p = format!("$.detectors[{i}]");
            let o = object(d, &p, &["id", "channel", "n", "gap"], &["active_from"])?;
            let n: Count = serde_json::from_value(o["n"].clone())
                .map_err(|e| CliError::schema(format!("{p}.n"), e.to_string()))?;
            detectors.push(DetectorSpec {
                id: string(&o["id"], &format!("{p}.id"))?.to_string(),
                channel: ChannelId::new(string(&o["channel"], &format!("{p}.channel"))?),
                n,
                gap: number(&o["gap"], &format!("{p}.gap"))?,
                active_from: o.get("active_from").map(|v| uint(v, &format!("{p}.active_from"))).transpose()?.unwrap_or(0),
            });
        }
    }

    let mut scenario = Scenario::new(emitters, absorbers, detectors, channels)
        .with_alpha(alpha)
        .with_max_ticks(max_ticks)
        .with_seed(file_seed.unwrap_or(DEFAULT_SEED));
    scenario.energy_tol = energy_tol;
    scenario.validate().map_err(|e| scenario_error(e, &scenario))?;
    Ok(ParsedScenario { scenario, file_seed })
}

/// Parses and validates a scenario file; the seed defaults to `0xC0FFEE`.
pub fn parse_scenario(bytes: &[u8]) -> Result<Scenario, CliError> {
    parse_scenario_file(bytes).map(|p| p.scenario)
}

fn spec_json(spec: &BoundStateSpec) -> (Value, Value, Value) {
    let levels: Vec<f64> = spec.levels().iter().map(|l| l.energy).collect();
    let allowed: Vec<[usize; 2]> = spec.transitions().map(|(a, b, _)| [a, b]).collect();
    let elements: Obj = spec.transitions().map(|(a, b, m)| (format!("{a}-{b}"), json!(m))).collect();
    (json!(levels), json!(allowed), Value::Object(elements))
}

/// Writes a scenario back out in the file schema.
pub fn scenario_to_json(s: &Scenario) -> Value {
    let channels: Vec<Value> = s
        .channels
        .iter()
        .map(|c| json!({"id": c.id.as_str(), "label": c.label, "re": c.amplitude.re, "im": c.amplitude.im}))
        .collect();
    let emitters: Vec<Value> = s
        .emitters
        .iter()
        .map(|e| {
            let (levels, allowed, elements) = spec_json(&e.spec);
            json!({"id": e.id, "levels": levels, "allowed": allowed, "matrix_elements": elements,
                   "initial_level": e.current_level})
        })
        .collect();
    let absorbers: Vec<Value> = s
        .absorbers
        .iter()
        .map(|a| {
            let (levels, allowed, elements) = spec_json(&a.spec);
            let mut v = json!({"id": a.id, "channel": a.channel.as_str(), "levels": levels, "allowed": allowed,
                               "matrix_elements": elements, "initial_level": a.current_level});
            if a.active_from != 0 {
                v["active_from"] = json!(a.active_from);
            }
            v
        })
        .collect();
    let detectors: Vec<Value> = s
        .detectors
        .iter()
        .map(|d| {
            let mut v = json!({"id": d.id, "channel": d.channel.as_str(), "n": d.n, "gap": d.gap});
            if d.active_from != 0 {
                v["active_from"] = json!(d.active_from);
            }
            v
        })
        .collect();
    json!({
        "alpha": s.alpha.value(),
        "energy_tol": s.energy_tol,
        "max_ticks": s.max_ticks,
        "seed": s.seed,
        "channels": channels,
        "emitters": emitters,
        "absorbers": absorbers,
        "detectors": detectors,
    })
}

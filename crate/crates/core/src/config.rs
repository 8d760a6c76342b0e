//! Project configuration files.
//!
//! A configuration is a JSON document with one localization function and
//! optional candidate systems, simulation and tabulation settings. Units are
//! implicit SI: meters, radians, seconds and hertz. Intervals are
//! `[lo, hi]` arrays where `null` marks an unbounded side.
//!
//! ```json
//! {
//!   "function": {
//!     "name": "...", "entity": "...", "localization_type": "absolute",
//!     "dof": ["x", "y", "z"],
//!     "interest_space": {"x": [0, 1.8], "y": [0, 1.2], "z": [0, 0.9]},
//!     "motion_space": {"x": [0.4, 1.4], "y": [0.55, 0.65], "z": [0.15, 0.15]},
//!     "safety_margin": {"x": 0.1, "y": 0.05, "z": 0},
//!     "reference_basis": "ground_truth",
//!     "confidence": {"sigma": 4},
//!     "max_velocity": {"x": 0.1, "y": 0.7, "z": 0.1},
//!     "realtime_required": false,
//!     "transform_L_to_I": {"translation": [0, 0, 0], "yaw_offset": 0}
//!   },
//!   "derive": {"update": {"type": "periodic", "rate_hz": 2.0}, "latency_s": 0},
//!   "ils": [{"name": "...", "accuracy": {"x": 0.25, "y": 0.15, "z": 0.1, "confidence": {"sigma": 4}},
//!            "update": {"type": "periodic", "rate_hz": 2.0}, "latency_s": 0}],
//!   "simulation": {"trials": 100, "seed": 42, "trajectory": "worst_case", "cycles": 200,
//!                  "update": {"type": "periodic", "rate_hz": 2.0}, "latency_s": 0},
//!   "tabulate": {"start_s": 0.1, "stop_s": 0.6, "step_s": 0.1}
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::requirements::{LocalizationFunctionSpec, LocalizationType};
use crate::spatial::{requirement_margin, Axis, AxisSpace, DofMask, PerAxis, RigidTransform, SpatialError};
use crate::uncertainty::{ConfidenceLevel, ErrorPercentiles, IlsSpec, StaticBasis, UpdateModel, VelocityBound};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: impl fmt::Display, message: impl fmt::Display) -> Self {
        ConfigError::Invalid { path: path.to_string(), message: message.to_string() }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax(_) => None,
            ConfigError::Schema { path, .. } | ConfigError::Invalid { path, .. } => Some(path),
        }
    }
}

// ---- document layer: mirrors the JSON shape exactly ----

pub type RawInterval = [Option<f64>; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub function: RawFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derive: Option<RawDerive>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ils: Vec<RawIls>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<RawSimulation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulate: Option<RawGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFunction {
    pub name: String,
    pub entity: String,
    pub localization_type: RawLocalizationType,
    pub dof: Vec<String>,
    pub interest_space: BTreeMap<String, RawInterval>,
    pub motion_space: BTreeMap<String, RawInterval>,
    pub safety_margin: BTreeMap<String, f64>,
    pub reference_basis: RawBasis,
    pub confidence: RawConfidence,
    pub max_velocity: BTreeMap<String, f64>,
    pub realtime_required: bool,
    #[serde(rename = "transform_L_to_I")]
    pub transform_l_to_i: RawTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawLocalizationType {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawBasis {
    GroundTruth,
    SameSystemMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfidence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percentile: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTransform {
    pub translation: [f64; 3],
    pub yaw_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawUpdate {
    Periodic { rate_hz: f64 },
    OnRequest,
    OnEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPercentiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
    pub confidence: RawConfidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIls {
    pub name: String,
    pub accuracy: RawPercentiles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeatability: Option<RawPercentiles>,
    pub update: RawUpdate,
    pub latency_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDerive {
    pub update: RawUpdate,
    #[serde(default)]
    pub latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw_percentile: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    WorstCase,
    Random,
}

fn default_mode() -> TrajectoryMode {
    TrajectoryMode::WorstCase
}

fn default_cycles() -> u64 {
    200
}

fn default_waypoints() -> u64 {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSimulation {
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub trajectory: TrajectoryMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update: Option<RawUpdate>,
    #[serde(default)]
    pub latency_s: f64,
    #[serde(default = "default_cycles")]
    pub cycles: u64,
    #[serde(default = "default_waypoints")]
    pub waypoints: u64,
    /// Name of an `ils` entry whose accuracy, update model and latency drive the noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ils: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub start_s: f64,
    pub stop_s: f64,
    pub step_s: f64,
}

// ---- validated layer ----

#[derive(Debug, Clone, PartialEq)]
pub struct DeriveSettings {
    pub update: UpdateModel,
    pub latency_s: f64,
    pub yaw_percentile: Option<f64>,
}

/// Noise and timing source for simulations.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    /// Budgets derived from the function itself, with this update model.
    Derived { update: UpdateModel, latency_s: f64 },
    /// Index into [`ProjectConfig::ils`].
    Ils(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub trials: u64,
    pub seed: u64,
    pub trajectory: TrajectoryMode,
    pub cycles: u64,
    pub waypoints: u64,
    pub source: NoiseSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub start_s: f64,
    pub stop_s: f64,
    pub step_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectConfig {
    pub function: LocalizationFunctionSpec,
    pub derive: Option<DeriveSettings>,
    pub ils: Vec<IlsSpec>,
    pub simulation: Option<SimulationSettings>,
    pub tabulate: Option<GridSettings>,
}

/// Parses and validates a configuration document.
pub fn parse_config(bytes: &[u8]) -> Result<ProjectConfig, ConfigError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ConfigError::Syntax(format!("invalid UTF-8: {e}")))?;
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            ConfigError::Syntax(inner.to_string())
        } else {
            ConfigError::Schema { path, message: inner.to_string() }
        }
    })?;
    de.end().map_err(|e| ConfigError::Syntax(e.to_string()))?;
    ProjectConfig::from_raw(&raw)
}

fn axis_key(path: &str, key: &str) -> Result<Axis, ConfigError> {
    Axis::from_name(key).ok_or_else(|| ConfigError::invalid(format!("{path}.{key}"), "unknown axis (expected x, y, z or yaw)"))
}

fn finite(path: impl fmt::Display, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(path, "must be finite"))
    }
}

fn nonneg(path: impl fmt::Display, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(path, format!("must be nonnegative, got {v}")))
    }
}

fn parse_space(path: &str, map: &BTreeMap<String, RawInterval>) -> Result<AxisSpace, ConfigError> {
    let mut space = AxisSpace::new();
    for (key, [lo, hi]) in map {
        let axis = axis_key(path, key)?;
        let lo = lo.unwrap_or(f64::NEG_INFINITY);
        let hi = hi.unwrap_or(f64::INFINITY);
        space = space
            .with_axis(axis, lo, hi)
            .map_err(|e| ConfigError::invalid(format!("{path}.{key}"), e))?;
    }
    Ok(space)
}

fn parse_values(path: &str, map: &BTreeMap<String, f64>) -> Result<PerAxis<f64>, ConfigError> {
    let mut out = PerAxis::new();
    for (key, v) in map {
        let axis = axis_key(path, key)?;
        out.set(axis, nonneg(format!("{path}.{key}"), *v)?);
    }
    Ok(out)
}

fn require_axes(path: &str, dof: &DofMask, has: impl Fn(Axis) -> bool) -> Result<(), ConfigError> {
    match dof.axes().find(|a| !has(*a)) {
        Some(axis) => Err(ConfigError::invalid(path, format!("missing axis {axis}"))),
        None => Ok(()),
    }
}

fn parse_confidence(path: &str, raw: &RawConfidence) -> Result<ConfidenceLevel, ConfigError> {
    match (raw.sigma, raw.percentile) {
        (Some(s), None) => {
            ConfidenceLevel::sigma(s).map_err(|e| ConfigError::invalid(format!("{path}.sigma"), e))
        }
        (None, Some(p)) => {
            ConfidenceLevel::percentile(p).map_err(|e| ConfigError::invalid(format!("{path}.percentile"), e))
        }
        _ => Err(ConfigError::invalid(path, "exactly one of \"sigma\" or \"percentile\" is required")),
    }
}

fn confidence_to_raw(c: &ConfidenceLevel) -> RawConfidence {
    match *c {
        ConfidenceLevel::Sigma(s) => RawConfidence { sigma: Some(s), percentile: None },
        ConfidenceLevel::Percentile(p) => RawConfidence { sigma: None, percentile: Some(p) },
    }
}

fn parse_update(path: &str, raw: &RawUpdate) -> Result<UpdateModel, ConfigError> {
    match *raw {
        RawUpdate::Periodic { rate_hz } => {
            UpdateModel::periodic(rate_hz).map_err(|e| ConfigError::invalid(format!("{path}.rate_hz"), e))
        }
        RawUpdate::OnRequest => Ok(UpdateModel::OnRequest),
        RawUpdate::OnEvent => Ok(UpdateModel::OnEvent),
    }
}

fn update_to_raw(u: &UpdateModel) -> RawUpdate {
    match *u {
        UpdateModel::Periodic { rate_hz } => RawUpdate::Periodic { rate_hz },
        UpdateModel::OnRequest => RawUpdate::OnRequest,
        UpdateModel::OnEvent => RawUpdate::OnEvent,
    }
}

fn parse_percentiles(path: &str, raw: &RawPercentiles, dof: &DofMask) -> Result<ErrorPercentiles, ConfigError> {
    let mut values = PerAxis::new();
    for (axis, v) in [(Axis::X, raw.x), (Axis::Y, raw.y), (Axis::Z, raw.z), (Axis::Yaw, raw.yaw)] {
        if let Some(v) = v {
            values.set(axis, nonneg(format!("{path}.{axis}"), v)?);
        }
    }
    require_axes(path, dof, |a| values.has(a))?;
    let confidence = parse_confidence(&format!("{path}.confidence"), &raw.confidence)?;
    ErrorPercentiles::new(values, confidence).map_err(|e| ConfigError::invalid(path, e))
}

fn percentiles_to_raw(p: &ErrorPercentiles) -> RawPercentiles {
    RawPercentiles {
        x: p.get(Axis::X),
        y: p.get(Axis::Y),
        z: p.get(Axis::Z),
        yaw: p.get(Axis::Yaw),
        confidence: confidence_to_raw(&p.confidence()),
    }
}

fn parse_function(raw: &RawFunction) -> Result<LocalizationFunctionSpec, ConfigError> {
    let mut axes = Vec::with_capacity(raw.dof.len());
    for (i, name) in raw.dof.iter().enumerate() {
        let path = format!("function.dof[{i}]");
        axes.push(Axis::from_name(name).ok_or_else(|| ConfigError::invalid(&path, format!("unknown axis \"{name}\"")))?);
    }
    let dof = DofMask::new(&axes).map_err(|e| ConfigError::invalid("function.dof", e))?;

    let interest = parse_space("function.interest_space", &raw.interest_space)?;
    let motion = parse_space("function.motion_space", &raw.motion_space)?;
    let safety = parse_values("function.safety_margin", &raw.safety_margin)?;
    let velocity = parse_values("function.max_velocity", &raw.max_velocity)?;
    require_axes("function.interest_space", &dof, |a| interest.defines(a))?;
    require_axes("function.motion_space", &dof, |a| motion.defines(a))?;
    require_axes("function.safety_margin", &dof, |a| safety.has(a))?;
    require_axes("function.max_velocity", &dof, |a| velocity.has(a))?;

    if let Err(e) = requirement_margin(&interest, &motion, &safety, &dof) {
        return Err(match e {
            SpatialError::NotContained { axis, .. } => ConfigError::invalid(
                format!("function.motion_space.{axis}"),
                format!("not contained in interest_space.{axis}"),
            ),
            SpatialError::NegativeMargin { axis, gap, safety } => ConfigError::invalid(
                format!("function.safety_margin.{axis}"),
                format!("safety margin {safety} exceeds the gap {gap} between motion and interest space"),
            ),
            other => ConfigError::invalid("function", other),
        });
    }

    let t = &raw.transform_l_to_i;
    for (i, v) in t.translation.iter().enumerate() {
        finite(format!("function.transform_L_to_I.translation[{i}]"), *v)?;
    }
    finite("function.transform_L_to_I.yaw_offset", t.yaw_offset)?;
    let transform = RigidTransform::new(t.translation, t.yaw_offset)
        .map_err(|e| ConfigError::invalid("function.transform_L_to_I", e))?;

    Ok(LocalizationFunctionSpec {
        name: raw.name.clone(),
        entity: raw.entity.clone(),
        localization_type: match raw.localization_type {
            RawLocalizationType::Absolute => LocalizationType::Absolute,
            RawLocalizationType::Relative => LocalizationType::Relative,
        },
        dof,
        interest_space: interest,
        motion_space: motion,
        safety_margin: safety,
        reference_basis: match raw.reference_basis {
            RawBasis::GroundTruth => StaticBasis::GroundTruth,
            RawBasis::SameSystemMap => StaticBasis::SameSystemMap,
        },
        confidence: parse_confidence("function.confidence", &raw.confidence)?,
        max_velocity: VelocityBound::new(velocity).map_err(|e| ConfigError::invalid("function.max_velocity", e))?,
        realtime_required: raw.realtime_required,
        transform_l_to_i: transform,
    })
}

fn space_to_raw(space: &AxisSpace) -> BTreeMap<String, RawInterval> {
    let bound = |v: f64| if v.is_finite() { Some(v) } else { None };
    space
        .intervals()
        .iter()
        .map(|(axis, iv)| (axis.name().to_string(), [bound(iv.lo()), bound(iv.hi())]))
        .collect()
}

fn values_to_raw(values: &PerAxis<f64>) -> BTreeMap<String, f64> {
    values.iter().map(|(a, v)| (a.name().to_string(), v)).collect()
}

fn function_to_raw(f: &LocalizationFunctionSpec) -> RawFunction {
    RawFunction {
        name: f.name.clone(),
        entity: f.entity.clone(),
        localization_type: match f.localization_type {
            LocalizationType::Absolute => RawLocalizationType::Absolute,
            LocalizationType::Relative => RawLocalizationType::Relative,
        },
        dof: f.dof.axes().map(|a| a.name().to_string()).collect(),
        interest_space: space_to_raw(&f.interest_space),
        motion_space: space_to_raw(&f.motion_space),
        safety_margin: values_to_raw(&f.safety_margin),
        reference_basis: match f.reference_basis {
            StaticBasis::GroundTruth => RawBasis::GroundTruth,
            StaticBasis::SameSystemMap => RawBasis::SameSystemMap,
        },
        confidence: confidence_to_raw(&f.confidence),
        max_velocity: values_to_raw(f.max_velocity.values()),
        realtime_required: f.realtime_required,
        transform_l_to_i: RawTransform {
            translation: f.transform_l_to_i.translation,
            yaw_offset: f.transform_l_to_i.yaw_offset,
        },
    }
}

impl ProjectConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let function = parse_function(&raw.function)?;
        let dof = function.dof;

        let derive = raw
            .derive
            .as_ref()
            .map(|d| -> Result<_, ConfigError> {
                Ok(DeriveSettings {
                    update: parse_update("derive.update", &d.update)?,
                    latency_s: nonneg("derive.latency_s", d.latency_s)?,
                    yaw_percentile: d.yaw_percentile.map(|y| nonneg("derive.yaw_percentile", y)).transpose()?,
                })
            })
            .transpose()?;

        let mut ils = Vec::with_capacity(raw.ils.len());
        for (i, entry) in raw.ils.iter().enumerate() {
            let path = format!("ils[{i}]");
            if raw.ils[..i].iter().any(|e| e.name == entry.name) {
                return Err(ConfigError::invalid(format!("{path}.name"), format!("duplicate ILS name \"{}\"", entry.name)));
            }
            let accuracy = parse_percentiles(&format!("{path}.accuracy"), &entry.accuracy, &dof)?;
            let repeatability = entry
                .repeatability
                .as_ref()
                .map(|r| parse_percentiles(&format!("{path}.repeatability"), r, &dof))
                .transpose()?;
            let update = parse_update(&format!("{path}.update"), &entry.update)?;
            let latency = nonneg(format!("{path}.latency_s"), entry.latency_s)?;
            let spec = IlsSpec::new(entry.name.clone(), accuracy, repeatability, update, latency)
                .map_err(|e| ConfigError::invalid(&path, e))?;
            ils.push(spec);
        }

        let simulation = raw
            .simulation
            .as_ref()
            .map(|s| -> Result<_, ConfigError> {
                if s.trials == 0 {
                    return Err(ConfigError::invalid("simulation.trials", "must be at least 1"));
                }
                if s.cycles == 0 {
                    return Err(ConfigError::invalid("simulation.cycles", "must be at least 1"));
                }
                if s.waypoints == 0 {
                    return Err(ConfigError::invalid("simulation.waypoints", "must be at least 1"));
                }
                let source = match (&s.ils, &s.update) {
                    (Some(name), None) => {
                        let idx = ils
                            .iter()
                            .position(|e| &e.name == name)
                            .ok_or_else(|| ConfigError::invalid("simulation.ils", format!("no ILS named \"{name}\"")))?;
                        if !matches!(ils[idx].update, UpdateModel::Periodic { .. }) {
                            return Err(ConfigError::invalid("simulation.ils", "simulation requires a periodic update model"));
                        }
                        NoiseSource::Ils(idx)
                    }
                    (None, Some(update)) => {
                        let update = parse_update("simulation.update", update)?;
                        if !matches!(update, UpdateModel::Periodic { .. }) {
                            return Err(ConfigError::invalid("simulation.update", "simulation requires a periodic update model"));
                        }
                        NoiseSource::Derived { update, latency_s: nonneg("simulation.latency_s", s.latency_s)? }
                    }
                    _ => {
                        return Err(ConfigError::invalid(
                            "simulation",
                            "exactly one of \"ils\" or \"update\" is required",
                        ))
                    }
                };
                Ok(SimulationSettings {
                    trials: s.trials,
                    seed: s.seed,
                    trajectory: s.trajectory,
                    cycles: s.cycles,
                    waypoints: s.waypoints,
                    source,
                })
            })
            .transpose()?;

        let tabulate = raw
            .tabulate
            .map(|g| -> Result<_, ConfigError> {
                let start_s = nonneg("tabulate.start_s", g.start_s)?;
                let stop_s = nonneg("tabulate.stop_s", g.stop_s)?;
                let step_s = nonneg("tabulate.step_s", g.step_s)?;
                if step_s == 0.0 {
                    return Err(ConfigError::invalid("tabulate.step_s", "must be positive"));
                }
                if stop_s < start_s {
                    return Err(ConfigError::invalid("tabulate.stop_s", "must not be below start_s"));
                }
                Ok(GridSettings { start_s, stop_s, step_s })
            })
            .transpose()?;

        Ok(ProjectConfig { function, derive, ils, simulation, tabulate })
    }

    /// The document form of this configuration; parsing it yields `self` again.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            function: function_to_raw(&self.function),
            derive: self.derive.as_ref().map(|d| RawDerive {
                update: update_to_raw(&d.update),
                latency_s: d.latency_s,
                yaw_percentile: d.yaw_percentile,
            }),
            ils: self
                .ils
                .iter()
                .map(|e| RawIls {
                    name: e.name.clone(),
                    accuracy: percentiles_to_raw(&e.accuracy),
                    repeatability: e.repeatability.as_ref().map(percentiles_to_raw),
                    update: update_to_raw(&e.update),
                    latency_s: e.latency_s,
                })
                .collect(),
            simulation: self.simulation.as_ref().map(|s| {
                let (update, latency_s, ils) = match &s.source {
                    NoiseSource::Derived { update, latency_s } => (Some(update_to_raw(update)), *latency_s, None),
                    NoiseSource::Ils(i) => (None, 0.0, Some(self.ils[*i].name.clone())),
                };
                RawSimulation {
                    trials: s.trials,
                    seed: s.seed,
                    trajectory: s.trajectory,
                    update,
                    latency_s,
                    cycles: s.cycles,
                    waypoints: s.waypoints,
                    ils,
                }
            }),
            tabulate: self.tabulate.map(|g| RawGrid { start_s: g.start_s, stop_s: g.stop_s, step_s: g.step_s }),
        }
    }

    /// Canonical JSON echo (sorted keys, inputs at full precision).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_raw()).expect("config document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::pallet_spec;

    const PALLET: &str = include_str!("../../../fixtures/pallet_booking.json");

    fn with_function_field(key: &str, value: serde_json::Value) -> Vec<u8> {
        let mut doc: serde_json::Value = serde_json::from_str(PALLET).unwrap();
        doc["function"][key] = value;
        serde_json::to_vec(&doc).unwrap()
    }

    #[test]
    fn pallet_fixture_parses() {
        let cfg = parse_config(PALLET.as_bytes()).unwrap();
        assert_eq!(cfg.function, pallet_spec());
        assert!(cfg.derive.is_some());
        assert!(!cfg.ils.is_empty());
        assert!(cfg.simulation.is_some());
        assert!(cfg.tabulate.is_some());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_config(PALLET.as_bytes()).unwrap();
        let echoed = serde_json::to_vec(&cfg.to_json()).unwrap();
        assert_eq!(parse_config(&echoed).unwrap(), cfg);
    }

    #[test]
    fn containment_error_names_axis() {
        let bytes = with_function_field("motion_space", serde_json::json!({"x": [0.4, 1.4], "y": [0.55, 1.5], "z": [0.15, 0.15]}));
        let err = parse_config(&bytes).unwrap_err();
        assert_eq!(err.to_string(), "function.motion_space.y: not contained in interest_space.y");
    }

    #[test]
    fn low_sigma_rejected() {
        let bytes = with_function_field("confidence", serde_json::json!({"sigma": 1.0}));
        let err = parse_config(&bytes).unwrap_err();
        assert_eq!(err.path(), Some("function.confidence.sigma"));
        assert!(err.to_string().contains("1.5"));
    }

    #[test]
    fn missing_axis_in_map() {
        let bytes = with_function_field("max_velocity", serde_json::json!({"x": 0.1, "y": 0.7}));
        let err = parse_config(&bytes).unwrap_err();
        assert_eq!(err.to_string(), "function.max_velocity: missing axis z");
    }

    #[test]
    fn unknown_axis_key() {
        let bytes = with_function_field("safety_margin", serde_json::json!({"x": 0.1, "y": 0.05, "z": 0, "w": 1}));
        assert_eq!(parse_config(&bytes).unwrap_err().path(), Some("function.safety_margin.w"));
    }

    #[test]
    fn wrapping_yaw_rejected() {
        let mut doc: serde_json::Value = serde_json::from_str(PALLET).unwrap();
        doc["function"]["interest_space"]["yaw"] = serde_json::json!([3.0, -3.0]);
        let err = parse_config(&serde_json::to_vec(&doc).unwrap()).unwrap_err();
        assert_eq!(err.path(), Some("function.interest_space.yaw"));
        assert!(err.to_string().contains("wraps"));
    }

    #[test]
    fn schema_errors_carry_path() {
        let bytes = with_function_field("realtime_required", serde_json::json!("no"));
        let err = parse_config(&bytes).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
        assert_eq!(err.path(), Some("function.realtime_required"));

        let err = parse_config(b"{\"function\": ").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(_)));
    }

    #[test]
    fn unbounded_sides_use_null() {
        let bytes = with_function_field(
            "interest_space",
            serde_json::json!({"x": [0.0, null], "y": [null, 1.2], "z": [0, 0.9]}),
        );
        let cfg = parse_config(&bytes).unwrap();
        let x = cfg.function.interest_space.interval(Axis::X).unwrap();
        assert_eq!(x.hi(), f64::INFINITY);
        let echoed = serde_json::to_vec(&cfg.to_json()).unwrap();
        assert_eq!(parse_config(&echoed).unwrap(), cfg);
    }

    #[test]
    fn ils_must_cover_dof() {
        let mut doc: serde_json::Value = serde_json::from_str(PALLET).unwrap();
        doc["ils"][0]["accuracy"] = serde_json::json!({"x": 0.1, "y": 0.1, "confidence": {"sigma": 4}});
        let err = parse_config(&serde_json::to_vec(&doc).unwrap()).unwrap_err();
        assert_eq!(err.to_string(), "ils[0].accuracy: missing axis z");
    }
}

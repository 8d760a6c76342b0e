//! System-performance side of the feasibility inequality: confidence levels,
//! ILS descriptions and the three Uncertainty Space components.

use thiserror::Error;

use crate::normal;
use crate::spatial::{lever_arm_chord, Axis, MarginVector, PerAxis, RigidTransform, SpatialError};

/// Shift applied when converting a Six Sigma level into a long-term
/// retention probability.
pub const SIX_SIGMA_SHIFT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UncertaintyError {
    #[error("percentile confidence must lie strictly between 0 and 1, got {0}")]
    PercentileOutOfRange(f64),
    #[error("sigma level must exceed {SIX_SIGMA_SHIFT} under the shifted convention, got {0}")]
    SigmaTooLow(f64),
    #[error("{what} must be nonnegative and finite, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("update rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("ILS '{0}' carries no repeatability data, required when the interest space is mapped with the same system")]
    MissingRepeatability(String),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

/// Confidence with which a percentile bound holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfidenceLevel {
    /// Probability in `(0, 1)`.
    Percentile(f64),
    /// Six Sigma level, mapped to a probability with the 1.5-sigma shift.
    Sigma(f64),
}

impl ConfidenceLevel {
    pub fn percentile(p: f64) -> Result<Self, UncertaintyError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(UncertaintyError::PercentileOutOfRange(p));
        }
        Ok(Self::Percentile(p))
    }

    pub fn sigma(level: f64) -> Result<Self, UncertaintyError> {
        confidence_from_sigma(level)?;
        Ok(Self::Sigma(level))
    }

    /// Probability that the per-axis absolute error stays within the bound.
    pub fn probability(&self) -> f64 {
        match *self {
            Self::Percentile(p) => p,
            Self::Sigma(s) => normal::cdf(s - SIX_SIGMA_SHIFT),
        }
    }

    /// Expected fraction of estimates violating the bound.
    pub fn false_rate(&self) -> f64 {
        match *self {
            Self::Percentile(p) => 1.0 - p,
            Self::Sigma(s) => normal::survival(s - SIX_SIGMA_SHIFT),
        }
    }

    /// True when a bound quoted at `self` is at least as strict as one at `required`.
    pub fn covers(&self, required: &ConfidenceLevel) -> bool {
        match (self, required) {
            (Self::Sigma(a), Self::Sigma(b)) => a >= b,
            _ => self.probability() >= required.probability(),
        }
    }
}

/// Retention probability `Phi(sigma - 1.5)` of a Six Sigma level.
pub fn confidence_from_sigma(sigma_level: f64) -> Result<f64, UncertaintyError> {
    if !(sigma_level > SIX_SIGMA_SHIFT) || !sigma_level.is_finite() {
        return Err(UncertaintyError::SigmaTooLow(sigma_level));
    }
    Ok(normal::cdf(sigma_level - SIX_SIGMA_SHIFT))
}

/// Per-axis error percentiles at a stated confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPercentiles {
    values: PerAxis<f64>,
    confidence: ConfidenceLevel,
}

impl ErrorPercentiles {
    pub fn new(values: PerAxis<f64>, confidence: ConfidenceLevel) -> Result<Self, UncertaintyError> {
        for (_, v) in values.iter() {
            check_nonneg("percentile", v)?;
        }
        Ok(Self { values, confidence })
    }

    pub fn values(&self) -> &PerAxis<f64> {
        &self.values
    }

    pub fn get(&self, axis: Axis) -> Option<f64> {
        self.values.get(axis)
    }

    pub fn confidence(&self) -> ConfidenceLevel {
        self.confidence
    }

    /// Yaw percentile, or zero when the system quotes none.
    pub fn yaw_or_zero(&self) -> f64 {
        self.values.get(Axis::Yaw).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateModel {
    Periodic { rate_hz: f64 },
    OnRequest,
    OnEvent,
}

impl UpdateModel {
    pub fn periodic(rate_hz: f64) -> Result<Self, UncertaintyError> {
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(UncertaintyError::NonPositiveRate(rate_hz));
        }
        Ok(Self::Periodic { rate_hz })
    }

    /// Time between consecutive updates; zero for request- or event-driven updates.
    pub fn time_gap(&self) -> f64 {
        match *self {
            Self::Periodic { rate_hz } => 1.0 / rate_hz,
            Self::OnRequest | Self::OnEvent => 0.0,
        }
    }
}

/// Which ILS performance figure bounds the Static Uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticBasis {
    /// Interest Space given in ground-truth coordinates: use accuracy.
    GroundTruth,
    /// Interest Space mapped with the same ILS: use repeatability.
    SameSystemMap,
}

/// Performance description of a candidate indoor localization system.
#[derive(Debug, Clone, PartialEq)]
pub struct IlsSpec {
    pub name: String,
    pub accuracy: ErrorPercentiles,
    pub repeatability: Option<ErrorPercentiles>,
    pub update: UpdateModel,
    pub latency_s: f64,
}

impl IlsSpec {
    pub fn new(
        name: impl Into<String>,
        accuracy: ErrorPercentiles,
        repeatability: Option<ErrorPercentiles>,
        update: UpdateModel,
        latency_s: f64,
    ) -> Result<Self, UncertaintyError> {
        check_nonneg("latency_s", latency_s)?;
        Ok(Self { name: name.into(), accuracy, repeatability, update, latency_s })
    }

    pub fn percentiles_for(&self, basis: StaticBasis) -> Result<&ErrorPercentiles, UncertaintyError> {
        match basis {
            StaticBasis::GroundTruth => Ok(&self.accuracy),
            StaticBasis::SameSystemMap => self
                .repeatability
                .as_ref()
                .ok_or_else(|| UncertaintyError::MissingRepeatability(self.name.clone())),
        }
    }
}

/// Maximum speed of the Interest Frame per axis (m/s, rad/s on yaw).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityBound(PerAxis<f64>);

impl VelocityBound {
    pub fn new(values: PerAxis<f64>) -> Result<Self, UncertaintyError> {
        for (_, v) in values.iter() {
            check_nonneg("velocity", v)?;
        }
        Ok(Self(values))
    }

    pub fn get(&self, axis: Axis) -> Option<f64> {
        self.0.get(axis)
    }

    pub fn values(&self) -> &PerAxis<f64> {
        &self.0
    }

    /// Per-axis distance covered in `seconds` at full speed.
    pub fn travel(&self, seconds: f64) -> Result<MarginVector, UncertaintyError> {
        check_nonneg("duration", seconds)?;
        Ok(MarginVector::new(self.0.map(|_, v| v * seconds))?)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, UncertaintyError> {
        Self::new(self.0.map(|_, v| v * factor))
    }
}

fn check_nonneg(what: &'static str, value: f64) -> Result<(), UncertaintyError> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(UncertaintyError::Negative { what, value });
    }
    Ok(())
}

/// Device-frame percentiles moved to the Interest Frame.
///
/// The yaw error acting on the planar lever arm adds the full chord to both
/// x and y, since the direction of the displacement depends on the true yaw.
pub fn static_uncertainty(p: &ErrorPercentiles, t: &RigidTransform) -> Result<MarginVector, UncertaintyError> {
    let chord = lever_arm_chord(t.planar_lever_arm(), p.yaw_or_zero())?;
    let values = p.values().map(|axis, v| match axis {
        Axis::X | Axis::Y => v + chord,
        Axis::Z | Axis::Yaw => v,
    });
    Ok(MarginVector::new(values)?)
}

/// Distance travelled since the last periodic update.
pub fn time_gap_margin(v: &VelocityBound, update: &UpdateModel) -> MarginVector {
    v.travel(update.time_gap())
        .expect("time gap and velocities are nonnegative by construction")
}

/// Distance travelled during system latency, when real-time location matters.
pub fn time_delay_margin(
    v: &VelocityBound,
    latency_s: f64,
    realtime_required: bool,
) -> Result<MarginVector, UncertaintyError> {
    check_nonneg("latency_s", latency_s)?;
    v.travel(if realtime_required { latency_s } else { 0.0 })
}

/// Uncertainty Space: `U_s + TG + TD`.
pub fn uncertainty_space(
    u_s: &MarginVector,
    tg: &MarginVector,
    td: &MarginVector,
) -> Result<MarginVector, UncertaintyError> {
    Ok(u_s.checked_add(tg)?.checked_add(td)?)
}

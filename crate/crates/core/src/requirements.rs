//! Feasibility checking, accuracy-budget solving and the four-step
//! derivation procedure (specify function, Requirement Margin, Uncertainty
//! Space, data requirements).

use std::fmt;

use thiserror::Error;

use crate::spatial::{
    lever_arm_chord, requirement_margin, Axis, AxisSpace, DofMask, MarginVector, PerAxis, RigidTransform,
    SpatialError,
};
use crate::uncertainty::{
    static_uncertainty, time_delay_margin, time_gap_margin, uncertainty_space, ConfidenceLevel, IlsSpec,
    StaticBasis, UncertaintyError, UpdateModel, VelocityBound,
};
use crate::NUMERIC_TOLERANCE;

/// Steps of the derivation procedure, used to label diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcedureStep {
    SpecifyFunction,
    RequirementMargin,
    UncertaintySpace,
    DataRequirements,
}

impl ProcedureStep {
    pub fn letter(self) -> char {
        match self {
            Self::SpecifyFunction => 'A',
            Self::RequirementMargin => 'B',
            Self::UncertaintySpace => 'C',
            Self::DataRequirements => 'D',
        }
    }
}

impl fmt::Display for ProcedureStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            Self::SpecifyFunction => "specify localization function",
            Self::RequirementMargin => "determine requirement margin",
            Self::UncertaintySpace => "estimate uncertainty space",
            Self::DataRequirements => "compute data requirements",
        };
        write!(f, "step {} ({label})", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error("{axis}: motion during time gap and latency ({dynamic}) exceeds the requirement margin ({margin})")]
    InfeasibleTiming { axis: Axis, margin: f64, dynamic: f64 },
    #[error("{axis}: lever-arm displacement {chord} consumes the whole budget {budget}")]
    BudgetExhausted { axis: Axis, budget: f64, chord: f64 },
    #[error("ILS '{ils}' quotes percentiles at confidence {quoted}, below the required {required}")]
    ConfidenceMismatch { ils: String, quoted: f64, required: f64 },
    #[error("tabulation grid must be nonnegative and strictly increasing")]
    InvalidGrid,
    #[error("{step}: {source}")]
    AtStep {
        step: ProcedureStep,
        #[source]
        source: Box<EngineError>,
    },
}

impl EngineError {
    fn at(self, step: ProcedureStep) -> Self {
        EngineError::AtStep { step, source: Box::new(self) }
    }

    /// The procedure step the error was raised in, if labelled.
    pub fn step(&self) -> Option<ProcedureStep> {
        match self {
            EngineError::AtStep { step, .. } => Some(*step),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationType {
    Absolute,
    /// Estimates relative to another entity's frame. The margin arithmetic is
    /// unchanged; the supplied percentiles must be relative-error percentiles.
    Relative,
}

/// Complete description of one localization function.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationFunctionSpec {
    pub name: String,
    pub entity: String,
    pub localization_type: LocalizationType,
    pub dof: DofMask,
    pub interest_space: AxisSpace,
    pub motion_space: AxisSpace,
    pub safety_margin: PerAxis<f64>,
    pub reference_basis: StaticBasis,
    pub confidence: ConfidenceLevel,
    pub max_velocity: VelocityBound,
    pub realtime_required: bool,
    pub transform_l_to_i: RigidTransform,
}

impl LocalizationFunctionSpec {
    /// Checks that every DoF axis is populated everywhere and that the
    /// Motion Space sits inside the Interest Space.
    pub fn validate(&self) -> Result<(), EngineError> {
        for axis in self.dof.axes() {
            self.interest_space.interval(axis)?;
            self.motion_space.interval(axis)?;
            self.safety_margin.get(axis).ok_or(SpatialError::MissingAxis(axis))?;
            self.max_velocity.get(axis).ok_or(SpatialError::MissingAxis(axis))?;
        }
        self.requirement_margin()?;
        Ok(())
    }

    pub fn requirement_margin(&self) -> Result<MarginVector, EngineError> {
        Ok(requirement_margin(&self.interest_space, &self.motion_space, &self.safety_margin, &self.dof)?)
    }

    /// Velocity bound restricted to the function's DoF.
    pub fn velocity(&self) -> Result<VelocityBound, EngineError> {
        Ok(VelocityBound::new(self.max_velocity.values().restrict(&self.dof)?)?)
    }
}

/// Output of the derivation procedure, with its intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRequirements {
    pub requirement_margin: MarginVector,
    pub time_gap_margin: MarginVector,
    pub time_delay_margin: MarginVector,
    pub accuracy_budget_at_interest_frame: MarginVector,
    pub accuracy_budget_at_device_frame: Option<MarginVector>,
    pub time_gap_s: f64,
    pub latency_s: f64,
    pub confidence: ConfidenceLevel,
    pub basis: StaticBasis,
}

/// Outcome of comparing a Requirement Margin with an Uncertainty Space.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub feasible: bool,
    pub per_axis_slack: PerAxis<f64>,
    pub binding_axis: Axis,
}

pub fn check_feasible(r: &MarginVector, u: &MarginVector) -> Result<Verdict, EngineError> {
    if !r.same_axes(u) || r.axes().next().is_none() {
        return Err(SpatialError::AxisMismatch.into());
    }
    // differences within tolerance are rounding noise and count as exactly zero
    let slack = r.values().map(|axis, rv| {
        let s = rv - u.get(axis).unwrap_or(0.0);
        if s.abs() <= NUMERIC_TOLERANCE { 0.0 } else { s }
    });
    let mut binding = None::<(Axis, f64)>;
    for (axis, s) in slack.iter() {
        // strict comparison keeps the first axis in x, y, z, yaw order on ties
        if binding.is_none_or(|(_, best)| s < best) {
            binding = Some((axis, s));
        }
    }
    let (binding_axis, min_slack) = binding.expect("nonempty axis set");
    Ok(Verdict {
        feasible: min_slack >= 0.0,
        per_axis_slack: slack,
        binding_axis,
    })
}

/// Largest static percentile per axis such that `P + v*t_gap + v*t_delay <= R`.
pub fn solve_accuracy_budget(
    r: &MarginVector,
    v: &VelocityBound,
    t_gap_s: f64,
    t_delay_s: f64,
) -> Result<MarginVector, EngineError> {
    let mut out = PerAxis::new();
    for (axis, margin) in r.iter() {
        match budget_cell(margin, v, axis, t_gap_s, t_delay_s)? {
            Ok(b) => out.set(axis, b),
            Err(dynamic) => return Err(EngineError::InfeasibleTiming { axis, margin, dynamic }),
        }
    }
    Ok(MarginVector::new(out)?)
}

/// Inner result: `Ok(budget)` or `Err(dynamic travel)` when the margin is exhausted.
fn budget_cell(
    margin: f64,
    v: &VelocityBound,
    axis: Axis,
    t_gap_s: f64,
    t_delay_s: f64,
) -> Result<Result<f64, f64>, EngineError> {
    for (what, value) in [("t_gap_s", t_gap_s), ("t_delay_s", t_delay_s)] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(UncertaintyError::Negative { what, value }.into());
        }
    }
    let speed = v.get(axis).ok_or(SpatialError::MissingAxis(axis))?;
    let dynamic = speed * t_gap_s + speed * t_delay_s;
    let budget = margin - dynamic;
    if budget < -NUMERIC_TOLERANCE {
        Ok(Err(dynamic))
    } else {
        Ok(Ok(budget.max(0.0)))
    }
}

/// Removes the lever-arm inflation from an Interest Frame budget, giving the
/// translational accuracy the device itself must reach.
pub fn deflate_to_device_frame(
    budget: &MarginVector,
    t: &RigidTransform,
    yaw_percentile: f64,
) -> Result<MarginVector, EngineError> {
    let chord = lever_arm_chord(t.planar_lever_arm(), yaw_percentile)?;
    let mut out = PerAxis::new();
    for (axis, b) in budget.iter() {
        let value = match axis {
            Axis::X | Axis::Y => {
                let d = b - chord;
                if d < -NUMERIC_TOLERANCE {
                    return Err(EngineError::BudgetExhausted { axis, budget: b, chord });
                }
                d.max(0.0)
            }
            Axis::Z | Axis::Yaw => b,
        };
        out.set(axis, value);
    }
    Ok(MarginVector::new(out)?)
}

/// One cell of a trade-off table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetCell {
    Budget(f64),
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffColumn {
    pub t_gap_s: f64,
    pub cells: PerAxis<BudgetCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffTable {
    pub t_delay_s: f64,
    pub columns: Vec<TradeoffColumn>,
}

/// Accuracy budgets for every time gap in `t_gap_grid`.
pub fn tabulate_tradeoff(
    r: &MarginVector,
    v: &VelocityBound,
    t_gap_grid: &[f64],
    t_delay_s: f64,
) -> Result<TradeoffTable, EngineError> {
    let increasing = t_gap_grid.windows(2).all(|w| w[0] < w[1]);
    if !increasing || t_gap_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(EngineError::InvalidGrid);
    }
    let mut columns = Vec::with_capacity(t_gap_grid.len());
    for &t_gap_s in t_gap_grid {
        let mut cells = PerAxis::new();
        for (axis, margin) in r.iter() {
            let cell = match budget_cell(margin, v, axis, t_gap_s, t_delay_s)? {
                Ok(b) => BudgetCell::Budget(b),
                Err(_) => BudgetCell::Infeasible,
            };
            cells.set(axis, cell);
        }
        columns.push(TradeoffColumn { t_gap_s, cells });
    }
    Ok(TradeoffTable { t_delay_s, columns })
}

/// `start, start + step, ...` up to `stop` inclusive.
///
/// Points are computed as `start + i * step` so that rounding does not
/// accumulate along the grid.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, EngineError> {
    if !(step > 0.0) || !(start >= 0.0) || !(stop >= start) || !stop.is_finite() {
        return Err(EngineError::InvalidGrid);
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Runs steps B to D for one localization function and update behaviour.
///
/// `device_yaw_percentile`, when given together with a non-identity
/// transform, also yields the device-frame budget.
pub fn derive_requirements(
    spec: &LocalizationFunctionSpec,
    update: &UpdateModel,
    latency_s: f64,
    device_yaw_percentile: Option<f64>,
) -> Result<DataRequirements, EngineError> {
    spec.validate().map_err(|e| e.at(ProcedureStep::RequirementMargin))?;
    let r = spec.requirement_margin().map_err(|e| e.at(ProcedureStep::RequirementMargin))?;

    let uncertainty = |e: EngineError| e.at(ProcedureStep::UncertaintySpace);
    let v = spec.velocity().map_err(uncertainty)?;
    let tg = time_gap_margin(&v, update);
    let td = time_delay_margin(&v, latency_s, spec.realtime_required)
        .map_err(|e| uncertainty(e.into()))?;
    let time_gap_s = update.time_gap();
    let latency_used = if spec.realtime_required { latency_s } else { 0.0 };

    let compute = |e: EngineError| e.at(ProcedureStep::DataRequirements);
    let budget = solve_accuracy_budget(&r, &v, time_gap_s, latency_used).map_err(compute)?;
    let device = match device_yaw_percentile {
        Some(yaw) if !spec.transform_l_to_i.is_identity() => {
            Some(deflate_to_device_frame(&budget, &spec.transform_l_to_i, yaw).map_err(compute)?)
        }
        _ => None,
    };

    Ok(DataRequirements {
        requirement_margin: r,
        time_gap_margin: tg,
        time_delay_margin: td,
        accuracy_budget_at_interest_frame: budget,
        accuracy_budget_at_device_frame: device,
        time_gap_s,
        latency_s: latency_used,
        confidence: spec.confidence,
        basis: spec.reference_basis,
    })
}

/// Intermediate values behind an ILS suitability verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct IlsAssessment {
    pub requirement_margin: MarginVector,
    pub static_uncertainty: MarginVector,
    pub time_gap_margin: MarginVector,
    pub time_delay_margin: MarginVector,
    pub uncertainty_space: MarginVector,
    pub verdict: Verdict,
}

pub fn assess_ils(spec: &LocalizationFunctionSpec, ils: &IlsSpec) -> Result<IlsAssessment, EngineError> {
    let r = spec.requirement_margin().map_err(|e| e.at(ProcedureStep::RequirementMargin))?;
    let p = ils.percentiles_for(spec.reference_basis)?;
    if !p.confidence().covers(&spec.confidence) {
        return Err(EngineError::ConfidenceMismatch {
            ils: ils.name.clone(),
            quoted: p.confidence().probability(),
            required: spec.confidence.probability(),
        });
    }
    let v = spec.velocity()?;
    let u_s = static_uncertainty(p, &spec.transform_l_to_i)?.restrict(&spec.dof)?;
    let tg = time_gap_margin(&v, &ils.update);
    let td = time_delay_margin(&v, ils.latency_s, spec.realtime_required)?;
    let u = uncertainty_space(&u_s, &tg, &td)?;
    let verdict = check_feasible(&r, &u).map_err(|e| e.at(ProcedureStep::DataRequirements))?;
    Ok(IlsAssessment {
        requirement_margin: r,
        static_uncertainty: u_s,
        time_gap_margin: tg,
        time_delay_margin: td,
        uncertainty_space: u,
        verdict,
    })
}

/// Suitability of `ils` for the localization function.
pub fn check_ils(spec: &LocalizationFunctionSpec, ils: &IlsSpec) -> Result<Verdict, EngineError> {
    Ok(assess_ils(spec, ils)?.verdict)
}

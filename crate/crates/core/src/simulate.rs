//! Monte-Carlo validation of the presence detector.
//!
//! A true trajectory of the Localization Frame is sampled by a periodic
//! localization system. Each estimate is the true pose plus zero-mean
//! Gaussian noise, moved to the Interest Frame and classified against the
//! Interest Space. An estimate stays in effect from its availability
//! (`t_k + latency`) until the next one arrives (`t_{k+1} + latency`); it is
//! judged at the end of that window, where staleness is largest. A false
//! event is an estimate outside the Interest Space while the true Interest
//! Frame pose at that instant lies in the Motion Space. Instants where the
//! truth is outside the Motion Space are excluded from the rates.
//!
//! # Random streams
//!
//! Trial `i` draws from `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(i)`. Every update consumes four standard normal draws
//! (`rand_distr::StandardNormal`) in the order x, y, z, yaw, whether or not
//! the axis is used. Per-trial counts are integers and are summed, so the
//! report does not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::normal;
use crate::requirements::{derive_requirements, EngineError, LocalizationFunctionSpec};
use crate::spatial::{
    contains, normalize_angle, transform_pose, Axis, AxisSpace, PerAxis, Pose, RigidTransform, SpatialError,
};
use crate::uncertainty::{UpdateModel, VelocityBound};

/// Relative slack allowed when checking trajectory speeds against a bound.
const SPEED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("confidence must lie strictly between 0 and 1, got {0}")]
    ConfidenceOutOfRange(f64),
    #[error("{what} must be nonnegative and finite, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("trajectory needs at least one waypoint")]
    EmptyTrajectory,
    #[error("waypoint times must be finite and strictly increasing (index {0})")]
    NonIncreasingTime(usize),
    #[error("time {t} outside trajectory span [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
    #[error("{axis}: trajectory speed {speed} exceeds bound {bound} between waypoints {index} and {next}", next = index + 1)]
    SpeedExceeded { axis: Axis, speed: f64, bound: f64, index: usize },
    #[error("simulation supports periodic updates only")]
    NonPeriodicUpdate,
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("cycle count must be at least 1")]
    NoCycles,
    #[error("infeasible specification: {0}")]
    Infeasible(#[source] EngineError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

/// `z` with `P(-z <= N(0,1) <= z) = confidence`.
pub fn two_sided_z(confidence: f64) -> Result<f64, SimError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(SimError::ConfidenceOutOfRange(confidence));
    }
    Ok(normal::quantile(0.5 + confidence / 2.0))
}

/// Gaussian standard deviation whose absolute value stays below
/// `percentile_value` with probability `confidence`.
pub fn calibrate_sigma(percentile_value: f64, confidence: f64) -> Result<f64, SimError> {
    if !(percentile_value >= 0.0) || !percentile_value.is_finite() {
        return Err(SimError::Negative { what: "percentile", value: percentile_value });
    }
    Ok(percentile_value / two_sided_z(confidence)?)
}

/// Timed waypoints of the Localization Frame, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<(f64, Pose)>,
}

impl Trajectory {
    pub fn new(waypoints: Vec<(f64, Pose)>) -> Result<Self, SimError> {
        if waypoints.is_empty() {
            return Err(SimError::EmptyTrajectory);
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !w.0.is_finite() || (i > 0 && w.0 <= waypoints[i - 1].0) {
                return Err(SimError::NonIncreasingTime(i));
            }
        }
        Ok(Self { waypoints })
    }

    pub fn waypoints(&self) -> &[(f64, Pose)] {
        &self.waypoints
    }

    pub fn start(&self) -> f64 {
        self.waypoints[0].0
    }

    pub fn end(&self) -> f64 {
        self.waypoints[self.waypoints.len() - 1].0
    }

    /// Pose at time `t`; yaw follows the shorter arc between waypoints.
    pub fn pose_at(&self, t: f64) -> Result<Pose, SimError> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(SimError::TimeOutOfRange { t, start, end });
        }
        // first waypoint with time >= t
        let idx = self.waypoints.partition_point(|(wt, _)| *wt < t);
        let (t1, p1) = self.waypoints[idx];
        if t1 == t {
            return Ok(p1);
        }
        let (t0, p0) = self.waypoints[idx - 1];
        let f = (t - t0) / (t1 - t0);
        let lerp = |a: f64, b: f64| a + (b - a) * f;
        Ok(Pose {
            x: lerp(p0.x, p1.x),
            y: lerp(p0.y, p1.y),
            z: lerp(p0.z, p1.z),
            yaw: normalize_angle(p0.yaw + normalize_angle(p1.yaw - p0.yaw) * f),
        })
    }

    /// Verifies that the Interest Frame moves no faster than `bound` on
    /// the axes the bound defines.
    pub fn check_speed(&self, bound: &VelocityBound, t: &RigidTransform) -> Result<(), SimError> {
        for (index, pair) in self.waypoints.windows(2).enumerate() {
            let (t0, a) = (pair[0].0, transform_pose(t, &pair[0].1));
            let (t1, b) = (pair[1].0, transform_pose(t, &pair[1].1));
            let dt = t1 - t0;
            for (axis, limit) in bound.values().iter() {
                let delta = match axis {
                    Axis::Yaw => normalize_angle(b.yaw - a.yaw),
                    _ => b.coordinate(axis) - a.coordinate(axis),
                };
                let speed = delta.abs() / dt;
                if speed > limit * (1.0 + SPEED_TOLERANCE) + 1e-12 {
                    return Err(SimError::SpeedExceeded { axis, speed, bound: limit, index });
                }
            }
        }
        Ok(())
    }
}

/// Zero-mean Gaussian noise, independent per axis and per update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    sigma: [f64; 4],
}

impl NoiseModel {
    pub fn new(sigma: PerAxis<f64>) -> Result<Self, SimError> {
        let mut out = [0.0; 4];
        for (axis, s) in sigma.iter() {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(SimError::Negative { what: "noise sigma", value: s });
            }
            out[axis.index()] = s;
        }
        Ok(Self { sigma: out })
    }

    /// Noise whose per-axis percentile at `confidence` equals `percentiles`.
    pub fn calibrated(percentiles: &PerAxis<f64>, confidence: f64) -> Result<Self, SimError> {
        let mut sigma = PerAxis::new();
        for (axis, p) in percentiles.iter() {
            sigma.set(axis, calibrate_sigma(p, confidence)?);
        }
        Self::new(sigma)
    }

    pub fn sigma(&self, axis: Axis) -> f64 {
        self.sigma[axis.index()]
    }

    pub fn with_sigma(mut self, axis: Axis, sigma: f64) -> Result<Self, SimError> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(SimError::Negative { what: "noise sigma", value: sigma });
        }
        self.sigma[axis.index()] = sigma;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub function: LocalizationFunctionSpec,
    pub noise: NoiseModel,
    pub update: UpdateModel,
    pub latency_s: f64,
    pub trajectory: Trajectory,
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.function.validate().map_err(SimError::Infeasible)?;
        if self.trials == 0 {
            return Err(SimError::NoTrials);
        }
        if !matches!(self.update, UpdateModel::Periodic { .. }) {
            return Err(SimError::NonPeriodicUpdate);
        }
        if !(self.latency_s >= 0.0) || !self.latency_s.is_finite() {
            return Err(SimError::Negative { what: "latency_s", value: self.latency_s });
        }
        self.trajectory
            .check_speed(&self.function.max_velocity, &self.function.transform_l_to_i)
    }

    fn time_gap(&self) -> f64 {
        self.update.time_gap()
    }

    /// Measurement instant of update `k`.
    fn update_instant(&self, k: u64) -> f64 {
        update_instant(self.trajectory.start(), self.time_gap(), k)
    }
}

fn update_instant(start: f64, time_gap: f64, k: u64) -> f64 {
    start + k as f64 * time_gap
}

/// Aggregated outcome of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub trials: u64,
    pub seed: u64,
    pub updates_total: u64,
    /// Updates whose truth was inside the Motion Space when judged.
    pub updates_classified: u64,
    pub false_outside_count: PerAxis<u64>,
    pub false_outside_per_axis: PerAxis<f64>,
    pub false_outside_joint: f64,
    pub confidence_target: f64,
    pub standard_error_per_axis: PerAxis<f64>,
    /// `D * (1 - C)`, the union bound on the joint rate; context only.
    pub joint_union_bound: f64,
    pub pass: bool,
}

impl SimReport {
    /// Per-axis threshold `(1 - C) + 3 SE`.
    pub fn threshold(&self, axis: Axis) -> Option<f64> {
        let se = self.standard_error_per_axis.get(axis)?;
        Some((1.0 - self.confidence_target) + 3.0 * se)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    total: u64,
    classified: u64,
    false_axis: [u64; 4],
    false_joint: u64,
}

impl Counts {
    fn merge(mut self, other: Counts) -> Counts {
        self.total += other.total;
        self.classified += other.classified;
        for i in 0..4 {
            self.false_axis[i] += other.false_axis[i];
        }
        self.false_joint += other.false_joint;
        self
    }
}

fn run_trial(cfg: &SimConfig, trial: u64) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    let spec = &cfg.function;
    let t_l_i = &spec.transform_l_to_i;
    let end = cfg.trajectory.end();
    let mut counts = Counts::default();
    let mut k = 0u64;
    loop {
        let judged_at = cfg.update_instant(k + 1) + cfg.latency_s;
        if judged_at > end {
            break;
        }
        let measured_at = cfg.update_instant(k);
        let truth_l = cfg.trajectory.pose_at(measured_at).expect("instant inside trajectory");
        let mut estimate_l = truth_l;
        for axis in Axis::ALL {
            let draw: f64 = rng.sample(StandardNormal);
            let noisy = estimate_l.coordinate(axis) + cfg.noise.sigma(axis) * draw;
            estimate_l.set_coordinate(axis, noisy);
        }
        let estimate = transform_pose(t_l_i, &estimate_l);
        let truth_now = transform_pose(t_l_i, &cfg.trajectory.pose_at(judged_at).expect("instant inside trajectory"));

        counts.total += 1;
        k += 1;
        if !contains(&spec.motion_space, &truth_now, &spec.dof).expect("validated spec") {
            continue;
        }
        counts.classified += 1;
        let mut any = false;
        for axis in spec.dof.axes() {
            let interval = spec.interest_space.interval(axis).expect("validated spec");
            if !interval.contains(estimate.coordinate(axis)) {
                counts.false_axis[axis.index()] += 1;
                any = true;
            }
        }
        counts.false_joint += u64::from(any);
    }
    counts
}

/// Runs every trial and aggregates the false-event statistics.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let counts = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, trial))
        .reduce(Counts::default, Counts::merge);

    let spec = &cfg.function;
    let target = spec.confidence.probability();
    let expected_false = spec.confidence.false_rate();
    let n = counts.classified;
    let rate = |c: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    let se = if n == 0 { 0.0 } else { (expected_false * (1.0 - expected_false) / n as f64).sqrt() };

    let mut false_count = PerAxis::new();
    let mut false_rate = PerAxis::new();
    let mut standard_error = PerAxis::new();
    let mut pass = true;
    for axis in spec.dof.axes() {
        let c = counts.false_axis[axis.index()];
        false_count.set(axis, c);
        false_rate.set(axis, rate(c));
        standard_error.set(axis, se);
        pass &= rate(c) <= expected_false + 3.0 * se;
    }
    Ok(SimReport {
        trials: cfg.trials,
        seed: cfg.seed,
        updates_total: counts.total,
        updates_classified: n,
        false_outside_count: false_count,
        false_outside_per_axis: false_rate,
        false_outside_joint: rate(counts.false_joint),
        confidence_target: target,
        standard_error_per_axis: standard_error,
        joint_union_bound: spec.dof.len() as f64 * expected_false,
        pass,
    })
}

/// Where the adversarial trajectory sits on one axis.
struct AxisPlan {
    /// On the Motion Space boundary nearest the Interest Space boundary.
    boundary: f64,
    /// Where the entity is when measured: `v * (t_g + t_d)` further out.
    outer: f64,
}

fn axis_plan(spec: &LocalizationFunctionSpec, axis: Axis, travel: f64, nudge: f64) -> Result<AxisPlan, SimError> {
    let i = spec.interest_space.interval(axis)?;
    let m = spec.motion_space.interval(axis)?;
    let gap_lo = if i.lo() == f64::NEG_INFINITY { f64::INFINITY } else { m.lo() - i.lo() };
    let gap_hi = if i.hi() == f64::INFINITY { f64::INFINITY } else { i.hi() - m.hi() };
    let plan = if gap_lo.is_finite() && gap_lo <= gap_hi + crate::NUMERIC_TOLERANCE {
        let boundary = m.lo() + nudge.min(m.width() / 2.0);
        AxisPlan { boundary, outer: m.lo() - travel }
    } else if gap_hi.is_finite() {
        let boundary = m.hi() - nudge.min(m.width() / 2.0);
        AxisPlan { boundary, outer: m.hi() + travel }
    } else {
        // no reachable Interest Space boundary on this axis
        let anchor = [m.lo(), m.hi()].into_iter().find(|v| v.is_finite()).unwrap_or(0.0);
        AxisPlan { boundary: anchor, outer: anchor }
    };
    Ok(plan)
}

/// Adversarial trajectory for `cycles` worst-case updates.
///
/// Each cycle starts at a measurement instant with the entity
/// `v * (t_g + t_d)` beyond the Motion Space boundary, moves inward at full
/// speed and reaches the boundary exactly when that estimate is superseded,
/// then returns outward. Only the first update of each cycle is judged with
/// the truth inside the Motion Space.
pub fn worst_case_trajectory(
    spec: &LocalizationFunctionSpec,
    update: &UpdateModel,
    latency_s: f64,
    cycles: u64,
) -> Result<Trajectory, SimError> {
    if cycles == 0 {
        return Err(SimError::NoCycles);
    }
    let UpdateModel::Periodic { .. } = update else {
        return Err(SimError::NonPeriodicUpdate);
    };
    if !(latency_s >= 0.0) || !latency_s.is_finite() {
        return Err(SimError::Negative { what: "latency_s", value: latency_s });
    }
    let time_gap = update.time_gap();
    let half_period = time_gap + latency_s;
    let steps_per_cycle = ((2.0 * half_period / time_gap) - 1e-9).ceil().max(2.0) as u64;
    let t_l_i = spec.transform_l_to_i;
    // rounding through a non-trivial transform must not push the peak out of the Motion Space
    let nudge = if t_l_i.is_identity() { 0.0 } else { 1e-9 };

    let v = spec.velocity().map_err(SimError::Infeasible)?;
    let mut inner = Pose::default();
    let mut outer = Pose::default();
    for axis in spec.dof.axes() {
        let speed = v.get(axis).unwrap_or(0.0);
        let plan = axis_plan(spec, axis, speed * half_period, nudge)?;
        inner.set_coordinate(axis, plan.boundary);
        outer.set_coordinate(axis, plan.outer);
    }
    let inverse = t_l_i.inverse();
    let to_device = |p: &Pose| transform_pose(&inverse, p);
    let (inner_l, outer_l) = (to_device(&inner), to_device(&outer));

    let mut waypoints: Vec<(f64, Pose)> = Vec::new();
    let push = |t: f64, p: Pose, w: &mut Vec<(f64, Pose)>| {
        if w.last().is_none_or(|(last, _)| t > *last) {
            w.push((t, p));
        }
    };
    for cycle in 0..cycles {
        let first = cycle * steps_per_cycle;
        let trough = update_instant(0.0, time_gap, first);
        let peak = update_instant(0.0, time_gap, first + 1) + latency_s;
        let back = peak + half_period;
        let next_trough = update_instant(0.0, time_gap, first + steps_per_cycle);
        push(trough, outer_l, &mut waypoints);
        push(peak, inner_l, &mut waypoints);
        if back < next_trough || cycle + 1 == cycles {
            push(back, outer_l, &mut waypoints);
        }
    }
    Trajectory::new(waypoints)
}

/// Runs the adversarial experiment: worst-case trajectory, noise calibrated
/// so that each axis of `ils_percentiles` is met at the function's
/// confidence, and the resulting pass/fail statistics.
#[allow(clippy::too_many_arguments)]
pub fn worst_case_experiment(
    spec: &LocalizationFunctionSpec,
    ils_percentiles: &PerAxis<f64>,
    update: &UpdateModel,
    latency_s: f64,
    cycles: u64,
    trials: u64,
    seed: u64,
) -> Result<SimReport, SimError> {
    derive_requirements(spec, update, latency_s, None).map_err(SimError::Infeasible)?;
    let noise = NoiseModel::calibrated(ils_percentiles, spec.confidence.probability())?;
    worst_case_with_noise(spec, noise, update, latency_s, cycles, trials, seed)
}

/// [`worst_case_experiment`] with an explicit noise model.
pub fn worst_case_with_noise(
    spec: &LocalizationFunctionSpec,
    noise: NoiseModel,
    update: &UpdateModel,
    latency_s: f64,
    cycles: u64,
    trials: u64,
    seed: u64,
) -> Result<SimReport, SimError> {
    let latency_used = if spec.realtime_required { latency_s } else { 0.0 };
    let trajectory = worst_case_trajectory(spec, update, latency_used, cycles)?;
    run_simulation(&SimConfig {
        function: spec.clone(),
        noise,
        update: *update,
        latency_s: latency_used,
        trajectory,
        trials,
        seed,
    })
}

/// Random trajectory whose waypoints lie inside `motion` on the DoF axes,
/// with segment durations long enough to respect the velocity bound.
pub fn random_motion_trajectory<R: Rng>(
    spec: &LocalizationFunctionSpec,
    waypoints: usize,
    min_segment_s: f64,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    if waypoints == 0 {
        return Err(SimError::EmptyTrajectory);
    }
    let v = spec.velocity().map_err(SimError::Infeasible)?;
    let inverse = spec.transform_l_to_i.inverse();
    let sample_in = |space: &AxisSpace, rng: &mut R| -> Result<Pose, SimError> {
        let mut p = Pose::default();
        for axis in spec.dof.axes() {
            let iv = space.interval(axis)?;
            let (lo, hi) = match (iv.lo().is_finite(), iv.hi().is_finite()) {
                (true, true) => (iv.lo(), iv.hi()),
                (true, false) => (iv.lo(), iv.lo() + 1.0),
                (false, true) => (iv.hi() - 1.0, iv.hi()),
                (false, false) => (-1.0, 1.0),
            };
            let u: f64 = rng.random();
            p.set_coordinate(axis, lo + (hi - lo) * u);
        }
        Ok(p)
    };
    let mut out = Vec::with_capacity(waypoints);
    let mut t = 0.0;
    let mut prev: Option<Pose> = None;
    for _ in 0..waypoints {
        let p = sample_in(&spec.motion_space, rng)?;
        if let Some(q) = prev {
            let mut dt = min_segment_s;
            for axis in spec.dof.axes() {
                let delta = match axis {
                    Axis::Yaw => normalize_angle(p.yaw - q.yaw),
                    _ => p.coordinate(axis) - q.coordinate(axis),
                };
                let speed = v.get(axis).unwrap_or(0.0);
                if delta != 0.0 {
                    // a zero speed bound leaves the axis frozen at its first value
                    dt = dt.max(if speed > 0.0 { delta.abs() / speed } else { 0.0 });
                }
            }
            t += dt;
        }
        let mut p = p;
        if let Some(q) = prev {
            for axis in spec.dof.axes() {
                if v.get(axis).unwrap_or(0.0) == 0.0 {
                    p.set_coordinate(axis, q.coordinate(axis));
                }
            }
        }
        out.push((t, transform_pose(&inverse, &p)));
        prev = Some(p);
    }
    Trajectory::new(out)
}

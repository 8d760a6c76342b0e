//! Poses, axis-aligned spaces, rigid transforms and Requirement Margins.
//!
//! Spaces are products of closed intervals, one per degree of freedom. A
//! boundary point counts as inside. Interval sides may be unbounded, in which
//! case the distance to that side is `+inf`.

mod axis;

use std::f64::consts::PI;

use thiserror::Error;

pub use axis::{Axis, DofMask, MarginVector, PerAxis};

use crate::NUMERIC_TOLERANCE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("axis {0} is not defined")]
    MissingAxis(Axis),
    #[error("degree-of-freedom set is empty")]
    EmptyDof,
    #[error("axis {0} listed twice")]
    DuplicateAxis(Axis),
    #[error("axis sets differ")]
    AxisMismatch,
    #[error("{axis}: component {value} is negative")]
    NegativeComponent { axis: Axis, value: f64 },
    #[error("invalid interval [{lo}, {hi}]: {reason}")]
    InvalidInterval { lo: f64, hi: f64, reason: &'static str },
    #[error("{axis}: motion space [{motion_lo}, {motion_hi}] not contained in interest space [{interest_lo}, {interest_hi}]")]
    NotContained {
        axis: Axis,
        motion_lo: f64,
        motion_hi: f64,
        interest_lo: f64,
        interest_hi: f64,
    },
    #[error("{axis}: safety margin {safety} exceeds the geometric gap {gap}")]
    NegativeMargin { axis: Axis, gap: f64, safety: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{what} must be nonnegative, got {value}")]
    Domain { what: &'static str, value: f64 },
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Closed interval `[lo, hi]`; either side may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, SpatialError> {
        if lo.is_nan() || hi.is_nan() {
            return Err(SpatialError::InvalidInterval { lo, hi, reason: "NaN bound" });
        }
        if lo > hi {
            return Err(SpatialError::InvalidInterval { lo, hi, reason: "lo > hi" });
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(SpatialError::InvalidInterval { lo, hi, reason: "empty interval" });
        }
        Ok(Self { lo, hi })
    }

    /// Yaw interval inside `[-pi, pi]` that does not wrap across `±pi`.
    pub fn yaw(lo: f64, hi: f64) -> Result<Self, SpatialError> {
        if lo > hi {
            return Err(SpatialError::InvalidInterval {
                lo,
                hi,
                reason: "yaw interval wraps across ±pi (lo > hi), which is not supported",
            });
        }
        if !(lo.is_finite() && hi.is_finite()) || lo < -PI || hi > PI {
            return Err(SpatialError::InvalidInterval { lo, hi, reason: "yaw bounds must lie in [-pi, pi]" });
        }
        Self::new(lo, hi)
    }

    pub fn point(v: f64) -> Result<Self, SpatialError> {
        Self::new(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `min(v - lo, hi - v)`; unbounded sides contribute `+inf`.
    pub fn signed_distance(&self, v: f64) -> f64 {
        let below = if self.lo == f64::NEG_INFINITY { f64::INFINITY } else { v - self.lo };
        let above = if self.hi == f64::INFINITY { f64::INFINITY } else { self.hi - v };
        below.min(above)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Axis-aligned box over any subset of the four DoF.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisSpace {
    intervals: PerAxis<Interval>,
}

impl AxisSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an axis; yaw intervals get the wrap-around check.
    pub fn with_axis(mut self, axis: Axis, lo: f64, hi: f64) -> Result<Self, SpatialError> {
        let interval = match axis {
            Axis::Yaw => Interval::yaw(lo, hi)?,
            _ => Interval::new(lo, hi)?,
        };
        self.intervals.set(axis, interval);
        Ok(self)
    }

    pub fn interval(&self, axis: Axis) -> Result<Interval, SpatialError> {
        self.intervals.get(axis).ok_or(SpatialError::MissingAxis(axis))
    }

    pub fn intervals(&self) -> &PerAxis<Interval> {
        &self.intervals
    }

    pub fn defines(&self, axis: Axis) -> bool {
        self.intervals.has(axis)
    }
}

/// 4-DoF location: position in meters, yaw in radians within `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Result<Self, SpatialError> {
        if ![x, y, z, yaw].iter().all(|v| v.is_finite()) {
            return Err(SpatialError::NonFinite("pose"));
        }
        Ok(Self { x, y, z, yaw: normalize_angle(yaw) })
    }

    pub fn coordinate(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
            Axis::Yaw => self.yaw,
        }
    }

    pub(crate) fn set_coordinate(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::X => self.x = value,
            Axis::Y => self.y = value,
            Axis::Z => self.z = value,
            Axis::Yaw => self.yaw = normalize_angle(value),
        }
    }
}

/// Transform from the Localization Frame (where the device sits) to the
/// Interest Frame, expressed in the Localization Frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidTransform {
    pub translation: [f64; 3],
    pub yaw_offset: f64,
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform { translation: [0.0; 3], yaw_offset: 0.0 };

    pub fn new(translation: [f64; 3], yaw_offset: f64) -> Result<Self, SpatialError> {
        if !translation.iter().chain(std::iter::once(&yaw_offset)).all(|v| v.is_finite()) {
            return Err(SpatialError::NonFinite("transform"));
        }
        Ok(Self { translation, yaw_offset })
    }

    pub fn is_identity(&self) -> bool {
        self.translation == [0.0; 3] && self.yaw_offset == 0.0
    }

    /// Planar lever-arm length `sqrt(r_x^2 + r_y^2)`.
    pub fn planar_lever_arm(&self) -> f64 {
        self.translation[0].hypot(self.translation[1])
    }

    /// The transform undoing `self`: `transform_pose(inv, transform_pose(self, p)) == p`.
    pub fn inverse(&self) -> RigidTransform {
        let (s, c) = self.yaw_offset.sin_cos();
        let [rx, ry, rz] = self.translation;
        // -R(-theta) r
        RigidTransform {
            translation: [-(c * rx + s * ry), -(-s * rx + c * ry), -rz],
            yaw_offset: -self.yaw_offset,
        }
    }
}

pub fn contains(space: &AxisSpace, pose: &Pose, dof: &DofMask) -> Result<bool, SpatialError> {
    let mut inside = true;
    for axis in dof.axes() {
        let interval = space.interval(axis)?;
        inside &= interval.contains(pose.coordinate(axis));
    }
    Ok(inside)
}

/// Signed distance of the pose coordinate to the nearer side of the interval.
pub fn boundary_distance(space: &AxisSpace, pose: &Pose, axis: Axis) -> Result<f64, SpatialError> {
    Ok(space.interval(axis)?.signed_distance(pose.coordinate(axis)))
}

/// Per included axis: `min(M_lo - I_lo, I_hi - M_hi) - S`.
///
/// Results within `NUMERIC_TOLERANCE` below zero are clamped to zero; anything
/// further below is a [`SpatialError::NegativeMargin`].
pub fn requirement_margin(
    interest: &AxisSpace,
    motion: &AxisSpace,
    safety: &PerAxis<f64>,
    dof: &DofMask,
) -> Result<MarginVector, SpatialError> {
    let mut out = PerAxis::new();
    for axis in dof.axes() {
        let i = interest.interval(axis)?;
        let m = motion.interval(axis)?;
        if !i.contains_interval(&m) {
            return Err(SpatialError::NotContained {
                axis,
                motion_lo: m.lo,
                motion_hi: m.hi,
                interest_lo: i.lo,
                interest_hi: i.hi,
            });
        }
        let s = safety.get(axis).ok_or(SpatialError::MissingAxis(axis))?;
        if s.is_nan() || s < 0.0 {
            return Err(SpatialError::NegativeComponent { axis, value: s });
        }
        let below = if i.lo == f64::NEG_INFINITY { f64::INFINITY } else { m.lo - i.lo };
        let above = if i.hi == f64::INFINITY { f64::INFINITY } else { i.hi - m.hi };
        let gap = below.min(above);
        let margin = gap - s;
        if margin < -NUMERIC_TOLERANCE {
            return Err(SpatialError::NegativeMargin { axis, gap, safety: s });
        }
        out.set(axis, margin.max(0.0));
    }
    MarginVector::new(out)
}

/// Moves a Localization Frame pose to the corresponding Interest Frame pose.
pub fn transform_pose(t: &RigidTransform, pose: &Pose) -> Pose {
    let (s, c) = pose.yaw.sin_cos();
    let [rx, ry, rz] = t.translation;
    Pose {
        x: pose.x + c * rx - s * ry,
        y: pose.y + s * rx + c * ry,
        z: pose.z + rz,
        yaw: normalize_angle(pose.yaw + t.yaw_offset),
    }
}

/// Worst-case planar displacement of a point at distance `radius` from the
/// rotation center under a yaw error of `angle`.
pub fn lever_arm_chord(radius: f64, angle: f64) -> Result<f64, SpatialError> {
    if radius.is_nan() || radius < 0.0 {
        return Err(SpatialError::Domain { what: "radius", value: radius });
    }
    if angle.is_nan() || angle < 0.0 {
        return Err(SpatialError::Domain { what: "angle", value: angle });
    }
    Ok(2.0 * radius * (angle.min(PI) / 2.0).sin())
}

//! Degrees of freedom and per-axis value containers.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::SpatialError;

/// One of the four degrees of freedom handled by the engine.
///
/// Ordering is fixed (x, y, z, yaw) and is used for tie-breaking and for
/// every rendered table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
    Yaw,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::X, Axis::Y, Axis::Z, Axis::Yaw];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
            Axis::Yaw => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Yaw => "yaw",
        }
    }

    pub fn from_name(name: &str) -> Option<Axis> {
        Axis::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Unit suffix used in reports.
    pub fn unit(self) -> &'static str {
        match self {
            Axis::Yaw => "rad",
            _ => "m",
        }
    }

    pub fn is_translational(self) -> bool {
        !matches!(self, Axis::Yaw)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Nonempty set of axes a localization function cares about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DofMask {
    included: [bool; 4],
}

impl DofMask {
    /// Builds a mask, rejecting empty input and duplicate axes.
    pub fn new(axes: &[Axis]) -> Result<Self, SpatialError> {
        if axes.is_empty() {
            return Err(SpatialError::EmptyDof);
        }
        let mut included = [false; 4];
        for &axis in axes {
            if included[axis.index()] {
                return Err(SpatialError::DuplicateAxis(axis));
            }
            included[axis.index()] = true;
        }
        Ok(Self { included })
    }

    pub fn xyz() -> Self {
        Self {
            included: [true, true, true, false],
        }
    }

    pub fn all() -> Self {
        Self { included: [true; 4] }
    }

    pub fn contains(&self, axis: Axis) -> bool {
        self.included[axis.index()]
    }

    /// Included axes in canonical order.
    pub fn axes(&self) -> impl Iterator<Item = Axis> + '_ {
        Axis::ALL.into_iter().filter(|a| self.contains(*a))
    }

    pub fn len(&self) -> usize {
        self.included.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A sparse map from axis to value, iterated in canonical axis order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerAxis<T> {
    values: [Option<T>; 4],
}

impl<T: Copy> Default for PerAxis<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Copy> PerAxis<T> {
    pub fn new() -> Self {
        Self { values: [None; 4] }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Axis, T)>) -> Self {
        let mut out = Self::new();
        for (axis, value) in pairs {
            out.set(axis, value);
        }
        out
    }

    /// Same value on every axis of `dof`.
    pub fn filled(dof: &DofMask, value: T) -> Self {
        Self::from_pairs(dof.axes().map(|a| (a, value)))
    }

    pub fn get(&self, axis: Axis) -> Option<T> {
        self.values[axis.index()]
    }

    pub fn set(&mut self, axis: Axis, value: T) {
        self.values[axis.index()] = Some(value);
    }

    pub fn with(mut self, axis: Axis, value: T) -> Self {
        self.set(axis, value);
        self
    }

    pub fn has(&self, axis: Axis) -> bool {
        self.values[axis.index()].is_some()
    }

    pub fn axes(&self) -> impl Iterator<Item = Axis> + '_ {
        Axis::ALL.into_iter().filter(|a| self.has(*a))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Axis, T)> + '_ {
        Axis::ALL
            .into_iter()
            .filter_map(|a| self.values[a.index()].map(|v| (a, v)))
    }

    pub fn len(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_axes<U: Copy>(&self, other: &PerAxis<U>) -> bool {
        Axis::ALL
            .into_iter()
            .all(|a| self.has(a) == other.has(a))
    }

    /// Keeps only the axes in `dof`; fails if one of them is missing.
    pub fn restrict(&self, dof: &DofMask) -> Result<Self, SpatialError> {
        let mut out = Self::new();
        for axis in dof.axes() {
            let v = self.get(axis).ok_or(SpatialError::MissingAxis(axis))?;
            out.set(axis, v);
        }
        Ok(out)
    }

    pub fn map<U: Copy>(&self, mut f: impl FnMut(Axis, T) -> U) -> PerAxis<U> {
        PerAxis::from_pairs(self.iter().map(|(a, v)| (a, f(a, v))))
    }
}

/// Per-axis nonnegative magnitudes (meters on x/y/z, radians on yaw).
///
/// Used for Requirement Margins, uncertainty components and accuracy budgets.
/// `+inf` is a legal component (an axis that is unbounded on both sides).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarginVector(PerAxis<f64>);

impl MarginVector {
    pub fn new(values: PerAxis<f64>) -> Result<Self, SpatialError> {
        for (axis, v) in values.iter() {
            if v.is_nan() || v < 0.0 {
                return Err(SpatialError::NegativeComponent { axis, value: v });
            }
        }
        Ok(Self(values))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Axis, f64)>) -> Result<Self, SpatialError> {
        Self::new(PerAxis::from_pairs(pairs))
    }

    pub fn zeros(dof: &DofMask) -> Self {
        Self(PerAxis::filled(dof, 0.0))
    }

    pub fn get(&self, axis: Axis) -> Option<f64> {
        self.0.get(axis)
    }

    pub fn axes(&self) -> impl Iterator<Item = Axis> + '_ {
        self.0.axes()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Axis, f64)> + '_ {
        self.0.iter()
    }

    pub fn values(&self) -> &PerAxis<f64> {
        &self.0
    }

    pub fn same_axes(&self, other: &MarginVector) -> bool {
        self.0.same_axes(&other.0)
    }

    pub fn restrict(&self, dof: &DofMask) -> Result<Self, SpatialError> {
        Ok(Self(self.0.restrict(dof)?))
    }

    /// Elementwise sum over identical axis sets.
    pub fn checked_add(&self, other: &MarginVector) -> Result<Self, SpatialError> {
        if !self.same_axes(other) {
            return Err(SpatialError::AxisMismatch);
        }
        Ok(Self(self.0.map(|a, v| v + other.0.get(a).unwrap_or(0.0))))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, SpatialError> {
        Self::new(self.0.map(|_, v| v * factor))
    }
}

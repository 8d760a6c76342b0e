//! The automated pallet booking case: a pallet assigned to a rack storage
//! compartment, 3 DoF, Requirement Margin (0.3, 0.5, 0.15) m, maximum
//! velocity (0.1, 0.7, 0.1) m/s, 4-sigma confidence, no real-time need and
//! the device mounted at the pallet center.

use crate::requirements::{LocalizationFunctionSpec, LocalizationType};
use crate::spatial::{Axis, AxisSpace, DofMask, PerAxis, RigidTransform};
use crate::uncertainty::{ConfidenceLevel, StaticBasis, VelocityBound};

pub fn pallet_spec() -> LocalizationFunctionSpec {
    let interest = AxisSpace::new()
        .with_axis(Axis::X, 0.0, 1.8)
        .and_then(|s| s.with_axis(Axis::Y, 0.0, 1.2))
        .and_then(|s| s.with_axis(Axis::Z, 0.0, 0.9))
        .expect("valid interest space");
    let motion = AxisSpace::new()
        .with_axis(Axis::X, 0.4, 1.4)
        .and_then(|s| s.with_axis(Axis::Y, 0.55, 0.65))
        .and_then(|s| s.with_axis(Axis::Z, 0.15, 0.15))
        .expect("valid motion space");
    LocalizationFunctionSpec {
        name: "automated pallet booking".into(),
        entity: "pallet".into(),
        localization_type: LocalizationType::Absolute,
        dof: DofMask::xyz(),
        interest_space: interest,
        motion_space: motion,
        safety_margin: PerAxis::from_pairs([(Axis::X, 0.1), (Axis::Y, 0.05), (Axis::Z, 0.0)]),
        reference_basis: StaticBasis::GroundTruth,
        confidence: ConfidenceLevel::Sigma(4.0),
        max_velocity: VelocityBound::new(PerAxis::from_pairs([(Axis::X, 0.1), (Axis::Y, 0.7), (Axis::Z, 0.1)]))
            .expect("nonnegative velocities"),
        realtime_required: false,
        transform_l_to_i: RigidTransform::IDENTITY,
    }
}

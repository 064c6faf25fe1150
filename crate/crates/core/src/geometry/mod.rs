//! Camera models, the canonical six-view rig, and epipolar algebra.
//!
//! Conventions (fixed here, used everywhere else):
//!
//! * World frame: right-handed, `y` points down along gravity, the object
//!   sits at the origin inside the unit ball.
//! * Camera frame: `x` right, `y` down, `z` from the camera toward the
//!   origin; a camera at distance `d` sees the origin at depth `d`.
//! * Elevation is positive when the camera is above the equator (looking
//!   down); azimuth grows counterclockwise when viewed from above and is
//!   normalized into `[0, 360)` degrees.
//! * Normalized image coordinates span `[-1, 1]` on both axes with `y`
//!   pointing down, so statements about rows are resolution-independent.
//! * Angles cross the API boundary in degrees and are converted to radians
//!   internally.

mod camera;
mod epipolar;
mod pose;
mod rig;

pub use camera::{CameraModel, Projection, equivalent_distance, normalize_focal};
pub use epipolar::{
    EpipolarLine, EssentialMatrix, epipolar_line, max_row_deviation, verify_row_alignment,
};
pub use pose::{Pose, azimuth_rotation, relative_pose, skew};
pub use rig::{AZIMUTH_OFFSETS_DEG, CanonicalRig, RIG_VIEW_COUNT};

use thiserror::Error;

/// Errors produced by camera construction, pose algebra, and projection.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("elevation must lie in [-90, 90] degrees, got {0}")]
    ElevationOutOfRange(f64),
    #[error("look-at frame is degenerate at elevation {0} degrees")]
    DegenerateLookAt(f64),
    #[error("rotation is not orthonormal with determinant +1 (deviation {deviation:.3e})")]
    NonOrthonormalRotation { deviation: f64 },
    #[error("perspective focal length must be at least 24 mm, got {0}")]
    FocalBelowMinimum(f64),
    #[error("point is behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("epipolar line is degenerate (epipole case)")]
    DegenerateEpipolarLine,
    #[error("essential matrix is not rank-deficient (sigma_min/sigma_max = {0:.3e})")]
    FullRankEssential(f64),
    #[error("cannot relate an orthographic view with a perspective view")]
    MixedCameraKinds,
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn normalize_azimuth_deg(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs.
    if a >= 360.0 { a - 360.0 } else { a }
}

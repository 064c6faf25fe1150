use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use super::{GeometryError, normalize_azimuth_deg};

pub const RIG_VIEW_COUNT: usize = 6;

/// Azimuth offsets of the six output views relative to the reference
/// azimuth, in this exact order.
pub const AZIMUTH_OFFSETS_DEG: [f64; 6] = [0.0, 45.0, 90.0, -45.0, -90.0, 180.0];

/// All rig cameras sit at unit distance; orthographic projection does not
/// depend on it, and unit distance keeps relative translations well scaled.
const RIG_VIEW_DISTANCE: f64 = 1.0;

const AZIMUTH_MATCH_TOL: f64 = 1e-9;

/// The six-view output arrangement: orthographic cameras at elevation 0,
/// azimuths `reference + {0, +45, +90, -45, -90, +180}` degrees, sharing one
/// image scale and looking at the origin with gravity-aligned image `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalRig {
    reference_azimuth_deg: f64,
    ortho_scale: f64,
    views: Vec<CameraModel>,
}

impl CanonicalRig {
    /// Builds the rig around the reference azimuth. The reference is stored
    /// verbatim; how it relates to any input image's frame is the caller's
    /// business.
    pub fn new(reference_azimuth_deg: f64, ortho_scale: f64) -> Result<Self, GeometryError> {
        let views = AZIMUTH_OFFSETS_DEG
            .iter()
            .map(|offset| {
                CameraModel::orthographic(
                    ortho_scale,
                    RIG_VIEW_DISTANCE,
                    0.0,
                    reference_azimuth_deg + offset,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            reference_azimuth_deg,
            ortho_scale,
            views,
        })
    }

    pub fn reference_azimuth_deg(&self) -> f64 {
        self.reference_azimuth_deg
    }

    pub fn ortho_scale(&self) -> f64 {
        self.ortho_scale
    }

    /// The six views, in the canonical azimuth-offset order.
    pub fn views(&self) -> &[CameraModel] {
        &self.views
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&RigFile::from(self)).expect("rig serialization is infallible")
    }

    pub fn from_json_str(text: &str) -> Result<Self, GeometryError> {
        let file: RigFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<(), GeometryError> {
        let mut text = self.to_json_string();
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }
}

/// On-disk rig format. Field names are part of the contract; views are
/// written in the canonical offset order with azimuths in `[0, 360)`.
#[derive(Debug, Serialize, Deserialize)]
struct RigFile {
    reference_azimuth_deg: f64,
    ortho_scale: f64,
    views: Vec<RigViewRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RigViewRecord {
    kind: String,
    azimuth_deg: f64,
    elevation_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    focal_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
}

impl From<&CanonicalRig> for RigFile {
    fn from(rig: &CanonicalRig) -> Self {
        RigFile {
            reference_azimuth_deg: rig.reference_azimuth_deg,
            ortho_scale: rig.ortho_scale,
            views: rig
                .views
                .iter()
                .map(|v| RigViewRecord {
                    kind: "orthographic".to_owned(),
                    azimuth_deg: v.azimuth_deg,
                    elevation_deg: v.elevation_deg,
                    focal_mm: None,
                    distance: Some(v.distance),
                })
                .collect(),
        }
    }
}

impl TryFrom<RigFile> for CanonicalRig {
    type Error = GeometryError;

    fn try_from(file: RigFile) -> Result<Self, GeometryError> {
        if file.views.len() != RIG_VIEW_COUNT {
            return Err(GeometryError::InvalidRig(format!(
                "expected {RIG_VIEW_COUNT} views, got {}",
                file.views.len()
            )));
        }
        if !(file.ortho_scale > 0.0) {
            return Err(GeometryError::InvalidRig(format!(
                "ortho_scale must be positive, got {}",
                file.ortho_scale
            )));
        }
        let mut views = Vec::with_capacity(RIG_VIEW_COUNT);
        for (i, record) in file.views.iter().enumerate() {
            if record.kind != "orthographic" {
                return Err(GeometryError::InvalidRig(format!(
                    "view {i} has kind {:?}, every rig view must be orthographic",
                    record.kind
                )));
            }
            if record.elevation_deg != 0.0 {
                return Err(GeometryError::InvalidRig(format!(
                    "view {i} has elevation {}, every rig view must sit at elevation 0",
                    record.elevation_deg
                )));
            }
            let expected =
                normalize_azimuth_deg(file.reference_azimuth_deg + AZIMUTH_OFFSETS_DEG[i]);
            let deviation = (normalize_azimuth_deg(record.azimuth_deg) - expected).abs();
            if deviation.min(360.0 - deviation) > AZIMUTH_MATCH_TOL {
                return Err(GeometryError::InvalidRig(format!(
                    "view {i} azimuth {} does not match the canonical offset order (expected {expected})",
                    record.azimuth_deg
                )));
            }
            views.push(CameraModel::orthographic(
                file.ortho_scale,
                record.distance.unwrap_or(RIG_VIEW_DISTANCE),
                0.0,
                record.azimuth_deg,
            )?);
        }
        Ok(CanonicalRig {
            reference_azimuth_deg: file.reference_azimuth_deg,
            ortho_scale: file.ortho_scale,
            views,
        })
    }
}

use nalgebra::{Matrix3, Vector3};

use super::pose::Pose;
use super::{GeometryError, normalize_azimuth_deg};

/// Smallest focal length of the supported lens set; normalization anchor.
pub const MIN_FOCAL_MM: f64 = 24.0;

const LOOK_AT_TOL_DEG: f64 = 1e-9;

/// Intrinsic model: orthographic cameras scale camera-frame `x, y` into the
/// image; perspective cameras apply a focal-scaled pinhole division.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Orthographic { scale: f64 },
    Perspective { focal_mm: f64 },
}

/// A camera looking at the world origin with gravity-aligned image `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub projection: Projection,
    /// Distance from the camera center to the origin, in world units.
    pub distance: f64,
    /// Positive elevation places the camera above the equator, looking down.
    pub elevation_deg: f64,
    /// Stored normalized into `[0, 360)`.
    pub azimuth_deg: f64,
}

impl CameraModel {
    pub fn orthographic(
        scale: f64,
        distance: f64,
        elevation_deg: f64,
        azimuth_deg: f64,
    ) -> Result<Self, GeometryError> {
        require_positive("ortho_scale", scale)?;
        Self::with_projection(Projection::Orthographic { scale }, distance, elevation_deg, azimuth_deg)
    }

    pub fn perspective(
        focal_mm: f64,
        distance: f64,
        elevation_deg: f64,
        azimuth_deg: f64,
    ) -> Result<Self, GeometryError> {
        require_positive("focal_mm", focal_mm)?;
        Self::with_projection(Projection::Perspective { focal_mm }, distance, elevation_deg, azimuth_deg)
    }

    /// Perspective camera whose distance is derived from an orthographic
    /// scale via [`equivalent_distance`], so that renders of an object at the
    /// origin match the orthographic ones in size.
    pub fn perspective_equivalent(
        focal_mm: f64,
        ortho_scale: f64,
        elevation_deg: f64,
        azimuth_deg: f64,
    ) -> Result<Self, GeometryError> {
        let distance = equivalent_distance(focal_mm, ortho_scale)?;
        Self::perspective(focal_mm, distance, elevation_deg, azimuth_deg)
    }

    fn with_projection(
        projection: Projection,
        distance: f64,
        elevation_deg: f64,
        azimuth_deg: f64,
    ) -> Result<Self, GeometryError> {
        require_positive("distance", distance)?;
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(GeometryError::ElevationOutOfRange(elevation_deg));
        }
        Ok(Self {
            projection,
            distance,
            elevation_deg,
            azimuth_deg: normalize_azimuth_deg(azimuth_deg),
        })
    }

    pub fn is_orthographic(&self) -> bool {
        matches!(self.projection, Projection::Orthographic { .. })
    }

    pub fn ortho_scale(&self) -> Option<f64> {
        match self.projection {
            Projection::Orthographic { scale } => Some(scale),
            Projection::Perspective { .. } => None,
        }
    }

    pub fn focal_mm(&self) -> Option<f64> {
        match self.projection {
            Projection::Orthographic { .. } => None,
            Projection::Perspective { focal_mm } => Some(focal_mm),
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        let el = self.elevation_deg.to_radians();
        let az = self.azimuth_deg.to_radians();
        let (se, ce) = el.sin_cos();
        let (sa, ca) = az.sin_cos();
        self.distance * Vector3::new(ce * sa, -se, -ce * ca)
    }

    /// World-to-camera transform. Fails at `|elevation| = 90` where the
    /// gravity-aligned image frame is undefined.
    pub fn world_to_camera(&self) -> Result<Pose, GeometryError> {
        if self.elevation_deg.abs() >= 90.0 - LOOK_AT_TOL_DEG {
            return Err(GeometryError::DegenerateLookAt(self.elevation_deg));
        }
        let center = self.center();
        let z = (-center).normalize();
        let gravity = Vector3::new(0.0, 1.0, 0.0);
        let y = (gravity - gravity.dot(&z) * z).normalize();
        let x = y.cross(&z);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let translation = -(rotation * center);
        Ok(Pose {
            rotation,
            translation,
        })
    }

    /// Camera-frame coordinates of a world point.
    pub fn camera_coords(&self, point: &Vector3<f64>) -> Result<Vector3<f64>, GeometryError> {
        Ok(self.world_to_camera()?.transform(point))
    }

    /// Projects a world point into normalized image coordinates.
    ///
    /// Orthographic: `(u, v) = scale * (x, y)`. Perspective: `(u, v) =
    /// focal_mm * (x/z, y/z)`, which for an equivalent-distance camera
    /// reproduces the orthographic extent at the object plane. Coordinates
    /// are in `[-1, 1]` only when the point is actually in frame; no
    /// clipping happens here.
    pub fn project(&self, point: &Vector3<f64>) -> Result<(f64, f64), GeometryError> {
        let p = self.camera_coords(point)?;
        match self.projection {
            Projection::Orthographic { scale } => Ok((scale * p.x, scale * p.y)),
            Projection::Perspective { focal_mm } => {
                if p.z <= f64::EPSILON {
                    return Err(GeometryError::BehindCamera(p.z));
                }
                Ok((focal_mm * p.x / p.z, focal_mm * p.y / p.z))
            }
        }
    }

    /// Homogeneous coordinates of a pixel in the form this camera's
    /// essential matrices act on: pixel coordinates `(u, v, 1)` for
    /// orthographic views, unit-plane coordinates `(u/f, v/f, 1)` for
    /// perspective views.
    pub fn epipolar_coords(&self, u: f64, v: f64) -> Vector3<f64> {
        match self.projection {
            Projection::Orthographic { .. } => Vector3::new(u, v, 1.0),
            Projection::Perspective { focal_mm } => Vector3::new(u / focal_mm, v / focal_mm, 1.0),
        }
    }
}

/// Distance at which a perspective camera with focal length `focal_mm`
/// frames an origin-centered object like an orthographic camera with scale
/// `ortho_scale` does: `d = f / s`.
pub fn equivalent_distance(focal_mm: f64, ortho_scale: f64) -> Result<f64, GeometryError> {
    require_positive("focal_mm", focal_mm)?;
    require_positive("ortho_scale", ortho_scale)?;
    Ok(focal_mm / ortho_scale)
}

/// Normalized focal length: `24 / f` for perspective cameras (so the
/// shortest supported lens maps to 1), `0` for orthographic cameras.
pub fn normalize_focal(camera: &CameraModel) -> Result<f64, GeometryError> {
    match camera.projection {
        Projection::Orthographic { .. } => Ok(0.0),
        Projection::Perspective { focal_mm } => {
            if focal_mm < MIN_FOCAL_MM {
                return Err(GeometryError::FocalBelowMinimum(focal_mm));
            }
            Ok(MIN_FOCAL_MM / focal_mm)
        }
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), GeometryError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(GeometryError::NonPositive { name, value });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn origin_projects_to_image_center() {
        for az in [0.0, 45.0, 90.0, 315.0, 270.0, 180.0] {
            let cam = CameraModel::orthographic(1.0, 1.0, 0.0, az).unwrap();
            let (u, v) = cam.project(&Vector3::zeros()).unwrap();
            assert_eq!((u, v), (0.0, 0.0));
        }
    }

    #[test]
    fn rig_views_agree_on_row_coordinate() {
        let p = Vector3::new(0.0, 0.3, 0.0);
        let a = CameraModel::orthographic(1.0, 1.0, 0.0, 40.0).unwrap();
        let b = CameraModel::orthographic(1.0, 1.0, 0.0, 220.0).unwrap();
        let (_, va) = a.project(&p).unwrap();
        let (_, vb) = b.project(&p).unwrap();
        assert_eq!(va, vb);
        assert_abs_diff_eq!(va, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn perspective_point_on_optical_axis_projects_to_center() {
        let cam = CameraModel::perspective(50.0, 3.0, 0.0, 0.0).unwrap();
        // The optical axis runs from the camera center through the origin.
        let (u, v) = cam.project(&Vector3::zeros()).unwrap();
        assert_eq!((u, v), (0.0, 0.0));
        let toward = -0.5 * cam.center().normalize();
        let (u, v) = cam.project(&toward).unwrap();
        assert!(u.abs() < 1e-12 && v.abs() < 1e-12);
    }

    #[test]
    fn perspective_rejects_points_behind_camera() {
        let cam = CameraModel::perspective(35.0, 2.0, 0.0, 0.0).unwrap();
        let behind = 3.0 * cam.center();
        assert!(matches!(
            cam.project(&behind),
            Err(GeometryError::BehindCamera(_))
        ));
    }

    #[test]
    fn equivalent_distance_examples() {
        assert_eq!(equivalent_distance(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(equivalent_distance(35.0, 0.5).unwrap(), 70.0);
        assert!(equivalent_distance(-1.0, 1.0).is_err());
        assert!(equivalent_distance(35.0, 0.0).is_err());
    }

    #[test]
    fn longer_lenses_converge_to_the_orthographic_extent() {
        // Project a small cube through an orthographic camera and through
        // equivalent-distance perspective cameras; the relative extent error
        // must shrink as the focal length grows.
        let scale = 0.5;
        let ortho = CameraModel::orthographic(scale, 1.0, 0.0, 0.0).unwrap();
        let corners: Vec<Vector3<f64>> = (0..8)
            .map(|i| {
                Vector3::new(
                    if i & 1 == 0 { -0.4 } else { 0.4 },
                    if i & 2 == 0 { -0.4 } else { 0.4 },
                    if i & 4 == 0 { -0.4 } else { 0.4 },
                )
            })
            .collect();
        let extent = |cam: &CameraModel| {
            let us: Vec<f64> = corners.iter().map(|p| cam.project(p).unwrap().0).collect();
            us.iter().cloned().fold(f64::MIN, f64::max)
                - us.iter().cloned().fold(f64::MAX, f64::min)
        };
        let reference = extent(&ortho);
        let rel_err = |focal: f64| {
            let cam = CameraModel::perspective_equivalent(focal, scale, 0.0, 0.0).unwrap();
            (extent(&cam) - reference).abs() / reference
        };
        let wide = rel_err(35.0);
        let tele = rel_err(135.0);
        assert!(tele < wide, "tele {tele} should beat wide {wide}");
    }

    #[test]
    fn normalize_focal_examples() {
        let persp35 = CameraModel::perspective(35.0, 2.0, 0.0, 0.0).unwrap();
        let f = normalize_focal(&persp35).unwrap();
        assert_abs_diff_eq!(f, 24.0 / 35.0, epsilon = 1e-15);
        assert_eq!(format!("{f:.4}"), "0.6857");

        let ortho = CameraModel::orthographic(1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(normalize_focal(&ortho).unwrap(), 0.0);

        let persp24 = CameraModel::perspective(24.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(normalize_focal(&persp24).unwrap(), 1.0);

        let short = CameraModel::perspective(20.0, 2.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            normalize_focal(&short),
            Err(GeometryError::FocalBelowMinimum(_))
        ));
    }

    #[test]
    fn elevation_sign_places_positive_above_the_equator() {
        // World y points down, so "above" means negative y.
        let cam = CameraModel::orthographic(1.0, 1.0, 30.0, 0.0).unwrap();
        assert!(cam.center().y < 0.0);
    }

    #[test]
    fn construction_validates_ranges() {
        assert!(CameraModel::orthographic(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(CameraModel::perspective(35.0, -1.0, 0.0, 0.0).is_err());
        assert!(CameraModel::orthographic(1.0, 1.0, 95.0, 0.0).is_err());
        let wrapped = CameraModel::orthographic(1.0, 1.0, 0.0, -45.0).unwrap();
        assert_eq!(wrapped.azimuth_deg, 315.0);
    }
}

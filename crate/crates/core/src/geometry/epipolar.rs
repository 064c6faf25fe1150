use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::camera::{CameraModel, Projection};
use super::pose::{Pose, relative_pose, rotation_deviation, skew};
use super::rig::CanonicalRig;
use super::GeometryError;

const RANK_TOL: f64 = 1e-9;
const DEGENERATE_TOL: f64 = 1e-12;

/// A 3x3 matrix `E` relating two views so that corresponding homogeneous
/// image coordinates satisfy `x2^T E x1 = 0`.
///
/// Two constructions exist: the pose form `[t]x R` for perspective pairs
/// (acting on unit-plane coordinates), and an affine form for orthographic
/// pairs (acting directly on normalized pixel coordinates). Both are rank
/// deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct EssentialMatrix {
    matrix: Matrix3<f64>,
}

impl EssentialMatrix {
    /// `E = [t]x R` from the relative pose `p_b = R p_a + t`.
    ///
    /// Valid for perspective view pairs; `x1`, `x2` are unit-plane
    /// coordinates `(x/z, y/z, 1)`.
    pub fn from_pose(rel: &Pose) -> Result<Self, GeometryError> {
        let deviation = rotation_deviation(&rel.rotation);
        if deviation > 1e-9 {
            return Err(GeometryError::NonOrthonormalRotation { deviation });
        }
        Self::checked(skew(&rel.translation) * rel.rotation)
    }

    /// Affine essential matrix for a pair of orthographic views with image
    /// scales `scale_a`, `scale_b`, acting on normalized pixel coordinates
    /// `(u, v, 1)`.
    ///
    /// Derived by eliminating the free depth along the pixel's preimage ray
    /// from the two image equations of view b. When the ray is parallel to
    /// view b's optical axis the correspondence degenerates to a point and
    /// the matrix encodes the row constraint through that point, which is
    /// the limit consistent with the equal-height property of rig views.
    pub fn orthographic(
        rel: &Pose,
        scale_a: f64,
        scale_b: f64,
    ) -> Result<Self, GeometryError> {
        if !(scale_a > 0.0) || !(scale_b > 0.0) {
            return Err(GeometryError::NonPositive {
                name: "ortho_scale",
                value: scale_a.min(scale_b),
            });
        }
        let r = &rel.rotation;
        let t = &rel.translation;
        // u2/sb = row_u . (u1, v1, 1) + a1 * depth
        // v2/sb = row_v . (u1, v1, 1) + a2 * depth
        let a1 = r[(0, 2)];
        let a2 = r[(1, 2)];
        let row_u = Vector3::new(r[(0, 0)] / scale_a, r[(0, 1)] / scale_a, t.x);
        let row_v = Vector3::new(r[(1, 0)] / scale_a, r[(1, 1)] / scale_a, t.y);
        let m = if a1.abs().max(a2.abs()) > DEGENERATE_TOL {
            let bottom = a1 * row_v - a2 * row_u;
            Matrix3::new(
                0.0,
                0.0,
                a2 / scale_b,
                0.0,
                0.0,
                -a1 / scale_b,
                bottom.x,
                bottom.y,
                bottom.z,
            )
        } else {
            Matrix3::new(
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                1.0,
                -scale_b * row_v.x,
                -scale_b * row_v.y,
                -scale_b * row_v.z,
            )
        };
        Self::checked(m)
    }

    /// Essential matrix between two cameras, dispatching on their kinds.
    /// Mixed orthographic/perspective pairs are rejected.
    pub fn between(view_a: &CameraModel, view_b: &CameraModel) -> Result<Self, GeometryError> {
        let rel = relative_pose(view_a, view_b)?;
        match (view_a.projection, view_b.projection) {
            (Projection::Orthographic { scale: sa }, Projection::Orthographic { scale: sb }) => {
                Self::orthographic(&rel, sa, sb)
            }
            (Projection::Perspective { .. }, Projection::Perspective { .. }) => {
                Self::from_pose(&rel)
            }
            _ => Err(GeometryError::MixedCameraKinds),
        }
    }

    fn checked(matrix: Matrix3<f64>) -> Result<Self, GeometryError> {
        let svd = matrix.svd(false, false);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if max > 0.0 && min / max > RANK_TOL {
            return Err(GeometryError::FullRankEssential(min / max));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// `x2^T E x1`; zero (to tolerance) for true correspondences.
    pub fn constraint_residual(&self, x2: &Vector3<f64>, x1: &Vector3<f64>) -> f64 {
        (x2.transpose() * self.matrix * x1)[(0, 0)]
    }
}

/// Line `a*x + b*y + c = 0` in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EpipolarLine {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, GeometryError> {
        if a.abs().max(b.abs()) <= DEGENERATE_TOL {
            return Err(GeometryError::DegenerateEpipolarLine);
        }
        Ok(Self { a, b, c })
    }

    /// Signed residual of a point against the line equation.
    pub fn residual(&self, u: f64, v: f64) -> f64 {
        self.a * u + self.b * v + self.c
    }

    /// Same line with `(a, b)` scaled to unit length.
    pub fn normalized(&self) -> Self {
        let n = self.a.hypot(self.b);
        Self {
            a: self.a / n,
            b: self.b / n,
            c: self.c / n,
        }
    }

    /// Rewrites a line produced in the target camera's essential-matrix
    /// coordinates into normalized pixel coordinates of that camera.
    ///
    /// Orthographic lines already live in pixel coordinates; perspective
    /// lines live on the unit plane where `u_pixel = f * u`, so only the
    /// constant term rescales.
    pub fn in_pixel_coords(&self, target: &CameraModel) -> Self {
        match target.projection {
            Projection::Orthographic { .. } => *self,
            Projection::Perspective { focal_mm } => Self {
                a: self.a,
                b: self.b,
                c: self.c * focal_mm,
            },
        }
    }
}

/// `l = E x1` for a homogeneous image point `x1`, with an explicit error for
/// the degenerate epipole case where the product has no line part.
pub fn epipolar_line(
    e: &EssentialMatrix,
    x1: &Vector3<f64>,
) -> Result<EpipolarLine, GeometryError> {
    let l = e.matrix * x1;
    let scale = e
        .matrix
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0)
        * x1.amax().max(1.0);
    if l.x.abs().max(l.y.abs()) <= DEGENERATE_TOL * scale {
        return Err(GeometryError::DegenerateEpipolarLine);
    }
    EpipolarLine::new(l.x, l.y, l.z)
}

/// Maximum absolute difference between projected row coordinates over
/// `samples` random world points and all ordered view pairs.
///
/// Points are drawn from the unit ball with the given seed; a point only
/// contributes to a pair when it lands in frame in both views.
pub fn max_row_deviation(
    views: &[CameraModel],
    samples: usize,
    seed: u64,
) -> Result<f64, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vector3<f64>> = (0..samples).map(|_| unit_ball_point(&mut rng)).collect();
    let mut max_dev = 0.0f64;
    for (ia, view_a) in views.iter().enumerate() {
        for (ib, view_b) in views.iter().enumerate() {
            if ia == ib {
                continue;
            }
            for p in &points {
                let (ua, va) = view_a.project(p)?;
                let (ub, vb) = view_b.project(p)?;
                let in_frame = |u: f64, v: f64| u.abs() <= 1.0 && v.abs() <= 1.0;
                if in_frame(ua, va) && in_frame(ub, vb) {
                    max_dev = max_dev.max((va - vb).abs());
                }
            }
        }
    }
    Ok(max_dev)
}

/// Row-alignment check for a canonical rig; see [`max_row_deviation`].
/// Valid rigs stay within 1e-9 (the coordinate is equal by construction).
pub fn verify_row_alignment(rig: &CanonicalRig, samples: usize, seed: u64) -> f64 {
    max_row_deviation(rig.views(), samples, seed).expect("canonical rig views always project")
}

fn unit_ball_point(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let p = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if p.norm_squared() <= 1.0 {
            return p;
        }
    }
}

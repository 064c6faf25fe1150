//! Sampled epipolar attention for arbitrary pose sets.
//!
//! Each token keeps its own view's row as local context and adds `K`
//! bilinearly interpolated samples along its epipolar line in every other
//! view. Lines come from the pairwise essential matrices; samples sit at
//! the centers of `K` equal cells of the line segment clipped to the image
//! square, so with `K = S` on the canonical rig they land exactly on column
//! centers and the variant reproduces row-wise attention.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::geometry::{CameraModel, EpipolarLine, EssentialMatrix, epipolar_line};

use super::grid::FeatureGrid;
use super::kernel::{attend_token, run_units};
use super::variants::{output_project, project_grid, ProjectedGrid};
use super::weights::{AttentionConfig, ProjectionWeights};
use super::AttentionError;

/// Normalized coordinate of the center of pixel `i` out of `s`.
pub(crate) fn pixel_center(i: usize, s: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / s as f64
}

/// Pairwise essential matrices for a pose set, built once per grid pass.
pub(crate) struct EpipolarPlan {
    views: Vec<CameraModel>,
    essentials: Vec<Option<EssentialMatrix>>,
    samples_per_view: usize,
}

impl EpipolarPlan {
    pub fn new(views: &[CameraModel], samples_per_view: usize) -> Result<Self, AttentionError> {
        if samples_per_view == 0 {
            return Err(AttentionError::InvalidDims(
                "epipolar attention needs at least one sample per view".into(),
            ));
        }
        if views.is_empty() {
            return Err(AttentionError::InvalidDims("empty pose set".into()));
        }
        let n = views.len();
        let mut essentials = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    essentials.push(None);
                } else {
                    essentials.push(Some(EssentialMatrix::between(&views[a], &views[b])?));
                }
            }
        }
        Ok(Self {
            views: views.to_vec(),
            essentials,
            samples_per_view,
        })
    }

    fn essential(&self, from: usize, to: usize) -> Option<&EssentialMatrix> {
        self.essentials[from * self.views.len() + to].as_ref()
    }
}

/// See module docs. `views` must match the grid's view count; orthographic
/// and perspective pose sets are supported, mixed sets are not.
pub fn epipolar_attention(
    grid: &FeatureGrid,
    views: &[CameraModel],
    samples_per_view: usize,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
) -> Result<FeatureGrid, AttentionError> {
    epipolar_impl(grid, views, samples_per_view, w, cfg, false)
}

pub(crate) fn epipolar_impl(
    grid: &FeatureGrid,
    views: &[CameraModel],
    samples_per_view: usize,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
    parallel: bool,
) -> Result<FeatureGrid, AttentionError> {
    if views.len() != grid.views() {
        return Err(AttentionError::ShapeMismatch(format!(
            "{} poses for a grid with {} views",
            views.len(),
            grid.views()
        )));
    }
    let plan = EpipolarPlan::new(views, samples_per_view)?;
    let p = project_grid(grid, w, cfg)?;
    let pre = epipolar_core(&p, &plan, cfg, parallel);
    output_project(&pre, w, p.views, p.size, p.channels)
}

pub(crate) fn epipolar_core(
    p: &ProjectedGrid,
    plan: &EpipolarPlan,
    cfg: &AttentionConfig,
    parallel: bool,
) -> Vec<f64> {
    let (n, s, c) = (p.views, p.size, p.channels);
    let k = plan.samples_per_view;
    let degenerate = AtomicUsize::new(0);
    let mut out = vec![0.0; p.tokens() * c];
    run_units(&mut out, s * c, parallel, |unit, chunk| {
        let view = unit / s;
        let row = unit % s;
        let row_base = unit * s * c;
        let own_k = &p.k[row_base..row_base + s * c];
        let own_v = &p.v[row_base..row_base + s * c];
        let mut keys = Vec::with_capacity((s + (n - 1) * k) * c);
        let mut values = Vec::with_capacity((s + (n - 1) * k) * c);
        let mut sample = vec![0.0f64; c];
        let mut scores = Vec::new();
        let v_img = pixel_center(row, s);
        for col in 0..s {
            let u_img = pixel_center(col, s);
            keys.clear();
            keys.extend_from_slice(own_k);
            values.clear();
            values.extend_from_slice(own_v);
            for other in 0..n {
                if other == view {
                    continue;
                }
                let e = plan.essential(view, other).expect("off-diagonal pair");
                match sample_line(e, &plan.views[view], &plan.views[other], u_img, v_img, k) {
                    Some(points) => {
                        for (x, y) in points {
                            bilinear_gather(&mut sample, &p.k, other, s, c, x, y);
                            keys.extend_from_slice(&sample);
                            bilinear_gather(&mut sample, &p.v, other, s, c, x, y);
                            values.extend_from_slice(&sample);
                        }
                    }
                    None => {
                        degenerate.fetch_add(1, Ordering::Relaxed);
                    }
                }
            }
            let t = unit * s + col;
            attend_token(
                &mut chunk[col * c..(col + 1) * c],
                &p.q[t * c..(t + 1) * c],
                &keys,
                &values,
                cfg,
                &mut scores,
            );
        }
    });
    let dropped = degenerate.load(Ordering::Relaxed);
    if dropped > 0 {
        log::warn!(
            "epipolar attention: {dropped} token/view pairs had degenerate or out-of-frame \
             epipolar lines and contributed no keys"
        );
    }
    out
}

/// Sample positions a token at pixel `(u, v)` of `from_view` would gather in
/// every other view: `None` marks the token's own slot and views whose line
/// is degenerate or misses the image square. Positions are in normalized
/// pixel coordinates of the target view.
pub fn epipolar_sample_positions(
    views: &[CameraModel],
    from_view: usize,
    u: f64,
    v: f64,
    samples_per_view: usize,
) -> Result<Vec<Option<Vec<(f64, f64)>>>, AttentionError> {
    if from_view >= views.len() {
        return Err(AttentionError::ShapeMismatch(format!(
            "view {from_view} out of {}",
            views.len()
        )));
    }
    let plan = EpipolarPlan::new(views, samples_per_view)?;
    Ok((0..views.len())
        .map(|other| {
            if other == from_view {
                return None;
            }
            let e = plan.essential(from_view, other).expect("off-diagonal pair");
            sample_line(e, &views[from_view], &views[other], u, v, samples_per_view)
        })
        .collect())
}

fn sample_line(
    e: &EssentialMatrix,
    from: &CameraModel,
    to: &CameraModel,
    u: f64,
    v: f64,
    samples: usize,
) -> Option<Vec<(f64, f64)>> {
    let x1 = from.epipolar_coords(u, v);
    let line = epipolar_line(e, &x1).ok()?.in_pixel_coords(to);
    let (p0, dir, t0, t1) = clip_to_square(&line)?;
    let step = (t1 - t0) / samples as f64;
    Some(
        (0..samples)
            .map(|i| {
                let t = t0 + (i as f64 + 0.5) * step;
                (p0.0 + t * dir.0, p0.1 + t * dir.1)
            })
            .collect(),
    )
}

/// Bilinear fetch of one `C`-channel vector from a projected view at a
/// continuous pixel position; indices clamp at the border, and exact grid
/// hits reproduce the stored token.
fn bilinear_gather(
    dst: &mut [f64],
    src: &[f64],
    view: usize,
    s: usize,
    c: usize,
    x: f64,
    y: f64,
) {
    let col_f = (x + 1.0) * s as f64 / 2.0 - 0.5;
    let row_f = (y + 1.0) * s as f64 / 2.0 - 0.5;
    let (c0, c1, fx) = split_coord(col_f, s);
    let (r0, r1, fy) = split_coord(row_f, s);
    let base = |r: usize, col: usize| ((view * s + r) * s + col) * c;
    let (o00, o01, o10, o11) = (base(r0, c0), base(r0, c1), base(r1, c0), base(r1, c1));
    let (w00, w01, w10, w11) = (
        (1.0 - fy) * (1.0 - fx),
        (1.0 - fy) * fx,
        fy * (1.0 - fx),
        fy * fx,
    );
    for i in 0..c {
        dst[i] = w00 * src[o00 + i] + w01 * src[o01 + i] + w10 * src[o10 + i] + w11 * src[o11 + i];
    }
}

fn split_coord(x: f64, s: usize) -> (usize, usize, f64) {
    let floor = x.floor();
    let frac = x - floor;
    let i = floor as isize;
    let last = s as isize - 1;
    let i0 = i.clamp(0, last) as usize;
    let i1 = (i + 1).clamp(0, last) as usize;
    (i0, i1, frac)
}

/// Clips `line` to the `[-1, 1]^2` square. Returns a base point, a unit
/// direction with a canonical sign, and the parameter interval.
fn clip_to_square(line: &EpipolarLine) -> Option<((f64, f64), (f64, f64), f64, f64)> {
    let l = line.normalized();
    let p0 = (-l.c * l.a, -l.c * l.b);
    let mut dir = (-l.b, l.a);
    if dir.0 < 0.0 || (dir.0 == 0.0 && dir.1 < 0.0) {
        dir = (-dir.0, -dir.1);
    }
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for (p, d) in [(p0.0, dir.0), (p0.1, dir.1)] {
        if d.abs() <= 1e-15 {
            if p.abs() > 1.0 {
                return None;
            }
            continue;
        }
        let (lo, hi) = ((-1.0 - p) / d, (1.0 - p) / d);
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        t0 = t0.max(lo);
        t1 = t1.min(hi);
    }
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return None;
    }
    Some((p0, dir, t0, t1))
}

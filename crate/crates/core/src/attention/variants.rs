use super::grid::FeatureGrid;
use super::kernel::{attend_token, attend_token_masked, run_units};
use super::weights::{apply_matrix, AttentionConfig, ProjectionWeights};
use super::{AttentionError, TokenCoord};

/// Query/key/value projections of a whole grid, token-major f64.
pub(crate) struct ProjectedGrid {
    pub views: usize,
    pub size: usize,
    pub channels: usize,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
}

impl ProjectedGrid {
    pub fn tokens(&self) -> usize {
        self.views * self.size * self.size
    }
}

pub(crate) fn project_grid(
    grid: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
) -> Result<ProjectedGrid, AttentionError> {
    cfg.check_channels(grid.channels())?;
    w.check_dim(grid.channels())?;
    let c = grid.channels();
    let tokens = grid.tokens();
    let x: Vec<f64> = grid.as_slice().iter().map(|&v| f64::from(v)).collect();
    let mut q = vec![0.0; tokens * c];
    let mut k = vec![0.0; tokens * c];
    let mut v = vec![0.0; tokens * c];
    for t in 0..tokens {
        let xt = &x[t * c..(t + 1) * c];
        apply_matrix(w.w_q(), xt, &mut q[t * c..(t + 1) * c]);
        apply_matrix(w.w_k(), xt, &mut k[t * c..(t + 1) * c]);
        apply_matrix(w.w_v(), xt, &mut v[t * c..(t + 1) * c]);
    }
    Ok(ProjectedGrid {
        views: grid.views(),
        size: grid.size(),
        channels: c,
        q,
        k,
        v,
    })
}

/// Applies the output projection and narrows back to the f32 grid.
pub(crate) fn output_project(
    pre: &[f64],
    w: &ProjectionWeights,
    views: usize,
    size: usize,
    channels: usize,
) -> Result<FeatureGrid, AttentionError> {
    let mut data = vec![0.0f32; pre.len()];
    let mut row = vec![0.0f64; channels];
    for (t, chunk) in pre.chunks_exact(channels).enumerate() {
        apply_matrix(w.w_out(), chunk, &mut row);
        for (o, &val) in data[t * channels..(t + 1) * channels].iter_mut().zip(&row) {
            if !val.is_finite() {
                return Err(AttentionError::NonFinite("attention output"));
            }
            *o = val as f32;
        }
    }
    FeatureGrid::from_vec(views, size, channels, data)
}

/// Every token attends over all `N*S^2` tokens of all views.
pub fn dense_multiview_attention(
    grid: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
) -> Result<FeatureGrid, AttentionError> {
    dense_impl(grid, w, cfg, false)
}

pub(crate) fn dense_impl(
    grid: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
    parallel: bool,
) -> Result<FeatureGrid, AttentionError> {
    let p = project_grid(grid, w, cfg)?;
    let pre = dense_core(&p, cfg, parallel);
    output_project(&pre, w, p.views, p.size, p.channels)
}

pub(crate) fn dense_core(p: &ProjectedGrid, cfg: &AttentionConfig, parallel: bool) -> Vec<f64> {
    let (s, c) = (p.size, p.channels);
    let mut out = vec![0.0; p.tokens() * c];
    run_units(&mut out, s * c, parallel, |unit, chunk| {
        let mut scores = Vec::new();
        for col in 0..s {
            let t = unit * s + col;
            attend_token(
                &mut chunk[col * c..(col + 1) * c],
                &p.q[t * c..(t + 1) * c],
                &p.k,
                &p.v,
                cfg,
                &mut scores,
            );
        }
    });
    out
}

/// Dense attention with an additive mask: key tokens for which
/// `allow(query, key)` is false are excluded from the softmax. This is the
/// oracle against which the structured variants are checked.
pub fn masked_dense_attention(
    grid: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
    allow: &(dyn Fn(TokenCoord, TokenCoord) -> bool + Sync),
) -> Result<FeatureGrid, AttentionError> {
    masked_dense_impl(grid, w, cfg, allow, false)
}

pub(crate) fn masked_dense_impl(
    grid: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
    allow: &(dyn Fn(TokenCoord, TokenCoord) -> bool + Sync),
    parallel: bool,
) -> Result<FeatureGrid, AttentionError> {
    let p = project_grid(grid, w, cfg)?;
    let (s, c) = (p.size, p.channels);
    let coord = |t: usize| -> TokenCoord { (t / (s * s), (t / s) % s, t % s) };
    let mut pre = vec![0.0; p.tokens() * c];
    run_units(&mut pre, s * c, parallel, |unit, chunk| {
        let mut scores = Vec::new();
        for col in 0..s {
            let t = unit * s + col;
            let qc = coord(t);
            attend_token_masked(
                &mut chunk[col * c..(col + 1) * c],
                &p.q[t * c..(t + 1) * c],
                &p.k,
                &p.v,
                cfg,
                &mut scores,
                |j| allow(qc, coord(j)),
            );
        }
    });
    output_project(&pre, w, p.views, p.size, p.channels)
}

/// Tokens of row `r` across all views attend only among themselves; rows
/// are independent work units.
pub fn row_wise_attention(
    grid: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
) -> Result<FeatureGrid, AttentionError> {
    row_wise_impl(grid, w, cfg, false)
}

pub(crate) fn row_wise_impl(
    grid: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
    parallel: bool,
) -> Result<FeatureGrid, AttentionError> {
    let p = project_grid(grid, w, cfg)?;
    let pre = row_wise_core(&p, cfg, parallel);
    output_project(&pre, w, p.views, p.size, p.channels)
}

pub(crate) fn row_wise_core(p: &ProjectedGrid, cfg: &AttentionConfig, parallel: bool) -> Vec<f64> {
    let (n, s, c) = (p.views, p.size, p.channels);
    let mut out = vec![0.0; p.tokens() * c];
    run_units(&mut out, s * c, parallel, |unit, chunk| {
        let row = unit % s;
        // Keys of this row across all views, gathered in view order.
        let mut keys = Vec::with_capacity(n * s * c);
        let mut values = Vec::with_capacity(n * s * c);
        for view in 0..n {
            let base = ((view * s + row) * s) * c;
            keys.extend_from_slice(&p.k[base..base + s * c]);
            values.extend_from_slice(&p.v[base..base + s * c]);
        }
        let mut scores = Vec::new();
        for col in 0..s {
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
    out
}

//! Three-stage attention block aligning two feature domains (e.g. color
//! and normal maps): per-view self-attention over the concatenated domain
//! tokens, row-wise multiview attention per domain, then cross-domain
//! attention inside each view. Stages can be disabled individually, which
//! turns them into pass-throughs.

use super::grid::FeatureGrid;
use super::kernel::attend_token;
use super::variants::row_wise_attention;
use super::weights::{apply_matrix, AttentionConfig, ProjectionWeights};
use super::AttentionError;

/// Per-stage projection weights; `None` skips the stage.
#[derive(Debug, Clone)]
pub struct CrossDomainWeights {
    pub self_stage: Option<ProjectionWeights>,
    pub row_stage: Option<ProjectionWeights>,
    pub cross_stage: Option<ProjectionWeights>,
}

impl CrossDomainWeights {
    pub fn seeded(dim: usize, seed: u64) -> Self {
        Self {
            self_stage: Some(ProjectionWeights::seeded(dim, seed)),
            row_stage: Some(ProjectionWeights::seeded(dim, seed.wrapping_add(1))),
            cross_stage: Some(ProjectionWeights::seeded(dim, seed.wrapping_add(2))),
        }
    }
}

/// Runs the block over paired grids of identical shape and returns the two
/// transformed grids in the same (color, normal) order.
pub fn cross_domain_block(
    color: &FeatureGrid,
    normal: &FeatureGrid,
    stages: &CrossDomainWeights,
    cfg: &AttentionConfig,
) -> Result<(FeatureGrid, FeatureGrid), AttentionError> {
    if (color.views(), color.size(), color.channels())
        != (normal.views(), normal.size(), normal.channels())
    {
        return Err(AttentionError::ShapeMismatch(format!(
            "domain shapes differ: {}x{}x{} vs {}x{}x{}",
            color.views(),
            color.size(),
            color.channels(),
            normal.views(),
            normal.size(),
            normal.channels()
        )));
    }
    cfg.check_channels(color.channels())?;

    let (mut c_cur, mut n_cur) = (color.clone(), normal.clone());

    if let Some(w) = &stages.self_stage {
        let (c_next, n_next) = joint_self_attention(&c_cur, &n_cur, w, cfg)?;
        c_cur = c_next;
        n_cur = n_next;
    }

    if let Some(w) = &stages.row_stage {
        c_cur = row_wise_attention(&c_cur, w, cfg)?;
        n_cur = row_wise_attention(&n_cur, w, cfg)?;
    }

    if let Some(w) = &stages.cross_stage {
        let c_next = per_view_cross_attention(&c_cur, &n_cur, w, cfg)?;
        let n_next = per_view_cross_attention(&n_cur, &c_cur, w, cfg)?;
        c_cur = c_next;
        n_cur = n_next;
    }

    Ok((c_cur, n_cur))
}

/// Stage 1: for each view, color and normal tokens form one token set and
/// attend over it jointly.
fn joint_self_attention(
    color: &FeatureGrid,
    normal: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
) -> Result<(FeatureGrid, FeatureGrid), AttentionError> {
    w.check_dim(color.channels())?;
    let per_view = color.size() * color.size() * color.channels();
    let mut c_data = Vec::with_capacity(color.as_slice().len());
    let mut n_data = Vec::with_capacity(color.as_slice().len());
    for view in 0..color.views() {
        let mut joint = Vec::with_capacity(2 * per_view);
        joint.extend_from_slice(color.view_slice(view));
        joint.extend_from_slice(normal.view_slice(view));
        let out = cross_attention_tokens(&joint, &joint, color.channels(), w, cfg)?;
        c_data.extend_from_slice(&out[..per_view]);
        n_data.extend_from_slice(&out[per_view..]);
    }
    Ok((
        FeatureGrid::from_vec(color.views(), color.size(), color.channels(), c_data)?,
        FeatureGrid::from_vec(color.views(), color.size(), color.channels(), n_data)?,
    ))
}

/// Stage 3: queries from one domain attend over the other domain's token
/// set of the same view.
fn per_view_cross_attention(
    queries: &FeatureGrid,
    keys: &FeatureGrid,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
) -> Result<FeatureGrid, AttentionError> {
    w.check_dim(queries.channels())?;
    let mut data = Vec::with_capacity(queries.as_slice().len());
    for view in 0..queries.views() {
        let out = cross_attention_tokens(
            queries.view_slice(view),
            keys.view_slice(view),
            queries.channels(),
            w,
            cfg,
        )?;
        data.extend_from_slice(&out);
    }
    FeatureGrid::from_vec(queries.views(), queries.size(), queries.channels(), data)
}

/// Attention of `q_src` tokens over `kv_src` tokens, both flat f32
/// token-major buffers with `channels` per token.
fn cross_attention_tokens(
    q_src: &[f32],
    kv_src: &[f32],
    channels: usize,
    w: &ProjectionWeights,
    cfg: &AttentionConfig,
) -> Result<Vec<f32>, AttentionError> {
    let q_tokens = q_src.len() / channels;
    let kv_tokens = kv_src.len() / channels;
    let mut q = vec![0.0f64; q_tokens * channels];
    let mut k = vec![0.0f64; kv_tokens * channels];
    let mut v = vec![0.0f64; kv_tokens * channels];
    let mut x = vec![0.0f64; channels];
    for (t, chunk) in q_src.chunks_exact(channels).enumerate() {
        for (xi, &s) in x.iter_mut().zip(chunk) {
            *xi = f64::from(s);
        }
        apply_matrix(w.w_q(), &x, &mut q[t * channels..(t + 1) * channels]);
    }
    for (t, chunk) in kv_src.chunks_exact(channels).enumerate() {
        for (xi, &s) in x.iter_mut().zip(chunk) {
            *xi = f64::from(s);
        }
        apply_matrix(w.w_k(), &x, &mut k[t * channels..(t + 1) * channels]);
        apply_matrix(w.w_v(), &x, &mut v[t * channels..(t + 1) * channels]);
    }
    let mut out = vec![0.0f32; q_src.len()];
    let mut pre = vec![0.0f64; channels];
    let mut projected = vec![0.0f64; channels];
    let mut scores = Vec::new();
    for t in 0..q_tokens {
        attend_token(
            &mut pre,
            &q[t * channels..(t + 1) * channels],
            &k,
            &v,
            cfg,
            &mut scores,
        );
        apply_matrix(w.w_out(), &pre, &mut projected);
        for (o, &val) in out[t * channels..(t + 1) * channels]
            .iter_mut()
            .zip(&projected)
        {
            if !val.is_finite() {
                return Err(AttentionError::NonFinite("cross-domain attention output"));
            }
            *o = val as f32;
        }
    }
    Ok(out)
}

//! Multiview attention variants over stacked square feature maps.
//!
//! All variants share one contract: inputs and outputs are
//! [`FeatureGrid`] values of identical shape, tokens are projected through
//! seeded [`ProjectionWeights`], scores use max-subtraction stabilized
//! softmax, and there is no residual connection or normalization inside the
//! ops — they exercise the attention pattern itself. Grids store f32 (the
//! wire format); all arithmetic runs in f64.
//!
//! The variants differ only in which keys a token sees:
//!
//! * dense — every token attends over all `N*S^2` tokens;
//! * row-wise — tokens attend within their row index across all views;
//! * epipolar — tokens attend over their own row plus `K` bilinear samples
//!   along their epipolar line in every other view.
//!
//! Sequential entry points live here; [`par`] holds `rayon`-backed versions
//! that produce bit-identical results.

mod cross_domain;
mod flops;
mod grid;
mod kernel;
mod sampling;
mod variants;
mod weights;

pub use cross_domain::{CrossDomainWeights, cross_domain_block};
pub use flops::{Variant, flop_count};
pub use grid::FeatureGrid;
pub use kernel::{attention_weights, scaled_dot_attention};
pub use sampling::{epipolar_attention, epipolar_sample_positions};
pub use variants::{dense_multiview_attention, masked_dense_attention, row_wise_attention};
pub use weights::{AttentionConfig, ProjectionWeights};

pub(crate) use sampling::{epipolar_core, EpipolarPlan};
pub(crate) use variants::{dense_core, project_grid, row_wise_core};

use thiserror::Error;

/// `(view, row, column)` address of a token inside a grid.
pub type TokenCoord = (usize, usize, usize);

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("head split {heads}x{head_dim} does not cover {channels} channels")]
    HeadSplit {
        heads: usize,
        head_dim: usize,
        channels: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Container(#[from] crate::container::ContainerError),
}

/// Parallel versions of the attention ops, bit-identical to the sequential
/// ones: each output row is an independent work unit with a fixed reduction
/// order, so the thread count cannot change a single bit.
#[cfg(feature = "parallel")]
pub mod par {
    use super::*;
    use crate::geometry::CameraModel;

    pub fn dense_multiview_attention(
        grid: &FeatureGrid,
        w: &ProjectionWeights,
        cfg: &AttentionConfig,
    ) -> Result<FeatureGrid, AttentionError> {
        variants::dense_impl(grid, w, cfg, true)
    }

    pub fn masked_dense_attention(
        grid: &FeatureGrid,
        w: &ProjectionWeights,
        cfg: &AttentionConfig,
        allow: &(dyn Fn(TokenCoord, TokenCoord) -> bool + Sync),
    ) -> Result<FeatureGrid, AttentionError> {
        variants::masked_dense_impl(grid, w, cfg, allow, true)
    }

    pub fn row_wise_attention(
        grid: &FeatureGrid,
        w: &ProjectionWeights,
        cfg: &AttentionConfig,
    ) -> Result<FeatureGrid, AttentionError> {
        variants::row_wise_impl(grid, w, cfg, true)
    }

    pub fn epipolar_attention(
        grid: &FeatureGrid,
        views: &[CameraModel],
        samples_per_view: usize,
        w: &ProjectionWeights,
        cfg: &AttentionConfig,
    ) -> Result<FeatureGrid, AttentionError> {
        sampling::epipolar_impl(grid, views, samples_per_view, w, cfg, true)
    }
}

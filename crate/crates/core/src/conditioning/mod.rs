//! Pose regression from pooled hidden features and its conditioning plumbing.
//!
//! A hidden feature map is average-pooled into one vector; two small MLP
//! heads regress the elevation and the normalized focal length from it. The
//! squared-error loss on those two scalars has an analytic gradient that is
//! verified against central finite differences. Predictions feed sinusoidal
//! condition embeddings concatenated onto time embeddings, and
//! guidance-averaged predictions summarize a denoising trace. The two beta
//! schedules used for the diffusion side live here as well.

mod encode;
mod mlp;
mod schedule;

pub use encode::{
    CONDITION_ENCODE_MAX_PERIOD, ELEVATION_ENCODE_SCALE, StepTrace, cfg_average_pose,
    condition_embedding, positional_encode,
};
pub use mlp::{
    Activation, HiddenFeatureMap, MlpRegressor, PosePrediction, avg_pool, gradient_check,
    gradient_check_pose, loss_gradient, regress_pose, regression_loss, regression_loss_batch,
};
pub use schedule::{NoiseSchedule, ScheduleKind, noise_schedule};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConditioningError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("positional encoding needs a positive even dimension count, got {0}")]
    OddDims(usize),
    #[error("step trace must hold matching, non-empty prediction lists")]
    EmptyTrace,
    #[error("cfg weight must be non-negative and finite, got {0}")]
    BadCfgWeight(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("hidden feature map must be non-empty and finite")]
    BadFeatureMap,
    #[error(transparent)]
    Container(#[from] crate::container::ContainerError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

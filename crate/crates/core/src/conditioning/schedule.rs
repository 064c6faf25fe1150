use serde::{Deserialize, Serialize};

use super::ConditioningError;

/// How beta runs from its start to its end value over training steps.
/// `Linear` interpolates beta directly; `ScaledLinear` interpolates in
/// square-root space (the stock latent-diffusion setting this replaces).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Linear,
    ScaledLinear,
}

impl std::str::FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "linear" => Ok(ScheduleKind::Linear),
            "scaled_linear" => Ok(ScheduleKind::ScaledLinear),
            other => Err(format!("unknown schedule kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub kind: ScheduleKind,
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    betas: Vec<f64>,
}

impl NoiseSchedule {
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

/// Builds the beta sequence. Both kinds are monotone non-decreasing and hit
/// `beta_start` and `beta_end` exactly at the endpoints.
pub fn noise_schedule(
    kind: ScheduleKind,
    steps: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<NoiseSchedule, ConditioningError> {
    if steps < 2 {
        return Err(ConditioningError::InvalidSchedule(format!(
            "need at least 2 steps, got {steps}"
        )));
    }
    if !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
        return Err(ConditioningError::InvalidSchedule(format!(
            "betas must satisfy 0 < start < end < 1, got start={beta_start} end={beta_end}"
        )));
    }
    let last = steps - 1;
    let betas = (0..steps)
        .map(|i| {
            if i == 0 {
                return beta_start;
            }
            if i == last {
                return beta_end;
            }
            let t = i as f64 / last as f64;
            match kind {
                ScheduleKind::Linear => beta_start * (1.0 - t) + beta_end * t,
                ScheduleKind::ScaledLinear => {
                    let root = beta_start.sqrt() * (1.0 - t) + beta_end.sqrt() * t;
                    root * root
                }
            }
        })
        .collect();
    Ok(NoiseSchedule {
        kind,
        steps,
        beta_start,
        beta_end,
        betas,
    })
}

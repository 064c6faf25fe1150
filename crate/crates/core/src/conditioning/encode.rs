use super::mlp::PosePrediction;
use super::ConditioningError;

/// Longest wavelength of the condition embeddings, matching the timestep
/// embedding family they are concatenated with.
pub const CONDITION_ENCODE_MAX_PERIOD: f64 = 10_000.0;

/// Elevations are regressed in degrees over roughly `[-20, 40]`; scaling by
/// `1/40` before encoding keeps them on the same footing as the normalized
/// focal channel in `[0, 1]`.
pub const ELEVATION_ENCODE_SCALE: f64 = 1.0 / 40.0;

/// Sinusoidal embedding: half sines, half cosines, with `dims/2` geometric
/// frequencies running from `1` down to `1/max_period` inclusive. Layout is
/// `[sin(v*w_0).. sin(v*w_{h-1}), cos(v*w_0).. cos(v*w_{h-1})]`.
pub fn positional_encode(
    value: f64,
    dims: usize,
    max_period: f64,
) -> Result<Vec<f64>, ConditioningError> {
    if dims == 0 || dims % 2 != 0 {
        return Err(ConditioningError::OddDims(dims));
    }
    if !(max_period > 0.0) {
        return Err(ConditioningError::InvalidSchedule(format!(
            "max_period must be positive, got {max_period}"
        )));
    }
    let half = dims / 2;
    let mut out = vec![0.0; dims];
    for i in 0..half {
        let freq = if half == 1 {
            1.0
        } else {
            max_period.powf(-(i as f64) / (half as f64 - 1.0))
        };
        let phase = value * freq;
        out[i] = phase.sin();
        out[half + i] = phase.cos();
    }
    Ok(out)
}

/// Conditioning vector fed alongside the time embedding:
/// `[time_emb | encode(elevation/40) | encode(focal)]`, using
/// [`CONDITION_ENCODE_MAX_PERIOD`]. Output length is
/// `time_emb.len() + 2*dims`.
pub fn condition_embedding(
    pred: &PosePrediction,
    time_emb: &[f64],
    dims: usize,
) -> Result<Vec<f64>, ConditioningError> {
    let mut out = Vec::with_capacity(time_emb.len() + 2 * dims);
    out.extend_from_slice(time_emb);
    out.extend(positional_encode(
        pred.elevation_deg * ELEVATION_ENCODE_SCALE,
        dims,
        CONDITION_ENCODE_MAX_PERIOD,
    )?);
    out.extend(positional_encode(
        pred.focal_norm,
        dims,
        CONDITION_ENCODE_MAX_PERIOD,
    )?);
    Ok(out)
}

/// Per-step conditional and unconditional predictions over a denoising run,
/// plus the guidance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    cond: Vec<PosePrediction>,
    uncond: Vec<PosePrediction>,
    cfg_weight: f64,
}

impl StepTrace {
    pub fn new(
        cond: Vec<PosePrediction>,
        uncond: Vec<PosePrediction>,
        cfg_weight: f64,
    ) -> Result<Self, ConditioningError> {
        if cond.is_empty() || cond.len() != uncond.len() {
            return Err(ConditioningError::EmptyTrace);
        }
        if !(cfg_weight >= 0.0) || !cfg_weight.is_finite() {
            return Err(ConditioningError::BadCfgWeight(cfg_weight));
        }
        Ok(Self {
            cond,
            uncond,
            cfg_weight,
        })
    }

    pub fn steps(&self) -> usize {
        self.cond.len()
    }

    pub fn cfg_weight(&self) -> f64 {
        self.cfg_weight
    }
}

/// Final pose estimate: the guidance-combined prediction
/// `(1+w)*cond - w*uncond`, averaged over all denoising steps,
/// independently per channel.
pub fn cfg_average_pose(trace: &StepTrace) -> PosePrediction {
    let w = trace.cfg_weight;
    let mut elevation = 0.0;
    let mut focal = 0.0;
    for (c, u) in trace.cond.iter().zip(&trace.uncond) {
        elevation += (1.0 + w) * c.elevation_deg - w * u.elevation_deg;
        focal += (1.0 + w) * c.focal_norm - w * u.focal_norm;
    }
    let inv = 1.0 / trace.steps() as f64;
    PosePrediction::new(elevation * inv, focal * inv)
}

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::container::Float32Container;

use super::ConditioningError;

/// A `height x width x channels` block of hidden features, pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenFeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl HiddenFeatureMap {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, ConditioningError> {
        if height == 0
            || width == 0
            || channels == 0
            || data.len() != height * width * channels
            || !data.iter().all(|v| v.is_finite())
        {
            return Err(ConditioningError::BadFeatureMap);
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn constant(
        height: usize,
        width: usize,
        channels: usize,
        value: f64,
    ) -> Result<Self, ConditioningError> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn random(
        height: usize,
        width: usize,
        channels: usize,
        seed: u64,
    ) -> Result<Self, ConditioningError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..height * width * channels)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Self::new(height, width, channels, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}

/// Channel-wise spatial mean of the map.
pub fn avg_pool(map: &HiddenFeatureMap) -> Vec<f64> {
    let mut pooled = vec![0.0; map.channels];
    for pixel in map.data.chunks_exact(map.channels) {
        for (p, x) in pooled.iter_mut().zip(pixel) {
            *p += x;
        }
    }
    let inv = 1.0 / map.pixels() as f64;
    for p in pooled.iter_mut() {
        *p *= inv;
    }
    pooled
}

/// Hidden-layer nonlinearity. Sigmoid is the default; identity exists for
/// pass-through configurations in tests and diagnostics. Both are smooth,
/// which keeps finite-difference checks clean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(&self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    /// `out x in`, row-major.
    weights: Vec<f64>,
    biases: Vec<f64>,
    inputs: usize,
}

/// Three dense layers mapping a pooled feature vector to one scalar.
/// Hidden layers use [`Activation`]; the final layer is linear. Default
/// widths halve twice: `C -> C/2 -> C/4 -> 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpRegressor {
    input_dim: usize,
    layers: Vec<Layer>,
    activation: Activation,
    pub seed: Option<u64>,
}

impl MlpRegressor {
    pub fn seeded(input_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = default_dims(input_dim);
        let layers = dims
            .iter()
            .map(|&(outputs, inputs)| {
                let bound = 1.0 / (inputs as f64).sqrt();
                Layer {
                    weights: (0..outputs * inputs)
                        .map(|_| rng.random_range(-bound..bound))
                        .collect(),
                    biases: (0..outputs).map(|_| rng.random_range(-0.1..0.1)).collect(),
                    inputs,
                }
            })
            .collect();
        Self {
            input_dim,
            layers,
            activation: Activation::Sigmoid,
            seed: Some(seed),
        }
    }

    pub fn zeroed(input_dim: usize) -> Self {
        let layers = default_dims(input_dim)
            .iter()
            .map(|&(outputs, inputs)| Layer {
                weights: vec![0.0; outputs * inputs],
                biases: vec![0.0; outputs],
                inputs,
            })
            .collect();
        Self {
            input_dim,
            layers,
            activation: Activation::Sigmoid,
            seed: None,
        }
    }

    /// Builds a regressor from explicit `(weights, biases)` pairs, each
    /// `outputs x inputs` row-major. Dims must chain from `input_dim` to 1.
    pub fn from_layers(
        input_dim: usize,
        layers: Vec<(Vec<f64>, Vec<f64>)>,
        activation: Activation,
    ) -> Result<Self, ConditioningError> {
        let mut inputs = input_dim;
        let mut built = Vec::with_capacity(layers.len());
        for (i, (weights, biases)) in layers.into_iter().enumerate() {
            let outputs = biases.len();
            if outputs == 0 || weights.len() != outputs * inputs {
                return Err(ConditioningError::DimMismatch(format!(
                    "layer {i}: {} weights do not form {outputs}x{inputs}",
                    weights.len()
                )));
            }
            built.push(Layer {
                weights,
                biases,
                inputs,
            });
            inputs = outputs;
        }
        if inputs != 1 || built.is_empty() {
            return Err(ConditioningError::DimMismatch(
                "regressor must end in a single output".into(),
            ));
        }
        Ok(Self {
            input_dim,
            layers: built,
            activation,
            seed: None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.biases.len(), l.inputs))
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64, ConditioningError> {
        if x.len() != self.input_dim {
            return Err(ConditioningError::DimMismatch(format!(
                "input has {} entries, regressor expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(*self.trace(x).last().expect("layers are non-empty").last().expect("one output"))
    }

    /// Post-activation outputs of every layer; the last entry is the linear
    /// scalar output.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let current: &[f64] = if i == 0 { x } else { &acts[i - 1] };
            let mut out = Vec::with_capacity(layer.biases.len());
            for (row, bias) in layer.biases.iter().enumerate() {
                let w = &layer.weights[row * layer.inputs..(row + 1) * layer.inputs];
                let z = bias + w.iter().zip(current).map(|(a, b)| a * b).sum::<f64>();
                out.push(if i == last { z } else { self.activation.apply(z) });
            }
            acts.push(out);
        }
        acts
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), ConditioningError> {
        if params.len() != self.param_count() {
            return Err(ConditioningError::DimMismatch(format!(
                "{} parameters supplied, regressor has {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            let wn = layer.weights.len();
            layer.weights.copy_from_slice(&params[off..off + wn]);
            off += wn;
            let bn = layer.biases.len();
            layer.biases.copy_from_slice(&params[off..off + bn]);
            off += bn;
        }
        Ok(())
    }

    /// Writes the flattened parameters into the shared float32 container and
    /// a JSON sidecar describing the layer dims, activation, and seed.
    /// Parameters are narrowed to f32 on save.
    pub fn save_weights(&self, weights: &Path, sidecar: &Path) -> Result<(), ConditioningError> {
        let params: Vec<f32> = self.flatten_params().iter().map(|&v| v as f32).collect();
        let container = Float32Container::new([1, 1, 1, params.len() as u32], params)
            .expect("parameter count matches its own length");
        container.save(weights)?;
        let meta = RegressorSidecar {
            input_dim: self.input_dim,
            layer_dims: self.layer_dims(),
            activation: self.activation,
            seed: self.seed,
        };
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load_weights(weights: &Path, sidecar: &Path) -> Result<Self, ConditioningError> {
        let meta: RegressorSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        let container = Float32Container::load(weights)?;
        let params: Vec<f64> = container.data.iter().map(|&v| f64::from(v)).collect();
        let mut layers = Vec::with_capacity(meta.layer_dims.len());
        let mut off = 0;
        for &(outputs, inputs) in &meta.layer_dims {
            let take = |off: &mut usize, n: usize| -> Result<Vec<f64>, ConditioningError> {
                let slice = params.get(*off..*off + n).ok_or_else(|| {
                    ConditioningError::DimMismatch("weight blob shorter than sidecar dims".into())
                })?;
                *off += n;
                Ok(slice.to_vec())
            };
            let weights = take(&mut off, outputs * inputs)?;
            let biases = take(&mut off, outputs)?;
            layers.push((weights, biases));
        }
        if off != params.len() {
            return Err(ConditioningError::DimMismatch(
                "weight blob longer than sidecar dims".into(),
            ));
        }
        let mut reg = Self::from_layers(meta.input_dim, layers, meta.activation)?;
        reg.seed = meta.seed;
        Ok(reg)
    }
}

fn default_dims(input_dim: usize) -> Vec<(usize, usize)> {
    let d1 = (input_dim / 2).max(1);
    let d2 = (input_dim / 4).max(1);
    vec![(d1, input_dim), (d2, d1), (1, d2)]
}

#[derive(Debug, Serialize, Deserialize)]
struct RegressorSidecar {
    input_dim: usize,
    layer_dims: Vec<(usize, usize)>,
    activation: Activation,
    seed: Option<u64>,
}

/// Regressed `(elevation, normalized focal)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosePrediction {
    pub elevation_deg: f64,
    pub focal_norm: f64,
}

impl PosePrediction {
    pub fn new(elevation_deg: f64, focal_norm: f64) -> Self {
        Self {
            elevation_deg,
            focal_norm,
        }
    }

    /// Prediction-time clamp of the focal channel into `[0, 1]`. Never used
    /// during loss computation, so gradients stay exact.
    pub fn finalized(self) -> Self {
        Self {
            elevation_deg: self.elevation_deg,
            focal_norm: self.focal_norm.clamp(0.0, 1.0),
        }
    }
}

/// Runs both heads on the pooled map: elevation from `r1`, focal from `r2`.
/// The result is raw (unclamped); see [`PosePrediction::finalized`].
pub fn regress_pose(
    map: &HiddenFeatureMap,
    r1: &MlpRegressor,
    r2: &MlpRegressor,
) -> Result<PosePrediction, ConditioningError> {
    let pooled = avg_pool(map);
    Ok(PosePrediction {
        elevation_deg: r1.forward(&pooled)?,
        focal_norm: r2.forward(&pooled)?,
    })
}

/// Squared-error loss on the two regressed scalars:
/// `(elev - elev_gt)^2 + (focal - focal_gt)^2`.
pub fn regression_loss(pred: &PosePrediction, gt: &PosePrediction) -> f64 {
    let de = pred.elevation_deg - gt.elevation_deg;
    let df = pred.focal_norm - gt.focal_norm;
    de * de + df * df
}

/// Mean of per-sample losses over a batch.
pub fn regression_loss_batch(pairs: &[(PosePrediction, PosePrediction)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs
        .iter()
        .map(|(pred, gt)| regression_loss(pred, gt))
        .sum::<f64>()
        / pairs.len() as f64
}

/// Analytic gradient of `(reg(pool(map)) - target)^2` with respect to every
/// parameter, in [`MlpRegressor::flatten_params`] order.
pub fn loss_gradient(reg: &MlpRegressor, map: &HiddenFeatureMap, target: f64) -> Vec<f64> {
    let pooled = avg_pool(map);
    let acts = reg.trace(&pooled);
    let out = acts.last().expect("non-empty")[0];
    // delta of the linear output layer
    let mut delta = vec![2.0 * (out - target)];
    let mut grads: Vec<Vec<f64>> = vec![Vec::new(); reg.layers.len()];
    for i in (0..reg.layers.len()).rev() {
        let layer = &reg.layers[i];
        let inputs: &[f64] = if i == 0 { &pooled } else { &acts[i - 1] };
        let mut g = Vec::with_capacity(layer.weights.len() + layer.biases.len());
        for (row, d) in delta.iter().enumerate() {
            let _ = row;
            for x in inputs {
                g.push(d * x);
            }
        }
        g.extend_from_slice(&delta);
        grads[i] = g;
        if i > 0 {
            let prev_outputs = &acts[i - 1];
            let mut prev_delta = vec![0.0; layer.inputs];
            for (row, d) in delta.iter().enumerate() {
                let w = &layer.weights[row * layer.inputs..(row + 1) * layer.inputs];
                for (pd, wv) in prev_delta.iter_mut().zip(w) {
                    *pd += d * wv;
                }
            }
            for (pd, y) in prev_delta.iter_mut().zip(prev_outputs) {
                *pd *= reg.activation.derivative_from_output(*y);
            }
            delta = prev_delta;
        }
    }
    grads.concat()
}

/// Central finite differences (step `1e-5` scaled to the parameter's
/// magnitude) against [`loss_gradient`]; returns the maximum guarded
/// relative error over all parameters. Gradients below `1e-3` in magnitude
/// are compared on that absolute scale instead.
pub fn gradient_check(reg: &MlpRegressor, map: &HiddenFeatureMap, target: f64) -> f64 {
    let pooled = avg_pool(map);
    let analytic = loss_gradient(reg, map, target);
    let params = reg.flatten_params();
    let mut probe = reg.clone();
    let mut worst = 0.0f64;
    let loss_at = |probe: &MlpRegressor| {
        let out = probe.forward(&pooled).expect("dims are fixed");
        (out - target) * (out - target)
    };
    for idx in 0..params.len() {
        let h = 1e-5 * params[idx].abs().max(1.0);
        let mut plus = params.clone();
        plus[idx] += h;
        probe.set_params(&plus).expect("same layout");
        let lp = loss_at(&probe);
        let mut minus = params.clone();
        minus[idx] -= h;
        probe.set_params(&minus).expect("same layout");
        let lm = loss_at(&probe);
        let numeric = (lp - lm) / (2.0 * h);
        let denom = analytic[idx].abs().max(numeric.abs()).max(1e-3);
        worst = worst.max((analytic[idx] - numeric).abs() / denom);
    }
    worst
}

/// Gradient check of the full two-head loss. The loss is a sum of per-head
/// terms, so each head's parameters see exactly their own term's gradient.
pub fn gradient_check_pose(
    r1: &MlpRegressor,
    r2: &MlpRegressor,
    map: &HiddenFeatureMap,
    gt: &PosePrediction,
) -> f64 {
    gradient_check(r1, map, gt.elevation_deg).max(gradient_check(r2, map, gt.focal_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn avg_pool_examples() {
        let constant = HiddenFeatureMap::constant(3, 5, 4, 2.25).unwrap();
        assert_eq!(avg_pool(&constant), vec![2.25; 4]);

        let map = HiddenFeatureMap::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(avg_pool(&map), vec![2.5]);
    }

    #[test]
    fn avg_pool_matches_explicit_sum_oracle() {
        let map = HiddenFeatureMap::random(4, 6, 8, 31).unwrap();
        let pooled = avg_pool(&map);
        for ch in 0..8 {
            let mut total = 0.0;
            for px in 0..24 {
                total += map.data[px * 8 + ch];
            }
            assert_abs_diff_eq!(pooled[ch], total / 24.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_weights_pass_biases_through() {
        let map = HiddenFeatureMap::random(2, 2, 8, 5).unwrap();
        let mut r1 = MlpRegressor::zeroed(8);
        let mut r2 = MlpRegressor::zeroed(8);
        // Set only the output-layer bias: with zero weights the hidden
        // activations cannot reach the output, so the bias passes through.
        let mut p1 = r1.flatten_params();
        *p1.last_mut().unwrap() = 7.5;
        r1.set_params(&p1).unwrap();
        let mut p2 = r2.flatten_params();
        *p2.last_mut().unwrap() = -0.25;
        r2.set_params(&p2).unwrap();
        let pred = regress_pose(&map, &r1, &r2).unwrap();
        assert_eq!(pred.elevation_deg, 7.5);
        assert_eq!(pred.focal_norm, -0.25);
        assert_eq!(pred.finalized().focal_norm, 0.0);
    }

    #[test]
    fn identity_chain_passes_the_pooled_value() {
        let map = HiddenFeatureMap::new(1, 2, 1, vec![0.5, 0.9]).unwrap();
        let reg = MlpRegressor::from_layers(
            1,
            vec![
                (vec![1.0], vec![0.0]),
                (vec![1.0], vec![0.0]),
                (vec![1.0], vec![0.0]),
            ],
            Activation::Identity,
        )
        .unwrap();
        let out = reg.forward(&avg_pool(&map)).unwrap();
        assert_abs_diff_eq!(out, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn regress_pose_matches_independent_forward_oracle() {
        let map = HiddenFeatureMap::random(3, 3, 8, 17).unwrap();
        let r1 = MlpRegressor::seeded(8, 1);
        let pooled = avg_pool(&map);
        // Independent oracle: explicit loops over the layer data.
        let mut current = pooled.clone();
        let dims = r1.layer_dims();
        let params = r1.flatten_params();
        let mut off = 0;
        for (li, &(outputs, inputs)) in dims.iter().enumerate() {
            let weights = &params[off..off + outputs * inputs];
            let biases = &params[off + outputs * inputs..off + outputs * inputs + outputs];
            off += outputs * inputs + outputs;
            let mut next = vec![0.0; outputs];
            for o in 0..outputs {
                let mut z = biases[o];
                for i in 0..inputs {
                    z += weights[o * inputs + i] * current[i];
                }
                next[o] = if li == dims.len() - 1 {
                    z
                } else {
                    1.0 / (1.0 + (-z).exp())
                };
            }
            current = next;
        }
        let expect = current[0];
        assert_abs_diff_eq!(r1.forward(&pooled).unwrap(), expect, epsilon = 1e-10);
    }

    #[test]
    fn regression_loss_examples() {
        let p = PosePrediction::new(1.0, 1.0);
        let z = PosePrediction::new(0.0, 0.0);
        assert_eq!(regression_loss(&p, &p), 0.0);
        assert_eq!(regression_loss(&p, &z), 2.0);

        let pairs = vec![
            (PosePrediction::new(1.0, 0.5), PosePrediction::new(0.0, 0.0)),
            (PosePrediction::new(-2.0, 0.0), PosePrediction::new(0.0, 1.0)),
            (PosePrediction::new(0.25, 0.25), PosePrediction::new(0.25, 0.25)),
        ];
        let mean = pairs
            .iter()
            .map(|(a, b)| regression_loss(a, b))
            .sum::<f64>()
            / 3.0;
        assert_abs_diff_eq!(regression_loss_batch(&pairs), mean, epsilon = 1e-12);
    }

    #[test]
    fn zero_weight_network_gradients_match_finite_differences() {
        let map = HiddenFeatureMap::random(2, 3, 8, 3).unwrap();
        let reg = MlpRegressor::zeroed(8);
        let err = gradient_check(&reg, &map, 2.0);
        assert!(err <= 1e-6, "relative error {err}");
    }

    #[test]
    fn seeded_regressors_pass_the_gradient_check() {
        for seed in 0..10 {
            let map = HiddenFeatureMap::random(4, 4, 16, seed + 100).unwrap();
            let reg = MlpRegressor::seeded(16, seed);
            let err = gradient_check(&reg, &map, 0.7);
            assert!(err <= 1e-4, "seed {seed}: relative error {err}");
        }
    }

    #[test]
    fn first_layer_gradient_rows_follow_the_pooled_vector() {
        let map = HiddenFeatureMap::constant(3, 3, 6, 0.8).unwrap();
        let reg = MlpRegressor::seeded(6, 9);
        let pooled = avg_pool(&map);
        let grads = loss_gradient(&reg, &map, 1.5);
        let (d1, _) = reg.layer_dims()[0];
        for row in 0..d1 {
            let g = &grads[row * 6..(row + 1) * 6];
            // Each row is delta_row * pooled, so cross ratios must agree.
            let delta = g[0] / pooled[0];
            for (gv, pv) in g.iter().zip(&pooled) {
                assert_abs_diff_eq!(*gv, delta * pv, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pose_pair_check_covers_both_heads() {
        let map = HiddenFeatureMap::random(3, 3, 8, 50).unwrap();
        let r1 = MlpRegressor::seeded(8, 51);
        let r2 = MlpRegressor::seeded(8, 52);
        let gt = PosePrediction::new(20.0, 24.0 / 35.0);
        let err = gradient_check_pose(&r1, &r2, &map, &gt);
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn weight_serialization_round_trips() {
        let dir = std::env::temp_dir().join(format!("mvattn-reg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let reg = MlpRegressor::seeded(8, 77);
        let bin = dir.join("reg.f32");
        let meta = dir.join("reg.json");
        reg.save_weights(&bin, &meta).unwrap();
        let back = MlpRegressor::load_weights(&bin, &meta).unwrap();
        assert_eq!(back.layer_dims(), reg.layer_dims());
        assert_eq!(back.seed, Some(77));
        // Values survive the f32 narrowing exactly once.
        for (a, b) in reg.flatten_params().iter().zip(back.flatten_params()) {
            assert_eq!(*a as f32, b as f32);
        }
        // A second save/load of the loaded regressor is bit-exact.
        let bin2 = dir.join("reg2.f32");
        let meta2 = dir.join("reg2.json");
        back.save_weights(&bin2, &meta2).unwrap();
        let again = MlpRegressor::load_weights(&bin2, &meta2).unwrap();
        assert_eq!(again.flatten_params(), back.flatten_params());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dim_mismatches_are_rejected() {
        let reg = MlpRegressor::seeded(8, 0);
        assert!(reg.forward(&vec![0.0; 7]).is_err());
        assert!(MlpRegressor::from_layers(
            4,
            vec![(vec![0.0; 8], vec![0.0; 2]), (vec![0.0; 2], vec![0.0; 2])],
            Activation::Sigmoid,
        )
        .is_err());
    }
}

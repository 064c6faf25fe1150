use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AttentionError;

/// Head layout of the scaled dot-product core. `scale` is `1/sqrt(head_dim)`.
/// Single-head is the default; head count is orthogonal to the attention
/// pattern and the complexity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionConfig {
    pub heads: usize,
    pub head_dim: usize,
    pub scale: f64,
}

impl AttentionConfig {
    pub fn single_head(channels: usize) -> Result<Self, AttentionError> {
        Self::multi_head(1, channels)
    }

    pub fn multi_head(heads: usize, head_dim: usize) -> Result<Self, AttentionError> {
        if heads == 0 || head_dim == 0 {
            return Err(AttentionError::HeadSplit {
                heads,
                head_dim,
                channels: heads * head_dim,
            });
        }
        Ok(Self {
            heads,
            head_dim,
            scale: 1.0 / (head_dim as f64).sqrt(),
        })
    }

    pub fn channels(&self) -> usize {
        self.heads * self.head_dim
    }

    pub(crate) fn check_channels(&self, channels: usize) -> Result<(), AttentionError> {
        if self.channels() != channels {
            return Err(AttentionError::HeadSplit {
                heads: self.heads,
                head_dim: self.head_dim,
                channels,
            });
        }
        Ok(())
    }
}

/// Query/key/value/output projection matrices, `C x C` row-major f64.
///
/// No pretrained weights exist at this scale; matrices are drawn from a
/// seeded uniform distribution scaled by `1/sqrt(C)` so activations stay
/// O(1), and the seed is kept for reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    dim: usize,
    w_q: Vec<f64>,
    w_k: Vec<f64>,
    w_v: Vec<f64>,
    w_out: Vec<f64>,
    pub seed: Option<u64>,
}

impl ProjectionWeights {
    pub fn seeded(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (dim as f64).sqrt();
        let mut draw = |_: ()| -> Vec<f64> {
            (0..dim * dim)
                .map(|_| rng.random_range(-bound..bound))
                .collect()
        };
        let w_q = draw(());
        let w_k = draw(());
        let w_v = draw(());
        let w_out = draw(());
        Self {
            dim,
            w_q,
            w_k,
            w_v,
            w_out,
            seed: Some(seed),
        }
    }

    /// Identity projections; attention then mixes raw features directly.
    pub fn identity(dim: usize) -> Self {
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        Self {
            dim,
            w_q: eye.clone(),
            w_k: eye.clone(),
            w_v: eye.clone(),
            w_out: eye,
            seed: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w_q(&self) -> &[f64] {
        &self.w_q
    }

    pub fn w_k(&self) -> &[f64] {
        &self.w_k
    }

    pub fn w_v(&self) -> &[f64] {
        &self.w_v
    }

    pub fn w_out(&self) -> &[f64] {
        &self.w_out
    }

    pub(crate) fn check_dim(&self, channels: usize) -> Result<(), AttentionError> {
        if self.dim != channels {
            return Err(AttentionError::ShapeMismatch(format!(
                "projection weights are {}x{} but the grid has {channels} channels",
                self.dim, self.dim
            )));
        }
        Ok(())
    }
}

/// `y = W x` for a row-major square matrix.
pub(crate) fn apply_matrix(w: &[f64], x: &[f64], out: &mut [f64]) {
    let dim = x.len();
    for (row, o) in out.iter_mut().enumerate() {
        let wr = &w[row * dim..(row + 1) * dim];
        *o = super::kernel::dot(wr, x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validates_head_split() {
        let cfg = AttentionConfig::multi_head(4, 8).unwrap();
        assert_eq!(cfg.channels(), 32);
        assert!((cfg.scale - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        assert!(cfg.check_channels(32).is_ok());
        assert!(cfg.check_channels(16).is_err());
        assert!(AttentionConfig::multi_head(0, 8).is_err());
    }

    #[test]
    fn seeded_weights_are_reproducible_and_bounded() {
        let a = ProjectionWeights::seeded(16, 7);
        let b = ProjectionWeights::seeded(16, 7);
        assert_eq!(a, b);
        let bound = 1.0 / 4.0;
        assert!(a.w_q().iter().all(|v| v.abs() <= bound));
        assert_ne!(a.w_q(), ProjectionWeights::seeded(16, 8).w_q());
    }

    #[test]
    fn identity_weights_pass_vectors_through() {
        let w = ProjectionWeights::identity(3);
        let mut out = [0.0; 3];
        apply_matrix(w.w_q(), &[1.0, -2.0, 0.5], &mut out);
        assert_eq!(out, [1.0, -2.0, 0.5]);
    }
}

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::container::Float32Container;

use super::AttentionError;

/// An `N`-view stack of square `S x S x C` feature maps, row-major within
/// each view. Entries are finite f32; every attention variant consumes and
/// produces this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    views: usize,
    size: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureGrid {
    pub fn zeros(views: usize, size: usize, channels: usize) -> Result<Self, AttentionError> {
        check_dims(views, size, channels)?;
        Ok(Self {
            views,
            size,
            channels,
            data: vec![0.0; views * size * size * channels],
        })
    }

    pub fn from_vec(
        views: usize,
        size: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self, AttentionError> {
        check_dims(views, size, channels)?;
        let expected = views * size * size * channels;
        if data.len() != expected {
            return Err(AttentionError::ShapeMismatch(format!(
                "grid data has {} entries, expected {expected}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(AttentionError::NonFinite("feature grid data"));
        }
        Ok(Self {
            views,
            size,
            channels,
            data,
        })
    }

    /// Seeded uniform grid in `[-1, 1)`, the standard test fixture.
    pub fn random(views: usize, size: usize, channels: usize, seed: u64) -> Result<Self, AttentionError> {
        check_dims(views, size, channels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..views * size * size * channels)
            .map(|_| rng.random_range(-1.0f32..1.0))
            .collect();
        Self::from_vec(views, size, channels, data)
    }

    pub fn views(&self) -> usize {
        self.views
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn tokens(&self) -> usize {
        self.views * self.size * self.size
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn token_offset(&self, view: usize, row: usize, col: usize) -> usize {
        ((view * self.size + row) * self.size + col) * self.channels
    }

    pub fn token(&self, view: usize, row: usize, col: usize) -> &[f32] {
        let o = self.token_offset(view, row, col);
        &self.data[o..o + self.channels]
    }

    pub fn token_mut(&mut self, view: usize, row: usize, col: usize) -> &mut [f32] {
        let o = self.token_offset(view, row, col);
        &mut self.data[o..o + self.channels]
    }

    /// All tokens of one view as a flat slice.
    pub fn view_slice(&self, view: usize) -> &[f32] {
        let len = self.size * self.size * self.channels;
        &self.data[view * len..(view + 1) * len]
    }

    /// A copy with views reordered so that output view `i` is input view
    /// `perm[i]`.
    pub fn permute_views(&self, perm: &[usize]) -> Result<Self, AttentionError> {
        if perm.len() != self.views {
            return Err(AttentionError::ShapeMismatch(format!(
                "permutation has {} entries for {} views",
                perm.len(),
                self.views
            )));
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &src in perm {
            data.extend_from_slice(self.view_slice(src));
        }
        Self::from_vec(self.views, self.size, self.channels, data)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.data.len(), other.data.len(), "grids must match in shape");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((f64::from(*a) - f64::from(*b)).abs()))
    }

    pub fn to_container(&self) -> Float32Container {
        Float32Container::new(
            [
                self.views as u32,
                self.size as u32,
                self.size as u32,
                self.channels as u32,
            ],
            self.data.clone(),
        )
        .expect("grid dimensions always match its data")
    }

    pub fn from_container(container: Float32Container) -> Result<Self, AttentionError> {
        let [n, h, w, c] = container.dims;
        if h != w {
            return Err(AttentionError::ShapeMismatch(format!(
                "grid container must be square, got {h}x{w}"
            )));
        }
        Self::from_vec(n as usize, h as usize, c as usize, container.data)
    }

    pub fn save(&self, path: &Path) -> Result<(), AttentionError> {
        Ok(self.to_container().save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, AttentionError> {
        Self::from_container(Float32Container::load(path)?)
    }
}

fn check_dims(views: usize, size: usize, channels: usize) -> Result<(), AttentionError> {
    if views == 0 || size == 0 || channels == 0 {
        return Err(AttentionError::InvalidDims(format!(
            "grid dimensions must be positive, got N={views} S={size} C={channels}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(FeatureGrid::zeros(0, 4, 4).is_err());
        assert!(FeatureGrid::from_vec(1, 2, 2, vec![0.0; 7]).is_err());
        assert!(FeatureGrid::from_vec(1, 1, 2, vec![1.0, f32::NAN]).is_err());
    }

    #[test]
    fn token_indexing_is_row_major_within_views() {
        let mut g = FeatureGrid::zeros(2, 2, 3).unwrap();
        g.token_mut(1, 0, 1).copy_from_slice(&[1.0, 2.0, 3.0]);
        let flat = g.as_slice();
        let base = ((1 * 2 + 0) * 2 + 1) * 3;
        assert_eq!(&flat[base..base + 3], &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn container_round_trip_is_bit_exact() {
        let g = FeatureGrid::random(2, 3, 4, 99).unwrap();
        let back = FeatureGrid::from_container(g.to_container()).unwrap();
        assert_eq!(g.as_slice().len(), back.as_slice().len());
        for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn view_permutation_moves_whole_views() {
        let g = FeatureGrid::random(3, 2, 2, 1).unwrap();
        let p = g.permute_views(&[2, 0, 1]).unwrap();
        assert_eq!(p.view_slice(0), g.view_slice(2));
        assert_eq!(p.view_slice(1), g.view_slice(0));
    }
}

//! Flat little-endian float32 container with a 16-byte dimension header.
//!
//! The header holds four little-endian u32 values; a feature grid stores
//! `(N, S, S, C)` there, a flattened weight blob stores `(1, 1, 1, len)`.
//! The payload is the row-major f32 data, one value per header-product slot.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

pub const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("container truncated: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("container dimensions {dims:?} overflow the addressable size")]
    Oversized { dims: [u32; 4] },
    #[error("payload length {actual} does not match header product {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Float32Container {
    pub dims: [u32; 4],
    pub data: Vec<f32>,
}

impl Float32Container {
    pub fn new(dims: [u32; 4], data: Vec<f32>) -> Result<Self, ContainerError> {
        let expected = element_count(dims)?;
        if data.len() != expected {
            return Err(ContainerError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), ContainerError> {
        for d in self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, ContainerError> {
        let mut header = [0u8; HEADER_LEN];
        read_exact_or_truncated(&mut r, &mut header, HEADER_LEN)?;
        let mut dims = [0u32; 4];
        for (i, chunk) in header.chunks_exact(4).enumerate() {
            dims[i] = u32::from_le_bytes(chunk.try_into().expect("chunk is 4 bytes"));
        }
        let count = element_count(dims)?;
        let mut payload = vec![0u8; count * 4];
        read_exact_or_truncated(&mut r, &mut payload, HEADER_LEN + count * 4)?;
        let data = payload
            .chunks_exact(4)
            .map(|chunk| f32::from_le_bytes(chunk.try_into().expect("chunk is 4 bytes")))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn save(&self, path: &Path) -> Result<(), ContainerError> {
        let mut buf = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ContainerError> {
        Self::read_from(fs::File::open(path)?)
    }
}

fn element_count(dims: [u32; 4]) -> Result<usize, ContainerError> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .filter(|count| count.checked_mul(4).is_some())
        .ok_or(ContainerError::Oversized { dims })
}

fn read_exact_or_truncated(
    r: &mut impl Read,
    buf: &mut [u8],
    expected: usize,
) -> Result<(), ContainerError> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            return Err(ContainerError::Truncated {
                expected,
                actual: expected - (buf.len() - filled),
            });
        }
        filled += n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let data = vec![0.0f32, -1.5, 3.25e-7, f32::MIN_POSITIVE, 1234.5678];
        let c = Float32Container::new([1, 1, 1, 5], data.clone()).unwrap();
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 5 * 4);
        let back = Float32Container::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.dims, [1, 1, 1, 5]);
        for (a, b) in data.iter().zip(&back.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_is_little_endian() {
        let c = Float32Container::new([2, 3, 3, 4], vec![0.0; 72]).unwrap();
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], &[2, 0, 0, 0]);
        assert_eq!(&buf[4..8], &[3, 0, 0, 0]);
    }

    #[test]
    fn truncated_input_is_rejected() {
        let c = Float32Container::new([1, 1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        buf.pop();
        assert!(matches!(
            Float32Container::read_from(buf.as_slice()),
            Err(ContainerError::Truncated { .. })
        ));
        assert!(matches!(
            Float32Container::read_from(&buf[..10]),
            Err(ContainerError::Truncated { .. })
        ));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(Float32Container::new([1, 1, 1, 4], vec![0.0; 3]).is_err());
    }
}

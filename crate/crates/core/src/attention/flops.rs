//! Analytic multiply-accumulate counts for the score and value matmuls of
//! each variant (projections are excluded; they cost the same everywhere).
//!
//! With `T` query tokens each seeing `M` keys, the two matmuls cost
//! `2*T*M*C`. That gives:
//!
//! * dense:    `T = N*S^2`, `M = N*S^2`       -> `2*(N*S^2)^2*C`, order `N^2 S^4`
//! * row-wise: per row `T = M = N*S`, `S` rows -> `2*N^2*S^3*C`,   order `N^2 S^3`
//! * epipolar: `T = N*S^2`, `M = S + (N-1)*K` -> `2*N*S^2*(S + (N-1)*K)*C`,
//!   order `N^2 S^2 K`
//!
//! Dense over row-wise is exactly `S`; epipolar with `K = S` equals
//! row-wise.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Dense,
    Epipolar,
    RowWise,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Dense, Variant::Epipolar, Variant::RowWise];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Dense => "dense",
            Variant::Epipolar => "epipolar",
            Variant::RowWise => "row_wise",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dense" => Ok(Variant::Dense),
            "epipolar" => Ok(Variant::Epipolar),
            "row_wise" | "rowwise" => Ok(Variant::RowWise),
            other => Err(format!(
                "unknown variant {other:?} (expected dense, epipolar, or row-wise)"
            )),
        }
    }
}

/// Exact multiply-accumulate count of the score and value matmuls.
/// `k_samples` only matters for the epipolar variant. Saturates at
/// `u64::MAX`, far beyond any size this models.
pub fn flop_count(variant: Variant, views: usize, size: usize, channels: usize, k_samples: usize) -> u64 {
    let (n, s, c, k) = (
        views as u128,
        size as u128,
        channels as u128,
        k_samples as u128,
    );
    let macs = match variant {
        Variant::Dense => 2 * (n * s * s) * (n * s * s) * c,
        Variant::RowWise => 2 * n * n * s * s * s * c,
        Variant::Epipolar => 2 * n * s * s * (s + (n - 1) * k) * c,
    };
    u64::try_from(macs).unwrap_or(u64::MAX)
}

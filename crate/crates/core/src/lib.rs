//! Multiview attention over a canonical orthographic camera rig.
//!
//! The crate has four parts:
//!
//! * [`geometry`] — camera models, the six-view canonical rig, essential
//!   matrices and epipolar lines, and the row-alignment property that makes
//!   row-wise attention an exact epipolar attention on the canonical rig.
//! * [`attention`] — dense, row-wise, and sampled epipolar multiview
//!   attention over [`attention::FeatureGrid`] stacks, plus the three-stage
//!   cross-domain block and analytic flop/memory models.
//! * [`conditioning`] — the pooled-feature elevation/focal regression head,
//!   its MSE loss with finite-difference gradient verification, sinusoidal
//!   condition embeddings, guidance-averaged pose prediction, and the two
//!   beta noise schedules.
//! * [`bench`] — a wall-clock harness that sweeps the attention variants
//!   over latent sizes, fits log-log scaling exponents, and emits JSON/CSV
//!   reports.
//!
//! Sequential kernels are always available; the `parallel` feature (on by
//! default) adds `rayon`-backed variants under [`attention::par`] that are
//! bit-identical to their sequential counterparts.

pub mod attention;
pub mod bench;
pub mod conditioning;
pub mod container;
pub mod geometry;

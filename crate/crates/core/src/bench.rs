//! Wall-clock benchmark harness for the attention variants.
//!
//! The timed region covers exactly what the analytic flop model counts —
//! score matmuls, softmax, value matmuls, and (for the epipolar variant)
//! its line sampling — so fitted log-log slopes reflect the attention
//! pattern. Q/K/V projections are identical across variants and run before
//! the timer starts.
//!
//! Timing defaults to the sequential kernels so slopes measure arithmetic
//! complexity; [`ExecMode::Parallel`] opts into the rayon kernels and is
//! recorded in the report's environment note. Reported memory is the
//! analytic score-matrix footprint, not an allocator measurement; the
//! ceiling that skips oversized cases is based on the streaming kernels'
//! actual working set instead (the full score matrix is never
//! materialized).

use std::hint::black_box;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::{
    dense_core, epipolar_core, project_grid, row_wise_core, AttentionConfig, AttentionError,
    EpipolarPlan, FeatureGrid, ProjectionWeights, Variant, flop_count,
};
use crate::geometry::CameraModel;

/// Fixture seed shared by every case so analytic fields are reproducible.
const FIXTURE_SEED: u64 = 0x6d76_6174;

/// Default ceiling for a case's estimated working set: 4 GiB.
const DEFAULT_MEMORY_CEILING: u64 = 4 << 30;

/// Environment variable overriding the memory ceiling, in bytes.
pub const MEMORY_CEILING_ENV: &str = "MVATTN_MEMORY_CEILING_BYTES";

pub const CSV_HEADER: &str = "variant,N,S,C,K,median_ms,min_ms,flops,modeled_bytes";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("need at least 3 sizes for a sweep fit, got {0}")]
    NeedThreeSizes(usize),
    #[error("parallel mode requested but the `parallel` feature is compiled out")]
    ParallelUnavailable,
    #[error(transparent)]
    Attention(#[from] AttentionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl ExecMode {
    fn label(&self) -> &'static str {
        match self {
            ExecMode::Sequential => "sequential",
            ExecMode::Parallel => "parallel",
        }
    }

    fn parallel(&self) -> bool {
        matches!(self, ExecMode::Parallel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchCase {
    pub variant: Variant,
    pub views: usize,
    pub size: usize,
    pub channels: usize,
    pub k_samples: usize,
    pub repetitions: usize,
    pub warmup: usize,
}

impl BenchCase {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.views == 0 || self.size == 0 || self.channels == 0 || self.k_samples == 0 {
            return Err(BenchError::InvalidCase(format!(
                "sizes must be positive: N={} S={} C={} K={}",
                self.views, self.size, self.channels, self.k_samples
            )));
        }
        if self.repetitions < 3 {
            return Err(BenchError::InvalidCase(format!(
                "reported timings need at least 3 repetitions, got {}",
                self.repetitions
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub case: BenchCase,
    pub median_time_s: f64,
    pub min_time_s: f64,
    pub modeled_score_memory_bytes: u64,
    pub flops: u64,
}

/// Every requested case lands in a report, either with a measurement or
/// with an explicit skip record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CaseOutcome {
    Completed(BenchResult),
    Skipped { case: BenchCase, reason: String },
}

impl CaseOutcome {
    pub fn case(&self) -> &BenchCase {
        match self {
            CaseOutcome::Completed(res) => &res.case,
            CaseOutcome::Skipped { case, .. } => case,
        }
    }

    pub fn result(&self) -> Option<&BenchResult> {
        match self {
            CaseOutcome::Completed(res) => Some(res),
            CaseOutcome::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentNote {
    pub cpu_model: String,
    pub logical_cpus: usize,
    /// `sequential` or `parallel`; which kernels the timings exercised.
    pub execution: String,
}

impl EnvironmentNote {
    fn gather(mode: ExecMode) -> Self {
        Self {
            cpu_model: cpu_model(),
            logical_cpus: std::thread::available_parallelism()
                .map(std::num::NonZeroUsize::get)
                .unwrap_or(1),
            execution: mode.label().to_owned(),
        }
    }
}

/// Per-variant least-squares exponents of time and flops against `S`,
/// plus any adjacent-size timing inversions (expected noise-free runs have
/// none; one is tolerated but always flagged).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantFit {
    pub variant: Variant,
    pub time_slope: Option<f64>,
    pub flops_slope: Option<f64>,
    pub monotonic_inversions: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub environment: EnvironmentNote,
    pub outcomes: Vec<CaseOutcome>,
    pub fits: Vec<VariantFit>,
}

impl Report {
    pub fn result_for(&self, variant: Variant, size: usize) -> Option<&BenchResult> {
        self.outcomes.iter().find_map(|o| match o {
            CaseOutcome::Completed(res)
                if res.case.variant == variant && res.case.size == size =>
            {
                Some(res)
            }
            _ => None,
        })
    }

    pub fn fit_for(&self, variant: Variant) -> Option<&VariantFit> {
        self.fits.iter().find(|f| f.variant == variant)
    }
}

/// Peak score-matrix footprint in 32-bit floats, as bytes.
///
/// Dense materializes all `(N S^2)^2` scores at once; row-wise holds one
/// row's `(N S)^2` block at a time; epipolar holds `S + (N-1) K` scores per
/// token across a view batch, `N S^2 (S + (N-1) K)` in flight.
pub fn modeled_memory(
    variant: Variant,
    views: usize,
    size: usize,
    channels: usize,
    k_samples: usize,
) -> u64 {
    let _ = channels;
    let (n, s, k) = (views as u128, size as u128, k_samples as u128);
    let elems = match variant {
        Variant::Dense => (n * s * s) * (n * s * s),
        Variant::RowWise => (n * s) * (n * s),
        Variant::Epipolar => n * s * s * (s + (n - 1) * k),
    };
    u64::try_from(elems.saturating_mul(4)).unwrap_or(u64::MAX)
}

/// Rough working set of the streaming kernels for a case: f64 q/k/v and
/// output buffers plus the largest per-unit scratch. This is what the skip
/// ceiling compares against, since no kernel materializes the full score
/// matrix.
pub fn estimated_run_bytes(case: &BenchCase) -> u64 {
    let (n, s, c, k) = (
        case.views as u128,
        case.size as u128,
        case.channels as u128,
        case.k_samples as u128,
    );
    let tokens = n * s * s;
    let buffers = 5 * tokens * c * 8 + 2 * tokens * c * 4;
    let scratch = match case.variant {
        Variant::Dense => tokens * 8,
        Variant::RowWise => 2 * n * s * c * 8 + n * s * 8,
        Variant::Epipolar => {
            let keys = s + (n - 1) * k;
            2 * keys * c * 8 + keys * 8
        }
    };
    u64::try_from(buffers + scratch).unwrap_or(u64::MAX)
}

/// Ceiling used by [`run_case`] to decide skips; override with
/// [`MEMORY_CEILING_ENV`].
pub fn memory_ceiling_bytes() -> u64 {
    std::env::var(MEMORY_CEILING_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MEMORY_CEILING)
}

/// Evenly spaced elevation-zero orthographic cameras; the pose fixture for
/// epipolar cases of any view count.
fn bench_views(n: usize) -> Vec<CameraModel> {
    (0..n)
        .map(|i| {
            CameraModel::orthographic(1.0, 1.0, 0.0, 360.0 * i as f64 / n as f64)
                .expect("fixture cameras are valid")
        })
        .collect()
}

/// Runs one case: seeded fixture, untimed projection, `warmup` unrecorded
/// runs, then `repetitions` timed runs of the attention core. Cases whose
/// working set exceeds the memory ceiling are skipped, never aborted.
pub fn run_case(case: &BenchCase, mode: ExecMode) -> Result<CaseOutcome, BenchError> {
    case.validate()?;
    if mode.parallel() && !cfg!(feature = "parallel") {
        return Err(BenchError::ParallelUnavailable);
    }
    let needed = estimated_run_bytes(case);
    let ceiling = memory_ceiling_bytes();
    if needed > ceiling {
        return Ok(CaseOutcome::Skipped {
            case: *case,
            reason: format!(
                "estimated working set {needed} bytes exceeds the {ceiling} byte ceiling"
            ),
        });
    }

    let grid = FeatureGrid::random(case.views, case.size, case.channels, FIXTURE_SEED)?;
    let weights = ProjectionWeights::seeded(case.channels, FIXTURE_SEED ^ 1);
    let cfg = AttentionConfig::single_head(case.channels)?;
    let projected = project_grid(&grid, &weights, &cfg)?;
    let plan = match case.variant {
        Variant::Epipolar => Some(EpipolarPlan::new(&bench_views(case.views), case.k_samples)?),
        _ => None,
    };
    let parallel = mode.parallel();

    let run = || match case.variant {
        Variant::Dense => dense_core(&projected, &cfg, parallel),
        Variant::RowWise => row_wise_core(&projected, &cfg, parallel),
        Variant::Epipolar => epipolar_core(
            &projected,
            plan.as_ref().expect("plan exists for epipolar"),
            &cfg,
            parallel,
        ),
    };

    for _ in 0..case.warmup {
        black_box(run());
    }
    let mut times = Vec::with_capacity(case.repetitions);
    for _ in 0..case.repetitions {
        let start = Instant::now();
        let out = run();
        times.push(start.elapsed().as_secs_f64());
        black_box(out);
    }
    times.sort_by(|a, b| a.partial_cmp(b).expect("durations are finite"));
    let min_time_s = times[0];
    let median_time_s = if times.len() % 2 == 1 {
        times[times.len() / 2]
    } else {
        0.5 * (times[times.len() / 2 - 1] + times[times.len() / 2])
    };
    Ok(CaseOutcome::Completed(BenchResult {
        case: *case,
        median_time_s,
        min_time_s,
        modeled_score_memory_bytes: modeled_memory(
            case.variant,
            case.views,
            case.size,
            case.channels,
            case.k_samples,
        ),
        flops: flop_count(
            case.variant,
            case.views,
            case.size,
            case.channels,
            case.k_samples,
        ),
    }))
}

/// Runs all `(variant, size)` cases and fits per-variant scaling exponents.
/// Geometrically spaced sizes give the cleanest fits; at least three are
/// required.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    variants: &[Variant],
    sizes: &[usize],
    views: usize,
    channels: usize,
    k_samples: usize,
    repetitions: usize,
    warmup: usize,
    mode: ExecMode,
) -> Result<Report, BenchError> {
    if sizes.len() < 3 {
        return Err(BenchError::NeedThreeSizes(sizes.len()));
    }
    let mut outcomes = Vec::with_capacity(variants.len() * sizes.len());
    for &variant in variants {
        for &size in sizes {
            let case = BenchCase {
                variant,
                views,
                size,
                channels,
                k_samples,
                repetitions,
                warmup,
            };
            outcomes.push(run_case(&case, mode)?);
        }
    }
    let fits = variants
        .iter()
        .map(|&variant| fit_variant(variant, &outcomes))
        .collect();
    Ok(Report {
        environment: EnvironmentNote::gather(mode),
        outcomes,
        fits,
    })
}

fn fit_variant(variant: Variant, outcomes: &[CaseOutcome]) -> VariantFit {
    let completed: Vec<&BenchResult> = outcomes
        .iter()
        .filter_map(CaseOutcome::result)
        .filter(|res| res.case.variant == variant)
        .collect();
    let sizes: Vec<f64> = completed.iter().map(|r| r.case.size as f64).collect();
    let times: Vec<f64> = completed.iter().map(|r| r.median_time_s).collect();
    let flops: Vec<f64> = completed.iter().map(|r| r.flops as f64).collect();
    let mut inversions = Vec::new();
    for pair in completed.windows(2) {
        if pair[1].case.size > pair[0].case.size && pair[1].median_time_s < pair[0].median_time_s {
            inversions.push([pair[0].case.size, pair[1].case.size]);
        }
    }
    VariantFit {
        variant,
        time_slope: log_log_slope(&sizes, &times),
        flops_slope: log_log_slope(&sizes, &flops),
        monotonic_inversions: inversions,
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` below 3 points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 3 || xs.len() != ys.len() {
        return None;
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// Writes the report. JSON carries the full structure including skips and
/// fits; CSV has one row per completed result under [`CSV_HEADER`].
pub fn emit_report(
    report: &Report,
    format: ReportFormat,
    out: &mut dyn Write,
) -> Result<(), BenchError> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for res in report.outcomes.iter().filter_map(CaseOutcome::result) {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    res.case.variant,
                    res.case.views,
                    res.case.size,
                    res.case.channels,
                    res.case.k_samples,
                    res.median_time_s * 1e3,
                    res.min_time_s * 1e3,
                    res.flops,
                    res.modeled_score_memory_bytes,
                )?;
            }
        }
    }
    Ok(())
}

pub fn emit_report_to_path(
    report: &Report,
    format: ReportFormat,
    path: &Path,
) -> Result<(), BenchError> {
    let mut buf = Vec::new();
    emit_report(report, format, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Expected time-slope brackets, half a unit around the theoretical order
/// (4 for dense, 3 for row-wise, and the 2-to-3 range's midpoint for
/// epipolar at fixed K).
pub fn time_slope_bracket(variant: Variant) -> (f64, f64) {
    match variant {
        Variant::Dense => (3.5, 4.5),
        Variant::RowWise => (2.5, 3.5),
        Variant::Epipolar => (1.5, 2.5),
    }
}

pub fn flops_slope_target(variant: Variant) -> Option<f64> {
    match variant {
        Variant::Dense => Some(4.0),
        Variant::RowWise => Some(3.0),
        Variant::Epipolar => None,
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Scaling and speedup assertions over a finished sweep: time slopes within
/// their brackets, exact flop slopes and the dense/row-wise flop ratio `S`,
/// the 8x row-wise speedup floor at the largest shared size of at least 64,
/// and at most one flagged timing inversion per variant.
pub fn check_report(report: &Report) -> CheckOutcome {
    let mut notes = Vec::new();
    let mut passed = true;
    let fail = |notes: &mut Vec<String>, msg: String| {
        notes.push(format!("FAIL {msg}"));
    };

    for fit in &report.fits {
        let (lo, hi) = time_slope_bracket(fit.variant);
        match fit.time_slope {
            Some(slope) if (lo..=hi).contains(&slope) => {
                notes.push(format!("ok   {} time slope {slope:.3} in [{lo}, {hi}]", fit.variant));
            }
            Some(slope) => {
                passed = false;
                fail(&mut notes, format!("{} time slope {slope:.3} outside [{lo}, {hi}]", fit.variant));
            }
            None => {
                passed = false;
                fail(&mut notes, format!("{} has too few completed cases for a fit", fit.variant));
            }
        }
        if let Some(target) = flops_slope_target(fit.variant) {
            match fit.flops_slope {
                Some(slope) if (slope - target).abs() <= 1e-9 => {
                    notes.push(format!("ok   {} flops slope exactly {target}", fit.variant));
                }
                other => {
                    passed = false;
                    fail(&mut notes, format!("{} flops slope {other:?} != {target}", fit.variant));
                }
            }
        }
        if fit.monotonic_inversions.len() > 1 {
            passed = false;
            fail(&mut notes, format!(
                "{} timing not monotone in S: inversions {:?}",
                fit.variant, fit.monotonic_inversions
            ));
        } else if let Some(inv) = fit.monotonic_inversions.first() {
            notes.push(format!(
                "warn {} single timing inversion at S {} -> {} (treated as noise)",
                fit.variant, inv[0], inv[1]
            ));
        }
    }

    // Flop identity dense/row-wise = S wherever both completed.
    let mut shared: Vec<usize> = Vec::new();
    for outcome in &report.outcomes {
        let case = outcome.case();
        if case.variant == Variant::Dense {
            if let (Some(d), Some(r)) = (
                report.result_for(Variant::Dense, case.size),
                report.result_for(Variant::RowWise, case.size),
            ) {
                shared.push(case.size);
                if d.flops != r.flops * case.size as u64 {
                    passed = false;
                    fail(&mut notes, format!(
                        "flops(dense)/flops(row_wise) != S at S={}: {} vs {}",
                        case.size, d.flops, r.flops
                    ));
                }
            }
        }
    }
    if !shared.is_empty() {
        notes.push(format!("ok   flop ratio dense/row_wise = S at S in {shared:?}"));
    }

    if let Some(&size) = shared.iter().filter(|&&s| s >= 64).max() {
        let dense = report.result_for(Variant::Dense, size).expect("shared");
        let row = report.result_for(Variant::RowWise, size).expect("shared");
        let speedup = dense.median_time_s / row.median_time_s;
        if speedup >= 8.0 {
            notes.push(format!("ok   row_wise speedup {speedup:.1}x >= 8x at S={size}"));
        } else {
            passed = false;
            fail(&mut notes, format!("row_wise speedup {speedup:.1}x below the 8x floor at S={size}"));
        }
    }

    CheckOutcome { passed, notes }
}

fn cpu_model() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_owned())
        })
        .unwrap_or_else(|| "unknown".to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_case(variant: Variant) -> BenchCase {
        BenchCase {
            variant,
            views: 2,
            size: 4,
            channels: 8,
            k_samples: 2,
            repetitions: 3,
            warmup: 0,
        }
    }

    #[test]
    fn modeled_memory_examples() {
        // S=1 collapses dense and row-wise peaks.
        assert_eq!(
            modeled_memory(Variant::Dense, 6, 1, 32, 1),
            modeled_memory(Variant::RowWise, 6, 1, 32, 1)
        );
        // Dense over row-wise peak is S^2.
        let dense = modeled_memory(Variant::Dense, 6, 64, 32, 1);
        let row = modeled_memory(Variant::RowWise, 6, 64, 32, 1);
        assert_eq!(dense, row * 64 * 64);
        // Doubling S multiplies the dense footprint by 16.
        assert_eq!(
            modeled_memory(Variant::Dense, 6, 32, 32, 1) * 16,
            modeled_memory(Variant::Dense, 6, 64, 32, 1)
        );
    }

    #[test]
    fn minimal_case_completes_with_sane_statistics() {
        let outcome = run_case(&tiny_case(Variant::RowWise), ExecMode::Sequential).unwrap();
        let res = outcome.result().expect("tiny case runs");
        assert!(res.min_time_s <= res.median_time_s);
        assert!(res.min_time_s >= 0.0);
        assert_eq!(res.flops, flop_count(Variant::RowWise, 2, 4, 8, 2));
    }

    #[test]
    fn analytic_fields_are_deterministic() {
        let case = tiny_case(Variant::Epipolar);
        let a = run_case(&case, ExecMode::Sequential).unwrap();
        let b = run_case(&case, ExecMode::Sequential).unwrap();
        let (a, b) = (a.result().unwrap(), b.result().unwrap());
        assert_eq!(a.flops, b.flops);
        assert_eq!(a.modeled_score_memory_bytes, b.modeled_score_memory_bytes);
    }

    #[test]
    fn repetition_floor_is_enforced() {
        let mut case = tiny_case(Variant::Dense);
        case.repetitions = 2;
        assert!(matches!(
            run_case(&case, ExecMode::Sequential),
            Err(BenchError::InvalidCase(_))
        ));
    }

    #[test]
    fn oversized_cases_are_skipped_not_aborted() {
        // A ceiling below any real case forces the skip path.
        std::env::set_var(MEMORY_CEILING_ENV, "1");
        let outcome = run_case(&tiny_case(Variant::Dense), ExecMode::Sequential);
        std::env::remove_var(MEMORY_CEILING_ENV);
        match outcome.unwrap() {
            CaseOutcome::Skipped { reason, .. } => {
                assert!(reason.contains("ceiling"), "reason: {reason}")
            }
            CaseOutcome::Completed(_) => panic!("case should have been skipped"),
        }
    }

    #[test]
    fn sweep_reports_every_requested_case_and_exact_flop_slopes() {
        let report = sweep(
            &[Variant::Dense, Variant::RowWise],
            &[4, 8, 16],
            2,
            8,
            4,
            3,
            0,
            ExecMode::Sequential,
        )
        .unwrap();
        assert_eq!(report.outcomes.len(), 6);
        let dense = report.fit_for(Variant::Dense).unwrap();
        let row = report.fit_for(Variant::RowWise).unwrap();
        assert!((dense.flops_slope.unwrap() - 4.0).abs() <= 1e-9);
        assert!((row.flops_slope.unwrap() - 3.0).abs() <= 1e-9);
        assert!(dense.time_slope.is_some());
    }

    #[test]
    fn sweep_requires_three_sizes() {
        assert!(matches!(
            sweep(&[Variant::Dense], &[4, 8], 2, 8, 4, 3, 0, ExecMode::Sequential),
            Err(BenchError::NeedThreeSizes(2))
        ));
    }

    #[test]
    fn json_report_round_trips_bit_exactly() {
        let report = sweep(
            &[Variant::RowWise],
            &[4, 8, 16],
            2,
            8,
            4,
            3,
            0,
            ExecMode::Sequential,
        )
        .unwrap();
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Json, &mut buf).unwrap();
        let back: Report = serde_json::from_slice(&buf).unwrap();
        for (a, b) in report.outcomes.iter().zip(&back.outcomes) {
            let (a, b) = (a.result().unwrap(), b.result().unwrap());
            assert_eq!(a.median_time_s.to_bits(), b.median_time_s.to_bits());
            assert_eq!(a.min_time_s.to_bits(), b.min_time_s.to_bits());
            assert_eq!(a.flops, b.flops);
            assert_eq!(a.modeled_score_memory_bytes, b.modeled_score_memory_bytes);
        }
        let (a, b) = (&report.fits[0], &back.fits[0]);
        assert_eq!(
            a.time_slope.unwrap().to_bits(),
            b.time_slope.unwrap().to_bits()
        );
    }

    #[test]
    fn csv_output_matches_the_documented_header() {
        let report = Report {
            environment: EnvironmentNote::gather(ExecMode::Sequential),
            outcomes: vec![],
            fits: vec![],
        };
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim_end(), CSV_HEADER);

        let full = sweep(&[Variant::Dense], &[4, 8, 16], 2, 8, 4, 3, 0, ExecMode::Sequential)
            .unwrap();
        let mut buf = Vec::new();
        emit_report(&full, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn log_log_slope_recovers_power_laws() {
        let xs = [4.0f64, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(3)).collect();
        let slope = log_log_slope(&xs, &ys).unwrap();
        assert!((slope - 3.0).abs() <= 1e-12);
        assert!(log_log_slope(&xs[..2], &ys[..2]).is_none());
    }
}

use mvattn::bench::{run_case, BenchCase, ExecMode};
use mvattn::attention::Variant;

fn main() {
    for (variant, size, reps) in [
        (Variant::RowWise, 64, 3),
        (Variant::Dense, 32, 3),
        (Variant::Dense, 64, 3),
        (Variant::Epipolar, 32, 3),
    ] {
        let case = BenchCase {
            variant, views: 6, size, channels: 32, k_samples: 16,
            repetitions: reps, warmup: 0,
        };
        let t = std::time::Instant::now();
        let out = run_case(&case, ExecMode::Sequential).unwrap();
        let res = out.result().unwrap();
        println!(
            "{:>8} S={:>3}: median {:.3}s min {:.3}s (total {:.1}s) flops {:.2e}",
            variant.to_string(), size, res.median_time_s, res.min_time_s,
            t.elapsed().as_secs_f64(), res.flops as f64
        );
    }
}

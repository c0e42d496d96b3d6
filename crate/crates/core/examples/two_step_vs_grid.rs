//! Two-step selection against the exhaustive (k, alpha) grid on one sequence.

use std::time::Instant;

use fcmtune::fcm::{bitrate, generate, HyperParams};
use fcmtune::tuner::{alpha_grid, grid_search, k_grid, two_step_select, DEFAULT_ALPHA_STEPS, DEFAULT_MAX_K};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = HyperParams::new(3, 0.4)?;
    let seq = generate(&truth, 100_000, 5)?;
    println!("truth: k={} alpha={} -> {:.4} bps", truth.k, truth.alpha, bitrate(&seq, &truth)?.bits_per_symbol);

    let start = Instant::now();
    let two = two_step_select(&seq, 10)?;
    println!(
        "two-step: k*={} alpha*={:.4} -> {:.4} bps, {} evaluation, {:.2?}",
        two.params.k,
        two.params.alpha,
        two.bitrate.bits_per_symbol,
        two.evaluations,
        start.elapsed()
    );

    let start = Instant::now();
    let grid = grid_search(&seq, &k_grid(DEFAULT_MAX_K), &alpha_grid(DEFAULT_ALPHA_STEPS))?;
    println!(
        "grid:     k={} alpha={:.2} -> {:.4} bps, {} evaluations, {:.2?}",
        grid.params.k,
        grid.params.alpha,
        grid.bitrate.bits_per_symbol,
        grid.evaluations,
        start.elapsed()
    );
    Ok(())
}

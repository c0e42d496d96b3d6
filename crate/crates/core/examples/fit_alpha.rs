//! Maximum-likelihood smoothing for a fixed order, next to the generating value.

use fcmtune::alpha_ml::{fit_alpha, total_log_likelihood, CountMatrix};
use fcmtune::fcm::{bitrate, build_counts, generate, HyperParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for &(k, alpha) in &[(1, 0.2), (2, 0.3), (3, 0.8), (5, 0.5)] {
        let seq = generate(&HyperParams::new(k, alpha)?, 100_000, 3)?;
        let counts = CountMatrix::from_counts(&build_counts(&seq, k)?);
        let fit = fit_alpha(&counts)?;
        let at_truth = total_log_likelihood(&counts, alpha)?;
        let bps = bitrate(&seq, &HyperParams::new(k, fit.alpha_star)?)?.bits_per_symbol;
        println!(
            "k={k} alpha={alpha:<4} -> alpha*={:.4} (ll {:.1} vs {:.1} at truth, {} iterations, {bps:.4} bps)",
            fit.alpha_star, fit.log_likelihood, at_truth, fit.iterations
        );
    }
    Ok(())
}

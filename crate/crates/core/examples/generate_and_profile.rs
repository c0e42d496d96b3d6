//! Generate a sequence from a known FCM and locate its order from the pami profile.
//!
//!     cargo run --release --example generate_and_profile -- 3 0.5 100000

use fcmtune::alphabet::render_sequence;
use fcmtune::dependence::{profile, select_k, Measure, DEFAULT_MAX_LAG};
use fcmtune::fcm::{generate, HyperParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let k: usize = args.first().map_or(Ok(3), |s| s.parse())?;
    let alpha: f64 = args.get(1).map_or(Ok(0.5), |s| s.parse())?;
    let len: usize = args.get(2).map_or(Ok(100_000), |s| s.parse())?;

    let seq = generate(&HyperParams::new(k, alpha)?, len, 1)?;
    let head: String = render_sequence(&seq).chars().take(60).collect();
    println!("k={k} alpha={alpha} T={len}: {head}...");

    let p = profile(&seq, Measure::Pami, DEFAULT_MAX_LAG)?;
    for (h, v) in p.values.iter().enumerate() {
        let bar = "#".repeat((v * 400.0).round() as usize);
        println!("lag {:>2}  {v:.5}  {bar}", h + 1);
    }
    println!("k* = {}", select_k(&p)?);
    Ok(())
}

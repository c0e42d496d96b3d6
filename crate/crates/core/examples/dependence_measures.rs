//! Compare Cramér's ν, Cohen's κ and pami profiles on the same sequence.

use fcmtune::dependence::{profile, select_k, Measure};
use fcmtune::fcm::{generate, HyperParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = generate(&HyperParams::new(4, 0.2)?, 50_000, 11)?;
    let measures = [Measure::CramersV, Measure::CohensKappa, Measure::Pami];
    let profiles = measures
        .iter()
        .map(|&m| profile(&seq, m, 8))
        .collect::<Result<Vec<_>, _>>()?;

    println!("{:>4} {:>10} {:>10} {:>10}", "lag", "cramers", "kappa", "pami");
    for h in 1..=8 {
        let row: Vec<String> = profiles.iter().map(|p| format!("{:>10.5}", p.value(h))).collect();
        println!("{h:>4} {}", row.join(" "));
    }
    for (m, p) in measures.iter().zip(&profiles) {
        println!("argmax {:<8} -> {}", m.name(), select_k(p)?);
    }
    Ok(())
}

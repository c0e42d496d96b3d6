//! A scaled-down pipeline experiment written to a temporary directory.

use fcmtune::simharness::{emit_report, exp2_text, run, Experiment, ExperimentConfig, Preset, Report};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::preset(Experiment::Exp2Pipeline, Preset::Desk);
    cfg.t_set = vec![2_000, 20_000];
    cfg.replicas = 30;
    cfg.grid_k_max = 6;
    cfg.grid_alpha_steps = 21;
    cfg.k_set = (1..=6).collect();
    cfg.validate()?;

    let report = run(&cfg)?;
    let dir = std::env::temp_dir().join("fcmtune_simulate_small");
    let files = emit_report(&report, &dir)?;
    if let Report::Exp2(exp) = &report {
        print!("{}", exp2_text(exp));
    }
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

//! Command-line front end. `fcmtune <subcommand> --help` documents each
//! command; domain errors are reported on stderr as
//! `{"error": "...", "kind": "..."}` with exit status 1.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::alpha_ml::{fit_alpha, CountMatrix};
use crate::alphabet::{read_sequence_file, render_sequence, write_sequence_file, Alphabet};
use crate::codec::{compress, decompress, CompressedContainer};
use crate::dependence::{profile, select_k, Measure, DEFAULT_MAX_LAG};
use crate::error::{Error, Result};
use crate::fcm::{bitrate, build_counts, AdaptiveGenerator, HyperParams, SequenceGenerator};
use crate::simharness::{emit_report, exp2_text, run as run_experiment, Experiment, ExperimentConfig, Preset, Report};
use crate::tuner::{alpha_grid, compare, Comparison, grid_search, k_grid, two_step_select, DEFAULT_ALPHA_STEPS, DEFAULT_MAX_K};

#[derive(Debug, Parser)]
#[command(name = "fcmtune", version, about = "Finite-context model hyperparameter selection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Alphabet symbols in index order, or `dna` for ACGT.
    #[arg(long, global = true, default_value = "ABCD")]
    pub alphabet: String,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Random seed for commands that generate data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// Sequence file: one string over the alphabet, whitespace ignored.
    #[arg(short, long)]
    pub input: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a sequence from the adaptive FCM.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        length: usize,
        /// Output file (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dependence profile over lags 1..=hmax as CSV `lag,value`.
    Profile {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value = "pami")]
        measure: Measure,
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        hmax: usize,
    },
    /// Lag of maximum dependence, with the full profile, as JSON.
    SelectK {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value = "pami")]
        measure: Measure,
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        hmax: usize,
    },
    /// Maximum-likelihood smoothing for a fixed order, as JSON.
    FitAlpha {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        k: usize,
    },
    /// Two-step selection: k by pami, then alpha by maximum likelihood.
    Tune {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        hmax: usize,
    },
    /// Exhaustive bitrate search over k in 1..=kmax and alpha-steps values in [0, 1].
    Gridsearch {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = DEFAULT_MAX_K)]
        kmax: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA_STEPS)]
        alpha_steps: usize,
    },
    /// Theoretical code length in bits per symbol.
    Bitrate {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Range-code a sequence into an FCM1 container.
    Compress {
        #[command(flatten)]
        input: InputArg,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Decode an FCM1 container back to a sequence file.
    Decompress {
        #[command(flatten)]
        input: InputArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Two-step selection, grid search and (optionally) the true pair, as a CSV row.
    Compare {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, requires = "true_alpha")]
        true_k: Option<usize>,
        #[arg(long, requires = "true_k")]
        true_alpha: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        hmax: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_K)]
        kmax: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA_STEPS)]
        alpha_steps: usize,
    },
    /// Run a simulation experiment and write its report directory.
    Simulate {
        /// exp1 (dependence profiles) or exp2 (selection pipeline).
        #[arg(long, required_unless_present = "config")]
        experiment: Option<Experiment>,
        #[arg(long, default_value = "desk")]
        preset: Preset,
        /// JSON experiment config; replaces the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Parses the process arguments, runs the command and maps errors to the
/// JSON error line and exit status 1.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = json!({ "error": e.to_string(), "kind": e.kind() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let g = &cli.global;
    let alphabet = || Alphabet::from_arg(&g.alphabet);
    let read = |input: &InputArg| read_sequence_file(&input.input, alphabet()?);
    let mut out = std::io::stdout().lock();

    match &cli.command {
        Command::Generate { model, length, output } => {
            let params = HyperParams::new(model.k, model.alpha)?;
            let seed = g.seed.unwrap_or(0);
            let seq = AdaptiveGenerator::new(alphabet()?).generate(&params, *length, seed)?;
            match output {
                Some(path) => {
                    write_sequence_file(path, &seq)?;
                    if g.json {
                        let v = json!({"k": params.k, "alpha": params.alpha, "length": length, "seed": seed, "output": path});
                        emit_json(&mut out, &v)?;
                    }
                }
                None => {
                    let text = render_sequence(&seq);
                    writeln!(out, "{text}").map_err(stdout_err)?;
                }
            }
        }
        Command::Profile { input, measure, hmax } => {
            let p = profile(&read(input)?, *measure, *hmax)?;
            if g.json {
                emit_json(&mut out, &p)?;
            } else {
                writeln!(out, "lag,value").map_err(stdout_err)?;
                for (i, v) in p.values.iter().enumerate() {
                    writeln!(out, "{},{v}", i + 1).map_err(stdout_err)?;
                }
            }
        }
        Command::SelectK { input, measure, hmax } => {
            let p = profile(&read(input)?, *measure, *hmax)?;
            let k = select_k(&p)?;
            emit_json(&mut out, &json!({ "k_star": k, "profile": p }))?;
        }
        Command::FitAlpha { input, k } => {
            let seq = read(input)?;
            let fit = fit_alpha(&CountMatrix::from_counts(&build_counts(&seq, *k)?))?;
            emit_json(&mut out, &fit)?;
        }
        Command::Tune { input, hmax } => {
            let res = two_step_select(&read(input)?, *hmax)?;
            emit_json(&mut out, &res)?;
        }
        Command::Gridsearch { input, kmax, alpha_steps } => {
            let res = grid_search(&read(input)?, &k_grid(*kmax), &alpha_grid(*alpha_steps))?;
            emit_json(&mut out, &res)?;
        }
        Command::Bitrate { input, model } => {
            let b = bitrate(&read(input)?, &HyperParams::new(model.k, model.alpha)?)?;
            if g.json {
                let v = json!({"bps": b.bits_per_symbol, "total_bits": b.total_bits, "floored_events": b.floored_events});
                emit_json(&mut out, &v)?;
            } else {
                writeln!(out, "{}", b.bits_per_symbol).map_err(stdout_err)?;
            }
        }
        Command::Compress { input, output, model } => {
            let seq = read(input)?;
            let c = compress(&seq, &HyperParams::new(model.k, model.alpha)?)?;
            c.write(output)?;
            if g.json {
                emit_json(&mut out, &container_stats(&c, output))?;
            }
        }
        Command::Decompress { input, output } => {
            let c = CompressedContainer::read(&input.input)?;
            let seq = decompress(&c)?;
            write_sequence_file(output, &seq)?;
            if g.json {
                emit_json(&mut out, &container_stats(&c, output))?;
            }
        }
        Command::Compare {
            input,
            true_k,
            true_alpha,
            hmax,
            kmax,
            alpha_steps,
        } => {
            let seq = read(input)?;
            let truth = match (true_k, true_alpha) {
                (Some(k), Some(a)) => Some(HyperParams::new(*k, *a)?),
                _ => None,
            };
            let cmp = compare(&seq, truth, *hmax, &k_grid(*kmax), &alpha_grid(*alpha_steps))?;
            if g.json {
                emit_json(&mut out, &cmp)?;
            } else {
                writeln!(out, "{}", Comparison::CSV_HEADER).map_err(stdout_err)?;
                writeln!(out, "{}", cmp.csv_row()).map_err(stdout_err)?;
            }
        }
        Command::Simulate {
            experiment,
            preset,
            config,
            output,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_json_file(path)?,
                None => ExperimentConfig::preset(experiment.expect("clap requires it"), *preset),
            };
            if let Some(seed) = g.seed {
                cfg.base_seed = seed;
            }
            // Reports record results only, so reruns into another directory match byte for byte.
            cfg.output_dir = None;
            let report = run_experiment(&cfg)?;
            let files = emit_report(&report, output)?;
            if g.json {
                emit_json(&mut out, &json!({ "output_dir": output, "files": files }))?;
            } else if let Report::Exp2(exp) = &report {
                write!(out, "{}", exp2_text(exp)).map_err(stdout_err)?;
            } else {
                let summary = output.join("summary.txt");
                let text = std::fs::read_to_string(&summary).map_err(|e| Error::io(&summary, e))?;
                write!(out, "{text}").map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}

fn container_stats(c: &CompressedContainer, path: &Path) -> serde_json::Value {
    let bps = if c.len == 0 {
        0.0
    } else {
        c.payload_bits() as f64 / c.len as f64
    };
    json!({
        "file": path,
        "length": c.len,
        "k": c.params.k,
        "alpha": c.params.alpha,
        "header_bytes": c.header_len(),
        "payload_bytes": c.payload.len(),
        "payload_bps": bps,
    })
}

fn emit_json(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output types serialize");
    writeln!(out, "{text}").map_err(stdout_err)
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

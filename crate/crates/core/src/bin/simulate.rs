use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use multirat::experiments::{parse_scheme_list, run_sweep, write_summary_csv, write_summary_file, write_traces, ExperimentConfig, SweepSpec};

/// Monte-Carlo sweeps of multi-RAT over-the-air aggregation schemes.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Experiment config, TOML or JSON (by `.json` extension).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the sweep, e.g. `K=5,10,15,20`.
    #[arg(long)]
    sweep: Option<SweepSpec>,
    /// Comma-separated subset of proposed,only5g,onlywifi,qam16,exhaustive.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Summary CSV path; stdout when neither this nor `output` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-scheme dual-value traces next to the summary CSV.
    #[arg(long)]
    trace: bool,
}

fn run(args: Args) -> multirat::Result<()> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(sweep) = args.sweep {
        cfg.sweep = Some(sweep);
    }
    if let Some(list) = &args.schemes {
        cfg.schemes = parse_scheme_list(list)?;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(out) = args.out {
        cfg.output = Some(out);
    }
    cfg.validate()?;
    if args.trace && cfg.output.is_none() {
        return Err(multirat::Error::Config("--trace needs an output path".into()));
    }
    log::info!("running {} trials of {:?}", cfg.trials, cfg.schemes);
    let out = run_sweep(&cfg)?;
    let skipped = out.records.iter().filter(|r| r.metrics().is_none()).count();
    if skipped > 0 {
        log::warn!("{skipped} trial runs skipped");
    }
    match &cfg.output {
        Some(path) => {
            write_summary_file(&out.rows, path)?;
            log::info!("wrote {}", path.display());
            if args.trace {
                for p in write_traces(&out, cfg.sweep.as_ref().map(|s| s.axis), path)? {
                    log::info!("wrote {}", p.display());
                }
            }
        }
        None => write_summary_csv(&out.rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOG_LEVEL", "warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

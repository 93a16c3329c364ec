use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thermo_cli::{parse_config, run, EXIT_ERROR};

/// Pressure, dual entropy, equilibrium states and cocycle pressure from a config file.
#[derive(Parser, Debug)]
#[command(name = "thermo", version)]
struct Args {
    /// Run configuration (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSVs and summary.json.
    #[arg(long, default_value = "./out")]
    out: PathBuf,
    /// Worker threads (default: all hardware threads).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return exit(EXIT_ERROR);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errs) => {
            eprintln!("{errs}");
            return exit(EXIT_ERROR);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("cannot size the thread pool: {e}");
            return exit(EXIT_ERROR);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = args.threads;
    let outcome = run(&cfg, &args.out);
    if let Some(msg) = outcome.summary.get("message").and_then(|m| m.as_str()) {
        let name = outcome.summary["error"].as_str().unwrap_or("Error");
        eprintln!("{name}: {msg}");
    }
    println!("{}", args.out.join("summary.json").display());
    exit(outcome.exit_code)
}

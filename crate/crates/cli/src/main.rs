//! `diraclab`: batch front end for the Dirac spectral laboratory.
//!
//! Exit status: 0 on success, 1 on configuration errors, 2 when some rows
//! failed (listed in `failures.json`).

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{config_digest, execute, Command, RunError};
use config::RunConfig;
use output::{sha256_hex, Cache};

#[derive(Debug, Parser)]
#[command(name = "diraclab", version, about = "Spectral diagnostics for 1D Dirac operators")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for per-n computations.
    #[arg(long)]
    workers: Option<usize>,
    /// Recompute even if a cached result exists, and do not store one.
    #[arg(long)]
    no_cache: bool,
}

fn fail_config(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return fail_config(e),
    };
    let out = cli.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.out = Some(out.clone());
    if let Some(k) = cli.workers {
        if k == 0 {
            return fail_config("--workers must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return fail_config(e);
        }
    }
    if let Err(e) = cfg.validate() {
        return fail_config(e);
    }
    let potential_digest = match cfg.potential() {
        Ok(v) => v.digest(),
        Err(e) => return fail_config(e),
    };
    let digest = config_digest(&cfg);
    let key = sha256_hex(
        format!("{}\n{digest}\n{potential_digest}\n{}", cli.command.name(), dirac_core::VERSION).as_bytes(),
    );
    let cache = Cache::new(out.join(".cache"));
    let cached = if cli.no_cache { None } else { cache.get(&key) };
    let hit = cached.is_some();
    let art = match cached {
        Some(a) => a,
        None => match execute(cli.command, &cfg, &digest) {
            Ok(a) => a,
            Err(RunError::Config(e)) => return fail_config(e),
            Err(RunError::Io(e)) => return fail_config(format!("i/o: {e}")),
        },
    };
    if !hit && !cli.no_cache {
        if let Err(e) = cache.put(&key, &art) {
            eprintln!("warning: cache not written: {e}");
        }
    }
    let mut echo = serde_json::to_string_pretty(&cfg).expect("config serializes");
    echo.push('\n');
    let written = art
        .write_to(&out)
        .and_then(|w| std::fs::write(out.join("config.json"), echo).map(|_| w.len() + 1));
    let count = match written {
        Ok(n) => n,
        Err(e) => return fail_config(format!("cannot write to {}: {e}", out.display())),
    };
    eprintln!(
        "{}: {count} files in {}{}",
        cli.command.name(),
        out.display(),
        if hit { " (cached)" } else { "" }
    );
    if art.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} row failure(s), see failures.json", art.failures.len());
        ExitCode::from(2)
    }
}

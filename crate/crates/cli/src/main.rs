//! `inflab`: run scenario configurations and write CSV/JSON artifacts.

mod config;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use inflab_core::estimates;

const EXIT_FAILED_REPORTS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "inflab", version, about = "Regularized infinity-Laplace experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit wall time from the manifest so reruns are byte-identical.
        #[arg(long)]
        deterministic: bool,
    },
    /// Print the registry of reference boundary functions.
    ListReferences,
    /// Print tool and library versions.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListReferences => {
            for (name, desc) in inflab_core::analytic::REGISTRY {
                println!("{name:<16} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("inflab {}", env!("CARGO_PKG_VERSION"));
            println!("inflab-core {}", inflab_core::VERSION);
            ExitCode::SUCCESS
        }
        Command::Run { config, out, deterministic } => run(&config, out, deterministic),
    }
}

fn threads_from_env() -> Result<usize, String> {
    match std::env::var("INFLAB_THREADS") {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("INFLAB_THREADS must be a nonnegative integer, got `{v}`")),
    }
}

fn run(path: &Path, out: Option<PathBuf>, deterministic_flag: bool) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut loaded = match config::parse(&text, &base) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    loaded.config.deterministic |= deterministic_flag;
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out_dir = out.or_else(|| loaded.config.out_dir.as_ref().map(|p| loaded.resolve(p))).unwrap_or_else(|| PathBuf::from("out"));
    match execute(&loaded, &out_dir, threads) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_REPORTS),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn execute(loaded: &config::LoadedConfig, out_dir: &Path, threads: usize) -> Result<bool> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("building thread pool")?;
    let artifacts = pool.install(|| scenario::run(loaded))?;

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    for (name, body) in &artifacts.files {
        let p = out_dir.join(name);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        written.push(name.clone());
    }
    let mut csv = Vec::new();
    estimates::write_reports_csv(&artifacts.reports, &mut csv)?;
    std::fs::write(out_dir.join("reports.csv"), csv)?;
    let json = serde_json::to_string_pretty(&estimates::reports_json(&artifacts.reports))?;
    std::fs::write(out_dir.join("reports.json"), json + "\n")?;
    written.push("reports.csv".into());
    written.push("reports.json".into());

    let all_pass = artifacts.reports.iter().all(|r| r.pass);
    let mut manifest = serde_json::json!({
        "tool": "inflab",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": inflab_core::VERSION,
        "config": loaded.config,
        "artifacts": written,
        "report_count": artifacts.reports.len(),
        "failed_reports": artifacts.reports.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect::<Vec<_>>(),
        "all_pass": all_pass,
    });
    if !loaded.config.deterministic {
        manifest["wall_time_seconds"] = start.elapsed().as_secs_f64().into();
        manifest["threads"] = pool.current_num_threads().into();
    }
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    for r in artifacts.reports.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {}", r.csv_row());
    }
    Ok(all_pass)
}

//! `toruslab` — runs one experiment from a TOML configuration and writes
//! CSV/JSON results into the output directory.
//!
//! Exit codes: 0 success, 1 numerical or I/O failure, 2 configuration
//! error or inconsistent inputs. Failures also leave `<out>/error.json`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{CliError, Ctx};
use config::{Config, ConfigError};

#[derive(Parser)]
#[command(name = "toruslab", version, about = "Spectral experiments on perturbed surfaces of revolution")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Rotation numbers, averages and Q_∞ over an a-grid.
    ScanClassical,
    /// EBK quasi-eigenvalues in the energy window.
    Lattice,
    /// Eigenvalues of the discretized operator.
    Spectrum,
    /// Pair a stored spectrum with a stored lattice.
    Match,
    /// Window counts over an (h, ε) sweep and the exponent fit.
    CountScaling,
    /// Secular reduction and the G_T bound fit.
    Normalform,
    /// Toeplitz trace bound, Legendre duality and mode norms.
    ToeplitzBench,
    /// Screens levels F0 against a classical scan.
    GoodValues,
    /// Prints the fully defaulted configuration.
    DefaultConfig,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    status: &'static str,
    kind: &'a str,
    field: Option<&'a str>,
    message: String,
    exit_code: u8,
}

fn load(path: Option<&PathBuf>) -> Result<Config, ConfigError> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
    config::parse(&text)
}

fn run(cli: &Cli, cfg: Config, out: PathBuf) -> Result<(), CliError> {
    cfg.validate()?;
    let model_hash = cfg.model_hash()?;
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Run(toruslab::Error::Io(format!("{}: {e}", out.display()))))?;
    let ctx = Ctx {
        config_hash: cfg.config_hash(cli.seed),
        model_hash,
        cfg,
        out,
        seed: cli.seed,
        start: Instant::now(),
    };
    match cli.cmd {
        Cmd::ScanClassical => commands::scan_classical(&ctx),
        Cmd::Lattice => commands::lattice(&ctx),
        Cmd::Spectrum => commands::spectrum(&ctx),
        Cmd::Match => commands::match_cmd(&ctx),
        Cmd::CountScaling => commands::count_scaling(&ctx),
        Cmd::Normalform => commands::normalform(&ctx),
        Cmd::ToeplitzBench => commands::toeplitz_bench(&ctx),
        Cmd::GoodValues => commands::good_values(&ctx),
        Cmd::DefaultConfig => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Only fails if a pool already exists.
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    if let Cmd::DefaultConfig = cli.cmd {
        print!("{}", config::to_toml(&Config::default()));
        return ExitCode::SUCCESS;
    }
    let loaded = load(cli.config.as_ref());
    let out = cli.out.clone().unwrap_or_else(|| {
        PathBuf::from(loaded.as_ref().map(|c| c.out_dir.as_str()).unwrap_or("out"))
    });
    let result = match loaded {
        Ok(cfg) => run(&cli, cfg, out.clone()),
        Err(e) => Err(e.into()),
    };
    let err = match result {
        Ok(()) => {
            std::fs::remove_file(out.join("error.json")).ok();
            return ExitCode::SUCCESS;
        }
        Err(e) => e,
    };
    let record = match &err {
        CliError::Config(c) => ErrorRecord {
            status: "error",
            kind: "ConfigError",
            field: Some(&c.field),
            message: c.message.clone(),
            exit_code: 2,
        },
        CliError::Refused { kind, message } => ErrorRecord {
            status: "error",
            kind,
            field: None,
            message: message.clone(),
            exit_code: 2,
        },
        CliError::Run(e) => ErrorRecord {
            status: "error",
            kind: e.kind(),
            field: None,
            message: e.to_string(),
            exit_code: 1,
        },
    };
    let json = serde_json::to_string_pretty(&record).expect("error record serializes");
    eprintln!("{json}");
    if std::fs::create_dir_all(&out).is_ok() {
        std::fs::write(out.join("error.json"), format!("{json}\n")).ok();
    }
    ExitCode::from(record.exit_code)
}

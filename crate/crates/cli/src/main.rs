use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qhemi::hemi::DEFAULT_CAP;
use qhemi::Exec;
use qhemi_cli::commands::{cmd_construct, cmd_orbits, cmd_stats, cmd_verify, Output};
use qhemi_cli::selftest::selftest;
use qhemi_cli::{CliError, Format, ModelArgs, RunConfig, Status};

/// Hemisystems of the parabolic quadric Q(2d, q) admitting Ω₃(q).
#[derive(Parser)]
#[command(name = "qhemi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads; 1 runs every loop sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sizes of the geometry, the groups and the orbit counts.
    Stats(ModelFlags),
    /// B-orbits on points and maximals with their τ-images.
    Orbits(ModelFlags),
    /// Build and verify a hemisystem certificate.
    Construct {
        #[command(flatten)]
        model: ModelFlags,
        /// One bit per A-orbit, as hex; defaults to all zeros.
        #[arg(long)]
        mask: Option<String>,
        /// Certificate file, or directory with --all.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every hemisystem of the family (at most --cap of them).
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Check a certificate against a freshly rebuilt model.
    Verify { path: PathBuf },
    /// Run the named consistency checks.
    Selftest {
        #[command(flatten)]
        model: ModelFlags,
        /// Largest family enumerated in the round-trip check.
        #[arg(long, default_value_t = 256)]
        cap: u64,
    },
}

#[derive(Args, Clone)]
struct ModelFlags {
    /// Characteristic, an odd prime.
    #[arg(long = "p")]
    p: u32,
    /// Extension degree, q = p^k.
    #[arg(long = "k", default_value_t = 1)]
    k: u32,
    /// Reducing polynomial coefficients, lowest degree first (e.g. 1,0,1).
    #[arg(long, value_delimiter = ',')]
    modulus: Option<Vec<u32>>,
    /// Rank d ≥ 2 of the quadric Q(2d, q).
    #[arg(long = "d", default_value_t = 2)]
    d: usize,
}

impl From<ModelFlags> for ModelArgs {
    fn from(m: ModelFlags) -> ModelArgs {
        ModelArgs { p: m.p, k: m.k, modulus: m.modulus, d: m.d }
    }
}

fn config(model: ModelFlags, format: Format, exec: Exec) -> RunConfig {
    RunConfig { model: model.into(), mask: None, out: None, all: false, format, cap: DEFAULT_CAP, exec }
}

fn run(cli: Cli, exec: Exec) -> Result<Output, CliError> {
    match cli.command {
        Command::Stats(m) => cmd_stats(&config(m, cli.format, exec)),
        Command::Orbits(m) => cmd_orbits(&config(m, cli.format, exec)),
        Command::Construct { model, mask, out, all, cap } => {
            cmd_construct(&RunConfig { mask, out, all, cap, ..config(model, cli.format, exec) })
        }
        Command::Verify { path } => {
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
            cmd_verify(&text, exec)
        }
        Command::Selftest { model, cap } => {
            let report = selftest(&model.into(), cap, exec)?;
            let status = if report.all_pass() { Status::Ok } else { Status::Rejected };
            Ok(Output { status, text: report.to_string(), structured: serde_json::to_value(&report).unwrap() })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = match cli.jobs {
        Some(1) => Exec::Sequential,
        Some(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let format = cli.format;
    match run(cli, exec) {
        Ok(out) => {
            print!("{}", out.render(format));
            ExitCode::from(if out.status == Status::Ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

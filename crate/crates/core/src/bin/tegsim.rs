use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use teg_reconfig::cli::{self, RunConfig};
use teg_reconfig::Result;

#[derive(Parser)]
#[command(
    name = "tegsim",
    version,
    about = "TEG array reconfiguration simulator"
)]
struct Args {
    /// TOML config; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scheme to run (dnor, inor, fixed); repeat to select several.
    #[arg(long = "scheme", global = true)]
    schemes: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// I-V and P-V curves of one module.
    Curves {
        /// Temperature difference in K; repeatable.
        #[arg(long = "delta-t")]
        delta_ts: Vec<f64>,
    },
    /// Simulate each selected scheme over the trace.
    Run,
    /// Side-by-side totals for two or more schemes.
    Compare,
    /// INOR versus exhaustive search, plus invariant checks.
    Validate,
    /// INOR runtime against array size.
    Scaling {
        /// Comma-separated array sizes.
        #[arg(long, required = true, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    /// Write the configured synthetic trace as CSV.
    SynthTrace,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

fn execute(args: Args) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if !args.schemes.is_empty() {
        cfg.schemes = args.schemes;
    }
    cfg.validate()?;
    let out = cfg.out.clone();

    match args.command {
        Command::Curves { delta_ts } => {
            let dts = if delta_ts.is_empty() {
                cfg.curves.delta_ts.clone()
            } else {
                delta_ts
            };
            for path in cli::cmd_curves(&cfg, &dts, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Run => print!("{}", cli::cmd_run(&cfg, &out)?),
        Command::Compare => print!("{}", cli::cmd_compare(&cfg, &out)?),
        Command::Validate => {
            let report = cli::cmd_validate(&cfg, &out)?;
            print!("{}", report.text());
            if !report.passed() {
                return Ok(cli::EXIT_RUNTIME);
            }
        }
        Command::Scaling { sizes } => print!("{}", cli::cmd_scaling(&cfg, &sizes, &out)?.table()),
        Command::SynthTrace => println!("{}", cli::cmd_synth_trace(&cfg, &out)?.display()),
    }
    Ok(cli::EXIT_OK)
}

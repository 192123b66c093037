use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use secom_cli::commands::{self, EncodeArgs, RenderArgs};
use secom_cli::experiment::ExperimentConfig;
use secom_cli::{selftest, CliError, ConfigError};

#[derive(Parser)]
#[command(name = "secom", version, about = "Radiance-field streaming and federated training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Hierarchical federated training; writes history.csv, ledger.csv, global_model.splt.
    TrainFed(Common),
    /// Renders one view of a model file to a PPM image.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Camera position `x,y,z`.
        #[arg(long, value_parser = parse_vec3)]
        eye: [f64; 3],
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
        target: [f64; 3],
        #[arg(long, value_parser = parse_vec3, default_value = "0,1,0")]
        up: [f64; 3],
        #[arg(long, default_value_t = 60.0)]
        focal: f64,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        /// Image path; defaults to `<out>/render.ppm`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Encodes a chunk text file into the wire format.
    Encode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `<out>/chunk.nfsc`.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        m_dyn: Option<usize>,
        /// Per-chunk budget; defaults to tau × rate from the config.
        #[arg(long)]
        budget_bits: Option<f64>,
    },
    /// Decodes a wire chunk into a chunk text file of the transmitted frames.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `<out>/decoded.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Streams the synthetic benchmark once; writes frames.csv and chunks.csv.
    Simulate(Common),
    /// PSNR-versus-rate sweep; writes sweep.csv.
    Sweep(Common),
    /// Latency of the local, edge and co-rendering architectures; writes latency.csv.
    Latency(Common),
    /// Checks the production code against the reference oracles.
    Selftest,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    v.try_into().map_err(|_| format!("expected three comma-separated numbers, got `{s}`"))
}

fn load(common: &Common, required: bool) -> Result<ExperimentConfig, CliError> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?,
        None if required => return Err(ConfigError::general("missing --config").into()),
        None => String::new(),
    };
    let mut exp = ExperimentConfig::from_text(&text, common.seed).map_err(|e| match &common.config {
        Some(path) => match e.line {
            Some(line) => ConfigError::general(format!("{}:{line}: {}", path.display(), e.message)),
            None => ConfigError::general(format!("{}: {}", path.display(), e.message)),
        },
        None => e,
    })?;
    if let Some(out) = &common.out {
        exp.out = out.clone();
    }
    Ok(exp)
}

fn or_default(path: Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    path.unwrap_or_else(|| dir.join(name))
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::TrainFed(c) => commands::train_fed(&load(&c, true)?),
        Command::Simulate(c) => commands::simulate(&load(&c, true)?),
        Command::Sweep(c) => commands::sweep(&load(&c, true)?),
        Command::Latency(c) => commands::latency_table(&load(&c, true)?),
        Command::Render { common, model, eye, target, up, focal, height, width, output } => {
            let exp = load(&common, false)?;
            let output = or_default(output, &exp.out, "render.ppm");
            commands::render_view(&RenderArgs { model, eye, target, up, focal, height, width, output })
        }
        Command::Encode { common, input, output, q, m_dyn, budget_bits } => {
            let exp = load(&common, false)?;
            let output = or_default(output, &exp.out, "chunk.nfsc");
            commands::encode(&exp, &EncodeArgs { input, output, q, m_dyn, budget_bits })
        }
        Command::Decode { common, input, output } => {
            let exp = load(&common, false)?;
            commands::decode(&input, &or_default(output, &exp.out, "decoded.csv"))
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let mut report = String::new();
            for c in &checks {
                report.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            if checks.iter().all(|c| c.passed) {
                Ok(report)
            } else {
                print!("{report}");
                Err(CliError::Runtime("self-test failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("secom: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

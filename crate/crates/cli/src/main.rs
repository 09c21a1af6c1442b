use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qkd_sift::stats::{enumerate_bias, BasisProbabilities};
use qkd_sift::TerminationRule;
use qkd_sift_cli::config::{emit_config, load_config, Mode, OutputFormat, RunConfig, SweepAxis, SweepSpec};
use qkd_sift_cli::error::CliError;
use qkd_sift_cli::report::{emit_report, write_output};
use qkd_sift_cli::runner::{run, thread_count, with_pool, THREADS_ENV};
use qkd_sift_cli::verify::{verify_all, Scale};

#[derive(Parser)]
#[command(name = "qkd-sift", version, about = "Finite-key BB84 sifting simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output file; `-` for standard output.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads (also read from QKD_SIFT_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Key-rate sweep; `--axis` and `--values` override the config's sweep.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = parse_axis, requires = "values")]
        axis: Option<SweepAxis>,
        #[arg(long, value_delimiter = ',', requires = "axis")]
        values: Option<Vec<f64>>,
    },
    /// Print the fully defaulted form of a config file.
    Config {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suite at desk scale.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Exact sampling-bias enumeration for a few termination rules.
    BiasDemo {
        #[arg(long, default_value_t = 6)]
        max_rounds: u32,
        #[arg(long, default_value_t = 0.5)]
        p_z: f64,
    },
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown axis {s:?}; expected n_det_ter, delta, depolarizing_p or q_ratio"))
}

fn prepare(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(out) = &args.out {
        config.output_path = out.clone();
    }
    if let Some(format) = args.format {
        config.output_format = format;
    }
    Ok(config)
}

fn execute_and_emit(config: &RunConfig, threads: Option<usize>) -> Result<(), CliError> {
    config.validate()?;
    let results = run(config, threads)?;
    emit_report(config, &results)
}

fn bias_demo(max_rounds: u32, p_z: f64) -> Result<(), CliError> {
    let p_bases = BasisProbabilities { p_z_a: p_z, p_z_b: p_z };
    let rules = [
        TerminationRule::CountDetected { n: 2 },
        TerminationRule::CountDetected { n: 4 },
        TerminationRule::CountPerBasis { n_z_req: 1, n_x_req: 1 },
        TerminationRule::CountPerBasis { n_z_req: 2, n_x_req: 1 },
    ];
    let reports = rules.iter().map(|r| enumerate_bias(r, p_bases, max_rounds)).collect::<Result<Vec<_>, _>>()?;
    let mut out = serde_json::to_vec_pretty(&reports).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    write_output("-", &out)
}

fn verify(seed: u64, threads: Option<usize>) -> Result<bool, CliError> {
    let checks = with_pool(thread_count(threads)?, || verify_all(Scale::default(), seed))??;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run(args) => execute_and_emit(&prepare(&args)?, args.threads).map(|_| true),
        Command::Sweep { run, axis, values } => {
            let mut config = prepare(&run)?;
            config.mode = Mode::KeyrateSweep;
            if let (Some(axis), Some(values)) = (axis, values) {
                config.sweep = Some(SweepSpec { axis, values });
            }
            execute_and_emit(&config, run.threads).map(|_| true)
        }
        Command::Config { config } => {
            print!("{}", emit_config(&load_config(config)?));
            Ok(true)
        }
        Command::Verify { seed, threads } => verify(seed, threads),
        Command::BiasDemo { max_rounds, p_z } => bias_demo(max_rounds, p_z).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let record = serde_json::to_string(&e.record()).unwrap_or_else(|_| e.to_string());
            eprintln!("{record}");
            if matches!(e, CliError::Validation(ref m) if m.contains(THREADS_ENV)) {
                eprintln!("hint: unset {THREADS_ENV} or set it to a positive integer");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

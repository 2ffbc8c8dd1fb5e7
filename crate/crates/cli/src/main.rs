use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsrs_core::check;
use qsrs_core::report::{cmd_demo_sparsity, cmd_optimize, cmd_validate, CommandError, DemoTarget, RunConfig};

/// Interval min-max design optimization with sparse Chebyshev surrogates.
#[derive(Parser, Debug)]
#[command(name = "qsrs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Run config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run this seed only.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Built-in problem name or problem definition file.
    #[arg(long, global = true)]
    problem: Option<String>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for GA evaluation and scans.
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Island GA over surrogate worst cases.
    Optimize,
    /// Surrogate bounds against scanned ranges at one midpoint.
    Validate {
        /// Design midpoint, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        at: Vec<f64>,
    },
    /// Quadrature coefficients of a demo function.
    DemoSparsity {
        /// booth, chebyshev-t5 or zero.
        #[arg(default_value = "booth")]
        target: String,
        #[arg(long, default_value_t = 30)]
        atoms: usize,
        /// Gauss-Chebyshev nodes per dimension.
        #[arg(long, default_value_t = 16)]
        order: usize,
    },
    /// Replay the acceptance criteria.
    Check {
        /// Include the two optimization criteria (long).
        #[arg(long)]
        full: bool,
    },
}

fn run_config(common: &Common) -> Result<RunConfig, CommandError> {
    let mut cfg =
        RunConfig::resolve(common.config.as_deref(), common.problem.as_deref()).map_err(CommandError::Config)?;
    if let Some(s) = common.seed {
        cfg.seeds = vec![s];
    }
    if let Some(p) = common.parallel {
        cfg.ga.parallel = p;
        cfg.oracle.parallel = p;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = Some(o.clone());
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, write: impl FnOnce(std::fs::File) -> qsrs_core::Result<()>) -> Result<(), CommandError> {
    let io = |e: qsrs_core::Error| CommandError::Runtime { seed: None, error: e, partial: None };
    std::fs::create_dir_all(dir).map_err(|e| io(e.into()))?;
    let f = std::fs::File::create(dir.join(name)).map_err(|e| io(e.into()))?;
    write(f).map_err(io)
}

fn execute(cli: &Cli) -> Result<ExitCode, CommandError> {
    match &cli.command {
        Command::Optimize => {
            let cfg = run_config(&cli.common)?;
            let report = cmd_optimize(&cfg)?;
            print!("{}", report.render());
        }
        Command::Validate { at } => {
            let cfg = run_config(&cli.common)?;
            print!("{}", cmd_validate(&cfg, at)?.render());
        }
        Command::DemoSparsity { target, atoms, order } => {
            let t = DemoTarget::parse(target).map_err(CommandError::Config)?;
            let report = cmd_demo_sparsity(t, *atoms, *order).map_err(|e| match e {
                qsrs_core::Error::InsufficientNodes { .. } | qsrs_core::Error::InvalidArgument(_) => CommandError::Config(e),
                e => CommandError::Runtime { seed: None, error: e, partial: None },
            })?;
            print!("{}", report.render());
            if let Some(dir) = &cli.common.out {
                write_file(dir, &format!("sparsity_{target}.csv"), |f| report.write_csv(f))?;
            }
        }
        Command::Check { full } => {
            let outcomes = check::run_all(*full, &mut |o| println!("{}", o.line()));
            if let Some(dir) = &cli.common.out {
                write_file(dir, "check.json", |f| Ok(serde_json::to_writer_pretty(f, &outcomes)?))?;
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
            if failed > 0 {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

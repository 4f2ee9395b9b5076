use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tbnma::cli::{self, CliError, RunConfig, SimStudyConfig, EXIT_USAGE};
use tbnma::model::ModelKind;
use tbnma::sampler::SamplerConfig;

#[derive(Parser)]
#[command(
    name = "tbnma",
    version,
    about = "Time-varying Bayesian network meta-analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model to an arm-level CSV file.
    Run {
        input: PathBuf,
        #[arg(long, default_value = "tbnma")]
        model: ModelKind,
        #[command(flatten)]
        common: Common,
        /// Also write thinned draws to samples.csv.
        #[arg(long)]
        samples: bool,
    },
    /// Three simulated scenarios on a network skeleton, fitted with all three models.
    Simstudy {
        skeleton: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    baseline: Option<String>,
    /// Comma-separated treatment labels.
    #[arg(long, value_delimiter = ',')]
    time_varying: Vec<String>,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 20_000)]
    iters: usize,
    #[arg(long, default_value_t = 10_000)]
    burnin: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            n_chains: self.chains,
            n_iter: self.iters,
            burn_in: self.burnin,
            thin: self.thin,
            seed: self.seed,
            ..SamplerConfig::default()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            input,
            model,
            common,
            samples,
        } => {
            let mut config = RunConfig::new(input, model, &common.out);
            config.sampler = common.sampler();
            config.baseline = common.baseline;
            config.time_varying = common.time_varying;
            config.grid = common.grid;
            config.write_samples = samples;
            let summary = cli::run_analysis(&config)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", common.out.display());
        }
        Command::Simstudy { skeleton, common } => {
            let mut config = SimStudyConfig::new(skeleton, &common.out, common.seed);
            config.sampler = common.sampler();
            config.baseline = common.baseline;
            config.target = common.time_varying.first().cloned();
            config.grid = common.grid;
            let report = cli::run_simstudy(&config)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", common.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let result = cli::thread_pool().and_then(|pool| pool.install(|| execute(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

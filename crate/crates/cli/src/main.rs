use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use green_precoding::PrecoderKind;
use greenprec_cli::config::Overrides;
use greenprec_cli::{
    cmd_dump_channel, cmd_prox_check, cmd_run, cmd_validate, resolve_config, CliError,
};

/// Green one-bit precoding experiments for cell-free massive MIMO.
///
/// Every config key can also be set through an environment variable named
/// GREENPREC_<KEY> (for example GREENPREC_NUM_UES=8). Precedence: flags, then
/// environment, then config file, then built-in defaults.
#[derive(Parser)]
#[command(name = "greenprec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment and write CSV tables and a manifest.
    Run {
        #[command(flatten)]
        plan: PlanArgs,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Also write trace.csv: per-iteration objective and residual of the
        /// first symbol of setup 0 for every λ.
        #[arg(long)]
        trace: bool,
    },
    /// Parse and validate a configuration, then print it fully resolved.
    Validate {
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Compare the prox operators against brute-force oracles.
    ProxCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write one setup's channel matrix as text (header "K M", rows of re,im).
    DumpChannel {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 0)]
        setup: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// TOML or JSON config file; a manifest.json from an earlier run also works.
    #[arg(long, env = "GREENPREC_CONFIG")]
    config: Option<PathBuf>,
    /// Comma separated λ grid, e.g. 1,15,25.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    bits_per_ue: Option<usize>,
    #[arg(long)]
    setups: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma separated precoder names: GREEN, RZF1, SQUID, RZF1_ALIGNED,
    /// SQUID_ALIGNED, RZF1_ACR, SQUID_ACR.
    #[arg(long, value_delimiter = ',')]
    precoders: Option<Vec<PrecoderKind>>,
    /// Worker threads (0 = all cores); results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl PlanArgs {
    fn resolve(&self) -> Result<greenprec_cli::config::RunConfig, CliError> {
        let overrides = Overrides {
            lambdas: self.lambda.clone(),
            bits_per_ue: self.bits_per_ue,
            setups: self.setups,
            seed: self.seed,
            precoders: self.precoders.clone(),
            threads: self.threads,
        };
        resolve_config(self.config.as_deref(), &overrides)
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { plan, out, trace } => {
            let cfg = plan.resolve()?;
            let result = cmd_run(&cfg, &out, trace)?;
            for a in &result.activity {
                let green = result
                    .entry(a.lambda, PrecoderKind::Green)
                    .map(|e| e.overall_avg_ber)
                    .unwrap_or(f64::NAN);
                println!(
                    "lambda {}: avg active {:.2}/{}, GREEN BER {:.5}",
                    a.lambda, a.avg_active_antennas, result.num_antennas, green
                );
            }
            println!("results in {}", out.display());
        }
        Command::Validate { plan } => {
            print!("{}", cmd_validate(&plan.resolve()?)?);
        }
        Command::ProxCheck { cases, seed } => {
            let report = cmd_prox_check(cases, seed)?;
            println!(
                "{} cases ({} with w = 0): max linf deviation {:e}, max group deviation {:e}",
                report.cases,
                report.zero_weight_cases,
                report.max_linf_deviation,
                report.max_group_deviation
            );
        }
        Command::DumpChannel { plan, setup, out } => {
            cmd_dump_channel(&plan.resolve()?, setup, out.as_ref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

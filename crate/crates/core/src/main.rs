use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use odelora::cli::{self, CliError};
use odelora::diagnostics::ScalingSettings;
use odelora::Scheme;

#[derive(Parser)]
#[command(name = "odelora", version, about = "Balanced low-rank adaptation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to `<output.directory>/<output.run_label>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the problem and init seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for concurrent cells (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory.
    Run(Common),
    /// Run one trajectory per (scheme, value) cell.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary: h, delta, eps, scale, perturbation or iterations.
        #[arg(long, default_value = "h")]
        param: String,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0])]
        values: Vec<f64>,
        /// Comma-separated scheme names, or `all`.
        #[arg(long, default_value = "all")]
        schemes: String,
    },
    /// Observed order of the three flow integrators.
    Order(Common),
    /// Width sweep of the per-stage output contributions.
    FeatureScaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256, 512, 1024])]
        n_list: Vec<usize>,
        /// Number of seeds, counted up from `--seed` (default 0).
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value_t = 4)]
        rank: usize,
    },
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>, CliError> {
    if text == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    text.split(',')
        .map(|s| {
            s.trim().parse::<Scheme>().map_err(|message| {
                odelora::config::ConfigError::Parse { line: 0, message }.into()
            })
        })
        .collect()
}

fn setup(common: &Common) -> Result<(odelora::config::ExperimentConfig, PathBuf), CliError> {
    if common.jobs > 0 {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(common.jobs).build_global();
    }
    let cfg = cli::load_config(common.config.as_deref(), common.seed)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory).join(&cfg.output.run_label));
    Ok((cfg, out))
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(common) => {
            let (cfg, out) = setup(&common)?;
            let outcome = cli::cmd_run(&cfg, &out)?;
            eprintln!(
                "{}: {} rows, final loss {:.3e}{}",
                cfg.solver.scheme,
                outcome.log.rows.len(),
                outcome.log.final_loss(),
                if outcome.log.diverged() { " (diverged)" } else { "" }
            );
        }
        Command::Sweep { common, param, values, schemes } => {
            let (cfg, out) = setup(&common)?;
            let schemes = parse_schemes(&schemes)?;
            let cells = cli::cmd_sweep(&cfg, &param, &values, &schemes, &out)?;
            eprintln!("{} cells written to {}", cells.len(), out.display());
        }
        Command::Order(common) => {
            let (cfg, out) = setup(&common)?;
            for row in cli::cmd_order(&cfg, &out)? {
                eprintln!("{} h={} defect={:.3e}", row.scheme, row.h, row.defect);
            }
        }
        Command::FeatureScaling { common, n_list, seeds, steps, h, rank } => {
            let (cfg, out) = setup(&common)?;
            let base = common.seed.unwrap_or(0);
            let seeds: Vec<u64> = (base..base + seeds).collect();
            let settings = ScalingSettings { steps, h, eps: cfg.solver.eps, rank };
            for rep in cli::cmd_feature_scaling(&out, &n_list, &seeds, &settings)? {
                for c in &rep.slopes {
                    if let Some(s) = c.slope {
                        eprintln!("{} {} slope {:+.3}", rep.scheme, c.component, s);
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

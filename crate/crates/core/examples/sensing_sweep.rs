//! Step-size sweep over all seven schemes; writes the cell directories and
//! `summary.csv` under `out/sweep_example` (or the first argument).

use std::path::PathBuf;

use odelora::cli::cmd_sweep;
use odelora::config::ExperimentConfig;
use odelora::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/sweep_example"));
    let mut cfg = ExperimentConfig::default();
    cfg.solver.iterations = 300;
    let cells = cmd_sweep(&cfg, "h", &[0.1, 0.5, 1.0], &Scheme::ALL, &out)?;
    println!("{:>13} {:>5} {:>12} {:>9}", "scheme", "h", "final loss", "diverged");
    for c in &cells {
        println!("{:>13} {:>5} {:>12.3e} {:>9}", c.scheme, c.value, c.outcome.log.final_loss(), c.outcome.log.diverged());
    }
    println!("wrote {}", out.join("summary.csv").display());
    Ok(())
}

//! Observed order of the Euler, Heun and RK4 discretizations against a
//! fine RK4 reference.

use odelora::cli::build_instance;
use odelora::config::ExperimentConfig;
use odelora::diagnostics::{estimate_order_with_reference, order_reference};
use odelora::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::default();
    let inst = build_instance(&cfg)?;
    let hs = [0.2, 0.1, 0.05, 0.025];
    let reference = order_reference(&inst.init, &inst.task, 1.0, &hs, cfg.solver.eps)?;
    for scheme in [Scheme::OdeEuler, Scheme::OdeRk2, Scheme::OdeRk4] {
        let rep = estimate_order_with_reference(&inst.init, &inst.task, scheme, 1.0, &hs, &reference, cfg.solver.eps)?;
        let defects: Vec<String> = rep.defects.iter().map(|d| format!("{d:.2e}")).collect();
        println!("{scheme:>9}: order {:.3}  defects [{}]", rep.observed_order, defects.join(", "));
    }
    Ok(())
}

//! A full RK4 trajectory on the default sensing problem with the
//! initialization certificate and the fitted contraction.

use odelora::cli::{build_instance, summary_contraction};
use odelora::config::ExperimentConfig;
use odelora::solvers::{run_trajectory, State};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.solver.iterations = 150;
    let inst = build_instance(&cfg)?;
    println!("certificate at init: {:.4}", inst.certificate().unwrap_or(f64::NAN));
    let log = run_trajectory(State::Factors(inst.init.clone()), &inst.task, &cfg.solver)?;
    for row in log.rows.iter().step_by(25) {
        println!(
            "iter {:>4}  loss {:.3e}  eps_ratio {:.3}  balance {:.1e}",
            row.iter,
            row.loss,
            row.eps_ratio.unwrap_or(f64::NAN),
            row.balance_defect.unwrap_or(f64::NAN)
        );
    }
    println!("contraction per iteration: {:.4}", summary_contraction(&log.losses(), 0.0).unwrap_or(f64::NAN));
    Ok(())
}

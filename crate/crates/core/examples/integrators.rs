//! One step of every scheme from the same point of a sensing problem.

use odelora::diagnostics::balance_defect;
use odelora::problems::SensingProblem;
use odelora::solvers::{factor_step, full_ft_step, Scheme};

fn main() -> odelora::Result<()> {
    let p = SensingProblem::generate(20, 20, 20, 3, 0.05, 0)?;
    let task = p.task();
    let f0 = p.initial_point(0.9, 0.1, 0)?;
    let h = 0.1;
    println!("start: loss {:.6e}, balance defect {:.2e}", task.loss(&f0), balance_defect(&f0));
    for scheme in Scheme::ALL {
        if scheme == Scheme::FullFineTune {
            let w = full_ft_step(&task.weight(&f0), task.objective.as_ref(), h);
            println!("{scheme:>13}: loss {:.6e}", task.objective.loss(&w));
            continue;
        }
        let f1 = factor_step(scheme, &f0, &task, h, 1e-8)?;
        println!("{scheme:>13}: loss {:.6e}, balance defect {:.2e}", task.loss(&f1), balance_defect(&f1));
    }
    Ok(())
}

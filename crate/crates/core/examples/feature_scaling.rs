//! Width sweep of the per-stage output contributions for RK4 and plain
//! gradient descent. Smaller than the acceptance run: 3 seeds, n up to 512.

use odelora::diagnostics::{feature_scaling_experiment, ScalingSettings};
use odelora::Scheme;

fn main() -> odelora::Result<()> {
    let n_list = [64, 128, 256, 512];
    let seeds = [0, 1, 2];
    let settings = ScalingSettings::default();
    for scheme in [Scheme::OdeRk4, Scheme::ClassicalGd] {
        let rep = feature_scaling_experiment(scheme, &n_list, &seeds, &settings)?;
        println!("{scheme} (max sum-check residual {:.1e})", rep.max_sum_residual);
        for c in &rep.slopes {
            let med: Vec<String> = c.medians.iter().map(|m| format!("{m:.3e}")).collect();
            match c.slope {
                Some(s) => println!("  {:>3}: slope {s:+.3}  medians [{}]", c.component, med.join(", ")),
                None => println!("  {:>3}: vanishing", c.component),
            }
        }
    }
    Ok(())
}

//! Evaluates the balance-preserving field on a random instance and checks
//! the identities it satisfies.

use odelora::lora::{field_eval, flow_rhs_full, LoraFactors};
use odelora::Rng;

fn main() -> odelora::Result<()> {
    let mut rng = Rng::new(3);
    let (m, n, r) = (6, 5, 2);
    let f = LoraFactors::new(rng.gaussian(r, n, 1.0), rng.gaussian(m, r, 1.0))?;
    let g = rng.gaussian(m, n, 1.0);

    let fe = field_eval(&f, &g, 0.0)?;
    println!("‖F_A‖ = {:.6}, ‖F_B‖ = {:.6}, ‖X‖ = {:.6}", fe.fa.norm_fro(), fe.fb.norm_fro(), fe.x.norm_fro());

    // weight velocity B F_A + F_B A against the projected gradient
    let dw = &f.b.matmul(&fe.fa) + &fe.fb.matmul(&f.a);
    let rhs = flow_rhs_full(&f, &g, 0.0)?;
    println!("velocity identity residual: {:.2e}", (&dw - &rhs).norm_fro() / g.norm_fro());

    let left = fe.fa.matmul_tr(&f.a);
    let right = fe.fb.tr_matmul(&f.b);
    let tangency = &(&left + &left.transpose()) - &(&right + &right.transpose());
    println!("balance tangency residual: {:.2e}", tangency.norm_fro());
    println!("X asymmetry: {:.2e}", fe.x.asymmetry());
    Ok(())
}

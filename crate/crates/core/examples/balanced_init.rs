//! Balanced factorization of a low-rank matrix and the zero-B starts.

use odelora::diagnostics::balance_defect;
use odelora::problems::{balanced_init, zero_b_init, zero_b_init_aligned};
use odelora::Rng;

fn main() -> odelora::Result<()> {
    let mut rng = Rng::new(5);
    let w = rng.gaussian(8, 3, 1.0).matmul(&rng.gaussian(3, 6, 1.0));
    let f = balanced_init(&w, 3)?;
    println!("reconstruction error {:.2e}", (&f.product() - &w).norm_fro());
    println!("balance defect {:.2e}", balance_defect(&f));
    println!("A Aᵀ =\n{:?}", f.a.matmul_tr(&f.a));

    let n = 256;
    let s = rng.unit_vec(n);
    let iso = zero_b_init(n, 16, 4, 1)?;
    let aligned = zero_b_init_aligned(&s, 16, 4, 1)?;
    let norm = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("isotropic ‖A s‖ = {:.4} (√(r/n) = {:.4})", norm(iso.a.mul_vec(&s)), (4.0f64 / n as f64).sqrt());
    println!("aligned   ‖A s‖ = {:.4}", norm(aligned.a.mul_vec(&s)));
    Ok(())
}

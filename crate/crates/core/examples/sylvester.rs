//! Dense kernels: Cholesky, Jacobi eigendecomposition, the symmetric
//! Sylvester solve and the thin SVD.

use odelora::matrix::{cholesky_solve, sylvester_spd, sym_eig, thin_svd};
use odelora::{Matrix, Rng};

fn main() -> odelora::Result<()> {
    let mut rng = Rng::new(11);
    let m = rng.gaussian(4, 4, 1.0);
    let h = m.tr_matmul(&m).add_diag(0.5);
    let c = rng.gaussian(4, 4, 1.0).symmetrize();

    let e = sym_eig(&h)?;
    println!("eig(H) = {:?}", e.eigenvalues);

    let x = sylvester_spd(&h, &c)?;
    let resid = &(&h.matmul(&x) + &x.matmul(&h)) - &c;
    println!("HX + XH = C residual {:.2e}, asymmetry {:.2e}", resid.norm_fro(), x.asymmetry());

    let z = cholesky_solve(&h, &Matrix::identity(4))?;
    println!("‖H H⁻¹ − I‖ = {:.2e}", (&h.matmul(&z) - &Matrix::identity(4)).norm_fro());

    let low = rng.gaussian(7, 2, 1.0).matmul(&rng.gaussian(2, 5, 1.0));
    let svd = thin_svd(&low, 2)?;
    println!("σ = {:?}, reconstruction error {:.2e}", svd.sigma, (&svd.reconstruct() - &low).norm_fro());
    Ok(())
}

//! Adapter state, the objective interface and the constrained field.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::{sylvester_spd, Cholesky, Matrix};

/// Adapter pair with `A: r x n` and `B: m x r`; the update is `B A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraFactors {
    pub a: Matrix,
    pub b: Matrix,
}

impl LoraFactors {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        let r = a.rows();
        if b.cols() != r {
            return Err(Error::DimensionMismatch {
                op: "LoraFactors::new",
                detail: format!("A is {:?}, B is {:?}", a.shape(), b.shape()),
            });
        }
        if r == 0 || r > b.rows().min(a.cols()) {
            return Err(Error::InvalidRank { rank: r, rows: b.rows(), cols: a.cols() });
        }
        Ok(Self { a, b })
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    /// Output dimension `m`.
    pub fn m(&self) -> usize {
        self.b.rows()
    }

    /// Input dimension `n`.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn product(&self) -> Matrix {
        self.b.matmul(&self.a)
    }

    /// `(A, B) + h (dA, dB)`.
    pub fn step(&self, h: f64, da: &Matrix, db: &Matrix) -> Self {
        Self { a: self.a.add_scaled(h, da), b: self.b.add_scaled(h, db) }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }
}

/// A differentiable loss over the full `m x n` weight.
pub trait Objective: Send + Sync {
    fn loss(&self, w: &Matrix) -> f64;
    fn grad(&self, w: &Matrix) -> Matrix;
    fn optimum_loss(&self) -> Option<f64> {
        None
    }
    fn optimum_weight(&self) -> Option<&Matrix> {
        None
    }
}

/// Frozen pretrained weight plus the objective evaluated at
/// `W = W_pt + B A`. The product is recomputed on every call.
#[derive(Clone)]
pub struct Task {
    pub w_pt: Matrix,
    pub objective: Arc<dyn Objective>,
}

impl Task {
    pub fn new(w_pt: Matrix, objective: Arc<dyn Objective>) -> Self {
        Self { w_pt, objective }
    }

    pub fn weight(&self, f: &LoraFactors) -> Matrix {
        let mut w = f.product();
        w += &self.w_pt;
        w
    }

    pub fn loss(&self, f: &LoraFactors) -> f64 {
        self.objective.loss(&self.weight(f))
    }

    pub fn grad(&self, f: &LoraFactors) -> Matrix {
        self.objective.grad(&self.weight(f))
    }
}

impl std::fmt::Debug for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Task").field("shape", &self.w_pt.shape()).finish_non_exhaustive()
    }
}

/// One evaluation of the field: factor velocities and the Sylvester
/// multiplier.
#[derive(Debug, Clone)]
pub struct FieldEval {
    pub fa: Matrix,
    pub fb: Matrix,
    pub x: Matrix,
}

/// `A Aᵀ + eps I`.
pub fn gram_a(f: &LoraFactors, eps: f64) -> Matrix {
    f.a.matmul_tr(&f.a).symmetrize().add_diag(eps)
}

/// `Bᵀ B + eps I`.
pub fn gram_b(f: &LoraFactors, eps: f64) -> Matrix {
    f.b.tr_matmul(&f.b).symmetrize().add_diag(eps)
}

/// `I - Aᵀ (A Aᵀ + eps I)⁻¹ A`, an `n x n` matrix.
pub fn null_projector_a(f: &LoraFactors, eps: f64) -> Result<Matrix> {
    let z = Cholesky::new(&gram_a(f, eps))?.solve(&f.a);
    Ok(Matrix::identity(f.n()).add_scaled(-1.0, &f.a.tr_matmul(&z)))
}

/// `I - B (Bᵀ B + eps I)⁻¹ Bᵀ`, an `m x m` matrix.
pub fn null_projector_b(f: &LoraFactors, eps: f64) -> Result<Matrix> {
    let z = Cholesky::new(&gram_b(f, eps))?.solve(&f.b.transpose());
    Ok(Matrix::identity(f.m()).add_scaled(-1.0, &f.b.matmul(&z)))
}

/// Applies the column-space null projector of `B` to `y` (`m x k`).
fn apply_null_b(b: &Matrix, chol_q: &Cholesky, y: &Matrix) -> Matrix {
    let coef = chol_q.solve(&b.tr_matmul(y));
    y.add_scaled(-1.0, &b.matmul(&coef))
}

/// Applies the row-space null projector of `A` from the right to `y` (`k x n`).
fn apply_null_a(a: &Matrix, chol_p: &Cholesky, y: &Matrix) -> Matrix {
    let coef = chol_p.solve(&a.matmul_tr(y)); // r x k = P⁻¹ A yᵀ
    y.add_scaled(-1.0, &coef.tr_matmul(a))
}

/// Evaluates the balanced field at `f` for full-weight gradient `g`.
pub fn field_eval(f: &LoraFactors, g: &Matrix, eps: f64) -> Result<FieldEval> {
    if g.shape() != (f.m(), f.n()) {
        return Err(Error::DimensionMismatch {
            op: "field_eval",
            detail: format!("gradient {:?} for factors {}x{}", g.shape(), f.m(), f.n()),
        });
    }
    let gp = gram_a(f, eps);
    let gq = gram_b(f, eps);
    let chol_p = Cholesky::new(&gp)?;
    let chol_q = Cholesky::new(&gq)?;

    let q_btg = chol_q.solve(&f.b.tr_matmul(g)); // r x n
    let m = q_btg.matmul_tr(&f.a); // r x r
    let c = &m + &m.transpose();
    let h = (&gp + &gq).symmetrize();
    let x = sylvester_spd(&h, &c)?;

    let mut fa = x.matmul(&f.a);
    fa -= &q_btg;

    // G Aᵀ P⁻¹ = (P⁻¹ A Gᵀ)ᵀ
    let gat_pinv = chol_p.solve(&f.a.matmul_tr(g)).transpose(); // m x r
    let mut fb = apply_null_b(&f.b, &chol_q, &gat_pinv);
    fb += &f.b.matmul(&x);
    let fb = -&fb;

    Ok(FieldEval { fa, fb, x })
}

/// `-G + P_B G P_A`, the full-weight velocity the field reproduces.
pub fn flow_rhs_full(f: &LoraFactors, g: &Matrix, eps: f64) -> Result<Matrix> {
    let chol_p = Cholesky::new(&gram_a(f, eps))?;
    let chol_q = Cholesky::new(&gram_b(f, eps))?;
    let pg = apply_null_b(&f.b, &chol_q, g);
    let pgp = apply_null_a(&f.a, &chol_p, &pg);
    Ok(pgp.add_scaled(-1.0, g))
}

/// `P_B G P_A` with both projectors regularized by `eps`.
pub fn project_both(f: &LoraFactors, g: &Matrix, eps: f64) -> Result<Matrix> {
    let chol_p = Cholesky::new(&gram_a(f, eps))?;
    let chol_q = Cholesky::new(&gram_b(f, eps))?;
    Ok(apply_null_a(&f.a, &chol_p, &apply_null_b(&f.b, &chol_q, g)))
}

/// Preconditioned directions `(-(BᵀB+εI)⁻¹ Bᵀ G, -G Aᵀ (AAᵀ+εI)⁻¹)`.
pub fn riemannian_directions(f: &LoraFactors, g: &Matrix, eps: f64) -> Result<(Matrix, Matrix)> {
    let chol_p = Cholesky::new(&gram_a(f, eps))?;
    let chol_q = Cholesky::new(&gram_b(f, eps))?;
    let da = -&chol_q.solve(&f.b.tr_matmul(g));
    let db = -&chol_p.solve(&f.a.matmul_tr(g)).transpose();
    Ok((da, db))
}

/// The `X = 0` member of the gradient-matching family.
pub fn lorapro_directions(f: &LoraFactors, g: &Matrix, eps: f64) -> Result<(Matrix, Matrix)> {
    let chol_p = Cholesky::new(&gram_a(f, eps))?;
    let chol_q = Cholesky::new(&gram_b(f, eps))?;
    let da = -&chol_q.solve(&f.b.tr_matmul(g));
    let gat_pinv = chol_p.solve(&f.a.matmul_tr(g)).transpose();
    let db = -&apply_null_b(&f.b, &chol_q, &gat_pinv);
    Ok((da, db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_factors(m: usize, n: usize, r: usize, seed: u64) -> LoraFactors {
        let mut rng = Rng::new(seed);
        LoraFactors::new(rng.gaussian(r, n, 1.0), rng.gaussian(m, r, 1.0)).unwrap()
    }

    #[test]
    fn factors_validate_shapes() {
        assert!(LoraFactors::new(Matrix::zeros(2, 5), Matrix::zeros(4, 3)).is_err());
        assert!(LoraFactors::new(Matrix::zeros(5, 3), Matrix::zeros(4, 5)).is_err());
        assert!(LoraFactors::new(Matrix::zeros(2, 5), Matrix::zeros(4, 2)).is_ok());
    }

    #[test]
    fn gram_examples() {
        let f = LoraFactors::new(Matrix::from_rows(&[&[0.0, 1.0, 0.0]]), Matrix::from_rows(&[&[1.0], &[0.0]])).unwrap();
        assert_eq!(gram_a(&f, 0.0), Matrix::identity(1));
        let z = LoraFactors::new(Matrix::zeros(2, 4), Matrix::zeros(3, 2)).unwrap();
        assert_eq!(gram_a(&z, 1e-8), Matrix::identity(2).scale(1e-8));
        assert_eq!(gram_b(&z, 1e-8), Matrix::identity(2).scale(1e-8));
    }

    #[test]
    fn coordinate_projector() {
        let a = Matrix::from_fn(2, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        let f = LoraFactors::new(a, Matrix::zeros(3, 2)).unwrap();
        let p = null_projector_a(&f, 0.0).unwrap();
        assert_eq!(p, Matrix::diag(&[0.0, 0.0, 1.0, 1.0]));
    }

    #[test]
    fn full_rank_square_projectors_vanish() {
        let f = random_factors(3, 3, 3, 11);
        assert!(null_projector_a(&f, 0.0).unwrap().norm_fro() < 1e-10);
        assert!(null_projector_b(&f, 0.0).unwrap().norm_fro() < 1e-10);
        let g = Rng::new(2).gaussian(3, 3, 1.0);
        let rhs = flow_rhs_full(&f, &g, 0.0).unwrap();
        assert!((&rhs + &g).norm_fro() < 1e-10 * g.norm_fro());
    }

    #[test]
    fn zero_gradient_gives_zero_field() {
        let f = random_factors(5, 6, 2, 1);
        let fe = field_eval(&f, &Matrix::zeros(5, 6), 0.0).unwrap();
        assert_eq!(fe.fa.norm_fro(), 0.0);
        assert_eq!(fe.fb.norm_fro(), 0.0);
        assert_eq!(fe.x.norm_fro(), 0.0);
    }

    #[test]
    fn scalar_field() {
        let one = Matrix::from_rows(&[&[1.0]]);
        let f = LoraFactors::new(one.clone(), one).unwrap();
        let g = 0.8;
        let fe = field_eval(&f, &Matrix::from_rows(&[&[g]]), 0.0).unwrap();
        assert!((fe.x[(0, 0)] - g / 2.0).abs() < 1e-15);
        assert!((fe.fa[(0, 0)] + g / 2.0).abs() < 1e-15);
        assert!((fe.fb[(0, 0)] + g / 2.0).abs() < 1e-15);
    }

    #[test]
    fn velocity_identity_and_tangency() {
        for seed in 0..20 {
            let f = random_factors(6, 7, 3, seed);
            let g = Rng::new(100 + seed).gaussian(6, 7, 1.0);
            let fe = field_eval(&f, &g, 0.0).unwrap();
            let dw = &f.b.matmul(&fe.fa) + &fe.fb.matmul(&f.a);
            let rhs = flow_rhs_full(&f, &g, 0.0).unwrap();
            assert!((&dw - &rhs).norm_fro() <= 1e-10 * g.norm_fro());

            let lhs = &fe.fa.matmul_tr(&f.a) + &f.a.matmul_tr(&fe.fa);
            let rhs = &fe.fb.tr_matmul(&f.b) + &f.b.tr_matmul(&fe.fb);
            assert!((&lhs - &rhs).norm_fro() <= 1e-10 * (lhs.norm_fro() + 1.0));
        }
    }

    #[test]
    fn lorapro_differs_by_gauge_term() {
        let f = random_factors(5, 6, 2, 4);
        let g = Rng::new(9).gaussian(5, 6, 1.0);
        let fe = field_eval(&f, &g, 1e-8).unwrap();
        let (da, db) = lorapro_directions(&f, &g, 1e-8).unwrap();
        let diff_a = &fe.fa - &da;
        let diff_b = &fe.fb - &db;
        assert!((&diff_a - &fe.x.matmul(&f.a)).norm_fro() < 1e-12 * (1.0 + diff_a.norm_fro()));
        assert!((&diff_b + &f.b.matmul(&fe.x)).norm_fro() < 1e-12 * (1.0 + diff_b.norm_fro()));
    }
}

//! Objectives with exact gradients, the certified sensing operator and the
//! factor initializers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lora::{LoraFactors, Objective, Task};
use crate::matrix::{dot, norm2, qr_positive, thin_svd, Matrix};
use crate::rng::Rng;

// Stream labels so that each part of an instance draws from its own sequence.
const STREAM_SENSING_U: u64 = 1;
const STREAM_SENSING_V: u64 = 2;
const STREAM_SENSING_S: u64 = 3;
const STREAM_W_PT: u64 = 4;
const STREAM_TRUTH: u64 = 5;
const STREAM_INIT: u64 = 6;
const STREAM_REG_S: u64 = 7;
const STREAM_REG_U: u64 = 8;

/// Square-or-tall sensing matrix `S = U diag(s) Vᵀ` (`n x o`, `o <= n`) whose
/// singular values lie in `[√(1−δ), √(1+δ)]` with both endpoints attained.
pub fn make_rip_sensing(n: usize, o: usize, delta: f64, seed: u64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidDelta(delta));
    }
    if o == 0 || o > n {
        return Err(Error::InvalidArgument(format!("need 0 < o <= n, got o={o}, n={n}")));
    }
    let (u, _) = qr_positive(&Rng::derived(seed, STREAM_SENSING_U).gaussian(n, o, 1.0));
    let (v, _) = qr_positive(&Rng::derived(seed, STREAM_SENSING_V).gaussian(o, o, 1.0));
    let lo = (1.0 - delta).sqrt();
    let hi = (1.0 + delta).sqrt();
    let mut rng = Rng::derived(seed, STREAM_SENSING_S);
    let mut s: Vec<f64> = (0..o).map(|_| rng.uniform_in(lo, hi)).collect();
    s[0] = lo;
    if o > 1 {
        s[1] = hi;
    }
    let us = Matrix::from_fn(n, o, |i, j| u[(i, j)] * s[j]);
    Ok(us.matmul_tr(&v))
}

/// Best rank-`r` factorization `B A` of `w_delta` with `A = Σ^{1/2} Vᵀ`,
/// `B = U Σ^{1/2}`, so that `AAᵀ = BᵀB = Σ`.
pub fn balanced_init(w_delta: &Matrix, r: usize) -> Result<LoraFactors> {
    let svd = thin_svd(w_delta, r)?;
    let root: Vec<f64> = svd.sigma.iter().map(|s| s.sqrt()).collect();
    let a = Matrix::from_fn(r, svd.v.rows(), |i, j| root[i] * svd.v[(j, i)]);
    let b = Matrix::from_fn(svd.u.rows(), r, |i, j| svd.u[(i, j)] * root[j]);
    LoraFactors::new(a, b)
}

/// `balanced_init(scale · target + perturbation · E)` with `E` a Gaussian
/// matrix of unit Frobenius norm.
pub fn perturbed_balanced_init(target: &Matrix, r: usize, scale: f64, perturbation: f64, seed: u64) -> Result<LoraFactors> {
    let e = Rng::derived(seed, STREAM_INIT).gaussian(target.rows(), target.cols(), 1.0);
    let e = e.scale(1.0 / e.norm_fro());
    balanced_init(&target.scale(scale).add_scaled(perturbation, &e), r)
}

/// Unit-norm Gaussian rows for `A`, `B = 0`.
pub fn zero_b_init(n: usize, m: usize, r: usize, seed: u64) -> Result<LoraFactors> {
    let mut rng = Rng::derived(seed, STREAM_INIT);
    let mut a = Matrix::zeros(r, n);
    for i in 0..r {
        a.row_mut(i).copy_from_slice(&rng.unit_vec(n));
    }
    LoraFactors::new(a, Matrix::zeros(m, r))
}

/// Unit-norm rows for `A` biased toward the input `s`: each row is the
/// normalized sum of a unit Gaussian direction and `s / ‖s‖`, so `‖A s‖`
/// stays of order one at every width. `B = 0`.
pub fn zero_b_init_aligned(s: &[f64], m: usize, r: usize, seed: u64) -> Result<LoraFactors> {
    let n = s.len();
    let sn = norm2(s);
    if sn == 0.0 {
        return Err(Error::InvalidArgument("input direction is zero".into()));
    }
    let mut rng = Rng::derived(seed, STREAM_INIT);
    let mut a = Matrix::zeros(r, n);
    for i in 0..r {
        let mut row: Vec<f64> = rng.unit_vec(n).iter().zip(s).map(|(g, x)| g + x / sn).collect();
        let nr = norm2(&row);
        row.iter_mut().for_each(|x| *x /= nr);
        a.row_mut(i).copy_from_slice(&row);
    }
    LoraFactors::new(a, Matrix::zeros(m, r))
}

/// Noiseless low-rank sensing instance.
#[derive(Debug, Clone)]
pub struct SensingProblem {
    pub s: Matrix,
    pub y: Matrix,
    pub w_pt: Matrix,
    pub a_star: Matrix,
    pub b_star: Matrix,
    pub delta: f64,
}

impl SensingProblem {
    /// `W_pt` has `N(0, 1/n)` entries; the ground truth is the balanced
    /// factorization of a Gaussian rank-`r` product, each factor rescaled to
    /// unit smallest singular value.
    pub fn generate(m: usize, n: usize, o: usize, r: usize, delta: f64, seed: u64) -> Result<Self> {
        let s = make_rip_sensing(n, o, delta, seed)?;
        let w_pt = Rng::derived(seed, STREAM_W_PT).gaussian(m, n, 1.0 / (n as f64).sqrt());
        let mut rng = Rng::derived(seed, STREAM_TRUTH);
        let left = rng.gaussian(m, r, 1.0);
        let right = rng.gaussian(r, n, 1.0);
        let truth = balanced_init(&left.matmul(&right), r)?;
        let a_star = truth.a.scale(1.0 / sigma_min(&truth.a)?);
        let b_star = truth.b.scale(1.0 / sigma_min(&truth.b)?);
        let mut w = b_star.matmul(&a_star);
        w += &w_pt;
        let y = w.matmul(&s);
        Ok(Self { s, y, w_pt, a_star, b_star, delta })
    }

    pub fn objective(&self) -> SensingObjective {
        let mut w_star = self.b_star.matmul(&self.a_star);
        w_star += &self.w_pt;
        SensingObjective { s: self.s.clone(), y: self.y.clone(), w_star }
    }

    pub fn task(&self) -> Task {
        Task::new(self.w_pt.clone(), Arc::new(self.objective()))
    }

    /// `balanced_init(scale · B*A* + perturbation · E)` with `E` a Gaussian
    /// matrix of unit Frobenius norm.
    pub fn initial_point(&self, scale: f64, perturbation: f64, seed: u64) -> Result<LoraFactors> {
        let target = self.b_star.matmul(&self.a_star);
        perturbed_balanced_init(&target, self.a_star.rows(), scale, perturbation, seed)
    }
}

fn sigma_min(m: &Matrix) -> Result<f64> {
    let k = m.rows().min(m.cols());
    let s = thin_svd(m, k)?;
    Ok(s.sigma[k - 1])
}

pub(crate) fn sigma_range(m: &Matrix) -> Result<(f64, f64)> {
    let k = m.rows().min(m.cols());
    let s = thin_svd(m, k)?;
    Ok((s.sigma[k - 1], s.sigma[0]))
}

/// `½ ‖W S − Y‖²_F`.
#[derive(Debug, Clone)]
pub struct SensingObjective {
    pub s: Matrix,
    pub y: Matrix,
    pub w_star: Matrix,
}

impl Objective for SensingObjective {
    fn loss(&self, w: &Matrix) -> f64 {
        let r = w.matmul(&self.s).add_scaled(-1.0, &self.y);
        0.5 * r.inner(&r)
    }

    fn grad(&self, w: &Matrix) -> Matrix {
        w.matmul(&self.s).add_scaled(-1.0, &self.y).matmul_tr(&self.s)
    }

    fn optimum_loss(&self) -> Option<f64> {
        Some(0.0)
    }

    fn optimum_weight(&self) -> Option<&Matrix> {
        Some(&self.w_star)
    }
}

/// `(μ/2) ‖W − W*‖²_F`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub w_star: Matrix,
    pub mu: f64,
}

impl Objective for QuadraticObjective {
    fn loss(&self, w: &Matrix) -> f64 {
        let d = w - &self.w_star;
        0.5 * self.mu * d.inner(&d)
    }

    fn grad(&self, w: &Matrix) -> Matrix {
        (w - &self.w_star).scale(self.mu)
    }

    fn optimum_loss(&self) -> Option<f64> {
        Some(0.0)
    }

    fn optimum_weight(&self) -> Option<&Matrix> {
        Some(&self.w_star)
    }
}

/// Single-sample regression `‖W s − y‖²`.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub w_pt: Matrix,
}

/// Unit input `s`, `W_pt` with `N(0, 1/n)` entries and `y = W_pt s + u`
/// for a unit direction `u`, so the initial residual has norm one.
pub fn make_regression_instance(n: usize, m: usize, seed: u64) -> RegressionProblem {
    let s = Rng::derived(seed, STREAM_REG_S).unit_vec(n);
    let w_pt = Rng::derived(seed, STREAM_W_PT).gaussian(m, n, 1.0 / (n as f64).sqrt());
    let u = Rng::derived(seed, STREAM_REG_U).unit_vec(m);
    let y = w_pt.mul_vec(&s).iter().zip(&u).map(|(a, b)| a + b).collect();
    RegressionProblem { s, y, w_pt }
}

impl RegressionProblem {
    pub fn objective(&self) -> RegressionObjective {
        RegressionObjective { s: self.s.clone(), y: self.y.clone() }
    }

    pub fn task(&self) -> Task {
        Task::new(self.w_pt.clone(), Arc::new(self.objective()))
    }
}

#[derive(Debug, Clone)]
pub struct RegressionObjective {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

impl RegressionObjective {
    fn residual(&self, w: &Matrix) -> Vec<f64> {
        w.mul_vec(&self.s).iter().zip(&self.y).map(|(a, b)| a - b).collect()
    }
}

impl Objective for RegressionObjective {
    fn loss(&self, w: &Matrix) -> f64 {
        let r = self.residual(w);
        dot(&r, &r)
    }

    fn grad(&self, w: &Matrix) -> Matrix {
        let r = self.residual(w);
        Matrix::from_fn(w.rows(), w.cols(), |i, j| 2.0 * r[i] * self.s[j])
    }

    fn optimum_loss(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Quadratic instance around `W* = W_pt + B*A*` with a Gaussian rank-`r`
/// ground truth.
pub fn make_quadratic_instance(m: usize, n: usize, r: usize, mu: f64, seed: u64) -> Result<(Task, LoraFactors)> {
    let w_pt = Rng::derived(seed, STREAM_W_PT).gaussian(m, n, 1.0 / (n as f64).sqrt());
    let mut rng = Rng::derived(seed, STREAM_TRUTH);
    let truth = balanced_init(&rng.gaussian(m, r, 1.0).matmul(&rng.gaussian(r, n, 1.0)), r)?;
    let mut w_star = truth.product();
    w_star += &w_pt;
    let task = Task::new(w_pt, Arc::new(QuadraticObjective { w_star, mu }));
    Ok((task, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_validation() {
        assert_eq!(make_rip_sensing(4, 4, 1.0, 0), Err(Error::InvalidDelta(1.0)));
        assert!(make_rip_sensing(4, 4, -0.1, 0).is_err());
    }

    #[test]
    fn zero_delta_is_orthogonal() {
        let s = make_rip_sensing(6, 6, 0.0, 3).unwrap();
        assert!((&s.tr_matmul(&s) - &Matrix::identity(6)).norm_fro() < 1e-12);
    }

    #[test]
    fn sensing_ground_truth_is_exact() {
        let p = SensingProblem::generate(8, 7, 7, 2, 0.1, 5).unwrap();
        let obj = p.objective();
        let w = obj.w_star.clone();
        assert_eq!(obj.loss(&w), 0.0);
        assert!(obj.grad(&w).norm_fro() < 1e-12);
        assert!((sigma_min(&p.a_star).unwrap() - 1.0).abs() < 1e-10);
        assert!((sigma_min(&p.b_star).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn balanced_init_diagonal() {
        let f = balanced_init(&Matrix::diag(&[4.0, 1.0]), 2).unwrap();
        assert!((&f.product() - &Matrix::diag(&[4.0, 1.0])).norm_fro() < 1e-12);
        let ga = f.a.matmul_tr(&f.a);
        assert!((&ga - &Matrix::diag(&[4.0, 1.0])).norm_fro() < 1e-12);
        assert!((norm2(f.a.row(0)) - 2.0).abs() < 1e-12 && (norm2(f.a.row(1)) - 1.0).abs() < 1e-12);
        assert!((&ga - &f.b.tr_matmul(&f.b)).norm_fro() < 1e-12);
    }

    #[test]
    fn zero_b_rows_are_unit() {
        let f = zero_b_init(50, 30, 3, 2).unwrap();
        assert_eq!(f.b.norm_fro(), 0.0);
        for i in 0..3 {
            assert!((norm2(f.a.row(i)) - 1.0).abs() < 1e-12);
        }
        let s = Rng::new(0).unit_vec(50);
        let g = zero_b_init_aligned(&s, 30, 3, 2).unwrap();
        for i in 0..3 {
            assert!((norm2(g.a.row(i)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn regression_residual_is_unit() {
        let p = make_regression_instance(40, 30, 1);
        assert!((norm2(&p.s) - 1.0).abs() < 1e-14);
        let obj = p.objective();
        assert!((obj.loss(&p.w_pt) - 1.0).abs() < 1e-13);
    }
}

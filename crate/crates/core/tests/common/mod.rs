//! Independent reference computations for the integration tests. Nothing
//! here calls the factorizations under test.
#![allow(dead_code)]

use odelora::lora::{LoraFactors, Objective};
use odelora::{Matrix, Rng};

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-300, "singular oracle system");
        for row in col + 1..n {
            let f = a[row][col] / d;
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Solves `G Z = rhs` column by column with [`lu_solve`].
pub fn lu_solve_matrix(g: &Matrix, rhs: &Matrix) -> Matrix {
    let mut z = Matrix::zeros(rhs.rows(), rhs.cols());
    for j in 0..rhs.cols() {
        let col = lu_solve(to_rows(g), rhs.col(j));
        z.set_col(j, &col);
    }
    z
}

pub fn inverse(g: &Matrix) -> Matrix {
    lu_solve_matrix(g, &Matrix::identity(g.rows()))
}

/// Explicit triple-loop product.
pub fn naive_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// `H X + X H = C` through the `r² x r²` system `(I ⊗ H + H ⊗ I) vec X`.
pub fn kronecker_sylvester(h: &Matrix, c: &Matrix) -> Matrix {
    let r = h.rows();
    let idx = |i: usize, j: usize| i * r + j;
    let mut a = vec![vec![0.0; r * r]; r * r];
    let mut b = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            let row = idx(i, j);
            b[row] = c[(i, j)];
            for k in 0..r {
                a[row][idx(k, j)] += h[(i, k)]; // (H X)_ij
                a[row][idx(i, k)] += h[(k, j)]; // (X H)_ij
            }
        }
    }
    let x = lu_solve(a, b);
    Matrix::new(r, r, x).unwrap()
}

/// Minimizer of `‖B J + K A + G‖²` subject to
/// `J Aᵀ + A Jᵀ − Kᵀ B − Bᵀ K = 0`, with the antisymmetric part of
/// `(BᵀB)⁻¹ Bᵀ K` pinned to zero to select one member of the
/// `r(r−1)/2`-dimensional family of minimizers. Solved as a dense KKT
/// system over `vec J`, `vec K` and the multipliers.
pub fn kkt_field(f: &LoraFactors, g: &Matrix) -> (Matrix, Matrix) {
    let (r, n, m) = (f.rank(), f.n(), f.m());
    let nj = r * n;
    let nk = m * r;
    let nx = nj + nk;
    let unpack = |x: &[f64]| {
        let j = Matrix::new(r, n, x[..nj].to_vec()).unwrap();
        let k = Matrix::new(m, r, x[nj..].to_vec()).unwrap();
        (j, k)
    };
    let lmap = |x: &[f64]| {
        let (j, k) = unpack(x);
        let v = &naive_mul(&f.b, &j) + &naive_mul(&k, &f.a);
        v.into_vec()
    };
    let q_inv_bt = naive_mul(&inverse(&naive_mul(&f.b.transpose(), &f.b)), &f.b.transpose());
    let cmap = |x: &[f64]| {
        let (j, k) = unpack(x);
        let at = f.a.transpose();
        let ja = naive_mul(&j, &at);
        let kb = naive_mul(&k.transpose(), &f.b);
        let bal = &(&ja + &ja.transpose()) - &(&kb + &kb.transpose());
        let gauge = naive_mul(&q_inv_bt, &k);
        let mut rows = Vec::new();
        for p in 0..r {
            for q in p..r {
                rows.push(bal[(p, q)]);
            }
        }
        for p in 0..r {
            for q in p + 1..r {
                rows.push(gauge[(p, q)] - gauge[(q, p)]);
            }
        }
        rows
    };
    let basis = |i: usize| {
        let mut e = vec![0.0; nx];
        e[i] = 1.0;
        e
    };
    let lcols: Vec<Vec<f64>> = (0..nx).map(|i| lmap(&basis(i))).collect();
    let ccols: Vec<Vec<f64>> = (0..nx).map(|i| cmap(&basis(i))).collect();
    let nc = ccols[0].len();
    let size = nx + nc;
    let mut a = vec![vec![0.0; size]; size];
    let mut b = vec![0.0; size];
    let gv = g.as_slice();
    for i in 0..nx {
        for j in 0..nx {
            a[i][j] = 2.0 * lcols[i].iter().zip(&lcols[j]).map(|(x, y)| x * y).sum::<f64>();
        }
        for c in 0..nc {
            a[i][nx + c] = ccols[i][c];
            a[nx + c][i] = ccols[i][c];
        }
        b[i] = -2.0 * lcols[i].iter().zip(gv).map(|(x, y)| x * y).sum::<f64>();
    }
    let x = lu_solve(a, b);
    unpack(&x[..nx])
}

/// Elementary symmetric polynomials of the spectrum from trace powers
/// (Newton identities): `k e_k = Σ_{i=1..k} (−1)^{i−1} e_{k−i} p_i`.
pub fn newton_coefficients(h: &Matrix) -> Vec<f64> {
    let r = h.rows();
    let mut p = Vec::with_capacity(r);
    let mut power = h.clone();
    for _ in 0..r {
        p.push(power.trace());
        power = naive_mul(&power, h);
    }
    let mut e = vec![1.0];
    for k in 1..=r {
        let mut s = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            s += sign * e[k - i] * p[i - 1];
        }
        e.push(s / k as f64);
    }
    e
}

/// Elementary symmetric polynomials of a list of numbers.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![1.0];
    for &v in values {
        let mut next = e.clone();
        next.push(0.0);
        for k in 1..next.len() {
            next[k] += v * e[k - 1];
        }
        e = next;
    }
    e
}

/// Worst relative error of the analytic directional derivative against a
/// central difference with step `1e-5 (1 + ‖W‖)`, over `probes` random
/// unit directions.
pub fn gradient_check(obj: &dyn Objective, w: &Matrix, probes: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let g = obj.grad(w);
    let t = 1e-5 * (1.0 + w.norm_fro());
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let d = rng.gaussian(w.rows(), w.cols(), 1.0);
        let d = d.scale(1.0 / d.norm_fro());
        let fd = (obj.loss(&w.add_scaled(t, &d)) - obj.loss(&w.add_scaled(-t, &d))) / (2.0 * t);
        let an = g.inner(&d);
        let err = (fd - an).abs() / an.abs().max(g.norm_fro()).max(1e-300);
        worst = worst.max(err);
    }
    worst
}

pub fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm_fro() / b.norm_fro().max(1e-300)
}

pub fn random_spd(r: usize, rng: &mut Rng) -> Matrix {
    let m = rng.gaussian(r, r, 1.0);
    naive_mul(&m.transpose(), &m).add_diag(1.0)
}

pub fn random_symmetric(r: usize, rng: &mut Rng) -> Matrix {
    rng.gaussian(r, r, 1.0).symmetrize()
}

pub fn random_orthogonal(r: usize, rng: &mut Rng) -> Matrix {
    odelora::matrix::qr_positive(&rng.gaussian(r, r, 1.0)).0
}

/// Full-rank random factors with `r <= min(m, n)`.
pub fn random_factors(m: usize, n: usize, r: usize, rng: &mut Rng) -> LoraFactors {
    LoraFactors::new(rng.gaussian(r, n, 1.0), rng.gaussian(m, r, 1.0)).unwrap()
}

/// The instance family shared by the field checks: `r ∈ {1,2,3}`,
/// `m, n ∈ {4..8}`.
pub fn field_instance(k: u64) -> (LoraFactors, Matrix) {
    let mut rng = Rng::new(0xF1E1D + k);
    let r = 1 + (k % 3) as usize;
    let m = 4 + (rng.next_u64() % 5) as usize;
    let n = 4 + (rng.next_u64() % 5) as usize;
    let f = random_factors(m, n, r, &mut rng);
    let g = rng.gaussian(m, n, 1.0);
    (f, g)
}

/// Replaces the wall-clock column of a trajectory CSV with a placeholder.
pub fn strip_wall(csv: &str) -> String {
    csv.lines()
        .map(|l| match l.rsplit_once(',') {
            Some((head, _)) => format!("{head},_"),
            None => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

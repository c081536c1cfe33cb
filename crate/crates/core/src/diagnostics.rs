//! Measurements along and across trajectories.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lora::{project_both, LoraFactors, Task};
use crate::matrix::{norm2, Matrix};
use crate::problems::{make_regression_instance, sigma_range, zero_b_init_aligned, SensingProblem};
use crate::solvers::{factor_step, ode_step_stages, Scheme, Stage};

/// Gap below which a loss is treated as converged to numerical noise.
pub const LOSS_NOISE_FLOOR: f64 = 1e-12;
/// Defects below this cannot carry an order measurement.
pub const DEFECT_NOISE_FLOOR: f64 = 1e-12;
/// Medians below this mark a component as vanishing in the scaling fit.
pub const VANISHING_NORM: f64 = 1e-12;

/// Fraction of gradient energy left in both factor null spaces,
/// `⟨P_B G P_A, G⟩ / ‖G‖²`.
pub fn eps_ratio(f: &LoraFactors, g: &Matrix, eps: f64) -> Result<f64> {
    let gg = g.inner(g);
    if gg.sqrt() <= 1e-14 {
        return Err(Error::ZeroGradient);
    }
    Ok(project_both(f, g, eps)?.inner(g) / gg)
}

/// `‖AAᵀ − BᵀB‖_F`.
pub fn balance_defect(f: &LoraFactors) -> f64 {
    (&f.a.matmul_tr(&f.a) - &f.b.tr_matmul(&f.b)).norm_fro()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub contraction: f64,
}

/// Least-squares slope of `ln(loss − loss_star)` against the iteration index
/// over `window`.
pub fn rate_fit(losses: &[f64], loss_star: f64, window: Range<usize>) -> Result<RateFit> {
    let window = window.start..window.end.min(losses.len());
    if window.len() < 5 {
        return Err(Error::WindowTooShort(window.len()));
    }
    let mut pts = Vec::with_capacity(window.len());
    for i in window {
        let gap = losses[i] - loss_star;
        if !(gap > 0.0) {
            return Err(Error::NonPositiveGap(i));
        }
        pts.push((i as f64, gap.ln()));
    }
    let slope = ls_slope(&pts);
    Ok(RateFit { slope, contraction: slope.exp() })
}

/// The last half of the iterations that are still above the noise floor:
/// everything from the first iteration with `loss − loss_star < 1e-12`
/// onward is dropped, then the earlier half of the remainder.
pub fn default_rate_window(losses: &[f64], loss_star: f64) -> Range<usize> {
    let end = losses
        .iter()
        .position(|l| !(l - loss_star >= LOSS_NOISE_FLOOR))
        .unwrap_or(losses.len());
    end / 2..end
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    ls_slope(&pts)
}

/// Integrates a flow scheme to time `t` with `round(t / h)` steps.
pub fn integrate(init: &LoraFactors, task: &Task, scheme: Scheme, t: f64, h: f64, eps: f64) -> Result<LoraFactors> {
    let steps = (t / h).round() as usize;
    let mut f = init.clone();
    for _ in 0..steps {
        f = factor_step(scheme, &f, task, h, eps)?;
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub scheme: Scheme,
    pub step_sizes: Vec<f64>,
    pub defects: Vec<f64>,
    pub observed_order: f64,
}

impl OrderReport {
    /// `log₂` of consecutive defect ratios.
    pub fn pairwise_orders(&self) -> Vec<f64> {
        self.defects.windows(2).map(|d| (d[0] / d[1]).log2()).collect()
    }
}

/// Effective weight of the RK4 reference at `min(h_list) / 100`.
pub fn order_reference(init: &LoraFactors, task: &Task, t: f64, h_list: &[f64], eps: f64) -> Result<Matrix> {
    let h_min = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = integrate(init, task, Scheme::OdeRk4, t, h_min / 100.0, eps).map_err(|_| Error::ReferenceDiverged)?;
    let w = task.weight(&reference);
    if !w.is_finite() {
        return Err(Error::ReferenceDiverged);
    }
    Ok(w)
}

/// `‖W_scheme(t; h) − reference‖_F`.
pub fn discretization_defect(
    init: &LoraFactors,
    task: &Task,
    scheme: Scheme,
    t: f64,
    h: f64,
    reference: &Matrix,
    eps: f64,
) -> Result<f64> {
    let f = integrate(init, task, scheme, t, h, eps)?;
    Ok((&task.weight(&f) - reference).norm_fro())
}

/// Order estimate against a precomputed reference.
pub fn estimate_order_with_reference(
    init: &LoraFactors,
    task: &Task,
    scheme: Scheme,
    t: f64,
    h_list: &[f64],
    reference: &Matrix,
    eps: f64,
) -> Result<OrderReport> {
    if h_list.len() < 2 {
        return Err(Error::InvalidArgument("need at least two step sizes".into()));
    }
    let mut defects = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let d = discretization_defect(init, task, scheme, t, h, reference, eps)?;
        if !(d >= DEFECT_NOISE_FLOOR) {
            return Err(Error::DefectBelowNoiseFloor { h, defect: d });
        }
        defects.push(d);
    }
    let ratios: Vec<f64> = defects.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    let observed_order = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(OrderReport { scheme, step_sizes: h_list.to_vec(), defects, observed_order })
}

/// Mean `log₂` defect ratio of `scheme` over consecutive halvings in
/// `h_list` (descending), measured at horizon `t` against RK4 at
/// `min(h_list) / 100`.
pub fn estimate_order(init: &LoraFactors, task: &Task, scheme: Scheme, t: f64, h_list: &[f64], eps: f64) -> Result<OrderReport> {
    let reference = order_reference(init, task, t, h_list, eps)?;
    estimate_order_with_reference(init, task, scheme, t, h_list, &reference, eps)
}

/// Left side of the sensing convergence condition:
/// `[δ κ(A*) + ‖(B₀A₀ − B*A*) S‖_F / (√(1−δ) σ_min(A*) σ_min(B*))] / (1−δ)`.
pub fn sensing_eps_certificate(p: &SensingProblem, f0: &LoraFactors) -> Result<f64> {
    let (a_min, a_max) = sigma_range(&p.a_star)?;
    let (b_min, _) = sigma_range(&p.b_star)?;
    let diff = &f0.product() - &p.b_star.matmul(&p.a_star);
    let mismatch = diff.matmul(&p.s).norm_fro();
    let delta = p.delta;
    Ok((delta * a_max / a_min + mismatch / ((1.0 - delta).sqrt() * a_min * b_min)) / (1.0 - delta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiComponent {
    /// `b{k}` for `w_k F_B⁽ᵏ⁾ A_t s`, `a{k}` for `w_k B_t F_A⁽ᵏ⁾ s`.
    pub label: String,
    pub norm: f64,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiReport {
    pub n: usize,
    pub components: Vec<PhiComponent>,
    /// `‖ΔB ΔA s‖`, the part of the output change quadratic in the step.
    pub cross_term_norm: f64,
    /// `‖Σφ + ΔB ΔA s − (B₊A₊ − BA) s‖` relative to `‖(B₊A₊ − BA) s‖`.
    pub sum_check_residual: f64,
}

fn gd_stage(f: &LoraFactors, task: &Task, h: f64) -> (LoraFactors, Vec<Stage>) {
    let g = task.grad(f);
    let fa = -&f.b.tr_matmul(&g);
    let fb = -&g.matmul_tr(&f.a);
    (f.step(h, &fa, &fb), vec![Stage { weight: h, fa, fb }])
}

/// Splits one step's change of the output `W s` into per-stage factor
/// contributions plus the explicit cross term. Flow schemes use their
/// Runge-Kutta stages; classical GD is a single stage with the raw factor
/// gradients. Returns the report and the stepped factors.
pub fn phi_decompose(scheme: Scheme, f: &LoraFactors, task: &Task, s: &[f64], h: f64, eps: f64) -> Result<(PhiReport, LoraFactors)> {
    let (next, stages) = match scheme {
        Scheme::ClassicalGd => gd_stage(f, task, h),
        sc if sc.is_ode() => ode_step_stages(sc, f, task, h, eps)?,
        sc => return Err(Error::InvalidArgument(format!("no stage decomposition for {sc}"))),
    };
    let a_s = f.a.mul_vec(s);
    let mut components = Vec::with_capacity(2 * stages.len());
    let mut sum = vec![0.0; f.m()];
    let mut da = Matrix::zeros(f.a.rows(), f.a.cols());
    let mut db = Matrix::zeros(f.b.rows(), f.b.cols());
    for (k, st) in stages.iter().enumerate() {
        let b_side: Vec<f64> = st.fb.mul_vec(&a_s).iter().map(|v| st.weight * v).collect();
        let fa_s = st.fa.mul_vec(s);
        let a_side: Vec<f64> = f.b.mul_vec(&fa_s).iter().map(|v| st.weight * v).collect();
        for (acc, (x, y)) in sum.iter_mut().zip(b_side.iter().zip(&a_side)) {
            *acc += x + y;
        }
        components.push(PhiComponent { label: format!("b{}", k + 1), norm: norm2(&b_side), value: b_side });
        components.push(PhiComponent { label: format!("a{}", k + 1), norm: norm2(&a_side), value: a_side });
        da.axpy(st.weight, &st.fa);
        db.axpy(st.weight, &st.fb);
    }
    let cross = db.mul_vec(&da.mul_vec(s));
    let actual: Vec<f64> = next
        .product()
        .add_scaled(-1.0, &f.product())
        .mul_vec(s);
    let resid: Vec<f64> = sum.iter().zip(&cross).zip(&actual).map(|((a, c), t)| a + c - t).collect();
    let scale = norm2(&actual);
    let r = norm2(&resid);
    let sum_check_residual = if scale > 0.0 { r / scale } else { r };
    Ok((
        PhiReport { n: f.n(), components, cross_term_norm: norm2(&cross), sum_check_residual },
        next,
    ))
}

/// The RK4 case of [`phi_decompose`].
pub fn phi_decompose_rk4(f: &LoraFactors, task: &Task, s: &[f64], h: f64, eps: f64) -> Result<PhiReport> {
    phi_decompose(Scheme::OdeRk4, f, task, s, h, eps).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSettings {
    pub steps: usize,
    pub h: f64,
    pub eps: f64,
    pub rank: usize,
}

impl Default for ScalingSettings {
    fn default() -> Self {
        Self { steps: 20, h: 0.1, eps: 1e-8, rank: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiRow {
    pub scheme: Scheme,
    pub n: usize,
    pub seed: u64,
    pub step: usize,
    pub component: String,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSlope {
    pub component: String,
    /// Median norm per entry of `n_list`.
    pub medians: Vec<f64>,
    /// `None` when fewer than two widths were given or the component vanishes.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub scheme: Scheme,
    pub n_list: Vec<usize>,
    pub rows: Vec<PhiRow>,
    pub slopes: Vec<ComponentSlope>,
    /// Largest sum-check residual over all logged steps.
    pub max_sum_residual: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn scaling_run(scheme: Scheme, n: usize, seed: u64, cfg: &ScalingSettings) -> Result<(Vec<PhiRow>, f64)> {
    let p = make_regression_instance(n, n, seed);
    let task = p.task();
    let mut f = zero_b_init_aligned(&p.s, n, cfg.rank, seed)?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for step in 0..cfg.steps {
        let (report, next) = phi_decompose(scheme, &f, &task, &p.s, cfg.h, cfg.eps)?;
        worst = worst.max(report.sum_check_residual);
        for c in report.components {
            rows.push(PhiRow { scheme, n, seed, step, component: c.label, norm: c.norm });
        }
        f = next;
    }
    Ok((rows, worst))
}

/// Runs `steps` updates from the zero-`B` start on regression instances of
/// width `n = m` for every `(n, seed)` pair, logging each φ component.
/// Per width, a component's summary is its median over seeds and steps
/// `t >= 1` (all steps when only one is run); the slope is fitted on
/// `ln median` against `ln n` and omitted for vanishing components.
pub fn feature_scaling_experiment(scheme: Scheme, n_list: &[usize], seeds: &[u64], cfg: &ScalingSettings) -> Result<ScalingReport> {
    let jobs: Vec<(usize, u64)> = n_list.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let results: Vec<Result<(Vec<PhiRow>, f64)>> =
        jobs.par_iter().map(|&(n, seed)| scaling_run(scheme, n, seed, cfg)).collect();
    let mut rows = Vec::new();
    let mut max_sum_residual = 0.0f64;
    for r in results {
        let (rs, worst) = r?;
        rows.extend(rs);
        max_sum_residual = max_sum_residual.max(worst);
    }

    let mut labels: Vec<String> = Vec::new();
    for r in &rows {
        if !labels.contains(&r.component) {
            labels.push(r.component.clone());
        }
    }
    let min_step = usize::from(cfg.steps > 1);
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let slopes = labels
        .into_iter()
        .map(|label| {
            let medians: Vec<f64> = n_list
                .iter()
                .map(|&n| {
                    let mut v: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.n == n && r.step >= min_step && r.component == label)
                        .map(|r| r.norm)
                        .collect();
                    median(&mut v)
                })
                .collect();
            let vanishing = medians.iter().any(|m| !(*m >= VANISHING_NORM));
            let slope = (n_list.len() >= 2 && !vanishing).then(|| log_log_slope(&xs, &medians));
            ComponentSlope { component: label, medians, slope }
        })
        .collect();
    Ok(ScalingReport { scheme, n_list: n_list.to_vec(), rows, slopes, max_sum_residual })
}

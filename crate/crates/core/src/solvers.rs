//! Discretizations of the flow, the baseline optimizers and the trajectory
//! runner.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::diagnostics::{balance_defect, eps_ratio};
use crate::error::{Error, Result};
use crate::lora::{field_eval, lorapro_directions, riemannian_directions, LoraFactors, Objective, Task};
use crate::matrix::Matrix;

/// Loss above which a run is declared divergent.
pub const DIVERGENCE_LOSS: f64 = 1e12;

/// Update rules, in the fixed order used for sweep layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    OdeEuler,
    OdeRk2,
    OdeRk4,
    ClassicalGd,
    Riemannian,
    LoraPro,
    FullFineTune,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::OdeEuler,
        Scheme::OdeRk2,
        Scheme::OdeRk4,
        Scheme::ClassicalGd,
        Scheme::Riemannian,
        Scheme::LoraPro,
        Scheme::FullFineTune,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OdeEuler => "ode_euler",
            Scheme::OdeRk2 => "ode_rk2",
            Scheme::OdeRk4 => "ode_rk4",
            Scheme::ClassicalGd => "classical_gd",
            Scheme::Riemannian => "riemannian",
            Scheme::LoraPro => "lora_pro",
            Scheme::FullFineTune => "full_ft",
        }
    }

    /// Classical order of the integrator, for the flow schemes only.
    pub fn order(self) -> Option<u32> {
        match self {
            Scheme::OdeEuler => Some(1),
            Scheme::OdeRk2 => Some(2),
            Scheme::OdeRk4 => Some(4),
            _ => None,
        }
    }

    pub fn is_ode(self) -> bool {
        self.order().is_some()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub h: f64,
    pub iterations: usize,
    pub eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { scheme: Scheme::OdeRk4, h: 0.1, iterations: 500, eps: 1e-8 }
    }
}

/// One weighted stage of an explicit Runge-Kutta step: the field at the
/// stage point and its weight already multiplied by `h`.
#[derive(Debug, Clone)]
pub struct Stage {
    pub weight: f64,
    pub fa: Matrix,
    pub fb: Matrix,
}

/// Butcher tableau of an explicit method (strictly lower `a`).
struct Tableau {
    a: &'static [&'static [f64]],
    b: &'static [f64],
}

const EULER: Tableau = Tableau { a: &[&[]], b: &[1.0] };
const HEUN: Tableau = Tableau { a: &[&[], &[1.0]], b: &[0.5, 0.5] };
const RK4: Tableau = Tableau {
    a: &[&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]],
    b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
};

fn tableau(scheme: Scheme) -> Option<&'static Tableau> {
    match scheme {
        Scheme::OdeEuler => Some(&EULER),
        Scheme::OdeRk2 => Some(&HEUN),
        Scheme::OdeRk4 => Some(&RK4),
        _ => None,
    }
}

fn explicit_rk<F>(t: &Tableau, f: &LoraFactors, h: f64, mut field: F) -> Result<(LoraFactors, Vec<Stage>)>
where
    F: FnMut(&LoraFactors) -> Result<(Matrix, Matrix)>,
{
    let mut k: Vec<(Matrix, Matrix)> = Vec::with_capacity(t.b.len());
    for row in t.a {
        let mut point = f.clone();
        for (aij, (fa, fb)) in row.iter().zip(&k) {
            if *aij != 0.0 {
                point.a.axpy(h * aij, fa);
                point.b.axpy(h * aij, fb);
            }
        }
        k.push(field(&point)?);
    }
    let mut next = f.clone();
    let mut stages = Vec::with_capacity(k.len());
    for (bi, (fa, fb)) in t.b.iter().zip(k) {
        next.a.axpy(h * bi, &fa);
        next.b.axpy(h * bi, &fb);
        stages.push(Stage { weight: h * bi, fa, fb });
    }
    Ok((next, stages))
}

/// `(A, B) + h F(A, B)` for an arbitrary field.
pub fn euler_with<F>(f: &LoraFactors, h: f64, field: F) -> Result<LoraFactors>
where
    F: FnMut(&LoraFactors) -> Result<(Matrix, Matrix)>,
{
    explicit_rk(&EULER, f, h, field).map(|(n, _)| n)
}

/// Heun's method for an arbitrary field.
pub fn rk2_with<F>(f: &LoraFactors, h: f64, field: F) -> Result<LoraFactors>
where
    F: FnMut(&LoraFactors) -> Result<(Matrix, Matrix)>,
{
    explicit_rk(&HEUN, f, h, field).map(|(n, _)| n)
}

/// Classical fourth-order Runge-Kutta for an arbitrary field.
pub fn rk4_with<F>(f: &LoraFactors, h: f64, field: F) -> Result<LoraFactors>
where
    F: FnMut(&LoraFactors) -> Result<(Matrix, Matrix)>,
{
    explicit_rk(&RK4, f, h, field).map(|(n, _)| n)
}

fn ode_field<'a>(task: &'a Task, eps: f64) -> impl FnMut(&LoraFactors) -> Result<(Matrix, Matrix)> + 'a {
    move |x: &LoraFactors| {
        let g = task.grad(x);
        let fe = field_eval(x, &g, eps)?;
        Ok((fe.fa, fe.fb))
    }
}

pub fn ode_euler_step(f: &LoraFactors, task: &Task, h: f64, eps: f64) -> Result<LoraFactors> {
    euler_with(f, h, ode_field(task, eps))
}

pub fn ode_rk2_step(f: &LoraFactors, task: &Task, h: f64, eps: f64) -> Result<LoraFactors> {
    rk2_with(f, h, ode_field(task, eps))
}

pub fn ode_rk4_step(f: &LoraFactors, task: &Task, h: f64, eps: f64) -> Result<LoraFactors> {
    rk4_with(f, h, ode_field(task, eps))
}

/// One step of a flow scheme together with its weighted stages.
pub fn ode_step_stages(scheme: Scheme, f: &LoraFactors, task: &Task, h: f64, eps: f64) -> Result<(LoraFactors, Vec<Stage>)> {
    let t = tableau(scheme)
        .ok_or_else(|| Error::InvalidArgument(format!("{scheme} is not a flow scheme")))?;
    explicit_rk(t, f, h, ode_field(task, eps))
}

/// `A − h BᵀG`, `B − h G Aᵀ`.
pub fn classical_gd_step(f: &LoraFactors, task: &Task, h: f64) -> LoraFactors {
    let g = task.grad(f);
    let da = f.b.tr_matmul(&g);
    let db = g.matmul_tr(&f.a);
    f.step(-h, &da, &db)
}

pub fn riemannian_step(f: &LoraFactors, task: &Task, h: f64, eps: f64) -> Result<LoraFactors> {
    let (da, db) = riemannian_directions(f, &task.grad(f), eps)?;
    Ok(f.step(h, &da, &db))
}

pub fn lorapro_step(f: &LoraFactors, task: &Task, h: f64, eps: f64) -> Result<LoraFactors> {
    let (da, db) = lorapro_directions(f, &task.grad(f), eps)?;
    Ok(f.step(h, &da, &db))
}

/// `W − h ∇L(W)`.
pub fn full_ft_step(w: &Matrix, obj: &dyn Objective, h: f64) -> Matrix {
    w.add_scaled(-h, &obj.grad(w))
}

/// Applies one step of any factor scheme.
pub fn factor_step(scheme: Scheme, f: &LoraFactors, task: &Task, h: f64, eps: f64) -> Result<LoraFactors> {
    match scheme {
        Scheme::OdeEuler => ode_euler_step(f, task, h, eps),
        Scheme::OdeRk2 => ode_rk2_step(f, task, h, eps),
        Scheme::OdeRk4 => ode_rk4_step(f, task, h, eps),
        Scheme::ClassicalGd => Ok(classical_gd_step(f, task, h)),
        Scheme::Riemannian => riemannian_step(f, task, h, eps),
        Scheme::LoraPro => lorapro_step(f, task, h, eps),
        Scheme::FullFineTune => Err(Error::InvalidArgument("full_ft acts on the full weight".into())),
    }
}

/// Optimizer state: factors for the adapter schemes, the full weight for
/// full fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Factors(LoraFactors),
    Full(Matrix),
}

impl State {
    pub fn weight(&self, task: &Task) -> Matrix {
        match self {
            State::Factors(f) => task.weight(f),
            State::Full(w) => w.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub balance_defect: Option<f64>,
    pub eps_ratio: Option<f64>,
    pub dist_to_opt: Option<f64>,
    pub wall_nanos: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// Loss exceeded the divergence threshold or became non-finite.
    Diverged { iter: usize },
    /// A step failed (degenerate Gram matrix or Sylvester operator).
    Breakdown { iter: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub scheme: Scheme,
    pub rows: Vec<LogRow>,
    pub termination: Termination,
    pub final_state: State,
}

impl TrajectoryLog {
    pub fn diverged(&self) -> bool {
        !matches!(self.termination, Termination::Completed)
    }

    pub fn final_loss(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.loss)
    }

    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.loss).collect()
    }
}

fn log_row(state: &State, task: &Task, iter: usize, eps: f64, start: Instant) -> LogRow {
    let w = state.weight(task);
    let loss = task.objective.loss(&w);
    let mut row = LogRow {
        iter,
        loss,
        grad_norm: f64::NAN,
        balance_defect: None,
        eps_ratio: None,
        dist_to_opt: None,
        wall_nanos: 0,
    };
    if loss.is_finite() && w.is_finite() {
        let g = task.objective.grad(&w);
        row.grad_norm = g.norm_fro();
        row.dist_to_opt = task.objective.optimum_weight().map(|ws| (&w - ws).norm_fro());
        if let State::Factors(f) = state {
            row.balance_defect = Some(balance_defect(f));
            row.eps_ratio = match eps_ratio(f, &g, eps) {
                Ok(v) => Some(v),
                Err(Error::ZeroGradient) => Some(0.0),
                Err(_) => None,
            };
        }
    }
    row.wall_nanos = start.elapsed().as_nanos();
    row
}

fn is_divergent(row: &LogRow) -> bool {
    !row.loss.is_finite() || row.loss > DIVERGENCE_LOSS
}

/// Iterates the configured scheme and logs every iterate, stopping early on
/// divergence or breakdown. `full_ft` accepts factor states and starts from
/// their effective weight.
pub fn run_trajectory(init: State, task: &Task, cfg: &SolverConfig) -> Result<TrajectoryLog> {
    if !(cfg.h > 0.0) || !(cfg.eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("need h > 0 and eps >= 0, got h={}, eps={}", cfg.h, cfg.eps)));
    }
    let mut state = match (cfg.scheme, init) {
        (Scheme::FullFineTune, s) => State::Full(s.weight(task)),
        (_, State::Factors(f)) => State::Factors(f),
        (scheme, State::Full(_)) => {
            return Err(Error::InvalidArgument(format!("{scheme} needs factor initialization")))
        }
    };
    let start = Instant::now();
    let mut rows = Vec::with_capacity(cfg.iterations + 1);
    let first = log_row(&state, task, 0, cfg.eps, start);
    let mut termination = if is_divergent(&first) { Termination::Diverged { iter: 0 } } else { Termination::Completed };
    rows.push(first);

    let mut iter = 0;
    while iter < cfg.iterations && termination == Termination::Completed {
        iter += 1;
        let next = match &state {
            State::Full(w) => Ok(State::Full(full_ft_step(w, task.objective.as_ref(), cfg.h))),
            State::Factors(f) => factor_step(cfg.scheme, f, task, cfg.h, cfg.eps).map(State::Factors),
        };
        match next {
            Ok(s) => {
                state = s;
                let row = log_row(&state, task, iter, cfg.eps, start);
                if is_divergent(&row) {
                    termination = Termination::Diverged { iter };
                }
                rows.push(row);
            }
            Err(e) => termination = Termination::Breakdown { iter, reason: e.to_string() },
        }
    }
    Ok(TrajectoryLog { scheme: cfg.scheme, rows, termination, final_state: state })
}

//! Experiment drivers behind the `odelora` binary. Every command writes plain
//! CSV with a fixed header, floats as `{:.16e}` (17 significant digits).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{parse_config, ConfigError, ExperimentConfig, InitScheme, ProblemKind};
use crate::diagnostics::{
    default_rate_window, discretization_defect, feature_scaling_experiment, order_reference, rate_fit,
    sensing_eps_certificate, ScalingReport, ScalingSettings, DEFECT_NOISE_FLOOR,
};
use crate::error::Error;
use crate::lora::{LoraFactors, Task};
use crate::matrix::Matrix;
use crate::problems::{
    make_quadratic_instance, make_regression_instance, perturbed_balanced_init, zero_b_init, zero_b_init_aligned,
    SensingProblem,
};
use crate::solvers::{run_trajectory, LogRow, Scheme, State, Termination, TrajectoryLog};

pub const TRAJECTORY_HEADER: &str = "iter,loss,grad_norm,balance_defect,eps_ratio,dist_to_opt,wall_nanos";
pub const SUMMARY_HEADER: &str = "scheme,value,final_loss,diverged,contraction";
pub const ORDER_HEADER: &str = "scheme,h,defect,observed_order";
pub const PHI_HEADER: &str = "scheme,n,seed,step,component,norm";
pub const SLOPES_HEADER: &str = "scheme,component,slope";

/// Step sizes and horizon used by the order command.
pub const ORDER_STEPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const ORDER_HORIZON: f64 = 1.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot build instance: {0}")]
    Instance(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for file-system failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Instance(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Reads and parses a config file, or returns the defaults when `path` is
/// `None`. A seed override replaces both the problem and init seeds.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let cfg = match path {
        Some(p) => parse_config(&fs::read_to_string(p).map_err(io_err(p))?)?,
        None => ExperimentConfig::default(),
    };
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

/// A problem instance ready to run.
#[derive(Debug, Clone)]
pub struct Instance {
    pub task: Task,
    pub init: LoraFactors,
    pub sensing: Option<SensingProblem>,
}

impl Instance {
    pub fn certificate(&self) -> Option<f64> {
        self.sensing.as_ref().and_then(|p| sensing_eps_certificate(p, &self.init).ok())
    }
}

pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance, Error> {
    let p = &cfg.problem;
    let i = &cfg.init;
    match p.kind {
        ProblemKind::Sensing => {
            let sp = SensingProblem::generate(p.m, p.n, p.o, p.r, p.delta, p.seed)?;
            let init = match i.scheme {
                InitScheme::Balanced => sp.initial_point(i.scale, i.perturbation, i.seed)?,
                InitScheme::ZeroB => zero_b_init(p.n, p.m, p.r, i.seed)?,
            };
            Ok(Instance { task: sp.task(), init, sensing: Some(sp) })
        }
        ProblemKind::Quadratic => {
            let (task, truth) = make_quadratic_instance(p.m, p.n, p.r, 1.0, p.seed)?;
            let init = match i.scheme {
                InitScheme::Balanced => perturbed_balanced_init(&truth.product(), p.r, i.scale, i.perturbation, i.seed)?,
                InitScheme::ZeroB => zero_b_init(p.n, p.m, p.r, i.seed)?,
            };
            Ok(Instance { task, init, sensing: None })
        }
        ProblemKind::Regression => {
            let rp = make_regression_instance(p.n, p.m, p.seed);
            let init = match i.scheme {
                InitScheme::Balanced => {
                    perturbed_balanced_init(&Matrix::zeros(p.m, p.n), p.r, i.scale, i.perturbation, i.seed)?
                }
                InitScheme::ZeroB => zero_b_init_aligned(&rp.s, p.m, p.r, i.seed)?,
            };
            Ok(Instance { task: rp.task(), init, sensing: None })
        }
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_field(v: Option<f64>, enabled: bool) -> String {
    match v {
        Some(x) if enabled => fmt_f64(x),
        _ => String::new(),
    }
}

fn trajectory_line(row: &LogRow, cfg: &ExperimentConfig) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        row.iter,
        fmt_f64(row.loss),
        fmt_f64(row.grad_norm),
        opt_field(row.balance_defect, cfg.diagnostics.balance),
        opt_field(row.eps_ratio, cfg.diagnostics.eps_ratio),
        opt_field(row.dist_to_opt, true),
        row.wall_nanos
    )
}

pub fn trajectory_csv(log: &TrajectoryLog, cfg: &ExperimentConfig) -> String {
    let mut out = String::with_capacity(128 * (log.rows.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for row in &log.rows {
        out.push_str(&trajectory_line(row, cfg));
        out.push('\n');
    }
    out
}

fn termination_text(t: &Termination) -> String {
    match t {
        Termination::Completed => "completed".into(),
        Termination::Diverged { iter } => format!("diverged at iteration {iter}"),
        Termination::Breakdown { iter, reason } => format!("breakdown at iteration {iter}: {reason}"),
    }
}

fn meta_text(cfg: &ExperimentConfig, log: &TrajectoryLog, certificate: Option<f64>) -> String {
    let mut out = cfg.to_string();
    out.push('\n');
    let _ = writeln!(out, "# termination = {}", termination_text(&log.termination));
    let _ = writeln!(out, "# rows = {}", log.rows.len());
    let _ = writeln!(out, "# final_loss = {}", fmt_f64(log.final_loss()));
    if let (Some(c), true) = (certificate, cfg.diagnostics.certificate) {
        let _ = writeln!(out, "# certificate = {}", fmt_f64(c));
    }
    out
}

fn plot_script(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale y\n\
         set xlabel 'iteration'\n\
         set ylabel 'loss'\n\
         set key top right\n\
         plot '{csv}' using 1:2 skip 1 with lines title '{title}'\n"
    )
}

/// Result of one run, as needed by the sweep summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub log: TrajectoryLog,
    pub certificate: Option<f64>,
    pub contraction: Option<f64>,
}

/// Rate fit used for the summary: default window on the logged losses.
pub fn summary_contraction(losses: &[f64], loss_star: f64) -> Option<f64> {
    rate_fit(losses, loss_star, default_rate_window(losses, loss_star)).ok().map(|f| f.contraction)
}

/// Runs one trajectory and writes `trajectory.csv`, `meta.txt` and
/// `plot.gnuplot` into `out_dir`.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let inst = build_instance(cfg)?;
    let log = run_trajectory(State::Factors(inst.init.clone()), &inst.task, &cfg.solver)?;
    let certificate = inst.certificate();
    create_dir(out_dir)?;
    write_file(&out_dir.join("trajectory.csv"), &trajectory_csv(&log, cfg))?;
    write_file(&out_dir.join("meta.txt"), &meta_text(cfg, &log, certificate))?;
    write_file(&out_dir.join("plot.gnuplot"), &plot_script("trajectory.csv", cfg.solver.scheme.name()))?;
    let loss_star = inst.task.objective.optimum_loss().unwrap_or(0.0);
    let contraction = summary_contraction(&log.losses(), loss_star);
    Ok(RunOutcome { log, certificate, contraction })
}

/// Parameters a sweep may vary.
pub const SWEEP_PARAMS: [&str; 6] = ["h", "delta", "eps", "scale", "perturbation", "iterations"];

/// Sets one sweep parameter; `cfg` is left untouched on error.
pub fn apply_param(cfg: &mut ExperimentConfig, param: &str, value: f64) -> Result<(), CliError> {
    let mut next = cfg.clone();
    match param {
        "h" => next.solver.h = value,
        "delta" => next.problem.delta = value,
        "eps" => next.solver.eps = value,
        "scale" => next.init.scale = value,
        "perturbation" => next.init.perturbation = value,
        "iterations" if value >= 0.0 && value.fract() == 0.0 => next.solver.iterations = value as usize,
        "iterations" => {
            return Err(ConfigError::OutOfRange { field: "iterations", message: format!("{value} is not a count") }.into())
        }
        _ => {
            return Err(ConfigError::Parse { line: 0, message: format!("cannot sweep `{param}`; expected one of {SWEEP_PARAMS:?}") }
                .into())
        }
    }
    next.validate()?;
    *cfg = next;
    Ok(())
}

/// Directory of one sweep cell, relative to the sweep root.
pub fn cell_dir(scheme: Scheme, param: &str, value: f64) -> PathBuf {
    PathBuf::from(scheme.name()).join(format!("{param}={value:?}"))
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub scheme: Scheme,
    pub value: f64,
    pub outcome: RunOutcome,
}

/// Runs every `(scheme, value)` cell (in parallel) and writes
/// `summary.csv` plus a combined plot script.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[f64],
    schemes: &[Scheme],
    out_dir: &Path,
) -> Result<Vec<SweepCell>, CliError> {
    let mut jobs = Vec::with_capacity(schemes.len() * values.len());
    for &scheme in schemes {
        for &value in values {
            let mut c = cfg.clone();
            c.solver.scheme = scheme;
            apply_param(&mut c, param, value)?;
            jobs.push((scheme, value, c));
        }
    }
    create_dir(out_dir)?;
    let cells: Vec<Result<SweepCell, CliError>> = jobs
        .par_iter()
        .map(|(scheme, value, c)| {
            let outcome = cmd_run(c, &out_dir.join(cell_dir(*scheme, param, *value)))?;
            Ok(SweepCell { scheme: *scheme, value: *value, outcome })
        })
        .collect();
    let cells = cells.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut plot = String::from("set datafile separator ','\nset logscale y\nset xlabel 'iteration'\nset ylabel 'loss'\nplot ");
    for (k, cell) in cells.iter().enumerate() {
        let _ = writeln!(
            summary,
            "{},{:?},{},{},{}",
            cell.scheme,
            cell.value,
            fmt_f64(cell.outcome.log.final_loss()),
            cell.outcome.log.diverged(),
            cell.outcome.contraction.map(fmt_f64).unwrap_or_default()
        );
        let dir = cell_dir(cell.scheme, param, cell.value);
        if k > 0 {
            plot.push_str(", \\\n     ");
        }
        let _ = write!(
            plot,
            "'{}' using 1:2 skip 1 with lines title '{} {param}={:?}'",
            dir.join("trajectory.csv").display(),
            cell.scheme,
            cell.value
        );
    }
    plot.push('\n');
    write_file(&out_dir.join("summary.csv"), &summary)?;
    write_file(&out_dir.join("plot.gnuplot"), &plot)?;
    Ok(cells)
}

#[derive(Debug, Clone)]
pub struct OrderRow {
    pub scheme: Scheme,
    pub h: f64,
    pub defect: f64,
    pub observed_order: Option<f64>,
}

/// Measures Euler, Heun and RK4 against the shared RK4 reference and writes
/// `order.csv`. The mean order is repeated on every row of a scheme and left
/// empty when any defect sits below the noise floor.
pub fn cmd_order(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<OrderRow>, CliError> {
    cfg.validate()?;
    let inst = build_instance(cfg)?;
    let eps = cfg.solver.eps;
    let reference = order_reference(&inst.init, &inst.task, ORDER_HORIZON, &ORDER_STEPS, eps)?;
    let schemes = [Scheme::OdeEuler, Scheme::OdeRk2, Scheme::OdeRk4];
    let per_scheme: Vec<Result<Vec<OrderRow>, Error>> = schemes
        .par_iter()
        .map(|&scheme| {
            let defects = ORDER_STEPS
                .iter()
                .map(|&h| discretization_defect(&inst.init, &inst.task, scheme, ORDER_HORIZON, h, &reference, eps))
                .collect::<Result<Vec<f64>, Error>>()?;
            let order = defects.iter().all(|d| *d >= DEFECT_NOISE_FLOOR).then(|| {
                let r: Vec<f64> = defects.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
                r.iter().sum::<f64>() / r.len() as f64
            });
            Ok(ORDER_STEPS
                .iter()
                .zip(defects)
                .map(|(&h, defect)| OrderRow { scheme, h, defect, observed_order: order })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_scheme {
        rows.extend(r?);
    }
    let mut csv = String::from(ORDER_HEADER);
    csv.push('\n');
    for r in &rows {
        let _ = writeln!(csv, "{},{:?},{},{}", r.scheme, r.h, fmt_f64(r.defect), r.observed_order.map(fmt_f64).unwrap_or_default());
    }
    create_dir(out_dir)?;
    write_file(&out_dir.join("order.csv"), &csv)?;
    write_file(
        &out_dir.join("plot.gnuplot"),
        "set datafile separator ','\nset logscale xy\nset xlabel 'h'\nset ylabel 'defect'\n\
         plot for [s in 'ode_euler ode_rk2 ode_rk4'] 'order.csv' using (strcol(1) eq s ? $2 : NaN):3 skip 1 with linespoints title s\n",
    )?;
    Ok(rows)
}

/// Runs the width sweep for RK4 and classical GD, writing `phi.csv` and
/// `slopes.csv`.
pub fn cmd_feature_scaling(
    out_dir: &Path,
    n_list: &[usize],
    seeds: &[u64],
    settings: &ScalingSettings,
) -> Result<Vec<ScalingReport>, CliError> {
    if n_list.is_empty() || seeds.is_empty() || n_list.iter().any(|&n| n < settings.rank) {
        return Err(ConfigError::OutOfRange {
            field: "n_list",
            message: format!("need nonempty widths >= rank {} and at least one seed", settings.rank),
        }
        .into());
    }
    if !(settings.h > 0.0) {
        return Err(ConfigError::OutOfRange { field: "h", message: format!("{} is not a positive step", settings.h) }.into());
    }
    let reports = [Scheme::OdeRk4, Scheme::ClassicalGd]
        .iter()
        .map(|&s| feature_scaling_experiment(s, n_list, seeds, settings))
        .collect::<Result<Vec<_>, Error>>()?;

    let mut phi = String::from(PHI_HEADER);
    phi.push('\n');
    let mut slopes = String::from(SLOPES_HEADER);
    slopes.push('\n');
    if n_list.len() < 2 {
        slopes.push_str("# warning: slopes need at least two widths\n");
    }
    for rep in &reports {
        for r in &rep.rows {
            let _ = writeln!(phi, "{},{},{},{},{},{}", r.scheme, r.n, r.seed, r.step, r.component, fmt_f64(r.norm));
        }
        if n_list.len() >= 2 {
            for c in &rep.slopes {
                let _ = writeln!(slopes, "{},{},{}", rep.scheme, c.component, c.slope.map(fmt_f64).unwrap_or_default());
            }
        }
    }
    create_dir(out_dir)?;
    write_file(&out_dir.join("phi.csv"), &phi)?;
    write_file(&out_dir.join("slopes.csv"), &slopes)?;
    Ok(reports)
}

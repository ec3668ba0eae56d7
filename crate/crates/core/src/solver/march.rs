//! Heun (SSP-RK2) time marching and the full `solve` driver.

use super::config::SolverConfig;
use super::data::generate_rough_data;
use super::monitor::{min_gap, region_margins};
use super::rhs::{rhs, Discretization, RhsStats};
use super::state::{Coefficients, FieldState, Fields, MonitorRecord, Snapshot, Trajectory};
use crate::error::{Error, Result};
use crate::metric::{self, MetricSolution};
use crate::profile::CurvatureProfile;

/// Everything a step needs besides the state.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub metric: &'a MetricSolution,
    pub profile: &'a CurvatureProfile,
    pub disc: Discretization,
    pub cfl: f64,
}

impl StepContext<'_> {
    fn coefficients(&self, t: f64) -> Result<Coefficients> {
        Coefficients::evaluate(self.metric, self.profile, t)
    }
}

fn axpy(y: &[f64], k: &[f64], dt: f64) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + dt * b).collect()
}

fn with_pair(template: &FieldState, t: f64, a: Vec<f64>, b: Vec<f64>) -> FieldState {
    let fields = match template.fields {
        Fields::Lm { .. } => Fields::Lm { l: a, m: b },
        Fields::Uv { .. } => Fields::Uv { u: a, v: b },
    };
    FieldState { t, fields }
}

/// Completes a Heun step from the first-stage slopes `k1`.
fn heun_finish(
    state: &FieldState,
    k1: &(Vec<f64>, Vec<f64>),
    dt: f64,
    ctx: &StepContext,
) -> Result<FieldState> {
    let (a, b) = state.pair();
    let t1 = state.t + dt;
    let stage = with_pair(state, t1, axpy(a, &k1.0, dt), axpy(b, &k1.1, dt));
    let (k2a, k2b, _) = rhs(&stage, &ctx.coefficients(t1)?, &ctx.disc)?;
    let (sa, sb) = stage.pair();
    let avg = |y: &[f64], s: &[f64], k: &[f64]| -> Vec<f64> {
        y.iter().zip(s).zip(k).map(|((y, s), k)| 0.5 * (y + s + dt * k)).collect()
    };
    Ok(with_pair(state, t1, avg(a, sa, &k2a), avg(b, sb, &k2b)))
}

/// Advances `state` by `dt` with Heun's method. If `dt` exceeds the stable
/// step at the current state the interval is split into equal sub-steps.
pub fn step(state: &FieldState, dt: f64, ctx: &StepContext) -> Result<FieldState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
    }
    let t_end = state.t + dt;
    let mut current = state.clone();
    let mut remaining = dt;
    while remaining > 0.0 {
        let (ka, kb, stats) = rhs(&current, &ctx.coefficients(current.t)?, &ctx.disc)?;
        let stable = stats.stable_dt(ctx.disc.dx, ctx.cfl);
        let h = if remaining <= stable { remaining } else { remaining / (remaining / stable).ceil() };
        current = heun_finish(&current, &(ka, kb), h, ctx)?;
        remaining -= h;
        if remaining <= 1e-14 * dt {
            current.t = t_end;
            break;
        }
    }
    Ok(current)
}

/// Onset time `T*` of the sign-switch property computed on `[0, horizon]`,
/// and the default start time `2T*`.
pub fn admissible_start(profile: &CurvatureProfile, horizon: f64, metric_step: f64) -> Result<(f64, f64)> {
    let metric = metric::solve_h(profile, horizon, metric_step)?;
    let t_star = metric::find_t_star(&metric, profile)?;
    Ok((t_star, metric::safe_start_time(t_star)))
}

fn record(state: &FieldState, dt: f64, stats: &RhsStats, ctx: &StepContext, psi0: f64) -> Result<MonitorRecord> {
    let (l, u, v) = match &state.fields {
        Fields::Uv { u, v } => {
            let l: Vec<f64> = u.iter().zip(v).map(|(u, v)| 2.0 / (u - v)).collect();
            (l, u.clone(), v.clone())
        }
        Fields::Lm { l, m } => {
            let u = l.iter().zip(m).map(|(l, m)| (1.0 - m) / l).collect();
            let v = l.iter().zip(m).map(|(l, m)| -(1.0 + m) / l).collect();
            (l.clone(), u, v)
        }
    };
    let n = l.len();
    let max_dx_l = (0..n).map(|j| (l[(j + 1) % n] - l[j]).abs()).fold(0.0, f64::max) / ctx.disc.dx;
    Ok(MonitorRecord {
        t: state.t,
        dt,
        cfl: dt * (stats.max_speed / ctx.disc.dx
            + 2.0 * stats.max_diffusion / (ctx.disc.dx * ctx.disc.dx)
            + stats.max_drift / ctx.disc.dx),
        min_gap: min_gap(&u, &v),
        margins: region_margins(&u, &v, state.t, psi0),
        max_dx_l,
        min_l: l.iter().copied().fold(f64::INFINITY, f64::min),
        max_l: l.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn abort(state: &FieldState, reason: String) -> Error {
    Error::SolverAbort { t: state.t, reason, snapshot: Box::new(state.clone()) }
}

/// Post-step admissibility: finite values and a non-degenerate state.
fn check_state(state: &FieldState, gap_min: f64) -> std::result::Result<(), String> {
    if !state.is_finite() {
        return Err("non-finite values".into());
    }
    let (a, b) = state.pair();
    for (j, (&a, &b)) in a.iter().zip(b).enumerate() {
        let gap = match state.fields {
            Fields::Uv { .. } => b - a,
            Fields::Lm { .. } => {
                if !(a < 0.0) {
                    return Err(format!("cell {j}: l = {a} is not negative"));
                }
                -2.0 / a
            }
        };
        if !(gap >= gap_min) {
            return Err(format!("cell {j}: v − u = {gap:e} below {gap_min:e}"));
        }
    }
    Ok(())
}

/// Solves the viscous system on `[t_start, t_end]` from the configured data.
///
/// Snapshots are stored every `output_interval` (and at `t_end`); a monitor
/// record is written after every accepted step. Loss of hyperbolicity or
/// non-finite values abort with [`Error::SolverAbort`] carrying the last
/// admissible state.
pub fn solve(config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let metric = metric::solve_h(&config.profile, config.t_end, config.metric_step)?;
    solve_with_metric(config, &metric)
}

/// As [`solve`] with a precomputed metric covering `[0, t_end]`.
pub fn solve_with_metric(config: &SolverConfig, metric: &MetricSolution) -> Result<Trajectory> {
    config.validate()?;
    let data = generate_rough_data(&config.data, config.cells, config.t_start, config.psi0, config.seed)?;
    let initial = data.to_representation(config.representation)?;
    solve_from(config, metric, initial)
}

/// Marches a given initial state (its time must equal `t_start`).
pub fn solve_from(config: &SolverConfig, metric: &MetricSolution, initial: FieldState) -> Result<Trajectory> {
    config.validate()?;
    if initial.len() != config.cells {
        return Err(Error::InvalidInput(format!("initial state has {} cells, config {}", initial.len(), config.cells)));
    }
    if metric.t_max() < config.t_end * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("metric grid ends at {} before t_end = {}", metric.t_max(), config.t_end)));
    }
    let ctx = StepContext {
        metric,
        profile: &config.profile,
        disc: Discretization {
            dx: config.dx(),
            viscosity: config.viscosity,
            limiter: config.limiter,
            viscous_form: config.viscous_form,
            gap_min: config.gap_min,
        },
        cfl: config.cfl,
    };
    let t_star = metric::find_t_star(metric, &config.profile).ok();

    let mut state = FieldState { t: config.t_start, ..initial };
    check_state(&state, config.gap_min).map_err(|r| abort(&state, r))?;
    let mut snapshots = vec![Snapshot { coefficients: ctx.coefficients(state.t)?, state: state.clone() }];
    let mut monitor = Vec::new();

    let span = config.t_end - config.t_start;
    let outputs = (span / config.output_interval - 1e-9).ceil().max(1.0) as usize;
    for k in 1..=outputs {
        let target = if k == outputs { config.t_end } else { config.t_start + k as f64 * config.output_interval };
        while state.t < target {
            let c = ctx.coefficients(state.t)?;
            let (ka, kb, stats) = rhs(&state, &c, &ctx.disc).map_err(|e| abort(&state, e.to_string()))?;
            let stable = stats.stable_dt(ctx.disc.dx, ctx.cfl);
            let remaining = target - state.t;
            let mut dt = config.dt_max.min(stable);
            let last = dt >= remaining * (1.0 - 1e-12);
            if last {
                dt = remaining;
            }
            let mut next = heun_finish(&state, &(ka, kb), dt, &ctx).map_err(|e| abort(&state, e.to_string()))?;
            if last {
                next.t = target;
            }
            check_state(&next, config.gap_min).map_err(|r| abort(&state, r))?;
            monitor.push(record(&next, dt, &stats, &ctx, config.psi0)?);
            state = next;
        }
        snapshots.push(Snapshot { coefficients: ctx.coefficients(state.t)?, state: state.clone() });
    }
    Ok(Trajectory { config: config.clone(), t_star, snapshots, monitor })
}

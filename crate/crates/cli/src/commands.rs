use std::path::Path;

use gauss_codazzi::diagnostics::{mu_sweep, SweepReport};
use gauss_codazzi::metric::{self, DecayReport};
use gauss_codazzi::solver::{self, admissible_start, SolverConfig, Trajectory};
use gauss_codazzi::surface::{self, FormField, FormResidualReport, IntegrationOptions};
use gauss_codazzi::{io, CurvatureProfile, Error};
use serde::Serialize;

use crate::bundle::Bundle;
use crate::config::{ExperimentConfig, SurfaceSource};
use crate::error::CliError;

/// File name of the diagnostic checkpoint written when a solve aborts.
pub const ABORT_SNAPSHOT: &str = "abort_snapshot.bin";

#[derive(Debug, Serialize)]
struct PhiCheck {
    anchor: f64,
    psi0: f64,
    positive: bool,
    strictly_decreasing: bool,
    /// Max |explicit − ODE| over shared samples.
    explicit_vs_ode: f64,
    agreement_tolerance: f64,
    admissible: bool,
}

#[derive(Debug, Serialize)]
struct MetricSummary {
    c1: Option<f64>,
    t_star: Option<f64>,
    t_safe: Option<f64>,
    sandwich_violation: Option<f64>,
    metric_error_estimate: f64,
    phi: Option<PhiCheck>,
    /// Reason φ was not checked (no sign switch, anchor past the horizon, blow-up).
    phi_skipped: Option<String>,
    p_threshold: Option<f64>,
}

fn phi_check(config: &ExperimentConfig, m: &metric::MetricSolution, anchor: f64) -> Result<PhiCheck, Error> {
    let psi0 = config.metric.psi0;
    let explicit = metric::phi_explicit(m, &config.profile, anchor, psi0)?;
    let ode = metric::phi_ode(m, &config.profile, anchor, psi0, m.t_max())?;
    let diff = explicit.values.iter().zip(&ode.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let tol = config.tolerances.phi_agreement;
    let (positive, decreasing) = (explicit.is_positive(), explicit.is_strictly_decreasing());
    Ok(PhiCheck {
        anchor,
        psi0,
        positive,
        strictly_decreasing: decreasing,
        explicit_vs_ode: diff,
        agreement_tolerance: tol,
        admissible: positive && decreasing && diff <= tol,
    })
}

pub fn metric(config: &ExperimentConfig, bundle: &mut Bundle) -> Result<(), CliError> {
    let profile = &config.profile;
    let m = metric::solve_h(profile, config.metric.horizon, config.metric.step)?;
    let t_star = metric::find_t_star(&m, profile).ok();
    let t_safe = t_star.map(metric::safe_start_time);
    let (phi, phi_skipped) = match t_safe {
        None => (None, Some("no sign switch on the metric grid".to_owned())),
        Some(anchor) if anchor >= m.t_max() => (None, Some(format!("anchor {anchor} lies beyond the horizon"))),
        Some(anchor) => match phi_check(config, &m, anchor) {
            Ok(check) => (Some(check), None),
            Err(e @ Error::BlowUp { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e.into()),
        },
    };
    let p_threshold = match profile {
        CurvatureProfile::LogDecay { .. } => metric::log_decay_threshold(&config.decay.p_scan)?,
        _ => None,
    };
    let summary = MetricSummary {
        c1: m.c1,
        t_star,
        t_safe,
        sandwich_violation: m.sandwich_violation(),
        metric_error_estimate: m.error_estimate,
        phi,
        phi_skipped,
        p_threshold,
    };
    bundle.add("metric.csv", io::metric_csv(&m, profile)?);
    bundle.add_json("summary.json", &summary)
}

#[derive(Debug, Serialize)]
struct DecaySummary {
    reports: Vec<DecayReport>,
    /// First scanned `p` passing the test with `ln 3 ≈ 1.09`.
    threshold: Option<f64>,
    threshold_exact_ln3: Option<f64>,
    monotone: bool,
}

pub fn verify_decay(config: &ExperimentConfig, bundle: &mut Bundle) -> Result<(), CliError> {
    let reports = config.decay.p_scan.iter().map(|&p| metric::decay_sufficiency_log(p)).collect::<Result<Vec<_>, _>>()?;
    let first = |f: fn(&DecayReport) -> bool| reports.iter().find(|r| f(r)).map(|r| r.p);
    let mut sorted = reports.clone();
    sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
    let monotone = sorted.windows(2).all(|w| !w[0].satisfied || w[1].satisfied);
    let summary = DecaySummary {
        threshold: first(|r| r.satisfied),
        threshold_exact_ln3: first(|r| r.satisfied_exact_ln3),
        monotone,
        reports,
    };
    bundle.add_json("decay.json", &summary)
}

fn solver_config(config: &ExperimentConfig, seed: u64) -> Result<SolverConfig, CliError> {
    config.solver_section()?.build(&config.profile, seed, || {
        let (_, start) = admissible_start(&config.profile, config.metric.horizon, config.metric.step)?;
        Ok(start)
    })
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    t_star: Option<f64>,
    t_start: f64,
    t_end: f64,
    steps: usize,
    snapshots: usize,
    worst_margin: f64,
    min_gap: f64,
    /// `min (gap − 2e^{−t}ψ₀)`.
    worst_gap_excess: f64,
    min_l: f64,
    max_l: f64,
    /// `−2e^{t_end}/ψ₀`, the lower bound on `l`.
    l_lower_bound: f64,
    region_tolerance: f64,
    region_ok: bool,
}

fn solve_summary(traj: &Trajectory, tol: f64) -> SolveSummary {
    let c = &traj.config;
    let fold = |f: fn(&solver::MonitorRecord) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        traj.monitor.iter().map(f).fold(init, pick)
    };
    let worst_margin = traj.worst_margin();
    let worst_gap_excess = traj.worst_gap_excess();
    let min_l = fold(|r| r.min_l, f64::INFINITY, f64::min);
    let max_l = fold(|r| r.max_l, f64::NEG_INFINITY, f64::max);
    let l_lower_bound = -2.0 * c.t_end.exp() / c.psi0;
    SolveSummary {
        t_star: traj.t_star,
        t_start: c.t_start,
        t_end: c.t_end,
        steps: traj.monitor.len(),
        snapshots: traj.snapshots.len(),
        worst_margin,
        min_gap: fold(|r| r.min_gap, f64::INFINITY, f64::min),
        worst_gap_excess,
        min_l,
        max_l,
        l_lower_bound,
        region_tolerance: tol,
        region_ok: worst_margin >= -tol && worst_gap_excess >= -tol && min_l > l_lower_bound && max_l < 0.0,
    }
}

/// Writes the abort checkpoint immediately and reports its path.
fn abort_error(e: Error, out: &Path) -> CliError {
    match e {
        Error::SolverAbort { t, reason, snapshot } => {
            let path = out.join(ABORT_SNAPSHOT);
            let mut err = CliError::new(crate::error::ErrorKind::Numerical, format!("solver aborted at t = {t}: {reason}"));
            match std::fs::create_dir_all(out).and_then(|_| {
                io::write_checkpoint(&path, &snapshot).map_err(|e| std::io::Error::other(e.to_string()))
            }) {
                Ok(()) => err.snapshot = Some(path),
                Err(w) => err.message.push_str(&format!(" (snapshot not written: {w})")),
            }
            err
        }
        other => other.into(),
    }
}

pub fn solve(config: &ExperimentConfig, seed: u64, out: &Path, bundle: &mut Bundle) -> Result<(), CliError> {
    let sc = solver_config(config, seed)?;
    let traj = solver::solve(&sc).map_err(|e| abort_error(e, out))?;
    bundle.add("trajectory.csv", io::trajectory_csv(&traj)?);
    bundle.add("monitor.csv", io::monitor_csv(&traj.monitor)?);
    bundle.add_json("trajectory.json", &traj)?;
    bundle.add_json("summary.json", &solve_summary(&traj, config.tolerances.region_margin))
}

#[derive(Debug, Serialize)]
struct SweepCheck {
    seed: u64,
    distances_strictly_decreasing: bool,
    residuals_decreasing: bool,
    dissipation_slope_ok: bool,
    bound_holds: bool,
    failures: usize,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    mu: Vec<f64>,
    residual_noise: f64,
    dissipation_slope_min: f64,
    seeds: Vec<SweepCheck>,
}

pub fn sweep(config: &ExperimentConfig, seed: u64, bundle: &mut Bundle) -> Result<(), CliError> {
    let section = config.sweep.as_ref().ok_or_else(|| CliError::config("missing [sweep] section"))?;
    let seeds = section.seeds.clone().unwrap_or_else(|| vec![seed]);
    let tol = &config.tolerances;
    let mut checks = Vec::with_capacity(seeds.len());
    for s in seeds {
        let sc = solver_config(config, s)?;
        let (report, _): (SweepReport, _) = mu_sweep(&sc, &section.mu)?;
        checks.push(SweepCheck {
            seed: s,
            distances_strictly_decreasing: report.distances_strictly_decreasing(),
            residuals_decreasing: report.residuals_decreasing(tol.residual_noise),
            dissipation_slope_ok: report.dissipation_slope.is_some_and(|v| v >= tol.dissipation_slope_min),
            bound_holds: report.bound_holds,
            failures: report.failures.len(),
        });
        bundle.add(&format!("residuals_seed{s}.csv"), io::residual_table_csv(&report)?);
        bundle.add_json(&format!("sweep_seed{s}.json"), &report)?;
    }
    let summary = SweepSummary {
        mu: section.mu.clone(),
        residual_noise: tol.residual_noise,
        dissipation_slope_min: tol.dissipation_slope_min,
        seeds: checks,
    };
    bundle.add_json("summary.json", &summary)
}

#[derive(Debug, Serialize)]
struct ReconstructionReport {
    nx: usize,
    nt: usize,
    options: IntegrationOptions,
    forms: FormResidualReport,
    gauss_residual: f64,
    normal_unit_defect: f64,
    normal_orthogonality_defect: f64,
    gram_defect: f64,
}

pub fn reconstruct(config: &ExperimentConfig, bundle: &mut Bundle) -> Result<(), CliError> {
    let section = config.reconstruct.as_ref().ok_or_else(|| CliError::config("missing [reconstruct] section"))?;
    let field = match &section.input {
        SurfaceSource::Plane { nx, nt, lx, lt } => FormField::plane(*nx, *nt, *lx, *lt),
        SurfaceSource::Cylinder { radius, nx, nt, lx, lt } => FormField::cylinder(*radius, *nx, *nt, *lx, *lt),
        SurfaceSource::Bundle { path } => {
            let file = path.join("trajectory.json");
            let bytes = std::fs::read(&file)
                .map_err(|e| CliError::missing(format!("cannot read trajectory bundle {}: {e}", file.display())))?;
            bundle.record_input(&file, &bytes);
            let traj: Trajectory = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::missing(format!("{} is not a trajectory bundle: {e}", file.display())))?;
            FormField::from_trajectory(&traj)?
        }
    };
    let options = section.options();
    let s = surface::frame_integrate(&field, options)?;
    let forms = surface::verify_forms(&s, &field)?;
    let (unit, orth, gram) = s.frame_defects(&field);
    let report = ReconstructionReport {
        nx: s.nx,
        nt: s.nt,
        options,
        forms,
        gauss_residual: field.gauss_residual(),
        normal_unit_defect: unit,
        normal_orthogonality_defect: orth,
        gram_defect: gram,
    };
    bundle.add("surface.obj", surface::obj_string(&s)?.into_bytes());
    bundle.add_json("residuals.json", &report)
}

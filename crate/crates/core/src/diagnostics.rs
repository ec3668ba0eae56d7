//! Entropy pair, dissipation norms, weak residuals against a fixed bank of
//! bump functions, and the vanishing-viscosity sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, ScaledState};
use crate::solver::rhs::{rhs_lm_arrays, Discretization};
use crate::solver::{self, Coefficients, SolverConfig, Trajectory};

/// Tolerance for the constraint `l n − m² = −1`, relative to `|l n| + m² + 1`.
pub const GAUSS_TOLERANCE: f64 = 1e-12;

/// Quadrature tolerance of the weak residuals; values below it are zero
/// for the purpose of trend checks.
pub const WEAK_RESIDUAL_FLOOR: f64 = 1e-8;

/// `η = −(m² + 1)/l` and `q = (m³ − m)/(h l²)`.
pub fn entropy_eval(l: f64, m: f64, h: f64) -> Result<(f64, f64)> {
    if l == 0.0 || !l.is_finite() {
        return Err(Error::Domain(format!("entropy needs l ≠ 0 (got {l})")));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("entropy flux needs h > 0 (got {h})")));
    }
    Ok((-(m * m + 1.0) / l, (m * m * m - m) / (h * l * l)))
}

/// `(∂η/∂l, ∂η/∂m)`.
pub fn entropy_gradient(l: f64, m: f64) -> (f64, f64) {
    ((m * m + 1.0) / (l * l), -2.0 * m / l)
}

/// `∇²η = −(2/l) [[(m²+1)/l², −m/l], [−m/l, 1]]`.
pub fn entropy_hessian(l: f64, m: f64) -> [[f64; 2]; 2] {
    let s = -2.0 / l;
    [[s * (m * m + 1.0) / (l * l), -s * m / l], [-s * m / l, s]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub positive_definite: bool,
    /// Ascending.
    pub eigenvalues: [f64; 2],
}

pub fn hessian_pd(l: f64, m: f64) -> HessianReport {
    let [[a, b], [_, d]] = entropy_hessian(l, m);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    // The smaller root via the determinant avoids cancellation.
    let det = a * d - b * b;
    let large = mean + radius.copysign(mean);
    let small = if large != 0.0 { det / large } else { 0.0 };
    let mut eigenvalues = [small, large];
    eigenvalues.sort_by(f64::total_cmp);
    HessianReport { positive_definite: a > 0.0 && det > 0.0, eigenvalues }
}

/// Residual of the discrete entropy balance on a smooth state at one time:
/// with `∂ₜ(l, m)` given by the solver right-hand side, returns
/// `max_j |∂ₜη + ∂ₓq − η_l(S_l + μ∂ₓₓl) − η_m(S_m + μ∂ₓₓm)|`, where `S` are
/// the zeroth-order source terms. `∂ₓq` and `∂ₓₓ` are centred differences.
/// The continuum identity makes this vanish; it decays like `Δx²`.
pub fn entropy_identity_residual(l: &[f64], m: &[f64], c: &Coefficients, disc: &Discretization) -> Result<f64> {
    let (dl, dm, _) = rhs_lm_arrays(l, m, c, disc)?;
    let n_cells = l.len();
    let dx = disc.dx;
    let q: Vec<f64> = l.iter().zip(m).map(|(&l, &m)| entropy_eval(l, m, c.b).map(|e| e.1)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for j in 0..n_cells {
        let jm = (j + n_cells - 1) % n_cells;
        let jp = (j + 1) % n_cells;
        let (lj, mj) = (l[j], m[j]);
        let nj = (mj * mj - 1.0) / lj;
        let (el, em) = entropy_gradient(lj, mj);
        let eta_t = el * dl[j] + em * dm[j];
        let q_x = (q[jp] - q[jm]) / (2.0 * dx);
        let src_l = -(lj - nj) * c.dlnb - 0.5 * lj * c.dlnk + disc.viscosity * (l[jp] - 2.0 * lj + l[jm]) / (dx * dx);
        let src_m = -2.0 * mj * c.dlnb - 0.5 * mj * c.dlnk + disc.viscosity * (m[jp] - 2.0 * mj + m[jm]) / (dx * dx);
        worst = worst.max((eta_t + q_x - el * src_l - em * src_m).abs());
    }
    Ok(worst)
}

/// Space-time window `[x_min, x_max] × [t_min, t_max]` with `x` in `[0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Window {
    /// The whole periodic interval over the trajectory's time span.
    pub fn full(traj: &Trajectory) -> Self {
        Self { x_min: 0.0, x_max: std::f64::consts::TAU, t_min: traj.config.t_start, t_max: traj.config.t_end }
    }

    fn check(&self, traj: &Trajectory) -> Result<()> {
        let (t0, t1) = (traj.config.t_start, traj.config.t_end);
        let slack = 1e-12 * t1.abs().max(1.0);
        if !(self.x_min >= 0.0 && self.x_max <= std::f64::consts::TAU && self.x_min < self.x_max)
            || !(self.t_min >= t0 - slack && self.t_max <= t1 + slack && self.t_min < self.t_max)
        {
            return Err(Error::InvalidInput(format!(
                "window {self:?} is not inside [0, 2π] × [{t0}, {t1}]"
            )));
        }
        Ok(())
    }

    fn contains_x(&self, x: f64) -> bool {
        x >= self.x_min && x < self.x_max
    }
}

/// Trapezoid weights for the snapshot times falling in `[t_min, t_max]`.
fn time_weights(traj: &Trajectory, w: &Window) -> Vec<(usize, f64)> {
    let slack = 1e-12 * w.t_max.abs().max(1.0);
    let idx: Vec<usize> = (0..traj.snapshots.len())
        .filter(|&i| {
            let t = traj.snapshots[i].state.t;
            t >= w.t_min - slack && t <= w.t_max + slack
        })
        .collect();
    let mut out: Vec<(usize, f64)> = idx.iter().map(|&i| (i, 0.0)).collect();
    for k in 1..idx.len() {
        let h = traj.snapshots[idx[k]].state.t - traj.snapshots[idx[k - 1]].state.t;
        out[k - 1].1 += 0.5 * h;
        out[k].1 += 0.5 * h;
    }
    out
}

/// `√μ ‖∂ₓl‖` and `√μ ‖∂ₓm‖` over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub times: Vec<f64>,
    /// `√μ ‖∂ₓl(·, t)‖_{L²(x-window)}` at each snapshot in the window.
    pub l_norm: Vec<f64>,
    pub m_norm: Vec<f64>,
    /// `√μ ‖∂ₓl‖_{L²(V)}` over the space-time window.
    pub l_space_time: f64,
    pub m_space_time: f64,
}

impl DissipationReport {
    pub fn sup_l(&self) -> f64 {
        self.l_norm.iter().copied().fold(0.0, f64::max)
    }

    pub fn sup_m(&self) -> f64 {
        self.m_norm.iter().copied().fold(0.0, f64::max)
    }
}

/// Discrete dissipation norms using one-sided differences `(w_{j+1} − w_j)/Δx`
/// over the cells whose left node lies in the window.
pub fn dissipation_norm(traj: &Trajectory, window: &Window) -> Result<DissipationReport> {
    window.check(traj)?;
    let dx = traj.config.dx();
    let mu_sqrt = traj.config.viscosity.sqrt();
    let xs = traj.grid();
    let mut report = DissipationReport { times: vec![], l_norm: vec![], m_norm: vec![], l_space_time: 0.0, m_space_time: 0.0 };
    let (mut acc_l, mut acc_m) = (0.0, 0.0);
    for (i, weight) in time_weights(traj, window) {
        let (l, m, _) = traj.snapshots[i].state.lmn()?;
        let n = l.len();
        let (mut sl, mut sm) = (0.0, 0.0);
        for j in (0..n).filter(|&j| window.contains_x(xs[j])) {
            let k = (j + 1) % n;
            sl += ((l[k] - l[j]) / dx).powi(2) * dx;
            sm += ((m[k] - m[j]) / dx).powi(2) * dx;
        }
        report.times.push(traj.snapshots[i].state.t);
        report.l_norm.push(mu_sqrt * sl.sqrt());
        report.m_norm.push(mu_sqrt * sm.sqrt());
        acc_l += weight * sl;
        acc_m += weight * sm;
    }
    report.l_space_time = mu_sqrt * acc_l.sqrt();
    report.m_space_time = mu_sqrt * acc_m.sqrt();
    Ok(report)
}

/// `exp(−1/(1 − r²))` on `|r| < 1`, zero outside.
fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

fn bump_prime(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r * r;
        -2.0 * r / (s * s) * bump(r)
    }
}

/// Tensor-product bump `χ(x, t) = φ((x − x_c)/r_x) φ((t − t_c)/r_t)` with
/// centre and radii given as fractions of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub x_center: f64,
    pub t_center: f64,
    pub x_radius: f64,
    pub t_radius: f64,
}

/// The fixed 8-function bank (version 1). Supports stay inside the window.
pub const TEST_BANK_V1: [TestFunction; 8] = [
    TestFunction { x_center: 0.50, t_center: 0.50, x_radius: 0.45, t_radius: 0.45 },
    TestFunction { x_center: 0.25, t_center: 0.50, x_radius: 0.20, t_radius: 0.40 },
    TestFunction { x_center: 0.75, t_center: 0.50, x_radius: 0.20, t_radius: 0.40 },
    TestFunction { x_center: 0.50, t_center: 0.30, x_radius: 0.30, t_radius: 0.25 },
    TestFunction { x_center: 0.50, t_center: 0.70, x_radius: 0.30, t_radius: 0.25 },
    TestFunction { x_center: 0.15, t_center: 0.25, x_radius: 0.12, t_radius: 0.20 },
    TestFunction { x_center: 0.85, t_center: 0.75, x_radius: 0.12, t_radius: 0.20 },
    TestFunction { x_center: 0.40, t_center: 0.60, x_radius: 0.10, t_radius: 0.30 },
];

impl TestFunction {
    fn absolute(&self, w: &Window) -> (f64, f64, f64, f64) {
        let (lx, lt) = (w.x_max - w.x_min, w.t_max - w.t_min);
        (w.x_min + self.x_center * lx, w.t_min + self.t_center * lt, self.x_radius * lx, self.t_radius * lt)
    }

    fn validate(&self) -> Result<()> {
        let inside = |c: f64, r: f64| r > 0.0 && c - r >= 0.0 && c + r <= 1.0;
        if inside(self.x_center, self.x_radius) && inside(self.t_center, self.t_radius) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("test function {self:?} is not supported inside the window")))
        }
    }

    /// `(χ, ∂ₓχ, ∂ₜχ)` at `(x, t)`.
    pub fn eval(&self, w: &Window, x: f64, t: f64) -> (f64, f64, f64) {
        let (xc, tc, rx, rt) = self.absolute(w);
        let (sx, st) = ((x - xc) / rx, (t - tc) / rt);
        let (bx, bt) = (bump(sx), bump(st));
        (bx * bt, bump_prime(sx) / rx * bt, bx * bump_prime(st) / rt)
    }
}

/// `|∫∫ (l χₜ − (m/h) χₓ + S_l χ)|` and `|∫∫ (m χₜ − (n/h) χₓ + S_m χ)|`:
/// the weak forms of `∂ₜl − ∂ₓ(m/h) = S_l`, `∂ₜm − ∂ₓ(n/h) = S_m` with
/// `S_l = −(l − n)∂ₜln h − (l/2)∂ₜln|K|`, `S_m = −2m∂ₜln h − (m/2)∂ₜln|K|`.
///
/// Both directions use the trapezoid rule (periodic in `x`, over snapshots
/// in `t`); since `χ` vanishes to all orders at the support boundary this is
/// spectrally accurate for smooth integrands.
pub fn weak_residual(traj: &Trajectory, window: &Window, bank: &[TestFunction]) -> Result<Vec<[f64; 2]>> {
    window.check(traj)?;
    for chi in bank {
        chi.validate()?;
    }
    let dx = traj.config.dx();
    let xs = traj.grid();
    let mut out = vec![[0.0; 2]; bank.len()];
    for (i, wt) in time_weights(traj, window) {
        if wt == 0.0 {
            continue;
        }
        let snap = &traj.snapshots[i];
        let c = &snap.coefficients;
        let t = snap.state.t;
        let (l, m, n) = snap.state.lmn()?;
        for (k, chi) in bank.iter().enumerate() {
            let (mut rl, mut rm) = (0.0, 0.0);
            for j in 0..xs.len() {
                let (ch, chx, cht) = chi.eval(window, xs[j], t);
                if ch == 0.0 && chx == 0.0 && cht == 0.0 {
                    continue;
                }
                let sl = -(l[j] - n[j]) * c.dlnb - 0.5 * l[j] * c.dlnk;
                let sm = -2.0 * m[j] * c.dlnb - 0.5 * m[j] * c.dlnk;
                rl += l[j] * cht - m[j] / c.b * chx + sl * ch;
                rm += m[j] * cht - n[j] / c.b * chx + sm * ch;
            }
            out[k][0] += wt * dx * rl;
            out[k][1] += wt * dx * rm;
        }
    }
    Ok(out.into_iter().map(|[a, b]| [a.abs(), b.abs()]).collect())
}

/// L¹ and L² distances over the window between two trajectories on the same
/// grid and snapshot times, summed over the components `(l, m, n)`.
pub fn trajectory_distance(a: &Trajectory, b: &Trajectory, window: &Window) -> Result<(f64, f64)> {
    window.check(a)?;
    window.check(b)?;
    if a.config.cells != b.config.cells || a.snapshots.len() != b.snapshots.len() {
        return Err(Error::InvalidInput("trajectories are on different grids".into()));
    }
    let dx = a.config.dx();
    let xs = a.grid();
    let (mut l1, mut l2) = (0.0, 0.0);
    for (i, wt) in time_weights(a, window) {
        if (a.snapshots[i].state.t - b.snapshots[i].state.t).abs() > 1e-9 {
            return Err(Error::InvalidInput("snapshot times differ".into()));
        }
        let (la, ma, na) = a.snapshots[i].state.lmn()?;
        let (lb, mb, nb) = b.snapshots[i].state.lmn()?;
        for j in (0..xs.len()).filter(|&j| window.contains_x(xs[j])) {
            for d in [la[j] - lb[j], ma[j] - mb[j], na[j] - nb[j]] {
                l1 += wt * dx * d.abs();
                l2 += wt * dx * d * d;
            }
        }
    }
    Ok((l1, l2.sqrt()))
}

/// `A = max(e^{T₂}/ψ₀, 1, ψ₀)`: on the invariant region `|l| ≤ eᵗ/ψ₀`,
/// `|m| ≤ 1` and `|n| ≤ ψ₀`.
pub fn region_bound(t_end: f64, psi0: f64) -> f64 {
    (t_end.exp() / psi0).max(1.0).max(psi0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub mu: f64,
    pub status: RunStatus,
    pub dissipation_l: Option<f64>,
    pub dissipation_m: Option<f64>,
    pub sup_dissipation_l: Option<f64>,
    /// Per bank function: residuals of the `l` and `m` balance laws.
    pub weak_residuals: Vec<[f64; 2]>,
    /// `max ‖(l, m, n)‖_∞` over all snapshots.
    pub max_norm: Option<f64>,
    pub worst_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub mu_coarse: f64,
    pub mu_fine: f64,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub mu: Vec<f64>,
    pub window: Window,
    pub bank: Vec<TestFunction>,
    pub runs: Vec<SweepRun>,
    /// Consecutive pairs of successful runs.
    pub distances: Vec<DistanceRecord>,
    /// `log(d_k/d_{k+1}) / log(μ_k/μ_{k+1})` for consecutive distances.
    pub distance_rates: Vec<f64>,
    /// Least-squares slope of `log √μ‖∂ₓl‖_{L²(V)}` against `log μ`.
    pub dissipation_slope: Option<f64>,
    /// The region constant `A` and whether every run stays below it.
    pub bound_a: f64,
    pub bound_holds: bool,
    /// Relative Gauss residual of the finest successful run.
    pub gauss_residual: Option<f64>,
    pub gauss_tolerance: f64,
    pub failures: Vec<String>,
}

impl SweepReport {
    pub fn distances_strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1].l1 < w[0].l1)
    }

    /// Residuals decrease along the sweep, allowing `noise` relative slack;
    /// values at or below [`WEAK_RESIDUAL_FLOOR`] count as zero.
    pub fn residuals_decreasing(&self, noise: f64) -> bool {
        let ok: Vec<&SweepRun> = self.runs.iter().filter(|r| r.status == RunStatus::Ok).collect();
        ok.windows(2).all(|w| {
            w[0].weak_residuals.iter().zip(&w[1].weak_residuals).all(|(a, b)| {
                (0..2).all(|c| b[c] <= a[c] * (1.0 + noise) || b[c] <= WEAK_RESIDUAL_FLOOR)
            })
        })
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn relative_gauss_residual(traj: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for snap in &traj.snapshots {
        let (l, m, n) = snap.state.lmn()?;
        for j in 0..l.len() {
            let r = geometry::gauss_residual(&ScaledState::new(l[j], m[j], n[j]));
            worst = worst.max(r.abs() / ((l[j] * n[j]).abs() + m[j] * m[j] + 1.0));
        }
    }
    Ok(worst)
}

fn summarize(mu: f64, result: &Result<Trajectory>, bank: &[TestFunction]) -> Result<SweepRun> {
    let traj = match result {
        Ok(t) => t,
        Err(e) => {
            return Ok(SweepRun {
                mu,
                status: RunStatus::Failed { reason: e.to_string() },
                dissipation_l: None,
                dissipation_m: None,
                sup_dissipation_l: None,
                weak_residuals: vec![],
                max_norm: None,
                worst_margin: None,
            })
        }
    };
    let window = Window::full(traj);
    let diss = dissipation_norm(traj, &window)?;
    let mut max_norm: f64 = 0.0;
    for snap in &traj.snapshots {
        let (l, m, n) = snap.state.lmn()?;
        max_norm = l.iter().chain(&m).chain(&n).fold(max_norm, |a, x| a.max(x.abs()));
    }
    Ok(SweepRun {
        mu,
        status: RunStatus::Ok,
        dissipation_l: Some(diss.l_space_time),
        dissipation_m: Some(diss.m_space_time),
        sup_dissipation_l: Some(diss.sup_l()),
        weak_residuals: weak_residual(traj, &window, bank)?,
        max_norm: Some(max_norm),
        worst_margin: Some(traj.worst_margin()),
    })
}

/// Solves `config` for each viscosity in `mu_list` (strictly decreasing)
/// on a common grid, data and seed, in parallel, and compares the runs.
/// Aborted runs are annotated rather than propagated.
pub fn mu_sweep(config: &SolverConfig, mu_list: &[f64]) -> Result<(SweepReport, Vec<Result<Trajectory>>)> {
    if mu_list.is_empty() || mu_list.windows(2).any(|w| !(w[1] < w[0])) || mu_list.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidInput(format!("μ list must be positive and strictly decreasing (got {mu_list:?})")));
    }
    config.validate()?;
    let metric = crate::metric::solve_h(&config.profile, config.t_end, config.metric_step)?;
    let results: Vec<Result<Trajectory>> = mu_list
        .par_iter()
        .map(|&mu| {
            let mut c = config.clone();
            c.viscosity = mu;
            solver::solve_with_metric(&c, &metric)
        })
        .collect();
    let bank = TEST_BANK_V1.to_vec();
    let runs = mu_list.iter().zip(&results).map(|(&mu, r)| summarize(mu, r, &bank)).collect::<Result<Vec<_>>>()?;

    let window = Window { x_min: 0.0, x_max: std::f64::consts::TAU, t_min: config.t_start, t_max: config.t_end };
    let ok: Vec<(f64, &Trajectory)> =
        mu_list.iter().zip(&results).filter_map(|(&mu, r)| r.as_ref().ok().map(|t| (mu, t))).collect();
    let mut distances = Vec::new();
    for w in ok.windows(2) {
        let (l1, l2) = trajectory_distance(w[0].1, w[1].1, &window)?;
        distances.push(DistanceRecord { mu_coarse: w[0].0, mu_fine: w[1].0, l1, l2 });
    }
    let distance_rates = distances
        .windows(2)
        .map(|w| (w[0].l1 / w[1].l1).ln() / (w[0].mu_coarse / w[1].mu_coarse).ln())
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = runs
        .iter()
        .filter_map(|r| r.dissipation_l.map(|d| (r.mu.ln(), d.ln())))
        .unzip();
    let bound_a = region_bound(config.t_end, config.psi0);
    let bound_holds = runs.iter().filter_map(|r| r.max_norm).all(|m| m <= bound_a);
    let gauss_residual = ok.last().map(|(_, t)| relative_gauss_residual(t)).transpose()?;
    let failures = runs
        .iter()
        .filter_map(|r| match &r.status {
            RunStatus::Failed { reason } => Some(format!("μ = {}: {reason}", r.mu)),
            RunStatus::Ok => None,
        })
        .collect();
    let report = SweepReport {
        mu: mu_list.to_vec(),
        window,
        bank,
        runs,
        distances,
        distance_rates,
        dissipation_slope: least_squares_slope(&xs, &ys),
        bound_a,
        bound_holds,
        gauss_residual,
        gauss_tolerance: GAUSS_TOLERANCE,
        failures,
    };
    Ok((report, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_eval(-1.0, 0.0, 1.0).unwrap(), (1.0, 0.0));
        assert_eq!(entropy_eval(-1.0, 2.0, 1.0).unwrap(), (5.0, 6.0));
        assert_eq!(entropy_eval(-2.0, 1.0, 2.0).unwrap(), (1.0, 0.0));
        assert!(matches!(entropy_eval(0.0, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn hessian_examples() {
        let r = hessian_pd(-1.0, 0.0);
        assert!(r.positive_definite);
        assert_eq!(r.eigenvalues, [2.0, 2.0]);
        assert!(!hessian_pd(1.0, 0.0).positive_definite);
    }

    #[test]
    fn hessian_is_pd_for_negative_l() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let l = -10f64.powf(rng.gen_range(-6.0..3.0));
            let m = rng.gen_range(-50.0..50.0);
            let h = entropy_hessian(l, m);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            assert!(hessian_pd(l, m).positive_definite, "l={l}, m={m}");
            assert!(((det - 4.0 / l.powi(4)) / det).abs() < 1e-9);
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let (l, m) = (-1.7, 0.4);
        let e = 1e-5;
        let g = |l, m| entropy_gradient(l, m);
        let h = entropy_hessian(l, m);
        let dl = ((g(l + e, m).0 - g(l - e, m).0) / (2.0 * e), (g(l + e, m).1 - g(l - e, m).1) / (2.0 * e));
        assert!((dl.0 - h[0][0]).abs() < 1e-8 && (dl.1 - h[0][1]).abs() < 1e-8);
        let eta = |l, m| entropy_eval(l, m, 1.0).unwrap().0;
        let fd = (eta(l + e, m) - eta(l - e, m)) / (2.0 * e);
        assert!((fd - g(l, m).0).abs() < 1e-8);
    }

    #[test]
    fn bank_is_supported_in_window() {
        for chi in TEST_BANK_V1 {
            chi.validate().unwrap();
        }
        let outside = TestFunction { x_center: 0.1, t_center: 0.5, x_radius: 0.2, t_radius: 0.1 };
        assert!(outside.validate().is_err());
    }

    #[test]
    fn slope_fit() {
        let x = [0.0, 1.0, 2.0];
        assert!((least_squares_slope(&x, &[1.0, 3.0, 5.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(least_squares_slope(&[1.0], &[2.0]), None);
    }
}

//! Semi-discrete right-hand sides on the periodic grid `x_j = jΔx`.
//!
//! Transport is upwinded by the sign of the local characteristic speed
//! using a MUSCL-type face reconstruction: centred slopes (second order)
//! away from flagged cells, minmod slopes (first order at extrema) on cells
//! whose second difference exceeds `Δx · range(field)`, which is how jumps
//! and sharp extrema of rough data show up. Diffusion is centred.

use super::config::{Limiter, ViscousForm};
use super::state::{Coefficients, FieldState, Fields};
use crate::error::{Error, Result};
use crate::metric::MetricSolution;
use crate::profile::CurvatureProfile;

impl Coefficients {
    pub fn evaluate(metric: &MetricSolution, profile: &CurvatureProfile, t: f64) -> Result<Self> {
        let (h, dh) = metric.h_and_dh(t)?;
        Ok(Self { t, b: h, dlnb: dh / h, dlnk: profile.dlnk_dt(t), dx_lnk: 0.0, k_abs: profile.k_star(t) })
    }
}

/// Spatial discretisation parameters shared by both representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub dx: f64,
    pub viscosity: f64,
    pub limiter: Limiter,
    pub viscous_form: ViscousForm,
    pub gap_min: f64,
}

/// Quantities that bound the stable time step of an explicit stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RhsStats {
    /// `max_j |characteristic speed|` (already divided by `B`).
    pub max_speed: f64,
    /// Largest effective diffusion coefficient.
    pub max_diffusion: f64,
    /// Largest first-order drift produced by the viscous terms.
    pub max_drift: f64,
}

impl RhsStats {
    /// Largest step keeping every explicit stage a convex combination.
    pub fn stable_dt(&self, dx: f64, cfl: f64) -> f64 {
        let rate = self.max_speed / dx + 2.0 * self.max_diffusion / (dx * dx) + self.max_drift / dx;
        if rate > 0.0 {
            cfl / rate
        } else {
            f64::INFINITY
        }
    }
}

#[inline]
fn wrap(j: isize, n: usize) -> usize {
    j.rem_euclid(n as isize) as usize
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Per-cell flags marking non-smooth cells of `f`.
pub fn rough_flags(f: &[f64], dx: f64) -> Vec<bool> {
    let n = f.len();
    let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let threshold = dx * (hi - lo);
    (0..n)
        .map(|j| {
            let jm = wrap(j as isize - 1, n);
            let jp = wrap(j as isize + 1, n);
            (f[jp] - 2.0 * f[j] + f[jm]).abs() > threshold
        })
        .collect()
}

#[inline]
fn slope(am: f64, a0: f64, ap: f64, flagged: bool, limiter: Limiter) -> f64 {
    let (dm, dp) = (a0 - am, ap - a0);
    let limited = match limiter {
        Limiter::Minmod => true,
        Limiter::Unlimited => false,
        Limiter::Adaptive => flagged,
    };
    if limited {
        minmod(dm, dp)
    } else {
        0.5 * (dm + dp)
    }
}

/// Upwind derivative at the centre of a five-point stencil `a[0..5]`
/// (cells `j−2..=j+2`), for transport with speed of sign `positive`.
/// `flags` are the flags of cells `j−1, j, j+1`.
#[inline]
fn upwind_derivative(a: [f64; 5], flags: [bool; 3], positive: bool, limiter: Limiter, dx: f64) -> f64 {
    let s0 = slope(a[1], a[2], a[3], flags[1], limiter);
    if positive {
        let sm = slope(a[0], a[1], a[2], flags[0], limiter);
        ((a[2] + 0.5 * s0) - (a[1] + 0.5 * sm)) / dx
    } else {
        let sp = slope(a[2], a[3], a[4], flags[2], limiter);
        ((a[3] - 0.5 * sp) - (a[2] - 0.5 * s0)) / dx
    }
}

#[inline]
fn stencil(f: &[f64], j: usize) -> [f64; 5] {
    let n = f.len();
    [-2isize, -1, 0, 1, 2].map(|o| f[wrap(j as isize + o, n)])
}

#[inline]
fn flag_stencil(flags: &[bool], j: usize) -> [bool; 3] {
    let n = flags.len();
    [-1isize, 0, 1].map(|o| flags[wrap(j as isize + o, n)])
}

#[inline]
fn slope_at(f: &[f64], flags: &[bool], j: usize, limiter: Limiter) -> f64 {
    let n = f.len();
    slope(f[wrap(j as isize - 1, n)], f[j], f[wrap(j as isize + 1, n)], flags[j], limiter)
}

/// `(l, m, n)` of a Riemann-invariant pair.
#[inline]
fn lmn_of(u: f64, v: f64) -> [f64; 3] {
    let d = u - v;
    [2.0 / d, -(u + v) / d, 2.0 * u * v / d]
}

/// Upwind flux of `∂ₜ(l, m) + ∂ₓF = 0`, `F = −(m, n)/B`, between face
/// states given as Riemann invariants.
///
/// `F̂ = ½(F_L + F_R) − ½ Σ |λ_k| r_k (ℓ_k · Δw)` with the eigenpairs of
/// `∂F/∂(l, m)` at the averaged invariants: `λ_u = v/B` with
/// `ℓ_u = ∇u = −(u, 1)/l`, `r_u = s(−1, v)`, and `λ_v = u/B` with
/// `ℓ_v = −(v, 1)/l`, `r_v = s(1, −u)`, where `s = l/(u − v)`.
#[inline]
fn face_flux(left: (f64, f64), right: (f64, f64), b: f64) -> [f64; 2] {
    let wl = lmn_of(left.0, left.1);
    let wr = lmn_of(right.0, right.1);
    let (u, v) = (0.5 * (left.0 + right.0), 0.5 * (left.1 + right.1));
    let l = 2.0 / (u - v);
    let s = l / (u - v);
    let (dl, dm) = (wr[0] - wl[0], wr[1] - wl[1]);
    let alpha = -(u * dl + dm) / l;
    let beta = -(v * dl + dm) / l;
    let (au, av) = ((v / b).abs() * alpha * s, (u / b).abs() * beta * s);
    let diss = [-au + av, au * v - av * u];
    [
        -0.5 * (wl[1] + wr[1]) / b - 0.5 * diss[0],
        -0.5 * (wl[2] + wr[2]) / b - 0.5 * diss[1],
    ]
}

fn degenerate(j: usize, what: String) -> Error {
    Error::HyperbolicityDegenerate(format!("cell {j}: {what}"))
}

/// Right-hand side of the Riemann-invariant system
///
/// `∂ₜu = −(v/B)∂ₓu − v(1+u²)∂ₜln B + ((u−v)/4)(∂ₜln|K| + (u/B)∂ₓln|K|) + viscous`,
/// `∂ₜv = −(u/B)∂ₓv − u(1+v²)∂ₜln B + ((v−u)/4)(∂ₜln|K| + (v/B)∂ₓln|K|) + viscous`.
pub fn rhs_uv_arrays(
    u: &[f64],
    v: &[f64],
    c: &Coefficients,
    disc: &Discretization,
) -> Result<(Vec<f64>, Vec<f64>, RhsStats)> {
    let n = u.len();
    let dx = disc.dx;
    let mu = disc.viscosity;
    let flags_u = rough_flags(u, dx);
    let flags_v = rough_flags(v, dx);
    let mut du = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut stats = RhsStats { max_diffusion: mu, ..Default::default() };
    for j in 0..n {
        let (uj, vj) = (u[j], v[j]);
        let gap = vj - uj;
        if !(gap >= disc.gap_min) {
            return Err(degenerate(j, format!("v − u = {gap:e} below {:e}", disc.gap_min)));
        }
        let cu = vj / c.b;
        let cv = uj / c.b;
        stats.max_speed = stats.max_speed.max(cu.abs()).max(cv.abs());
        let ux_up = upwind_derivative(stencil(u, j), flag_stencil(&flags_u, j), cu > 0.0, disc.limiter, dx);
        let vx_up = upwind_derivative(stencil(v, j), flag_stencil(&flags_v, j), cv > 0.0, disc.limiter, dx);

        let mut ru = -cu * ux_up - vj * (1.0 + uj * uj) * c.dlnb
            + 0.25 * (uj - vj) * (c.dlnk + uj / c.b * c.dx_lnk);
        let mut rv = -cv * vx_up - uj * (1.0 + vj * vj) * c.dlnb
            + 0.25 * (vj - uj) * (c.dlnk + vj / c.b * c.dx_lnk);

        if mu > 0.0 {
            let jm = wrap(j as isize - 1, n);
            let jp = wrap(j as isize + 1, n);
            let uxx = (u[jp] - 2.0 * uj + u[jm]) / (dx * dx);
            let vxx = (v[jp] - 2.0 * vj + v[jm]) / (dx * dx);
            let ux = (u[jp] - u[jm]) / (2.0 * dx);
            let vx = (v[jp] - v[jm]) / (2.0 * dx);
            match disc.viscous_form {
                ViscousForm::ChainRule => {
                    // Drift w = 2μ(uₓ − vₓ)/(v − u) multiplies uₓ and vₓ;
                    // upwinded once the cell Péclet number exceeds one.
                    let w = 2.0 * mu * (ux - vx) / gap;
                    stats.max_drift = stats.max_drift.max(w.abs());
                    let hybrid = |f: &[f64], centred: f64| {
                        if w.abs() * dx <= 2.0 * mu {
                            centred
                        } else if w > 0.0 {
                            (f[jp] - f[j]) / dx
                        } else {
                            (f[j] - f[jm]) / dx
                        }
                    };
                    ru += mu * uxx + w * hybrid(u, ux);
                    rv += mu * vxx + w * hybrid(v, vx);
                }
                ViscousForm::Bracket => {
                    let q = (ux - vx) * (ux - vx) / gap;
                    let common = ux * ux - vx * vx;
                    ru += mu / gap * (common - 2.0 * uj * q - uj * uxx);
                    rv += mu / gap * (common - 2.0 * vj * q + vj * vxx);
                    stats.max_diffusion = stats.max_diffusion.max(mu * uj.abs().max(vj.abs()) / gap);
                }
            }
        }
        du[j] = ru;
        dv[j] = rv;
    }
    Ok((du, dv, stats))
}

/// Right-hand side of the scaled system with `n = (m² − 1)/l`:
///
/// `∂ₜl = (1/B)∂ₓm − (l−n)∂ₜln B − (l/2)∂ₜln|K| + (m/2B)∂ₓln|K| + μ∂ₓₓl`,
/// `∂ₜm = (1/B)∂ₓn − 2m∂ₜln B − (m/2)∂ₜln|K| + (n/2B)∂ₓln|K| + μ∂ₓₓm`.
///
/// The transport part is in conservation form: `∂ₓ(m/B, n/B)` is replaced
/// by flux differences at the cell faces. Face states come from the
/// Riemann invariants reconstructed with the same slopes as the `(u, v)`
/// scheme, and the face flux is upwinded characteristic-wise (speeds `v/B`
/// for the `u`-wave, `u/B` for the `v`-wave, evaluated at the face).
pub fn rhs_lm_arrays(
    l: &[f64],
    m: &[f64],
    c: &Coefficients,
    disc: &Discretization,
) -> Result<(Vec<f64>, Vec<f64>, RhsStats)> {
    let n_cells = l.len();
    let dx = disc.dx;
    let mu = disc.viscosity;
    let mut u = Vec::with_capacity(n_cells);
    let mut v = Vec::with_capacity(n_cells);
    for (j, (&lj, &mj)) in l.iter().zip(m).enumerate() {
        if !(lj < 0.0) || !lj.is_finite() {
            return Err(degenerate(j, format!("l = {lj} is not negative")));
        }
        let gap = -2.0 / lj;
        if !(gap >= disc.gap_min) {
            return Err(degenerate(j, format!("v − u = {gap:e} below {:e}", disc.gap_min)));
        }
        u.push((1.0 - mj) / lj);
        v.push(-(1.0 + mj) / lj);
    }
    let flags_u = rough_flags(&u, dx);
    let flags_v = rough_flags(&v, dx);
    let mut dl = vec![0.0; n_cells];
    let mut dm = vec![0.0; n_cells];
    let mut stats = RhsStats { max_diffusion: mu, ..Default::default() };
    let mut faces = Vec::with_capacity(n_cells);
    for j in 0..n_cells {
        let k = wrap(j as isize + 1, n_cells);
        let su = [slope_at(&u, &flags_u, j, disc.limiter), slope_at(&u, &flags_u, k, disc.limiter)];
        let sv = [slope_at(&v, &flags_v, j, disc.limiter), slope_at(&v, &flags_v, k, disc.limiter)];
        let left = (u[j] + 0.5 * su[0], v[j] + 0.5 * sv[0]);
        let right = (u[k] - 0.5 * su[1], v[k] - 0.5 * sv[1]);
        faces.push(face_flux(left, right, c.b));
        stats.max_speed = stats.max_speed.max(u[j].abs().max(v[j].abs()) / c.b);
    }
    for j in 0..n_cells {
        let (lj, mj) = (l[j], m[j]);
        let nj = (mj * mj - 1.0) / lj;
        let fm = faces[wrap(j as isize - 1, n_cells)];
        let fp = faces[j];
        let tl = -(fp[0] - fm[0]) / dx;
        let tm = -(fp[1] - fm[1]) / dx;

        let mut rl = tl - (lj - nj) * c.dlnb - 0.5 * lj * c.dlnk + mj / (2.0 * c.b) * c.dx_lnk;
        let mut rm = tm - 2.0 * mj * c.dlnb - 0.5 * mj * c.dlnk + nj / (2.0 * c.b) * c.dx_lnk;
        if mu > 0.0 {
            let jm = wrap(j as isize - 1, n_cells);
            let jp = wrap(j as isize + 1, n_cells);
            rl += mu * (l[jp] - 2.0 * lj + l[jm]) / (dx * dx);
            rm += mu * (m[jp] - 2.0 * mj + m[jm]) / (dx * dx);
        }
        dl[j] = rl;
        dm[j] = rm;
    }
    Ok((dl, dm, stats))
}

/// Evaluates the right-hand side of `state` in its own representation.
pub fn rhs(state: &FieldState, c: &Coefficients, disc: &Discretization) -> Result<(Vec<f64>, Vec<f64>, RhsStats)> {
    match &state.fields {
        Fields::Lm { l, m } => rhs_lm_arrays(l, m, c, disc),
        Fields::Uv { u, v } => rhs_uv_arrays(u, v, c, disc),
    }
}

fn check_rep(state: &FieldState, lm: bool) -> Result<()> {
    match (&state.fields, lm) {
        (Fields::Lm { .. }, true) | (Fields::Uv { .. }, false) => Ok(()),
        _ => Err(Error::InvalidInput("state is in the wrong representation".into())),
    }
}

/// `(∂ₜl, ∂ₜm)` for an LM state at time `t`.
pub fn rhs_lm(
    state: &FieldState,
    t: f64,
    disc: &Discretization,
    metric: &MetricSolution,
    profile: &CurvatureProfile,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_rep(state, true)?;
    let c = Coefficients::evaluate(metric, profile, t)?;
    rhs(state, &c, disc).map(|(a, b, _)| (a, b))
}

/// `(∂ₜu, ∂ₜv)` for a UV state at time `t`.
pub fn rhs_uv(
    state: &FieldState,
    t: f64,
    disc: &Discretization,
    metric: &MetricSolution,
    profile: &CurvatureProfile,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_rep(state, false)?;
    let c = Coefficients::evaluate(metric, profile, t)?;
    rhs(state, &c, disc).map(|(a, b, _)| (a, b))
}

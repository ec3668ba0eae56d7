//! The metric ODE `∂ₜₜh = k* h`, `h(0) = 1`, `∂ₜh(0) = 0`, and the
//! quantities built on it: the sign-switch function, the comparison
//! function φ, and the log-decay sufficiency test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CurvatureProfile;

/// Tolerance for the Richardson estimate of the metric integrator.
pub const INTEGRATOR_TOLERANCE: f64 = 1e-8;

/// Approximation of `ln 3` used by the closed-form log-decay test.
pub const LN3_SHORTCUT: f64 = 1.09;

/// Sampled solution of the metric ODE on a uniform grid.
///
/// Alongside `h` and `∂ₜh` the integrator carries the running integrals
/// `∫₀ᵗ k*`, `∫₀ᵗ∫₀ˢ k*` and `∫₀ᵗ h ∂ₜh k*` so that the comparison bounds and
/// the explicit φ formula can be evaluated without separate quadrature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSolution {
    pub step: f64,
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    pub k: Vec<f64>,
    pub int_k: Vec<f64>,
    pub int_int_k: Vec<f64>,
    pub int_hhk: Vec<f64>,
    /// `C₁`, or `None` when the profile is not integrable on `[0, ∞)`.
    pub c1: Option<f64>,
    /// Richardson estimate of the relative integration error.
    pub error_estimate: f64,
}

type Augmented = [f64; 5];

fn rhs(profile: &CurvatureProfile, t: f64, y: &Augmented) -> Augmented {
    let k = profile.k_star(t);
    [y[1], k * y[0], k, y[2], y[0] * y[1] * k]
}

fn rk4_step(profile: &CurvatureProfile, t: f64, y: &Augmented, dt: f64) -> Augmented {
    let add = |a: &Augmented, b: &Augmented, s: f64| -> Augmented {
        let mut o = *a;
        for i in 0..5 {
            o[i] += s * b[i];
        }
        o
    };
    let k1 = rhs(profile, t, y);
    let k2 = rhs(profile, t + 0.5 * dt, &add(y, &k1, 0.5 * dt));
    let k3 = rhs(profile, t + 0.5 * dt, &add(y, &k2, 0.5 * dt));
    let k4 = rhs(profile, t + dt, &add(y, &k3, dt));
    let mut o = *y;
    for i in 0..5 {
        o[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

fn integrate_nodes(profile: &CurvatureProfile, n: usize, dt: f64, substeps: usize) -> Vec<Augmented> {
    let mut out = Vec::with_capacity(n + 1);
    let mut y = [1.0, 0.0, 0.0, 0.0, 0.0];
    out.push(y);
    let h = dt / substeps as f64;
    for i in 0..n {
        let t0 = i as f64 * dt;
        for j in 0..substeps {
            y = rk4_step(profile, t0 + j as f64 * h, &y, h);
        }
        out.push(y);
    }
    out
}

/// Integrates the metric ODE on `[0, t_max]` with classical RK4 at fixed
/// `step` (rounded so the grid ends exactly at `t_max`). A second pass at
/// half the step gives a Richardson error estimate; if it exceeds
/// [`INTEGRATOR_TOLERANCE`] the call fails rather than returning a grid of
/// unknown accuracy.
pub fn solve_h(profile: &CurvatureProfile, t_max: f64, step: f64) -> Result<MetricSolution> {
    profile.validate()?;
    if !(t_max > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidInput(format!("need t_max > 0 and step > 0 (got {t_max}, {step})")));
    }
    let n = (t_max / step).ceil().max(1.0) as usize;
    let dt = t_max / n as f64;
    let coarse = integrate_nodes(profile, n, dt, 1);
    let fine = integrate_nodes(profile, n, dt, 2);
    let mut err: f64 = 0.0;
    for (c, f) in coarse.iter().zip(&fine) {
        for i in 0..2 {
            err = err.max((c[i] - f[i]).abs() / 15.0 / (1.0 + f[i].abs()));
        }
    }
    if err > INTEGRATOR_TOLERANCE {
        return Err(Error::RefinementFailure { estimate: err, tolerance: INTEGRATOR_TOLERANCE });
    }
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let k = times.iter().map(|&t| profile.k_star(t)).collect();
    let c1 = match profile.c1() {
        Ok(c) => Some(c),
        Err(Error::Divergence(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricSolution {
        step: dt,
        k,
        h: fine.iter().map(|y| y[0]).collect(),
        dh: fine.iter().map(|y| y[1]).collect(),
        int_k: fine.iter().map(|y| y[2]).collect(),
        int_int_k: fine.iter().map(|y| y[3]).collect(),
        int_hhk: fine.iter().map(|y| y[4]).collect(),
        times,
        c1,
        error_estimate: err,
    })
}

/// Cubic Hermite interpolation on `[0, 1]`.
fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, s: f64, width: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * width * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * width * d1
}

impl MetricSolution {
    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("grid is non-empty")
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let tmax = self.t_max();
        let slack = 1e-9 * self.step;
        if !(t >= -slack && t <= tmax + slack) {
            return Err(Error::InvalidInput(format!("t = {t} outside metric grid [0, {tmax}]")));
        }
        let n = self.times.len() - 1;
        let i = ((t / self.step).floor().max(0.0) as usize).min(n - 1);
        Ok((i, ((t - self.times[i]) / self.step).clamp(0.0, 1.0)))
    }

    /// `(h, ∂ₜh)` at arbitrary `t` by Hermite interpolation using
    /// `∂ₜₜh = k* h` for the derivative data.
    pub fn h_and_dh(&self, t: f64) -> Result<(f64, f64)> {
        let (i, s) = self.locate(t)?;
        let w = self.step;
        let h = hermite(self.h[i], self.dh[i], self.h[i + 1], self.dh[i + 1], s, w);
        let dh = hermite(
            self.dh[i],
            self.k[i] * self.h[i],
            self.dh[i + 1],
            self.k[i + 1] * self.h[i + 1],
            s,
            w,
        );
        Ok((h, dh))
    }

    /// `∫₀ᵗ h ∂ₜh k* ds` at arbitrary `t`.
    pub fn int_hhk_at(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        let d = |j: usize| self.h[j] * self.dh[j] * self.k[j];
        Ok(hermite(self.int_hhk[i], d(i), self.int_hhk[i + 1], d(i + 1), s, self.step))
    }

    /// Worst violation at any node of `∫k* ≤ ∂ₜh ≤ C₁` and
    /// `1 + ∬k* ≤ h ≤ 1 + C₁t` (≤ 0 when every bound holds exactly; the caller
    /// compares to its tolerance).
    pub fn sandwich_violation(&self) -> Option<f64> {
        let c1 = self.c1?;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.times.len() {
            let t = self.times[i];
            worst = worst
                .max(self.int_k[i] - self.dh[i])
                .max(self.dh[i] - c1)
                .max(1.0 + self.int_int_k[i] - self.h[i])
                .max(self.h[i] - (1.0 + c1 * t));
        }
        Some(worst)
    }
}

/// `∂ₜ ln h(t)`.
pub fn dln_h(metric: &MetricSolution, t: f64) -> Result<f64> {
    let (h, dh) = metric.h_and_dh(t)?;
    Ok(dh / h)
}

/// `S(t) = ∂ₜ ln h + ¼ ∂ₜ ln k*`.
pub fn sign_switch(metric: &MetricSolution, profile: &CurvatureProfile, t: f64) -> Result<f64> {
    Ok(dln_h(metric, t)? + 0.25 * profile.dlnk_dt(t))
}

/// Smallest grid time after which `S(t) > 0` on the rest of the grid.
pub fn find_t_star(metric: &MetricSolution, profile: &CurvatureProfile) -> Result<f64> {
    let n = metric.times.len();
    let s_at = |i: usize| metric.dh[i] / metric.h[i] + 0.25 * profile.dlnk_dt(metric.times[i]);
    if !(s_at(n - 1) > 0.0) {
        return Err(Error::NoSignSwitch { t_start: 0.0, t_end: metric.t_max() });
    }
    let mut first = 0;
    for i in (0..n).rev() {
        if !(s_at(i) > 0.0) {
            first = i + 1;
            break;
        }
    }
    Ok(metric.times[first])
}

/// "t sufficiently large": the computed onset times a safety factor of 2.
pub fn safe_start_time(t_star: f64) -> f64 {
    2.0 * t_star
}

/// Comparison function φ sampled on the metric grid from the anchor `T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiSolution {
    pub anchor: f64,
    pub psi0: f64,
    pub b: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhiSolution {
    /// Linear interpolation between samples.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let last = *self.times.last()?;
        if t < self.anchor || t > last {
            return None;
        }
        let i = self.times.partition_point(|&x| x <= t).saturating_sub(1).min(self.times.len() - 2);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        Some(self.values[i] + w * (self.values[i + 1] - self.values[i]))
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }
}

fn phi_setup(metric: &MetricSolution, profile: &CurvatureProfile, anchor: f64, psi0: f64) -> Result<f64> {
    if !(anchor >= 0.0) || !(psi0 > 0.0) {
        return Err(Error::Domain(format!("need T ≥ 0 and ψ₀ > 0 (got {anchor}, {psi0})")));
    }
    let k = profile.k_star(anchor);
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k*(T) = {k}: b = ψ₀/(h√k*) undefined")));
    }
    let (h, _) = metric.h_and_dh(anchor)?;
    Ok(psi0 / (h * k.sqrt()))
}

/// Sample times: the anchor followed by every grid node after it up to `t_end`.
fn phi_times(metric: &MetricSolution, anchor: f64, t_end: f64) -> Vec<f64> {
    let mut times = vec![anchor];
    times.extend(metric.times.iter().copied().filter(|&t| t > anchor + 1e-12 && t <= t_end + 1e-12));
    times
}

/// `φ(t) = b h √k* / (1 − 2b² ∫_T^t h ∂ₜh k* ds)^{1/2}`, `b = ψ₀/(h(T)√k*(T))`.
pub fn phi_explicit(
    metric: &MetricSolution,
    profile: &CurvatureProfile,
    anchor: f64,
    psi0: f64,
) -> Result<PhiSolution> {
    let b = phi_setup(metric, profile, anchor, psi0)?;
    let times = phi_times(metric, anchor, metric.t_max());
    let j0 = metric.int_hhk_at(anchor)?;
    let mut values = Vec::with_capacity(times.len());
    for (idx, &t) in times.iter().enumerate() {
        if idx == 0 {
            values.push(psi0);
            continue;
        }
        let (h, _) = metric.h_and_dh(t)?;
        let denom = 1.0 - 2.0 * b * b * (metric.int_hhk_at(t)? - j0);
        if !(denom > 0.0) {
            return Err(Error::BlowUp { t, denominator: denom });
        }
        values.push(b * h * profile.k_star(t).sqrt() / denom.sqrt());
    }
    Ok(PhiSolution { anchor, psi0, b, times, values })
}

/// Direct RK4 integration of `∂ₜφ = φ(1 + φ²)∂ₜ ln h + (φ/2)∂ₜ ln k*`,
/// carried jointly with `(h, ∂ₜh)` from their values at the anchor.
pub fn phi_ode(
    metric: &MetricSolution,
    profile: &CurvatureProfile,
    anchor: f64,
    psi0: f64,
    t_max: f64,
) -> Result<PhiSolution> {
    let b = phi_setup(metric, profile, anchor, psi0)?;
    let t_end = t_max.min(metric.t_max());
    let times = phi_times(metric, anchor, t_end);
    let (h0, dh0) = metric.h_and_dh(anchor)?;
    let f = |t: f64, y: [f64; 3]| -> [f64; 3] {
        let k = profile.k_star(t);
        let a = y[1] / y[0];
        let phi = y[2];
        [y[1], k * y[0], phi * (1.0 + phi * phi) * a + 0.5 * phi * profile.dlnk_dt(t)]
    };
    let mut y = [h0, dh0, psi0];
    let mut values = vec![psi0];
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        // Two RK4 sub-steps per grid interval.
        let sub = 2;
        let dt = (t1 - t0) / sub as f64;
        for s in 0..sub {
            let t = t0 + s as f64 * dt;
            let k1 = f(t, y);
            let y2 = [0, 1, 2].map(|i| y[i] + 0.5 * dt * k1[i]);
            let k2 = f(t + 0.5 * dt, y2);
            let y3 = [0, 1, 2].map(|i| y[i] + 0.5 * dt * k2[i]);
            let k3 = f(t + 0.5 * dt, y3);
            let y4 = [0, 1, 2].map(|i| y[i] + dt * k3[i]);
            let k4 = f(t + dt, y4);
            y = [0, 1, 2].map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        if !y[2].is_finite() || y[2].abs() > 1e12 {
            return Err(Error::BlowUp { t: t1, denominator: 0.0 });
        }
        values.push(y[2]);
    }
    Ok(PhiSolution { anchor, psi0, b, times, values })
}

/// Outcome of the closed-form sufficiency test for the log-decay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub p: f64,
    /// `exp{1/((p−1)(1.09)^{p−1})} < 2`.
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// The same test with the exact `ln 3`.
    pub rhs_exact_ln3: f64,
    pub satisfied_exact_ln3: bool,
    /// Quadrature value of `∫₀^∞ s k*`.
    pub first_moment: f64,
    /// `(ln 3)^{1−p}/(p−1)`.
    pub first_moment_bound: f64,
    pub first_moment_bound_holds: bool,
    pub mass: f64,
    pub c1: f64,
    /// `∫₀^∞ k* > C₁/2`, evaluated by quadrature.
    pub primitive_satisfied: bool,
}

pub fn decay_sufficiency_log(p: f64) -> Result<DecayReport> {
    let profile = CurvatureProfile::log_decay(p);
    profile.validate()?;
    let ints = profile.integrals()?;
    let rhs = (1.0 / ((p - 1.0) * LN3_SHORTCUT.powf(p - 1.0))).exp();
    let ln3 = 3f64.ln();
    let rhs_exact = (1.0 / ((p - 1.0) * ln3.powf(p - 1.0))).exp();
    let bound = ln3.powf(1.0 - p) / (p - 1.0);
    let c1 = ints.c1();
    Ok(DecayReport {
        p,
        satisfied: rhs < 2.0,
        lhs: 2.0,
        rhs,
        rhs_exact_ln3: rhs_exact,
        satisfied_exact_ln3: rhs_exact < 2.0,
        first_moment: ints.first_moment,
        first_moment_bound: bound,
        first_moment_bound_holds: ints.first_moment <= bound,
        mass: ints.mass,
        c1,
        primitive_satisfied: ints.mass > 0.5 * c1,
    })
}

/// First `p` in `ps` passing the 1.09 test, scanning in order.
pub fn log_decay_threshold(ps: &[f64]) -> Result<Option<f64>> {
    for &p in ps {
        if decay_sufficiency_log(p)?.satisfied {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_curvature_gives_flat_metric() {
        let p = CurvatureProfile::Constant { value: 0.0 };
        let m = solve_h(&p, 5.0, 0.1).unwrap();
        assert!(m.h.iter().all(|h| *h == 1.0));
        assert!(m.dh.iter().all(|d| *d == 0.0));
        assert_eq!(m.c1, Some(0.0));
        for t in [0.0, 1.3, 5.0] {
            assert_eq!(dln_h(&m, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_curvature_gives_cosh() {
        let p = CurvatureProfile::Constant { value: 1.0 };
        let m = solve_h(&p, 5.0, 0.01).unwrap();
        assert!(m.c1.is_none());
        for (t, h) in m.times.iter().zip(&m.h) {
            assert!((h - t.cosh()).abs() <= 1e-8 * t.cosh().max(1.0), "t={t}");
        }
        // Interpolated values off the grid.
        let (h, dh) = m.h_and_dh(2.345).unwrap();
        assert!((h - 2.345f64.cosh()).abs() < 1e-8);
        assert!((dh - 2.345f64.sinh()).abs() < 1e-8);
    }

    #[test]
    fn coarse_step_is_refused() {
        let p = CurvatureProfile::Constant { value: 1.0 };
        assert!(matches!(solve_h(&p, 10.0, 1.0), Err(Error::RefinementFailure { .. })));
    }

    #[test]
    fn hong_sandwich_bounds() {
        let p = CurvatureProfile::hong(1.0, 2.0);
        let m = solve_h(&p, 50.0, 0.01).unwrap();
        let c1 = m.c1.unwrap();
        assert!((c1 - 0.5 * 0.5f64.exp()).abs() < 1e-10);
        assert!((c1 - 0.8244).abs() < 1e-4);
        assert!(m.sandwich_violation().unwrap() <= 1e-8);
        assert!(m.h.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn phi_at_anchor_and_zero_curvature() {
        let p = CurvatureProfile::hong(1.0, 2.0);
        let m = solve_h(&p, 40.0, 0.01).unwrap();
        let phi = phi_explicit(&m, &p, 10.0, 0.1).unwrap();
        assert_eq!(phi.values[0], 0.1);
        assert_eq!(phi.value_at(10.0), Some(0.1));

        let flat = CurvatureProfile::Constant { value: 0.0 };
        let mf = solve_h(&flat, 5.0, 0.1).unwrap();
        assert!(matches!(phi_explicit(&mf, &flat, 1.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(phi_ode(&mf, &flat, 1.0, 0.1, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_blows_up_for_growing_curvature() {
        // With k* ≡ 1 the integral ∫ h h' k* grows like e^{2t}/4.
        let p = CurvatureProfile::Constant { value: 1.0 };
        let m = solve_h(&p, 8.0, 0.005).unwrap();
        assert!(matches!(phi_explicit(&m, &p, 0.5, 0.9), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn decay_report_values() {
        let r3 = decay_sufficiency_log(3.0).unwrap();
        assert!((r3.rhs - (1.0 / (2.0 * 1.09f64.powi(2))).exp()).abs() < 1e-15);
        assert!(r3.satisfied && r3.first_moment_bound_holds);
        let r2 = decay_sufficiency_log(2.0).unwrap();
        assert!((r2.rhs - (1.0f64 / 1.09).exp()).abs() < 1e-15);
        assert!((r2.rhs - 2.503).abs() < 1e-3);
        assert!(!r2.satisfied);
        let big = decay_sufficiency_log(40.0).unwrap();
        assert!(big.satisfied && (big.rhs - 1.0).abs() < 1e-3);
        assert!(decay_sufficiency_log(1.0).is_err());
    }

    #[test]
    fn threshold_scan() {
        let ps: Vec<f64> = (2..=8).map(f64::from).collect();
        assert_eq!(log_decay_threshold(&ps).unwrap(), Some(3.0));
    }
}

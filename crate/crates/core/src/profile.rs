//! Curvature magnitudes `k*(t) = |K|(t)` for the x-independent metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum CurvatureProfile {
    /// `k*(t) = C / (1 + |t|)^{2 + δ/2}` with `0 < δ < 4`.
    HongPower { c: f64, delta: f64 },
    /// `k*(t) = 1 / ((3 + t)² (ln(3 + t))^p)` with `p > 1`.
    LogDecay { p: f64 },
    /// Constant curvature magnitude; only meaningful on finite windows.
    Constant { value: f64 },
    /// Piecewise-linear samples, continued past the last node by the power
    /// law through the final two samples.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// Improper integrals `∫₀^∞ k*` and `∫₀^∞ s k*` together with the
/// certified bound on what the finite quadrature missed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileIntegrals {
    pub mass: f64,
    pub first_moment: f64,
    pub quadrature_error: f64,
    /// Upper-bound slack of the closed-form tails (zero when exact).
    pub tail_slack: f64,
}

impl ProfileIntegrals {
    /// `C₁ = ∫k* · exp(∫ s k*)`.
    pub fn c1(&self) -> f64 {
        self.mass * self.first_moment.exp()
    }
}

impl CurvatureProfile {
    pub fn hong(c: f64, delta: f64) -> Self {
        Self::HongPower { c, delta }
    }

    pub fn log_decay(p: f64) -> Self {
        Self::LogDecay { p }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::HongPower { c, delta } => {
                if !(*c > 0.0) || !(*delta > 0.0 && *delta < 4.0) {
                    return Err(Error::InvalidInput(format!(
                        "HongPower requires C > 0 and 0 < δ < 4 (got C = {c}, δ = {delta})"
                    )));
                }
            }
            Self::LogDecay { p } => {
                if !(*p > 1.0) {
                    return Err(Error::InvalidInput(format!("LogDecay requires p > 1 (got {p})")));
                }
            }
            Self::Constant { value } => {
                if !(*value >= 0.0) || !value.is_finite() {
                    return Err(Error::InvalidInput(format!("Constant profile value {value} must be ≥ 0")));
                }
            }
            Self::Tabulated { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::InvalidInput("Tabulated profile needs ≥ 2 (t, k) pairs".into()));
                }
                if times[0] != 0.0 {
                    return Err(Error::InvalidInput("Tabulated profile must start at t = 0".into()));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInput("Tabulated times must be strictly increasing".into()));
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidInput("Tabulated values must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn k_star(&self, t: f64) -> f64 {
        match self {
            Self::HongPower { c, delta } => c / (1.0 + t.abs()).powf(2.0 + 0.5 * delta),
            Self::LogDecay { p } => {
                let s = 3.0 + t;
                1.0 / (s * s * s.ln().powf(*p))
            }
            Self::Constant { value } => *value,
            Self::Tabulated { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[n - 1] {
                    let alpha = tail_exponent(times, values);
                    return values[n - 1] * (t / times[n - 1]).powf(-alpha);
                }
                let i = segment(times, t);
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    /// `d/dt ln k*(t)`.
    pub fn dlnk_dt(&self, t: f64) -> f64 {
        match self {
            Self::HongPower { delta, .. } => -(2.0 + 0.5 * delta) / (1.0 + t),
            Self::LogDecay { p } => {
                let s = 3.0 + t;
                -2.0 / s - p / (s * s.ln())
            }
            Self::Constant { .. } => 0.0,
            Self::Tabulated { times, values } => {
                let n = times.len();
                if t < times[0] {
                    return 0.0;
                }
                if t >= times[n - 1] {
                    return -tail_exponent(times, values) / t;
                }
                let i = segment(times, t);
                let slope = (values[i + 1] - values[i]) / (times[i + 1] - times[i]);
                slope / self.k_star(t)
            }
        }
    }

    /// Closed-form upper bounds on `∫_S^∞ k*` and `∫_S^∞ s k*`, plus the
    /// slack by which they may exceed the true tails.
    fn tails(&self, s: f64) -> Result<(f64, f64, f64)> {
        match self {
            Self::HongPower { c, delta } => {
                let a = 2.0 + 0.5 * delta;
                let w = 1.0 + s;
                let mass = c * w.powf(1.0 - a) / (a - 1.0);
                let moment = c * (w.powf(2.0 - a) / (a - 2.0) - w.powf(1.0 - a) / (a - 1.0));
                Ok((mass, moment, 0.0))
            }
            Self::LogDecay { p } => {
                let w = 3.0 + s;
                let lw = w.ln();
                // k* ≤ (3+s)^{-2} ln(3+S)^{-p} on [S, ∞).
                let mass = lw.powf(-p) / w;
                // ∫ s k* ≤ ∫ (3+s) k* = ln(3+S)^{1-p}/(p−1).
                let moment = lw.powf(1.0 - p) / (p - 1.0);
                Ok((mass, moment, mass + 3.0 * mass))
            }
            Self::Constant { value } => {
                if *value == 0.0 {
                    Ok((0.0, 0.0, 0.0))
                } else {
                    Err(Error::Divergence(format!("constant curvature {value} is not integrable on [0, ∞)")))
                }
            }
            Self::Tabulated { times, values } => {
                let n = times.len();
                let alpha = tail_exponent(times, values);
                if !(alpha > 2.0) {
                    return Err(Error::Divergence(format!(
                        "tabulated tail decays like t^-{alpha:.3}; s·k* is not integrable"
                    )));
                }
                let (tn, kn) = (times[n - 1], values[n - 1]);
                let s = s.max(tn);
                let ratio = (s / tn).powf(-alpha);
                let mass = kn * tn * ratio * (s / tn) / (alpha - 1.0);
                let moment = kn * tn * tn * ratio * (s / tn).powi(2) / (alpha - 2.0);
                Ok((mass, moment, 0.0))
            }
        }
    }

    fn cutoff(&self) -> f64 {
        match self {
            Self::HongPower { .. } => 1e4,
            // ln(3 + S) = 40 puts the mass tail near 1e-22.
            Self::LogDecay { .. } => 40f64.exp() - 3.0,
            Self::Constant { .. } => 0.0,
            Self::Tabulated { times, .. } => *times.last().expect("validated"),
        }
    }

    /// `∫₀^∞ k*` and `∫₀^∞ s k*`: adaptive quadrature on `[0, S]` in the
    /// variable `w = ln(1 + s)`, plus closed-form tails past `S`.
    pub fn integrals(&self) -> Result<ProfileIntegrals> {
        self.validate()?;
        let s_cut = self.cutoff();
        let (tail_mass, tail_moment, tail_slack) = self.tails(s_cut)?;
        let w_cut = s_cut.ln_1p();
        let mut mass = 0.0;
        let mut moment = 0.0;
        let mut err = 0.0;
        if w_cut > 0.0 {
            let pieces = w_cut.ceil().max(1.0) as usize;
            let breaks = self.breakpoints(w_cut, pieces);
            for w in breaks.windows(2) {
                let em = quadrature::integrate(
                    |w| {
                        let s = w.exp_m1();
                        self.k_star(s) * (1.0 + s)
                    },
                    w[0],
                    w[1],
                    1e-15,
                    1e-14,
                );
                let es = quadrature::integrate(
                    |w| {
                        let s = w.exp_m1();
                        s * self.k_star(s) * (1.0 + s)
                    },
                    w[0],
                    w[1],
                    1e-15,
                    1e-14,
                );
                mass += em.value;
                moment += es.value;
                err += em.error + es.error;
            }
        }
        Ok(ProfileIntegrals {
            mass: mass + tail_mass,
            first_moment: moment + tail_moment,
            quadrature_error: err,
            tail_slack,
        })
    }

    fn breakpoints(&self, w_cut: f64, pieces: usize) -> Vec<f64> {
        let mut b: Vec<f64> = (0..=pieces).map(|i| w_cut * i as f64 / pieces as f64).collect();
        if let Self::Tabulated { times, .. } = self {
            // Kinks of the interpolant.
            b.extend(times.iter().map(|t| t.ln_1p()).filter(|w| *w > 0.0 && *w < w_cut));
            b.sort_by(f64::total_cmp);
            b.dedup();
        }
        b
    }

    /// `C₁ = ∫₀^∞ k* ds · exp(∫₀^∞ s k* ds)`.
    pub fn c1(&self) -> Result<f64> {
        Ok(self.integrals()?.c1())
    }
}

fn segment(times: &[f64], t: f64) -> usize {
    match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => i.min(times.len() - 2),
        Err(i) => i - 1,
    }
}

fn tail_exponent(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len();
    let (t0, t1) = (times[n - 2], times[n - 1]);
    let (k0, k1) = (values[n - 2], values[n - 1]);
    if t0 <= 0.0 {
        return 0.0;
    }
    -(k1 / k0).ln() / (t1 / t0).ln()
}

/// Free-function form of [`CurvatureProfile::k_star`].
pub fn k_star(profile: &CurvatureProfile, t: f64) -> f64 {
    profile.k_star(t)
}

/// Free-function form of [`CurvatureProfile::dlnk_dt`].
pub fn dlnk_dt(profile: &CurvatureProfile, t: f64) -> f64 {
    profile.dlnk_dt(t)
}

/// Free-function form of [`CurvatureProfile::c1`].
pub fn compute_c1(profile: &CurvatureProfile) -> Result<f64> {
    profile.c1()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hong_power_values() {
        let p = CurvatureProfile::hong(1.0, 2.0);
        assert_eq!(p.k_star(0.0), 1.0);
        assert!((p.k_star(1.0) - 0.125).abs() < 1e-16);
        assert!((p.dlnk_dt(1.0) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn log_decay_values() {
        let p = CurvatureProfile::log_decay(3.0);
        let expect = 1.0 / (9.0 * 3f64.ln().powi(3));
        assert!((p.k_star(0.0) - expect).abs() < 1e-16);
        assert!((p.k_star(0.0) - 0.08379).abs() < 1e-5);
        // Finite-difference check of the log-derivative.
        for &t in &[0.5, 7.0, 120.0] {
            let e = 1e-5;
            let fd = (p.k_star(t + e).ln() - p.k_star(t - e).ln()) / (2.0 * e);
            assert!((fd - p.dlnk_dt(t)).abs() < 1e-8 * p.dlnk_dt(t).abs().max(1e-3));
        }
    }

    #[test]
    fn hong_power_integrals_match_closed_form() {
        for &delta in &[1.0, 2.0, 3.0, 3.9] {
            let a: f64 = 2.0 + delta / 2.0;
            let ints = CurvatureProfile::hong(1.0, delta).integrals().unwrap();
            let mass = 1.0 / (a - 1.0);
            let moment = 1.0 / ((a - 1.0) * (a - 2.0));
            assert!((ints.mass - mass).abs() < 1e-11, "δ={delta}: {} vs {mass}", ints.mass);
            assert!((ints.first_moment - moment).abs() < 1e-10, "δ={delta}");
            assert!(ints.quadrature_error < 1e-10);
        }
        let c1 = compute_c1(&CurvatureProfile::hong(1.0, 2.0)).unwrap();
        assert!((c1 - 0.5 * 0.5f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn constant_profiles() {
        assert_eq!(compute_c1(&CurvatureProfile::Constant { value: 0.0 }).unwrap(), 0.0);
        assert!(matches!(
            compute_c1(&CurvatureProfile::Constant { value: 1.0 }),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn log_decay_moment_respects_bound() {
        for &p in &[2.0, 3.0, 5.0] {
            let ints = CurvatureProfile::log_decay(p).integrals().unwrap();
            let bound = 3f64.ln().powf(1.0 - p) / (p - 1.0);
            assert!(ints.first_moment <= bound, "p={p}");
            assert!(ints.mass > 0.0 && ints.tail_slack < 1e-18);
        }
    }

    #[test]
    fn tabulated_power_tail() {
        // Samples of (1+t)^-3 on a coarse grid: the power-law tail keeps the
        // integrals finite and close to the analytic 1/2, 1/2.
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| (1.0 + t).powi(-3)).collect();
        let p = CurvatureProfile::Tabulated { times, values };
        let ints = p.integrals().unwrap();
        assert!((ints.mass - 0.5).abs() < 5e-3);
        assert!((ints.first_moment - 0.5).abs() < 2e-2);

        let flat = CurvatureProfile::Tabulated { times: vec![0.0, 1.0, 2.0], values: vec![1.0, 0.5, 0.4] };
        assert!(matches!(flat.integrals(), Err(Error::Divergence(_))));
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(CurvatureProfile::hong(1.0, 4.0).validate().is_err());
        assert!(CurvatureProfile::hong(-1.0, 2.0).validate().is_err());
        assert!(CurvatureProfile::log_decay(1.0).validate().is_err());
        let bad = CurvatureProfile::Tabulated { times: vec![0.0, 0.0], values: vec![1.0, 1.0] };
        assert!(bad.validate().is_err());
    }
}

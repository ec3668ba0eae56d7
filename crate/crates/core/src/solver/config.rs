use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CurvatureProfile;

/// Which unknowns the solver evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// `(l, m)` with `n = (m² − 1)/l` eliminated.
    Lm,
    /// Riemann invariants `(u, v)`.
    Uv,
}

/// Viscous right-hand side used in the `(u, v)` equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscousForm {
    /// Image of `μ∂ₓₓ(l, m)` under the Riemann-invariant map:
    /// `μ[uₓₓ + 2uₓ(uₓ − vₓ)/(v − u)]` and the `v` analogue.
    ChainRule,
    /// Alternative bracket form, kept for comparison; it is not the image
    /// of `μ∂ₓₓ(l, m)` and does not converge to it:
    /// `μ/(v−u)·{(uₓ² − vₓ²) − 2u(uₓ − vₓ)²/(v − u) − u uₓₓ}` and
    /// `μ/(v−u)·{(uₓ² − vₓ²) − 2v(uₓ − vₓ)²/(v − u) + v vₓₓ}`.
    Bracket,
}

/// Slope selection for the upwind transport reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limiter {
    /// Minmod at flagged cells (jumps, sharp extrema), centred slopes elsewhere.
    Adaptive,
    /// Minmod everywhere.
    Minmod,
    /// Centred slopes everywhere (Fromm).
    Unlimited,
}

/// Initial data on the periodic grid. Random variants draw values inside
/// the admissible box `[−ψ₀, −e^{−T₁}ψ₀] × [e^{−T₁}ψ₀, ψ₀]` shrunk by
/// `margin` (a fraction of each side length) on every side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Constant { u: f64, v: f64 },
    /// Two constant states separated by two random jump locations.
    TwoStep { margin: f64 },
    /// `pieces` equal-width constant pieces with random values.
    RandomSteps { pieces: usize, margin: f64 },
    /// Independent random value in every cell.
    RandomCells { margin: f64 },
    /// Box centre plus `amplitude × half-width` times `sin x` (u) and
    /// `cos 2x` (v).
    Smooth { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Number of grid points on the periodic interval `[0, 2π)`.
    pub cells: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub viscosity: f64,
    #[serde(default = "defaults::cfl")]
    pub cfl: f64,
    /// Cap on the time step so the source terms stay time-accurate.
    #[serde(default = "defaults::dt_max")]
    pub dt_max: f64,
    pub representation: Representation,
    #[serde(default = "defaults::viscous_form")]
    pub viscous_form: ViscousForm,
    #[serde(default = "defaults::limiter")]
    pub limiter: Limiter,
    pub profile: CurvatureProfile,
    pub psi0: f64,
    pub data: DataSpec,
    #[serde(default)]
    pub seed: u64,
    /// Spacing of stored snapshots; the final time is always stored.
    pub output_interval: f64,
    #[serde(default = "defaults::metric_step")]
    pub metric_step: f64,
    #[serde(default = "defaults::gap_min")]
    pub gap_min: f64,
}

pub(crate) mod defaults {
    use super::*;
    pub fn cfl() -> f64 {
        0.4
    }
    pub fn dt_max() -> f64 {
        0.05
    }
    pub fn viscous_form() -> ViscousForm {
        ViscousForm::ChainRule
    }
    pub fn limiter() -> Limiter {
        Limiter::Adaptive
    }
    pub fn metric_step() -> f64 {
        0.01
    }
    pub fn gap_min() -> f64 {
        1e-8
    }
}

impl SolverConfig {
    /// Defaults used across the examples: `J` points, `μ`, `[t_start, t_start + duration]`.
    pub fn new(profile: CurvatureProfile, psi0: f64, data: DataSpec, cells: usize, viscosity: f64, t_start: f64, duration: f64) -> Self {
        Self {
            cells,
            t_start,
            t_end: t_start + duration,
            viscosity,
            cfl: defaults::cfl(),
            dt_max: defaults::dt_max(),
            representation: Representation::Uv,
            viscous_form: defaults::viscous_form(),
            limiter: defaults::limiter(),
            profile,
            psi0,
            data,
            seed: 0,
            output_interval: duration / 10.0,
            metric_step: defaults::metric_step(),
            gap_min: defaults::gap_min(),
        }
    }

    pub fn dx(&self) -> f64 {
        std::f64::consts::TAU / self.cells as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.cells < 8 {
            return bad(format!("need at least 8 cells (got {})", self.cells));
        }
        if !(self.t_start > 0.0) || !(self.t_end > self.t_start) {
            return bad(format!("need 0 < t_start < t_end (got {}, {})", self.t_start, self.t_end));
        }
        if !(self.viscosity >= 0.0) || !self.viscosity.is_finite() {
            return bad(format!("viscosity must be ≥ 0 (got {})", self.viscosity));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("CFL number must lie in (0, 1) (got {})", self.cfl));
        }
        if !(self.dt_max > 0.0) || !(self.output_interval > 0.0) || !(self.metric_step > 0.0) {
            return bad("dt_max, output_interval and metric_step must be positive".into());
        }
        if !(self.psi0 > 0.0) {
            return bad(format!("ψ₀ must be positive (got {})", self.psi0));
        }
        if !(self.gap_min > 0.0) {
            return bad("gap_min must be positive".into());
        }
        Ok(())
    }
}

//! Experiment configuration (TOML). Unknown keys anywhere are rejected.

use std::path::PathBuf;

use gauss_codazzi::solver::{DataSpec, Limiter, Representation, SolverConfig, ViscousForm};
use gauss_codazzi::surface::{IntegrationOptions, PathOrder, DEFAULT_REPROJECTION};
use gauss_codazzi::CurvatureProfile;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for random initial data; `--seed` takes precedence.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` and then `OUTPUT_DIR` take precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub profile: CurvatureProfile,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub reconstruct: Option<ReconstructSection>,
    #[serde(default)]
    pub decay: DecaySection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    #[serde(default = "defaults::metric_step")]
    pub step: f64,
    /// ψ₀ for the φ admissibility check.
    #[serde(default = "defaults::psi0")]
    pub psi0: f64,
}

impl Default for MetricSection {
    fn default() -> Self {
        Self { horizon: defaults::horizon(), step: defaults::metric_step(), psi0: defaults::psi0() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    /// Exponents scanned for the log-decay sufficiency test.
    #[serde(default = "defaults::p_scan")]
    pub p_scan: Vec<f64>,
}

impl Default for DecaySection {
    fn default() -> Self {
        Self { p_scan: defaults::p_scan() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub cells: usize,
    pub viscosity: f64,
    pub psi0: f64,
    pub duration: f64,
    pub data: DataSpec,
    /// Defaults to `2T*` computed from the profile.
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default = "defaults::representation")]
    pub representation: Representation,
    /// Defaults to `duration / 10`.
    #[serde(default)]
    pub output_interval: Option<f64>,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default)]
    pub limiter: Option<Limiter>,
    #[serde(default)]
    pub viscous_form: Option<ViscousForm>,
    #[serde(default)]
    pub metric_step: Option<f64>,
    #[serde(default)]
    pub gap_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Strictly decreasing viscosities.
    pub mu: Vec<f64>,
    /// Seeds to sweep; defaults to the run seed alone.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSource {
    /// A directory written by `solve`.
    Bundle { path: PathBuf },
    Plane { nx: usize, nt: usize, lx: f64, lt: f64 },
    Cylinder { radius: f64, nx: usize, nt: usize, lx: f64, lt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSection {
    pub input: SurfaceSource,
    #[serde(default = "defaults::order")]
    pub order: PathOrder,
    /// Re-projection interval in steps; 0 disables it.
    #[serde(default = "defaults::reprojection")]
    pub reprojection: usize,
}

impl ReconstructSection {
    pub fn options(&self) -> IntegrationOptions {
        IntegrationOptions { order: self.order, reprojection: (self.reprojection > 0).then_some(self.reprojection) }
    }
}

/// Pass/fail thresholds used in the summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "defaults::region_margin")]
    pub region_margin: f64,
    /// Relative slack when checking that weak residuals decrease.
    #[serde(default = "defaults::residual_noise")]
    pub residual_noise: f64,
    #[serde(default = "defaults::dissipation_slope_min")]
    pub dissipation_slope_min: f64,
    #[serde(default = "defaults::phi_agreement")]
    pub phi_agreement: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            region_margin: defaults::region_margin(),
            residual_noise: defaults::residual_noise(),
            dissipation_slope_min: defaults::dissipation_slope_min(),
            phi_agreement: defaults::phi_agreement(),
        }
    }
}

mod defaults {
    use super::*;

    pub fn horizon() -> f64 {
        200.0
    }
    pub fn metric_step() -> f64 {
        0.01
    }
    pub fn psi0() -> f64 {
        0.1
    }
    pub fn p_scan() -> Vec<f64> {
        (2..=8).map(f64::from).collect()
    }
    pub fn representation() -> Representation {
        Representation::Uv
    }
    pub fn order() -> PathOrder {
        PathOrder::TimeFirst
    }
    pub fn reprojection() -> usize {
        DEFAULT_REPROJECTION
    }
    pub fn region_margin() -> f64 {
        1e-8
    }
    pub fn residual_noise() -> f64 {
        0.05
    }
    pub fn dissipation_slope_min() -> f64 {
        -0.1
    }
    pub fn phi_agreement() -> f64 {
        1e-6
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        config.profile.validate().map_err(|e| CliError::config(e.to_string()))?;
        if let Some(sweep) = &config.sweep {
            if sweep.mu.is_empty() || sweep.mu.windows(2).any(|w| !(w[1] < w[0])) || sweep.mu.iter().any(|m| !(*m > 0.0)) {
                return Err(CliError::config("sweep.mu must be positive and strictly decreasing"));
            }
        }
        Ok(config)
    }

    pub fn solver_section(&self) -> Result<&SolverSection, CliError> {
        self.solver.as_ref().ok_or_else(|| CliError::config("missing [solver] section"))
    }
}

impl SolverSection {
    /// Resolves defaults; `t_start` falls back to `safe_start`.
    pub fn build(&self, profile: &CurvatureProfile, seed: u64, safe_start: impl FnOnce() -> Result<f64, CliError>) -> Result<SolverConfig, CliError> {
        let t_start = match self.t_start {
            Some(t) => t,
            None => safe_start()?,
        };
        let mut c = SolverConfig::new(profile.clone(), self.psi0, self.data.clone(), self.cells, self.viscosity, t_start, self.duration);
        c.representation = self.representation;
        c.seed = seed;
        if let Some(v) = self.output_interval {
            c.output_interval = v;
        }
        if let Some(v) = self.cfl {
            c.cfl = v;
        }
        if let Some(v) = self.dt_max {
            c.dt_max = v;
        }
        if let Some(v) = self.limiter {
            c.limiter = v;
        }
        if let Some(v) = self.viscous_form {
            c.viscous_form = v;
        }
        if let Some(v) = self.metric_step {
            c.metric_step = v;
        }
        if let Some(v) = self.gap_min {
            c.gap_min = v;
        }
        c.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[profile]
kind = "HongPower"
c = 1.0
delta = 2.0
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.metric, MetricSection::default());
        assert_eq!(c.decay.p_scan, vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert!(c.solver.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}\nextra = 1\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}\n[metric]\nhorizn = 3.0\n")).is_err());
        let bad_profile = "[profile]\nkind = \"HongPower\"\nc = 1.0\ndelta = 2.0\ncolour = 1\n";
        assert!(ExperimentConfig::parse(bad_profile).is_err());
    }

    #[test]
    fn inadmissible_profile_is_a_config_error() {
        let text = "[profile]\nkind = \"HongPower\"\nc = 1.0\ndelta = 5.0\n";
        assert!(ExperimentConfig::parse(text).is_err());
    }

    #[test]
    fn solver_overrides_apply() {
        let text = format!(
            "{MINIMAL}\n[solver]\ncells = 64\nviscosity = 1e-3\npsi0 = 0.1\nduration = 2.0\nt_start = 3.0\n\
             representation = \"lm\"\ndt_max = 0.01\ndata = {{ kind = \"random_cells\", margin = 0.05 }}\n"
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        let s = c.solver_section().unwrap().build(&c.profile, 9, || unreachable!()).unwrap();
        assert_eq!((s.cells, s.t_start, s.t_end, s.seed, s.dt_max), (64, 3.0, 5.0, 9, 0.01));
        assert_eq!(s.representation, Representation::Lm);
    }
}

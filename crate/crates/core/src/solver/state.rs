use serde::{Deserialize, Serialize};

use super::config::{Representation, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry;

/// Grid values of the second-form unknowns at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fields {
    Lm { l: Vec<f64>, m: Vec<f64> },
    Uv { u: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub fields: Fields,
}

impl FieldState {
    pub fn uv(t: f64, u: Vec<f64>, v: Vec<f64>) -> Self {
        Self { t, fields: Fields::Uv { u, v } }
    }

    pub fn lm(t: f64, l: Vec<f64>, m: Vec<f64>) -> Self {
        Self { t, fields: Fields::Lm { l, m } }
    }

    pub fn representation(&self) -> Representation {
        match self.fields {
            Fields::Lm { .. } => Representation::Lm,
            Fields::Uv { .. } => Representation::Uv,
        }
    }

    pub fn len(&self) -> usize {
        match &self.fields {
            Fields::Lm { l, .. } => l.len(),
            Fields::Uv { u, .. } => u.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The two evolved arrays in representation order.
    pub fn pair(&self) -> (&[f64], &[f64]) {
        match &self.fields {
            Fields::Lm { l, m } => (l, m),
            Fields::Uv { u, v } => (u, v),
        }
    }

    pub fn pair_mut(&mut self) -> (&mut Vec<f64>, &mut Vec<f64>) {
        match &mut self.fields {
            Fields::Lm { l, m } => (l, m),
            Fields::Uv { u, v } => (u, v),
        }
    }

    /// Riemann-invariant view; LM states are converted cellwise.
    pub fn to_uv(&self) -> Result<FieldState> {
        match &self.fields {
            Fields::Uv { .. } => Ok(self.clone()),
            Fields::Lm { l, m } => {
                let mut u = Vec::with_capacity(l.len());
                let mut v = Vec::with_capacity(l.len());
                for (&l, &m) in l.iter().zip(m) {
                    let r = geometry::to_riemann(l, m)?;
                    u.push(r.u);
                    v.push(r.v);
                }
                Ok(FieldState::uv(self.t, u, v))
            }
        }
    }

    pub fn to_lm(&self) -> Result<FieldState> {
        match &self.fields {
            Fields::Lm { .. } => Ok(self.clone()),
            Fields::Uv { u, v } => {
                let mut l = Vec::with_capacity(u.len());
                let mut m = Vec::with_capacity(u.len());
                for (&u, &v) in u.iter().zip(v) {
                    let s = geometry::from_riemann(&geometry::RiemannState::new(u, v))?;
                    l.push(s.l);
                    m.push(s.m);
                }
                Ok(FieldState::lm(self.t, l, m))
            }
        }
    }

    pub fn to_representation(&self, rep: Representation) -> Result<FieldState> {
        match rep {
            Representation::Lm => self.to_lm(),
            Representation::Uv => self.to_uv(),
        }
    }

    /// `(l, m, n)` arrays, closing `n` through the Gauss constraint for LM
    /// states and through the inverse Riemann map for UV states.
    pub fn lmn(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        match &self.fields {
            Fields::Lm { l, m } => {
                let n = l
                    .iter()
                    .zip(m)
                    .map(|(&l, &m)| geometry::ScaledState::from_lm(l, m).map(|s| s.n))
                    .collect::<Result<Vec<_>>>()?;
                Ok((l.clone(), m.clone(), n))
            }
            Fields::Uv { u, v } => {
                let mut out = (Vec::new(), Vec::new(), Vec::new());
                for (&u, &v) in u.iter().zip(v) {
                    let s = geometry::from_riemann(&geometry::RiemannState::new(u, v))?;
                    out.0.push(s.l);
                    out.1.push(s.m);
                    out.2.push(s.n);
                }
                Ok(out)
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        let (a, b) = self.pair();
        a.iter().chain(b).all(|x| x.is_finite())
    }
}

/// Metric data at one time: `B = h(t)`, `∂ₜ ln B`, `∂ₜ ln|K|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub t: f64,
    pub b: f64,
    pub dlnb: f64,
    pub dlnk: f64,
    /// `∂ₓ ln|K|`; zero for x-independent curvature.
    pub dx_lnk: f64,
    /// `|K| = k*(t)`.
    pub k_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub state: FieldState,
    pub coefficients: Coefficients,
}

/// One record per accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub dt: f64,
    /// `dt · (max|speed|/Δx + 2μ/Δx² + max|w|/Δx)`.
    pub cfl: f64,
    pub min_gap: f64,
    pub margins: super::monitor::RegionMargins,
    /// `max_j |l_{j+1} − l_j| / Δx`.
    pub max_dx_l: f64,
    pub min_l: f64,
    pub max_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub t_star: Option<f64>,
    pub snapshots: Vec<Snapshot>,
    pub monitor: Vec<MonitorRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> &FieldState {
        &self.snapshots.last().expect("trajectory has at least the initial snapshot").state
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.config.dx();
        (0..self.config.cells).map(|j| j as f64 * dx).collect()
    }

    pub fn worst_margin(&self) -> f64 {
        self.monitor.iter().map(|r| r.margins.min()).fold(f64::INFINITY, f64::min)
    }

    /// `min_t (min gap − 2e^{−t}ψ₀)` over all monitor records.
    pub fn worst_gap_excess(&self) -> f64 {
        let psi0 = self.config.psi0;
        self.monitor
            .iter()
            .map(|r| r.min_gap - 2.0 * (-r.t).exp() * psi0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn snapshot_at(&self, t: f64) -> Result<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.state.t - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::InvalidInput(format!("no snapshot at t = {t}")))
    }
}

use serde::{Deserialize, Serialize};

use super::state::FieldState;
use crate::error::Result;

/// Signed distances to the four faces of the invariant region
/// `−ψ₀ ≤ u ≤ −e^{−t}ψ₀`, `e^{−t}ψ₀ ≤ v ≤ ψ₀`, minimised over the grid.
/// Negative entries mean the region has been left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMargins {
    pub u_lower: f64,
    pub u_upper: f64,
    pub v_lower: f64,
    pub v_upper: f64,
}

impl RegionMargins {
    pub fn min(&self) -> f64 {
        self.u_lower.min(self.u_upper).min(self.v_lower).min(self.v_upper)
    }
}

pub fn region_margins(u: &[f64], v: &[f64], t: f64, psi0: f64) -> RegionMargins {
    let floor = (-t).exp() * psi0;
    let mut m = RegionMargins {
        u_lower: f64::INFINITY,
        u_upper: f64::INFINITY,
        v_lower: f64::INFINITY,
        v_upper: f64::INFINITY,
    };
    for (&u, &v) in u.iter().zip(v) {
        m.u_lower = m.u_lower.min(u + psi0);
        m.u_upper = m.u_upper.min(-floor - u);
        m.v_lower = m.v_lower.min(v - floor);
        m.v_upper = m.v_upper.min(psi0 - v);
    }
    m
}

/// Region margins of `state` at time `t`; LM states are converted first.
pub fn monitor_region(state: &FieldState, t: f64, psi0: f64) -> Result<RegionMargins> {
    let uv = state.to_uv()?;
    let (u, v) = uv.pair();
    Ok(region_margins(u, v, t, psi0))
}

pub fn min_gap(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(u, v)| v - u).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_state_has_positive_margins() {
        let psi0 = 0.1;
        let s = FieldState::uv(1.0, vec![-psi0 / 2.0; 4], vec![psi0 / 2.0; 4]);
        let m = monitor_region(&s, 1.0, psi0).unwrap();
        assert!(m.min() > 0.0);
        assert!((m.u_lower - 0.05).abs() < 1e-15);
        assert!((m.u_upper - (0.05 - (-1f64).exp() * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn boundary_state_has_zero_margin() {
        let psi0 = 0.1;
        let s = FieldState::uv(1.0, vec![-psi0; 4], vec![psi0 / 2.0; 4]);
        let m = monitor_region(&s, 1.0, psi0).unwrap();
        assert_eq!(m.u_lower, 0.0);
        assert_eq!(m.min(), 0.0);
    }

    #[test]
    fn lm_states_are_converted() {
        // (u, v) = (−0.05, 0.05) ↔ l = −20, m = 0.
        let s = FieldState::lm(2.0, vec![-20.0; 3], vec![0.0; 3]);
        let m = monitor_region(&s, 2.0, 0.1).unwrap();
        assert!((m.u_lower - 0.05).abs() < 1e-15);
        assert!((m.v_upper - 0.05).abs() < 1e-15);
    }
}

//! Method-of-lines solver for the viscous Gauss–Codazzi system on the
//! periodic interval `[0, 2π)`, in scaled `(l, m)` or Riemann-invariant
//! `(u, v)` form, with invariant-region and hyperbolicity monitors.

pub mod config;
pub mod data;
pub mod march;
pub mod monitor;
pub mod rhs;
pub mod state;

pub use config::{DataSpec, Limiter, Representation, SolverConfig, ViscousForm};
pub use data::{generate_rough_data, RegionBox};
pub use march::{admissible_start, solve, solve_from, solve_with_metric, step, StepContext};
pub use monitor::{min_gap, monitor_region, region_margins, RegionMargins};
pub use rhs::{rhs_lm, rhs_uv, Discretization, RhsStats};
pub use state::{Coefficients, FieldState, Fields, MonitorRecord, Snapshot, Trajectory};

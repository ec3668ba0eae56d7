//! Algebraic layer of the Gauss–Codazzi system in geodesic coordinates.
//!
//! Coordinates are ordered `(x, t)`: index 1 is `x`, index 2 is `t`, so the
//! metric `g = dt² + B² dx²` has `g11 = B²`, `g12 = 0`, `g22 = 1`.
//!
//! Three representations of the second fundamental form appear:
//!
//! * [`RawForms`]: `L, M, N` with `L = h11/√|g|` etc., constrained by
//!   `LN − M² = K B²`;
//! * [`ScaledState`]: `l = L/(B²√|K|)`, `m = M/(B√|K|)`, `n = N/√|K|`,
//!   constrained by `l n − m² = −1`;
//! * [`RiemannState`]: `u = (1 − m)/l`, `v = −(1 + m)/l`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|u − v|` below this is treated as loss of strict hyperbolicity.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Unscaled second-form coefficients together with the metric coefficient
/// `B` and the Gauss curvature `K` at the same point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawForms {
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub b: f64,
    pub k: f64,
}

impl RawForms {
    /// `L N − M² − K B²`; zero on-shell.
    pub fn gauss_residual(&self) -> f64 {
        self.l * self.n - self.m * self.m - self.k * self.b * self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledState {
    pub l: f64,
    pub m: f64,
    pub n: f64,
}

impl ScaledState {
    pub fn new(l: f64, m: f64, n: f64) -> Self {
        Self { l, m, n }
    }

    /// Closes the Gauss constraint: `n = (m² − 1)/l`.
    pub fn from_lm(l: f64, m: f64) -> Result<Self> {
        if l == 0.0 || !l.is_finite() {
            return Err(Error::HyperbolicityDegenerate(format!("l = {l}")));
        }
        Ok(Self { l, m, n: (m * m - 1.0) / l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannState {
    pub u: f64,
    pub v: f64,
}

impl RiemannState {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// First and second fundamental forms in `(x, t)` coordinate order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalForms {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

impl FundamentalForms {
    /// Forms of the geodesic metric under the normalisation `L = h11/√|g|`:
    /// `h_ij = (L, M, N)·B` since `√|g| = B`.
    ///
    /// The balance laws solved in this crate, together with `LN − M² = KB²`,
    /// are the Codazzi equations for `h_ij = (L, M, N)` without the factor
    /// `B`; use [`FundamentalForms::realisable`] for forms that integrate to
    /// a surface.
    pub fn from_raw(raw: &RawForms) -> Self {
        Self {
            g11: raw.b * raw.b,
            g12: 0.0,
            g22: 1.0,
            h11: raw.l * raw.b,
            h12: raw.m * raw.b,
            h22: raw.n * raw.b,
        }
    }

    /// `h_ij = (L, M, N)`: the second form whose Codazzi equations in the
    /// metric `dt² + B²dx²` are `∂ₜL − ∂ₓM = L∂ₜln B + NB∂ₜB`,
    /// `∂ₜM − ∂ₓN = −M∂ₜln B` (for `x`-independent `B`) and whose
    /// determinant is `K det g = KB²`.
    pub fn realisable(raw: &RawForms) -> Self {
        Self { g11: raw.b * raw.b, g12: 0.0, g22: 1.0, h11: raw.l, h12: raw.m, h22: raw.n }
    }

    pub fn metric_det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g11 > 0.0 && self.metric_det() > 0.0
    }

    /// Inverse metric `(g^11, g^12, g^22)`.
    pub fn inverse_metric(&self) -> (f64, f64, f64) {
        let det = self.metric_det();
        (self.g22 / det, -self.g12 / det, self.g11 / det)
    }
}

/// Non-vanishing Christoffel symbols of `dt² + B(t)² dx²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Christoffel {
    /// `Γ^x_{xt} = Γ^x_{tx} = ∂ₜB / B`
    pub x_xt: f64,
    /// `Γ^t_{xx} = −B ∂ₜB`
    pub t_xx: f64,
}

impl Christoffel {
    /// Full table `Γ[k][i][j]` with index 0 = x, 1 = t.
    pub fn table(&self) -> [[[f64; 2]; 2]; 2] {
        let mut g = [[[0.0; 2]; 2]; 2];
        g[0][0][1] = self.x_xt;
        g[0][1][0] = self.x_xt;
        g[1][0][0] = self.t_xx;
        g
    }
}

fn check_metric(b: f64, k: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("metric coefficient B = {b} must be positive")));
    }
    if k == 0.0 {
        return Err(Error::Domain("scaling undefined for K = 0".into()));
    }
    if !(k < 0.0) {
        return Err(Error::Domain(format!("Gauss curvature K = {k} must be negative")));
    }
    Ok(())
}

pub fn to_scaled(forms: &RawForms) -> Result<ScaledState> {
    check_metric(forms.b, forms.k)?;
    let sk = forms.k.abs().sqrt();
    Ok(ScaledState {
        l: forms.l / (forms.b * forms.b * sk),
        m: forms.m / (forms.b * sk),
        n: forms.n / sk,
    })
}

pub fn from_scaled(state: &ScaledState, b: f64, k: f64) -> Result<RawForms> {
    check_metric(b, k)?;
    let sk = k.abs().sqrt();
    Ok(RawForms {
        l: state.l * b * b * sk,
        m: state.m * b * sk,
        n: state.n * sk,
        b,
        k,
    })
}

/// `u = (1 − m)/l`, `v = −(1 + m)/l`.
///
/// States with `u ≥ 0` or `v ≤ 0` are accepted here; leaving the invariant
/// region is a monitor concern, not a transform error.
pub fn to_riemann(l: f64, m: f64) -> Result<RiemannState> {
    if l == 0.0 || !l.is_finite() {
        return Err(Error::HyperbolicityDegenerate(format!("l = {l}")));
    }
    Ok(RiemannState { u: (1.0 - m) / l, v: -(1.0 + m) / l })
}

pub fn from_riemann(state: &RiemannState) -> Result<ScaledState> {
    let RiemannState { u, v } = *state;
    let d = u - v;
    if !(d.abs() >= DEGENERACY_THRESHOLD) {
        return Err(Error::HyperbolicityDegenerate(format!("u − v = {d:e}")));
    }
    Ok(ScaledState { l: 2.0 / d, m: -(u + v) / d, n: 2.0 * u * v / d })
}

/// `l n − m² + 1`, evaluated with error-free products so that the result
/// reflects the stored values rather than cancellation in the subtraction.
pub fn gauss_residual(state: &ScaledState) -> f64 {
    let ScaledState { l, m, n } = *state;
    let p = l * n;
    let ep = l.mul_add(n, -p);
    let q = m * m;
    let eq = m.mul_add(m, -q);
    ((p - q) + 1.0) + (ep - eq)
}

/// Characteristic speeds `λ₁ = (m − 1)/l`, `λ₂ = (m + 1)/l`.
pub fn eigenvalues(l: f64, m: f64) -> Result<(f64, f64)> {
    if l == 0.0 || !l.is_finite() {
        return Err(Error::HyperbolicityDegenerate(format!("l = {l}")));
    }
    Ok(((m - 1.0) / l, (m + 1.0) / l))
}

pub fn hyperbolicity_gap(state: &RiemannState) -> f64 {
    state.v - state.u
}

pub fn christoffel(b: f64, db_dt: f64) -> Result<Christoffel> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("metric coefficient B = {b} must be positive")));
    }
    Ok(Christoffel { x_xt: db_dt / b, t_xx: -b * db_dt })
}

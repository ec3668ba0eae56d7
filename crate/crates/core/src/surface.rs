//! Reconstruction of the immersion `y : Ω → ℝ³` from its fundamental forms
//! by integrating the Gauss–Weingarten system, form verification, rigid
//! alignment and OBJ export.
//!
//! Fields live in the geodesic gauge `g = B(t)² dx² + dt²`. The frame is
//! carried as the orthonormal triple `e₁ = r₁/B`, `e₂ = r₂`, `e₃ = n`, whose
//! equations are `∂ᵢE = Ωᵢ E` with skew `Ωᵢ`:
//!
//! ```text
//! Ω_x = [[0, −B_t, h11/B], [B_t, 0, h12], [−h11/B, −h12, 0]]
//! Ω_t = [[0, 0, h12/B], [0, 0, h22], [−h12/B, −h22, 0]]
//! ```
//!
//! Each step multiplies by the rotation `exp(Δ Ω_mid)` with `Ω_mid` the mean
//! of the endpoint generators, and `y` advances by the trapezoid rule.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Rotation3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, FundamentalForms, RawForms, ScaledState};
use crate::solver::Trajectory;

/// Default spacing (in steps) of the optional frame re-projection.
pub const DEFAULT_REPROJECTION: usize = 16;

/// Fundamental forms on a tensor grid, node `(ix, it)` at `ix + nx·it`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormField {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `B(t)` and `∂ₜB(t)` per time node.
    pub b: Vec<f64>,
    pub db: Vec<f64>,
    pub forms: Vec<FundamentalForms>,
    /// Gauss curvature per time node (`K = −k*(t)`), used for the residual.
    pub k: Vec<f64>,
}

fn uniform(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl FormField {
    fn flat(nx: usize, nt: usize, lx: f64, lt: f64, h11: f64) -> Self {
        let forms = FundamentalForms { g11: 1.0, g12: 0.0, g22: 1.0, h11, h12: 0.0, h22: 0.0 };
        Self {
            xs: uniform(nx, 0.0, lx),
            ts: uniform(nt, 0.0, lt),
            b: vec![1.0; nt],
            db: vec![0.0; nt],
            forms: vec![forms; nx * nt],
            k: vec![0.0; nt],
        }
    }

    /// `B ≡ 1`, `L = M = N = 0` on `[0, lx] × [0, lt]`.
    pub fn plane(nx: usize, nt: usize, lx: f64, lt: f64) -> Self {
        Self::flat(nx, nt, lx, lt, 0.0)
    }

    /// `B ≡ 1`, `L = −1/r`, `M = N = 0`: a cylinder of radius `r` with
    /// rulings along `t`.
    pub fn cylinder(r: f64, nx: usize, nt: usize, lx: f64, lt: f64) -> Self {
        Self::flat(nx, nt, lx, lt, -1.0 / r)
    }

    /// Forms of a solver trajectory: snapshot times become the `t` nodes and
    /// the periodic grid is closed by repeating the first column at `x = 2π`.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let nx_cells = traj.config.cells;
        let mut xs = traj.grid();
        xs.push(std::f64::consts::TAU);
        let nx = nx_cells + 1;
        let mut field = Self { xs, ts: vec![], b: vec![], db: vec![], forms: vec![], k: vec![] };
        for snap in &traj.snapshots {
            let c = &snap.coefficients;
            let (l, m, n) = snap.state.lmn()?;
            field.ts.push(snap.state.t);
            field.b.push(c.b);
            field.db.push(c.dlnb * c.b);
            field.k.push(-c.k_abs);
            for ix in 0..nx {
                let j = ix % nx_cells;
                let raw = geometry::from_scaled(&ScaledState::new(l[j], m[j], n[j]), c.b, -c.k_abs)?;
                field.forms.push(FundamentalForms::realisable(&raw));
            }
        }
        field.validate()?;
        Ok(field)
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nt(&self) -> usize {
        self.ts.len()
    }

    pub fn at(&self, ix: usize, it: usize) -> &FundamentalForms {
        &self.forms[ix + self.nx() * it]
    }

    /// Grid shape, positive definiteness, and the geodesic gauge.
    pub fn validate(&self) -> Result<()> {
        let (nx, nt) = (self.nx(), self.nt());
        if nx < 2 || nt < 2 || self.forms.len() != nx * nt || self.b.len() != nt || self.db.len() != nt || self.k.len() != nt {
            return Err(Error::InvalidInput("form field arrays have inconsistent sizes".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.xs) || !increasing(&self.ts) {
            return Err(Error::InvalidInput("grid coordinates must be strictly increasing".into()));
        }
        for it in 0..nt {
            if !(self.b[it] > 0.0) || !self.db[it].is_finite() {
                return Err(Error::Domain(format!("B must be positive and finite at time node {it}")));
            }
            for ix in 0..nx {
                let f = self.at(ix, it);
                if !f.is_positive_definite() {
                    return Err(Error::Domain(format!("metric not positive definite at node ({ix}, {it})")));
                }
                let b2 = self.b[it] * self.b[it];
                if f.g12 != 0.0 || f.g22 != 1.0 || ((f.g11 - b2) / b2).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!("node ({ix}, {it}) is not in the geodesic gauge")));
                }
            }
        }
        Ok(())
    }

    /// `max |det h − K det g|`.
    pub fn gauss_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for it in 0..self.nt() {
            let b = self.b[it];
            for ix in 0..self.nx() {
                let f = self.at(ix, it);
                let raw = RawForms { l: f.h11, m: f.h12, n: f.h22, b, k: self.k[it] };
                worst = worst.max(raw.gauss_residual().abs());
            }
        }
        worst
    }

    fn omega_x(&self, ix: usize, it: usize) -> Vector3<f64> {
        let f = self.at(ix, it);
        let (b, bt) = (self.b[it], self.db[it]);
        // ω = (Ω32, Ω13, Ω21).
        Vector3::new(-f.h12, f.h11 / b, bt)
    }

    fn omega_t(&self, ix: usize, it: usize) -> Vector3<f64> {
        let f = self.at(ix, it);
        Vector3::new(-f.h22, f.h12 / self.b[it], 0.0)
    }
}

/// Orthonormal frame: rows `e₁`, `e₂`, `e₃ = n`.
type Frame = Matrix3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOrder {
    /// Along `t` at the anchor column, then along `x` on every `t`-line.
    TimeFirst,
    /// Along `x` at the anchor row, then along `t` on every `x`-column.
    SpaceFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub order: PathOrder,
    /// Gram–Schmidt re-projection every `k` steps; `None` disables it.
    pub reprojection: Option<usize>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { order: PathOrder::TimeFirst, reprojection: Some(DEFAULT_REPROJECTION) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersionSurface {
    pub nx: usize,
    pub nt: usize,
    /// Node `(ix, it)` at `ix + nx·it`.
    pub points: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    /// Tangent frame vectors `r₁ = B e₁`, `r₂ = e₂`.
    pub r1: Vec<[f64; 3]>,
    pub r2: Vec<[f64; 3]>,
    pub options: IntegrationOptions,
}

fn reproject(frame: &Frame) -> Frame {
    let e1 = frame.row(0).transpose().normalize();
    let r2 = frame.row(1).transpose();
    let e2 = (r2 - e1 * e1.dot(&r2)).normalize();
    let e3 = e1.cross(&e2);
    Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()])
}

/// Integrates one path. `omega(k)` is the axial vector of the generator at
/// node `k`, `tangent(k, frame)` the derivative of `y`,
/// `steps[k]` the spacing between nodes `k` and `k + 1`.
fn integrate_path(
    start: (Frame, Vector3<f64>),
    steps: &[f64],
    omega: impl Fn(usize) -> Vector3<f64>,
    tangent: impl Fn(usize, &Frame) -> Vector3<f64>,
    reprojection: Option<usize>,
) -> Vec<(Frame, Vector3<f64>)> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    let (mut frame, mut y) = start;
    out.push((frame, y));
    for (k, &d) in steps.iter().enumerate() {
        let w = (omega(k) + omega(k + 1)) * (0.5 * d);
        let rot = Rotation3::from_scaled_axis(w);
        let next = rot.matrix() * frame;
        let next = match reprojection {
            Some(every) if every > 0 && (k + 1) % every == 0 => reproject(&next),
            _ => next,
        };
        y += (tangent(k, &frame) + tangent(k + 1, &next)) * (0.5 * d);
        frame = next;
        out.push((frame, y));
    }
    out
}

fn to_array(v: Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Reconstructs `y` from `field`. The anchor node `(xs[0], ts[0])` is mapped
/// to the origin with frame `r₁ = (B, 0, 0)`, `r₂ = (0, 1, 0)`, `n = (0, 0, 1)`.
pub fn frame_integrate(field: &FormField, options: IntegrationOptions) -> Result<ImmersionSurface> {
    field.validate()?;
    let (nx, nt) = (field.nx(), field.nt());
    let dxs: Vec<f64> = field.xs.windows(2).map(|w| w[1] - w[0]).collect();
    let dts: Vec<f64> = field.ts.windows(2).map(|w| w[1] - w[0]).collect();
    let anchor = (Matrix3::identity(), Vector3::zeros());
    let x_tangent = |it: usize| move |_k: usize, f: &Frame| f.row(0).transpose() * field.b[it];
    let t_tangent = |_k: usize, f: &Frame| f.row(1).transpose();

    let mut nodes = vec![(Matrix3::zeros(), Vector3::zeros()); nx * nt];
    match options.order {
        PathOrder::TimeFirst => {
            let spine = integrate_path(anchor, &dts, |k| field.omega_t(0, k), t_tangent, options.reprojection);
            let lines: Vec<Vec<(Frame, Vector3<f64>)>> = (0..nt)
                .into_par_iter()
                .map(|it| integrate_path(spine[it], &dxs, |k| field.omega_x(k, it), x_tangent(it), options.reprojection))
                .collect();
            for (it, line) in lines.into_iter().enumerate() {
                for (ix, node) in line.into_iter().enumerate() {
                    nodes[ix + nx * it] = node;
                }
            }
        }
        PathOrder::SpaceFirst => {
            let spine = integrate_path(anchor, &dxs, |k| field.omega_x(k, 0), x_tangent(0), options.reprojection);
            let columns: Vec<Vec<(Frame, Vector3<f64>)>> = (0..nx)
                .into_par_iter()
                .map(|ix| {
                    // r₁ = B e₁ rescales with B(t); the frame itself is orthonormal.
                    integrate_path(spine[ix], &dts, |k| field.omega_t(ix, k), t_tangent, options.reprojection)
                })
                .collect();
            for (ix, column) in columns.into_iter().enumerate() {
                for (it, node) in column.into_iter().enumerate() {
                    nodes[ix + nx * it] = node;
                }
            }
        }
    }
    let mut surface = ImmersionSurface {
        nx,
        nt,
        points: Vec::with_capacity(nx * nt),
        normals: Vec::with_capacity(nx * nt),
        r1: Vec::with_capacity(nx * nt),
        r2: Vec::with_capacity(nx * nt),
        options,
    };
    for (i, (frame, y)) in nodes.iter().enumerate() {
        let it = i / nx;
        if !frame.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(Error::Divergence(format!("frame integration produced non-finite values at node {i}")));
        }
        surface.points.push(to_array(*y));
        surface.normals.push(to_array(frame.row(2).transpose()));
        surface.r1.push(to_array(frame.row(0).transpose() * field.b[it]));
        surface.r2.push(to_array(frame.row(1).transpose()));
    }
    Ok(surface)
}

fn v3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

impl ImmersionSurface {
    /// Worst `||n| − 1|`, worst `|n · rᵢ|`, and worst `|rᵢ·rⱼ − g_ij|`.
    pub fn frame_defects(&self, field: &FormField) -> (f64, f64, f64) {
        let (mut unit, mut orth, mut gram) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..self.points.len() {
            let (n, r1, r2) = (v3(&self.normals[i]), v3(&self.r1[i]), v3(&self.r2[i]));
            let f = &field.forms[i];
            unit = unit.max((n.norm() - 1.0).abs());
            orth = orth.max(n.dot(&r1).abs() / r1.norm()).max(n.dot(&r2).abs());
            gram = gram
                .max((r1.dot(&r1) - f.g11).abs())
                .max((r1.dot(&r2) - f.g12).abs())
                .max((r2.dot(&r2) - f.g22).abs());
        }
        (unit, orth, gram)
    }

    /// Applies `y ↦ R y + t` (normals and frames rotate).
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        let map = |v: &[[f64; 3]], shift: bool| -> Vec<[f64; 3]> {
            v.iter()
                .map(|p| to_array(rotation * v3(p) + if shift { *translation } else { Vector3::zeros() }))
                .collect()
        };
        Self {
            points: map(&self.points, true),
            normals: map(&self.normals, false),
            r1: map(&self.r1, false),
            r2: map(&self.r2, false),
            ..self.clone()
        }
    }

    /// Max distance between corresponding points.
    pub fn max_distance(&self, other: &[[f64; 3]]) -> f64 {
        self.points.iter().zip(other).map(|(a, b)| (v3(a) - v3(b)).norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormResidualReport {
    pub first_max: f64,
    pub first_l2: f64,
    pub second_max: f64,
    pub second_l2: f64,
    /// Interior nodes used.
    pub nodes: usize,
}

/// Recovers I and II from the points alone (central differences on interior
/// nodes, normal `y_x × y_t / |y_x × y_t|`) and compares with `field`.
pub fn verify_forms(surface: &ImmersionSurface, field: &FormField) -> Result<FormResidualReport> {
    let (nx, nt) = (surface.nx, surface.nt);
    if nx != field.nx() || nt != field.nt() || surface.points.len() != nx * nt {
        return Err(Error::InvalidInput("surface and field grids differ".into()));
    }
    if nx < 3 || nt < 3 {
        return Err(Error::InvalidInput("need at least 3×3 nodes to difference".into()));
    }
    let p = |ix: usize, it: usize| v3(&surface.points[ix + nx * it]);
    let mut r = FormResidualReport { first_max: 0.0, first_l2: 0.0, second_max: 0.0, second_l2: 0.0, nodes: 0 };
    for it in 1..nt - 1 {
        let (tm, t0, tp) = (field.ts[it - 1], field.ts[it], field.ts[it + 1]);
        for ix in 1..nx - 1 {
            let (xm, x0, xp) = (field.xs[ix - 1], field.xs[ix], field.xs[ix + 1]);
            // Three-point formulas on possibly non-uniform spacing.
            let (hx0, hx1) = (x0 - xm, xp - x0);
            let (ht0, ht1) = (t0 - tm, tp - t0);
            let d1 = |a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>, h0: f64, h1: f64| {
                (c - b) * (h0 / (h1 * (h0 + h1))) + (b - a) * (h1 / (h0 * (h0 + h1)))
            };
            let d2 = |a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>, h0: f64, h1: f64| {
                ((c - b) / h1 - (b - a) / h0) * (2.0 / (h0 + h1))
            };
            let yx = d1(p(ix - 1, it), p(ix, it), p(ix + 1, it), hx0, hx1);
            let yt = d1(p(ix, it - 1), p(ix, it), p(ix, it + 1), ht0, ht1);
            let yxx = d2(p(ix - 1, it), p(ix, it), p(ix + 1, it), hx0, hx1);
            let ytt = d2(p(ix, it - 1), p(ix, it), p(ix, it + 1), ht0, ht1);
            let col = |jx: usize| d1(p(jx, it - 1), p(jx, it), p(jx, it + 1), ht0, ht1);
            let yxt = d1(col(ix - 1), col(ix), col(ix + 1), hx0, hx1);
            let normal = yx.cross(&yt).normalize();
            let f = field.at(ix, it);
            let first = [yx.dot(&yx) - f.g11, yx.dot(&yt) - f.g12, yt.dot(&yt) - f.g22];
            let second = [yxx.dot(&normal) - f.h11, yxt.dot(&normal) - f.h12, ytt.dot(&normal) - f.h22];
            for e in first {
                r.first_max = r.first_max.max(e.abs());
                r.first_l2 += e * e;
            }
            for e in second {
                r.second_max = r.second_max.max(e.abs());
                r.second_l2 += e * e;
            }
            r.nodes += 1;
        }
    }
    let scale = 1.0 / (3 * r.nodes) as f64;
    r.first_l2 = (r.first_l2 * scale).sqrt();
    r.second_l2 = (r.second_l2 * scale).sqrt();
    Ok(r)
}

/// Proper rigid motion `(R, t)` minimising `Σ |R aᵢ + t − bᵢ|²` (Kabsch).
pub fn rigid_align(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput("point sets must be non-empty and of equal size".into()));
    }
    let n = a.len() as f64;
    let ca = a.iter().map(v3).sum::<Vector3<f64>>() / n;
    let cb = b.iter().map(v3).sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (p, q) in a.iter().zip(b) {
        h += (v3(p) - ca) * (v3(q) - cb).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let rot = vt.transpose() * fix * u.transpose();
    Ok((rot, cb - rot * ca))
}

/// Text of the OBJ mesh: `v` lines in grid order (x fastest), each grid
/// cell split into triangles `(a, b, c)`, `(a, c, d)` with 1-based indices.
pub fn obj_string(surface: &ImmersionSurface) -> Result<String> {
    let mut s = String::new();
    for p in &surface.points {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("cannot export non-finite coordinates".into()));
        }
        writeln!(s, "v {:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]).expect("writing to a String");
    }
    let nx = surface.nx;
    for it in 0..surface.nt.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            let a = ix + nx * it + 1;
            let (b, c, d) = (a + 1, a + 1 + nx, a + nx);
            writeln!(s, "f {a} {b} {c}").expect("writing to a String");
            writeln!(s, "f {a} {c} {d}").expect("writing to a String");
        }
    }
    Ok(s)
}

pub fn export_obj(surface: &ImmersionSurface, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, obj_string(surface)?.as_bytes())
}

/// Vertices and 0-based triangles of an OBJ mesh.
pub type ObjMesh = (Vec<[f64; 3]>, Vec<[usize; 3]>);

/// Minimal OBJ reader for `v` and triangular `f` records.
pub fn parse_obj(text: &str) -> Result<ObjMesh> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    let bad = |line: &str| Error::InvalidInput(format!("malformed OBJ line: {line}"));
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts.map(|p| p.parse::<f64>().map_err(|_| bad(line))).collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(bad(line));
                }
                verts.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let c: Vec<usize> = parts
                    .map(|p| p.split('/').next().unwrap_or("").parse::<usize>().map_err(|_| bad(line)))
                    .collect::<Result<_>>()?;
                if c.len() != 3 || c.contains(&0) {
                    return Err(bad(line));
                }
                faces.push([c[0] - 1, c[1] - 1, c[2] - 1]);
            }
            Some(_) | None => {}
        }
    }
    if faces.iter().flatten().any(|&i| i >= verts.len()) {
        return Err(Error::InvalidInput("face index out of range".into()));
    }
    Ok((verts, faces))
}

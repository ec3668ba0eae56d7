//! File formats: CSV tables, JSON documents, the binary checkpoint and
//! atomic file replacement.
//!
//! Checkpoint layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"GCSTATE\0"
//! 8       4     u32    format version (1)
//! 12      4     u32    representation: 0 = (l, m), 1 = (u, v)
//! 16      8     u64    J, number of cells
//! 24      8     f64    t
//! 32      8·J   f64    first field  (l or u), cell order
//! 32+8J   8·J   f64    second field (m or v), cell order
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::SweepReport;
use crate::error::{Error, Result};
use crate::metric::{self, MetricSolution};
use crate::profile::CurvatureProfile;
use crate::solver::{FieldState, Fields, MonitorRecord, Representation, Trajectory};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"GCSTATE\0";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() })
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))
}

#[derive(Debug, Serialize)]
struct MetricRow {
    t: f64,
    k_star: f64,
    h: f64,
    dh: f64,
    dln_h: f64,
    sign_switch: f64,
}

/// Columns `t, k_star, h, dh, dln_h, sign_switch` on the metric grid.
pub fn metric_csv(metric: &MetricSolution, profile: &CurvatureProfile) -> Result<Vec<u8>> {
    let rows = metric
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            Ok(MetricRow {
                t,
                k_star: metric.k[i],
                h: metric.h[i],
                dh: metric.dh[i],
                dln_h: metric.dh[i] / metric.h[i],
                sign_switch: metric::sign_switch(metric, profile, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    csv_bytes(rows)
}

#[derive(Debug, Serialize)]
struct TrajectoryRow {
    t: f64,
    x: f64,
    u: f64,
    v: f64,
    l: f64,
    m: f64,
    n: f64,
}

/// One row per snapshot and cell: `t, x, u, v, l, m, n`.
pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let xs = traj.grid();
    let mut rows = Vec::with_capacity(xs.len() * traj.snapshots.len());
    for snap in &traj.snapshots {
        let uv = snap.state.to_uv()?;
        let (u, v) = uv.pair();
        let (l, m, n) = snap.state.lmn()?;
        for (j, &x) in xs.iter().enumerate() {
            rows.push(TrajectoryRow { t: snap.state.t, x, u: u[j], v: v[j], l: l[j], m: m[j], n: n[j] });
        }
    }
    csv_bytes(rows)
}

#[derive(Debug, Serialize)]
struct MonitorRow {
    t: f64,
    dt: f64,
    cfl: f64,
    min_gap: f64,
    margin_u_lower: f64,
    margin_u_upper: f64,
    margin_v_lower: f64,
    margin_v_upper: f64,
    max_dx_l: f64,
    min_l: f64,
    max_l: f64,
}

pub fn monitor_csv(records: &[MonitorRecord]) -> Result<Vec<u8>> {
    csv_bytes(records.iter().map(|r| MonitorRow {
        t: r.t,
        dt: r.dt,
        cfl: r.cfl,
        min_gap: r.min_gap,
        margin_u_lower: r.margins.u_lower,
        margin_u_upper: r.margins.u_upper,
        margin_v_lower: r.margins.v_lower,
        margin_v_upper: r.margins.v_upper,
        max_dx_l: r.max_dx_l,
        min_l: r.min_l,
        max_l: r.max_l,
    }))
}

#[derive(Debug, Serialize)]
struct ResidualRow {
    mu: f64,
    chi: usize,
    residual_l: f64,
    residual_m: f64,
}

/// Weak residual of every successful run against every test function.
pub fn residual_table_csv(report: &SweepReport) -> Result<Vec<u8>> {
    let rows = report.runs.iter().flat_map(|run| {
        run.weak_residuals
            .iter()
            .enumerate()
            .map(move |(chi, r)| ResidualRow { mu: run.mu, chi, residual_l: r[0], residual_m: r[1] })
    });
    csv_bytes(rows)
}

pub fn encode_checkpoint(state: &FieldState) -> Vec<u8> {
    let (a, b) = state.pair();
    let rep: u32 = match state.fields {
        Fields::Lm { .. } => 0,
        Fields::Uv { .. } => 1,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * a.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&rep.to_le_bytes());
    out.extend_from_slice(&(a.len() as u64).to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    for x in a.iter().chain(b) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<FieldState> {
    let bad = |reason: &str| Error::InvalidInput(format!("checkpoint: {reason}"));
    if bytes.len() < HEADER_LEN || bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("missing magic header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(8);
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let rep = match u32_at(12) {
        0 => Representation::Lm,
        1 => Representation::Uv,
        other => return Err(bad(&format!("unknown representation tag {other}"))),
    };
    let cells = usize::try_from(u64_at(16)).map_err(|_| bad("cell count overflows"))?;
    let expected = cells.checked_mul(16).and_then(|n| n.checked_add(HEADER_LEN)).ok_or_else(|| bad("cell count overflows"))?;
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let t = f64_at(24);
    let read = |k: usize| -> Vec<f64> { (0..cells).map(|j| f64_at(HEADER_LEN + 8 * (k * cells + j))).collect() };
    let (a, b) = (read(0), read(1));
    Ok(match rep {
        Representation::Lm => FieldState::lm(t, a, b),
        Representation::Uv => FieldState::uv(t, a, b),
    })
}

pub fn write_checkpoint(path: &Path, state: &FieldState) -> Result<()> {
    write_atomic(path, &encode_checkpoint(state))
}

pub fn read_checkpoint(path: &Path) -> Result<FieldState> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let s = FieldState::uv(2.5, vec![-0.1, -0.2, f64::MIN_POSITIVE], vec![0.3, 0.1, 1e300]);
        let bytes = encode_checkpoint(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 48);
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(decode_checkpoint(&bytes).unwrap(), s);
        let l = FieldState::lm(0.0, vec![-1.0], vec![0.5]);
        assert_eq!(decode_checkpoint(&encode_checkpoint(&l)).unwrap(), l);
    }

    #[test]
    fn corrupt_checkpoints_are_rejected() {
        let good = encode_checkpoint(&FieldState::lm(1.0, vec![-1.0, -2.0], vec![0.0, 0.1]));
        assert!(decode_checkpoint(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint(&bad).is_err());
        let mut bad = good.clone();
        bad[8] = 9;
        assert!(decode_checkpoint(&bad).is_err());
        let mut bad = good;
        bad[12] = 7;
        assert!(decode_checkpoint(&bad).is_err());
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"second");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

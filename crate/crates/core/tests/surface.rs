use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use gauss_codazzi::solver::{solve, DataSpec, Representation, SolverConfig, Trajectory};
use gauss_codazzi::surface::*;
use gauss_codazzi::CurvatureProfile;
use nalgebra::{Rotation3, Vector3};

fn no_reprojection(order: PathOrder) -> IntegrationOptions {
    IntegrationOptions { order, reprojection: None }
}

fn cylinder_points(field: &FormField, r: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for &t in &field.ts {
        for &x in &field.xs {
            out.push([r * (x / r).sin(), t, r * (x / r).cos() - r]);
        }
    }
    out
}

/// Max distance to the analytic cylinder after the best rigid alignment.
fn cylinder_error(n: usize) -> f64 {
    let r = 0.8;
    let field = FormField::cylinder(r, n, n, PI, 1.0);
    let s = frame_integrate(&field, IntegrationOptions::default()).unwrap();
    let exact = cylinder_points(&field, r);
    let (rot, shift) = rigid_align(&s.points, &exact).unwrap();
    s.transformed(&rot, &shift).max_distance(&exact)
}

fn smooth_trajectory(cells: usize) -> Trajectory {
    let dx = TAU / cells as f64;
    let mut c = SolverConfig::new(
        CurvatureProfile::hong(1.0, 2.0),
        1.0,
        DataSpec::Smooth { amplitude: 0.6 },
        cells,
        0.5 * dx * dx,
        0.5,
        1.0,
    );
    c.representation = Representation::Lm;
    c.dt_max = 0.25 * dx;
    c.output_interval = 8.0 / cells as f64;
    c.metric_step = 1e-3;
    solve(&c).unwrap()
}

#[test]
fn plane_reconstructs_to_rounding() {
    let field = FormField::plane(64, 64, 3.0, 2.0);
    let s = frame_integrate(&field, IntegrationOptions::default()).unwrap();
    let r = verify_forms(&s, &field).unwrap();
    assert!(r.first_max <= 1e-10 && r.second_max <= 1e-10, "{r:?}");
    assert!(s.points.iter().all(|p| p[2].abs() < 1e-14));
}

#[test]
fn cylinder_error_quarters_under_grid_halving() {
    let coarse = cylinder_error(64);
    let fine = cylinder_error(128);
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "errors {coarse:e} {fine:e}, ratio {ratio}");

    let residual = |n: usize| {
        let field = FormField::cylinder(0.8, n, n, PI, 1.0);
        let s = frame_integrate(&field, IntegrationOptions::default()).unwrap();
        verify_forms(&s, &field).unwrap()
    };
    let (a, b) = (residual(64), residual(128));
    let ratio = a.second_l2 / b.second_l2;
    assert!((3.0..=5.0).contains(&ratio), "{a:?} {b:?}");
}

#[test]
fn residuals_are_invariant_under_rigid_motions() {
    let traj = smooth_trajectory(64);
    let field = FormField::from_trajectory(&traj).unwrap();
    let s = frame_integrate(&field, IntegrationOptions::default()).unwrap();
    let base = verify_forms(&s, &field).unwrap();
    for (axis, shift) in [
        (Vector3::new(0.3, -1.2, 0.8), Vector3::new(0.5, -0.25, 1.0)),
        (Vector3::new(PI, 0.0, 0.0), Vector3::new(-2.0, 0.0, 0.125)),
    ] {
        let rot = *Rotation3::from_scaled_axis(axis).matrix();
        let moved = verify_forms(&s.transformed(&rot, &shift), &field).unwrap();
        for (x, y) in [
            (base.first_max, moved.first_max),
            (base.first_l2, moved.first_l2),
            (base.second_max, moved.second_max),
            (base.second_l2, moved.second_l2),
        ] {
            assert!((x - y).abs() <= 1e-12, "{base:?} vs {moved:?}");
        }
    }
}

#[test]
fn path_order_differences_vanish_at_second_order() {
    let gaps: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&j| {
            let field = FormField::from_trajectory(&smooth_trajectory(j)).unwrap();
            let a = frame_integrate(&field, no_reprojection(PathOrder::TimeFirst)).unwrap();
            let b = frame_integrate(&field, no_reprojection(PathOrder::SpaceFirst)).unwrap();
            a.max_distance(&b.points)
        })
        .collect();
    for w in gaps.windows(2) {
        assert!(w[0] / w[1] > 3.0, "path gaps {gaps:?}");
    }
}

#[test]
fn frame_stays_orthonormal_without_reprojection() {
    let field = FormField::from_trajectory(&smooth_trajectory(128)).unwrap();
    for order in [PathOrder::TimeFirst, PathOrder::SpaceFirst] {
        let s = frame_integrate(&field, no_reprojection(order)).unwrap();
        let (unit, orth, gram) = s.frame_defects(&field);
        assert!(unit <= 1e-8 && orth <= 1e-8 && gram <= 1e-8, "{order:?}: {unit:e} {orth:e} {gram:e}");
        let with = frame_integrate(&field, IntegrationOptions { order, reprojection: Some(DEFAULT_REPROJECTION) }).unwrap();
        assert!(with.max_distance(&s.points) < 1e-10);
    }
}

#[test]
fn solver_output_reconstructs_at_second_order() {
    let reports: Vec<FormResidualReport> = [32, 64, 128]
        .iter()
        .map(|&j| {
            let field = FormField::from_trajectory(&smooth_trajectory(j)).unwrap();
            assert!(field.gauss_residual() < 1e-12);
            let s = frame_integrate(&field, IntegrationOptions::default()).unwrap();
            verify_forms(&s, &field).unwrap()
        })
        .collect();
    for w in reports.windows(2) {
        let first = (w[0].first_l2 / w[1].first_l2).log2();
        let second = (w[0].second_l2 / w[1].second_l2).log2();
        assert!(first >= 1.5 && second >= 1.5, "orders {first} {second}: {reports:?}");
    }
}

#[test]
fn obj_round_trips_and_is_a_consistently_oriented_manifold() {
    let field = FormField::from_trajectory(&smooth_trajectory(32)).unwrap();
    let s = frame_integrate(&field, IntegrationOptions::default()).unwrap();
    let text = obj_string(&s).unwrap();
    let (verts, faces) = parse_obj(&text).unwrap();
    assert_eq!(verts, s.points, "17 significant digits must round-trip exactly");
    assert_eq!(faces.len(), 2 * (s.nx - 1) * (s.nt - 1));

    // Every directed edge appears once; interior edges appear in both directions.
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &faces {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    assert!(directed.values().all(|&c| c == 1), "an edge is traversed twice in one direction");
    let boundary = directed.keys().filter(|(a, b)| !directed.contains_key(&(*b, *a))).count();
    assert_eq!(boundary, 2 * (s.nx - 1) + 2 * (s.nt - 1));

    // Winding agrees with the frame normal.
    for f in &faces {
        let p = |i: usize| Vector3::from(verts[i]);
        let normal = (p(f[1]) - p(f[0])).cross(&(p(f[2]) - p(f[0])));
        assert!(normal.dot(&Vector3::from(s.normals[f[0]])) > 0.0);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface.obj");
    export_obj(&s, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

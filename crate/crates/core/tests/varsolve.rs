use std::f64::consts::PI;

use domino::sample::EmpiricalField;
use domino::shapes;
use domino::tension::{sigma, Slope};
use domino::varsolve::mesh::in_polygon;
use domino::varsolve::problems::{self, CutSide};
use domino::varsolve::*;

fn sigma0() -> f64 {
    sigma(Slope { s: 0.0, t: 0.0 }).unwrap()
}

fn solve(p: &problems::Problem, spacing: f64, fixed_r: Option<Vec<f64>>) -> (Mesh, SolveReport) {
    let mesh = build_mesh(&p.domain, spacing).unwrap();
    let opts = SolveOptions { fixed_r, ..SolveOptions::default() };
    let report = maximize(&mesh, &p.data, &opts).unwrap();
    (mesh, report)
}

#[test]
fn unit_square_mesh() {
    let mesh = build_mesh(&problems::unit_square().domain, 0.1).unwrap();
    assert_eq!(mesh.triangles.len(), 400);
    assert_eq!(mesh.vertices.len(), 121 + 100);
    assert!((mesh.total_area() - 1.0).abs() < 1e-12);
    assert!(mesh.seam_pairs.is_empty());
    for t in 0..mesh.triangles.len() {
        assert!(mesh.area(t) > 0.0);
    }
}

#[test]
fn annulus_mesh_has_one_seam() {
    let p = problems::square_annulus(1.0, CutSide::West);
    let mesh = build_mesh(&p.domain, 0.25).unwrap();
    assert!((mesh.total_area() - 3.0).abs() < 1e-12);
    assert_eq!(mesh.genus(), 1);
    assert_eq!(mesh.seam_pairs.len(), 3);
    for sp in &mesh.seam_pairs {
        assert_eq!(sp.hole, 1);
        assert_ne!(sp.left, sp.right);
        assert_eq!(mesh.vertices[sp.left], mesh.vertices[sp.right]);
        assert_eq!(mesh.vertices[sp.left][1], 0.0);
    }
    assert!(mesh.hole_points.iter().all(|&q| in_polygon(&p.domain.holes[0], q)));
}

#[test]
fn mesh_errors() {
    let mut p = problems::square_annulus(0.0, CutSide::West);
    assert!(matches!(build_mesh(&p.domain, 0.0), Err(VarSolveError::MeshFailure(_))));
    assert!(matches!(build_mesh(&p.domain, f64::NAN), Err(VarSolveError::MeshFailure(_))));
    p.domain.cuts.clear();
    assert!(matches!(build_mesh(&p.domain, 0.25), Err(VarSolveError::MeshFailure(_))));
    let mut skew = problems::unit_square();
    skew.domain.outer[2] = [1.0, 0.7];
    assert!(build_mesh(&skew.domain, 0.1).is_err());
}

#[test]
fn lifted_angles_jump_by_a_full_turn_across_the_seam() {
    let p = problems::square_annulus(0.0, CutSide::North);
    let mesh = build_mesh(&p.domain, 0.125).unwrap();
    let theta = &lifted_angles(&mesh, &[[0.0, 0.0]]).unwrap()[0];
    for sp in &mesh.seam_pairs {
        assert!(((theta[sp.right] - theta[sp.left]).abs() - 2.0 * PI).abs() < 1e-9);
    }
}

#[test]
fn flat_data_gives_a_flat_limit_shape() {
    let (_, r) = solve(&problems::unit_square(), 0.1, None);
    assert!(r.h_star.values.iter().all(|v| v.abs() < 1e-6));
    assert!((r.objective - sigma0()).abs() < 1e-6);
    assert!(r.frozen_mask.iter().all(|&f| !f));
    assert_eq!(r.frozen_fraction(), 0.0);
}

#[test]
fn functional_value_of_the_zero_height() {
    let mesh = build_mesh(&problems::unit_square().domain, 0.2).unwrap();
    let zero = AsymptoticHeight { values: vec![0.0; mesh.vertices.len()], height_change: vec![], monodromy: vec![] };
    assert!((functional_value(&mesh, &zero, true).unwrap() - sigma0()).abs() < 1e-12);
    let tilted = AsymptoticHeight { values: mesh.vertices.iter().map(|p| 2.0 * p[0]).collect(), ..zero.clone() };
    assert!(functional_value(&mesh, &tilted, false).unwrap().abs() < 1e-12);
    let steep = AsymptoticHeight { values: mesh.vertices.iter().map(|p| 3.0 * p[0]).collect(), ..zero };
    assert!(matches!(functional_value(&mesh, &steep, true), Err(VarSolveError::InfeasibleHeight { .. })));
}

#[test]
fn solution_is_admissible_and_frozen_triangles_sit_on_the_boundary() {
    let (mesh, r) = solve(&problems::aztec_diamond(), 0.1, None);
    for t in 0..mesh.triangles.len() {
        let g = mesh.gradient(t, &r.h_star.values);
        let l1 = g[0].abs() + g[1].abs();
        assert!(l1 <= 2.0 + 1e-7);
        assert_eq!(r.frozen_mask[t], l1 >= 2.0 - r.eps_bnd, "triangle {t}");
    }
    assert!((functional_value(&mesh, &r.h_star, true).unwrap() - r.objective).abs() < 1e-6);
    assert!(r.frozen_fraction() > 0.1 && r.frozen_fraction() < 0.9);
}

#[test]
fn seam_offsets_equal_the_monodromy() {
    let (mesh, r) = solve(&problems::square_annulus(1.0, CutSide::West), 0.125, None);
    for sp in &mesh.seam_pairs {
        assert!((r.h_star.values[sp.right] - r.h_star.values[sp.left] - 1.0).abs() < 1e-9);
    }
    assert_eq!(r.h_star.monodromy, vec![1.0]);
}

#[test]
fn symmetric_annulus_has_zero_height_change() {
    let (_, r) = solve(&problems::square_annulus(0.0, CutSide::West), 0.125, None);
    assert!(r.r_star[0].abs() < 1e-6);
    assert!((r.objective - sigma0()).abs() < 1e-6);
}

#[test]
fn pinned_height_change_is_never_better() {
    let p = problems::square_annulus(0.0, CutSide::West);
    let (_, free) = solve(&p, 0.125, None);
    for r in [-0.6, -0.2, 0.3, 0.8] {
        let (_, fixed) = solve(&p, 0.125, Some(vec![r]));
        assert!((fixed.r_star[0] - r).abs() < 1e-12);
        assert!(fixed.objective < free.objective);
    }
    let mesh = build_mesh(&p.domain, 0.125).unwrap();
    let opts = SolveOptions { fixed_r: Some(vec![5.0]), ..SolveOptions::default() };
    assert!(matches!(maximize(&mesh, &p.data, &opts), Err(VarSolveError::Infeasible(_))));
}

#[test]
fn bad_boundary_data() {
    let p = problems::square_annulus(0.0, CutSide::West);
    let mesh = build_mesh(&p.domain, 0.25).unwrap();
    assert!(matches!(maximize(&mesh, &BoundaryData::flat(0), &SolveOptions::default()), Err(VarSolveError::BadData(_))));
    let opts = SolveOptions { fixed_r: Some(vec![0.0, 0.0]), ..SolveOptions::default() };
    assert!(maximize(&mesh, &p.data, &opts).is_err());
}

#[test]
fn comparing_a_limit_shape_with_itself() {
    let p = problems::square_annulus(1.0, CutSide::West);
    let (mesh, r) = solve(&p, 0.125, None);
    let d = shapes::annulus(16, 8).unwrap();
    let scale = 1.0 / 8.0;
    let mut field = EmpiricalField::new(d.vertices().len(), 1.0);
    field.sum =
        d.vertices().iter().map(|v| mesh.interpolate(&r.h_star.values, [v.0 as f64 * scale, v.1 as f64 * scale]).unwrap()).collect();
    field.n_samples = 1;
    field.r_histogram.insert(vec![0], 1);
    let opts = CompareOptions { position_scale: scale, band: 0.0 };
    let c = compare_to_empirical(&mesh, &r, &field, &d, opts).unwrap();
    assert!(c.sup < 1e-12 && c.l2 < 1e-12, "{c:?}");
    assert_eq!((c.points, c.excluded), (d.vertices().len(), 0));

    let wrong = EmpiricalField::new(3, 1.0);
    assert!(matches!(compare_to_empirical(&mesh, &r, &wrong, &d, opts), Err(VarSolveError::DomainMismatch(_))));
}

#[test]
fn richardson_recovers_a_quadratic_error() {
    let (limit, order) = richardson([1.0 + 0.4, 1.0 + 0.1, 1.0 + 0.025]);
    assert!((limit - 1.0).abs() < 1e-12 && (order - 2.0).abs() < 1e-12);
    assert!(richardson([1.0, 2.0, 1.5]).1.is_nan());
}

#[test]
fn objective_converges_under_refinement() {
    let p = problems::aztec_diamond();
    let obj: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&h| solve(&p, h, None).1.objective).collect();
    let (limit, _) = richardson([obj[0], obj[1], obj[2]]);
    assert!((obj[2] - limit).abs() < (obj[0] - limit).abs());
    assert!(obj.iter().all(|&o| o > 0.0 && o < sigma0()));
}

#[test]
fn height_change_against_the_exact_census() {
    let n = 4.0;
    let c = domino::enumerate::census(&shapes::annulus(8, 4).unwrap()).unwrap();
    let mean = c.by_height_change.iter().map(|(r, &k)| r[0] as f64 * k as f64).sum::<f64>() / c.total as f64;
    let (_, r) = solve(&problems::square_annulus(0.0, CutSide::West), 0.125, None);
    assert!((r.r_star[0] - mean / n).abs() < 0.2, "r* {} vs census {}", r.r_star[0], mean / n);
}

use domino::heights::find_tiling;
use domino::lattice::{monodromy_by_traversal, LatticeDomain, Vertex};
use domino::shapes::*;

fn closed(cycle: &[Vertex]) -> Vec<Vertex> {
    cycle.iter().chain(std::iter::once(&cycle[0])).copied().collect()
}

fn boundary_monodromy(d: &LatticeDomain, component: usize) -> i64 {
    monodromy_by_traversal(d, &closed(&d.boundary_components()[component].vertex_cycle)).unwrap()
}

#[test]
fn square_counts() {
    assert_eq!(rectangle(3, 5).unwrap().squares().len(), 15);
    for n in 1..=6 {
        assert_eq!(aztec(n).unwrap().squares().len() as i32, 2 * n * (n + 1));
    }
    assert_eq!(annulus(6, 2).unwrap().squares().len(), 32);
    assert_eq!(annulus(7, 3).unwrap().squares().len(), 40);
}

#[test]
fn bad_sizes() {
    assert!(matches!(rectangle(0, 3), Err(ShapeError::BadSize(_))));
    assert!(matches!(aztec(0), Err(ShapeError::BadSize(_))));
    assert!(matches!(annulus(5, 2), Err(ShapeError::BadSize(_))));
    assert!(matches!(annulus(4, 4), Err(ShapeError::BadSize(_))));
    assert!(matches!(modified_aztec(6, None), Err(ShapeError::BadSize(_))));
    assert!(matches!(modified_aztec(8, Some(3)), Err(ShapeError::BadSize(_))));
}

#[test]
fn hole_radius_is_odd() {
    let radii: Vec<i32> = [4, 8, 12, 16, 20, 24, 32].iter().map(|&n| modified_aztec_hole_radius(n)).collect();
    assert_eq!(radii, vec![1, 1, 3, 3, 5, 5, 7]);
}

#[test]
fn aztec_squares_are_symmetric() {
    let sq = aztec_squares(5);
    for s in &sq {
        assert!(sq.contains(&domino::Square(-s.0 - 1, s.1)));
        assert!(sq.contains(&domino::Square(s.1, s.0)));
    }
}

#[test]
fn annulus_has_flat_monodromy() {
    let d = annulus(8, 4).unwrap();
    assert_eq!(d.genus(), 1);
    assert_eq!(d.monodromy().0, vec![0]);
    assert_eq!(boundary_monodromy(&d, 1), 0);
    assert!(find_tiling(&d).is_some());
}

#[test]
fn modified_aztec_is_balanced_and_tileable() {
    for n in (4..=32).step_by(4) {
        let d = modified_aztec(n, None).unwrap();
        let (b, w) = d.black_white();
        assert_eq!(b, w, "N = {n}");
        assert_eq!(d.genus(), 1);
        assert!(find_tiling(&d).is_some(), "N = {n}");
    }
}

#[test]
fn modified_aztec_monodromy_by_traversal() {
    for n in (4..=32).step_by(4) {
        let d = modified_aztec(n, None).unwrap();
        let m = d.monodromy().0[0];
        assert_eq!(m, 2 * n as i64);
        assert_eq!(boundary_monodromy(&d, 1).abs(), m, "hole, N = {n}");
        assert_eq!(boundary_monodromy(&d, 0).abs(), m, "outer, N = {n}");
    }
}

#[test]
fn defect_size_sets_the_monodromy() {
    for defect in 0..=2 {
        let d = modified_aztec(8, Some(defect)).unwrap();
        assert_eq!(d.monodromy().0, vec![8 * defect as i64]);
        assert_eq!(boundary_monodromy(&d, 1).abs(), 8 * defect as i64);
    }
}

mod common;

use common::*;
use domino::lattice::*;
use domino::shapes;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn domino_cell_pair_counts() {
    let d = build_domain([Square(0, 0), Square(1, 0)]).unwrap();
    assert_eq!((d.squares().len(), d.vertices().len(), d.edges().len()), (2, 6, 7));
    assert_eq!(d.genus(), 0);
}

#[test]
fn beta_closed_form_examples() {
    let oracle = (-3..3)
        .flat_map(|a| (-3..3).map(move |b| (a, b)))
        .filter(|&(a, b): &(i32, i32)| (2 * a + 1).abs() + (2 * b + 1).abs() <= 4)
        .count();
    assert_eq!(oracle, 12);
    assert_eq!(shapes::aztec(2).unwrap().squares().len(), 12);
}

#[test]
fn empty_and_disconnected_domains_are_rejected() {
    assert_eq!(LatticeDomain::new(Vec::<Square>::new()).unwrap_err(), LatticeError::EmptyDomain);
    assert!(matches!(LatticeDomain::new([Square(0, 0), Square(2, 0)]), Err(LatticeError::DisconnectedDomain(_))));
}

#[test]
fn annulus_and_block_components() {
    let annulus = shapes::annulus(4, 2).unwrap();
    assert_eq!(annulus.boundary_components().len(), 2);
    assert_eq!(annulus.genus(), 1);
    assert_eq!(annulus.monodromy().0, vec![0]);
    let block2 = LatticeDomain::new(block(0, 0, 2, 2)).unwrap();
    assert_eq!(block2.boundary_components().len(), 1);
    assert!(block2.cuts().cuts.is_empty());
}

#[test]
fn modified_aztec_smallest_size() {
    let d = shapes::modified_aztec(4, None).unwrap();
    assert_eq!(d.boundary_components().len(), 2);
    assert_eq!(d.monodromy().0, vec![8]);
    let hole = &d.boundary_components()[1];
    let lp: Vec<Vertex> = hole.vertex_cycle.iter().chain(std::iter::once(&hole.vertex_cycle[0])).copied().collect();
    assert_eq!(monodromy_by_traversal(&d, &lp).unwrap().abs(), 8);
}

#[test]
fn annulus_cut_is_a_straight_path() {
    let d = shapes::annulus(4, 2).unwrap();
    let cuts = &d.cuts().cuts;
    assert_eq!(cuts.len(), 1);
    let sq = &cuts[0].squares;
    let straight = sq.iter().all(|s| s.0 == sq[0].0) || sq.iter().all(|s| s.1 == sq[0].1);
    assert!(straight, "{sq:?}");
    assert_eq!(euler_characteristic(&d, d.cuts()), 1);
}

#[test]
fn two_holes_two_cuts_simply_connected() {
    let d = LatticeDomain::new(without(block(0, 0, 8, 5), &[Square(2, 2), Square(5, 2)])).unwrap();
    assert_eq!(d.cuts().cuts.len(), 2);
    assert_eq!(euler_characteristic(&d, d.cuts()), 1);
}

#[test]
fn single_black_square_hole() {
    let d = LatticeDomain::new(without(block(0, 0, 3, 3), &[Square(1, 1)])).unwrap();
    assert_eq!(d.monodromy().0, vec![4]);
    let white = LatticeDomain::new(without(block(0, 0, 4, 3), &[Square(2, 1)])).unwrap();
    assert_eq!(white.monodromy().0, vec![-4]);
}

#[test]
fn loops_enclosing_no_hole_have_zero_monodromy() {
    let d = LatticeDomain::new(block(0, 0, 3, 3)).unwrap();
    let around_square = [Vertex(1, 1), Vertex(2, 1), Vertex(2, 2), Vertex(1, 2), Vertex(1, 1)];
    assert_eq!(monodromy_by_traversal(&d, &around_square).unwrap(), 0);
    let black_raw = edge_sum(&d, &[Vertex(0, 0), Vertex(1, 0), Vertex(1, 1), Vertex(0, 1), Vertex(0, 0)]).unwrap();
    assert_eq!(black_raw.abs(), 4);
    assert_eq!(monodromy_by_traversal(&d, &[Vertex(0, 0), Vertex(1, 0), Vertex(0, 0)]).unwrap(), 0);
}

#[test]
fn monodromy_of_concatenation_adds() {
    let d = LatticeDomain::new(without(block(0, 0, 8, 5), &[Square(2, 2), Square(5, 2)])).unwrap();
    let a = [Vertex(1, 1), Vertex(4, 1), Vertex(4, 4), Vertex(1, 4), Vertex(1, 1)];
    let b = [Vertex(1, 1), Vertex(1, 4), Vertex(7, 4), Vertex(7, 1), Vertex(1, 1)];
    let unit = |p: &[Vertex]| -> Vec<Vertex> {
        let mut out = vec![p[0]];
        for w in p.windows(2) {
            let mut c = w[0];
            while c != w[1] {
                c = Vertex(c.0 + (w[1].0 - c.0).signum(), c.1 + (w[1].1 - c.1).signum());
                out.push(c);
            }
        }
        out
    };
    let (la, lb) = (unit(&a), unit(&b));
    let joined: Vec<Vertex> = la.iter().chain(lb.iter().skip(1)).copied().collect();
    let m = |l: &[Vertex]| monodromy_by_traversal(&d, l).unwrap();
    assert_eq!(m(&joined), m(&la) + m(&lb));
    assert_eq!(m(&la), 4);
}

#[test]
fn open_paths_are_rejected() {
    let d = LatticeDomain::new(block(0, 0, 2, 2)).unwrap();
    assert_eq!(monodromy_by_traversal(&d, &[Vertex(0, 0), Vertex(1, 0)]), Err(LatticeError::OpenPath));
}

#[test]
fn beta_examples() {
    let d = LatticeDomain::new(block(-4, -4, 8, 8)).unwrap();
    for (p, q, want) in [(Vertex(0, 0), Vertex(0, 0), 0), (Vertex(0, 0), Vertex(1, 0), 3), (Vertex(0, 0), Vertex(2, 0), 4)] {
        assert_eq!(beta_closed_form(p, q), want);
        assert_eq!(beta_distance(&d, p, q).unwrap() as i64, want);
    }
}

#[test]
fn cover_shift_is_a_group_action() {
    let p = CoverPoint { vertex: Vertex(3, 1), deck: vec![0] };
    assert_eq!(cover_shift(&p, &[1]).deck, vec![1]);
    assert_eq!(cover_shift(&p, &[0]), p);
    assert_eq!(cover_shift(&cover_shift(&p, &[1]), &[-1]), p);
}

#[test]
fn random_domains_monodromy_three_ways() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let d = random_domain(&mut rng);
        let holes = flood_fill_holes(d.squares());
        assert_eq!(d.boundary_components().len(), holes.len() + 1);
        assert_eq!(euler_characteristic(&d, d.cuts()), 1);
        for m in &d.monodromy().0 {
            assert_eq!(m % 4, 0);
        }
        for _ in 0..50 {
            let len = rng.gen_range(4..120);
            let lp = random_loop(&d, &mut rng, len);
            let traversal = monodromy_by_traversal(&d, &lp).unwrap();
            let oracle: i64 = holes.iter().map(|h| 4 * colour_excess(h) * winding_number(&lp, h[0])).sum();
            assert_eq!(traversal, oracle);
            assert_eq!(traversal, d.monodromy().pair(&cut_crossings(&d, &lp).unwrap()));
            assert_eq!(cut_crossings(&d, &lp).unwrap(), hole_windings(&d, &lp));
        }
    }
}

#[test]
fn beta_matches_closed_form_on_a_window() {
    let d = LatticeDomain::new(block(0, 0, 8, 8)).unwrap();
    for (qi, &q) in d.vertices().iter().enumerate() {
        let from = d.beta_from(qi);
        for (pi, &p) in d.vertices().iter().enumerate() {
            assert_eq!(from[pi].unwrap() as i64, beta_closed_form(p, q), "{q} -> {p}");
        }
    }
}

proptest! {
    #[test]
    fn beta_triangle_inequality(x in 0usize..81, y in 0usize..81, z in 0usize..81) {
        let d = LatticeDomain::new(without(block(0, 0, 8, 8), &[Square(3, 3), Square(4, 3)])).unwrap();
        let (fx, fy) = (d.beta_from(x), d.beta_from(y));
        prop_assert!(fx[z].unwrap() <= fx[y].unwrap() + fy[z].unwrap());
    }

    #[test]
    fn closed_form_is_translation_invariant_on_even_shifts(a in -5i32..5, b in -5i32..5, i in -6i32..6, j in -6i32..6, s in -3i32..3, t in -3i32..3) {
        let (x, y) = (Vertex(a, b), Vertex(a + i, b + j));
        let shift = |v: Vertex| Vertex(v.0 + s + t, v.1 + s - t);
        prop_assert_eq!(beta_closed_form(x, y), beta_closed_form(shift(x), shift(y)));
    }
}

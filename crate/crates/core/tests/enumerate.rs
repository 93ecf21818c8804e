use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use domino::enumerate::*;
use domino::heights::{height_from_tiling, Tiling};
use domino::lattice::{LatticeDomain, Square};
use domino::shapes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Product formula for the number of domino tilings of an `m × n` block.
fn rectangle_count(m: usize, n: usize) -> f64 {
    let mut p = 1.0;
    for j in 1..=m.div_ceil(2) {
        for k in 1..=n.div_ceil(2) {
            let a = (PI * j as f64 / (m as f64 + 1.0)).cos();
            let b = (PI * k as f64 / (n as f64 + 1.0)).cos();
            p *= 4.0 * a * a + 4.0 * b * b;
        }
    }
    p
}

/// Memoized count over bitmasks of covered squares.
fn count_by_memo(squares: &[Square]) -> u64 {
    fn go(sq: &[Square], index: &BTreeMap<Square, usize>, covered: u64, memo: &mut HashMap<u64, u64>) -> u64 {
        let Some(first) = (0..sq.len()).find(|&i| covered >> i & 1 == 0) else { return 1 };
        if let Some(&c) = memo.get(&covered) {
            return c;
        }
        let s = sq[first];
        let mut total = 0;
        for t in [Square(s.0 + 1, s.1), Square(s.0, s.1 + 1), Square(s.0 - 1, s.1), Square(s.0, s.1 - 1)] {
            if let Some(&j) = index.get(&t) {
                if covered >> j & 1 == 0 {
                    total += go(sq, index, covered | 1 << first | 1 << j, memo);
                }
            }
        }
        memo.insert(covered, total);
        total
    }
    assert!(squares.len() <= 64);
    let index = squares.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    go(squares, &index, 0, &mut HashMap::new())
}

#[test]
fn small_counts() {
    assert_eq!(count_tilings(&shapes::rectangle(2, 2).unwrap()).unwrap(), 2);
    assert_eq!(count_tilings(&shapes::rectangle(2, 4).unwrap()).unwrap(), 5);
    assert_eq!(count_tilings(&shapes::rectangle(1, 1).unwrap()).unwrap(), 0);
    assert_eq!(count_tilings(&shapes::rectangle(3, 3).unwrap()).unwrap(), 0);
    for (n, expected) in [(1, 2), (2, 8), (3, 64)] {
        assert_eq!(count_tilings(&shapes::aztec(n).unwrap()).unwrap(), expected);
    }
}

#[test]
fn rectangle_counts_match_the_product_formula() {
    for (m, n) in [(2, 3), (2, 7), (3, 4), (4, 4), (4, 5), (6, 6)] {
        let count = count_tilings(&shapes::rectangle(m as i32, n as i32).unwrap()).unwrap();
        assert_eq!(count as f64, rectangle_count(m, n).round(), "{m}x{n}");
    }
    assert_eq!(rectangle_count(8, 8).round(), 12_988_816.0);
}

#[test]
fn aztec_counts_are_powers_of_two() {
    assert_eq!(count_tilings(&shapes::aztec(4).unwrap()).unwrap(), 1 << 10);
    assert_eq!(count_by_memo(shapes::aztec(5).unwrap().squares()), 1 << 15);
}

#[test]
fn multiply_connected_counts_match_the_memo_oracle() {
    for d in [
        shapes::annulus(4, 2).unwrap(),
        shapes::annulus(6, 2).unwrap(),
        shapes::annulus(6, 4).unwrap(),
        shapes::modified_aztec(4, None).unwrap(),
    ] {
        assert_eq!(count_tilings(&d).unwrap(), count_by_memo(d.squares()));
    }
}

#[test]
fn annulus_census() {
    let c = census(&shapes::annulus(6, 2).unwrap()).unwrap();
    assert_eq!(c.total, 1444);
    assert_eq!(c.by_height_change, BTreeMap::from([(vec![-4], 1), (vec![0], 1442), (vec![4], 1)]));
    let thin = census(&shapes::annulus(4, 2).unwrap()).unwrap();
    assert_eq!(thin.by_height_change, BTreeMap::from([(vec![-2], 1), (vec![2], 1)]));
}

#[test]
fn census_keys_have_genus_length_and_sum_to_total() {
    for d in [shapes::aztec(3).unwrap(), shapes::annulus(6, 2).unwrap(), shapes::modified_aztec(4, None).unwrap()] {
        let c = census(&d).unwrap();
        assert!(c.by_height_change.keys().all(|r| r.len() == d.genus()));
        assert_eq!(c.by_height_change.values().sum::<u64>(), c.total);
        let (hi, lo) = (c.max_height.unwrap(), c.min_height.unwrap());
        assert!(lo.values.iter().zip(&hi.values).all(|(a, b)| a <= b));
    }
}

#[test]
fn scan_orders_give_the_same_tilings() {
    for d in [shapes::rectangle(4, 4).unwrap(), shapes::aztec(3).unwrap(), shapes::annulus(6, 2).unwrap()] {
        let cols: BTreeSet<Tiling> = enumerate_tilings_with(&d, ScanOrder::ColumnMajor, DEFAULT_CAP).unwrap().collect();
        let rows: Vec<Tiling> = enumerate_tilings_with(&d, ScanOrder::RowMajor, DEFAULT_CAP).unwrap().collect();
        assert_eq!(rows.len(), cols.len());
        assert_eq!(rows.into_iter().collect::<BTreeSet<_>>(), cols);
    }
}

#[test]
fn enumerated_tilings_are_distinct_and_valid() {
    let d = shapes::modified_aztec(4, None).unwrap();
    let all: Vec<Tiling> = enumerate_tilings(&d).unwrap().collect();
    let distinct: BTreeSet<&Tiling> = all.iter().collect();
    assert_eq!(distinct.len(), all.len());
    for t in &all {
        Tiling::from_partners(&d, t.partners().to_vec()).unwrap();
        height_from_tiling(&d, t).unwrap();
    }
}

#[test]
fn the_cap_is_enforced() {
    let d = shapes::aztec(6).unwrap();
    assert_eq!(d.squares().len(), 84);
    assert!(matches!(census(&d), Err(EnumerateError::TooLarge { squares: 84, cap: DEFAULT_CAP })));
    assert!(census_with(&shapes::aztec(3).unwrap(), 10).is_err());
}

#[test]
fn cutting_rule_on_small_domains() {
    let block = shapes::rectangle(2, 4).unwrap();
    let across: Vec<(Square, Square)> = (0..2).map(|x| (Square(x, 1), Square(x, 2))).collect();
    assert!(verify_cutting_rule(&block, &across).unwrap());
    let ring = shapes::annulus(6, 2).unwrap();
    let spoke: Vec<(Square, Square)> = (-3..-1).map(|x| (Square(x, -1), Square(x, 0))).collect();
    assert!(verify_cutting_rule(&ring, &spoke).unwrap());
}

#[test]
fn cutting_rule_rejects_non_edges() {
    let block = shapes::rectangle(2, 4).unwrap();
    assert!(matches!(verify_cutting_rule(&block, &[(Square(0, 0), Square(1, 1))]), Err(EnumerateError::BadCut(..))));
    assert!(matches!(verify_cutting_rule(&block, &[(Square(1, 0), Square(2, 0))]), Err(EnumerateError::BadCut(..))));
}

fn random_cut(d: &LatticeDomain, rng: &mut ChaCha8Rng) -> Vec<(Square, Square)> {
    let pairs: Vec<(Square, Square)> = d
        .squares()
        .iter()
        .flat_map(|&s| [Square(s.0 + 1, s.1), Square(s.0, s.1 + 1)].map(move |t| (s, t)))
        .filter(|&(_, t)| d.contains(t))
        .collect();
    let k = rng.gen_range(1..=8);
    (0..k).map(|_| pairs[rng.gen_range(0..pairs.len())]).collect()
}

#[test]
fn cutting_rule_on_random_cuts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let domains = [
        shapes::rectangle(4, 4).unwrap(),
        shapes::rectangle(3, 6).unwrap(),
        shapes::aztec(3).unwrap(),
        shapes::annulus(6, 2).unwrap(),
        shapes::modified_aztec(4, None).unwrap(),
    ];
    for d in &domains {
        for _ in 0..10 {
            let cut = random_cut(d, &mut rng);
            assert!(verify_cutting_rule(d, &cut).unwrap(), "{cut:?}");
        }
    }
}

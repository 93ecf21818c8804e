use std::collections::BTreeMap;

use domino::enumerate::{census, enumerate_tilings};
use domino::heights::{height_from_tiling, Tiling};
use domino::lattice::LatticeDomain;
use domino::sample::*;
use domino::shapes;

fn start(d: &LatticeDomain, seed: u64) -> MarkovState<'_> {
    MarkovState::new(d, &initial_tiling(d, None).unwrap(), seed, true).unwrap()
}

/// Off-diagonal move counts between tilings, over every flip and rotation
/// proposal in both directions.
fn move_counts(d: &LatticeDomain) -> (Vec<Tiling>, BTreeMap<(usize, usize), u64>) {
    let all: Vec<Tiling> = enumerate_tilings(d).unwrap().collect();
    let index: BTreeMap<&Tiling, usize> = all.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut counts = BTreeMap::new();
    for (a, t) in all.iter().enumerate() {
        let base = MarkovState::new(d, t, 0, true).unwrap();
        for dir in [Direction::Raise, Direction::Lower] {
            for v in 0..d.vertices().len() {
                let mut s = base.clone();
                if s.flip_move(v, dir) {
                    *counts.entry((a, index[&s.tiling()])).or_insert(0) += 1;
                }
            }
            for b in 0..base.bands().len() {
                let mut s = base.clone();
                if s.rotation_move(b, dir) {
                    *counts.entry((a, index[&s.tiling()])).or_insert(0) += 1;
                }
            }
        }
    }
    (all, counts)
}

fn total_variation(counts: &BTreeMap<usize, u64>, states: usize, samples: u64) -> f64 {
    let u = 1.0 / states as f64;
    let seen: f64 = counts.values().map(|&c| (c as f64 / samples as f64 - u).abs()).sum();
    0.5 * (seen + (states - counts.len()) as f64 * u)
}

#[test]
fn flips_are_involutions() {
    let d = shapes::aztec(4).unwrap();
    let mut s = start(&d, 3);
    s.run(5000).unwrap();
    for v in 0..d.vertices().len() {
        for (there, back) in [(Direction::Raise, Direction::Lower), (Direction::Lower, Direction::Raise)] {
            let before = s.clone();
            if s.flip_move(v, there) {
                assert_ne!(s.tiling(), before.tiling());
                assert!(!s.flip_move(v, there));
                assert!(s.flip_move(v, back));
                assert_eq!(s.tiling(), before.tiling());
                assert_eq!(s.heights(), before.heights());
            }
        }
    }
}

#[test]
fn rotations_are_involutions_and_shift_the_height_change() {
    let d = shapes::annulus(4, 2).unwrap();
    let mut s = start(&d, 1);
    assert!(!s.bands().is_empty());
    let r0 = s.height_change();
    let dir = if r0[0] > 0 { Direction::Lower } else { Direction::Raise };
    assert!(s.rotation_move(0, dir));
    s.check_mirror().unwrap();
    assert_eq!((s.height_change()[0] - r0[0]).abs(), 4);
    let back = if dir == Direction::Raise { Direction::Lower } else { Direction::Raise };
    assert!(s.rotation_move(0, back));
    assert_eq!(s.height_change(), r0);
}

#[test]
fn height_mirror_matches_recomputation() {
    for d in [shapes::annulus(8, 2).unwrap(), shapes::modified_aztec(8, None).unwrap()] {
        let mut s = start(&d, 11);
        s.check_every = Some(997);
        s.run(1_000_000).unwrap();
        s.check_mirror().unwrap();
    }
}

#[test]
fn move_graph_is_symmetric() {
    for d in [shapes::annulus(4, 2).unwrap(), shapes::annulus(6, 2).unwrap(), shapes::modified_aztec(4, None).unwrap()] {
        let (_, counts) = move_counts(&d);
        assert!(!counts.is_empty());
        for (&(a, b), &c) in &counts {
            assert_ne!(a, b);
            assert_eq!(counts.get(&(b, a)), Some(&c), "{a} -> {b}");
        }
    }
}

#[test]
fn uniform_measure_is_stationary() {
    let d = shapes::annulus(6, 2).unwrap();
    let (all, counts) = move_counts(&d);
    let k = start(&d, 0).proposal_count() as f64;
    let mut inflow = vec![0.0; all.len()];
    let mut outflow = vec![0.0; all.len()];
    for (&(a, b), &c) in &counts {
        inflow[b] += c as f64 / k;
        outflow[a] += c as f64 / k;
    }
    for (i, o) in inflow.iter().zip(&outflow) {
        assert!((i - o).abs() < 1e-12);
        assert!(*o <= 1.0);
    }
}

#[test]
fn empirical_distribution_is_close_to_uniform() {
    let d = shapes::annulus(6, 2).unwrap();
    let all: Vec<Tiling> = enumerate_tilings(&d).unwrap().collect();
    let index: BTreeMap<&Tiling, usize> = all.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut cfg = SampleConfig::new(300_000, 5);
    cfg.thinning = Some(4 * d.squares().len() as u64);
    let mut counts = BTreeMap::new();
    run_chain(&d, &cfg, |s| *counts.entry(index[&s.tiling()]).or_insert(0u64) += 1).unwrap();
    let tv = total_variation(&counts, all.len(), cfg.n_samples);
    assert!(tv < 0.05, "TV {tv}");
}

#[test]
fn height_change_histogram_matches_the_census() {
    let d = shapes::modified_aztec(4, None).unwrap();
    let c = census(&d).unwrap();
    let mut cfg = SampleConfig::new(100_000, 9);
    cfg.scale = 4.0;
    let field = sample_uniform(&d, &cfg).unwrap();
    let tv: f64 = c
        .by_height_change
        .iter()
        .map(|(r, &n)| (n as f64 / c.total as f64 - *field.r_histogram.get(r).unwrap_or(&0) as f64 / 1e5).abs())
        .sum::<f64>()
        * 0.5;
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn fixed_height_change_stays_in_its_fiber() {
    let d = shapes::annulus(6, 2).unwrap();
    for r in [-4, 0, 4] {
        let mut cfg = SampleConfig::new(200, 2);
        cfg.fixed_r = Some(vec![r]);
        let field = sample_uniform(&d, &cfg).unwrap();
        assert_eq!(field.r_histogram, BTreeMap::from([(vec![r], 200)]));
    }
}

#[test]
fn fiber_errors() {
    let d = shapes::annulus(6, 2).unwrap();
    assert!(matches!(initial_tiling(&d, Some(&[40])), Err(SampleError::EmptyFiber(r)) if r == vec![40]));
    assert!(matches!(initial_tiling(&d, Some(&[0, 0])), Err(SampleError::BadHeightChange(_))));
    let odd = shapes::rectangle(3, 3).unwrap();
    assert_eq!(initial_tiling(&odd, None).unwrap_err(), SampleError::NotTileable);
}

#[test]
fn initial_tiling_is_maximal() {
    let d = shapes::annulus(6, 2).unwrap();
    let top = census(&d).unwrap().max_height.unwrap();
    let h = height_from_tiling(&d, &initial_tiling(&d, None).unwrap()).unwrap();
    assert_eq!(h, top);
}

#[test]
fn chains_are_reproducible() {
    let d = shapes::aztec(6).unwrap();
    let mut cfg = SampleConfig::new(50, 42);
    cfg.scale = 6.0;
    let (a, b) = (sample_uniform(&d, &cfg).unwrap(), sample_uniform(&d, &cfg).unwrap());
    assert_eq!(a, b);
    cfg.seed = 43;
    assert_ne!(sample_uniform(&d, &cfg).unwrap().sum, a.sum);
}

#[test]
fn field_statistics_and_merge() {
    let mut a = EmpiricalField::new(2, 2.0);
    a.record(&[2, 4], vec![4]);
    a.record(&[6, 4], vec![0]);
    assert_eq!(a.mean().unwrap(), vec![2.0, 2.0]);
    assert_eq!(a.variance().unwrap(), vec![1.0, 0.0]);
    assert_eq!(a.mean_height_change().unwrap(), vec![2.0]);
    let mut b = EmpiricalField::new(2, 2.0);
    assert!(b.mean().is_none());
    b.merge(&a);
    b.merge(&a);
    assert_eq!(b.n_samples, 4);
    assert_eq!(b.mean(), a.mean());
    assert_eq!(b.r_histogram[&vec![4]], 2);
}

#[test]
fn concentration_scan_reports_each_size() {
    let table = concentration_scan(|n| shapes::aztec(n as i32).unwrap(), &[4, 8], 0.25, 50, 3).unwrap();
    assert_eq!(table.rows.iter().map(|r| (r.n, r.samples)).collect::<Vec<_>>(), vec![(4, 50), (8, 50)]);
    assert!(table.rows.iter().all(|r| (0.0..=1.0).contains(&r.tail)));
}

#[test]
fn bands_enclose_the_hole() {
    let d = shapes::annulus(8, 2).unwrap();
    let bands = hole_bands(&d, 1, DEFAULT_RINGS);
    assert_eq!(bands.len(), 3);
    for (k, b) in bands.iter().enumerate() {
        assert_eq!(b.hole, 1);
        assert_eq!(b.squares.len(), 8 * k + 12);
    }
}

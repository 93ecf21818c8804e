//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use domino::lattice::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn block(x0: i32, y0: i32, w: i32, h: i32) -> Vec<Square> {
    (x0..x0 + w).flat_map(|x| (y0..y0 + h).map(move |y| Square(x, y))).collect()
}

pub fn without(squares: Vec<Square>, holes: &[Square]) -> Vec<Square> {
    squares.into_iter().filter(|s| !holes.contains(s)).collect()
}

/// Holes counted by flood-filling the complement inside a padded box.
pub fn flood_fill_holes(squares: &[Square]) -> Vec<Vec<Square>> {
    let set: BTreeSet<Square> = squares.iter().copied().collect();
    let (x0, x1) = (squares.iter().map(|s| s.0).min().unwrap() - 1, squares.iter().map(|s| s.0).max().unwrap() + 1);
    let (y0, y1) = (squares.iter().map(|s| s.1).min().unwrap() - 1, squares.iter().map(|s| s.1).max().unwrap() + 1);
    let mut seen = BTreeSet::new();
    let mut regions = Vec::new();
    for x in x0..=x1 {
        for y in y0..=y1 {
            let s = Square(x, y);
            if set.contains(&s) || seen.contains(&s) {
                continue;
            }
            let mut region = vec![];
            let mut outside = false;
            let mut queue = VecDeque::from([s]);
            seen.insert(s);
            while let Some(c) = queue.pop_front() {
                region.push(c);
                outside |= c.0 == x0 || c.0 == x1 || c.1 == y0 || c.1 == y1;
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let n = Square(c.0 + dx, c.1 + dy);
                    if n.0 >= x0 && n.0 <= x1 && n.1 >= y0 && n.1 <= y1 && !set.contains(&n) && seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
            if !outside {
                regions.push(region);
            }
        }
    }
    regions
}

pub fn colour_excess(squares: &[Square]) -> i64 {
    squares.iter().map(|s| if (s.0 + s.1) % 2 == 0 { 1 } else { -1 }).sum()
}

/// A 12×12 block with up to four separated rectangular holes.
pub fn random_domain(rng: &mut ChaCha8Rng) -> LatticeDomain {
    let mut holes: Vec<Square> = Vec::new();
    let slots = [(1, 1), (7, 1), (1, 7), (7, 7)];
    let count = rng.gen_range(1..=4);
    for &(x, y) in slots.iter().take(count) {
        let (w, h) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        holes.extend(block(x + rng.gen_range(0..=3 - w), y + rng.gen_range(0..=3 - h), w, h));
    }
    LatticeDomain::new(without(block(0, 0, 12, 12), &holes)).unwrap()
}

/// Random walk of `len` steps, closed by a shortest path back to the start.
pub fn random_loop(domain: &LatticeDomain, rng: &mut ChaCha8Rng, len: usize) -> Vec<Vertex> {
    let verts = domain.vertices();
    let start = verts[rng.gen_range(0..verts.len())];
    let mut walk = vec![start];
    for _ in 0..len {
        let here = *walk.last().unwrap();
        let steps: Vec<Vertex> = Dir::ALL.iter().map(|&d| here.step(d)).filter(|&n| domain.halfedge(here, n).is_some()).collect();
        walk.push(steps[rng.gen_range(0..steps.len())]);
    }
    let end = *walk.last().unwrap();
    let mut prev = std::collections::BTreeMap::from([(end, end)]);
    let mut queue = VecDeque::from([end]);
    while let Some(v) = queue.pop_front() {
        if v == start {
            break;
        }
        for d in Dir::ALL {
            let n = v.step(d);
            if domain.halfedge(v, n).is_some() && !prev.contains_key(&n) {
                prev.insert(n, v);
                queue.push_back(n);
            }
        }
    }
    let mut back = vec![start];
    while *back.last().unwrap() != end {
        back.push(prev[back.last().unwrap()]);
    }
    back.reverse();
    walk.extend(back.into_iter().skip(1));
    walk
}

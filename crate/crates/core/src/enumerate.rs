//! Exhaustive enumeration of tilings of small domains.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::heights::{height_from_tiling, pointwise_max, pointwise_min, HeightError, HeightFunction, Tiling};
use crate::lattice::{Dir, LatticeDomain, LatticeError, Square};

pub const DEFAULT_CAP: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("domain has {squares} squares, above the cap of {cap}")]
    TooLarge { squares: usize, cap: usize },
    #[error("cut edge {0} - {1} does not join two domain squares")]
    BadCut(Square, Square),
    #[error(transparent)]
    Height(#[from] HeightError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Order in which the first uncovered square is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanOrder {
    /// By `x`, then `y`.
    ColumnMajor,
    /// By `y`, then `x`.
    RowMajor,
}

/// Depth-first stream of tilings of a set of squares.
///
/// At each step the first uncovered square in scan order is paired with its
/// right neighbour, then with its upper neighbour; every earlier square is
/// already covered, so these are the only options.
pub struct TilingIter<'a> {
    domain: &'a LatticeDomain,
    order: Vec<usize>,
    rank: Vec<usize>,
    partner: Vec<u32>,
    /// Per placed domino: the square it starts at and the option taken.
    stack: Vec<(usize, u8)>,
    forbidden: Option<&'a BTreeSet<(usize, usize)>>,
    started: bool,
    done: bool,
}

const FREE: u32 = u32::MAX;

impl<'a> TilingIter<'a> {
    fn new(domain: &'a LatticeDomain, order: ScanOrder, forbidden: Option<&'a BTreeSet<(usize, usize)>>) -> Self {
        let sq = domain.squares();
        let mut idx: Vec<usize> = (0..sq.len()).collect();
        if order == ScanOrder::RowMajor {
            idx.sort_by_key(|&i| (sq[i].1, sq[i].0));
        }
        let mut rank = vec![0; sq.len()];
        for (r, &i) in idx.iter().enumerate() {
            rank[i] = r;
        }
        let done = sq.len() % 2 == 1;
        TilingIter { domain, order: idx, rank, partner: vec![FREE; sq.len()], stack: Vec::new(), forbidden, started: false, done }
    }

    fn first_free(&self, from: usize) -> Option<usize> {
        (from..self.order.len()).find(|&r| self.partner[self.order[r]] == FREE)
    }

    fn option(&self, s: usize, k: u8) -> Option<usize> {
        let d = if k == 0 { Dir::East } else { Dir::North };
        let t = self.domain.square_id(self.domain.squares()[s].step(d))?;
        if self.partner[t] != FREE || self.rank[t] < self.rank[s] {
            return None;
        }
        if let Some(f) = self.forbidden {
            if f.contains(&(s.min(t), s.max(t))) {
                return None;
            }
        }
        Some(t)
    }

    /// Places the first available option `≥ k` at `s`.
    fn place(&mut self, s: usize, mut k: u8) -> bool {
        while k < 2 {
            if let Some(t) = self.option(s, k) {
                self.partner[s] = t as u32;
                self.partner[t] = s as u32;
                self.stack.push((s, k));
                return true;
            }
            k += 1;
        }
        false
    }

    /// Extends the partial tiling greedily, backtracking on dead ends.
    fn descend(&mut self) -> bool {
        loop {
            let from = self.stack.last().map_or(0, |&(s, _)| self.rank[s]);
            let Some(r) = self.first_free(from) else { return true };
            let s = self.order[r];
            if !self.place(s, 0) && !self.backtrack() {
                return false;
            }
        }
    }

    /// Advances the deepest domino to its next option, popping exhausted ones.
    fn backtrack(&mut self) -> bool {
        while let Some((s, k)) = self.stack.pop() {
            let t = self.partner[s] as usize;
            self.partner[s] = FREE;
            self.partner[t] = FREE;
            if self.place(s, k + 1) {
                return true;
            }
        }
        false
    }
}

impl Iterator for TilingIter<'_> {
    type Item = Tiling;

    fn next(&mut self) -> Option<Tiling> {
        if self.done {
            return None;
        }
        let ok = if self.started { self.backtrack() && self.descend() } else { self.descend() };
        self.started = true;
        if !ok || self.partner.is_empty() {
            self.done = true;
            return None;
        }
        Some(Tiling::from_partners_unchecked(self.partner.clone()))
    }
}

fn check_cap(domain: &LatticeDomain, cap: usize) -> Result<(), EnumerateError> {
    let squares = domain.squares().len();
    if squares > cap {
        return Err(EnumerateError::TooLarge { squares, cap });
    }
    Ok(())
}

/// Every tiling exactly once, in column-major backtracking order.
pub fn enumerate_tilings(domain: &LatticeDomain) -> Result<TilingIter<'_>, EnumerateError> {
    enumerate_tilings_with(domain, ScanOrder::ColumnMajor, DEFAULT_CAP)
}

pub fn enumerate_tilings_with(domain: &LatticeDomain, order: ScanOrder, cap: usize) -> Result<TilingIter<'_>, EnumerateError> {
    check_cap(domain, cap)?;
    Ok(TilingIter::new(domain, order, None))
}

pub fn count_tilings(domain: &LatticeDomain) -> Result<u64, EnumerateError> {
    Ok(enumerate_tilings(domain)?.count() as u64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TilingCensus {
    pub total: u64,
    pub by_height_change: BTreeMap<Vec<i64>, u64>,
    #[serde(skip)]
    pub max_height: Option<HeightFunction>,
    #[serde(skip)]
    pub min_height: Option<HeightFunction>,
}

pub fn census(domain: &LatticeDomain) -> Result<TilingCensus, EnumerateError> {
    census_with(domain, DEFAULT_CAP)
}

pub fn census_with(domain: &LatticeDomain, cap: usize) -> Result<TilingCensus, EnumerateError> {
    let mut total = 0;
    let mut by_height_change = BTreeMap::new();
    let mut max_height: Option<HeightFunction> = None;
    let mut min_height: Option<HeightFunction> = None;
    for t in enumerate_tilings_with(domain, ScanOrder::ColumnMajor, cap)? {
        let h = height_from_tiling(domain, &t)?;
        total += 1;
        *by_height_change.entry(h.height_change.clone()).or_insert(0) += 1;
        max_height = Some(match max_height {
            None => h.clone(),
            Some(m) => pointwise_max(domain, &m, &h)?,
        });
        min_height = Some(match min_height {
            None => h,
            Some(m) => pointwise_min(domain, &m, &h)?,
        });
    }
    Ok(TilingCensus { total, by_height_change, max_height, min_height })
}

/// Number of tilings of `squares` using no domino across a forbidden pair.
fn count_restricted(squares: &[Square], forbidden: &BTreeSet<(Square, Square)>) -> Result<u64, EnumerateError> {
    if squares.is_empty() {
        return Ok(1);
    }
    let domain = LatticeDomain::new(squares.iter().copied())?;
    let ids: BTreeSet<(usize, usize)> = forbidden
        .iter()
        .filter_map(|&(a, b)| {
            let (i, j) = (domain.square_id(a)?, domain.square_id(b)?);
            Some((i.min(j), i.max(j)))
        })
        .collect();
    Ok(TilingIter::new(&domain, ScanOrder::ColumnMajor, Some(&ids)).count() as u64)
}

/// Edge-connected components of a square set, ignoring adjacency across
/// the forbidden pairs.
fn components(squares: &BTreeSet<Square>, forbidden: &BTreeSet<(Square, Square)>) -> Vec<Vec<Square>> {
    let mut left = squares.clone();
    let mut out = Vec::new();
    while let Some(&start) = left.iter().next() {
        left.remove(&start);
        let mut comp = vec![start];
        let mut k = 0;
        while k < comp.len() {
            let s = comp[k];
            k += 1;
            for d in Dir::ALL {
                let t = s.step(d);
                let key = (s.min(t), s.max(t));
                if !forbidden.contains(&key) && left.remove(&t) {
                    comp.push(t);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Checks the cutting identity along a set of crossed square pairs: the
/// tiling count equals the sum, over admissible sets of dominoes straddling
/// the cut, of the products of the counts of the remaining pieces.
pub fn verify_cutting_rule(domain: &LatticeDomain, cut_path: &[(Square, Square)]) -> Result<bool, EnumerateError> {
    check_cap(domain, DEFAULT_CAP)?;
    let mut rho: BTreeSet<(Square, Square)> = BTreeSet::new();
    for &(a, b) in cut_path {
        let adjacent = (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1;
        if !adjacent || !domain.contains(a) || !domain.contains(b) {
            return Err(EnumerateError::BadCut(a, b));
        }
        rho.insert((a.min(b), a.max(b)));
    }
    let total = count_tilings(domain)?;
    let rho: Vec<(Square, Square)> = rho.into_iter().collect();
    let forbidden: BTreeSet<(Square, Square)> = rho.iter().copied().collect();
    let all: BTreeSet<Square> = domain.squares().iter().copied().collect();
    let mut sum = 0u64;
    for mask in 0u64..(1u64 << rho.len()) {
        let mut used = BTreeSet::new();
        let admissible = (0..rho.len()).filter(|&k| mask >> k & 1 == 1).all(|k| used.insert(rho[k].0) & used.insert(rho[k].1));
        if !admissible {
            continue;
        }
        let rest: BTreeSet<Square> = all.difference(&used).copied().collect();
        let mut product = 1u64;
        for comp in components(&rest, &forbidden) {
            product *= count_restricted(&comp, &forbidden)?;
            if product == 0 {
                break;
            }
        }
        sum += product;
    }
    Ok(sum == total)
}

//! Tilings and their multivalued height functions.
//!
//! Heights are stored on the fundamental domain: for every half-edge `h`
//! from `u` to `v`,
//!
//! ```text
//! values[v] − values[u] = incr(h) − jump(h)
//! ```
//!
//! where `incr(h)` is `Δ_h` if no domino crosses the edge and `−3Δ_h`
//! otherwise, and `jump(h)` is the monodromy picked up when `h` crosses a
//! cut. The value at a cover point `(v, deck)` is `values[v] + deck · m`.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CoverPoint, Dir, HalfEdge, LatticeDomain, MonodromyVector, Square, Vertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeightError {
    #[error("invalid tiling: {0}")]
    InvalidTiling(String),
    #[error("tiling integrates inconsistently around edge {0} -> {1}")]
    InconsistentTiling(Vertex, Vertex),
    #[error("not a height function: violated at square {0}")]
    NotAHeightFunction(Square),
    #[error("height functions are not compatible: {0}")]
    IncompatibleHeights(String),
    #[error("{0} is not a vertex of the domain")]
    UnknownVertex(Vertex),
    #[error("value {value} at {vertex} is in the wrong class mod 4")]
    WrongClass { vertex: Vertex, value: i64 },
    #[error("boundary data not extendable: value at {x} exceeds the bound from {y}")]
    NotExtendable { x: Vertex, y: Vertex },
    #[error("no height function exists on this domain")]
    NotTileable,
}

/// A perfect matching of the domain's squares by adjacent pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tiling {
    partner: Vec<u32>,
}

impl Tiling {
    /// Builds a tiling from its partner array, checking adjacency and symmetry.
    pub fn from_partners(domain: &LatticeDomain, partner: Vec<u32>) -> Result<Self, HeightError> {
        let sq = domain.squares();
        if partner.len() != sq.len() {
            return Err(HeightError::InvalidTiling("partner array has the wrong length".into()));
        }
        for (i, &p) in partner.iter().enumerate() {
            let p = p as usize;
            if p >= sq.len() || partner[p] as usize != i {
                return Err(HeightError::InvalidTiling(format!("square {} is not matched", sq[i])));
            }
            let (a, b) = (sq[i], sq[p]);
            if (a.0 - b.0).abs() + (a.1 - b.1).abs() != 1 {
                return Err(HeightError::InvalidTiling(format!("{a} and {b} are not adjacent")));
            }
        }
        Ok(Tiling { partner })
    }

    pub fn from_dominoes(domain: &LatticeDomain, dominoes: &[[Square; 2]]) -> Result<Self, HeightError> {
        let mut partner = vec![u32::MAX; domain.squares().len()];
        for &[a, b] in dominoes {
            let ia = domain.square_id(a).ok_or_else(|| HeightError::InvalidTiling(format!("{a} outside domain")))?;
            let ib = domain.square_id(b).ok_or_else(|| HeightError::InvalidTiling(format!("{b} outside domain")))?;
            if partner[ia] != u32::MAX || partner[ib] != u32::MAX {
                return Err(HeightError::InvalidTiling(format!("{a} or {b} covered twice")));
            }
            partner[ia] = ib as u32;
            partner[ib] = ia as u32;
        }
        Self::from_partners(domain, partner)
    }

    pub(crate) fn from_partners_unchecked(partner: Vec<u32>) -> Self {
        Tiling { partner }
    }

    pub fn partner(&self, s: usize) -> usize {
        self.partner[s] as usize
    }

    pub fn partners(&self) -> &[u32] {
        &self.partner
    }

    /// Dominoes as sorted square pairs, in sorted order.
    pub fn dominoes(&self, domain: &LatticeDomain) -> Vec<[Square; 2]> {
        let sq = domain.squares();
        (0..sq.len()).filter(|&i| i < self.partner(i)).map(|i| [sq[i], sq[self.partner(i)]]).collect()
    }

    /// Whether a domino crosses edge `e`.
    pub fn crosses(&self, domain: &LatticeDomain, e: usize) -> bool {
        let ed = &domain.edges()[e];
        match (ed.left, ed.right) {
            (Some(l), Some(r)) => self.partner(l) == r,
            _ => false,
        }
    }

    /// Height increment along `h`.
    pub fn increment(&self, domain: &LatticeDomain, h: HalfEdge) -> i64 {
        let d = domain.delta(h);
        if self.crosses(domain, h.edge) {
            -3 * d
        } else {
            d
        }
    }
}

/// A tiling found by bipartite matching, or `None` if the domain has none.
pub fn find_tiling(domain: &LatticeDomain) -> Option<Tiling> {
    let sq = domain.squares();
    let (b, w) = domain.black_white();
    if b != w {
        return None;
    }
    let n = sq.len();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| Dir::ALL.iter().filter_map(|&d| domain.square_id(sq[i].step(d))).collect()).collect();
    let blacks: Vec<usize> = (0..n).filter(|&i| sq[i].is_black()).collect();
    let mut mate = vec![usize::MAX; n];
    // Hopcroft-Karp layering from free black squares
    let mut layer = vec![u32::MAX; n];
    loop {
        let mut queue = VecDeque::new();
        for &u in &blacks {
            if mate[u] == usize::MAX {
                layer[u] = 0;
                queue.push_back(u);
            } else {
                layer[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let m = mate[v];
                if m == usize::MAX {
                    found = true;
                } else if layer[m] == u32::MAX {
                    layer[m] = layer[u] + 1;
                    queue.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        let mut progress = false;
        let mut next = vec![0usize; n];
        for &root in &blacks {
            if mate[root] != usize::MAX {
                continue;
            }
            // iterative augmenting DFS along the layers
            let mut stack = vec![root];
            let mut path: Vec<(usize, usize)> = Vec::new();
            while let Some(&u) = stack.last() {
                if next[u] >= adj[u].len() {
                    layer[u] = u32::MAX;
                    stack.pop();
                    path.pop();
                    continue;
                }
                let v = adj[u][next[u]];
                next[u] += 1;
                let m = mate[v];
                if m == usize::MAX {
                    path.push((u, v));
                    for &(a, b) in &path {
                        mate[a] = b;
                        mate[b] = a;
                    }
                    progress = true;
                    break;
                } else if layer[m] == layer[u] + 1 {
                    path.push((u, v));
                    stack.push(m);
                }
            }
        }
        if !progress {
            break;
        }
    }
    if mate.contains(&usize::MAX) {
        return None;
    }
    Some(Tiling::from_partners_unchecked(mate.into_iter().map(|m| m as u32).collect()))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeightFunction {
    /// Values on the fundamental domain, indexed by vertex.
    pub values: Vec<i64>,
    pub monodromy: MonodromyVector,
    /// `R[i]`: value at the reference point of hole `i + 1`, relative to `p_0`.
    pub height_change: Vec<i64>,
}

impl HeightFunction {
    fn from_values(domain: &LatticeDomain, values: Vec<i64>) -> Self {
        let base = values[domain.vertex_id(domain.reference_point(0)).unwrap()];
        let height_change = (1..=domain.genus()).map(|i| values[domain.vertex_id(domain.reference_point(i)).unwrap()] - base).collect();
        HeightFunction { values, monodromy: domain.monodromy().clone(), height_change }
    }

    pub fn value(&self, domain: &LatticeDomain, v: Vertex) -> Option<i64> {
        domain.vertex_id(v).map(|i| self.values[i])
    }

    pub fn value_at(&self, domain: &LatticeDomain, p: &CoverPoint) -> Option<i64> {
        Some(self.value(domain, p.vertex)? + self.monodromy.pair(&p.deck))
    }

    /// Whether the value at `p_0` is zero.
    pub fn has_base(&self, domain: &LatticeDomain) -> bool {
        self.values[domain.vertex_id(domain.reference_point(0)).unwrap()] == 0
    }

    /// Same height function shifted by a constant.
    pub fn shifted(&self, domain: &LatticeDomain, c: i64) -> Self {
        Self::from_values(domain, self.values.iter().map(|v| v + c).collect())
    }

    pub fn record(&self, domain: &LatticeDomain) -> HeightRecord {
        HeightRecord {
            values: domain.vertices().iter().copied().zip(self.values.iter().copied()).collect(),
            monodromy: self.monodromy.0.clone(),
            height_change: self.height_change.clone(),
        }
    }
}

/// Serialized form: sorted `[vertex, value]` pairs plus `m` and `R`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightRecord {
    pub values: Vec<(Vertex, i64)>,
    pub monodromy: Vec<i64>,
    pub height_change: Vec<i64>,
}

/// Integrates the local rule from `p_0 = 0` over the cut-open domain and
/// checks every edge against it.
pub fn height_from_tiling(domain: &LatticeDomain, tiling: &Tiling) -> Result<HeightFunction, HeightError> {
    if tiling.partners().len() != domain.squares().len() {
        return Err(HeightError::InvalidTiling("tiling belongs to another domain".into()));
    }
    let cuts = domain.cuts();
    let m = domain.monodromy();
    let n = domain.vertices().len();
    let p0 = domain.vertex_id(domain.reference_point(0)).unwrap();
    let mut values = vec![i64::MIN; n];
    values[p0] = 0;
    let mut queue = VecDeque::from([p0]);
    while let Some(u) = queue.pop_front() {
        for d in Dir::ALL {
            let Some(h) = domain.halfedge_at(u, d) else { continue };
            if cuts.is_cut(h.edge) {
                continue;
            }
            let v = domain.head(h);
            if values[v] == i64::MIN {
                values[v] = values[u] + tiling.increment(domain, h);
                queue.push_back(v);
            }
        }
    }
    for (e, ed) in domain.edges().iter().enumerate() {
        let h = HalfEdge { edge: e, forward: true };
        if values[ed.head] - values[ed.tail] != tiling.increment(domain, h) - cuts.jump(h, m) {
            let vs = domain.vertices();
            return Err(HeightError::InconsistentTiling(vs[ed.tail], vs[ed.head]));
        }
    }
    Ok(HeightFunction::from_values(domain, values))
}

/// True increment of `h` under the stored values.
fn stored_increment(domain: &LatticeDomain, values: &[i64], h: HalfEdge) -> i64 {
    values[domain.head(h)] - values[domain.tail(h)] + domain.cuts().jump(h, domain.monodromy())
}

/// Recovers the tiling whose crossed edges are the `−3Δ` edges of `h`.
pub fn tiling_from_height(domain: &LatticeDomain, h: &HeightFunction) -> Result<Tiling, HeightError> {
    if h.values.len() != domain.vertices().len() || h.monodromy != *domain.monodromy() {
        return Err(HeightError::IncompatibleHeights("height belongs to another domain".into()));
    }
    let sq = domain.squares();
    let edges = domain.edges();
    let mut partner = vec![u32::MAX; sq.len()];
    for (s, &square) in sq.iter().enumerate() {
        let mut crossed = None;
        for e in domain.square_edges(s) {
            let fwd = HalfEdge { edge: e, forward: true };
            let d = domain.delta(fwd);
            let inc = stored_increment(domain, &h.values, fwd);
            if inc == d {
                continue;
            }
            if inc != -3 * d || crossed.is_some() || edges[e].is_boundary() {
                return Err(HeightError::NotAHeightFunction(square));
            }
            crossed = Some(e);
        }
        let Some(e) = crossed else { return Err(HeightError::NotAHeightFunction(square)) };
        let ed = &edges[e];
        let other = if ed.left == Some(s) { ed.right } else { ed.left };
        partner[s] = other.unwrap() as u32;
    }
    Ok(Tiling::from_partners_unchecked(partner))
}

/// Checks all height-function invariants except the base-point convention.
pub fn validate(domain: &LatticeDomain, h: &HeightFunction) -> Result<(), HeightError> {
    tiling_from_height(domain, h).map(|_| ())
}

fn check_compatible(domain: &LatticeDomain, h1: &HeightFunction, h2: &HeightFunction) -> Result<(), HeightError> {
    if h1.values.len() != h2.values.len() || h1.monodromy != h2.monodromy {
        return Err(HeightError::IncompatibleHeights("different domains or monodromy".into()));
    }
    let p0 = domain.vertex_id(domain.reference_point(0)).unwrap();
    if (h1.values[p0] - h2.values[p0]).rem_euclid(4) != 0 {
        return Err(HeightError::IncompatibleHeights("values at p0 differ mod 4".into()));
    }
    Ok(())
}

pub fn pointwise_max(domain: &LatticeDomain, h1: &HeightFunction, h2: &HeightFunction) -> Result<HeightFunction, HeightError> {
    check_compatible(domain, h1, h2)?;
    let values = h1.values.iter().zip(&h2.values).map(|(a, b)| *a.max(b)).collect();
    Ok(HeightFunction::from_values(domain, values))
}

pub fn pointwise_min(domain: &LatticeDomain, h1: &HeightFunction, h2: &HeightFunction) -> Result<HeightFunction, HeightError> {
    check_compatible(domain, h1, h2)?;
    let values = h1.values.iter().zip(&h2.values).map(|(a, b)| *a.min(b)).collect();
    Ok(HeightFunction::from_values(domain, values))
}

pub fn mod4_check(h1: &HeightFunction, h2: &HeightFunction) -> bool {
    h1.values.len() == h2.values.len() && h1.values.iter().zip(&h2.values).all(|(a, b)| (a - b).rem_euclid(4) == 0)
}

/// Residue mod 4 shared by all height functions with `H(p_0) ≡ 0`.
pub fn height_class(domain: &LatticeDomain) -> Vec<u8> {
    let n = domain.vertices().len();
    let p0 = domain.vertex_id(domain.reference_point(0)).unwrap();
    let mut class = vec![u8::MAX; n];
    class[p0] = 0;
    let mut queue = VecDeque::from([p0]);
    while let Some(u) = queue.pop_front() {
        for d in Dir::ALL {
            let Some(h) = domain.halfedge_at(u, d) else { continue };
            let v = domain.head(h);
            if class[v] == u8::MAX {
                class[v] = (class[u] as i64 + domain.delta(h)).rem_euclid(4) as u8;
                queue.push_back(v);
            }
        }
    }
    class
}

/// Difference constraints `values[v] − values[u] ≤ w` characterizing height
/// functions on the fundamental domain, in compressed adjacency form.
#[derive(Clone, Debug)]
pub struct ConstraintGraph {
    start: Vec<usize>,
    target: Vec<usize>,
    weight: Vec<i64>,
}

impl ConstraintGraph {
    /// Black-left half-edges with weight `1 − jump`, plus both directions of
    /// every boundary edge, whose increment is forced.
    pub fn new(domain: &LatticeDomain) -> Self {
        Self::build(domain, true, false)
    }

    /// Only black-left half-edges: the cover-corrected `β` metric.
    pub fn beta(domain: &LatticeDomain) -> Self {
        Self::build(domain, false, false)
    }

    pub fn reversed(domain: &LatticeDomain) -> Self {
        Self::build(domain, true, true)
    }

    fn build(domain: &LatticeDomain, boundary: bool, reverse: bool) -> Self {
        let n = domain.vertices().len();
        let cuts = domain.cuts();
        let m = domain.monodromy();
        let mut arcs: Vec<(usize, usize, i64)> = Vec::new();
        for (e, ed) in domain.edges().iter().enumerate() {
            for forward in [true, false] {
                let h = HalfEdge { edge: e, forward };
                let d = domain.delta(h);
                if d > 0 || (boundary && ed.is_boundary()) {
                    let (u, v) = (domain.tail(h), domain.head(h));
                    let w = d - cuts.jump(h, m);
                    if reverse {
                        arcs.push((v, u, w));
                    } else {
                        arcs.push((u, v, w));
                    }
                }
            }
        }
        arcs.sort_unstable();
        let mut start = vec![0; n + 1];
        for &(u, _, _) in &arcs {
            start[u + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        ConstraintGraph { start, target: arcs.iter().map(|a| a.1).collect(), weight: arcs.iter().map(|a| a.2).collect() }
    }

    /// Multi-source shortest paths. Returns distances and the source that
    /// attains each, or `None` on a negative cycle.
    pub fn shortest_paths(&self, sources: &[(usize, i64)]) -> Option<(Vec<i64>, Vec<usize>)> {
        let n = self.start.len() - 1;
        let mut dist = vec![i64::MAX; n];
        let mut from = vec![usize::MAX; n];
        let mut in_queue = vec![false; n];
        let mut relax = vec![0u32; n];
        let mut queue = VecDeque::new();
        for &(s, v) in sources {
            if v < dist[s] {
                dist[s] = v;
                from[s] = s;
            }
            if !in_queue[s] {
                in_queue[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for k in self.start[u]..self.start[u + 1] {
                let v = self.target[k];
                let nd = dist[u] + self.weight[k];
                if nd < dist[v] {
                    dist[v] = nd;
                    from[v] = from[u];
                    relax[v] += 1;
                    if relax[v] as usize > n {
                        return None;
                    }
                    if !in_queue[v] {
                        in_queue[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        Some((dist, from))
    }
}

fn resolve_partial(domain: &LatticeDomain, partial: &BTreeMap<Vertex, i64>) -> Result<Vec<(usize, i64)>, HeightError> {
    let class = height_class(domain);
    partial
        .iter()
        .map(|(&v, &val)| {
            let i = domain.vertex_id(v).ok_or(HeightError::UnknownVertex(v))?;
            if val.rem_euclid(4) != class[i] as i64 {
                return Err(HeightError::WrongClass { vertex: v, value: val });
            }
            Ok((i, val))
        })
        .collect()
}

/// Largest height function agreeing with `partial`:
/// `H_max(x) = min_y (partial(y) + d(y → x))`.
pub fn max_extension(domain: &LatticeDomain, partial: &BTreeMap<Vertex, i64>) -> Result<HeightFunction, HeightError> {
    extend(domain, partial, false)
}

/// Smallest height function agreeing with `partial`:
/// `H_min(x) = max_y (partial(y) − d(x → y))`.
pub fn min_extension(domain: &LatticeDomain, partial: &BTreeMap<Vertex, i64>) -> Result<HeightFunction, HeightError> {
    extend(domain, partial, true)
}

fn extend(domain: &LatticeDomain, partial: &BTreeMap<Vertex, i64>, lower: bool) -> Result<HeightFunction, HeightError> {
    let sources = resolve_partial(domain, partial)?;
    if sources.is_empty() {
        return Err(HeightError::IncompatibleHeights("empty boundary data".into()));
    }
    let sign = if lower { -1 } else { 1 };
    let graph = if lower { ConstraintGraph::reversed(domain) } else { ConstraintGraph::new(domain) };
    let seeded: Vec<(usize, i64)> = sources.iter().map(|&(i, v)| (i, sign * v)).collect();
    let (dist, from) = graph.shortest_paths(&seeded).ok_or(HeightError::NotTileable)?;
    let vs = domain.vertices();
    for &(i, v) in &seeded {
        if dist[i] < v {
            return Err(HeightError::NotExtendable { x: vs[i], y: vs[from[i]] });
        }
    }
    Ok(HeightFunction::from_values(domain, dist.into_iter().map(|d| sign * d).collect()))
}

/// Values of `h` on every boundary vertex.
pub fn boundary_values(domain: &LatticeDomain, h: &HeightFunction) -> BTreeMap<Vertex, i64> {
    let vs = domain.vertices();
    let mut out = BTreeMap::new();
    for ed in domain.edges().iter().filter(|e| e.is_boundary()) {
        out.insert(vs[ed.tail], h.values[ed.tail]);
        out.insert(vs[ed.head], h.values[ed.head]);
    }
    out
}

/// Tight interval `[lo, hi]` of admissible `R_i` per hole, from the extremal
/// height functions with `H(p_0) = 0`.
pub fn height_change_bounds(domain: &LatticeDomain) -> Result<Vec<(i64, i64)>, HeightError> {
    let base = BTreeMap::from([(domain.reference_point(0), 0)]);
    let hi = max_extension(domain, &base)?;
    let lo = min_extension(domain, &base)?;
    Ok(lo.height_change.into_iter().zip(hi.height_change).collect())
}

/// Interval `[−d(p_i → p_0), d(p_0 → p_i)]` from black-left paths on the
/// cover, with cut crossings charged their monodromy.
pub fn beta_height_change_bounds(domain: &LatticeDomain) -> Vec<(i64, i64)> {
    let g = ConstraintGraph::beta(domain);
    let id = |i: usize| domain.vertex_id(domain.reference_point(i)).unwrap();
    let (from_p0, _) = g.shortest_paths(&[(id(0), 0)]).expect("no negative cycles in the beta graph");
    (1..=domain.genus())
        .map(|i| {
            let (from_pi, _) = g.shortest_paths(&[(id(i), 0)]).unwrap();
            (-from_pi[id(0)], from_p0[id(i)])
        })
        .collect()
}

/// Lattice height function within `O(1)` of a target profile.
///
/// `target[v]` is the desired value at vertex `v` of the fundamental
/// domain, in lattice units and with `target[p_0] ≈ 0`. Each target is
/// rounded down into the class of its vertex, the result is closed under
/// the cover-corrected `β` metric,
///
/// ```text
/// Ĥ(x) = min_y (⌊target(y)⌋ + β(y → x)),
/// ```
///
/// and then clamped between the minimal and maximal height functions whose
/// height change is the target's, rounded into its class and clipped to
/// the admissible range.
pub fn approximate_profile(domain: &LatticeDomain, target: &[f64]) -> Result<HeightFunction, HeightError> {
    let n = domain.vertices().len();
    if target.len() != n || target.iter().any(|t| !t.is_finite()) {
        return Err(HeightError::IncompatibleHeights(format!("target has {} finite values for {n} vertices", target.len())));
    }
    let class = height_class(domain);
    let floor_in_class = |x: f64, c: u8| -> i64 {
        let f = x.floor() as i64;
        f - (f - c as i64).rem_euclid(4)
    };
    let round_in_class = |x: f64, c: u8| -> i64 {
        let f = floor_in_class(x, c);
        if x - f as f64 > 2.0 {
            f + 4
        } else {
            f
        }
    };
    let sources: Vec<(usize, i64)> = (0..n).map(|v| (v, floor_in_class(target[v], class[v]))).collect();
    let (hat, _) = ConstraintGraph::beta(domain).shortest_paths(&sources).ok_or(HeightError::NotTileable)?;

    let id = |i: usize| domain.vertex_id(domain.reference_point(i)).unwrap();
    let bounds = height_change_bounds(domain)?;
    let mut partial = BTreeMap::from([(domain.reference_point(0), 0)]);
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        let p = id(i + 1);
        let r = round_in_class(target[p] - target[id(0)], class[p]).clamp(lo, hi);
        partial.insert(domain.reference_point(i + 1), r);
    }
    let upper = max_extension(domain, &partial)?;
    let lower = min_extension(domain, &partial)?;
    let values = (0..n).map(|v| hat[v].min(upper.values[v]).max(lower.values[v])).collect();
    Ok(HeightFunction::from_values(domain, values))
}

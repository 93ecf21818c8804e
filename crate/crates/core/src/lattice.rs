//! Lattice domains with holes: boundary topology, cut systems, cover
//! addressing, the black-left metric and the monodromy formula.
//!
//! A square `Square(x, y)` is the closed unit square `[x, x+1] × [y, y+1]`;
//! it is black iff `x + y` is even. Vertices are integer points. Every unit
//! edge of the domain is stored once, oriented east or north, and a
//! traversal of it is a [`HalfEdge`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Square(pub i32, pub i32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex(pub i32, pub i32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    Black,
    White,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    East,
    North,
    West,
    South,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::North, Dir::West, Dir::South];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::East => (1, 0),
            Dir::North => (0, 1),
            Dir::West => (-1, 0),
            Dir::South => (0, -1),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::East => Dir::West,
            Dir::North => Dir::South,
            Dir::West => Dir::East,
            Dir::South => Dir::North,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl Square {
    pub fn color(self) -> Color {
        if (self.0 + self.1).rem_euclid(2) == 0 {
            Color::Black
        } else {
            Color::White
        }
    }

    pub fn is_black(self) -> bool {
        self.color() == Color::Black
    }

    /// `+1` for black, `-1` for white.
    pub fn sign(self) -> i64 {
        if self.is_black() {
            1
        } else {
            -1
        }
    }

    pub fn step(self, d: Dir) -> Square {
        let (dx, dy) = d.delta();
        Square(self.0 + dx, self.1 + dy)
    }

    /// Corners in counterclockwise order starting at the lower left.
    pub fn corners(self) -> [Vertex; 4] {
        let Square(x, y) = self;
        [Vertex(x, y), Vertex(x + 1, y), Vertex(x + 1, y + 1), Vertex(x, y + 1)]
    }

    pub fn center(self) -> (f64, f64) {
        (self.0 as f64 + 0.5, self.1 as f64 + 0.5)
    }
}

impl Vertex {
    pub fn step(self, d: Dir) -> Vertex {
        let (dx, dy) = d.delta();
        Vertex(self.0 + dx, self.1 + dy)
    }

    /// Direction of the unit step `self → other`, if they are adjacent.
    pub fn dir_to(self, other: Vertex) -> Option<Dir> {
        match (other.0 - self.0, other.1 - self.1) {
            (1, 0) => Some(Dir::East),
            (0, 1) => Some(Dir::North),
            (-1, 0) => Some(Dir::West),
            (0, -1) => Some(Dir::South),
            _ => None,
        }
    }

    /// The four squares having this vertex as a corner: SW, SE, NE, NW.
    pub fn squares(self) -> [Square; 4] {
        let Vertex(x, y) = self;
        [Square(x - 1, y - 1), Square(x, y - 1), Square(x, y), Square(x - 1, y)]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.0, self.1)
    }
}

/// Square on the left of the unit step leaving `from` in direction `dir`.
pub fn left_square(from: Vertex, dir: Dir) -> Square {
    let Vertex(x, y) = from;
    match dir {
        Dir::East => Square(x, y),
        Dir::North => Square(x - 1, y),
        Dir::West => Square(x - 1, y - 1),
        Dir::South => Square(x, y - 1),
    }
}

/// Edge increment `Δ`: `+1` iff the square on the left is black.
pub fn delta(from: Vertex, dir: Dir) -> i64 {
    left_square(from, dir).sign()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("domain has no squares")]
    EmptyDomain,
    #[error("squares are not edge-connected; {0} is unreachable")]
    DisconnectedDomain(Square),
    #[error("no non-crossing cut found for hole {hole}")]
    CutFailure { hole: usize },
    #[error("invalid cut system: {0}")]
    InvalidCuts(String),
    #[error("path is not closed")]
    OpenPath,
    #[error("{0} -> {1} is not an edge of the domain")]
    NotAnEdge(Vertex, Vertex),
    #[error("{0} is not a vertex of the domain")]
    UnknownVertex(Vertex),
    #[error("no black-left path from {from} to {to}")]
    Unreachable { from: Vertex, to: Vertex },
}

/// Dense lookup from integer points of a bounding box to indices.
#[derive(Clone, Debug)]
struct IndexGrid {
    x0: i32,
    y0: i32,
    w: i32,
    h: i32,
    slots: Vec<u32>,
}

impl IndexGrid {
    const NONE: u32 = u32::MAX;

    fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        let w = x1 - x0 + 1;
        let h = y1 - y0 + 1;
        IndexGrid { x0, y0, w, h, slots: vec![Self::NONE; (w * h) as usize] }
    }

    fn offset(&self, x: i32, y: i32) -> Option<usize> {
        let (i, j) = (x - self.x0, y - self.y0);
        (i >= 0 && j >= 0 && i < self.w && j < self.h).then(|| (j * self.w + i) as usize)
    }

    fn get(&self, x: i32, y: i32) -> Option<usize> {
        self.offset(x, y).map(|o| self.slots[o]).filter(|&s| s != Self::NONE).map(|s| s as usize)
    }

    fn set(&mut self, x: i32, y: i32, v: usize) {
        let o = self.offset(x, y).expect("point inside grid");
        self.slots[o] = v as u32;
    }
}

/// A unit edge stored with its canonical east or north orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub dir: Dir,
    /// Domain square on the left of `tail → head`.
    pub left: Option<usize>,
    /// Domain square on the right of `tail → head`.
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.left.is_none() || self.right.is_none()
    }
}

/// A traversal of a stored edge, `forward` meaning `tail → head`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfEdge {
    pub edge: usize,
    pub forward: bool,
}

impl HalfEdge {
    pub fn reversed(self) -> HalfEdge {
        HalfEdge { edge: self.edge, forward: !self.forward }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryComponent {
    /// 0 for the external boundary, `1..=g` for holes.
    pub index: usize,
    /// Closed walk with the domain on the left; the first vertex is not repeated.
    pub vertex_cycle: Vec<Vertex>,
    pub reference_point: Vertex,
    /// Squares of the hole; empty for the external component.
    pub squares: Vec<Square>,
    #[serde(skip)]
    pub halfedges: Vec<HalfEdge>,
}

/// One cut: a dual path leaving hole `hole` and ending on component `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub hole: usize,
    pub target: usize,
    /// Crossed edges in order, starting with a boundary edge of the hole.
    pub edges: Vec<usize>,
    /// Domain squares the dual path passes through.
    pub squares: Vec<Square>,
    /// Per crossed edge, `+1` if the forward traversal crosses from the
    /// right of the path to its left.
    pub signs: Vec<i8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutSystem {
    pub cuts: Vec<Cut>,
    /// For each edge, the cut it belongs to and the sign of a forward crossing.
    crossing: Vec<Option<(usize, i8)>>,
    /// Change of the winding vector when cut `c` is crossed right to left.
    class: Vec<Vec<i64>>,
}

impl CutSystem {
    pub fn genus(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_cut(&self, edge: usize) -> bool {
        self.crossing[edge].is_some()
    }

    /// Change of the deck vector along `h`, or `None` off the cuts.
    pub fn deck_delta(&self, h: HalfEdge) -> Option<(i64, &[i64])> {
        self.crossing[h.edge].map(|(c, s)| {
            let s = if h.forward { s as i64 } else { -(s as i64) };
            (s, self.class[c].as_slice())
        })
    }

    /// `deck_delta(h) · m`, the jump of stored values across a cut.
    pub fn jump(&self, h: HalfEdge, m: &MonodromyVector) -> i64 {
        match self.deck_delta(h) {
            None => 0,
            Some((s, class)) => s * class.iter().zip(&m.0).map(|(a, b)| a * b).sum::<i64>(),
        }
    }

    pub fn add_deck(&self, h: HalfEdge, deck: &mut [i64]) {
        if let Some((s, class)) = self.deck_delta(h) {
            for (d, c) in deck.iter_mut().zip(class) {
                *d += s * c;
            }
        }
    }

    /// Each cut as the list of crossed edges in vertex form.
    pub fn edge_lists(&self, domain: &LatticeDomain) -> Vec<Vec<[Vertex; 2]>> {
        self.cuts
            .iter()
            .map(|c| {
                c.edges
                    .iter()
                    .map(|&e| {
                        let ed = domain.edges[e];
                        [domain.vertices[ed.tail], domain.vertices[ed.head]]
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonodromyVector(pub Vec<i64>);

impl MonodromyVector {
    pub fn pair(&self, winding: &[i64]) -> i64 {
        self.0.iter().zip(winding).map(|(m, w)| m * w).sum()
    }
}

/// A point of the universal cover: a vertex with its abelianized path class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoverPoint {
    pub vertex: Vertex,
    pub deck: Vec<i64>,
}

pub fn cover_shift(point: &CoverPoint, loop_class: &[i64]) -> CoverPoint {
    assert_eq!(point.deck.len(), loop_class.len(), "deck dimension mismatch");
    CoverPoint { vertex: point.vertex, deck: point.deck.iter().zip(loop_class).map(|(a, b)| a + b).collect() }
}

#[derive(Clone, Debug)]
pub struct LatticeDomain {
    squares: Vec<Square>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    square_index: IndexGrid,
    vertex_index: IndexGrid,
    /// Outgoing edge per direction, indexed by `Dir as usize`.
    vertex_edges: Vec<[Option<usize>; 4]>,
    /// Bottom, right, top, left edges.
    square_edges: Vec<[usize; 4]>,
    boundary: Vec<BoundaryComponent>,
    monodromy: MonodromyVector,
    cuts: CutSystem,
}

pub fn build_domain<I: IntoIterator<Item = Square>>(squares: I) -> Result<LatticeDomain, LatticeError> {
    LatticeDomain::new(squares)
}

impl LatticeDomain {
    pub fn new<I: IntoIterator<Item = Square>>(squares: I) -> Result<Self, LatticeError> {
        let squares: Vec<Square> = squares.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if squares.is_empty() {
            return Err(LatticeError::EmptyDomain);
        }
        let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for s in &squares {
            x0 = x0.min(s.0);
            y0 = y0.min(s.1);
            x1 = x1.max(s.0);
            y1 = y1.max(s.1);
        }
        let mut square_index = IndexGrid::new(x0, y0, x1, y1);
        for (i, s) in squares.iter().enumerate() {
            square_index.set(s.0, s.1, i);
        }

        let vset: BTreeSet<Vertex> = squares.iter().flat_map(|s| s.corners()).collect();
        let vertices: Vec<Vertex> = vset.into_iter().collect();
        let mut vertex_index = IndexGrid::new(x0, y0, x1 + 1, y1 + 1);
        for (i, v) in vertices.iter().enumerate() {
            vertex_index.set(v.0, v.1, i);
        }

        let mut edges = Vec::new();
        let mut vertex_edges = vec![[None; 4]; vertices.len()];
        for (vi, &v) in vertices.iter().enumerate() {
            for dir in [Dir::East, Dir::North] {
                let w = v.step(dir);
                let left = square_index_of(&square_index, left_square(v, dir));
                let right = square_index_of(&square_index, left_square(w, dir.opposite()));
                if left.is_none() && right.is_none() {
                    continue;
                }
                let wi = vertex_index.get(w.0, w.1).expect("edge endpoint is a vertex");
                let e = edges.len();
                edges.push(Edge { tail: vi, head: wi, dir, left, right });
                vertex_edges[vi][dir.slot()] = Some(e);
                vertex_edges[wi][dir.opposite().slot()] = Some(e);
            }
        }
        let square_edges = squares
            .iter()
            .map(|s| {
                let [ll, lr, _, ul] = s.corners();
                let at = |v: Vertex, d: Dir| {
                    let i = vertex_index.get(v.0, v.1).unwrap();
                    vertex_edges[i][d.slot()].unwrap()
                };
                [at(ll, Dir::East), at(lr, Dir::North), at(ul, Dir::East), at(ll, Dir::North)]
            })
            .collect();

        let mut domain = LatticeDomain {
            squares,
            vertices,
            edges,
            square_index,
            vertex_index,
            vertex_edges,
            square_edges,
            boundary: Vec::new(),
            monodromy: MonodromyVector(Vec::new()),
            cuts: CutSystem { cuts: Vec::new(), crossing: Vec::new(), class: Vec::new() },
        };
        domain.check_connected()?;
        domain.boundary = domain.trace_boundary();
        domain.monodromy =
            MonodromyVector(domain.boundary[1..].iter().map(|b| 4 * b.squares.iter().map(|s| s.sign()).sum::<i64>()).collect());
        domain.cuts = domain.sweep_cuts()?;
        Ok(domain)
    }

    /// Replaces the cut system with one given as edge lists in vertex form.
    pub fn with_cuts(mut self, cuts: &[Vec<[Vertex; 2]>]) -> Result<Self, LatticeError> {
        let mut paths = Vec::with_capacity(cuts.len());
        for c in cuts {
            let mut path = Vec::with_capacity(c.len());
            for &[a, b] in c {
                let h = self.halfedge(a, b).ok_or(LatticeError::NotAnEdge(a, b))?;
                path.push(h.edge);
            }
            paths.push(path);
        }
        self.cuts = self.cuts_from_paths(&paths)?;
        Ok(self)
    }

    fn check_connected(&self) -> Result<(), LatticeError> {
        let mut seen = vec![false; self.squares.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for d in Dir::ALL {
                if let Some(j) = self.square_id(self.squares[i].step(d)) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        match seen.iter().position(|&s| !s) {
            Some(i) => Err(LatticeError::DisconnectedDomain(self.squares[i])),
            None => Ok(()),
        }
    }

    pub fn squares(&self) -> &[Square] {
        &self.squares
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn square_id(&self, s: Square) -> Option<usize> {
        square_index_of(&self.square_index, s)
    }

    pub fn vertex_id(&self, v: Vertex) -> Option<usize> {
        self.vertex_index.get(v.0, v.1)
    }

    pub fn contains(&self, s: Square) -> bool {
        self.square_id(s).is_some()
    }

    /// Bottom, right, top and left edges of square `s`.
    pub fn square_edges(&self, s: usize) -> [usize; 4] {
        self.square_edges[s]
    }

    pub fn edge_at(&self, v: usize, d: Dir) -> Option<usize> {
        self.vertex_edges[v][d.slot()]
    }

    /// Outgoing half-edge of vertex `v` in direction `d`.
    pub fn halfedge_at(&self, v: usize, d: Dir) -> Option<HalfEdge> {
        self.edge_at(v, d).map(|e| HalfEdge { edge: e, forward: matches!(d, Dir::East | Dir::North) })
    }

    pub fn halfedge(&self, a: Vertex, b: Vertex) -> Option<HalfEdge> {
        let d = a.dir_to(b)?;
        self.halfedge_at(self.vertex_id(a)?, d)
    }

    pub fn tail(&self, h: HalfEdge) -> usize {
        let e = &self.edges[h.edge];
        if h.forward {
            e.tail
        } else {
            e.head
        }
    }

    pub fn head(&self, h: HalfEdge) -> usize {
        let e = &self.edges[h.edge];
        if h.forward {
            e.head
        } else {
            e.tail
        }
    }

    pub fn direction(&self, h: HalfEdge) -> Dir {
        let d = self.edges[h.edge].dir;
        if h.forward {
            d
        } else {
            d.opposite()
        }
    }

    /// Edge increment `Δ` of the half-edge.
    pub fn delta(&self, h: HalfEdge) -> i64 {
        delta(self.vertices[self.tail(h)], self.direction(h))
    }

    /// Domain squares on the left and right of `h`.
    pub fn sides(&self, h: HalfEdge) -> (Option<usize>, Option<usize>) {
        let e = &self.edges[h.edge];
        if h.forward {
            (e.left, e.right)
        } else {
            (e.right, e.left)
        }
    }

    pub fn genus(&self) -> usize {
        self.boundary.len() - 1
    }

    pub fn boundary_components(&self) -> &[BoundaryComponent] {
        &self.boundary
    }

    pub fn cuts(&self) -> &CutSystem {
        &self.cuts
    }

    pub fn monodromy(&self) -> &MonodromyVector {
        &self.monodromy
    }

    /// Reference point `p_i` of boundary component `i`.
    pub fn reference_point(&self, i: usize) -> Vertex {
        self.boundary[i].reference_point
    }

    pub fn black_white(&self) -> (usize, usize) {
        let b = self.squares.iter().filter(|s| s.is_black()).count();
        (b, self.squares.len() - b)
    }

    /// Labels the complement squares of a padded bounding box by 4-connected
    /// component; label 0 is the unbounded one.
    fn complement_labels(&self) -> (IndexGrid, usize) {
        let g = &self.square_index;
        let (x0, y0, x1, y1) = (g.x0 - 1, g.y0 - 1, g.x0 + g.w, g.y0 + g.h);
        let mut labels = IndexGrid::new(x0, y0, x1, y1);
        let mut count = 0;
        for y in y0..=y1 {
            for x in x0..=x1 {
                if self.contains(Square(x, y)) || labels.get(x, y).is_some() {
                    continue;
                }
                let label = count;
                count += 1;
                labels.set(x, y, label);
                let mut queue = VecDeque::from([Square(x, y)]);
                while let Some(s) = queue.pop_front() {
                    for d in Dir::ALL {
                        let t = s.step(d);
                        if labels.offset(t.0, t.1).is_none() || self.contains(t) || labels.get(t.0, t.1).is_some() {
                            continue;
                        }
                        labels.set(t.0, t.1, label);
                        queue.push_back(t);
                    }
                }
            }
        }
        (labels, count)
    }

    fn trace_boundary(&self) -> Vec<BoundaryComponent> {
        let (labels, count) = self.complement_labels();
        // raw label -> boundary half-edges with the domain on the left
        let mut by_label: Vec<Vec<HalfEdge>> = vec![Vec::new(); count];
        for (ei, e) in self.edges.iter().enumerate() {
            let (h, outside) = match (e.left, e.right) {
                (Some(_), None) => {
                    let v = self.vertices[e.head];
                    (HalfEdge { edge: ei, forward: true }, left_square(v, e.dir.opposite()))
                }
                (None, Some(_)) => {
                    let v = self.vertices[e.tail];
                    (HalfEdge { edge: ei, forward: false }, left_square(v, e.dir))
                }
                _ => continue,
            };
            let label = labels.get(outside.0, outside.1).expect("outside square is labelled");
            by_label[label].push(h);
        }
        let mut hole_squares: Vec<Vec<Square>> = vec![Vec::new(); count];
        let g = &labels;
        for y in g.y0..g.y0 + g.h {
            for x in g.x0..g.x0 + g.w {
                if let Some(l) = g.get(x, y) {
                    if l != 0 {
                        hole_squares[l].push(Square(x, y));
                    }
                }
            }
        }
        let mut comps: Vec<BoundaryComponent> = (0..count)
            .map(|l| {
                let halfedges = self.euler_circuit(&by_label[l]);
                let vertex_cycle: Vec<Vertex> = halfedges.iter().map(|&h| self.vertices[self.tail(h)]).collect();
                BoundaryComponent {
                    index: l,
                    reference_point: vertex_cycle[0],
                    vertex_cycle,
                    squares: {
                        let mut sq = std::mem::take(&mut hole_squares[l]);
                        sq.sort();
                        sq
                    },
                    halfedges,
                }
            })
            .collect();
        comps[1..].sort_by_key(|c| c.reference_point);
        for (i, c) in comps.iter_mut().enumerate() {
            c.index = i;
        }
        comps
    }

    /// Closed walk through all the given half-edges, starting at the
    /// lexicographically smallest tail.
    fn euler_circuit(&self, hs: &[HalfEdge]) -> Vec<HalfEdge> {
        let mut out: BTreeMap<usize, Vec<HalfEdge>> = BTreeMap::new();
        for &h in hs {
            out.entry(self.tail(h)).or_default().push(h);
        }
        for list in out.values_mut() {
            // popped from the back, so the first direction in order is used first
            list.sort_by_key(|&h| std::cmp::Reverse(self.direction(h)));
        }
        let start = *out.keys().next().expect("component has a boundary");
        let mut stack = vec![(start, None::<HalfEdge>)];
        let mut circuit = Vec::with_capacity(hs.len());
        while let Some(&(v, via)) = stack.last() {
            match out.get_mut(&v).and_then(|l| l.pop()) {
                Some(h) => stack.push((self.head(h), Some(h))),
                None => {
                    stack.pop();
                    if let Some(h) = via {
                        circuit.push(h);
                    }
                }
            }
        }
        circuit.reverse();
        circuit
    }

    /// Component index of the complement square across boundary half-edge `h`.
    fn component_across(&self, e: usize) -> Option<usize> {
        let ed = &self.edges[e];
        if !ed.is_boundary() {
            return None;
        }
        let outside = match ed.left {
            Some(_) => left_square(self.vertices[ed.head], ed.dir.opposite()),
            None => left_square(self.vertices[ed.tail], ed.dir),
        };
        self.boundary.iter().skip(1).position(|b| b.squares.binary_search(&outside).is_ok()).map(|i| i + 1).or(Some(0))
    }

    fn sweep_cuts(&self) -> Result<CutSystem, LatticeError> {
        let g = self.genus();
        let square_comp = self.square_components();
        let mut blocked = vec![false; self.squares.len()];
        let mut paths = Vec::with_capacity(g);
        for hole in 1..=g {
            let comp = &self.boundary[hole];
            let p = comp.reference_point;
            // seeds: boundary edges of the hole at p, horizontal ones first
            let mut seeds: Vec<HalfEdge> =
                comp.halfedges.iter().copied().filter(|&h| self.vertices[self.tail(h)] == p || self.vertices[self.head(h)] == p).collect();
            seeds.sort_by_key(|&h| (matches!(self.edges[h.edge].dir, Dir::North), h.edge));
            seeds.extend(comp.halfedges.iter().copied());
            let reach = |s: usize| -> Option<usize> {
                // edge of `s` leading to an allowed target component, external first
                let mut best: Option<(usize, usize)> = None;
                for &e in &self.square_edges[s] {
                    if let Some(c) = square_comp[e] {
                        if c < hole && best.is_none_or(|(bc, _)| c < bc) {
                            best = Some((c, e));
                        }
                    }
                }
                best.map(|(_, e)| e)
            };
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.squares.len()];
            let mut seen = blocked.clone();
            let mut queue = VecDeque::new();
            for h in seeds {
                let (l, _) = self.sides(h);
                let s = l.expect("domain on the left of its boundary");
                if !seen[s] {
                    seen[s] = true;
                    parent[s] = Some((usize::MAX, h.edge));
                    queue.push_back(s);
                }
            }
            let mut found = None;
            while let Some(s) = queue.pop_front() {
                if let Some(e) = reach(s) {
                    found = Some((s, e));
                    break;
                }
                for (k, &e) in self.square_edges[s].iter().enumerate() {
                    let t = self.squares[s].step([Dir::South, Dir::East, Dir::North, Dir::West][k]);
                    if let Some(ti) = self.square_id(t) {
                        if !seen[ti] {
                            seen[ti] = true;
                            parent[ti] = Some((s, e));
                            queue.push_back(ti);
                        }
                    }
                }
            }
            let (last, exit) = found.ok_or(LatticeError::CutFailure { hole })?;
            let mut edges = vec![exit];
            let mut s = last;
            loop {
                blocked[s] = true;
                let (prev, e) = parent[s].unwrap();
                edges.push(e);
                if prev == usize::MAX {
                    break;
                }
                s = prev;
            }
            edges.reverse();
            paths.push(edges);
        }
        self.cuts_from_paths(&paths)
    }

    /// Component across each boundary edge, `None` for interior edges.
    fn square_components(&self) -> Vec<Option<usize>> {
        (0..self.edges.len()).map(|e| self.component_across(e)).collect()
    }

    /// Validates dual paths and derives crossing signs and winding classes.
    fn cuts_from_paths(&self, paths: &[Vec<usize>]) -> Result<CutSystem, LatticeError> {
        let g = self.genus();
        let bad = |msg: String| Err(LatticeError::InvalidCuts(msg));
        if paths.len() != g {
            return bad(format!("expected {g} cuts, got {}", paths.len()));
        }
        let comp = self.square_components();
        let mut crossing = vec![None; self.edges.len()];
        let mut used = vec![false; self.squares.len()];
        let mut cuts = Vec::with_capacity(g);
        let mut cut_of_hole = vec![usize::MAX; g + 1];
        for (ci, path) in paths.iter().enumerate() {
            if path.len() < 2 {
                return bad(format!("cut {ci} is too short"));
            }
            let first = &self.edges[path[0]];
            let hole = match comp[path[0]] {
                Some(h) if h > 0 => h,
                _ => return bad(format!("cut {ci} does not start on a hole")),
            };
            let target = match comp[*path.last().unwrap()] {
                Some(t) => t,
                None => return bad(format!("cut {ci} does not end on the boundary")),
            };
            if target == hole || cut_of_hole[hole] != usize::MAX {
                return bad(format!("cut {ci} is not a tree edge"));
            }
            cut_of_hole[hole] = ci;
            let s0 = first.left.or(first.right).expect("boundary edge has a domain side");
            let mut seq = vec![s0];
            for &e in &path[1..path.len() - 1] {
                let ed = &self.edges[e];
                let cur = *seq.last().unwrap();
                let next = if ed.left == Some(cur) {
                    ed.right
                } else if ed.right == Some(cur) {
                    ed.left
                } else {
                    return bad(format!("cut {ci} is not a dual path"));
                };
                match next {
                    Some(n) => seq.push(n),
                    None => return bad(format!("cut {ci} touches the boundary early")),
                }
            }
            let last_edge = &self.edges[*path.last().unwrap()];
            let end = *seq.last().unwrap();
            if !last_edge.is_boundary() || !(last_edge.left == Some(end) || last_edge.right == Some(end)) {
                return bad(format!("cut {ci} does not leave through the boundary"));
            }
            for &s in &seq {
                if used[s] {
                    return bad(format!("cut {ci} meets another cut"));
                }
                used[s] = true;
            }
            let mirror = |s: usize, e: usize| {
                let (cx, cy) = self.squares[s].center();
                let (mx, my) = self.edge_midpoint(e);
                (2.0 * mx - cx, 2.0 * my - cy)
            };
            let mut centers = vec![mirror(s0, path[0])];
            centers.extend(seq.iter().map(|&s| self.squares[s].center()));
            centers.push(mirror(end, *path.last().unwrap()));
            let mut signs = Vec::with_capacity(path.len());
            for (k, &e) in path.iter().enumerate() {
                let p = (centers[k + 1].0 - centers[k].0, centers[k + 1].1 - centers[k].1);
                let t = self.edges[e].dir.delta();
                let sign = (p.0 * t.1 as f64 - p.1 * t.0 as f64).signum() as i8;
                if crossing[e].is_some() {
                    return bad("edge crossed twice by the cuts".to_string());
                }
                crossing[e] = Some((ci, sign));
                signs.push(sign);
            }
            let squares = seq.iter().map(|&s| self.squares[s]).collect();
            cuts.push(Cut { hole, target, edges: path.clone(), squares, signs });
        }
        // every hole reaches the external boundary through the cut tree
        let mut class = vec![vec![0i64; g]; g];
        for hole in 1..=g {
            let mut h = hole;
            let mut steps = 0;
            while h != 0 {
                let c = cut_of_hole[h];
                class[c][hole - 1] = 1;
                h = cuts[c].target;
                steps += 1;
                if steps > g {
                    return bad("cut tree has a cycle".into());
                }
            }
        }
        let sys = CutSystem { cuts, crossing, class };
        if euler_characteristic(self, &sys) != 1 || !fundamental_connected(self, &sys) {
            return bad("cut-open domain is not simply connected".into());
        }
        Ok(sys)
    }

    fn edge_midpoint(&self, e: usize) -> (f64, f64) {
        let ed = &self.edges[e];
        let (a, b) = (self.vertices[ed.tail], self.vertices[ed.head]);
        ((a.0 + b.0) as f64 / 2.0, (a.1 + b.1) as f64 / 2.0)
    }

    /// Shortest black-left distances from `source` to every vertex,
    /// i.e. `β(x, source)` for all `x`.
    pub fn beta_from(&self, source: usize) -> Vec<Option<u32>> {
        self.black_left_bfs(source, false)
    }

    /// Shortest black-left distances from every vertex to `target`,
    /// i.e. `β(target, y)` for all `y`.
    pub fn beta_to(&self, target: usize) -> Vec<Option<u32>> {
        self.black_left_bfs(target, true)
    }

    fn black_left_bfs(&self, root: usize, reverse: bool) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.vertices.len()];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for d in Dir::ALL {
                let Some(h) = self.halfedge_at(u, d) else { continue };
                // in reverse mode walk edges backwards: u <- v must be black-left
                let ok = if reverse { self.delta(h.reversed()) > 0 } else { self.delta(h) > 0 };
                let v = self.head(h);
                if ok && dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

fn square_index_of(g: &IndexGrid, s: Square) -> Option<usize> {
    g.get(s.0, s.1)
}

/// `V − E' + F'` of the domain cut open along `cuts`: cut edges removed and
/// squares touching a cut edge dropped.
pub fn euler_characteristic(domain: &LatticeDomain, cuts: &CutSystem) -> i64 {
    let v = domain.vertices.len() as i64;
    let e = (0..domain.edges.len()).filter(|&e| !cuts.is_cut(e)).count() as i64;
    let f = (0..domain.squares.len()).filter(|&s| domain.square_edges[s].iter().all(|&e| !cuts.is_cut(e))).count() as i64;
    v - e + f
}

fn fundamental_connected(domain: &LatticeDomain, cuts: &CutSystem) -> bool {
    let n = domain.vertices.len();
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for d in Dir::ALL {
            if let Some(h) = domain.halfedge_at(u, d) {
                let w = domain.head(h);
                if !cuts.is_cut(h.edge) && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
    }
    count == n
}

pub fn boundary_components(domain: &LatticeDomain) -> &[BoundaryComponent] {
    domain.boundary_components()
}

pub fn build_cuts(domain: &LatticeDomain) -> &CutSystem {
    domain.cuts()
}

pub fn monodromy(domain: &LatticeDomain) -> &MonodromyVector {
    domain.monodromy()
}

/// `β(p, q)`: length of the shortest path from `q` to `p` using only edges
/// with a black square on the left. It bounds `H(p) − H(q)`.
pub fn beta_distance(domain: &LatticeDomain, p: Vertex, q: Vertex) -> Result<u32, LatticeError> {
    let pi = domain.vertex_id(p).ok_or(LatticeError::UnknownVertex(p))?;
    let qi = domain.vertex_id(q).ok_or(LatticeError::UnknownVertex(q))?;
    domain.beta_from(qi)[pi].ok_or(LatticeError::Unreachable { from: q, to: p })
}

/// Closed form of `β(x, y)` on the full lattice.
pub fn beta_closed_form(x: Vertex, y: Vertex) -> i64 {
    let (a, b) = (x.0 as i64, x.1 as i64);
    let (i, j) = (y.0 as i64 - a, y.1 as i64 - b);
    let kappa = (i - j).rem_euclid(2);
    let n = i.abs().max(j.abs());
    let mut sign = if i.abs() >= j.abs() { 1 } else { -1 };
    if (a - b).rem_euclid(2) == 1 {
        sign = -sign;
    }
    2 * n + sign * kappa
}

/// A closed walk given by its vertices; the last vertex must equal the first.
fn loop_halfedges(domain: &LatticeDomain, lp: &[Vertex]) -> Result<Vec<HalfEdge>, LatticeError> {
    if lp.len() < 2 || lp.first() != lp.last() {
        return Err(LatticeError::OpenPath);
    }
    lp.windows(2).map(|w| domain.halfedge(w[0], w[1]).ok_or(LatticeError::NotAnEdge(w[0], w[1]))).collect()
}

/// Winding number of the closed walk around the centre of square `s`.
pub fn winding_number(lp: &[Vertex], s: Square) -> i64 {
    // signed crossings of the ray going east from the centre
    lp.windows(2)
        .filter(|w| w[0].0 == w[1].0 && w[0].0 > s.0 && w[0].1.min(w[1].1) == s.1)
        .map(|w| if w[1].1 > w[0].1 { 1 } else { -1 })
        .sum()
}

/// Sum of `Δ_e` along the closed walk.
pub fn edge_sum(domain: &LatticeDomain, lp: &[Vertex]) -> Result<i64, LatticeError> {
    Ok(loop_halfedges(domain, lp)?.iter().map(|&h| domain.delta(h)).sum())
}

/// Monodromy of a closed walk: `Σ Δ_e` minus the contribution `±4` of every
/// domain square it winds around, which leaves the pairing of its winding
/// vector with the monodromy vector.
pub fn monodromy_by_traversal(domain: &LatticeDomain, lp: &[Vertex]) -> Result<i64, LatticeError> {
    let raw = edge_sum(domain, lp)?;
    let enclosed: i64 = domain.squares.iter().map(|&s| 4 * s.sign() * winding_number(lp, s)).sum();
    Ok(raw - enclosed)
}

/// Winding vector of a closed walk from its signed cut crossings.
pub fn cut_crossings(domain: &LatticeDomain, lp: &[Vertex]) -> Result<Vec<i64>, LatticeError> {
    let mut deck = vec![0; domain.genus()];
    for h in loop_halfedges(domain, lp)? {
        domain.cuts.add_deck(h, &mut deck);
    }
    Ok(deck)
}

/// Winding vector of a closed walk around each hole, by ray casting.
pub fn hole_windings(domain: &LatticeDomain, lp: &[Vertex]) -> Vec<i64> {
    domain.boundary[1..].iter().map(|b| winding_number(lp, b.squares[0])).collect()
}

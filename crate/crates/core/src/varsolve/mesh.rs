//! Structured triangulation of polygonal domains cut open along seams.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::VarSolveError;

type Point = [f64; 2];
type Node = (i64, i64);

/// Polygonal domain with holes and one cut per hole.
///
/// Polygon vertices must lie on the mesh grid and every side must be
/// horizontal, vertical or diagonal. Cut `i` is a polyline of grid steps
/// from the boundary of hole `i + 1` to the outer boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumDomain {
    pub outer: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
    pub cuts: Vec<Vec<Point>>,
    /// `p_0` on the outer boundary followed by one point per hole; empty
    /// selects the endpoints of the cuts.
    #[serde(default)]
    pub reference_points: Vec<Point>,
}

impl ContinuumDomain {
    pub fn genus(&self) -> usize {
        self.holes.len()
    }
}

/// Two copies of a vertex on a cut; `right = left + m` for the cut's hole.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeamPair {
    pub left: usize,
    pub right: usize,
    pub hole: usize,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    /// Side of the grid cells, each split into four triangles.
    pub spacing: f64,
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub seam_pairs: Vec<SeamPair>,
    /// Boundary component of each vertex: 0 outer, `i` for hole `i`.
    pub boundary_tags: Vec<Option<usize>>,
    /// Mesh vertices of `p_0, …, p_g`, left copies on a cut.
    pub reference_vertices: Vec<usize>,
    /// One point strictly inside each hole.
    pub hole_points: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
    /// Hole each right copy belongs to.
    right_copy_of: Vec<Option<usize>>,
    cells: HashMap<Node, Vec<usize>>,
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Even-odd test; the point must not lie on the polygon.
pub fn in_polygon(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(a: Point, b: Point, p: Point, tol: f64) -> bool {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if cross(ab, ap).abs() > tol * len2.sqrt() {
        return false;
    }
    let t = (ab[0] * ap[0] + ab[1] * ap[1]) / len2;
    (-1e-12..=1.0 + 1e-12).contains(&t)
}

fn on_polygon(poly: &[Point], p: Point, tol: f64) -> bool {
    (0..poly.len()).any(|i| on_segment(poly[i], poly[(i + 1) % poly.len()], p, tol))
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let tol = 1e-12;
    (d1.abs() < tol && on_segment(a, b, c, tol))
        || (d2.abs() < tol && on_segment(a, b, d, tol))
        || (d3.abs() < tol && on_segment(c, d, a, tol))
        || (d4.abs() < tol && on_segment(c, d, b, tol))
}

fn check_polygon(poly: &[Point], what: &str) -> Result<(), VarSolveError> {
    let fail = |msg: &str| Err(VarSolveError::MeshFailure(format!("{what}: {msg}")));
    if poly.len() < 3 {
        return fail("fewer than three vertices");
    }
    if signed_area(poly).abs() < 1e-14 {
        return fail("zero area");
    }
    let n = poly.len();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return fail("self-intersecting");
            }
        }
    }
    Ok(())
}

fn polygons_meet(p: &[Point], q: &[Point]) -> bool {
    (0..p.len()).any(|i| (0..q.len()).any(|j| segments_intersect(p[i], p[(i + 1) % p.len()], q[j], q[(j + 1) % q.len()])))
}

fn snap(p: Point, h: f64) -> Result<Node, VarSolveError> {
    let (i, j) = ((p[0] / h).round(), (p[1] / h).round());
    let tol = 1e-7 * h.max(p[0].abs().max(p[1].abs()) * 1e-3);
    if (p[0] - i * h).abs() > tol || (p[1] - j * h).abs() > tol {
        return Err(VarSolveError::MeshFailure(format!("point ({}, {}) is not on the grid of spacing {h}", p[0], p[1])));
    }
    Ok((i as i64, j as i64))
}

/// Mesh nodes in half-cell units along a grid path: cell corners have even
/// coordinates and a diagonal step passes through the cell centre.
fn half_units(path: &[Node]) -> Vec<Node> {
    let mut out = vec![(2 * path[0].0, 2 * path[0].1)];
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.0 != b.0 && a.1 != b.1 {
            out.push((a.0 + b.0, a.1 + b.1));
        }
        out.push((2 * b.0, 2 * b.1));
    }
    out
}

/// Grid nodes along a polyline of horizontal, vertical or diagonal sides.
fn grid_path(poly: &[Point], h: f64, closed: bool) -> Result<Vec<Node>, VarSolveError> {
    let nodes: Vec<Node> = poly.iter().map(|&p| snap(p, h)).collect::<Result<_, _>>()?;
    let sides = if closed { nodes.len() } else { nodes.len() - 1 };
    let mut out = vec![nodes[0]];
    for k in 0..sides {
        let (a, b) = (nodes[k], nodes[(k + 1) % nodes.len()]);
        let (di, dj) = (b.0 - a.0, b.1 - a.1);
        if !(di == 0 || dj == 0 || di.abs() == dj.abs()) || (di == 0 && dj == 0) {
            return Err(VarSolveError::MeshFailure(format!("side {a:?} -> {b:?} is not grid-aligned")));
        }
        let steps = di.abs().max(dj.abs());
        for s in 1..=steps {
            out.push((a.0 + di.signum() * s, a.1 + dj.signum() * s));
        }
    }
    Ok(out)
}

// Quarter triangles of a unit cell: bottom, right, top, left.
const QUARTERS: [Point; 4] = [[0.5, 1.0 / 6.0], [5.0 / 6.0, 0.5], [0.5, 5.0 / 6.0], [1.0 / 6.0, 0.5]];

/// Triangulates `domain` on the grid of the given spacing.
///
/// Each grid cell is split by its diagonals into four quarter triangles
/// around a centre vertex, and the quarters inside the domain are kept. The
/// cuts are then opened by duplicating their vertices.
pub fn build_mesh(domain: &ContinuumDomain, spacing: f64) -> Result<Mesh, VarSolveError> {
    let h = spacing;
    if !(h > 0.0 && h.is_finite()) {
        return Err(VarSolveError::MeshFailure(format!("spacing {h}")));
    }
    let g = domain.genus();
    if domain.cuts.len() != g {
        return Err(VarSolveError::MeshFailure(format!("{} cuts for {g} holes", domain.cuts.len())));
    }
    check_polygon(&domain.outer, "outer boundary")?;
    for (i, hole) in domain.holes.iter().enumerate() {
        check_polygon(hole, &format!("hole {}", i + 1))?;
        if polygons_meet(hole, &domain.outer) || !hole.iter().all(|&p| in_polygon(&domain.outer, p)) {
            return Err(VarSolveError::MeshFailure(format!("hole {} is not strictly inside the outer boundary", i + 1)));
        }
        for (j, other) in domain.holes.iter().enumerate().take(i) {
            if polygons_meet(hole, other) || in_polygon(other, hole[0]) || in_polygon(hole, other[0]) {
                return Err(VarSolveError::MeshFailure(format!("holes {} and {} overlap", j + 1, i + 1)));
            }
        }
    }
    for poly in std::iter::once(&domain.outer).chain(&domain.holes) {
        grid_path(poly, h, true)?;
    }

    let outer_nodes: Vec<Node> = domain.outer.iter().map(|&p| snap(p, h)).collect::<Result<_, _>>()?;
    let (i0, i1) = (outer_nodes.iter().map(|n| n.0).min().unwrap(), outer_nodes.iter().map(|n| n.0).max().unwrap());
    let (j0, j1) = (outer_nodes.iter().map(|n| n.1).min().unwrap(), outer_nodes.iter().map(|n| n.1).max().unwrap());
    let inside = |p: Point| in_polygon(&domain.outer, p) && !domain.holes.iter().any(|q| in_polygon(q, p));

    let mut hole_points: Vec<Option<Point>> = vec![None; g];
    let mut node_tris: Vec<[Node; 3]> = Vec::new();
    for i in i0..i1 {
        for j in j0..j1 {
            let (ll, lr, ur, ul) = ((2 * i, 2 * j), (2 * i + 2, 2 * j), (2 * i + 2, 2 * j + 2), (2 * i, 2 * j + 2));
            let c = (2 * i + 1, 2 * j + 1);
            let q: Vec<Point> = QUARTERS.iter().map(|c| [(i as f64 + c[0]) * h, (j as f64 + c[1]) * h]).collect();
            let inq: Vec<bool> = q.iter().map(|&p| inside(p)).collect();
            for (k, hp) in hole_points.iter_mut().enumerate() {
                if hp.is_none() {
                    *hp = q.iter().copied().find(|&p| in_polygon(&domain.holes[k], p));
                }
            }
            let kept = inq.iter().filter(|&&b| b).count();
            let contiguous = (0..4).filter(|&k| inq[k] && !inq[(k + 1) % 4]).count() <= 1;
            if !(kept == 0 || kept == 4 || kept == 2 && contiguous) {
                return Err(VarSolveError::MeshFailure(format!("cell {:?} is cut by the boundary off the diagonals", (i, j))));
            }
            let quarters = [[ll, lr, c], [lr, ur, c], [ur, ul, c], [ul, ll, c]];
            for k in 0..4 {
                if inq[k] {
                    node_tris.push(quarters[k]);
                }
            }
        }
    }
    if node_tris.is_empty() {
        return Err(VarSolveError::MeshFailure("no triangles".into()));
    }

    let nodes: BTreeSet<Node> = node_tris.iter().flatten().copied().collect();
    let index: BTreeMap<Node, usize> = nodes.iter().enumerate().map(|(k, &n)| (n, k)).collect();
    let mut vertices: Vec<Point> = nodes.iter().map(|&(i, j)| [i as f64 * h / 2.0, j as f64 * h / 2.0]).collect();
    let mut triangles: Vec<[usize; 3]> = node_tris.iter().map(|t| t.map(|n| index[&n])).collect();

    let tol = 1e-9 * h;
    let mut boundary_tags: Vec<Option<usize>> = Vec::with_capacity(vertices.len());
    for &p in &vertices {
        let mut tag = on_polygon(&domain.outer, p, tol).then_some(0);
        for (k, hole) in domain.holes.iter().enumerate() {
            if on_polygon(hole, p, tol) {
                if tag.is_some() {
                    return Err(VarSolveError::MeshFailure(format!("boundary components meet at ({}, {})", p[0], p[1])));
                }
                tag = Some(k + 1);
            }
        }
        boundary_tags.push(tag);
    }

    // Open the cuts. Replacements are collected against the uncut mesh and
    // applied together.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }
    let mut used_nodes = BTreeSet::new();
    let mut replacements: Vec<(usize, usize, usize)> = Vec::new();
    let mut seam_pairs = Vec::new();
    let mut right_copy_of: Vec<Option<usize>> = vec![None; vertices.len()];
    let mut cut_ends: Vec<(usize, usize)> = Vec::new();
    for (c, cut) in domain.cuts.iter().enumerate() {
        let hole = c + 1;
        if cut.len() < 2 {
            return Err(VarSolveError::MeshFailure(format!("cut {hole} has fewer than two points")));
        }
        let path = half_units(&grid_path(cut, h, false)?);
        let ids: Vec<usize> = path
            .iter()
            .map(|n| index.get(n).copied().ok_or_else(|| VarSolveError::MeshFailure(format!("cut {hole} leaves the domain at {n:?}"))))
            .collect::<Result<_, _>>()?;
        let last = ids.len() - 1;
        for (k, &v) in ids.iter().enumerate() {
            if !used_nodes.insert(v) {
                return Err(VarSolveError::MeshFailure(format!("cut {hole} revisits or meets another cut at {:?}", vertices[v])));
            }
            let expected = match k {
                0 => Some(hole),
                k if k == last => Some(0),
                _ => None,
            };
            if boundary_tags[v] != expected {
                return Err(VarSolveError::MeshFailure(format!(
                    "cut {hole} must run from hole {hole} to the outer boundary inside the domain"
                )));
            }
        }
        let cut_edges: BTreeSet<(usize, usize)> = ids.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
        for w in ids.windows(2) {
            if !incident[w[0]].iter().any(|t| triangles[*t].contains(&w[1])) {
                return Err(VarSolveError::MeshFailure(format!(
                    "cut {hole} step {:?} is not a mesh edge",
                    (vertices[w[0]], vertices[w[1]])
                )));
            }
        }
        for (k, &v) in ids.iter().enumerate() {
            let (w, t_dir) = if k < last {
                (ids[k + 1], sub(vertices[ids[k + 1]], vertices[v]))
            } else {
                (ids[k - 1], sub(vertices[v], vertices[ids[k - 1]]))
            };
            let fan = &incident[v];
            let groups = fan_groups(&triangles, fan, v, &cut_edges);
            if groups.iter().copied().max() != Some(1) {
                return Err(VarSolveError::MeshFailure(format!("cut {hole} does not separate the triangles at {:?}", vertices[v])));
            }
            let across: Vec<usize> = (0..fan.len()).filter(|&f| triangles[fan[f]].contains(&w)).collect();
            let left_group = across
                .iter()
                .find(|&&f| {
                    let tri = triangles[fan[f]];
                    let third = tri.iter().copied().find(|&u| u != v && u != w).unwrap();
                    cross(t_dir, sub(vertices[third], vertices[v])) > 0.0
                })
                .map(|&f| groups[f])
                .ok_or_else(|| VarSolveError::MeshFailure(format!("cut {hole} has no left side at {:?}", vertices[v])))?;
            let copy = vertices.len();
            vertices.push(vertices[v]);
            boundary_tags.push(boundary_tags[v]);
            right_copy_of.push(Some(hole));
            seam_pairs.push(SeamPair { left: v, right: copy, hole });
            for (f, &t) in fan.iter().enumerate() {
                if groups[f] != left_group {
                    replacements.push((t, v, copy));
                }
            }
        }
        cut_ends.push((ids[0], ids[last]));
    }
    for (t, old, new) in replacements {
        for slot in triangles[t].iter_mut() {
            if *slot == old {
                *slot = new;
            }
        }
    }

    let locate = |p: Point| -> Result<usize, VarSolveError> {
        let n = snap(p, h)?;
        index
            .get(&(2 * n.0, 2 * n.1))
            .copied()
            .ok_or_else(|| VarSolveError::MeshFailure(format!("reference point ({}, {}) is not a mesh vertex", p[0], p[1])))
    };
    let reference_vertices: Vec<usize> = if domain.reference_points.is_empty() {
        if g == 0 {
            vec![*index.values().find(|&&v| boundary_tags[v] == Some(0)).unwrap()]
        } else {
            std::iter::once(cut_ends[0].1).chain(cut_ends.iter().map(|e| e.0)).collect()
        }
    } else {
        if domain.reference_points.len() != g + 1 {
            return Err(VarSolveError::MeshFailure(format!("{} reference points for genus {g}", domain.reference_points.len())));
        }
        domain.reference_points.iter().map(|&p| locate(p)).collect::<Result<_, _>>()?
    };
    for (i, &v) in reference_vertices.iter().enumerate() {
        if boundary_tags[v] != Some(i) {
            return Err(VarSolveError::MeshFailure(format!("reference point {i} is not on boundary component {i}")));
        }
    }

    let mut cells: HashMap<Node, Vec<usize>> = HashMap::new();
    for (t, tri) in node_tris.iter().enumerate() {
        let cell = (tri.iter().map(|n| n.0).min().unwrap().div_euclid(2), tri.iter().map(|n| n.1).min().unwrap().div_euclid(2));
        cells.entry(cell).or_default().push(t);
    }
    Ok(Mesh {
        spacing: h,
        vertices,
        triangles,
        seam_pairs,
        boundary_tags,
        reference_vertices,
        hole_points: hole_points.into_iter().map(|p| p.expect("hole has positive area")).collect(),
        holes: domain.holes.clone(),
        right_copy_of,
        cells,
    })
}

/// Labels the triangles of the fan around `v` by connected group, joining
/// neighbours across non-cut edges.
fn fan_groups(triangles: &[[usize; 3]], fan: &[usize], v: usize, cut_edges: &BTreeSet<(usize, usize)>) -> Vec<usize> {
    let mut label = vec![usize::MAX; fan.len()];
    let mut next = 0;
    for start in 0..fan.len() {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut stack = vec![start];
        while let Some(a) = stack.pop() {
            for b in 0..fan.len() {
                if label[b] != usize::MAX {
                    continue;
                }
                let shared: Vec<usize> = triangles[fan[a]].iter().copied().filter(|u| *u != v && triangles[fan[b]].contains(u)).collect();
                if shared.iter().any(|&w| !cut_edges.contains(&(v.min(w), v.max(w)))) {
                    label[b] = next;
                    stack.push(b);
                }
            }
        }
        next += 1;
    }
    label
}

impl Mesh {
    pub fn genus(&self) -> usize {
        self.hole_points.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        cross(sub(b, a), sub(c, a)) / 2.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Gradients of the three barycentric coordinates of triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.triangles[t].map(|v| self.vertices[v]);
        let det = cross(sub(p1, p0), sub(p2, p0));
        [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ]
    }

    pub fn gradient(&self, t: usize, values: &[f64]) -> [f64; 2] {
        let d = self.basis_gradients(t);
        let tri = self.triangles[t];
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += d[k][0] * values[tri[k]];
            g[1] += d[k][1] * values[tri[k]];
        }
        g
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Hole whose seam this vertex is the right copy of.
    pub fn right_copy_of(&self, v: usize) -> Option<usize> {
        self.right_copy_of[v]
    }

    /// A triangle containing `p` with the barycentric coordinates of `p`.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let h = self.spacing;
        let (ci, cj) = ((p[0] / h).floor() as i64, (p[1] / h).floor() as i64);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for di in -1..=0 {
            for dj in -1..=0 {
                for &t in self.cells.get(&(ci + di, cj + dj)).into_iter().flatten() {
                    let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
                    let det = cross(sub(b, a), sub(c, a));
                    let l1 = cross(sub(b, p), sub(c, p)) / det;
                    let l2 = cross(sub(c, p), sub(a, p)) / det;
                    let lam = [l1, l2, 1.0 - l1 - l2];
                    let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
                    if best.as_ref().is_none_or(|b| worst > b.2) {
                        best = Some((t, lam, worst));
                    }
                }
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|(t, lam, _)| (t, lam))
    }

    /// Piecewise-linear interpolant of vertex values at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        let (t, lam) = self.locate(p)?;
        Some((0..3).map(|k| lam[k] * values[self.triangles[t][k]]).sum())
    }

    /// Undirected edges of the triangulation.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                out.insert((a.min(b), a.max(b)));
            }
        }
        out
    }
}

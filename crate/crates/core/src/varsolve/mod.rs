//! Limit shapes: maximizing `∬ σ(∇h)` over Lipschitz functions with
//! prescribed boundary data and monodromy.
//!
//! Heights are piecewise linear on a triangulation of the cut-open domain,
//! so membership of each triangle gradient in `𝒩` is four linear
//! inequalities. The concave program is solved by a primal-dual interior
//! point method, with `σ` evaluated at `(1 − ε)∇h` so that its gradient
//! stays finite on the frozen boundary.

pub mod banded;
pub mod mesh;
pub mod problems;

use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::LatticeDomain;
use crate::sample::EmpiricalField;
use crate::tension::{sigma, slope_derivatives, Slope, TensionError};
use banded::BorderedSystem;
pub use mesh::{build_mesh, ContinuumDomain, Mesh, SeamPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarSolveError {
    #[error("mesh failure: {0}")]
    MeshFailure(String),
    #[error("boundary data: {0}")]
    BadData(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("every triangle of the solution is frozen")]
    Degenerate,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("triangle {triangle} has gradient of ℓ¹ norm {l1} outside the Newton polygon")]
    InfeasibleHeight { triangle: usize, l1: f64 },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error(transparent)]
    Tension(#[from] TensionError),
}

pub type Shape = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Boundary data `𝔟_i = ψ_i + Σ_j (m_j / 2π)·Θ_j` on each component, with
/// `ψ_i` single-valued and `Θ_j` the angle about a point of hole `j`,
/// continued along the cut-open domain.
///
/// The outer data is normalized to vanish at `p_0`; the data on hole `i` is
/// shifted to equal `r_i` at `p_i`.
#[derive(Clone)]
pub struct BoundaryData {
    /// `ψ_0` for the outer boundary, then one per hole.
    pub shapes: Vec<Shape>,
    pub monodromy: Vec<f64>,
    /// Winding centre of each hole; empty selects an arbitrary point of it,
    /// which is only meaningful for zero monodromy.
    pub centers: Vec<[f64; 2]>,
}

impl BoundaryData {
    pub fn flat(genus: usize) -> Self {
        BoundaryData {
            shapes: (0..=genus).map(|_| Arc::new(|_: [f64; 2]| 0.0) as Shape).collect(),
            monodromy: vec![0.0; genus],
            centers: Vec::new(),
        }
    }

    pub fn with_monodromy(mut self, monodromy: Vec<f64>, centers: Vec<[f64; 2]>) -> Self {
        self.monodromy = monodromy;
        self.centers = centers;
        self
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData").field("components", &self.shapes.len()).field("monodromy", &self.monodromy).finish()
    }
}

/// Piecewise-linear height on the mesh of the cut-open domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticHeight {
    pub values: Vec<f64>,
    pub height_change: Vec<f64>,
    pub monodromy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Pinned height changes; free when absent.
    pub fixed_r: Option<Vec<f64>>,
    pub max_iterations: usize,
    /// Bound on the scaled dual residual.
    pub tolerance: f64,
    /// Bound on the duality gap per unit area.
    pub gap_tolerance: f64,
    /// `σ` is evaluated at `(1 − surrogate_eps)∇h`.
    pub surrogate_eps: f64,
    /// Triangles within this `ℓ¹` distance of `∂𝒩` are frozen.
    pub eps_bnd: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { fixed_r: None, max_iterations: 400, tolerance: 1e-7, gap_tolerance: 1e-10, surrogate_eps: 1e-6, eps_bnd: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub h_star: AsymptoticHeight,
    pub r_star: Vec<f64>,
    /// `∬ σ(∇h*) / |Ω|`.
    pub objective: f64,
    pub area: f64,
    pub frozen_mask: Vec<bool>,
    pub eps_bnd: f64,
    pub iterations: usize,
    /// Largest of the scaled dual residual, primal residual and gap.
    pub residual: f64,
    /// `sᵀλ / |Ω|`; bounds the suboptimality of the surrogate objective.
    pub duality_gap: f64,
}

impl SolveReport {
    pub fn frozen_fraction(&self) -> f64 {
        self.frozen_mask.iter().filter(|&&f| f).count() as f64 / self.frozen_mask.len() as f64
    }
}

/// Continuous lifts over the cut-open mesh of the angles about the given
/// centres, one vector per centre.
pub fn lifted_angles(mesh: &Mesh, centers: &[[f64; 2]]) -> Result<Vec<Vec<f64>>, VarSolveError> {
    let n = mesh.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in mesh.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut lifts = Vec::new();
    for c in centers {
        let angle = |v: usize| (mesh.vertices[v][1] - c[1]).atan2(mesh.vertices[v][0] - c[0]);
        let mut theta = vec![f64::NAN; n];
        let used = (0..n).find(|&v| !adj[v].is_empty()).unwrap_or(0);
        theta[used] = angle(used);
        let mut queue = VecDeque::from([used]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if theta[w].is_nan() {
                    let mut d = angle(w) - angle(v);
                    if d > PI {
                        d -= 2.0 * PI;
                    } else if d < -PI {
                        d += 2.0 * PI;
                    }
                    theta[w] = theta[v] + d;
                    queue.push_back(w);
                }
            }
        }
        if theta.iter().any(|t| t.is_nan()) {
            return Err(VarSolveError::MeshFailure("the cut-open domain is disconnected".into()));
        }
        lifts.push(theta);
    }
    Ok(lifts)
}

/// Value of each vertex as `x[var] + offset`, or `offset` when fixed.
#[derive(Clone, Debug)]
struct Layout {
    var: Vec<Option<usize>>,
    offset: Vec<f64>,
    interior: usize,
    /// Index of the unknown of each free `r_i`.
    r_var: Vec<Option<usize>>,
}

impl Layout {
    fn unknowns(&self) -> usize {
        self.interior + self.r_var.iter().flatten().count()
    }

    fn value(&self, v: usize, x: &[f64]) -> f64 {
        self.var[v].map_or(0.0, |k| x[k]) + self.offset[v]
    }
}

fn layout(mesh: &Mesh, data: &BoundaryData, fixed_r: Option<&[f64]>) -> Result<Layout, VarSolveError> {
    let g = mesh.genus();
    if data.shapes.len() != g + 1 || data.monodromy.len() != g {
        return Err(VarSolveError::BadData(format!("{} shapes and {} monodromies for genus {g}", data.shapes.len(), data.monodromy.len())));
    }
    if let Some(r) = fixed_r {
        if r.len() != g {
            return Err(VarSolveError::BadData(format!("{} pinned height changes for genus {g}", r.len())));
        }
    }
    let centers = if data.centers.is_empty() { mesh.hole_points.clone() } else { data.centers.clone() };
    if centers.len() != g || centers.iter().zip(&mesh.holes).any(|(c, hole)| !mesh::in_polygon(hole, *c)) {
        return Err(VarSolveError::BadData("each hole needs one winding centre inside it".into()));
    }
    let lifts = lifted_angles(mesh, &centers)?;
    let shape =
        |i: usize, v: usize| data.shapes[i](mesh.vertices[v]) + (0..g).map(|j| data.monodromy[j] / (2.0 * PI) * lifts[j][v]).sum::<f64>();
    let n = mesh.vertices.len();
    let mut var = vec![None; n];
    let mut offset = vec![0.0; n];
    let mut interior = 0;
    #[allow(clippy::needless_range_loop)]
    for v in 0..n {
        if mesh.boundary_tags[v].is_none() && mesh.right_copy_of(v).is_none() {
            var[v] = Some(interior);
            interior += 1;
        }
    }
    let r_var: Vec<Option<usize>> = match fixed_r {
        Some(_) => vec![None; g],
        None => (0..g).map(|i| Some(interior + i)).collect(),
    };
    let base: Vec<f64> = (0..=g).map(|i| shape(i, mesh.reference_vertices[i])).collect();
    for v in 0..n {
        match mesh.boundary_tags[v] {
            Some(0) => offset[v] = shape(0, v) - base[0],
            Some(i) => {
                offset[v] = shape(i, v) - base[i] + fixed_r.map_or(0.0, |r| r[i - 1]);
                var[v] = r_var[i - 1];
            }
            None => {}
        }
    }
    for p in &mesh.seam_pairs {
        let m = data.monodromy[p.hole - 1];
        if mesh.boundary_tags[p.left].is_none() {
            var[p.right] = var[p.left];
            offset[p.right] = offset[p.left] + m;
        } else if (offset[p.right] - offset[p.left] - m).abs() > 1e-9 * (1.0 + m.abs()) {
            return Err(VarSolveError::MeshFailure(format!("cut {} is oriented against the winding of the boundary data", p.hole)));
        }
    }
    Ok(Layout { var, offset, interior, r_var })
}

/// Per-triangle data of the discrete functional.
struct Element {
    d: [[f64; 2]; 3],
    area: f64,
    var: [Option<usize>; 3],
    off: [f64; 3],
}

impl Element {
    fn slope(&self, x: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..3 {
            let h = self.var[k].map_or(0.0, |i| x[i]) + self.off[k];
            g[0] += self.d[k][0] * h;
            g[1] += self.d[k][1] * h;
        }
        g
    }

    fn linear_part(&self, dx: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..3 {
            if let Some(i) = self.var[k] {
                g[0] += self.d[k][0] * dx[i];
                g[1] += self.d[k][1] * dx[i];
            }
        }
        g
    }

    /// Adds `Dᵀ v` to the unknowns.
    fn scatter(&self, v: [f64; 2], out: &mut [f64]) {
        for k in 0..3 {
            if let Some(i) = self.var[k] {
                out[i] += self.d[k][0] * v[0] + self.d[k][1] * v[1];
            }
        }
    }

    /// Adds the magnitudes of the terms `scatter` would add.
    fn scatter_abs(&self, v: [f64; 2], out: &mut [f64]) {
        for k in 0..3 {
            if let Some(i) = self.var[k] {
                out[i] += (self.d[k][0] * v[0] + self.d[k][1] * v[1]).abs();
            }
        }
    }

    /// Adds `Dᵀ Q D`.
    fn assemble(&self, q: [[f64; 2]; 2], sys: &mut BorderedSystem) {
        for a in 0..3 {
            let Some(va) = self.var[a] else { continue };
            let qa = [q[0][0] * self.d[a][0] + q[1][0] * self.d[a][1], q[0][1] * self.d[a][0] + q[1][1] * self.d[a][1]];
            for b in 0..3 {
                let Some(vb) = self.var[b] else { continue };
                if va >= vb {
                    sys.add(va, vb, qa[0] * self.d[b][0] + qa[1] * self.d[b][1]);
                }
            }
        }
    }

    fn active(&self) -> bool {
        self.var.iter().any(Option::is_some)
    }
}

const DIRS: [[f64; 2]; 4] = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];

fn l1(g: [f64; 2]) -> f64 {
    g[0].abs() + g[1].abs()
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Checks the Lipschitz condition between neighbouring boundary vertices
/// and on triangles whose values are all prescribed.
fn check_data(mesh: &Mesh, lay: &Layout, elements: &[Element]) -> Result<(), VarSolveError> {
    for (a, b) in mesh.edges() {
        if lay.var[a].is_some() && lay.var[a] == lay.var[b] || lay.var[a].is_none() && lay.var[b].is_none() {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let dist = (pa[0] - pb[0]).abs().max((pa[1] - pb[1]).abs());
            let jump = (lay.offset[a] - lay.offset[b]).abs();
            if jump > 2.0 * dist * (1.0 + 1e-9) + 1e-12 {
                return Err(VarSolveError::Infeasible(format!(
                    "boundary data changes by {jump} between ({}, {}) and ({}, {})",
                    pa[0], pa[1], pb[0], pb[1]
                )));
            }
        }
    }
    check_envelope(mesh, lay)?;
    for (t, e) in elements.iter().enumerate() {
        if !e.active() && l1(e.slope(&[])) > 2.0 + 1e-9 {
            return Err(VarSolveError::Infeasible(format!("prescribed triangle {t} is steeper than the Newton polygon")));
        }
    }
    Ok(())
}

#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Every admissible height changes by at most `2·|e|∞` along a mesh edge
/// `e`, so the prescribed values must lie below the upper envelope
/// `min_q (b_q + 2·dist(q, ·))` of the cut-open edge graph.
fn check_envelope(mesh: &Mesh, lay: &Layout) -> Result<(), VarSolveError> {
    let n = mesh.vertices.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (a, b) in mesh.edges() {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let w = 2.0 * (pa[0] - pb[0]).abs().max((pa[1] - pb[1]).abs());
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let mut upper = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for v in (0..n).filter(|&v| lay.var[v].is_none()) {
        upper[v] = lay.offset[v];
        heap.push(Key(upper[v], v));
    }
    while let Some(Key(u, v)) = heap.pop() {
        if u > upper[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            if u + len < upper[w] {
                upper[w] = u + len;
                heap.push(Key(upper[w], w));
            }
        }
    }
    for v in (0..n).filter(|&v| lay.var[v].is_none()) {
        if upper[v] < lay.offset[v] - 1e-9 * (1.0 + lay.offset[v].abs()) {
            let p = mesh.vertices[v];
            return Err(VarSolveError::Infeasible(format!(
                "boundary value {} at ({}, {}) exceeds the Lipschitz bound {} from the other boundary data",
                lay.offset[v], p[0], p[1], upper[v]
            )));
        }
    }
    Ok(())
}

/// Maximizes the discrete surface tension functional.
pub fn maximize(mesh: &Mesh, data: &BoundaryData, opts: &SolveOptions) -> Result<SolveReport, VarSolveError> {
    let lay = layout(mesh, data, opts.fixed_r.as_deref())?;
    let elements: Vec<Element> = (0..mesh.triangles.len())
        .map(|t| {
            let tri = mesh.triangles[t];
            Element { d: mesh.basis_gradients(t), area: mesh.area(t), var: tri.map(|v| lay.var[v]), off: tri.map(|v| lay.offset[v]) }
        })
        .collect();
    check_data(mesh, &lay, &elements)?;
    let active: Vec<usize> = (0..elements.len()).filter(|&t| elements[t].active()).collect();
    let nx = lay.unknowns();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); lay.interior];
    for e in &elements {
        for a in e.var.iter().flatten() {
            for b in e.var.iter().flatten() {
                if a != b && *a < lay.interior && *b < lay.interior {
                    adj[*a].push(*b);
                }
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut sys = BorderedSystem::new(&adj, nx - lay.interior);
    let max_area = elements.iter().map(|e| e.area).fold(0.0, f64::max);
    let total_area = mesh.total_area();

    // Start from the discrete harmonic extension.
    let mut x = vec![0.0; nx];
    if nx > 0 {
        sys.clear();
        let mut rhs = vec![0.0; nx];
        for &t in &active {
            let e = &elements[t];
            e.assemble([[e.area, 0.0], [0.0, e.area]], &mut sys);
            let g = e.slope(&x);
            e.scatter([-e.area * g[0], -e.area * g[1]], &mut rhs);
        }
        sys.factor();
        sys.solve(&mut rhs);
        x = rhs;
    }

    // One row per direction and active triangle; rows independent of the
    // unknowns are fixed by the data, already checked, and dropped.
    let mut rows: Vec<(usize, [f64; 2])> = Vec::with_capacity(4 * active.len());
    for (k, &t) in active.iter().enumerate() {
        let e = &elements[t];
        let scale = e.d.iter().map(|d| l1(*d)).fold(0.0, f64::max);
        for a in DIRS {
            let varies = (0..3).any(|b| {
                e.var[b].is_some_and(|v| {
                    let coef: f64 = (0..3).filter(|&c| e.var[c] == Some(v)).map(|c| dot2(a, e.d[c])).sum();
                    coef.abs() > 1e-10 * scale
                })
            });
            if varies {
                rows.push((k, a));
            } else if dot2(a, e.slope(&x)) > 2.0 + 1e-9 {
                return Err(VarSolveError::Infeasible(format!("triangle {t} is forced outside the Newton polygon")));
            }
        }
    }
    let m = rows.len();
    let mut s: Vec<f64> = rows.iter().map(|&(k, a)| (2.0 - dot2(a, elements[active[k]].slope(&x))).max(1.0)).collect();
    let mut lam: Vec<f64> = rows.iter().map(|&(k, _)| elements[active[k]].area).collect();

    let eps = opts.surrogate_eps;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut converged = nx == 0;
    let mut rp_inf = 0.0;
    // From an infeasible start, first reach the interior by minimizing the
    // Dirichlet energy under the same constraints.
    let mut phase_one = rows.iter().any(|&(k, a)| dot2(a, elements[active[k]].slope(&x)) >= 2.0 * (1.0 - 1e-7));
    while !converged && iterations < opts.max_iterations {
        let slopes: Vec<[f64; 2]> = active.iter().map(|&t| elements[t].slope(&x)).collect();
        let cmax = slopes.iter().map(|&g| l1(g)).fold(0.0, f64::max);
        let c = if cmax > 0.0 { (1.0 - eps).min(2.0 * (1.0 - 1e-7) / cmax) } else { 1.0 - eps };

        let mut rd = vec![0.0; nx];
        let mut rd_scale = vec![max_area; nx];
        let mut rp = vec![0.0; m];
        let mut hess: Vec<[[f64; 2]; 2]> = Vec::with_capacity(active.len());
        for (k, &t) in active.iter().enumerate() {
            let e = &elements[t];
            let g = slopes[k];
            if phase_one {
                e.scatter([e.area * g[0], e.area * g[1]], &mut rd);
                e.scatter_abs([e.area * g[0], e.area * g[1]], &mut rd_scale);
                hess.push([[e.area, 0.0], [0.0, e.area]]);
                continue;
            }
            let (ds, hs) = slope_derivatives(Slope { s: c * g[0], t: c * g[1] })?;
            e.scatter([-e.area * c * ds[0], -e.area * c * ds[1]], &mut rd);
            e.scatter_abs([e.area * c * ds[0], e.area * c * ds[1]], &mut rd_scale);
            let w = -e.area * c * c;
            hess.push([[w * hs[0][0], w * hs[0][1]], [w * hs[1][0], w * hs[1][1]]]);
        }
        for (r, &(k, a)) in rows.iter().enumerate() {
            rp[r] = dot2(a, slopes[k]) + s[r] - 2.0;
            elements[active[k]].scatter([lam[r] * a[0], lam[r] * a[1]], &mut rd);
            elements[active[k]].scatter_abs([lam[r] * a[0], lam[r] * a[1]], &mut rd_scale);
        }
        let mu = s.iter().zip(&lam).map(|(a, b)| a * b).sum::<f64>() / m.max(1) as f64;
        rp_inf = rp.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        // Stationarity relative to the size of the terms being balanced.
        let rd_inf = rd.iter().zip(&rd_scale).fold(0.0f64, |a, (r, w)| a.max(r.abs() / w));
        gap = mu * m as f64 / total_area;
        residual = rd_inf.max(rp_inf).max(gap);
        if !(rd_inf.is_finite() && rp_inf.is_finite() && gap.is_finite()) {
            residual = f64::NAN;
            break;
        }
        if phase_one {
            if rp_inf < 1e-10 {
                phase_one = false;
                lam = rows.iter().map(|&(k, _)| elements[active[k]].area).collect();
                continue;
            }
        } else if c == 1.0 - eps && rd_inf < opts.tolerance && rp_inf < 1e-9 && gap < opts.gap_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        sys.clear();
        let mut q = hess;
        for (r, &(k, a)) in rows.iter().enumerate() {
            let w = lam[r] / s[r];
            for p in 0..2 {
                for l in 0..2 {
                    q[k][p][l] += w * a[p] * a[l];
                }
            }
        }
        for (k, &t) in active.iter().enumerate() {
            elements[t].assemble(q[k], &mut sys);
        }
        sys.factor();
        let direction = |rc: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            let mut rhs: Vec<f64> = rd.iter().map(|v| -v).collect();
            for (r, &(k, a)) in rows.iter().enumerate() {
                let f = (rc[r] - lam[r] * rp[r]) / s[r];
                elements[active[k]].scatter([f * a[0], f * a[1]], &mut rhs);
            }
            sys.solve(&mut rhs);
            let mut ds = vec![0.0; m];
            let mut dl = vec![0.0; m];
            let dgs: Vec<[f64; 2]> = active.iter().map(|&t| elements[t].linear_part(&rhs)).collect();
            for (r, &(k, a)) in rows.iter().enumerate() {
                ds[r] = -rp[r] - dot2(a, dgs[k]);
                dl[r] = (-rc[r] - lam[r] * ds[r]) / s[r];
            }
            (rhs, ds, dl)
        };
        let max_step = |v: &[f64], dv: &[f64]| v.iter().zip(dv).filter(|(_, d)| **d < 0.0).map(|(a, d)| -a / d).fold(1.0f64, f64::min);

        let rc_aff: Vec<f64> = s.iter().zip(&lam).map(|(a, b)| a * b).collect();
        let (_, ds_a, dl_a) = direction(&rc_aff);
        let a_p = max_step(&s, &ds_a);
        let a_d = max_step(&lam, &dl_a);
        let mu_aff = (0..m).map(|r| (s[r] + a_p * ds_a[r]) * (lam[r] + a_d * dl_a[r])).sum::<f64>() / m.max(1) as f64;
        let centering = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc: Vec<f64> = (0..m).map(|r| s[r] * lam[r] + ds_a[r] * dl_a[r] - centering * mu).collect();
        let (dx, ds, dl) = direction(&rc);

        let mut alpha = (0.995 * max_step(&s, &ds)).min(0.995 * max_step(&lam, &dl)).min(1.0);
        let trial = |alpha: f64| -> Vec<f64> { x.iter().zip(&dx).map(|(a, b)| a + alpha * b).collect() };
        if !phase_one {
            for _ in 0..60 {
                let xt = trial(alpha);
                if active.iter().all(|&t| c * l1(elements[t].slope(&xt)) < 2.0 * (1.0 - 1e-9)) {
                    break;
                }
                alpha *= 0.5;
            }
        }
        x = trial(alpha);
        for r in 0..m {
            s[r] += alpha * ds[r];
            lam[r] += alpha * dl[r];
        }
    }
    if !converged {
        if rp_inf > 1e-6 {
            return Err(VarSolveError::Infeasible(format!("primal residual {rp_inf:e} after {iterations} iterations")));
        }
        return Err(VarSolveError::NotConverged { iterations, residual });
    }

    let values: Vec<f64> = (0..mesh.vertices.len()).map(|v| lay.value(v, &x)).collect();
    let g = mesh.genus();
    let r_star: Vec<f64> = (0..g).map(|i| lay.r_var[i].map_or_else(|| opts.fixed_r.as_ref().unwrap()[i], |k| x[k])).collect();
    let h_star = AsymptoticHeight { values, height_change: r_star.clone(), monodromy: data.monodromy.clone() };
    let frozen_mask: Vec<bool> = (0..mesh.triangles.len()).map(|t| 2.0 - l1(mesh.gradient(t, &h_star.values)) < opts.eps_bnd).collect();
    if frozen_mask.iter().all(|&f| f) {
        return Err(VarSolveError::Degenerate);
    }
    let objective = functional_value(mesh, &h_star, true)?;
    Ok(SolveReport {
        h_star,
        r_star,
        objective,
        area: total_area,
        frozen_mask,
        eps_bnd: opts.eps_bnd,
        iterations,
        residual: if nx == 0 { 0.0 } else { residual },
        duality_gap: if nx == 0 { 0.0 } else { gap },
    })
}

/// `Σ area(T)·σ(∇h|_T)`, divided by the total area when `normalized`.
///
/// Gradients within `10⁻⁷` outside `𝒩` are treated as boundary slopes.
pub fn functional_value(mesh: &Mesh, h: &AsymptoticHeight, normalized: bool) -> Result<f64, VarSolveError> {
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let g = mesh.gradient(t, &h.values);
        let n = l1(g);
        if n > 2.0 + 1e-7 {
            return Err(VarSolveError::InfeasibleHeight { triangle: t, l1: n });
        }
        let k = if n > 2.0 { 2.0 / n } else { 1.0 };
        total += mesh.area(t) * sigma(Slope { s: k * g[0], t: k * g[1] })?;
    }
    Ok(if normalized { total / mesh.total_area() } else { total })
}

/// Richardson extrapolation of objectives at spacings `ℓ, ℓ/2, ℓ/4`:
/// returns the estimated limit and the observed convergence order.
pub fn richardson(objectives: [f64; 3]) -> (f64, f64) {
    let [a, b, c] = objectives;
    let (d1, d2) = (a - b, b - c);
    if d2 == 0.0 || d1 == 0.0 || d1.signum() != d2.signum() {
        return (c, f64::NAN);
    }
    let ratio = d1 / d2;
    let order = ratio.log2();
    (c - d2 / (ratio - 1.0), order)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareOptions {
    /// Lattice vertex `v` sits at `v·position_scale` in the continuum.
    pub position_scale: f64,
    /// Points closer than this to the frozen boundary are skipped.
    pub band: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub sup: f64,
    pub l2: f64,
    pub points: usize,
    pub excluded: usize,
    /// `|R̄/N − r*|` per hole, with `r*` read off `h*` at the lattice
    /// reference points.
    pub r_distance: Vec<f64>,
}

/// Distance to the nearest lift: the smallest `|d − Σ k_j m_j|` over
/// `k ∈ {−1, 0, 1}^g`.
fn cover_distance(d: f64, m: &[f64]) -> f64 {
    let mut best = d.abs();
    let combos = 3usize.pow(m.len() as u32);
    for code in 0..combos {
        let mut c = code;
        let mut shift = 0.0;
        for &mj in m {
            shift += (c % 3) as f64 * mj - mj;
            c /= 3;
        }
        best = best.min((d - shift).abs());
    }
    best
}

/// Compares a sampled mean height field with a limit shape.
///
/// Both are defined on their own fundamental domains, so values are matched
/// up to deck transformations.
pub fn compare_to_empirical(
    mesh: &Mesh,
    report: &SolveReport,
    field: &EmpiricalField,
    domain: &LatticeDomain,
    opts: CompareOptions,
) -> Result<CompareReport, VarSolveError> {
    if field.sum.len() != domain.vertices().len() {
        return Err(VarSolveError::DomainMismatch(format!(
            "field has {} vertices, domain has {}",
            field.sum.len(),
            domain.vertices().len()
        )));
    }
    if domain.genus() != mesh.genus() {
        return Err(VarSolveError::DomainMismatch(format!("lattice genus {} and continuum genus {}", domain.genus(), mesh.genus())));
    }
    let mean = field.mean().ok_or_else(|| VarSolveError::DomainMismatch("empty field".into()))?;
    let m = &report.h_star.monodromy;
    let values = &report.h_star.values;

    let mut tri_adj: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            tri_adj.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let mut interface: Vec<[f64; 2]> = Vec::new();
    for ts in tri_adj.values() {
        if ts.len() == 2 && report.frozen_mask[ts[0]] != report.frozen_mask[ts[1]] {
            let (c0, c1) = (mesh.centroid(ts[0]), mesh.centroid(ts[1]));
            interface.push([(c0[0] + c1[0]) / 2.0, (c0[1] + c1[1]) / 2.0]);
        }
    }

    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    let mut points = 0;
    let mut excluded = 0;
    let mut outside = 0;
    for (v, &vert) in domain.vertices().iter().enumerate() {
        let p = [vert.0 as f64 * opts.position_scale, vert.1 as f64 * opts.position_scale];
        let Some(hv) = mesh.interpolate(values, p) else {
            outside += 1;
            continue;
        };
        let near = interface.iter().any(|q| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() < opts.band);
        if near {
            excluded += 1;
            continue;
        }
        let d = cover_distance(mean[v] - hv, m);
        sup = sup.max(d);
        sq += d * d;
        points += 1;
    }
    if outside * 4 > domain.vertices().len() {
        return Err(VarSolveError::DomainMismatch(format!("{outside} lattice vertices fall outside the mesh")));
    }

    let r_bar = field.mean_height_change().unwrap_or_default();
    let at = |i: usize| {
        let v = domain.reference_point(i);
        let p = [v.0 as f64 * opts.position_scale, v.1 as f64 * opts.position_scale];
        mesh.interpolate(values, p).unwrap_or_else(|| nearest_value(mesh, values, p))
    };
    let h0 = at(0);
    let r_distance = (1..=domain.genus()).map(|i| cover_distance(r_bar[i - 1] / field.scale - (at(i) - h0), m)).collect();
    Ok(CompareReport { sup, l2: if points > 0 { (sq / points as f64).sqrt() } else { 0.0 }, points, excluded, r_distance })
}

/// Value at the closest point of the mesh boundary, interpolated along the
/// boundary edge that contains it.
fn nearest_value(mesh: &Mesh, values: &[f64], p: [f64; 2]) -> f64 {
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut best = (f64::INFINITY, f64::NAN);
    for (&(a, b), _) in count.iter().filter(|(_, &c)| c == 1) {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let s = (((p[0] - pa[0]) * d[0] + (p[1] - pa[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
        let dist = (p[0] - pa[0] - s * d[0]).hypot(p[1] - pa[1] - s * d[1]);
        if dist < best.0 {
            best = (dist, values[a] + s * (values[b] - values[a]));
        }
    }
    best.1
}

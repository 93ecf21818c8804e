//! Metropolis sampling of uniform tilings with flips and hole rotations.
//!
//! Every proposal is an involution proposed with the same probability as
//! its inverse, and valid proposals are always accepted, so the uniform
//! measure on tilings is stationary. Without a fixed height change the
//! proposals are flips and band rotations; with one, flips only, which
//! preserve `R`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::heights::{height_from_tiling, max_extension, HeightError, Tiling};
use crate::lattice::{Dir, LatticeDomain, Square, Vertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SampleError {
    #[error("domain has no tiling")]
    NotTileable,
    #[error("no tiling has height change {0:?}")]
    EmptyFiber(Vec<i64>),
    #[error("height change {0:?} has the wrong length")]
    BadHeightChange(Vec<i64>),
    #[error("height mirror diverged from the tiling after {0} steps")]
    MirrorMismatch(u64),
    #[error(transparent)]
    Height(#[from] HeightError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Raise,
    Lower,
}

impl Direction {
    fn sign(self) -> i64 {
        match self {
            Direction::Raise => 1,
            Direction::Lower => -1,
        }
    }
}

/// A cyclic chain of squares around a hole that can rotate its dominoes.
#[derive(Clone, Debug)]
pub struct Band {
    pub hole: usize,
    /// Squares in cyclic order; consecutive squares share an edge.
    pub squares: Vec<usize>,
    /// Vertices enclosed by the band, including its inner boundary.
    inner: Vec<usize>,
    /// Height shift of the enclosed vertices when the pairing moves from
    /// `(0,1),(2,3),…` to `(1,2),(3,4),…`.
    shift_even_to_odd: i64,
}

/// Concentric bands around hole `hole`: ring `k` holds the squares sharing a
/// corner with the hole or an earlier ring. The list stops at the first
/// ring that leaves the domain or is not a simple square cycle.
pub fn hole_bands(domain: &LatticeDomain, hole: usize, max_rings: usize) -> Vec<Band> {
    let comp = &domain.boundary_components()[hole];
    let mut region: BTreeSet<Square> = comp.squares.iter().copied().collect();
    let mut bands = Vec::new();
    for _ in 0..max_rings {
        let ring: BTreeSet<Square> = region
            .iter()
            .flat_map(|s| {
                let s = *s;
                (-1..=1).flat_map(move |dx| (-1..=1).map(move |dy| Square(s.0 + dx, s.1 + dy)))
            })
            .filter(|s| !region.contains(s))
            .collect();
        let Some(band) = make_band(domain, hole, &region, &ring) else { break };
        bands.push(band);
        region.extend(ring);
    }
    bands
}

fn make_band(domain: &LatticeDomain, hole: usize, region: &BTreeSet<Square>, ring: &BTreeSet<Square>) -> Option<Band> {
    if ring.iter().any(|&s| !domain.contains(s)) {
        return None;
    }
    // order the ring as a cycle
    let nbrs = |s: Square| -> Vec<Square> { Dir::ALL.iter().map(|&d| s.step(d)).filter(|t| ring.contains(t)).collect() };
    if ring.iter().any(|&s| nbrs(s).len() != 2) {
        return None;
    }
    let start = *ring.iter().next()?;
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = nbrs(start)[0];
    while cur != start {
        cycle.push(cur);
        let n = nbrs(cur);
        let next = if n[0] == prev { n[1] } else { n[0] };
        prev = cur;
        cur = next;
    }
    if cycle.len() != ring.len() || cycle.len() % 2 != 0 {
        return None;
    }
    let inner_v: BTreeSet<Vertex> = region.iter().flat_map(|s| s.corners()).collect();
    // each shared edge must run from the outer side to the inner side
    let l = cycle.len();
    let mut shift = None;
    for j in 0..l {
        let (a, b) = (cycle[j], cycle[(j + 1) % l]);
        let [p, q] = shared_edge(a, b);
        let (outer, inner) = match (inner_v.contains(&p), inner_v.contains(&q)) {
            (false, true) => (p, q),
            (true, false) => (q, p),
            _ => return None,
        };
        if j == 0 {
            let h = domain.halfedge(outer, inner)?;
            // crossed in the even pairing, free in the odd one
            shift = Some(4 * domain.delta(h));
        }
    }
    let inner = inner_v.iter().filter_map(|&v| domain.vertex_id(v)).collect();
    Some(Band { hole, squares: cycle.iter().map(|&s| domain.square_id(s).unwrap()).collect(), inner, shift_even_to_odd: shift? })
}

/// Endpoints of the edge shared by two adjacent squares.
fn shared_edge(a: Square, b: Square) -> [Vertex; 2] {
    let xs: BTreeSet<Vertex> = a.corners().into_iter().collect();
    let common: Vec<Vertex> = b.corners().into_iter().filter(|v| xs.contains(v)).collect();
    [common[0], common[1]]
}

/// Working tiling with an incrementally maintained height mirror.
#[derive(Clone, Debug)]
pub struct MarkovState<'a> {
    domain: &'a LatticeDomain,
    partner: Vec<u32>,
    heights: Vec<i64>,
    rng: ChaCha8Rng,
    pub rng_seed: u64,
    pub step_count: u64,
    /// Interior vertices with their SW, SE, NE, NW squares.
    sites: Vec<(usize, [u32; 4])>,
    site_of_vertex: Vec<u32>,
    bands: Vec<Band>,
    use_rotations: bool,
    /// Recompute and compare the height every this many steps.
    pub check_every: Option<u64>,
}

/// Rings per hole offered as rotation proposals.
pub const DEFAULT_RINGS: usize = 64;

impl<'a> MarkovState<'a> {
    pub fn new(domain: &'a LatticeDomain, tiling: &Tiling, seed: u64, use_rotations: bool) -> Result<Self, SampleError> {
        let h = height_from_tiling(domain, tiling)?;
        let mut sites = Vec::new();
        let mut site_of_vertex = vec![u32::MAX; domain.vertices().len()];
        for (vi, &v) in domain.vertices().iter().enumerate() {
            let ids: Option<Vec<u32>> = v.squares().iter().map(|&s| domain.square_id(s).map(|i| i as u32)).collect();
            if let Some(ids) = ids {
                site_of_vertex[vi] = sites.len() as u32;
                sites.push((vi, [ids[0], ids[1], ids[2], ids[3]]));
            }
        }
        let bands = (1..=domain.genus()).flat_map(|i| hole_bands(domain, i, DEFAULT_RINGS)).collect();
        Ok(MarkovState {
            domain,
            partner: tiling.partners().to_vec(),
            heights: h.values,
            rng: ChaCha8Rng::seed_from_u64(seed),
            rng_seed: seed,
            step_count: 0,
            sites,
            site_of_vertex,
            bands,
            use_rotations,
            check_every: None,
        })
    }

    pub fn domain(&self) -> &LatticeDomain {
        self.domain
    }

    pub fn tiling(&self) -> Tiling {
        Tiling::from_partners_unchecked(self.partner.clone())
    }

    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn height_change(&self) -> Vec<i64> {
        let d = self.domain;
        let base = self.heights[d.vertex_id(d.reference_point(0)).unwrap()];
        (1..=d.genus()).map(|i| self.heights[d.vertex_id(d.reference_point(i)).unwrap()] - base).collect()
    }

    /// Number of distinct proposals.
    pub fn proposal_count(&self) -> usize {
        2 * self.sites.len() + if self.use_rotations { 2 * self.bands.len() } else { 0 }
    }

    /// Rotates two parallel dominoes around interior vertex `vertex` if that
    /// moves its height in `direction`.
    pub fn flip_move(&mut self, vertex: usize, direction: Direction) -> bool {
        let site = self.site_of_vertex[vertex];
        if site == u32::MAX {
            return false;
        }
        let [sw, se, ne, nw] = self.sites[site as usize].1;
        let p = &mut self.partner;
        let horizontal = p[sw as usize] == se && p[nw as usize] == ne;
        let vertical = p[sw as usize] == nw && p[se as usize] == ne;
        if !horizontal && !vertical {
            return false;
        }
        // horizontal → vertical frees the north and south edges at the vertex
        let sw_sign = self.domain.squares()[sw as usize].sign();
        let change = if horizontal { 4 * sw_sign } else { -4 * sw_sign };
        if change.signum() != direction.sign() {
            return false;
        }
        if horizontal {
            p[sw as usize] = nw;
            p[nw as usize] = sw;
            p[se as usize] = ne;
            p[ne as usize] = se;
        } else {
            p[sw as usize] = se;
            p[se as usize] = sw;
            p[nw as usize] = ne;
            p[ne as usize] = nw;
        }
        self.heights[vertex] += change;
        true
    }

    /// Shifts the domino chain of band `band` one step if the band is a
    /// cyclic chain and the rotation moves the enclosed heights in `direction`.
    pub fn rotation_move(&mut self, band: usize, direction: Direction) -> bool {
        let Some(b) = self.bands.get(band) else { return false };
        let l = b.squares.len();
        let p = &self.partner;
        let paired = |j: usize| p[b.squares[j]] as usize == b.squares[(j + 1) % l];
        let even = (0..l).step_by(2).all(paired);
        let odd = !even && (1..l).step_by(2).all(paired);
        if !even && !odd {
            return false;
        }
        let shift = if even { b.shift_even_to_odd } else { -b.shift_even_to_odd };
        if shift.signum() != direction.sign() {
            return false;
        }
        let first = if even { 1 } else { 0 };
        for j in (first..l).step_by(2) {
            let (s, t) = (b.squares[j], b.squares[(j + 1) % l]);
            self.partner[s] = t as u32;
            self.partner[t] = s as u32;
        }
        for &v in &b.inner {
            self.heights[v] += shift;
        }
        true
    }

    /// Indices of the bands around hole `hole`.
    pub fn bands_of_hole(&self, hole: usize) -> Vec<usize> {
        (0..self.bands.len()).filter(|&i| self.bands[i].hole == hole).collect()
    }

    /// One Metropolis step; returns whether the proposal was accepted.
    pub fn step(&mut self) -> bool {
        let n = self.proposal_count();
        if n == 0 {
            // no moves at all: the chain is constant
            self.step_count += 1;
            return false;
        }
        let k = self.rng.gen_range(0..n);
        let dir = if k % 2 == 0 { Direction::Raise } else { Direction::Lower };
        let j = k / 2;
        let accepted =
            if j < self.sites.len() { self.flip_move(self.sites[j].0, dir) } else { self.rotation_move(j - self.sites.len(), dir) };
        self.step_count += 1;
        accepted
    }

    pub fn run(&mut self, steps: u64) -> Result<(), SampleError> {
        for _ in 0..steps {
            self.step();
            if let Some(k) = self.check_every {
                if self.step_count.is_multiple_of(k) {
                    self.check_mirror()?;
                }
            }
        }
        Ok(())
    }

    /// Full recomputation of the height from the tiling.
    pub fn check_mirror(&self) -> Result<(), SampleError> {
        let h = height_from_tiling(self.domain, &self.tiling())?;
        if h.values != self.heights {
            return Err(SampleError::MirrorMismatch(self.step_count));
        }
        Ok(())
    }
}

/// Per-vertex moments of the normalized height and the `R` histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalField {
    /// Heights are divided by this scale before accumulation.
    pub scale: f64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub n_samples: u64,
    pub r_histogram: BTreeMap<Vec<i64>, u64>,
}

impl EmpiricalField {
    pub fn new(vertices: usize, scale: f64) -> Self {
        EmpiricalField { scale, sum: vec![0.0; vertices], sum_sq: vec![0.0; vertices], n_samples: 0, r_histogram: BTreeMap::new() }
    }

    pub fn record(&mut self, heights: &[i64], r: Vec<i64>) {
        for (i, &h) in heights.iter().enumerate() {
            let x = h as f64 / self.scale;
            self.sum[i] += x;
            self.sum_sq[i] += x * x;
        }
        self.n_samples += 1;
        *self.r_histogram.entry(r).or_insert(0) += 1;
    }

    pub fn mean(&self) -> Option<Vec<f64>> {
        (self.n_samples > 0).then(|| self.sum.iter().map(|s| s / self.n_samples as f64).collect())
    }

    pub fn variance(&self) -> Option<Vec<f64>> {
        let n = self.n_samples as f64;
        (self.n_samples > 0).then(|| self.sum.iter().zip(&self.sum_sq).map(|(s, q)| (q / n - (s / n) * (s / n)).max(0.0)).collect())
    }

    /// Mean height change, in lattice units.
    pub fn mean_height_change(&self) -> Option<Vec<f64>> {
        let n = self.n_samples as f64;
        let g = self.r_histogram.keys().next()?.len();
        let mut out = vec![0.0; g];
        for (r, &c) in &self.r_histogram {
            for (o, x) in out.iter_mut().zip(r) {
                *o += *x as f64 * c as f64 / n;
            }
        }
        Some(out)
    }

    pub fn merge(&mut self, other: &EmpiricalField) {
        assert_eq!(self.sum.len(), other.sum.len(), "fields on different domains");
        assert_eq!(self.scale, other.scale, "fields with different scales");
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        self.n_samples += other.n_samples;
        for (r, c) in &other.r_histogram {
            *self.r_histogram.entry(r.clone()).or_insert(0) += c;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleConfig {
    pub n_samples: u64,
    /// Defaults to `N² · |squares|` proposals, with `N` the scale.
    pub burn_in: Option<u64>,
    /// Defaults to `|squares|` proposals.
    pub thinning: Option<u64>,
    pub seed: u64,
    pub fixed_r: Option<Vec<i64>>,
    /// Normalization of heights and lengths.
    pub scale: f64,
}

impl SampleConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        SampleConfig { n_samples, burn_in: None, thinning: None, seed, fixed_r: None, scale: 1.0 }
    }
}

/// A tiling to start the chain from: the maximal one, or the maximal one
/// in the fiber of `fixed_r`.
pub fn initial_tiling(domain: &LatticeDomain, fixed_r: Option<&[i64]>) -> Result<Tiling, SampleError> {
    let mut partial = BTreeMap::from([(domain.reference_point(0), 0)]);
    if let Some(r) = fixed_r {
        if r.len() != domain.genus() {
            return Err(SampleError::BadHeightChange(r.to_vec()));
        }
        for (i, &ri) in r.iter().enumerate() {
            partial.insert(domain.reference_point(i + 1), ri);
        }
    }
    let h = match max_extension(domain, &partial) {
        Ok(h) => h,
        Err(HeightError::NotTileable) => return Err(SampleError::NotTileable),
        Err(_) => return Err(SampleError::EmptyFiber(fixed_r.unwrap_or(&[]).to_vec())),
    };
    Ok(crate::heights::tiling_from_height(domain, &h)?)
}

/// Runs one chain and calls `visit` on every recorded state.
pub fn run_chain<F: FnMut(&MarkovState)>(domain: &LatticeDomain, cfg: &SampleConfig, mut visit: F) -> Result<(), SampleError> {
    let start = initial_tiling(domain, cfg.fixed_r.as_deref())?;
    let mut state = MarkovState::new(domain, &start, cfg.seed, cfg.fixed_r.is_none())?;
    let squares = domain.squares().len() as u64;
    let burn_in = cfg.burn_in.unwrap_or_else(|| (cfg.scale * cfg.scale).ceil() as u64 * squares);
    let thinning = cfg.thinning.unwrap_or(squares).max(1);
    state.run(burn_in)?;
    for _ in 0..cfg.n_samples {
        state.run(thinning)?;
        visit(&state);
    }
    Ok(())
}

pub fn sample_uniform(domain: &LatticeDomain, cfg: &SampleConfig) -> Result<EmpiricalField, SampleError> {
    let mut field = EmpiricalField::new(domain.vertices().len(), cfg.scale);
    run_chain(domain, cfg, |s| field.record(s.heights(), s.height_change()))?;
    Ok(field)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationRow {
    pub n: u32,
    pub samples: u64,
    /// Fraction of samples with `sup |H/N − mean| > C`.
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationTable {
    pub rows: Vec<ConcentrationRow>,
    /// Least-squares slope of `log tail` against `N`, over nonzero tails.
    pub log_slope: Option<f64>,
}

/// Empirical tail `ℙ(sup |H_N − mean| > c)` of the normalized height for
/// each size, all with the same number of samples and schedule rules.
pub fn concentration_scan<F>(family: F, ns: &[u32], c: f64, n_samples: u64, seed: u64) -> Result<ConcentrationTable, SampleError>
where
    F: Fn(u32) -> LatticeDomain,
{
    let mut rows = Vec::with_capacity(ns.len());
    for (k, &n) in ns.iter().enumerate() {
        let domain = family(n);
        let mut cfg = SampleConfig::new(n_samples, seed.wrapping_add(k as u64));
        cfg.scale = n as f64;
        let mut samples: Vec<Vec<i64>> = Vec::with_capacity(n_samples as usize);
        run_chain(&domain, &cfg, |s| samples.push(s.heights().to_vec()))?;
        let nv = domain.vertices().len();
        let mut mean = vec![0.0; nv];
        for s in &samples {
            for (m, &h) in mean.iter_mut().zip(s) {
                *m += h as f64;
            }
        }
        for m in &mut mean {
            *m /= samples.len() as f64;
        }
        let exceed = samples.iter().filter(|s| s.iter().zip(&mean).any(|(&h, &m)| (h as f64 - m).abs() / n as f64 > c)).count();
        rows.push(ConcentrationRow { n, samples: samples.len() as u64, tail: exceed as f64 / samples.len().max(1) as f64 });
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.tail > 0.0).map(|r| (r.n as f64, r.tail.ln())).collect();
    let log_slope = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });
    Ok(ConcentrationTable { rows, log_slope })
}

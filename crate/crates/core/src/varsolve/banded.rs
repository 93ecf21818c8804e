//! Symmetric positive definite solves in reverse Cuthill-McKee order.

#![allow(clippy::needless_range_loop)]

use std::collections::VecDeque;

/// Reverse Cuthill-McKee ordering of an undirected graph; `perm[new] = old`.
pub fn rcm_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &root in &by_degree {
        if seen[root] {
            continue;
        }
        let start = pseudo_peripheral(adj, root);
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            next.dedup();
            for w in next {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Endpoint of repeated breadth-first sweeps, a cheap approximation to a
/// vertex of maximal eccentricity.
fn pseudo_peripheral(adj: &[Vec<usize>], root: usize) -> usize {
    let mut v = root;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, e) = farthest(adj, v);
        if e <= ecc {
            break;
        }
        v = far;
        ecc = e;
    }
    v
}

fn farthest(adj: &[Vec<usize>], root: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut last = root;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (last, dist[last])
}

/// Lower band of a symmetric matrix: `band[i * (bw + 1) + (i - j)]` holds
/// entry `(i, j)` for `i - bw ≤ j ≤ i`.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    /// Bandwidth of a graph under a permutation given as `pos[old] = new`.
    pub fn bandwidth(adj: &[Vec<usize>], pos: &[usize]) -> usize {
        adj.iter().enumerate().flat_map(|(v, ws)| ws.iter().map(move |&w| pos[v].abs_diff(pos[w]))).max().unwrap_or(0)
    }

    pub fn clear(&mut self) {
        self.band.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Adds `value` at `(i, j)`; entries above the diagonal are ignored, so
    /// a symmetric contribution is added once per unordered pair.
    pub fn add_lower(&mut self, i: usize, j: usize, value: f64) {
        if j <= i {
            debug_assert!(i - j <= self.bw);
            self.band[i * (self.bw + 1) + (i - j)] += value;
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * (self.bw + 1) + (i - j)]
    }

    /// In-place Cholesky factorization `A = L Lᵀ`. Nonpositive pivots are
    /// replaced by `floor` times the largest diagonal entry seen.
    pub fn factor(&mut self, floor: f64) -> usize {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut bumped = 0;
        let mut dmax: f64 = 0.0;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = self.band[i * w + (i - j)];
                for k in k0..j {
                    sum -= self.band[i * w + (i - k)] * self.band[j * w + (j - k)];
                }
                if j == i {
                    dmax = dmax.max(sum.abs());
                    let pivot = if sum > floor * dmax && sum > 0.0 {
                        sum
                    } else {
                        bumped += 1;
                        (floor * dmax).max(f64::MIN_POSITIVE)
                    };
                    self.band[i * w] = pivot.sqrt();
                } else {
                    self.band[i * w + (i - j)] = sum / self.at(j, j);
                }
            }
        }
        bumped
    }

    /// Solves `L Lᵀ x = b` with the factored matrix.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut sum = b[i];
            for k in i.saturating_sub(bw)..i {
                sum -= self.at(i, k) * b[k];
            }
            b[i] = sum / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in i + 1..n.min(i + bw + 1) {
                sum -= self.at(k, i) * b[k];
            }
            b[i] = sum / self.at(i, i);
        }
    }
}

/// Symmetric system with a banded block for the mesh unknowns and a small
/// dense border for global unknowns coupled to many of them:
///
/// ```text
/// [ A  B ] [x]   [f]
/// [ Bᵀ C ] [y] = [g]
/// ```
///
/// solved through the Schur complement `C − Bᵀ A⁻¹ B`.
#[derive(Clone, Debug)]
pub struct BorderedSystem {
    /// `pos[old] = new` for the banded unknowns.
    pos: Vec<usize>,
    pub a: BandMatrix,
    /// `b[k][i]`: column `k` of `B`, in permuted order.
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    /// `A⁻¹ B`, column by column.
    ab: Vec<Vec<f64>>,
    schur: Vec<Vec<f64>>,
}

impl BorderedSystem {
    pub fn new(adj: &[Vec<usize>], border: usize) -> Self {
        let perm = rcm_order(adj);
        let mut pos = vec![0; adj.len()];
        for (new, &old) in perm.iter().enumerate() {
            pos[old] = new;
        }
        let bw = BandMatrix::bandwidth(adj, &pos);
        BorderedSystem {
            a: BandMatrix::zeros(adj.len(), bw),
            pos,
            b: vec![vec![0.0; adj.len()]; border],
            c: vec![vec![0.0; border]; border],
            ab: Vec::new(),
            schur: Vec::new(),
        }
    }

    pub fn interior(&self) -> usize {
        self.pos.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.a.bw
    }

    pub fn clear(&mut self) {
        self.a.clear();
        self.b.iter_mut().flatten().for_each(|x| *x = 0.0);
        self.c.iter_mut().flatten().for_each(|x| *x = 0.0);
    }

    /// Adds a symmetric contribution at unknowns `i`, `j` (interior unknowns
    /// first, then the border), counting the unordered pair once.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let n = self.interior();
        match (i < n, j < n) {
            (true, true) => {
                let (pi, pj) = (self.pos[i], self.pos[j]);
                self.a.add_lower(pi.max(pj), pi.min(pj), value);
            }
            (true, false) => self.b[j - n][self.pos[i]] += value,
            (false, true) => self.b[i - n][self.pos[j]] += value,
            (false, false) => {
                self.c[i - n][j - n] += value;
                if i != j {
                    self.c[j - n][i - n] += value;
                }
            }
        }
    }

    /// Factors the banded block and forms the Schur complement of the
    /// border. Returns the number of regularized pivots.
    pub fn factor(&mut self) -> usize {
        let bumped = self.a.factor(1e-14);
        let g = self.c.len();
        self.ab = self.b.clone();
        for col in &mut self.ab {
            self.a.solve(col);
        }
        self.schur = self.c.clone();
        for k in 0..g {
            for l in 0..g {
                self.schur[k][l] -= dot(&self.b[k], &self.ab[l]);
            }
        }
        bumped
    }

    /// Solves with the factored system; `rhs` is in unpermuted order.
    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.interior();
        let g = self.c.len();
        let mut f = vec![0.0; n];
        for i in 0..n {
            f[self.pos[i]] = rhs[i];
        }
        self.a.solve(&mut f);
        let mut y = vec![0.0; g];
        if g > 0 {
            let r: Vec<f64> = (0..g).map(|k| rhs[n + k] - dot(&self.b[k], &f)).collect();
            y = dense_solve(self.schur.clone(), r);
            for (l, col) in self.ab.iter().enumerate() {
                for i in 0..n {
                    f[i] -= col[i] * y[l];
                }
            }
        }
        for i in 0..n {
            rhs[i] = f[self.pos[i]];
        }
        rhs[n..n + g].copy_from_slice(&y);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting for the small Schur block.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        let d = a[col][col];
        if d == 0.0 {
            continue;
        }
        for row in col + 1..n {
            let f = a[row][col] / d;
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = if a[i][i] == 0.0 { 0.0 } else { (b[i] - s) / a[i][i] };
    }
    x
}

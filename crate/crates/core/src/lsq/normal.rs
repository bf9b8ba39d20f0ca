//! Normal equations `A^H A V = A^H B` by envelope `L D L^H` factorization.
//!
//! The unknowns are reordered by reverse Cuthill-McKee before factoring.
//! The periodic seam of the k-major layout would otherwise stretch the
//! envelope across the whole matrix.

use std::collections::VecDeque;

use num_complex::Complex64;

use super::{norm2, LsqSolution, LsqSolver, SolveOptions, SolveStats};
use crate::assembly::SparseSystem;
use crate::error::{Error, Result, SolverDiagnostics};

const MAX_REFINEMENT: usize = 8;

#[derive(Debug, Clone, Copy, Default)]
pub struct NormalCholesky;

impl LsqSolver for NormalCholesky {
    fn name(&self) -> &'static str {
        "normal-cholesky"
    }

    fn solve(&self, sys: &SparseSystem, opts: &SolveOptions) -> Result<LsqSolution> {
        opts.check()?;
        let adj = adjacency(sys);
        let perm = reverse_cuthill_mckee(&adj);
        let mut env = Envelope::normal_matrix(sys, &perm, &adj);
        let fail = |reason: String, iterations, cond| Error::SolverFailure {
            solver: self.name().into(),
            reason,
            diagnostics: SolverDiagnostics {
                iterations,
                condition_estimate: cond,
                ..SolverDiagnostics::default()
            },
        };
        env.factor().map_err(|row| fail(format!("nonpositive pivot at row {row}"), 0, f64::INFINITY))?;
        let cond = env.condition_estimate();

        let n = sys.n_cols();
        let rhs_norm = norm2(&sys.mul_adjoint(sys.rhs()));
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let mut r: Vec<Complex64> = sys.rhs().to_vec();
        let mut sweeps = 0;
        loop {
            // g = A^H (B - A x)
            let g = sys.mul_adjoint(&r);
            if norm2(&g) <= opts.tol * rhs_norm || sweeps == MAX_REFINEMENT {
                break;
            }
            let mut y: Vec<Complex64> = perm.iter().map(|&old| g[old]).collect();
            env.solve_in_place(&mut y);
            for (new, &old) in perm.iter().enumerate() {
                x[old] += y[new];
            }
            r = sys.residual(&x);
            r.iter_mut().for_each(|ri| *ri = -*ri);
            sweeps += 1;
        }
        let stats = SolveStats {
            solver: self.name().into(),
            iterations: sweeps,
            condition_estimate: cond,
            fill: env.vals.len(),
        };
        LsqSolution::certify(sys, x, opts.tol, stats)
    }
}

/// Neighbours of each unknown in the graph of `A^H A`, sorted, without self.
fn adjacency(sys: &SparseSystem) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); sys.n_cols()];
    for i in 0..sys.n_rows() {
        let (cols, _) = sys.row(i);
        for &p in cols {
            for &q in cols {
                if p != q {
                    adj[p].push(q);
                }
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Reverse Cuthill-McKee ordering; returns `perm[new] = old`.
///
/// Each connected component starts from a pseudo-peripheral node found by
/// repeated breadth-first search.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut scratch = vec![usize::MAX; n];
    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !placed[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap();
        let start = pseudo_peripheral(adj, seed, &mut scratch);
        let first = order.len();
        order.push(start);
        placed[start] = true;
        let mut head = first;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !placed[u]).collect();
            next.sort_by_key(|&u| (adj[u].len(), u));
            for u in next {
                placed[u] = true;
                order.push(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize, level: &mut [usize]) -> usize {
    let mut root = seed;
    let mut ecc = 0;
    loop {
        let (depth, last) = bfs_levels(adj, root, level);
        let candidate = last
            .into_iter()
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap_or(root);
        if depth <= ecc || candidate == root {
            return root;
        }
        ecc = depth;
        root = candidate;
    }
}

/// Depth of the BFS tree from `root` and the nodes on its last level.
fn bfs_levels(adj: &[Vec<usize>], root: usize, level: &mut [usize]) -> (usize, Vec<usize>) {
    let mut seen = Vec::new();
    let mut queue = VecDeque::from([root]);
    level[root] = 0;
    seen.push(root);
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = depth.max(level[v]);
        for &u in &adj[v] {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                seen.push(u);
                queue.push_back(u);
            }
        }
    }
    let last = seen.iter().copied().filter(|&v| level[v] == depth).collect();
    for v in seen {
        level[v] = usize::MAX;
    }
    (depth, last)
}

/// Lower envelope of a Hermitian matrix, row `i` holding columns
/// `first[i]..=i`. After [`factor`](Self::factor) the strict lower part holds
/// `L` and `d` the pivots.
struct Envelope {
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<Complex64>,
    d: Vec<f64>,
}

impl Envelope {
    fn normal_matrix(sys: &SparseSystem, perm: &[usize], adj: &[Vec<usize>]) -> Self {
        let n = perm.len();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, nbrs) in adj.iter().enumerate() {
            let i = inv[old];
            for &u in nbrs {
                first[i] = first[i].min(inv[u]);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut len = 0;
        for i in 0..n {
            start.push(len);
            len += i - first[i] + 1;
        }
        start.push(len);

        let mut vals = vec![Complex64::new(0.0, 0.0); len];
        for r in 0..sys.n_rows() {
            let (cols, a) = sys.row(r);
            for (&p, &ap) in cols.iter().zip(a) {
                for (&q, &aq) in cols.iter().zip(a) {
                    let (i, j) = (inv[p], inv[q]);
                    if i >= j {
                        // (A^H A)_{pq} = sum conj(a_rp) a_rq
                        vals[start[i] + j - first[i]] += ap.conj() * aq;
                    }
                }
            }
        }
        Self { first, start, vals, d: vec![0.0; n] }
    }

    /// In-place `L D L^H`; returns the failing row on a nonpositive pivot.
    fn factor(&mut self) -> std::result::Result<(), usize> {
        let n = self.d.len();
        for i in 0..n {
            let (fi, si) = (self.first[i], self.start[i]);
            let (done, rest) = self.vals.split_at_mut(si);
            let row = &mut rest[..i - fi + 1];
            for j in fi..i {
                let (fj, sj) = (self.first[j], self.start[j]);
                let lo = fi.max(fj);
                let lj = &done[sj + lo - fj..sj + j - fj];
                let gi = &row[lo - fi..j - fi];
                // row i still holds L_ik d_k for k < j
                let dot: Complex64 = gi.iter().zip(lj).map(|(g, l)| g * l.conj()).sum();
                row[j - fi] -= dot;
            }
            let mut di = row[i - fi].re;
            for j in fi..i {
                let g = row[j - fi];
                let l = g / self.d[j];
                di -= (g * l.conj()).re;
                row[j - fi] = l;
            }
            if !(di > 0.0 && di.is_finite()) {
                return Err(i);
            }
            self.d[i] = di;
        }
        Ok(())
    }

    fn condition_estimate(&self) -> f64 {
        let max = self.d.iter().cloned().fold(0.0, f64::max);
        let min = self.d.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n {
            let (fi, si) = (self.first[i], self.start[i]);
            let l = &self.vals[si..si + i - fi];
            let dot: Complex64 = l.iter().zip(&b[fi..i]).map(|(l, x)| l * x).sum();
            b[i] -= dot;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let (fi, si) = (self.first[i], self.start[i]);
            let xi = b[i];
            let l = &self.vals[si..si + i - fi];
            for (bk, lk) in b[fi..i].iter_mut().zip(l) {
                *bk -= lk.conj() * xi;
            }
        }
    }
}

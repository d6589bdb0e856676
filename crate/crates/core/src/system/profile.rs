//! Envelope (profile) Cholesky factorization with reverse Cuthill-McKee
//! ordering. Structured quadrilateral grids keep a narrow envelope under
//! RCM, which makes this a good fit for the meshes generated here.

use std::collections::VecDeque;
use std::sync::Arc;

use super::sparse::{CsrMatrix, CsrPattern};
use crate::{Error, Result};

/// Ordering and envelope layout, shared by all factorizations of matrices
/// with the same pattern.
#[derive(Debug, Clone)]
pub struct ProfileSymbolic {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
}

impl ProfileSymbolic {
    pub fn new(pattern: &CsrPattern) -> Self {
        let n = pattern.n;
        let perm = reverse_cuthill_mckee(pattern);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = iperm[old];
            for &c in pattern.row(old) {
                let j = iperm[c];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        Self {
            n,
            perm,
            iperm,
            first,
            start,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries of the lower-triangular envelope.
    pub fn envelope_size(&self) -> usize {
        self.start[self.n]
    }

    pub fn max_bandwidth(&self) -> usize {
        (0..self.n).map(|i| i - self.first[i]).max().unwrap_or(0)
    }
}

fn reverse_cuthill_mckee(p: &CsrPattern) -> Vec<usize> {
    let n = p.n;
    let degree: Vec<usize> = (0..n).map(|i| p.row(i).len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    // BFS returning level structure depth and last level
    let bfs_levels = |root: usize| -> (usize, Vec<usize>) {
        let mut level = vec![usize::MAX; n];
        level[root] = 0;
        let mut queue = VecDeque::from([root]);
        let mut last = root;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &w in p.row(v) {
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        let depth = level[last];
        let far: Vec<usize> = (0..n).filter(|&v| level[v] == depth).collect();
        (depth, far)
    };

    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| degree[v]);
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral node (George-Liu)
        let mut root = seed;
        let (mut depth, mut far) = bfs_levels(root);
        loop {
            let cand = *far.iter().min_by_key(|&&v| degree[v]).unwrap();
            let (d2, f2) = bfs_levels(cand);
            if d2 > depth {
                root = cand;
                depth = d2;
                far = f2;
            } else {
                break;
            }
        }
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(p.row(v).iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[derive(Debug, Clone)]
pub struct ProfileCholesky {
    sym: Arc<ProfileSymbolic>,
    l: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            s[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

impl ProfileCholesky {
    pub fn factor(sym: Arc<ProfileSymbolic>, a: &CsrMatrix) -> Result<Self> {
        let n = sym.n;
        assert_eq!(
            a.n(),
            n,
            "matrix size does not match symbolic factorization"
        );
        let mut l = vec![0.0; sym.envelope_size()];
        let p = &a.pattern;
        for old_r in 0..n {
            let i = sym.iperm[old_r];
            for k in p.row_ptr[old_r]..p.row_ptr[old_r + 1] {
                let j = sym.iperm[p.col[k]];
                if j <= i {
                    l[sym.start[i] + j - sym.first[i]] = a.values[k];
                }
            }
        }
        for i in 0..n {
            let fi = sym.first[i];
            let (done, rest) = l.split_at_mut(sym.start[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = sym.first[j];
                let row_j = &done[sym.start[j]..sym.start[j + 1]];
                let k0 = fi.max(fj);
                let s = row_i[j - fi] - dot(&row_i[k0 - fi..j - fi], &row_j[k0 - fj..j - fj]);
                row_i[j - fi] = s / row_j[j - fj];
            }
            let off = &row_i[..i - fi];
            let d = row_i[i - fi] - dot(off, off);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization {
                    pivot: sym.perm[i],
                    value: d,
                });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(Self { sym, l })
    }

    pub fn n(&self) -> usize {
        self.sym.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let sym = &*self.sym;
        let n = sym.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[sym.perm[i]]).collect();
        for i in 0..n {
            let fi = sym.first[i];
            let row = &self.l[sym.start[i]..sym.start[i + 1]];
            let s = y[i] - dot(&row[..i - fi], &y[fi..i]);
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = sym.first[i];
            let row = &self.l[sym.start[i]..sym.start[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, lik) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= lik * xi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[sym.perm[i]] = y[i];
        }
        x
    }
}

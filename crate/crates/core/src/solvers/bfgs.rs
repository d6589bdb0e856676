//! Inverse-form BFGS operator built on top of a base solve.

use log::warn;

#[derive(Debug, Clone)]
struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Stack of secant pairs `(s, y)` with `s = dz`, `y = dr`. The implied
/// stiffness satisfies the secant condition `K s = y` for the latest pair.
#[derive(Debug, Clone, Default)]
pub struct BfgsUpdates {
    pairs: Vec<Pair>,
    skipped: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl BfgsUpdates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores a pair if it satisfies the curvature condition `s.y > 0`.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 0.0) || !sy.is_finite() {
            warn!("skipping BFGS pair with s.y = {sy:e}");
            self.skipped += 1;
            return false;
        }
        self.pairs.push(Pair {
            s,
            y,
            rho: 1.0 / sy,
        });
        true
    }

    /// Applies the updated inverse `H r` with the two-loop recursion, where
    /// `base` applies the inverse of the initial operator.
    pub fn apply_inverse(&self, base: impl FnOnce(&[f64]) -> Vec<f64>, r: &[f64]) -> Vec<f64> {
        let mut q = r.to_vec();
        let mut alpha = vec![0.0; self.pairs.len()];
        for (i, p) in self.pairs.iter().enumerate().rev() {
            alpha[i] = p.rho * dot(&p.s, &q);
            q.iter_mut()
                .zip(&p.y)
                .for_each(|(qj, yj)| *qj -= alpha[i] * yj);
        }
        let mut z = base(&q);
        for (i, p) in self.pairs.iter().enumerate() {
            let beta = p.rho * dot(&p.y, &z);
            z.iter_mut()
                .zip(&p.s)
                .for_each(|(zj, sj)| *zj += (alpha[i] - beta) * sj);
        }
        z
    }
}

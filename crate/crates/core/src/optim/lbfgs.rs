//! Limited-memory quasi-Newton direction from stored update pairs.

use std::collections::VecDeque;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    /// 1 / s'y, cached.
    rho: f64,
}

/// Ring of curvature pairs; oldest pairs fall off when capacity is reached.
pub struct LbfgsState {
    pairs: VecDeque<Pair>,
    capacity: usize,
}

impl LbfgsState {
    pub fn new(capacity: usize) -> Self {
        LbfgsState {
            pairs: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores the pair if it carries positive curvature; returns whether it
    /// was accepted. Rejected pairs leave the state untouched.
    pub fn update(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 0.0) || !sy.is_finite() {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(Pair { s, y, rho: 1.0 / sy });
        true
    }

    /// Two-loop recursion. The initial Hessian guess is the identity scaled
    /// by s'y / y'y of the newest pair; with no history this is steepest
    /// descent.
    pub fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = grad.to_vec();
        if self.pairs.is_empty() {
            for x in &mut q {
                *x = -*x;
            }
            return q;
        }

        let mut alphas = Vec::with_capacity(self.pairs.len());
        for pair in self.pairs.iter().rev() {
            let alpha = pair.rho * dot(&pair.s, &q);
            for (qi, yi) in q.iter_mut().zip(&pair.y) {
                *qi -= alpha * yi;
            }
            alphas.push(alpha);
        }

        let newest = self.pairs.back().unwrap();
        let gamma = 1.0 / (newest.rho * dot(&newest.y, &newest.y));
        for x in &mut q {
            *x *= gamma;
        }

        for (pair, alpha) in self.pairs.iter().zip(alphas.iter().rev()) {
            let beta = pair.rho * dot(&pair.y, &q);
            for (qi, si) in q.iter_mut().zip(&pair.s) {
                *qi += (alpha - beta) * si;
            }
        }

        for x in &mut q {
            *x = -*x;
        }
        q
    }
}

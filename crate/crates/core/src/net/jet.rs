//! Truncated Taylor coefficients ("jets") in up to three input variables.
//!
//! A `Jet2` carries a value, its gradient and the upper triangle of its
//! Hessian with respect to the inputs (x, y, t). Propagating jets through
//! the network yields exact input derivatives in a single forward pass.
//! `Jet3` extends this to third order for residual forms that need it.

/// Unordered index pairs (i <= j) in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Lookup from an unordered pair to its slot in the Hessian triangle.
pub const PAIR_IDX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

/// Unordered index triples (i <= j <= k) in storage order.
pub const TRIPLES: [(usize, usize, usize); 10] = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 0, 2),
    (0, 1, 1),
    (0, 1, 2),
    (0, 2, 2),
    (1, 1, 1),
    (1, 1, 2),
    (1, 2, 2),
    (2, 2, 2),
];

/// Slot of the unordered triple {i, j, k} in [`TRIPLES`].
pub fn triple_idx(i: usize, j: usize, k: usize) -> usize {
    let mut s = [i, j, k];
    s.sort_unstable();
    TRIPLES
        .iter()
        .position(|&t| t == (s[0], s[1], s[2]))
        .expect("triple index in range")
}

/// First three derivatives of tanh evaluated at one point.
///
/// With t = tanh(u): f' = 1 - t^2, f'' = -2 t f', f''' = -2 f' (1 - 3 t^2).
#[inline]
pub fn tanh_derivs(u: f64) -> (f64, f64, f64, f64) {
    let t = u.tanh();
    let f1 = 1.0 - t * t;
    let f2 = -2.0 * t * f1;
    let f3 = -2.0 * f1 * (1.0 - 3.0 * t * t);
    (t, f1, f2, f3)
}

/// Common interface for jet types so the network forward pass is written once.
pub trait Jet: Copy + Clone {
    fn constant(v: f64) -> Self;
    /// Seed for input variable `dir` (value with unit first derivative).
    fn input(v: f64, dir: usize) -> Self;
    /// self += w * x, coefficient-wise.
    fn axpy(&mut self, w: f64, x: &Self);
    fn tanh(&self) -> Self;
    fn value(&self) -> f64;
}

/// Second-order jet: value, gradient, Hessian upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [f64; 6],
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 {
        v: 0.0,
        g: [0.0; 3],
        h: [0.0; 6],
    };

    /// Coefficient-wise dot product. Used by the reverse pass, where a weight
    /// multiplies every coefficient of an activation jet.
    #[inline]
    pub fn dot(&self, o: &Jet2) -> f64 {
        let mut s = self.v * o.v;
        for d in 0..3 {
            s += self.g[d] * o.g[d];
        }
        for p in 0..6 {
            s += self.h[p] * o.h[p];
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.g.iter().all(|x| x.is_finite())
            && self.h.iter().all(|x| x.is_finite())
    }
}

impl Jet for Jet2 {
    #[inline]
    fn constant(v: f64) -> Self {
        Jet2 {
            v,
            g: [0.0; 3],
            h: [0.0; 6],
        }
    }

    #[inline]
    fn input(v: f64, dir: usize) -> Self {
        let mut j = Self::constant(v);
        j.g[dir] = 1.0;
        j
    }

    #[inline]
    fn axpy(&mut self, w: f64, x: &Self) {
        self.v += w * x.v;
        for d in 0..3 {
            self.g[d] += w * x.g[d];
        }
        for p in 0..6 {
            self.h[p] += w * x.h[p];
        }
    }

    /// Composition with tanh by the chain rule through second order:
    /// v_i = f' u_i, v_ij = f'' u_i u_j + f' u_ij.
    #[inline]
    fn tanh(&self) -> Self {
        let (t, f1, f2, _) = tanh_derivs(self.v);
        let mut out = Jet2 {
            v: t,
            g: [0.0; 3],
            h: [0.0; 6],
        };
        for d in 0..3 {
            out.g[d] = f1 * self.g[d];
        }
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            out.h[p] = f2 * self.g[i] * self.g[j] + f1 * self.h[p];
        }
        out
    }

    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
}

/// Adjoint propagation through the tanh composition above.
///
/// `u` is the pre-activation jet recorded on the forward pass, `vbar` the
/// adjoint of the activation jet. Returns the adjoint of `u`.
#[inline]
pub fn tanh_backward(u: &Jet2, vbar: &Jet2) -> Jet2 {
    let (_, f1, f2, f3) = tanh_derivs(u.v);
    let mut ubar = Jet2::ZERO;

    // Through v = f(u0): every output coefficient depends on u0.
    ubar.v = f1 * vbar.v;
    for d in 0..3 {
        ubar.v += f2 * u.g[d] * vbar.g[d];
        ubar.g[d] = f1 * vbar.g[d];
    }
    for (p, &(i, j)) in PAIRS.iter().enumerate() {
        let vb = vbar.h[p];
        ubar.v += (f3 * u.g[i] * u.g[j] + f2 * u.h[p]) * vb;
        ubar.g[i] += f2 * u.g[j] * vb;
        ubar.g[j] += f2 * u.g[i] * vb;
        ubar.h[p] = f1 * vb;
    }
    ubar
}

/// Third-order jet. Forward-only; training never differentiates through it.
#[derive(Debug, Clone, Copy)]
pub struct Jet3 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [f64; 6],
    pub t: [f64; 10],
}

impl Jet for Jet3 {
    #[inline]
    fn constant(v: f64) -> Self {
        Jet3 {
            v,
            g: [0.0; 3],
            h: [0.0; 6],
            t: [0.0; 10],
        }
    }

    #[inline]
    fn input(v: f64, dir: usize) -> Self {
        let mut j = Self::constant(v);
        j.g[dir] = 1.0;
        j
    }

    #[inline]
    fn axpy(&mut self, w: f64, x: &Self) {
        self.v += w * x.v;
        for d in 0..3 {
            self.g[d] += w * x.g[d];
        }
        for p in 0..6 {
            self.h[p] += w * x.h[p];
        }
        for q in 0..10 {
            self.t[q] += w * x.t[q];
        }
    }

    fn tanh(&self) -> Self {
        let (t, f1, f2, f3) = tanh_derivs(self.v);
        let mut out = Self::constant(t);
        for d in 0..3 {
            out.g[d] = f1 * self.g[d];
        }
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            out.h[p] = f2 * self.g[i] * self.g[j] + f1 * self.h[p];
        }
        // Third order by Faa di Bruno:
        // v_ijk = f''' u_i u_j u_k + f'' (u_ij u_k + u_ik u_j + u_jk u_i) + f' u_ijk
        for (q, &(i, j, k)) in TRIPLES.iter().enumerate() {
            let gi = self.g[i];
            let gj = self.g[j];
            let gk = self.g[k];
            let hij = self.h[PAIR_IDX[i][j]];
            let hik = self.h[PAIR_IDX[i][k]];
            let hjk = self.h[PAIR_IDX[j][k]];
            out.t[q] = f3 * gi * gj * gk + f2 * (hij * gk + hik * gj + hjk * gi) + f1 * self.t[q];
        }
        out
    }

    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
}

//! Truncated multivariate Taylor ("jet") arithmetic.
//!
//! A jet stores the Taylor coefficients `∂^α f(x₀)/α!` of a smooth function
//! at a base point, for all multi-indices `|α| ≤ order`. Products truncate at
//! the order, and entire functions compose through their derivative values at
//! the inner jet's base value. Every analytic derivative in this crate —
//! localized eigenfunctions on curved manifolds, Bessel–Fourier modes, the
//! great-circle exponential map — is obtained by propagating jets, never by
//! finite differences.

use std::sync::{Mutex, OnceLock};

/// Maximum supported dimension (ambient evaluations use 3).
pub const MAX_DIM: usize = 3;
/// Maximum supported truncation order.
pub const MAX_ORDER: usize = 8;

/// Canonical enumeration of multi-indices `|α| ≤ order` in dimension `dim`,
/// graded lexicographic: sorted by total degree, then lexicographically.
///
/// This ordering is shared by everything that stores per-multi-index data
/// (jets, localized-field derivative arrays, the field text format).
pub fn multi_indices(dim: usize, order: usize) -> Vec<[u8; 3]> {
    assert!(dim >= 1 && dim <= MAX_DIM, "dimension out of range");
    assert!(order <= MAX_ORDER, "order out of range");
    let mut out = Vec::new();
    for total in 0..=order as u8 {
        match dim {
            1 => out.push([total, 0, 0]),
            2 => {
                for a0 in (0..=total).rev() {
                    out.push([a0, total - a0, 0]);
                }
            }
            _ => {
                for a0 in (0..=total).rev() {
                    for a1 in (0..=total - a0).rev() {
                        out.push([a0, a1, total - a0 - a1]);
                    }
                }
            }
        }
    }
    out
}

/// Number of multi-indices `|α| ≤ order` in `dim` variables.
pub fn jet_len(dim: usize, order: usize) -> usize {
    let n = order;
    match dim {
        1 => n + 1,
        2 => (n + 1) * (n + 2) / 2,
        _ => (n + 1) * (n + 2) * (n + 3) / 6,
    }
}

/// α! for a multi-index.
pub fn alpha_factorial(alpha: &[u8; 3]) -> f64 {
    let fact = |k: u8| -> f64 { (1..=k as u64).product::<u64>().max(1) as f64 };
    fact(alpha[0]) * fact(alpha[1]) * fact(alpha[2])
}

fn pack(alpha: &[u8; 3]) -> usize {
    alpha[0] as usize + 16 * alpha[1] as usize + 256 * alpha[2] as usize
}

/// Shared tables for one (dimension, order) pair: the index list, a packed
/// lookup, and the truncated-product triple list.
#[derive(Debug)]
pub struct JetSpace {
    dim: usize,
    order: usize,
    indices: Vec<[u8; 3]>,
    lookup: Vec<u32>,
    prod: Vec<(u32, u32, u32)>,
}

impl JetSpace {
    fn build(dim: usize, order: usize) -> JetSpace {
        let indices = multi_indices(dim, order);
        let mut lookup = vec![u32::MAX; 4096];
        for (i, a) in indices.iter().enumerate() {
            lookup[pack(a)] = i as u32;
        }
        let mut prod = Vec::new();
        for (ia, a) in indices.iter().enumerate() {
            for (ib, b) in indices.iter().enumerate() {
                let total = a.iter().sum::<u8>() + b.iter().sum::<u8>();
                if total as usize <= order {
                    let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                    prod.push((ia as u32, ib as u32, lookup[pack(&sum)]));
                }
            }
        }
        JetSpace { dim, order, indices, lookup, prod }
    }

    /// Cached space for the given dimension and order.
    pub fn get(dim: usize, order: usize) -> &'static JetSpace {
        static CACHE: OnceLock<Mutex<Vec<&'static JetSpace>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().unwrap();
        if let Some(space) = guard.iter().find(|s| s.dim == dim && s.order == order) {
            return space;
        }
        let space: &'static JetSpace = Box::leak(Box::new(JetSpace::build(dim, order)));
        guard.push(space);
        space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[[u8; 3]] {
        &self.indices
    }

    /// Position of a multi-index in the canonical enumeration.
    pub fn index_of(&self, alpha: &[u8; 3]) -> usize {
        let i = self.lookup[pack(alpha)];
        debug_assert!(i != u32::MAX, "multi-index outside space");
        i as usize
    }
}

/// Taylor coefficients of one function at one base point.
#[derive(Debug, Clone)]
pub struct Jet {
    space: &'static JetSpace,
    c: Vec<f64>,
}

impl Jet {
    pub fn zero(space: &'static JetSpace) -> Jet {
        Jet { space, c: vec![0.0; space.len()] }
    }

    pub fn constant(space: &'static JetSpace, v: f64) -> Jet {
        let mut j = Jet::zero(space);
        j.c[0] = v;
        j
    }

    /// The coordinate function `x_i` around base value `x0`.
    pub fn variable(space: &'static JetSpace, i: usize, x0: f64) -> Jet {
        assert!(i < space.dim);
        let mut j = Jet::zero(space);
        j.c[0] = x0;
        if space.order >= 1 {
            let mut e = [0u8; 3];
            e[i] = 1;
            j.c[space.index_of(&e)] = 1.0;
        }
        j
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    /// Value of the function at the base point.
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Raw Taylor coefficient for the k-th multi-index.
    pub fn coeff(&self, k: usize) -> f64 {
        self.c[k]
    }

    /// Derivative `∂^α f(x₀)` (Taylor coefficient times α!).
    pub fn derivative(&self, alpha: &[u8; 3]) -> f64 {
        self.c[self.space.index_of(alpha)] * alpha_factorial(alpha)
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Jet) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += b;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&other.c) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for a in out.c.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Truncated product.
    pub fn mul(&self, other: &Jet) -> Jet {
        debug_assert!(std::ptr::eq(self.space, other.space));
        let mut out = Jet::zero(self.space);
        for &(ia, ib, iout) in &self.space.prod {
            out.c[iout as usize] += self.c[ia as usize] * other.c[ib as usize];
        }
        out
    }

    /// Compose an entire scalar function `g` with this jet.
    ///
    /// `outer[k]` must hold `g^(k)(u₀)` for `k = 0..=order`, where `u₀` is
    /// this jet's value. Evaluated by Horner's rule on the nilpotent part.
    pub fn compose(&self, outer: &[f64]) -> Jet {
        let order = self.space.order;
        assert!(outer.len() > order, "need derivatives up to the truncation order");
        let mut w = self.clone();
        w.c[0] = 0.0;
        let mut fact = 1.0f64;
        for k in 1..=order {
            fact *= k as f64;
        }
        let mut res = Jet::constant(self.space, outer[order] / fact);
        for k in (0..order).rev() {
            fact = 1.0;
            for j in 1..=k {
                fact *= j as f64;
            }
            let mut next = res.mul(&w);
            next.c[0] += outer[k] / fact;
            res = next;
        }
        res
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_graded_and_complete() {
        let idx = multi_indices(2, 4);
        assert_eq!(idx.len(), jet_len(2, 4));
        assert_eq!(idx[0], [0, 0, 0]);
        for w in idx.windows(2) {
            let (ta, tb) = (w[0].iter().sum::<u8>(), w[1].iter().sum::<u8>());
            assert!(ta <= tb);
        }
        let idx3 = multi_indices(3, 4);
        assert_eq!(idx3.len(), 35);
    }

    #[test]
    fn product_matches_hand_expansion() {
        // f = (x + 2y)^2 at (1, 3): value 49, fx = 2(x+2y) = 14, fyy = 8, fxy = 4.
        let space = JetSpace::get(2, 3);
        let x = Jet::variable(space, 0, 1.0);
        let y = Jet::variable(space, 1, 3.0);
        let mut lin = x.clone();
        lin.axpy(2.0, &y);
        let f = lin.mul(&lin);
        assert_eq!(f.value(), 49.0);
        assert_eq!(f.derivative(&[1, 0, 0]), 14.0);
        assert_eq!(f.derivative(&[0, 1, 0]), 28.0);
        assert_eq!(f.derivative(&[1, 1, 0]), 4.0);
        assert_eq!(f.derivative(&[0, 2, 0]), 8.0);
        assert_eq!(f.derivative(&[3, 0, 0]), 0.0);
    }

    #[test]
    fn compose_reproduces_cosine_derivatives() {
        // g(u) = cos(u) with u = x² + y at (0.3, 0.7); ∂x²g = -2 sin(u)·... checked
        // against the closed form cos(x² + y) derivatives.
        let space = JetSpace::get(2, 4);
        let x = Jet::variable(space, 0, 0.3);
        let y = Jet::variable(space, 1, 0.7);
        let u = x.mul(&x).add(&y);
        let u0 = u.value();
        let outer: Vec<f64> = (0..=4)
            .map(|k| match k % 4 {
                0 => u0.cos(),
                1 => -u0.sin(),
                2 => -u0.cos(),
                _ => u0.sin(),
            })
            .collect();
        let f = u.compose(&outer);
        let (s, c) = u0.sin_cos();
        assert!((f.value() - c).abs() < 1e-15);
        // ∂x cos(x²+y) = -2x sin(u)
        assert!((f.derivative(&[1, 0, 0]) + 2.0 * 0.3 * s).abs() < 1e-14);
        // ∂y = -sin(u)
        assert!((f.derivative(&[0, 1, 0]) + s).abs() < 1e-14);
        // ∂x² = -2 sin(u) - 4x² cos(u)
        let fxx = -2.0 * s - 4.0 * 0.3f64.powi(2) * c;
        assert!((f.derivative(&[2, 0, 0]) - fxx).abs() < 1e-13);
        // ∂x²∂y² = ∂y²(-2s -4x²c) = 2s + 4x²c ... ∂y² of: ∂y(-2s-4x²c) = -2c + 4x²s; ∂y again = 2s + 4x²c
        let fxxyy = 2.0 * s + 4.0 * 0.3f64.powi(2) * c;
        assert!((f.derivative(&[2, 2, 0]) - fxxyy).abs() < 1e-13);
    }
}

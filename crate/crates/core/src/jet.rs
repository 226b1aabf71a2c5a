//! First-order jets: values together with their coordinate partials at one point.
//!
//! Gradients use the same layout as [`Field::partials`](crate::chart::Field):
//! `d[k * n + c] = ∂_c (component k)`.

use crate::chart::{DiffCtx, Field};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarJet {
    pub v: f64,
    pub d: Vec<f64>,
}

impl ScalarJet {
    pub fn constant(v: f64, n: usize) -> Self {
        Self { v, d: vec![0.0; n] }
    }

    pub fn add(&self, o: &ScalarJet) -> ScalarJet {
        ScalarJet { v: self.v + o.v, d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: f64) -> ScalarJet {
        ScalarJet { v: self.v * s, d: self.d.iter().map(|a| a * s).collect() }
    }

    pub fn mul(&self, o: &ScalarJet) -> ScalarJet {
        ScalarJet { v: self.v * o.v, d: self.d.iter().zip(&o.d).map(|(a, b)| a * o.v + self.v * b).collect() }
    }
}

/// Vector (or covector) field jet.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorJet {
    pub v: Vec<f64>,
    pub d: Vec<f64>,
}

impl VectorJet {
    pub fn of<F: Field>(field: &F, x: &[f64], ctx: &DiffCtx) -> Result<Self> {
        Ok(Self { v: field.eval(x, ctx)?, d: field.partials(x, ctx)? })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn constant(v: Vec<f64>) -> Self {
        let n = v.len();
        Self { v, d: vec![0.0; n * n] }
    }

    pub fn coordinate(n: usize, a: usize) -> Self {
        let mut v = vec![0.0; n];
        v[a] = 1.0;
        Self::constant(v)
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(vec![0.0; n])
    }

    pub fn add(&self, o: &VectorJet) -> VectorJet {
        VectorJet {
            v: self.v.iter().zip(&o.v).map(|(a, b)| a + b).collect(),
            d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &VectorJet) -> VectorJet {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> VectorJet {
        VectorJet { v: self.v.iter().map(|a| a * s).collect(), d: self.d.iter().map(|a| a * s).collect() }
    }

    /// `φ·U` with the product rule.
    pub fn scale_by(&self, s: &ScalarJet) -> VectorJet {
        let n = self.dim();
        let mut d = vec![0.0; n * n];
        for a in 0..n {
            for c in 0..n {
                d[a * n + c] = s.d[c] * self.v[a] + s.v * self.d[a * n + c];
            }
        }
        VectorJet { v: self.v.iter().map(|a| a * s.v).collect(), d }
    }

    /// Directional derivative `U(φ) = U^c ∂_c φ` (value only).
    pub fn apply_to(&self, s: &ScalarJet) -> f64 {
        dot(&self.v, &s.d)
    }

    /// Covector pairing `η(U)` as a scalar jet; `self` holds covector components.
    pub fn pair(&self, u: &VectorJet) -> ScalarJet {
        let n = self.dim();
        let v = dot(&self.v, &u.v);
        let d = (0..n)
            .map(|c| (0..n).map(|a| self.d[a * n + c] * u.v[a] + self.v[a] * u.d[a * n + c]).sum())
            .collect();
        ScalarJet { v, d }
    }
}

/// Jet of a (1,1) or (0,2) tensor stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixJet {
    pub n: usize,
    pub v: Vec<f64>,
    pub d: Vec<f64>,
}

impl MatrixJet {
    pub fn of<F: Field>(field: &F, x: &[f64], ctx: &DiffCtx) -> Result<Self> {
        Ok(Self { n: field.dim(), v: field.eval(x, ctx)?, d: field.partials(x, ctx)? })
    }

    pub fn constant(n: usize, v: Vec<f64>) -> Self {
        Self { n, v, d: vec![0.0; n * n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut v = vec![0.0; n * n];
        for a in 0..n {
            v[a * n + a] = 1.0;
        }
        Self::constant(n, v)
    }

    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.v[a * self.n + b]
    }

    pub fn sub(&self, o: &MatrixJet) -> MatrixJet {
        MatrixJet {
            n: self.n,
            v: self.v.iter().zip(&o.v).map(|(a, b)| a - b).collect(),
            d: self.d.iter().zip(&o.d).map(|(a, b)| a - b).collect(),
        }
    }

    /// `(T U)^a = T^a_b U^b` with the product rule.
    pub fn apply(&self, u: &VectorJet) -> VectorJet {
        let n = self.n;
        let mut v = vec![0.0; n];
        let mut d = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let t = self.v[a * n + b];
                v[a] += t * u.v[b];
                for c in 0..n {
                    d[a * n + c] += self.d[(a * n + b) * n + c] * u.v[b] + t * u.d[b * n + c];
                }
            }
        }
        VectorJet { v, d }
    }

    /// Composition `(S T)^a_b = S^a_c T^c_b`.
    pub fn compose(&self, t: &MatrixJet) -> MatrixJet {
        let n = self.n;
        let mut v = vec![0.0; n * n];
        let mut d = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let s = self.v[a * n + k];
                    let tk = t.v[k * n + b];
                    v[a * n + b] += s * tk;
                    for c in 0..n {
                        d[(a * n + b) * n + c] += self.d[(a * n + k) * n + c] * tk + s * t.d[(k * n + b) * n + c];
                    }
                }
            }
        }
        MatrixJet { n, v, d }
    }

    /// Bilinear pairing `g(U, V) = g_ab U^a V^b` as a scalar jet.
    pub fn pair(&self, u: &VectorJet, w: &VectorJet) -> ScalarJet {
        let n = self.n;
        let mut v = 0.0;
        let mut d = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                let gab = self.v[a * n + b];
                v += gab * u.v[a] * w.v[b];
                for c in 0..n {
                    d[c] += self.d[(a * n + b) * n + c] * u.v[a] * w.v[b]
                        + gab * (u.d[a * n + c] * w.v[b] + u.v[a] * w.d[b * n + c]);
                }
            }
        }
        ScalarJet { v, d }
    }

    /// Column `T ∂_a` as a vector jet.
    pub fn column(&self, a: usize) -> VectorJet {
        let n = self.n;
        let v = (0..n).map(|k| self.v[k * n + a]).collect();
        let mut d = vec![0.0; n * n];
        for k in 0..n {
            for c in 0..n {
                d[k * n + c] = self.d[(k * n + a) * n + c];
            }
        }
        VectorJet { v, d }
    }
}

/// Lie bracket `[U,V]^a = U^c ∂_c V^a − V^c ∂_c U^a` (value only).
pub fn bracket(u: &VectorJet, v: &VectorJet) -> Vec<f64> {
    let n = u.dim();
    (0..n)
        .map(|a| (0..n).map(|c| u.v[c] * v.d[a * n + c] - v.v[c] * u.d[a * n + c]).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `T^a_b u^b` on plain values.
pub fn matvec(t: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|a| (0..n).map(|b| t[a * n + b] * u[b]).sum()).collect()
}

/// `g_ab u^a v^b` on plain values.
pub fn bilinear(g: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    (0..n).map(|a| u[a] * (0..n).map(|b| g[a * n + b] * v[b]).sum::<f64>()).sum()
}

pub fn matmul(s: &[f64], t: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for k in 0..n {
            let sak = s[a * n + k];
            if sak != 0.0 {
                for b in 0..n {
                    out[a * n + b] += sak * t[k * n + b];
                }
            }
        }
    }
    out
}

pub fn transpose(t: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            out[b * n + a] = t[a * n + b];
        }
    }
    out
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_of_coordinate_fields_vanishes() {
        let u = VectorJet::coordinate(3, 0);
        let v = VectorJet::coordinate(3, 2);
        assert_eq!(bracket(&u, &v), vec![0.0; 3]);
    }

    #[test]
    fn bracket_of_rotation_and_translation() {
        // U = ∂x, V = (−y, x): [U, V] = ∂_x V = (0, 1)
        let u = VectorJet::coordinate(2, 0);
        let v = VectorJet { v: vec![-2.0, 1.0], d: vec![0.0, -1.0, 1.0, 0.0] };
        assert_eq!(bracket(&u, &v), vec![0.0, 1.0]);
        assert_eq!(bracket(&v, &u), vec![0.0, -1.0]);
    }

    #[test]
    fn product_rule_for_pairing() {
        // g = diag(1, x) at x = 2, U = (x, 1), V = ∂y: g(U, V) = x, gradient (1, 0)
        let g = MatrixJet { n: 2, v: vec![1.0, 0.0, 0.0, 2.0], d: vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0] };
        let u = VectorJet { v: vec![2.0, 1.0], d: vec![1.0, 0.0, 0.0, 0.0] };
        let v = VectorJet::coordinate(2, 1);
        let s = g.pair(&u, &v);
        assert_eq!(s.v, 2.0);
        assert_eq!(s.d, vec![1.0, 0.0]);
    }

    #[test]
    fn apply_matches_compose_then_apply() {
        let s = MatrixJet { n: 2, v: vec![1.0, 2.0, 3.0, 4.0], d: (0..8).map(|k| k as f64 * 0.1).collect() };
        let t = MatrixJet { n: 2, v: vec![0.5, -1.0, 2.0, 0.0], d: (0..8).map(|k| 1.0 - k as f64 * 0.2).collect() };
        let u = VectorJet { v: vec![0.3, -0.7], d: vec![1.0, 0.5, -0.5, 2.0] };
        let lhs = s.compose(&t).apply(&u);
        let rhs = s.apply(&t.apply(&u));
        for (a, b) in lhs.v.iter().chain(&lhs.d).zip(rhs.v.iter().chain(&rhs.d)) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

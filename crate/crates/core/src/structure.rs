//! Structure bundles `(f, Q, ξ_i, η^i, g)` and their structure tensors.

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::calculus::{
    christoffel_components, covariant_derivative_components, exterior_derivative_components, invert,
    lie_derivative_components, lie_metric_connection_form, nabla_f_along, nabla_vector, nijenhuis_bracket_form,
    nijenhuis_connection_form, relative_residual,
};
use crate::chart::{Chart, DerivativeStrategy, DiffCtx, Field, MetricField, Point, TensorField, Valence};
use crate::check::{Bound, CheckOutcome, Tolerances};
use crate::error::{Error, Result};
use crate::jet::{bilinear, bracket, dot, matmul, matvec, transpose, MatrixJet, ScalarJet, VectorJet};

pub const AXIOMS: &str = "axioms";

/// Number of seeded constant-coefficient vector fields added to the argument set.
pub const COMBINATIONS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct StructureBundle {
    pub chart: Chart,
    pub f: TensorField,
    pub q: TensorField,
    pub xi: Vec<TensorField>,
    pub eta: Vec<TensorField>,
    pub g: MetricField,
    n: usize,
    p: usize,
    strategy: DerivativeStrategy,
}

impl StructureBundle {
    pub fn new(
        chart: Chart,
        f: TensorField,
        q: TensorField,
        xi: Vec<TensorField>,
        eta: Vec<TensorField>,
        g: MetricField,
    ) -> Result<Self> {
        let dim = chart.dim();
        let bad = [&f, &q, &g.field].into_iter().chain(&xi).chain(&eta).map(|t| t.dim()).find(|&d| d != dim);
        if let Some(bad) = bad {
            return Err(Error::DimensionMismatch(format!("field of dimension {bad} on a {dim}-dimensional chart")));
        }
        if f.valence() != Valence::ENDO || q.valence() != Valence::ENDO {
            return Err(Error::Contract("f and Q must be (1,1) tensors".into()));
        }
        if xi.iter().any(|v| v.valence() != Valence::VECTOR) || eta.iter().any(|v| v.valence() != Valence::COVECTOR) {
            return Err(Error::Contract("xi must be vector fields and eta 1-forms".into()));
        }
        if xi.len() != eta.len() {
            return Err(Error::DimensionMismatch(format!("{} xi fields but {} eta forms", xi.len(), eta.len())));
        }
        let p = xi.len();
        if p == 0 {
            return Err(Error::Contract("a structure needs at least one characteristic field (p >= 1)".into()));
        }
        if dim <= p || (dim - p) % 2 != 0 {
            return Err(Error::DimensionMismatch(format!("dimension {dim} is not 2n + {p} with n >= 1")));
        }
        let strategy = f.strategy();
        Ok(Self { chart, f, q, xi, eta, g, n: (dim - p) / 2, p, strategy })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn strategy(&self) -> DerivativeStrategy {
        self.strategy
    }

    /// Same data, every field differentiated with `strategy`.
    pub fn with_strategy(mut self, strategy: DerivativeStrategy) -> Self {
        self.strategy = strategy;
        self.f = self.f.with_strategy(strategy);
        self.q = self.q.with_strategy(strategy);
        self.g.field = self.g.field.with_strategy(strategy);
        self.xi = self.xi.into_iter().map(|t| t.with_strategy(strategy)).collect();
        self.eta = self.eta.into_iter().map(|t| t.with_strategy(strategy)).collect();
        self
    }

    pub fn with_sampling(mut self, sample_count: usize, seed: u64) -> Result<Self> {
        self.chart = self.chart.with_sampling(sample_count, seed)?;
        Ok(self)
    }

    pub fn with_q(mut self, q: TensorField) -> Result<Self> {
        if q.dim() != self.dim() || q.valence() != Valence::ENDO {
            return Err(Error::Contract("replacement Q must be a (1,1) tensor on the same chart".into()));
        }
        self.q = q.with_strategy(self.strategy);
        Ok(self)
    }

    pub fn with_metric(mut self, g: MetricField) -> Result<Self> {
        if g.dim() != self.dim() {
            return Err(Error::DimensionMismatch("replacement metric lives on another chart".into()));
        }
        self.g = MetricField { field: g.field.with_strategy(self.strategy), signature: g.signature };
        Ok(self)
    }

    pub fn ctx(&self) -> DiffCtx {
        self.chart.diff_ctx(self.strategy)
    }

    pub fn sample_points(&self) -> Vec<Point> {
        self.chart.sample_points()
    }

    /// Seeded constant coefficient vectors used as extra identity arguments.
    pub fn combination_vectors(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.chart.seed() ^ 0x5eed_c0ef_f1c1_e475);
        (0..COMBINATIONS)
            .map(|_| (0..self.dim()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
            .collect()
    }

    pub fn local(&self, pt: &Point) -> Result<LocalStructure> {
        self.ctx().check_point(&pt.coords)?;
        LocalStructure::at(self, &pt.coords)
    }

    /// Per-point structure data at every sample, in sample order.
    pub fn locals(&self, points: &[Point]) -> Result<Vec<LocalStructure>> {
        points.par_iter().map(|pt| self.local(pt)).collect()
    }

    pub fn fundamental_form(&self, pt: &Point) -> Result<Vec<f64>> {
        Ok(self.local(pt)?.phi.v)
    }

    fn jet<F: Field>(&self, v: &F, pt: &Point) -> Result<VectorJet> {
        if v.valence() != Valence::VECTOR || v.dim() != self.dim() {
            return Err(Error::Contract("argument must be a vector field on the bundle chart".into()));
        }
        VectorJet::of(v, &pt.coords, &self.ctx())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.p {
            return Err(Error::Contract(format!("index {i} out of range for p = {}", self.p)));
        }
        Ok(())
    }

    pub fn tensor_n1<X: Field, Y: Field>(&self, x: &X, y: &Y, pt: &Point) -> Result<Vec<f64>> {
        let l = self.local(pt)?;
        Ok(l.n1(&self.jet(x, pt)?, &self.jet(y, pt)?))
    }

    pub fn tensor_n2<X: Field, Y: Field>(&self, i: usize, x: &X, y: &Y, pt: &Point) -> Result<f64> {
        self.check_index(i)?;
        let l = self.local(pt)?;
        Ok(l.n2(i, &self.jet(x, pt)?, &self.jet(y, pt)?))
    }

    pub fn tensor_n3<X: Field>(&self, i: usize, x: &X, pt: &Point) -> Result<Vec<f64>> {
        self.check_index(i)?;
        let l = self.local(pt)?;
        Ok(l.n3(i, &self.jet(x, pt)?))
    }

    pub fn tensor_n4<X: Field>(&self, i: usize, j: usize, x: &X, pt: &Point) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        let l = self.local(pt)?;
        Ok(l.n4(i, j, &self.jet(x, pt)?))
    }

    pub fn tensor_n5<X: Field, Y: Field, Z: Field>(&self, x: &X, y: &Y, z: &Z, pt: &Point) -> Result<f64> {
        let l = self.local(pt)?;
        let (a, b, c) = (l.arg(self.jet(x, pt)?), l.arg(self.jet(y, pt)?), l.arg(self.jet(z, pt)?));
        Ok(l.n5(&a, &b, &c))
    }

    /// Five-term expression without the `X(g(fY, Q̃Z))` term; not tensorial
    /// in general, kept for comparison.
    pub fn tensor_n5_literal<X: Field, Y: Field, Z: Field>(&self, x: &X, y: &Y, z: &Z, pt: &Point) -> Result<f64> {
        let l = self.local(pt)?;
        let (a, b, c) = (l.arg(self.jet(x, pt)?), l.arg(self.jet(y, pt)?), l.arg(self.jet(z, pt)?));
        Ok(l.n5_literal(&a, &b, &c))
    }

    /// `(h_i, h_i*)` as matrices.
    pub fn tensor_h(&self, i: usize, pt: &Point) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_index(i)?;
        let l = self.local(pt)?;
        let h = l.h(i)?;
        let hs = l.adjoint(&h);
        Ok((h, hs))
    }

    /// `(∇_X f) Y`.
    pub fn nabla_f<X: Field, Y: Field>(&self, x: &X, y: &Y, pt: &Point) -> Result<Vec<f64>> {
        let l = self.local(pt)?;
        Ok(l.nabla_f_uv(&self.jet(x, pt)?.v, &self.jet(y, pt)?.v))
    }

    /// Right-hand side of the expansion of `2 g((∇_X f)Y, Z)` through `dΦ`,
    /// `N1`, `N2`, `dη` and `N5`.
    pub fn rhs_eq31<X: Field, Y: Field, Z: Field>(&self, x: &X, y: &Y, z: &Z, pt: &Point) -> Result<f64> {
        let l = self.local(pt)?;
        let (a, b, c) = (l.arg(self.jet(x, pt)?), l.arg(self.jet(y, pt)?), l.arg(self.jet(z, pt)?));
        Ok(l.rhs_31(&a, &b, &c))
    }
}

/// A vector field argument with the jets of `fU` and `Q̃U` precomputed.
#[derive(Clone, Debug)]
pub struct Arg {
    pub u: VectorJet,
    pub fu: VectorJet,
    pub qtu: VectorJet,
}

/// All structure data at one point: jets of the defining fields, `g^{-1}`,
/// `Γ`, `∇f`, `Φ`, `dΦ`, `dη^i`.
#[derive(Clone, Debug)]
pub struct LocalStructure {
    pub x: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub f: MatrixJet,
    pub q: MatrixJet,
    pub qt: MatrixJet,
    pub g: MatrixJet,
    pub xi: Vec<VectorJet>,
    pub eta: Vec<VectorJet>,
    pub ginv: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `(∇_c f)^a_b` at `(a*n + b)*n + c`.
    pub nabla_f: Vec<f64>,
    pub phi: MatrixJet,
    pub dphi: Vec<f64>,
    pub deta: Vec<Vec<f64>>,
}

impl LocalStructure {
    pub fn at(b: &StructureBundle, x: &[f64]) -> Result<Self> {
        let ctx = b.ctx();
        let n = b.dim();
        let f = MatrixJet::of(&b.f, x, &ctx)?;
        let q = MatrixJet::of(&b.q, x, &ctx)?;
        let g = MatrixJet::of(&b.g.field, x, &ctx)?;
        let qt = q.sub(&MatrixJet::identity(n));
        let xi = b.xi.iter().map(|v| VectorJet::of(v, x, &ctx)).collect::<Result<Vec<_>>>()?;
        let eta = b.eta.iter().map(|v| VectorJet::of(v, x, &ctx)).collect::<Result<Vec<_>>>()?;
        let ginv = invert(&g.v, n)?;
        let gamma = christoffel_components(&g.v, &g.d, n)?;
        let nabla_f = covariant_derivative_components(Valence::ENDO, n, &f.v, &f.d, &gamma)?;
        let phi = g.compose(&f);
        let dphi = exterior_derivative_components(2, n, &phi.d)?;
        let deta = eta.iter().map(|e| exterior_derivative_components(1, n, &e.d)).collect::<Result<Vec<_>>>()?;
        Ok(Self { x: x.to_vec(), n, p: b.p(), f, q, qt, g, xi, eta, ginv, gamma, nabla_f, phi, dphi, deta })
    }

    pub fn arg(&self, u: VectorJet) -> Arg {
        Arg { fu: self.f.apply(&u), qtu: self.qt.apply(&u), u }
    }

    /// Coordinate fields `∂_a`, then `ξ_i`, then `f∂_a`, then the seeded
    /// constant combinations.
    pub fn arguments(&self, combos: &[Vec<f64>]) -> Vec<Arg> {
        let n = self.n;
        let mut out: Vec<VectorJet> = (0..n).map(|a| VectorJet::coordinate(n, a)).collect();
        out.extend(self.xi.iter().cloned());
        out.extend((0..n).map(|a| self.f.column(a)));
        out.extend(combos.iter().map(|c| VectorJet::constant(c.clone())));
        out.into_iter().map(|u| self.arg(u)).collect()
    }

    pub fn coordinate_arguments(&self) -> Vec<Arg> {
        (0..self.n).map(|a| self.arg(VectorJet::coordinate(self.n, a))).collect()
    }

    pub fn gv(&self, u: &[f64], v: &[f64]) -> f64 {
        bilinear(&self.g.v, u, v)
    }

    pub fn fv(&self, u: &[f64]) -> Vec<f64> {
        matvec(&self.f.v, u)
    }

    pub fn eta_v(&self, i: usize, u: &[f64]) -> f64 {
        dot(&self.eta[i].v, u)
    }

    pub fn eta_bar(&self, u: &[f64]) -> f64 {
        (0..self.p).map(|i| self.eta_v(i, u)).sum()
    }

    pub fn xi_bar(&self) -> Vec<f64> {
        (0..self.n).map(|a| self.xi.iter().map(|x| x.v[a]).sum()).collect()
    }

    pub fn deta_t(&self, i: usize, u: &[f64], v: &[f64]) -> f64 {
        bilinear(&self.deta[i], u, v)
    }

    pub fn dphi_t(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for a in 0..n {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if v[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    s += self.dphi[(a * n + b) * n + c] * u[a] * v[b] * w[c];
                }
            }
        }
        s
    }

    /// `dη^i(U,V) = ½{U(η(V)) − V(η(U)) − η([U,V])}` on field jets.
    pub fn deta_coboundary(&self, i: usize, u: &VectorJet, v: &VectorJet) -> f64 {
        let e = &self.eta[i];
        0.5 * (u.apply_to(&e.pair(v)) - v.apply_to(&e.pair(u)) - dot(&e.v, &bracket(u, v)))
    }

    /// Coboundary formula for `dΦ(U,V,W)` with the `1/3` factor.
    pub fn dphi_coboundary(&self, u: &VectorJet, v: &VectorJet, w: &VectorJet) -> f64 {
        let ph = |a: &VectorJet, b: &VectorJet| self.phi.pair(a, b);
        let pv = |a: &[f64], b: &[f64]| bilinear(&self.phi.v, a, b);
        (u.apply_to(&ph(v, w)) + v.apply_to(&ph(w, u)) + w.apply_to(&ph(u, v))
            - pv(&bracket(u, v), &w.v)
            - pv(&bracket(w, u), &v.v)
            - pv(&bracket(v, w), &u.v))
            / 3.0
    }

    pub fn nijenhuis(&self, u: &VectorJet, v: &VectorJet) -> Vec<f64> {
        nijenhuis_bracket_form(&self.f, u, v)
    }

    pub fn nijenhuis_connection(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        nijenhuis_connection_form(&self.f.v, &self.nabla_f, u, v)
    }

    /// `N1(U,V) = [f,f](U,V) − 2 Σ_i dη^i(U,V) ξ_i`.
    pub fn n1(&self, u: &VectorJet, v: &VectorJet) -> Vec<f64> {
        let mut out = self.nijenhuis(u, v);
        for i in 0..self.p {
            let s = 2.0 * self.deta_t(i, &u.v, &v.v);
            for (o, x) in out.iter_mut().zip(&self.xi[i].v) {
                *o -= s * x;
            }
        }
        out
    }

    /// `(£_Z η^i)(V) = Z(η^i(V)) − η^i([Z,V])`.
    fn lie_eta(&self, i: usize, z: &VectorJet, v: &VectorJet) -> f64 {
        let e = &self.eta[i];
        z.apply_to(&e.pair(v)) - dot(&e.v, &bracket(z, v))
    }

    /// `N2_i(U,V) = (£_{fU} η^i)V − (£_{fV} η^i)U`.
    pub fn n2(&self, i: usize, u: &VectorJet, v: &VectorJet) -> f64 {
        self.lie_eta(i, &self.f.apply(u), v) - self.lie_eta(i, &self.f.apply(v), u)
    }

    /// `N2_i(U,V) = 2dη^i(fU,V) − 2dη^i(fV,U)`.
    pub fn n2_d(&self, i: usize, u: &[f64], v: &[f64]) -> f64 {
        2.0 * self.deta_t(i, &self.fv(u), v) - 2.0 * self.deta_t(i, &self.fv(v), u)
    }

    /// `N3_i(U) = [ξ_i, fU] − f[ξ_i, U]`.
    pub fn n3(&self, i: usize, u: &VectorJet) -> Vec<f64> {
        let a = bracket(&self.xi[i], &self.f.apply(u));
        let b = self.fv(&bracket(&self.xi[i], u));
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    }

    /// `N3_i(U) = (∇_{ξ_i} f)U − ∇_{fU} ξ_i + f ∇_U ξ_i`.
    pub fn n3_d(&self, i: usize, u: &[f64]) -> Vec<f64> {
        let m = self.nabla_xi(i);
        let a = self.nabla_f_uv(&self.xi[i].v, u);
        let b = matvec(&m, &self.fv(u));
        let c = self.fv(&matvec(&m, u));
        (0..self.n).map(|k| a[k] - b[k] + c[k]).collect()
    }

    /// `N4_ij(U) = ξ_i(η^j(U)) − η^j([ξ_i, U])`.
    pub fn n4(&self, i: usize, j: usize, u: &VectorJet) -> f64 {
        self.lie_eta(j, &self.xi[i], u)
    }

    pub fn n4_d(&self, i: usize, j: usize, u: &[f64]) -> f64 {
        2.0 * self.deta_t(j, &self.xi[i].v, u)
    }

    /// The five bracket terms of `N5`.
    pub fn n5_literal(&self, x: &Arg, y: &Arg, z: &Arg) -> f64 {
        let g = |a: &[f64], b: &[f64]| self.gv(a, b);
        let t1 = z.fu.apply_to(&self.g.pair(&x.u, &y.qtu));
        let t2 = y.fu.apply_to(&self.g.pair(&x.u, &z.qtu));
        let t3 = g(&bracket(&x.u, &z.fu), &y.qtu.v);
        let t4 = g(&bracket(&x.u, &y.fu), &z.qtu.v);
        let yz = self.fv(&bracket(&y.u, &z.u));
        let yfz = bracket(&y.u, &z.fu);
        let zfy = bracket(&z.u, &y.fu);
        let w: Vec<f64> = (0..self.n).map(|a| yfz[a] - zfy[a] - yz[a]).collect();
        let t5 = g(&w, &x.qtu.v);
        t1 - t2 + t3 - t4 + t5
    }

    /// `N5(X,Y,Z)`: the five bracket terms plus `X(g(fY, Q̃Z))`, which makes
    /// the expression tensorial and closes the expansion of `2g((∇_X f)Y,Z)`.
    pub fn n5(&self, x: &Arg, y: &Arg, z: &Arg) -> f64 {
        self.n5_literal(x, y, z) + x.u.apply_to(&self.g.pair(&y.fu, &z.qtu))
    }

    /// `(∇_U f)V` on plain vectors.
    pub fn nabla_f_uv(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        matvec(&nabla_f_along(&self.nabla_f, u), v)
    }

    pub fn lhs_31(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        2.0 * self.gv(&self.nabla_f_uv(x, y), z)
    }

    pub fn rhs_31(&self, x: &Arg, y: &Arg, z: &Arg) -> f64 {
        let (xv, yv, zv) = (&x.u.v, &y.u.v, &z.u.v);
        let mut s = -3.0 * self.dphi_t(xv, &y.fu.v, &z.fu.v) - 3.0 * self.dphi_t(xv, yv, zv)
            - self.gv(&self.n1(&y.u, &z.u), &x.fu.v);
        for i in 0..self.p {
            s += self.n2_d(i, yv, zv) * self.eta_v(i, xv) + 2.0 * self.deta_t(i, &y.fu.v, xv) * self.eta_v(i, zv)
                - 2.0 * self.deta_t(i, &z.fu.v, xv) * self.eta_v(i, yv);
        }
        s + self.n5(x, y, z)
    }

    /// `(∇_c ξ_i)^a` at `a*n + c`, so `∇_U ξ_i = M U`.
    pub fn nabla_xi(&self, i: usize) -> Vec<f64> {
        nabla_vector(&self.xi[i], &self.gamma)
    }

    /// `∇_U V` for field jets.
    pub fn cov(&self, u: &VectorJet, v: &VectorJet) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|a| {
                let mut s = 0.0;
                for c in 0..n {
                    s += u.v[c] * v.d[a * n + c];
                    for e in 0..n {
                        s += self.gamma[(a * n + c) * n + e] * u.v[c] * v.v[e];
                    }
                }
                s
            })
            .collect()
    }

    pub fn lie_f(&self, i: usize) -> Result<Vec<f64>> {
        lie_derivative_components(Valence::ENDO, &self.xi[i], &self.f.v, &self.f.d)
    }

    pub fn lie_q(&self, i: usize) -> Result<Vec<f64>> {
        lie_derivative_components(Valence::ENDO, &self.xi[i], &self.q.v, &self.q.d)
    }

    pub fn lie_g(&self, z: &VectorJet) -> Result<Vec<f64>> {
        lie_derivative_components(Valence::BILINEAR, z, &self.g.v, &self.g.d)
    }

    pub fn lie_g_connection(&self, z: &VectorJet) -> Vec<f64> {
        lie_metric_connection_form(z, &self.g.v, &self.gamma)
    }

    pub fn lie_phi(&self, i: usize) -> Result<Vec<f64>> {
        lie_derivative_components(Valence::BILINEAR, &self.xi[i], &self.phi.v, &self.phi.d)
    }

    /// `h_i = ½ £_{ξ_i} f`.
    pub fn h(&self, i: usize) -> Result<Vec<f64>> {
        Ok(self.lie_f(i)?.into_iter().map(|v| 0.5 * v).collect())
    }

    /// g-adjoint `A* = g^{-1} Aᵀ g`, so `g(A* X, Y) = g(X, A Y)`.
    pub fn adjoint(&self, a: &[f64]) -> Vec<f64> {
        let n = self.n;
        matmul(&self.ginv, &matmul(&transpose(a, n), &self.g.v, n), n)
    }

    /// `X^⊥ = Σ_i η^i(X) ξ_i`.
    pub fn perp(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.p {
            let s = self.eta_v(i, u);
            for (o, x) in out.iter_mut().zip(&self.xi[i].v) {
                *o += s * x;
            }
        }
        out
    }

    /// `X^⊤ = X − X^⊥` as a field jet.
    pub fn top(&self, u: &VectorJet) -> VectorJet {
        let mut out = u.clone();
        for i in 0..self.p {
            let s: ScalarJet = self.eta[i].pair(u);
            out = out.sub(&self.xi[i].scale_by(&s));
        }
        out
    }
}

fn identity_outcome(
    out: &mut Vec<CheckOutcome>,
    tol: &Tolerances,
    id: &str,
    sample: usize,
    x: &[f64],
    lhs: &[f64],
    rhs: &[f64],
) {
    let r = relative_residual(lhs, rhs);
    out.push(CheckOutcome::new(AXIOMS, id, sample, x, r, Bound::AtMost(tol.identity_for(id))));
}

/// Axioms A1–A8 and the metric field checks at one point, values only.
pub fn axioms_at(b: &StructureBundle, sample: usize, pt: &Point, tol: &Tolerances) -> Result<Vec<CheckOutcome>> {
    let ctx = b.ctx();
    ctx.check_point(&pt.coords)?;
    let x = &pt.coords;
    let n = b.dim();
    let p = b.p();
    let f = b.f.eval(x, &ctx)?;
    let q = b.q.eval(x, &ctx)?;
    let g = b.g.field.eval(x, &ctx)?;
    let xi = b.xi.iter().map(|v| v.eval(x, &ctx)).collect::<Result<Vec<_>>>()?;
    let eta = b.eta.iter().map(|v| v.eval(x, &ctx)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();

    let fm = DMatrix::from_row_slice(n, n, &f);
    let sv = fm.singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > tol.rank * smax && s > 0.0).count();
    out.push(CheckOutcome::new(
        AXIOMS,
        "A1.rank",
        sample,
        x,
        (rank as f64 - 2.0 * b.n() as f64).abs(),
        Bound::AtMost(0.0),
    ));
    let det_q = DMatrix::from_row_slice(n, n, &q).determinant();
    out.push(CheckOutcome::new(AXIOMS, "A2.det_Q", sample, x, det_q.abs(), Bound::AtLeast(tol.det)));

    let f2 = matmul(&f, &f, n);
    let f3 = matmul(&f2, &f, n);
    identity_outcome(&mut out, tol, "A3.f3_fQ", sample, x, &f3, &matmul(&f, &q, n));
    let qxi: Vec<f64> = xi.iter().flat_map(|v| matvec(&q, v)).collect();
    identity_outcome(&mut out, tol, "A3.Q_xi", sample, x, &qxi, &xi.concat());

    let mut proj = q.clone();
    for i in 0..p {
        for a in 0..n {
            for c in 0..n {
                proj[a * n + c] -= xi[i][a] * eta[i][c];
            }
        }
    }
    identity_outcome(&mut out, tol, "A4.f2", sample, x, &f2, &proj);
    let pairing: Vec<f64> = (0..p).flat_map(|i| (0..p).map(|j| dot(&eta[i], &xi[j])).collect::<Vec<_>>()).collect();
    let delta: Vec<f64> = (0..p * p).map(|k| if k / p == k % p { 1.0 } else { 0.0 }).collect();
    identity_outcome(&mut out, tol, "A4.eta_xi", sample, x, &pairing, &delta);

    let ft = transpose(&f, n);
    let ftgf = matmul(&ft, &matmul(&g, &f, n), n);
    let mut rhs5: Vec<f64> = matmul(&g, &q, n).iter().map(|v| -v).collect();
    for e in &eta {
        for a in 0..n {
            for c in 0..n {
                rhs5[a * n + c] += e[a] * e[c];
            }
        }
    }
    identity_outcome(&mut out, tol, "A5.compatibility", sample, x, &ftgf, &rhs5);

    let gf = matmul(&g, &f, n);
    let neg_gf: Vec<f64> = gf.iter().map(|v| -v).collect();
    identity_outcome(&mut out, tol, "A6.f_skew", sample, x, &matmul(&ft, &g, n), &neg_gf);
    identity_outcome(&mut out, tol, "A6.Q_self_adjoint", sample, x, &matmul(&transpose(&q, n), &g, n), &matmul(&g, &q, n));

    let fxi: Vec<f64> = xi.iter().flat_map(|v| matvec(&f, v)).collect();
    identity_outcome(&mut out, tol, "A7.f_xi", sample, x, &fxi, &vec![0.0; fxi.len()]);
    let etaf: Vec<f64> = eta.iter().flat_map(|e| matvec(&ft, e)).collect();
    identity_outcome(&mut out, tol, "A7.eta_f", sample, x, &etaf, &vec![0.0; etaf.len()]);
    let qt = transpose(&q, n);
    let etaq: Vec<f64> = eta.iter().flat_map(|e| matvec(&qt, e)).collect();
    identity_outcome(&mut out, tol, "A7.eta_Q", sample, x, &etaq, &eta.concat());
    identity_outcome(&mut out, tol, "A7.Q_f_commute", sample, x, &matmul(&q, &f, n), &matmul(&f, &q, n));

    let gxi: Vec<f64> = xi.iter().flat_map(|v| matvec(&g, v)).collect();
    identity_outcome(&mut out, tol, "A8.g_xi_eta", sample, x, &gxi, &eta.concat());
    let gram: Vec<f64> =
        (0..p).flat_map(|i| (0..p).map(|j| bilinear(&g, &xi[i], &xi[j])).collect::<Vec<_>>()).collect();
    identity_outcome(&mut out, tol, "A8.xi_orthonormal", sample, x, &gram, &delta);

    let diag = b.g.diagnose(x, &ctx)?;
    out.push(CheckOutcome::new(AXIOMS, "metric.symmetry", sample, x, diag.asymmetry, Bound::AtMost(tol.sym)));
    out.push(CheckOutcome::new(AXIOMS, "metric.det", sample, x, diag.det.abs(), Bound::AtLeast(tol.det)));
    let sig_defect = (diag.counted.plus as f64 - b.g.signature.plus as f64).abs();
    out.push(CheckOutcome::new(AXIOMS, "metric.signature", sample, x, sig_defect, Bound::AtMost(0.0)));
    Ok(out)
}

/// One outcome per axiom check per sample point, ordered by sample.
pub fn validate_axioms(b: &StructureBundle, tol: &Tolerances) -> Result<Vec<CheckOutcome>> {
    let points = b.sample_points();
    let per: Vec<Vec<CheckOutcome>> =
        points.par_iter().enumerate().map(|(k, pt)| axioms_at(b, k, pt, tol)).collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Axiom group of a check id (`"A5.compatibility"` → `"A5"`).
pub fn axiom_group(check_id: &str) -> &str {
    check_id.split('.').next().unwrap_or(check_id)
}

/// Failed axiom groups, sorted and deduplicated.
pub fn failed_axioms(outcomes: &[CheckOutcome]) -> Vec<String> {
    let mut v: Vec<String> =
        outcomes.iter().filter(|o| !o.pass).map(|o| axiom_group(&o.check_id).to_string()).collect();
    v.sort();
    v.dedup();
    v
}

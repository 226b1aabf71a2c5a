//! Levi-Civita connection, covariant and Lie derivatives, exterior derivative,
//! Nijenhuis torsion and curvature on a single chart.
//!
//! Exterior derivatives use the `1/(k+1)` normalization:
//!
//! ```text
//! dη_ab  = ½ (∂_a η_b − ∂_b η_a)
//! dω_abc = ⅓ (∂_a ω_bc + ∂_b ω_ca + ∂_c ω_ab)
//! ```
//!
//! With this normalization the interior product that makes the Cartan formula
//! `£_X = ι_X d + d ι_X` hold is `ι_X ω = k · ω(X, …)` for a k-form.

use crate::chart::{DiffCtx, Field, MetricField, Point, Valence, TOL_DET};
use crate::error::{Error, Result};
use crate::jet::{bilinear, bracket, matvec, max_abs, MatrixJet, VectorJet};
use crate::scalar::Scalar;

/// Smallest `|g(X,X)g(Y,Y) − g(X,Y)²|` accepted by [`sectional_curvature_at`].
pub const TOL_PLANE: f64 = 1e-10;

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert<T: Scalar>(m: &[T], n: usize) -> Result<Vec<T>> {
    let mut a = m.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for k in 0..n {
        inv[k * n + k] = T::one();
    }
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.re().abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r * n + col].re().abs().total_cmp(&a[s * n + col].re().abs()))
            .expect("non-empty pivot range");
        if a[piv * n + col].re().abs() <= 1e-14 * scale {
            return Err(Error::Nondegeneracy(format!("matrix is singular (pivot column {col})")));
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let p = a[col * n + col];
        for j in 0..n {
            a[col * n + j] = a[col * n + j] / p;
            inv[col * n + j] = inv[col * n + j] / p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col];
            if factor.re() == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r * n + j] = a[r * n + j] - factor * a[col * n + j];
                inv[r * n + j] = inv[r * n + j] - factor * inv[col * n + j];
            }
        }
    }
    Ok(inv)
}

/// `Γ^a_bc = ½ g^{ad}(∂_b g_dc + ∂_c g_db − ∂_d g_bc)` stored at `(a*n + b)*n + c`.
pub fn christoffel_components<T: Scalar>(g: &[T], dg: &[T], n: usize) -> Result<Vec<T>> {
    let gi = invert(g, n)?;
    let half = T::cst(0.5);
    let mut lower = vec![T::zero(); n * n * n];
    for d in 0..n {
        for b in 0..n {
            for c in b..n {
                let v = dg[(d * n + c) * n + b] + dg[(d * n + b) * n + c] - dg[(b * n + c) * n + d];
                lower[(d * n + b) * n + c] = v;
                lower[(d * n + c) * n + b] = v;
            }
        }
    }
    let mut gamma = vec![T::zero(); n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let mut s = T::zero();
                for d in 0..n {
                    s = s + gi[a * n + d] * lower[(d * n + b) * n + c];
                }
                s = s * half;
                gamma[(a * n + b) * n + c] = s;
                gamma[(a * n + c) * n + b] = s;
            }
        }
    }
    Ok(gamma)
}

/// Christoffel symbols as an engine-produced field of valence (1,2).
///
/// Differentiating this field (dual lift or central differences) is how
/// second derivatives of the metric enter curvature.
pub struct ChristoffelField<'a, F: Field> {
    pub metric: &'a F,
}

impl<F: Field> Field for ChristoffelField<'_, F> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn valence(&self) -> Valence {
        Valence(1, 2)
    }

    fn eval<T: Scalar>(&self, x: &[T], ctx: &DiffCtx) -> Result<Vec<T>> {
        let g = self.metric.eval(x, ctx)?;
        let dg = self.metric.partials(x, ctx)?;
        christoffel_components(&g, &dg, self.dim())
    }
}

pub fn christoffel(g: &MetricField, pt: &Point, ctx: &DiffCtx) -> Result<Vec<f64>> {
    ctx.check_point(&pt.coords)?;
    let n = g.dim();
    let vals = g.field.eval(&pt.coords, ctx)?;
    let det = nalgebra::DMatrix::from_row_slice(n, n, &vals).determinant();
    if det.abs() < TOL_DET {
        return Err(Error::Nondegeneracy(format!("det g = {det:e} at {:?}", pt.coords)));
    }
    ChristoffelField { metric: &g.field }.eval(&pt.coords, ctx)
}

/// `∇T` with the derivative index last: `(∇_c T)^{I}_{J}` at `k*n + c`.
///
/// `t` and `dt` are the components and partials of a tensor of valence
/// `(r, s)`, `r + s ≤ 3`.
pub fn covariant_derivative_components(
    valence: Valence,
    n: usize,
    t: &[f64],
    dt: &[f64],
    gamma: &[f64],
) -> Result<Vec<f64>> {
    let rank = valence.rank();
    if rank > 3 {
        return Err(Error::Contract(format!("covariant derivative supports r + s <= 3, got {rank}")));
    }
    let len = n.pow(rank as u32);
    if t.len() != len || dt.len() != len * n {
        return Err(Error::DimensionMismatch("tensor components do not match valence".into()));
    }
    let strides: Vec<usize> = (0..rank).map(|s| n.pow((rank - 1 - s) as u32)).collect();
    let mut out = dt.to_vec();
    for k in 0..len {
        for (slot, &stride) in strides.iter().enumerate() {
            let idx = (k / stride) % n;
            let base = k - idx * stride;
            let upper = slot < valence.0;
            for c in 0..n {
                let mut acc = 0.0;
                for e in 0..n {
                    let te = t[base + e * stride];
                    if te == 0.0 {
                        continue;
                    }
                    acc += if upper { gamma[(idx * n + c) * n + e] } else { -gamma[(e * n + c) * n + idx] } * te;
                }
                out[k * n + c] += acc;
            }
        }
    }
    Ok(out)
}

pub fn covariant_derivative<F: Field>(t: &F, g: &MetricField, pt: &Point, ctx: &DiffCtx) -> Result<Vec<f64>> {
    let gamma = christoffel(g, pt, ctx)?;
    let vals = t.eval(&pt.coords, ctx)?;
    let dvals = t.partials(&pt.coords, ctx)?;
    covariant_derivative_components(t.valence(), t.dim(), &vals, &dvals, &gamma)
}

/// Lie derivative of a (1,1), (0,1) or (0,2) tensor along `z`, evaluated on
/// coordinate fields through brackets:
///
/// ```text
/// (£_Z T) U     = [Z, T U] − T [Z, U]
/// (£_Z η) U     = Z(η(U)) − η([Z, U])
/// (£_Z g)(U, V) = Z(g(U, V)) − g([Z, U], V) − g(U, [Z, V])
/// ```
pub fn lie_derivative_components(valence: Valence, z: &VectorJet, t: &[f64], dt: &[f64]) -> Result<Vec<f64>> {
    let n = z.dim();
    let coord = |a: usize| VectorJet::coordinate(n, a);
    // [Z, ∂_a] = −∂_a Z
    let z_coord: Vec<Vec<f64>> = (0..n).map(|a| bracket(z, &coord(a))).collect();
    match valence {
        Valence(1, 1) => {
            let tj = MatrixJet { n, v: t.to_vec(), d: dt.to_vec() };
            let mut out = vec![0.0; n * n];
            for b in 0..n {
                let first = bracket(z, &tj.column(b));
                let second = matvec(t, &z_coord[b]);
                for a in 0..n {
                    out[a * n + b] = first[a] - second[a];
                }
            }
            Ok(out)
        }
        Valence(0, 1) => Ok((0..n)
            .map(|b| {
                let z_eta_b: f64 = (0..n).map(|c| z.v[c] * dt[b * n + c]).sum();
                z_eta_b - t.iter().zip(&z_coord[b]).map(|(e, w)| e * w).sum::<f64>()
            })
            .collect()),
        Valence(0, 2) => {
            let mut out = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    let zg: f64 = (0..n).map(|c| z.v[c] * dt[(a * n + b) * n + c]).sum();
                    let ea = coord(a).v;
                    let eb = coord(b).v;
                    out[a * n + b] = zg - bilinear(t, &z_coord[a], &eb) - bilinear(t, &ea, &z_coord[b]);
                }
            }
            Ok(out)
        }
        v => Err(Error::Contract(format!(
            "Lie derivative supports valences (1,1), (0,1), (0,2); got ({}, {})",
            v.0, v.1
        ))),
    }
}

pub fn lie_derivative_tensor<Z: Field, F: Field>(z: &Z, t: &F, pt: &Point, ctx: &DiffCtx) -> Result<Vec<f64>> {
    ctx.check_point(&pt.coords)?;
    if z.valence() != Valence::VECTOR {
        return Err(Error::Contract("Lie derivative direction must be a vector field".into()));
    }
    let zj = VectorJet::of(z, &pt.coords, ctx)?;
    let vals = t.eval(&pt.coords, ctx)?;
    let dvals = t.partials(&pt.coords, ctx)?;
    lie_derivative_components(t.valence(), &zj, &vals, &dvals)
}

/// `(∇_a Z)^c = ∂_a Z^c + Γ^c_{ae} Z^e` as a matrix `M[c*n + a]`.
pub fn nabla_vector(z: &VectorJet, gamma: &[f64]) -> Vec<f64> {
    let n = z.dim();
    let mut m = z.d.clone();
    for c in 0..n {
        for a in 0..n {
            m[c * n + a] += (0..n).map(|e| gamma[(c * n + a) * n + e] * z.v[e]).sum::<f64>();
        }
    }
    m
}

/// Connection form of the Lie derivative of the metric:
/// `(£_Z g)(∂_a, ∂_b) = g(∇_a Z, ∂_b) + g(∇_b Z, ∂_a)`.
pub fn lie_metric_connection_form(z: &VectorJet, g: &[f64], gamma: &[f64]) -> Vec<f64> {
    let n = z.dim();
    let m = nabla_vector(z, gamma);
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for c in 0..n {
                s += m[c * n + a] * g[c * n + b] + m[c * n + b] * g[c * n + a];
            }
            out[a * n + b] = s;
        }
    }
    out
}

/// Exterior derivative of a k-form (`k ≤ 2`) from its partials.
pub fn exterior_derivative_components<T: Scalar>(k: usize, n: usize, dw: &[T]) -> Result<Vec<T>> {
    match k {
        0 => Ok(dw.to_vec()),
        1 => {
            let half = T::cst(0.5);
            let mut out = vec![T::zero(); n * n];
            for a in 0..n {
                for b in 0..n {
                    out[a * n + b] = half * (dw[b * n + a] - dw[a * n + b]);
                }
            }
            Ok(out)
        }
        2 => {
            let third = T::cst(1.0 / 3.0);
            let mut out = vec![T::zero(); n * n * n];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        out[(a * n + b) * n + c] =
                            third * (dw[(b * n + c) * n + a] + dw[(c * n + a) * n + b] + dw[(a * n + b) * n + c]);
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::Contract(format!("exterior derivative supports forms of degree <= 2, got {k}"))),
    }
}

fn form_degree<F: Field>(w: &F) -> Result<usize> {
    match w.valence() {
        Valence(0, k) if k <= 2 => Ok(k),
        Valence(0, k) => Err(Error::Contract(format!("exterior derivative supports forms of degree <= 2, got {k}"))),
        v => Err(Error::Contract(format!("form must be covariant, got valence ({}, {})", v.0, v.1))),
    }
}

/// Largest violation of antisymmetry in the components of a 2-form.
pub fn antisymmetry_defect(w: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            worst = worst.max((w[a * n + b] + w[b * n + a]).abs());
        }
    }
    worst
}

/// `dω` as an engine field, so `d∘d` is its exterior derivative again.
pub struct ExteriorDerivativeField<'a, F: Field> {
    pub form: &'a F,
}

impl<F: Field> Field for ExteriorDerivativeField<'_, F> {
    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn valence(&self) -> Valence {
        Valence(0, self.form.valence().1 + 1)
    }

    fn eval<T: Scalar>(&self, x: &[T], ctx: &DiffCtx) -> Result<Vec<T>> {
        let k = form_degree(self.form)?;
        exterior_derivative_components(k, self.dim(), &self.form.partials(x, ctx)?)
    }
}

pub fn exterior_derivative<F: Field>(w: &F, pt: &Point, ctx: &DiffCtx) -> Result<Vec<f64>> {
    ctx.check_point(&pt.coords)?;
    let k = form_degree(w)?;
    let n = w.dim();
    if k == 2 {
        let vals = w.eval(&pt.coords, ctx)?;
        let defect = antisymmetry_defect(&vals, n);
        if defect > 1e-10 * max_abs(&vals).max(1.0) {
            return Err(Error::Contract(format!("2-form is not antisymmetric (defect {defect:e})")));
        }
    }
    exterior_derivative_components(k, n, &w.partials(&pt.coords, ctx)?)
}

/// Identity residual: `max|L − R| / max(1, max|L|, max|R|)`.
pub fn relative_residual(lhs: &[f64], rhs: &[f64]) -> f64 {
    let diff = lhs.iter().zip(rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / 1f64.max(max_abs(lhs)).max(max_abs(rhs))
}

/// Both sides of the Cartan formula for a 1- or 2-form: `(£_ξ ω, ι_ξ dω + d ι_ξ ω)`.
pub fn cartan_sides(k: usize, xi: &VectorJet, w: &[f64], dw: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = xi.dim();
    match k {
        1 => {
            let lhs = lie_derivative_components(Valence::COVECTOR, xi, w, dw)?;
            let d = exterior_derivative_components(1, n, dw)?;
            let rhs = (0..n)
                .map(|b| {
                    let i_d: f64 = (0..n).map(|c| 2.0 * xi.v[c] * d[c * n + b]).sum();
                    let d_i: f64 = (0..n).map(|c| xi.d[c * n + b] * w[c] + xi.v[c] * dw[c * n + b]).sum();
                    i_d + d_i
                })
                .collect();
            Ok((lhs, rhs))
        }
        2 => {
            let lhs = lie_derivative_components(Valence::BILINEAR, xi, w, dw)?;
            let d = exterior_derivative_components(2, n, dw)?;
            // ∂_a α_b with α = ι_ξ ω = 2 ξ^c ω_cb
            let mut dalpha = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    dalpha[b * n + a] = (0..n)
                        .map(|c| 2.0 * (xi.d[c * n + a] * w[c * n + b] + xi.v[c] * dw[(c * n + b) * n + a]))
                        .sum();
                }
            }
            let mut rhs = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    let i_d: f64 = (0..n).map(|c| 3.0 * xi.v[c] * d[(c * n + a) * n + b]).sum();
                    let d_i = 0.5 * (dalpha[b * n + a] - dalpha[a * n + b]);
                    rhs[a * n + b] = i_d + d_i;
                }
            }
            Ok((lhs, rhs))
        }
        _ => Err(Error::Contract(format!("Cartan check supports 1- and 2-forms, got degree {k}"))),
    }
}

/// Residual of `£_ξ ω = ι_ξ dω + d ι_ξ ω` at a point.
pub fn cartan_check<X: Field, W: Field>(xi: &X, w: &W, pt: &Point, ctx: &DiffCtx) -> Result<f64> {
    ctx.check_point(&pt.coords)?;
    let k = form_degree(w)?;
    let xj = VectorJet::of(xi, &pt.coords, ctx)?;
    let vals = w.eval(&pt.coords, ctx)?;
    let dvals = w.partials(&pt.coords, ctx)?;
    let (lhs, rhs) = cartan_sides(k, &xj, &vals, &dvals)?;
    Ok(relative_residual(&lhs, &rhs))
}

/// `[f,f](X,Y) = f²[X,Y] + [fX,fY] − f[fX,Y] − f[X,fY]`.
pub fn nijenhuis_bracket_form(f: &MatrixJet, x: &VectorJet, y: &VectorJet) -> Vec<f64> {
    let fx = f.apply(x);
    let fy = f.apply(y);
    let xy = bracket(x, y);
    let f2xy = matvec(&f.v, &matvec(&f.v, &xy));
    let fxfy = bracket(&fx, &fy);
    let f_fxy = matvec(&f.v, &bracket(&fx, y));
    let f_xfy = matvec(&f.v, &bracket(x, &fy));
    (0..x.dim()).map(|a| f2xy[a] + fxfy[a] - f_fxy[a] - f_xfy[a]).collect()
}

/// `(∇_Z f)` as a matrix, from `nabla_f[(a*n + b)*n + c] = (∇_c f)^a_b`.
pub fn nabla_f_along(nabla_f: &[f64], z: &[f64]) -> Vec<f64> {
    let n = z.len();
    (0..n * n).map(|ab| (0..n).map(|c| nabla_f[ab * n + c] * z[c]).sum()).collect()
}

/// `[f,f](X,Y) = (f∇_Y f − ∇_{fY} f)X − (f∇_X f − ∇_{fX} f)Y` on plain vectors.
pub fn nijenhuis_connection_form(f: &[f64], nabla_f: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
    let term = |u: &[f64], w: &[f64]| -> Vec<f64> {
        let fu = matvec(f, u);
        let a = matvec(f, &matvec(&nabla_f_along(nabla_f, u), w));
        let b = matvec(&nabla_f_along(nabla_f, &fu), w);
        a.iter().zip(&b).map(|(p, q)| p - q).collect()
    };
    let t1 = term(y, x);
    let t2 = term(x, y);
    t1.iter().zip(&t2).map(|(p, q)| p - q).collect()
}

/// Both evaluations of the Nijenhuis torsion.
#[derive(Clone, Debug, PartialEq)]
pub struct NijenhuisValue {
    pub bracket_form: Vec<f64>,
    pub connection_form: Vec<f64>,
}

pub fn nijenhuis<F: Field, X: Field, Y: Field>(
    f: &F,
    x: &X,
    y: &Y,
    g: &MetricField,
    pt: &Point,
    ctx: &DiffCtx,
) -> Result<NijenhuisValue> {
    if f.valence() != Valence::ENDO {
        return Err(Error::Contract("Nijenhuis torsion needs a (1,1) tensor".into()));
    }
    let fj = MatrixJet::of(f, &pt.coords, ctx)?;
    let xj = VectorJet::of(x, &pt.coords, ctx)?;
    let yj = VectorJet::of(y, &pt.coords, ctx)?;
    let gamma = christoffel(g, pt, ctx)?;
    let nf = covariant_derivative_components(Valence::ENDO, fj.n, &fj.v, &fj.d, &gamma)?;
    Ok(NijenhuisValue {
        bracket_form: nijenhuis_bracket_form(&fj, &xj, &yj),
        connection_form: nijenhuis_connection_form(&fj.v, &nf, &xj.v, &yj.v),
    })
}

/// `R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} − Γ^a_{de} Γ^e_{cb}`
/// at `((a*n + b)*n + c)*n + d`, from `Γ` and its partials.
pub(crate) fn riemann_components(n: usize, gamma: &[f64], dgamma: &[f64]) -> Vec<f64> {
    let g = |a: usize, b: usize, c: usize| gamma[(a * n + b) * n + c];
    let dg = |a: usize, b: usize, c: usize, k: usize| dgamma[((a * n + b) * n + c) * n + k];
    let mut r = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dg(a, d, b, c) - dg(a, c, b, d);
                    for e in 0..n {
                        v += g(a, c, e) * g(e, d, b) - g(a, d, e) * g(e, c, b);
                    }
                    r[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    r
}

/// `K(X,Y) = g(R(X,Y)Y, X) / (g(X,X)g(Y,Y) − g(X,Y)²)` at a point.
pub fn sectional_curvature_at<F: Field>(metric: &F, x: &[f64], y: &[f64], pt: &Point, ctx: &DiffCtx) -> Result<f64> {
    ctx.check_point(&pt.coords)?;
    let n = metric.dim();
    let g = metric.eval(&pt.coords, ctx)?;
    let den = bilinear(&g, x, x) * bilinear(&g, y, y) - bilinear(&g, x, y).powi(2);
    if den.abs() < TOL_PLANE {
        return Err(Error::PlaneDegeneracy(den));
    }
    let cf = ChristoffelField { metric };
    let gamma = cf.eval(&pt.coords, ctx)?;
    let dgamma = cf.partials(&pt.coords, ctx)?;
    let r = riemann_components(n, &gamma, &dgamma);
    // (R(X,Y)Y)^a = R^a_{bcd} Y^b X^c Y^d
    let mut ryy = vec![0.0; n];
    for (a, out) in ryy.iter_mut().enumerate() {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    *out += r[((a * n + b) * n + c) * n + d] * y[b] * x[c] * y[d];
                }
            }
        }
    }
    Ok(bilinear(&g, &ryy, x) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Chart, DerivativeStrategy, Signature, TensorField};
    use crate::expr::Expr;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn inverse_of_small_matrix() {
        let m = [2.0, 1.0, 1.0, 3.0];
        let inv = invert(&m, 2).unwrap();
        let expect = [0.6, -0.2, -0.2, 0.4];
        for (a, b) in inv.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(invert(&[1.0, 2.0, 2.0, 4.0], 2), Err(Error::Nondegeneracy(_))));
    }

    #[test]
    fn flat_metrics_have_no_christoffels() {
        let ctx = DiffCtx::unbounded(2, DerivativeStrategy::Exact);
        for diag in [[1.0, 1.0], [1.0, -1.0]] {
            let g = TensorField::constant(2, Valence::BILINEAR, &[diag[0], 0.0, 0.0, diag[1]]).unwrap();
            let sig = if diag[1] > 0.0 { Signature { plus: 2, minus: 0 } } else { Signature { plus: 1, minus: 1 } };
            let m = MetricField::new(g, sig).unwrap();
            let gamma = christoffel(&m, &Point { coords: vec![0.3, 0.1] }, &ctx).unwrap();
            assert!(gamma.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn singular_metric_is_rejected() {
        let ctx = DiffCtx::unbounded(2, DerivativeStrategy::Exact);
        let g = TensorField::new(2, Valence::BILINEAR, vec![Expr::c(1.0), Expr::zero(), Expr::zero(), Expr::var(0)])
            .unwrap();
        let m = MetricField::new(g, Signature { plus: 2, minus: 0 }).unwrap();
        let err = christoffel(&m, &Point { coords: vec![0.0, 0.0] }, &ctx).unwrap_err();
        assert!(matches!(err, Error::Nondegeneracy(_)));
    }

    #[test]
    fn exterior_derivative_of_x_dy() {
        let chart = Chart::new(names(&["x", "y"]), vec![(-2.0, 2.0); 2], 1, 0).unwrap();
        let ctx = chart.diff_ctx(DerivativeStrategy::Exact);
        let eta = TensorField::new(2, Valence::COVECTOR, vec![Expr::zero(), Expr::var(0)]).unwrap();
        let d = exterior_derivative(&eta, &chart.point(vec![0.7, -1.1]).unwrap(), &ctx).unwrap();
        assert_eq!(d, vec![0.0, 0.5, -0.5, 0.0]);
    }

    #[test]
    fn degree_three_forms_are_rejected() {
        let ctx = DiffCtx::unbounded(1, DerivativeStrategy::Exact);
        let w = TensorField::constant(1, Valence(0, 3), &[0.0]).unwrap();
        assert!(matches!(exterior_derivative(&w, &Point { coords: vec![0.0] }, &ctx), Err(Error::Contract(_))));
    }

    #[test]
    fn lie_derivative_of_dx_along_x_dx() {
        let ctx = DiffCtx::unbounded(1, DerivativeStrategy::Exact);
        let z = TensorField::new(1, Valence::VECTOR, vec![Expr::var(0)]).unwrap();
        let dx = TensorField::constant(1, Valence::COVECTOR, &[1.0]).unwrap();
        for x in [-0.5, 0.0, 2.0] {
            let l = lie_derivative_tensor(&z, &dx, &Point { coords: vec![x] }, &ctx).unwrap();
            assert_eq!(l, vec![1.0]);
        }
    }

    #[test]
    fn unsupported_lie_valence() {
        let z = VectorJet::coordinate(2, 0);
        assert!(lie_derivative_components(Valence::VECTOR, &z, &[0.0; 2], &[0.0; 4]).is_err());
    }

    #[test]
    fn cartan_for_translation_of_x_dy() {
        let ctx = DiffCtx::unbounded(2, DerivativeStrategy::Exact);
        let xi = TensorField::coordinate_vector(2, 0);
        let w = TensorField::new(2, Valence::COVECTOR, vec![Expr::zero(), Expr::var(0)]).unwrap();
        let pt = Point { coords: vec![0.4, 0.9] };
        assert!(cartan_check(&xi, &w, &pt, &ctx).unwrap() <= 1e-12);
        let zero = TensorField::constant(2, Valence::VECTOR, &[0.0, 0.0]).unwrap();
        assert_eq!(cartan_check(&zero, &w, &pt, &ctx).unwrap(), 0.0);
    }
}

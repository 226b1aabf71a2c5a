//! Ready-made structures and negative controls.

use std::collections::BTreeMap;

use crate::chart::{Chart, MetricField, Signature, TensorField, Valence};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::structure::StructureBundle;

pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 1;

/// A catalog key with its parameter names and defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub summary: &'static str,
}

pub const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "para_c_product",
        params: &[("a", 2.0), ("n", 1.0), ("p", 2.0), ("eps", 0.0)],
        summary: "flat product M^2n x R^p with f = a [[0,1],[1,0]] blocks; weak para-C",
    },
    CatalogEntry {
        name: "para_sasakian_r3",
        params: &[("eps", 0.0)],
        summary: "hyperbolic Heisenberg model on R^3, Q = id; para-S",
    },
    CatalogEntry {
        name: "nonnormal_apc3",
        params: &[("eps", 0.0)],
        summary: "position-dependent f = a(x,y,z) [[0,1,0],[1,0,0],[0,0,0]]; not normal",
    },
];

pub fn entry(name: &str) -> Result<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownKey {
        key: name.to_string(),
        suggestion: nearest(name, ENTRIES.iter().map(|e| e.name)),
    })
}

/// Closest candidate by normalized Levenshtein similarity, if any is close enough.
pub fn nearest<'a>(key: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (strsim::normalized_levenshtein(key, c), c))
        .filter(|(s, _)| *s >= 0.3)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c.to_string())
}

/// Build a catalog bundle. Missing parameters take the entry defaults;
/// a nonzero `eps` applies [`perturb_q`].
pub fn resolve(name: &str, params: &BTreeMap<String, f64>) -> Result<StructureBundle> {
    let e = entry(name)?;
    for k in params.keys() {
        if !e.params.iter().any(|(p, _)| p == k) {
            return Err(Error::UnknownKey { key: k.clone(), suggestion: nearest(k, e.params.iter().map(|(p, _)| *p)) });
        }
    }
    let get = |k: &str| params.get(k).copied().unwrap_or_else(|| e.params.iter().find(|(p, _)| *p == k).unwrap().1);
    let bundle = match name {
        "para_c_product" => make_para_c_product(get("a"), count(get("n"), "n")?, count(get("p"), "p")?)?,
        "para_sasakian_r3" => make_para_sasakian_r3()?,
        _ => make_nonnormal_apc3()?,
    };
    let eps = get("eps");
    if eps != 0.0 {
        perturb_q(&bundle, eps)
    } else {
        Ok(bundle)
    }
}

fn count(v: f64, name: &str) -> Result<usize> {
    if v.fract() != 0.0 || v < 1.0 || v > 64.0 {
        return Err(Error::Construction(format!("parameter {name} must be a positive integer, got {v}")));
    }
    Ok(v as usize)
}

fn names(prefix: &[&str]) -> Vec<String> {
    prefix.iter().map(|s| s.to_string()).collect()
}

fn c(v: f64) -> Expr {
    Expr::c(v)
}

fn matrix(dim: usize, valence: Valence, m: Vec<Expr>) -> Result<TensorField> {
    TensorField::new(dim, valence, m)
}

fn constant(dim: usize, valence: Valence, m: &[f64]) -> Result<TensorField> {
    TensorField::constant(dim, valence, m)
}

/// Flat product `M^{2n} × ℝ^p`. On `M`, `f̃` has blocks `[[0,a],[a,0]]` and
/// `g_M` blocks `diag(1,−1)`; `Q = a²` on `M` and `id` on `ℝ^p`.
pub fn make_para_c_product(a: f64, n: usize, p: usize) -> Result<StructureBundle> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Rank(format!("a = {a} gives f of rank 0, need rank {}", 2 * n)));
    }
    if n == 0 || p == 0 {
        return Err(Error::Construction("para_c_product needs n >= 1 and p >= 1".into()));
    }
    let dim = 2 * n + p;
    let mut coords = Vec::with_capacity(dim);
    for k in 1..=n {
        coords.push(format!("x{k}"));
        coords.push(format!("y{k}"));
    }
    coords.extend((1..=p).map(|i| format!("t{i}")));
    let chart = Chart::new(coords, vec![(-1.0, 1.0); dim], DEFAULT_SAMPLES, DEFAULT_SEED)?;
    let mut f = vec![0.0; dim * dim];
    let mut q = vec![0.0; dim * dim];
    let mut g = vec![0.0; dim * dim];
    for k in 0..n {
        let (u, v) = (2 * k, 2 * k + 1);
        f[u * dim + v] = a;
        f[v * dim + u] = a;
        q[u * dim + u] = a * a;
        q[v * dim + v] = a * a;
        g[u * dim + u] = 1.0;
        g[v * dim + v] = -1.0;
    }
    let mut xi = Vec::with_capacity(p);
    let mut eta = Vec::with_capacity(p);
    for i in 0..p {
        let t = 2 * n + i;
        q[t * dim + t] = 1.0;
        g[t * dim + t] = 1.0;
        xi.push(TensorField::coordinate_vector(dim, t));
        let mut e = vec![0.0; dim];
        e[t] = 1.0;
        eta.push(constant(dim, Valence::COVECTOR, &e)?);
    }
    let g = MetricField::new(constant(dim, Valence::BILINEAR, &g)?, Signature { plus: n + p, minus: n })?;
    StructureBundle::new(
        chart,
        constant(dim, Valence::ENDO, &f)?,
        constant(dim, Valence::ENDO, &q)?,
        xi,
        eta,
        g,
    )
}

/// Classical para-Sasakian structure on `ℝ³(x,y,z)`:
/// `η = dz − y dx`, `ξ = ∂z`, `g = ½(dx² − dy²) + η⊗η`.
pub fn make_para_sasakian_r3() -> Result<StructureBundle> {
    let chart = Chart::new(names(&["x", "y", "z"]), vec![(-1.0, 1.0); 3], DEFAULT_SAMPLES, DEFAULT_SEED)?;
    let y = || Expr::var(1);
    let f = matrix(3, Valence::ENDO, vec![c(0.0), c(1.0), c(0.0), c(1.0), c(0.0), c(0.0), c(0.0), y(), c(0.0)])?;
    let q = TensorField::identity(3);
    let xi = vec![TensorField::coordinate_vector(3, 2)];
    let eta = vec![matrix(3, Valence::COVECTOR, vec![-y(), c(0.0), c(1.0)])?];
    let g = matrix(
        3,
        Valence::BILINEAR,
        vec![c(0.5) + y() * y(), c(0.0), -y(), c(0.0), c(-0.5), c(0.0), -y(), c(0.0), c(1.0)],
    )?;
    let g = MetricField::new(g, Signature { plus: 2, minus: 1 })?;
    StructureBundle::new(chart, f, q, xi, eta, g)
}

/// `f = a·[[0,1,0],[1,0,0],[0,0,0]]` with `a = 1 + ½ sin(x+y+z)`,
/// `g = diag(1,−1,1)`, `Q = diag(a², a², 1)`, `ξ = ∂z`. Metric weak
/// para-f, but `N1(∂x, ∂y) ≠ 0`.
pub fn make_nonnormal_apc3() -> Result<StructureBundle> {
    let chart = Chart::new(names(&["x", "y", "z"]), vec![(-1.0, 1.0); 3], DEFAULT_SAMPLES, DEFAULT_SEED)?;
    let a = || c(1.0) + c(0.5) * (Expr::var(0) + Expr::var(1) + Expr::var(2)).sin();
    let a2 = || a() * a();
    let z = || c(0.0);
    let f = matrix(3, Valence::ENDO, vec![z(), a(), z(), a(), z(), z(), z(), z(), z()])?;
    let q = matrix(3, Valence::ENDO, vec![a2(), z(), z(), z(), a2(), z(), z(), z(), c(1.0)])?;
    let xi = vec![TensorField::coordinate_vector(3, 2)];
    let eta = vec![constant(3, Valence::COVECTOR, &[0.0, 0.0, 1.0])?];
    let g = constant(3, Valence::BILINEAR, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0])?;
    let g = MetricField::new(g, Signature { plus: 2, minus: 1 })?;
    StructureBundle::new(chart, f, q, xi, eta, g)
}

fn expr_matmul(s: &[Expr], t: &[Expr], n: usize) -> Vec<Expr> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = Expr::zero();
            for k in 0..n {
                acc = acc + s[a * n + k].clone() * t[k * n + b].clone();
            }
            out.push(acc);
        }
    }
    out
}

/// `Q ↦ Q + eps·f²`. `f²` is symmetric for `g`, commutes with `f` and acts
/// on `f(TM)` only; ξ, η and g are untouched.
pub fn perturb_q(s: &StructureBundle, eps: f64) -> Result<StructureBundle> {
    let n = s.dim();
    let f2 = expr_matmul(s.f.components(), s.f.components(), n);
    let q: Vec<Expr> = s.q.components().iter().zip(f2).map(|(q, p)| q.clone() + c(eps) * p).collect();
    s.clone().with_q(TensorField::new(n, Valence::ENDO, q)?)
}

/// `(f̄, Q̄)` on `M × ℝ^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBar {
    pub chart: Chart,
    pub f_bar: TensorField,
    pub q_bar: TensorField,
    pub dim_m: usize,
    pub p: usize,
}

fn product_bar(s: &StructureBundle, xi_sign: f64) -> Result<ProductBar> {
    let m = s.dim();
    let p = s.p();
    let d = m + p;
    let mut coords: Vec<String> = s.chart.coordinate_names().to_vec();
    coords.extend((1..=p).map(|i| format!("s{i}")));
    let mut bx = s.chart.sample_box().to_vec();
    bx.extend(std::iter::repeat_n((-1.0, 1.0), p));
    let chart = Chart::new(coords, bx, s.chart.sample_count(), s.chart.seed())?;
    let mut f = vec![Expr::zero(); d * d];
    let mut q = vec![Expr::zero(); d * d];
    let (fc, qc) = (s.f.components(), s.q.components());
    for a in 0..m {
        for b in 0..m {
            f[a * d + b] = fc[a * m + b].clone();
            q[a * d + b] = qc[a * m + b].clone();
        }
    }
    for i in 0..p {
        let (xc, ec) = (s.xi[i].components(), s.eta[i].components());
        for a in 0..m {
            // column m+i: f̄(0, ∂_i) = (∓ξ_i, 0)
            f[a * d + m + i] = c(xi_sign) * xc[a].clone();
            // row m+i: η^i(X) ∂_i
            f[(m + i) * d + a] = ec[a].clone();
        }
        q[(m + i) * d + m + i] = c(1.0);
    }
    Ok(ProductBar {
        chart,
        f_bar: TensorField::new(d, Valence::ENDO, f)?,
        q_bar: TensorField::new(d, Valence::ENDO, q)?,
        dim_m: m,
        p,
    })
}

/// `f̄(X, Σ aⁱ∂_i) = (fX − Σ aⁱξ_i, Σ η^j(X) ∂_j)`, `Q̄(X, a) = (QX, a)`.
pub fn make_product_bar(s: &StructureBundle) -> Result<ProductBar> {
    product_bar(s, -1.0)
}

/// Sign-flipped variant `f̄(0, ∂_i) = (ξ_i, 0)`, for which `f̄² = +Q̄` holds
/// on para data.
pub fn make_product_bar_para(s: &StructureBundle) -> Result<ProductBar> {
    product_bar(s, 1.0)
}

impl ProductBar {
    /// Worst relative residual of `f̄² = sign·Q̄` over the chart samples.
    pub fn square_residual(&self, sign: f64) -> Result<f64> {
        let ctx = self.chart.diff_ctx(self.f_bar.strategy());
        let d = self.dim_m + self.p;
        let mut worst = 0.0f64;
        for pt in self.chart.sample_points() {
            use crate::chart::Field;
            let f = self.f_bar.eval(&pt.coords, &ctx)?;
            let q: Vec<f64> = self.q_bar.eval(&pt.coords, &ctx)?.iter().map(|v| sign * v).collect();
            worst = worst.max(crate::calculus::relative_residual(&crate::jet::matmul(&f, &f, d), &q));
        }
        Ok(worst)
    }

    /// `f̄` applied to a constant vector at a point.
    pub fn apply(&self, coords: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        use crate::chart::Field;
        let ctx = self.chart.diff_ctx(self.f_bar.strategy());
        ctx.check_point(coords)?;
        Ok(crate::jet::matvec(&self.f_bar.eval(coords, &ctx)?, v))
    }
}

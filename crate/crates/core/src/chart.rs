//! Coordinate charts, sample points, tensor fields and their first derivatives.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::scalar::{seed, Scalar};

/// Smallest finite-difference step before a stencil is declared infeasible.
pub const H_MIN: f64 = 1e-10;
pub const TOL_SYM: f64 = 1e-10;
pub const TOL_DET: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    dim: usize,
    coordinate_names: Vec<String>,
    sample_box: Vec<(f64, f64)>,
    sample_count: usize,
    seed: u64,
}

impl Chart {
    pub fn new(
        coordinate_names: Vec<String>,
        sample_box: Vec<(f64, f64)>,
        sample_count: usize,
        seed: u64,
    ) -> Result<Self> {
        let dim = coordinate_names.len();
        if dim == 0 {
            return Err(Error::Contract("chart needs at least one coordinate".into()));
        }
        if sample_box.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates but {} box intervals",
                dim,
                sample_box.len()
            )));
        }
        if let Some((k, (lo, hi))) =
            sample_box.iter().enumerate().find(|(_, (lo, hi))| !(hi > lo) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::Contract(format!(
                "interval [{lo}, {hi}] of coordinate '{}' must have positive finite length",
                coordinate_names[k]
            )));
        }
        if sample_count == 0 {
            return Err(Error::Contract("sample_count must be positive".into()));
        }
        Ok(Self { dim, coordinate_names, sample_box, sample_count, seed })
    }

    /// Chart with coordinates named `x0..` and the box `[-1, 1]^dim`.
    pub fn cube(dim: usize, sample_count: usize, seed: u64) -> Result<Self> {
        let names = (0..dim).map(|i| format!("x{i}")).collect();
        Self::new(names, vec![(-1.0, 1.0); dim], sample_count, seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coordinate_names(&self) -> &[String] {
        &self.coordinate_names
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_sampling(mut self, sample_count: usize, seed: u64) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::Contract("sample_count must be positive".into()));
        }
        self.sample_count = sample_count;
        self.seed = seed;
        Ok(self)
    }

    pub fn center(&self) -> Point {
        Point { coords: self.sample_box.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect() }
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.dim
            && coords.iter().zip(&self.sample_box).all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, chart has {}",
                coords.len(),
                self.dim
            )));
        }
        if !self.contains(&coords) {
            return Err(Error::Domain(format!("point {coords:?} lies outside the sample box")));
        }
        Ok(Point { coords })
    }

    /// Box center first, then uniform draws from a ChaCha8 stream seeded by `seed`.
    pub fn sample_points(&self) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut pts = Vec::with_capacity(self.sample_count);
        pts.push(self.center());
        while pts.len() < self.sample_count {
            let coords = self
                .sample_box
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect();
            pts.push(Point { coords });
        }
        pts
    }

    pub fn diff_ctx(&self, strategy: DerivativeStrategy) -> DiffCtx {
        DiffCtx { strategy, bounds: self.sample_box.clone().into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// `(contravariant, covariant)` slot counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Valence(pub usize, pub usize);

impl Valence {
    pub const SCALAR: Valence = Valence(0, 0);
    pub const VECTOR: Valence = Valence(1, 0);
    pub const COVECTOR: Valence = Valence(0, 1);
    pub const ENDO: Valence = Valence(1, 1);
    pub const BILINEAR: Valence = Valence(0, 2);

    pub fn rank(&self) -> usize {
        self.0 + self.1
    }

    pub fn component_count(&self, dim: usize) -> usize {
        dim.pow(self.rank() as u32)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeStrategy {
    /// Symbolic differentiation of component expressions; forward-mode duals
    /// for engine-produced fields.
    #[default]
    Exact,
    DualForward,
    /// Central differences; `None` uses `cbrt(eps)·max(1, |x|)`.
    FiniteDifference { step: Option<f64> },
}

impl DerivativeStrategy {
    pub fn fd() -> Self {
        DerivativeStrategy::FiniteDifference { step: None }
    }

    pub fn is_finite_difference(&self) -> bool {
        matches!(self, DerivativeStrategy::FiniteDifference { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            DerivativeStrategy::Exact => "exact",
            DerivativeStrategy::DualForward => "dual",
            DerivativeStrategy::FiniteDifference { .. } => "fd",
        }
    }
}

/// How engine-produced fields are differentiated, and where stencils may reach.
#[derive(Clone, Debug)]
pub struct DiffCtx {
    pub strategy: DerivativeStrategy,
    pub bounds: Arc<[(f64, f64)]>,
}

impl DiffCtx {
    pub fn unbounded(dim: usize, strategy: DerivativeStrategy) -> Self {
        Self { strategy, bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim].into() }
    }

    pub fn check_point(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.bounds.len() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, chart has {}",
                coords.len(),
                self.bounds.len()
            )));
        }
        for (k, (x, (lo, hi))) in coords.iter().zip(self.bounds.iter()).enumerate() {
            if x < lo || x > hi {
                return Err(Error::Domain(format!("coordinate {k} = {x} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Partials of `field` at `x`, layout `[component * dim + c]`, using this
    /// context's strategy.
    pub fn differentiate<F: Field + ?Sized, T: Scalar>(&self, field: &F, x: &[T]) -> Result<Vec<T>> {
        differentiate_with(self.strategy, field, x, self)
    }

    /// Central-difference step along coordinate `c`, shrunk to stay inside the box.
    pub fn fd_step(&self, step: Option<f64>, x: f64, c: usize) -> Result<f64> {
        let h = step.unwrap_or_else(|| f64::EPSILON.cbrt() * x.abs().max(1.0));
        let (lo, hi) = self.bounds[c];
        let h = h.min(x - lo).min(hi - x);
        if !(h >= H_MIN) {
            return Err(Error::DerivativeDomain(format!(
                "central stencil along coordinate {c} at {x} cannot fit inside [{lo}, {hi}]"
            )));
        }
        Ok(h)
    }
}

pub(crate) fn differentiate_with<F: Field + ?Sized, T: Scalar>(
    strategy: DerivativeStrategy,
    field: &F,
    x: &[T],
    ctx: &DiffCtx,
) -> Result<Vec<T>> {
    let dim = x.len();
    let n = field.len();
    let mut out = vec![T::zero(); n * dim];
    match strategy {
        DerivativeStrategy::Exact | DerivativeStrategy::DualForward => {
            for c in 0..dim {
                let vals = field.eval(&seed(x, c), ctx)?;
                for (k, v) in vals.iter().enumerate() {
                    out[k * dim + c] = v.eps;
                }
            }
        }
        DerivativeStrategy::FiniteDifference { step } => {
            let mut xp = x.to_vec();
            for c in 0..dim {
                let h = ctx.fd_step(step, x[c].re(), c)?;
                xp[c] = x[c] + T::cst(h);
                let fp = field.eval(&xp, ctx)?;
                xp[c] = x[c] - T::cst(h);
                let fm = field.eval(&xp, ctx)?;
                xp[c] = x[c];
                let inv = T::cst(0.5 / h);
                for k in 0..n {
                    out[k * dim + c] = (fp[k] - fm[k]) * inv;
                }
            }
        }
    }
    Ok(out)
}

/// A tensor-valued map on chart points. Components are stored flattened with
/// contravariant indices first, row-major (`f^a_b` at `a*dim + b`).
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn valence(&self) -> Valence;

    fn len(&self) -> usize {
        self.valence().component_count(self.dim())
    }

    fn eval<T: Scalar>(&self, x: &[T], ctx: &DiffCtx) -> Result<Vec<T>>;

    /// `∂_c` of every component, layout `[component * dim + c]`.
    fn partials<T: Scalar>(&self, x: &[T], ctx: &DiffCtx) -> Result<Vec<T>> {
        ctx.differentiate(self, x)
    }
}

/// User-supplied field: closed-form component expressions plus the strategy
/// used to differentiate them.
#[derive(Clone, Debug)]
pub struct TensorField {
    dim: usize,
    valence: Valence,
    comps: Arc<[Expr]>,
    strategy: DerivativeStrategy,
    derivs: Arc<OnceLock<Vec<Expr>>>,
}

impl PartialEq for TensorField {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.valence == other.valence
            && self.comps == other.comps
            && self.strategy == other.strategy
    }
}

impl TensorField {
    pub fn new(dim: usize, valence: Valence, comps: Vec<Expr>) -> Result<Self> {
        let expected = valence.component_count(dim);
        if comps.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "valence ({}, {}) on a {dim}-dimensional chart needs {expected} components, got {}",
                valence.0,
                valence.1,
                comps.len()
            )));
        }
        if let Some(v) = comps.iter().filter_map(Expr::max_var).max() {
            if v >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "component references coordinate {v} on a {dim}-dimensional chart"
                )));
            }
        }
        Ok(Self {
            dim,
            valence,
            comps: comps.into(),
            strategy: DerivativeStrategy::Exact,
            derivs: Arc::new(OnceLock::new()),
        })
    }

    pub fn constant(dim: usize, valence: Valence, values: &[f64]) -> Result<Self> {
        Self::new(dim, valence, values.iter().map(|&v| Expr::c(v)).collect())
    }

    pub fn scalar(dim: usize, e: Expr) -> Result<Self> {
        Self::new(dim, Valence::SCALAR, vec![e])
    }

    pub fn identity(dim: usize) -> Self {
        let comps = (0..dim * dim).map(|k| Expr::c(if k / dim == k % dim { 1.0 } else { 0.0 })).collect();
        Self::new(dim, Valence::ENDO, comps).expect("identity has consistent shape")
    }

    pub fn coordinate_vector(dim: usize, a: usize) -> Self {
        let comps = (0..dim).map(|k| Expr::c(if k == a { 1.0 } else { 0.0 })).collect();
        Self::new(dim, Valence::VECTOR, comps).expect("coordinate field has consistent shape")
    }

    pub fn with_strategy(mut self, strategy: DerivativeStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn strategy(&self) -> DerivativeStrategy {
        self.strategy
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    /// Symbolic partials, computed once and shared between clones.
    fn derivative_exprs(&self) -> &[Expr] {
        self.derivs.get_or_init(|| {
            self.comps.iter().flat_map(|e| (0..self.dim).map(move |c| e.diff(c))).collect()
        })
    }
}

impl Field for TensorField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn valence(&self) -> Valence {
        self.valence
    }

    fn eval<T: Scalar>(&self, x: &[T], _ctx: &DiffCtx) -> Result<Vec<T>> {
        Ok(self.comps.iter().map(|e| e.eval(x)).collect())
    }

    fn partials<T: Scalar>(&self, x: &[T], ctx: &DiffCtx) -> Result<Vec<T>> {
        match self.strategy {
            DerivativeStrategy::Exact => Ok(self.derivative_exprs().iter().map(|e| e.eval(x)).collect()),
            s => differentiate_with(s, self, x, ctx),
        }
    }
}

/// Evaluate components at a chart point; points outside the box are rejected.
pub fn eval_field<F: Field>(field: &F, pt: &Point, ctx: &DiffCtx) -> Result<Vec<f64>> {
    ctx.check_point(&pt.coords)?;
    check_field_dim(field, pt)?;
    field.eval(&pt.coords, ctx)
}

/// Components with one extra trailing covariant slot: `out[k*dim + c] = ∂_c T_k`.
pub fn partial_derivatives<F: Field>(field: &F, pt: &Point, ctx: &DiffCtx) -> Result<Vec<f64>> {
    ctx.check_point(&pt.coords)?;
    check_field_dim(field, pt)?;
    field.partials(&pt.coords, ctx)
}

fn check_field_dim<F: Field>(field: &F, pt: &Point) -> Result<()> {
    if field.dim() != pt.dim() {
        return Err(Error::DimensionMismatch(format!(
            "field lives on a {}-dimensional chart, point has {} coordinates",
            field.dim(),
            pt.dim()
        )));
    }
    Ok(())
}

/// Signature as `(positive, negative)` eigenvalue counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    pub field: TensorField,
    pub signature: Signature,
}

/// Per-point metric defects: symmetry residual, determinant and counted signature.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricDiagnostics {
    pub asymmetry: f64,
    pub det: f64,
    pub counted: Signature,
}

impl MetricField {
    pub fn new(field: TensorField, signature: Signature) -> Result<Self> {
        if field.valence() != Valence::BILINEAR {
            return Err(Error::Contract("metric must have valence (0,2)".into()));
        }
        if signature.plus + signature.minus != field.dim() {
            return Err(Error::DimensionMismatch(format!(
                "signature ({}, {}) does not add up to dimension {}",
                signature.plus,
                signature.minus,
                field.dim()
            )));
        }
        Ok(Self { field, signature })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn diagnose(&self, x: &[f64], ctx: &DiffCtx) -> Result<MetricDiagnostics> {
        let n = self.dim();
        let g = self.field.eval(x, ctx)?;
        let m = DMatrix::from_row_slice(n, n, &g);
        let asymmetry = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| (m[(a, b)] - m[(b, a)]).abs())
            .fold(0.0, f64::max);
        let det = m.determinant();
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let plus = eig.eigenvalues.iter().filter(|&&v| v > 0.0).count();
        Ok(MetricDiagnostics { asymmetry, det, counted: Signature { plus, minus: n - plus } })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn center_comes_first() {
        let chart = Chart::cube(3, 1, 7).unwrap();
        assert_eq!(chart.sample_points(), vec![Point { coords: vec![0.0, 0.0, 0.0] }]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let chart = Chart::cube(3, 5, 42).unwrap();
        assert_eq!(chart.sample_points(), chart.sample_points());
        let other = Chart::cube(3, 5, 43).unwrap();
        assert_ne!(chart.sample_points(), other.sample_points());
    }

    #[test]
    fn samples_stay_in_box() {
        let chart = Chart::new(names(&["x", "y"]), vec![(0.5, 1.5), (0.0, 1.0)], 100, 3).unwrap();
        let pts = chart.sample_points();
        assert_eq!(pts.len(), 100);
        for p in &pts {
            assert!((0.5..=1.5).contains(&p.coords[0]));
            assert!((0.0..=1.0).contains(&p.coords[1]));
        }
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(Chart::new(names(&["x"]), vec![(1.0, 1.0)], 1, 0).is_err());
        assert!(Chart::new(names(&["x"]), vec![(0.0, 1.0)], 0, 0).is_err());
    }

    #[test]
    fn eval_examples() {
        let chart = Chart::new(names(&["x", "y"]), vec![(-3.0, 3.0); 2], 1, 0).unwrap();
        let ctx = chart.diff_ctx(DerivativeStrategy::Exact);
        let three = TensorField::scalar(2, Expr::c(3.0)).unwrap();
        let pt = chart.point(vec![0.3, -1.2]).unwrap();
        assert_eq!(eval_field(&three, &pt, &ctx).unwrap(), vec![3.0]);

        let id = TensorField::identity(2);
        assert_eq!(eval_field(&id, &pt, &ctx).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);

        let xy = TensorField::scalar(2, Expr::var(0) * Expr::var(1)).unwrap();
        let pt = chart.point(vec![2.0, 0.5]).unwrap();
        assert_eq!(eval_field(&xy, &pt, &ctx).unwrap(), vec![1.0]);
    }

    #[test]
    fn out_of_box_is_a_domain_error() {
        let chart = Chart::cube(2, 1, 0).unwrap();
        assert!(matches!(chart.point(vec![2.0, 0.0]), Err(Error::Domain(_))));
        let ctx = chart.diff_ctx(DerivativeStrategy::Exact);
        let f = TensorField::scalar(2, Expr::var(0)).unwrap();
        let outside = Point { coords: vec![0.0, 1.5] };
        assert!(matches!(eval_field(&f, &outside, &ctx), Err(Error::Domain(_))));
    }

    #[test]
    fn partials_of_square() {
        let chart = Chart::new(names(&["x"]), vec![(0.0, 6.0)], 1, 0).unwrap();
        let pt = chart.point(vec![3.0]).unwrap();
        let sq = TensorField::scalar(1, Expr::var(0).powi(2)).unwrap();
        let exact = partial_derivatives(&sq, &pt, &chart.diff_ctx(DerivativeStrategy::Exact)).unwrap();
        assert_eq!(exact, vec![6.0]);

        let fd_field = sq.clone().with_strategy(DerivativeStrategy::FiniteDifference { step: Some(1e-5) });
        let fd = partial_derivatives(&fd_field, &pt, &chart.diff_ctx(DerivativeStrategy::fd())).unwrap();
        assert!((fd[0] - 6.0).abs() < 1e-9);

        let constant = TensorField::scalar(1, Expr::c(4.0)).unwrap();
        let z = partial_derivatives(&constant, &pt, &chart.diff_ctx(DerivativeStrategy::Exact)).unwrap();
        assert_eq!(z, vec![0.0]);
    }

    #[test]
    fn stencil_shrinks_near_boundary_and_fails_on_it() {
        let chart = Chart::new(names(&["x"]), vec![(0.0, 1.0)], 1, 0).unwrap();
        let ctx = chart.diff_ctx(DerivativeStrategy::fd());
        let sq = TensorField::scalar(1, Expr::var(0).powi(2)).unwrap().with_strategy(DerivativeStrategy::fd());
        let near = chart.point(vec![1.0 - 1e-7]).unwrap();
        let d = partial_derivatives(&sq, &near, &ctx).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-6);
        let edge = chart.point(vec![1.0]).unwrap();
        assert!(matches!(partial_derivatives(&sq, &edge, &ctx), Err(Error::DerivativeDomain(_))));
    }

    #[test]
    fn repeated_partials_are_bitwise_equal() {
        let chart = Chart::cube(2, 1, 0).unwrap();
        let e = (Expr::var(0) * Expr::var(1)).sin() + Expr::var(1).exp();
        for s in [DerivativeStrategy::Exact, DerivativeStrategy::DualForward, DerivativeStrategy::fd()] {
            let f = TensorField::scalar(2, e.clone()).unwrap().with_strategy(s);
            let ctx = chart.diff_ctx(s);
            let pt = chart.point(vec![0.25, -0.5]).unwrap();
            let a = partial_derivatives(&f, &pt, &ctx).unwrap();
            let b = partial_derivatives(&f, &pt, &ctx).unwrap();
            assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn wrong_component_count_rejected() {
        assert!(TensorField::new(3, Valence::ENDO, vec![Expr::zero(); 8]).is_err());
        assert!(TensorField::new(2, Valence::SCALAR, vec![Expr::var(2)]).is_err());
    }

    #[test]
    fn metric_diagnostics() {
        let ctx = DiffCtx::unbounded(2, DerivativeStrategy::Exact);
        let g = TensorField::constant(2, Valence::BILINEAR, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let m = MetricField::new(g, Signature { plus: 1, minus: 1 }).unwrap();
        let d = m.diagnose(&[0.0, 0.0], &ctx).unwrap();
        assert_eq!(d.asymmetry, 0.0);
        assert_eq!(d.det, -1.0);
        assert_eq!(d.counted, Signature { plus: 1, minus: 1 });
    }
}

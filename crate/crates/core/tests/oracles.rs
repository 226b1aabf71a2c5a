//! Frozen values from hand calculation and independent symbolic computation.

use paraf_core::calculus::{christoffel, covariant_derivative, exterior_derivative, sectional_curvature_at};
use paraf_core::catalog::{make_nonnormal_apc3, make_para_c_product, make_para_sasakian_r3};
use paraf_core::check::Tolerances;
use paraf_core::classify::sectional_curvature;
use paraf_core::structure::axioms_at;
use paraf_core::{Chart, DerivativeStrategy, Expr, MetricField, Point, Signature, TensorField, Valence};

fn names(n: &[&str]) -> Vec<String> {
    n.iter().map(|s| s.to_string()).collect()
}

fn euclid(n: usize) -> TensorField {
    let v: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
    TensorField::constant(n, Valence::BILINEAR, &v).unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn polar_christoffels_at_r_2() {
    let chart = Chart::new(names(&["r", "th"]), vec![(0.5, 3.0), (-1.0, 1.0)], 1, 1).unwrap();
    let r = Expr::var(0);
    let g = TensorField::new(2, Valence::BILINEAR, vec![Expr::c(1.0), Expr::zero(), Expr::zero(), r.clone() * r]).unwrap();
    let g = MetricField::new(g, Signature { plus: 2, minus: 0 }).unwrap();
    for s in [DerivativeStrategy::Exact, DerivativeStrategy::DualForward, DerivativeStrategy::fd()] {
        let ctx = chart.diff_ctx(s);
        let gamma = christoffel(&g, &Point { coords: vec![2.0, 0.3] }, &ctx).unwrap();
        let at = |a: usize, b: usize, c: usize| gamma[(a * 2 + b) * 2 + c];
        let tol = if s.is_finite_difference() { 1e-6 } else { 1e-12 };
        close(at(0, 1, 1), -2.0, tol);
        close(at(1, 0, 1), 0.5, tol);
        close(at(1, 1, 0), 0.5, tol);
        close(at(0, 0, 0), 0.0, tol);
    }
}

#[test]
fn unit_sphere_has_curvature_one() {
    let chart = Chart::new(names(&["th", "ph"]), vec![(0.3, 2.8), (-1.0, 1.0)], 1, 1).unwrap();
    let s = Expr::var(0).sin();
    let g = TensorField::new(2, Valence::BILINEAR, vec![Expr::c(1.0), Expr::zero(), Expr::zero(), s.clone() * s]).unwrap();
    for st in [DerivativeStrategy::Exact, DerivativeStrategy::fd()] {
        let ctx = chart.diff_ctx(st);
        for th in [0.7, 1.2, 2.1] {
            let k = sectional_curvature_at(&g, &[1.0, 0.0], &[0.3, 1.0], &Point { coords: vec![th, 0.1] }, &ctx).unwrap();
            close(k, 1.0, 1e-4);
        }
    }
}

#[test]
fn rotation_field_gradient_on_the_plane() {
    let chart = Chart::new(names(&["x", "y"]), vec![(-3.0, 3.0); 2], 1, 1).unwrap();
    let g = MetricField::new(euclid(2), Signature { plus: 2, minus: 0 }).unwrap();
    let z = TensorField::new(2, Valence::VECTOR, vec![Expr::var(1), -Expr::var(0)]).unwrap();
    let m = covariant_derivative(&z, &g, &Point { coords: vec![1.0, 2.0] }, &chart.diff_ctx(DerivativeStrategy::Exact)).unwrap();
    assert_eq!(m, vec![0.0, 1.0, -1.0, 0.0]);
}

#[test]
fn d_of_x_dy() {
    let chart = Chart::new(names(&["x", "y"]), vec![(-1.0, 1.0); 2], 1, 1).unwrap();
    let eta = TensorField::new(2, Valence::COVECTOR, vec![Expr::zero(), Expr::var(0)]).unwrap();
    let d = exterior_derivative(&eta, &Point { coords: vec![0.2, -0.4] }, &chart.diff_ctx(DerivativeStrategy::Exact)).unwrap();
    assert_eq!(d, vec![0.0, 0.5, -0.5, 0.0]);
}

#[test]
fn n1_of_nonnormal_model() {
    // sympy: N1(∂x, ∂y) = (1, −1, 0) at the origin, (1.0583453864014849, −…, 0) at (0.3, −0.2, 0.5)
    let b = make_nonnormal_apc3().unwrap();
    let (ex, ey) = (TensorField::coordinate_vector(3, 0), TensorField::coordinate_vector(3, 1));
    let v = b.tensor_n1(&ex, &ey, &Point { coords: vec![0.0; 3] }).unwrap();
    for (a, e) in v.iter().zip([1.0, -1.0, 0.0]) {
        close(*a, e, 1e-13);
    }
    let v = b.tensor_n1(&ex, &ey, &Point { coords: vec![0.3, -0.2, 0.5] }).unwrap();
    for (a, e) in v.iter().zip([1.0583453864014849, -1.0583453864014849, 0.0]) {
        close(*a, e, 1e-13);
    }
}

#[test]
fn para_sasakian_sectional_curvatures() {
    // sympy at (0.3, 0.2, −0.1)
    let b = make_para_sasakian_r3().unwrap();
    let pt = Point { coords: vec![0.3, 0.2, -0.1] };
    close(sectional_curvature(&b, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &pt).unwrap(), 2.7037037037037033, 1e-12);
    close(sectional_curvature(&b, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &pt).unwrap(), -1.0, 1e-12);
    close(sectional_curvature(&b, &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0], &pt).unwrap(), 0.75438596491228072, 1e-12);
}

#[test]
fn identity_metric_breaks_compatibility_by_two() {
    // f e1 = 2 e2, Q = 4 id on M: g(fX, fX) = 4 against −g(X, QX) = −4, relative residual 8/4.
    let b = make_para_c_product(2.0, 1, 1).unwrap();
    let g = MetricField::new(euclid(3), Signature { plus: 3, minus: 0 }).unwrap();
    let b = b.with_metric(g).unwrap();
    let tol = Tolerances::for_strategy(DerivativeStrategy::Exact);
    let out = axioms_at(&b, 0, &Point { coords: vec![0.0; 3] }, &tol).unwrap();
    let a5 = out.iter().find(|o| o.check_id == "A5.compatibility").unwrap();
    close(a5.residual, 2.0, 1e-12);
    assert!(!a5.pass);
}

//! Pointwise identity suite: connection, forms, Nijenhuis and structure tensors.
//!
//! Every check gathers both sides over the argument set at a sample point and
//! reports one relative residual per point.

use std::collections::BTreeMap;

use crate::calculus::{
    cartan_sides, covariant_derivative_components, exterior_derivative_components, relative_residual,
    ExteriorDerivativeField,
};
use crate::chart::{Field, Valence};
use crate::check::{Bound, CheckOutcome, Tolerances};
use crate::error::Result;
use crate::jet::{matmul, matvec, transpose, VectorJet};
use crate::structure::{Arg, LocalStructure, StructureBundle};

pub const TENSORS: &str = "tensors";

/// Both sides of several identities, accumulated over arguments.
#[derive(Default)]
pub(crate) struct Sides {
    map: BTreeMap<&'static str, (Vec<f64>, Vec<f64>)>,
}

impl Sides {
    pub fn push(&mut self, id: &'static str, lhs: &[f64], rhs: &[f64]) {
        let e = self.map.entry(id).or_default();
        e.0.extend_from_slice(lhs);
        e.1.extend_from_slice(rhs);
    }

    pub fn push1(&mut self, id: &'static str, lhs: f64, rhs: f64) {
        self.push(id, &[lhs], &[rhs]);
    }

    pub fn zero(&mut self, id: &'static str, v: &[f64]) {
        self.push(id, v, &vec![0.0; v.len()]);
    }

    pub fn residuals(self) -> impl Iterator<Item = (&'static str, f64)> {
        self.map.into_iter().map(|(k, (l, r))| (k, relative_residual(&l, &r)))
    }
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Identity checks at one point.
pub(crate) fn tensor_sides(b: &StructureBundle, l: &LocalStructure, args: &[Arg]) -> Result<Sides> {
    let n = l.n;
    let p = l.p;
    let mut s = Sides::default();
    let ctx = b.ctx();

    let mut swapped = vec![0.0; n * n * n];
    for a in 0..n {
        for c in 0..n {
            for d in 0..n {
                swapped[(a * n + d) * n + c] = l.gamma[(a * n + c) * n + d];
            }
        }
    }
    s.push("connection.torsion_free", &l.gamma, &swapped);
    let nabla_g = covariant_derivative_components(Valence::BILINEAR, n, &l.g.v, &l.g.d, &l.gamma)?;
    s.zero("connection.metricity", &nabla_g);

    s.push("fundamental_form.antisymmetry", &l.phi.v, &neg(&transpose(&l.phi.v, n)));
    for xi in &l.xi {
        s.zero("fundamental_form.kernel", &matvec(&transpose(&l.phi.v, n), &xi.v));
    }
    for xi in &l.xi {
        s.zero("difference_tensor.kernel", &matvec(&l.qt.v, &xi.v));
    }
    s.push("difference_tensor.commutes", &matmul(&l.qt.v, &l.f.v, n), &matmul(&l.f.v, &l.qt.v, n));

    for e in &b.eta {
        let de = ExteriorDerivativeField { form: e };
        let dde = exterior_derivative_components(2, n, &de.partials(&l.x, &ctx)?)?;
        s.zero("exterior.dd_eta", &dde);
    }

    for u in args {
        for v in args {
            for i in 0..p {
                s.push1("exterior.coboundary_eta", l.deta_t(i, &u.u.v, &v.u.v), l.deta_coboundary(i, &u.u, &v.u));
                s.push1("n2.forms", l.n2(i, &u.u, &v.u), l.n2_d(i, &u.u.v, &v.u.v));
            }
            let nb = l.nijenhuis(&u.u, &v.u);
            s.push("nijenhuis.forms", &nb, &l.nijenhuis_connection(&u.u.v, &v.u.v));
            s.push("nijenhuis.antisymmetry", &nb, &neg(&l.nijenhuis(&v.u, &u.u)));
        }
        for i in 0..p {
            s.push("n3.forms", &l.n3(i, &u.u), &l.n3_d(i, &u.u.v));
            for j in 0..p {
                s.push1("n4.forms", l.n4(i, j, &u.u), l.n4_d(i, j, &u.u.v));
            }
        }
        let lie = l.lie_g(&u.u)?;
        s.push("lie_metric.forms", &lie, &l.lie_g_connection(&u.u));
    }

    let coords = l.coordinate_arguments();
    let mut n5c = Vec::with_capacity(n * n * n);
    for x in &coords {
        for y in &coords {
            for z in &coords {
                n5c.push(l.n5(x, y, z));
            }
        }
    }
    let n5_multilinear = |x: &[f64], y: &[f64], z: &[f64]| {
        let mut acc = 0.0;
        for a in 0..n {
            for bb in 0..n {
                for c in 0..n {
                    acc += n5c[(a * n + bb) * n + c] * x[a] * y[bb] * z[c];
                }
            }
        }
        acc
    };
    for x in args {
        for y in args {
            for z in args {
                let v = l.n5(x, y, z);
                s.push1("n5.antisymmetry", v, -l.n5(x, z, y));
                s.push1("n5.tensorial", v, n5_multilinear(&x.u.v, &y.u.v, &z.u.v));
                s.push1("master_formula", l.lhs_31(&x.u.v, &y.u.v, &z.u.v), l.rhs_31(x, y, z));
                s.push1("exterior.coboundary_phi", l.dphi_t(&x.u.v, &y.u.v, &z.u.v), l.dphi_coboundary(&x.u, &y.u, &z.u));
            }
        }
    }

    for i in 0..p {
        let xi = l.arg(l.xi[i].clone());
        for x in args {
            let qx = &x.qtu.v;
            for z in args {
                let expected = l.gv(&l.n3(i, &z.u), qx);
                s.push1("n5.kernel_values", l.n5(x, &xi, z), expected);
                s.push1("n5.kernel_values", l.n5(x, z, &xi), -expected);
            }
        }
        for j in 0..p {
            let xj = l.arg(l.xi[j].clone());
            for y in args {
                s.push1("n5.kernel_values", l.n5(&xi, y, &xj), 0.0);
                s.push1("n5.kernel_values", l.n5(&xi, &xj, y), 0.0);
            }
        }
    }

    for i in 0..p {
        let xi = &l.xi[i];
        for e in &l.eta {
            let (lhs, rhs) = cartan_sides(1, xi, &e.v, &e.d)?;
            s.push("cartan.eta", &lhs, &rhs);
        }
        let (lhs, rhs) = cartan_sides(2, xi, &l.phi.v, &l.phi.d)?;
        s.push("cartan.fundamental_form", &lhs, &rhs);

        let lphi = l.lie_phi(i)?;
        let lg = l.lie_g(xi)?;
        let lf = l.lie_f(i)?;
        s.push("lie_fundamental_form", &lphi, &add(&matmul(&lg, &l.f.v, n), &matmul(&l.g.v, &lf, n)));

        let m = l.nabla_xi(i);
        for x in &coords {
            let lhs = l.nabla_f_uv(&x.u.v, &xi.v);
            s.push("nabla_f.on_xi", &lhs, &neg(&l.fv(&matvec(&m, &x.u.v))));
        }
    }
    Ok(s)
}

/// The identity suite at one point.
pub fn tensor_checks_at(
    b: &StructureBundle,
    l: &LocalStructure,
    args: &[Arg],
    sample: usize,
    tol: &Tolerances,
) -> Result<Vec<CheckOutcome>> {
    Ok(tensor_sides(b, l, args)?
        .residuals()
        .map(|(id, r)| CheckOutcome::new(TENSORS, id, sample, &l.x, r, Bound::AtMost(tol.identity_for(id))))
        .collect())
}

/// Nijenhuis bracket form against its connection form on coordinate fields.
pub fn nijenhuis_coordinate_residual(l: &LocalStructure) -> f64 {
    let n = l.n;
    let (mut lhs, mut rhs) = (Vec::new(), Vec::new());
    for a in 0..n {
        for c in 0..n {
            let (u, v) = (VectorJet::coordinate(n, a), VectorJet::coordinate(n, c));
            lhs.extend(l.nijenhuis(&u, &v));
            rhs.extend(l.nijenhuis_connection(&u.v, &v.v));
        }
    }
    relative_residual(&lhs, &rhs)
}

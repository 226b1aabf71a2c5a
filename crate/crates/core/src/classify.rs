//! Class predicates, the class lattice and theorem suites.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{invert, relative_residual, sectional_curvature_at};
use crate::chart::Point;
use crate::check::{Bound, CheckOutcome, Tolerances};
use crate::error::{Error, Result};
use crate::identities::tensor_checks_at;
use crate::jet::{bracket, dot, matmul, matvec, max_abs, VectorJet};
use crate::structure::{axiom_group, validate_axioms, Arg, LocalStructure, StructureBundle};

/// Axiom groups that do not involve the metric.
pub const STRUCTURAL_AXIOMS: &[&str] = &["A1", "A2", "A3", "A4", "A7"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ClassId {
    #[serde(rename = "weak_almost_para_f")]
    WeakAlmostParaF,
    #[serde(rename = "metric_weak_para_f")]
    MetricWeakParaF,
    #[serde(rename = "normal")]
    Normal,
    #[serde(rename = "weak_almost_para_S")]
    WeakAlmostParaS,
    #[serde(rename = "weak_almost_para_C")]
    WeakAlmostParaC,
    #[serde(rename = "weak_para_K")]
    WeakParaK,
    #[serde(rename = "weak_para_S")]
    WeakParaS,
    #[serde(rename = "weak_para_C")]
    WeakParaC,
    #[serde(rename = "para_S")]
    ParaS,
    #[serde(rename = "unclassified")]
    Unclassified,
}

impl ClassId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassId::WeakAlmostParaF => "weak_almost_para_f",
            ClassId::MetricWeakParaF => "metric_weak_para_f",
            ClassId::Normal => "normal",
            ClassId::WeakAlmostParaS => "weak_almost_para_S",
            ClassId::WeakAlmostParaC => "weak_almost_para_C",
            ClassId::WeakParaK => "weak_para_K",
            ClassId::WeakParaS => "weak_para_S",
            ClassId::WeakParaC => "weak_para_C",
            ClassId::ParaS => "para_S",
            ClassId::Unclassified => "unclassified",
        }
    }
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maxima over samples and arguments of the quantities behind each predicate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredicateResiduals {
    /// `max |N1(X,Y)|`
    pub normal: f64,
    /// `max |dΦ|`
    pub closed_phi: f64,
    /// `max |dη^i − Φ|`
    pub contact: f64,
    /// `max |dη^i|`
    pub closed_eta: f64,
    /// `max |Q̃|`
    pub classical: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassVerdict {
    #[serde(rename = "class")]
    pub class_id: ClassId,
    pub residuals: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub failed_axioms: Vec<String>,
    pub assumptions: Vec<String>,
}

impl ClassVerdict {
    pub fn holds(&self, class: &str) -> bool {
        self.verdicts.get(class).copied().unwrap_or(false)
    }

    pub fn axioms_pass(&self) -> bool {
        self.failed_axioms.is_empty()
    }
}

/// Lattice verdicts from thresholded predicate residuals.
pub fn lattice(r: &PredicateResiduals, tol: &Tolerances) -> BTreeMap<String, bool> {
    let ok = |id: &str, v: f64| v <= tol.class_for(id);
    let normal = ok("normal", r.normal);
    let closed_phi = ok("closed_phi", r.closed_phi);
    let contact = ok("contact", r.contact);
    let closed_eta = ok("closed_eta", r.closed_eta);
    let classical = ok("classical", r.classical);
    let k = normal && closed_phi;
    let s = k && contact;
    let mut v = BTreeMap::new();
    v.insert("metric_weak_para_f".to_string(), true);
    v.insert("normal".to_string(), normal);
    v.insert("weak_almost_para_S".to_string(), contact);
    v.insert("weak_almost_para_C".to_string(), closed_phi && closed_eta);
    v.insert("weak_para_K".to_string(), k);
    v.insert("weak_para_S".to_string(), s);
    v.insert("weak_para_C".to_string(), k && closed_eta);
    v.insert("para_S".to_string(), s && classical);
    v
}

/// Most specific class admitted by the verdicts.
pub fn most_specific(v: &BTreeMap<String, bool>) -> ClassId {
    const ORDER: &[ClassId] = &[
        ClassId::ParaS,
        ClassId::WeakParaS,
        ClassId::WeakParaC,
        ClassId::WeakParaK,
        ClassId::WeakAlmostParaS,
        ClassId::WeakAlmostParaC,
        ClassId::Normal,
        ClassId::MetricWeakParaF,
    ];
    ORDER.iter().copied().find(|c| v.get(c.as_str()).copied().unwrap_or(false)).unwrap_or(ClassId::Unclassified)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremStatus {
    Pass,
    Fail,
    Vacuous,
}

/// A hypothesis, conclusion or observation with its worst residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub id: String,
    pub residual: f64,
    pub bound: Bound,
    pub pass: bool,
    pub worst_sample: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl Condition {
    pub fn new(id: impl Into<String>, residual: f64, worst_sample: usize, bound: Bound) -> Self {
        Self { id: id.into(), residual, pass: bound.admits(residual), bound, worst_sample, details: BTreeMap::new() }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.to_string(), v);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremReport {
    pub theorem_id: String,
    pub hypotheses: Vec<Condition>,
    pub conclusions: Vec<Condition>,
    pub observations: Vec<Condition>,
    pub status: TheoremStatus,
    /// Hypotheses hold but a conclusion fails. A data-quality flag: the
    /// residuals of the inputs exceed tolerance somewhere.
    pub contradiction: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub fn conclusion(&self, id: &str) -> Option<&Condition> {
        self.conclusions.iter().find(|c| c.id == id)
    }

    pub fn observation(&self, id: &str) -> Option<&Condition> {
        self.observations.iter().find(|c| c.id == id)
    }

    pub fn hypothesis(&self, id: &str) -> Option<&Condition> {
        self.hypotheses.iter().find(|c| c.id == id)
    }
}

struct Builder {
    id: &'static str,
    hypotheses: Vec<Condition>,
    any: bool,
    conclusions: Vec<Condition>,
    observations: Vec<Condition>,
    notes: Vec<String>,
}

impl Builder {
    fn new(id: &'static str, hypotheses: Vec<Condition>) -> Self {
        Self { id, hypotheses, any: false, conclusions: vec![], observations: vec![], notes: vec![] }
    }

    /// First hypothesis (axioms) must hold, then at least one of the rest.
    fn any_of(mut self) -> Self {
        self.any = true;
        self
    }

    fn holds(&self) -> bool {
        if self.any {
            self.hypotheses[0].pass && self.hypotheses[1..].iter().any(|h| h.pass)
        } else {
            self.hypotheses.iter().all(|h| h.pass)
        }
    }

    fn finish(self) -> TheoremReport {
        let holds = self.holds();
        let concl_ok = self.conclusions.iter().all(|c| c.pass);
        let status = match (holds, concl_ok) {
            (false, _) => TheoremStatus::Vacuous,
            (true, true) => TheoremStatus::Pass,
            (true, false) => TheoremStatus::Fail,
        };
        TheoremReport {
            theorem_id: self.id.to_string(),
            hypotheses: self.hypotheses,
            conclusions: self.conclusions,
            observations: self.observations,
            contradiction: status == TheoremStatus::Fail,
            status,
            notes: self.notes,
        }
    }
}

/// Per-point structure data for a whole sample set, computed once and shared
/// by every suite.
pub struct Analysis<'a> {
    pub bundle: &'a StructureBundle,
    pub tol: Tolerances,
    pub points: Vec<Point>,
    pub axioms: Vec<CheckOutcome>,
    locals: std::result::Result<Vec<(LocalStructure, Vec<Arg>)>, Error>,
}

type Sides = (Vec<f64>, Vec<f64>);

fn sum_max<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

impl<'a> Analysis<'a> {
    pub fn new(bundle: &'a StructureBundle, tol: Tolerances) -> Result<Self> {
        let points = bundle.sample_points();
        let axioms = validate_axioms(bundle, &tol)?;
        let combos = bundle.combination_vectors();
        let locals = points
            .par_iter()
            .map(|pt| {
                let l = bundle.local(pt)?;
                let a = l.arguments(&combos);
                Ok((l, a))
            })
            .collect::<Result<Vec<_>>>();
        Ok(Self { bundle, tol, points, axioms, locals })
    }

    fn locals(&self) -> Result<&[(LocalStructure, Vec<Arg>)]> {
        self.locals.as_deref().map_err(|e| e.clone())
    }

    pub fn local(&self, sample: usize) -> Result<&LocalStructure> {
        self.locals()?.get(sample).map(|(l, _)| l).ok_or_else(|| Error::Contract(format!("no sample {sample}")))
    }

    pub fn failed_axioms(&self) -> Vec<String> {
        crate::structure::failed_axioms(&self.axioms)
    }

    fn axioms_condition(&self) -> Condition {
        let failing = self.axioms.iter().filter(|o| !o.pass).count();
        Condition::new("axioms", failing as f64, 0, Bound::AtMost(0.0))
    }

    pub fn tensor_checks(&self) -> Result<Vec<CheckOutcome>> {
        let per: Vec<Vec<CheckOutcome>> = self
            .locals()?
            .par_iter()
            .enumerate()
            .map(|(k, (l, a))| tensor_checks_at(self.bundle, l, a, k, &self.tol))
            .collect::<Result<_>>()?;
        Ok(per.into_iter().flatten().collect())
    }

    /// Worst value of a per-point quantity and the sample where it occurs.
    fn gather<F>(&self, f: F) -> Result<(f64, usize)>
    where
        F: Fn(&LocalStructure, &[Arg]) -> Result<f64> + Sync,
    {
        let vals: Vec<f64> = self.locals()?.par_iter().map(|(l, a)| f(l, a)).collect::<Result<_>>()?;
        let mut worst = (0.0f64, 0usize);
        for (k, v) in vals.into_iter().enumerate() {
            if v.is_nan() || v.abs() > worst.0 {
                worst = (if v.is_nan() { f64::NAN } else { v.abs() }, k);
                if v.is_nan() {
                    break;
                }
            }
        }
        Ok(worst)
    }

    fn vanish<F>(&self, id: &str, f: F) -> Result<Condition>
    where
        F: Fn(&LocalStructure, &[Arg]) -> Result<f64> + Sync,
    {
        let (r, k) = self.gather(f)?;
        Ok(Condition::new(id, r, k, Bound::AtMost(self.tol.class_for(id))))
    }

    fn identity<F>(&self, id: &str, f: F) -> Result<Condition>
    where
        F: Fn(&LocalStructure, &[Arg]) -> Result<Sides> + Sync,
    {
        let (r, k) = self.gather(|l, a| {
            let (x, y) = f(l, a)?;
            Ok(relative_residual(&x, &y))
        })?;
        Ok(Condition::new(id, r, k, Bound::AtMost(self.tol.identity_for(id))))
    }

    pub fn predicates(&self) -> Result<PredicateResiduals> {
        let n1 = self.gather(|l, a| {
            Ok(sum_max(a.iter().flat_map(|u| a.iter().flat_map(move |v| l.n1(&u.u, &v.u)))))
        })?;
        let dphi = self.gather(|l, _| Ok(max_abs(&l.dphi)))?;
        let contact = self.gather(|l, _| {
            Ok(sum_max(l.deta.iter().flat_map(|d| d.iter().zip(&l.phi.v).map(|(x, y)| x - y))))
        })?;
        let deta = self.gather(|l, _| Ok(sum_max(l.deta.iter().flatten().copied())))?;
        let qt = self.gather(|l, _| Ok(max_abs(&l.qt.v)))?;
        Ok(PredicateResiduals { normal: n1.0, closed_phi: dphi.0, contact: contact.0, closed_eta: deta.0, classical: qt.0 })
    }

    /// Classification with the refusal rule applied: a bundle failing a
    /// metric axiom but none of the structural ones is `weak_almost_para_f`;
    /// any structural failure leaves it `unclassified`.
    pub fn verdict(&self) -> Result<ClassVerdict> {
        let failed = self.failed_axioms();
        let assumptions = vec!["xi_bar = sum_i xi_i in the kernel part of N1".to_string()];
        if !failed.is_empty() {
            let structural = failed.iter().any(|g| STRUCTURAL_AXIOMS.contains(&g.as_str()));
            let class_id = if structural { ClassId::Unclassified } else { ClassId::WeakAlmostParaF };
            let mut verdicts = BTreeMap::new();
            verdicts.insert("weak_almost_para_f".to_string(), !structural);
            return Ok(ClassVerdict { class_id, residuals: BTreeMap::new(), verdicts, failed_axioms: failed, assumptions });
        }
        let r = self.predicates()?;
        let verdicts = lattice(&r, &self.tol);
        let mut residuals = BTreeMap::new();
        residuals.insert("normal".to_string(), r.normal);
        residuals.insert("closed_phi".to_string(), r.closed_phi);
        residuals.insert("contact".to_string(), r.contact);
        residuals.insert("closed_eta".to_string(), r.closed_eta);
        residuals.insert("classical".to_string(), r.classical);
        Ok(ClassVerdict { class_id: most_specific(&verdicts), residuals, verdicts, failed_axioms: failed, assumptions })
    }

    /// Like [`verdict`](Self::verdict) but refuses bundles failing any axiom.
    pub fn classify(&self) -> Result<ClassVerdict> {
        let failed = self.failed_axioms();
        if !failed.is_empty() {
            return Err(Error::AxiomsFailed(failed.join(", ")));
        }
        self.verdict()
    }

    fn class_condition(&self, v: &ClassVerdict, class: &str) -> Condition {
        let parts: &[&str] = match class {
            "normal" => &["normal"],
            "weak_almost_para_S" => &["contact"],
            "weak_almost_para_C" => &["closed_phi", "closed_eta"],
            "weak_para_K" => &["normal", "closed_phi"],
            "weak_para_S" => &["normal", "closed_phi", "contact"],
            "weak_para_C" => &["normal", "closed_phi", "closed_eta"],
            _ => &[],
        };
        let r = parts.iter().map(|p| v.residuals.get(*p).copied().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        let mut c = Condition::new(format!("class.{class}"), r, 0, Bound::AtMost(self.tol.class));
        c.pass = v.holds(class);
        for p in parts {
            c.details.insert(p.to_string(), v.residuals.get(*p).copied().unwrap_or(f64::NAN));
        }
        c
    }

    fn hyps(&self, v: &ClassVerdict, classes: &[&str]) -> Vec<Condition> {
        let mut h = vec![self.axioms_condition()];
        h.extend(classes.iter().map(|c| self.class_condition(v, c)));
        h
    }

    // ---- shared conclusions -------------------------------------------------

    fn n2_vanishes(&self) -> Result<Condition> {
        self.vanish("n2.vanishes", |l, a| {
            Ok(sum_max((0..l.p).flat_map(|i| a.iter().flat_map(move |u| a.iter().map(move |v| l.n2(i, &u.u, &v.u))))))
        })
    }

    fn n4_vanishes(&self) -> Result<Condition> {
        self.vanish("n4.vanishes", |l, a| {
            Ok(sum_max(
                (0..l.p).flat_map(|i| (0..l.p).flat_map(move |j| a.iter().map(move |u| l.n4(i, j, &u.u)))),
            ))
        })
    }

    fn kernel_parallel(&self) -> Result<Condition> {
        self.vanish("kernel.parallel", |l, _| {
            Ok(sum_max((0..l.p).flat_map(|j| {
                let m = l.nabla_xi(j);
                (0..l.p).flat_map(move |i| matvec(&m, &l.xi[i].v))
            })))
        })
    }

    fn flat_leaves(&self, b: &mut Builder) -> Result<()> {
        if self.bundle.p() < 2 {
            b.notes.push("p = 1: ker f has no 2-planes, flat-leaves check vacuous".into());
            return Ok(());
        }
        let ctx = self.bundle.ctx();
        let g = &self.bundle.g.field;
        b.conclusions.push(self.vanish("kernel.flat_leaves", |l, _| {
            let pt = Point { coords: l.x.clone() };
            let mut worst = 0.0f64;
            for i in 0..l.p {
                for j in i + 1..l.p {
                    worst = worst.max(sectional_curvature_at(g, &l.xi[i].v, &l.xi[j].v, &pt, &ctx)?.abs());
                }
            }
            Ok(worst)
        })?);
        Ok(())
    }

    fn riemannian_foliation(&self) -> Result<Condition> {
        self.vanish("foliation.riemannian", |l, a| {
            let tops: Vec<VectorJet> = a.iter().map(|u| l.top(&u.u)).collect();
            let mut worst = 0.0f64;
            for x in &tops {
                for y in &tops {
                    let s: Vec<f64> = l.cov(x, y).iter().zip(l.cov(y, x)).map(|(p, q)| p + q).collect();
                    for xi in &l.xi {
                        worst = worst.max(l.gv(&s, &xi.v).abs());
                    }
                }
            }
            Ok(worst)
        })
    }

    fn triples<F>(&self, id: &str, f: F) -> Result<Condition>
    where
        F: Fn(&LocalStructure, &Arg, &Arg, &Arg) -> (f64, f64) + Sync,
    {
        self.identity(id, |l, a| {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for u in a {
                for v in a {
                    for w in a {
                        let (p, q) = f(l, u, v, w);
                        x.push(p);
                        y.push(q);
                    }
                }
            }
            Ok((x, y))
        })
    }

    fn pairs<F>(&self, id: &str, f: F) -> Result<Condition>
    where
        F: Fn(&LocalStructure, &Arg, &Arg) -> Result<(Vec<f64>, Vec<f64>)> + Sync,
    {
        self.identity(id, |l, a| {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for u in a {
                for v in a {
                    let (p, q) = f(l, u, v)?;
                    x.extend(p);
                    y.extend(q);
                }
            }
            Ok((x, y))
        })
    }

    fn nabla_f_vanishes(&self) -> Result<Condition> {
        self.vanish("nabla_f.vanishes", |l, _| Ok(max_abs(&l.nabla_f)))
    }

    fn n5_vanishes(&self) -> Result<Condition> {
        self.vanish("n5.vanishes", |l, a| {
            Ok(sum_max(a.iter().flat_map(|x| a.iter().flat_map(move |y| a.iter().map(move |z| l.n5(x, y, z))))))
        })
    }

    fn para_c_identities(&self, b: &mut Builder) -> Result<()> {
        b.conclusions.push(self.triples("nabla_f.para_C_formula", |l, x, y, z| {
            (l.lhs_31(&x.u.v, &y.u.v, &z.u.v), l.n5(x, y, z))
        })?);
        b.conclusions.push(self.triples("n5.cyclic", |l, x, y, z| (l.n5(x, y, z) + l.n5(y, z, x) + l.n5(z, x, y), 0.0))?);
        b.conclusions.push(self.triples("n5.cyclic_f", |l, x, y, z| {
            let (fx, fy, fz) = (l.arg(x.fu.clone()), l.arg(y.fu.clone()), l.arg(z.fu.clone()));
            (l.n5(&fx, y, z) + l.n5(&fy, z, x) + l.n5(&fz, x, y), 0.0)
        })?);
        b.conclusions.push(self.pairs("nabla_xi.para_C", |l, x, z| {
            let (mut p, mut q) = (vec![], vec![]);
            let qz = matvec(&l.q.v, &z.u.v);
            for i in 0..l.p {
                let xi = l.arg(l.xi[i].clone());
                p.push(l.gv(&matvec(&l.nabla_xi(i), &x.u.v), &qz));
                q.push(-0.5 * l.n5(x, &xi, &l.arg(z.fu.clone())));
            }
            Ok((p, q))
        })?);
        Ok(())
    }

    // ---- theorem suites -----------------------------------------------------

    /// Normal structures: `N3 = N4 = 0`, the `N2` formula, `dη^j(ξ_i, ·) = 0`
    /// and totally geodesic `ker f`.
    pub fn check_normal_structure(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("normal_structure", self.hyps(v, &["normal"]));
        if b.holds() {
            b.conclusions.push(self.vanish("n3.vanishes", |l, a| {
                Ok(sum_max((0..l.p).flat_map(|i| a.iter().flat_map(move |u| l.n3(i, &u.u)))))
            })?);
            b.conclusions.push(self.n4_vanishes()?);
            b.conclusions.push(self.pairs("n2.bracket_formula", |l, x, y| {
                let br = bracket(&x.qtu, &y.fu);
                Ok(((0..l.p).map(|i| l.n2(i, &x.u, &y.u)).collect(), (0..l.p).map(|i| dot(&l.eta[i].v, &br)).collect()))
            })?);
            b.conclusions.push(self.vanish("deta.xi_kernel", |l, a| {
                Ok(sum_max(
                    (0..l.p).flat_map(|i| (0..l.p).flat_map(move |j| a.iter().map(move |u| l.deta_t(j, &l.xi[i].v, &u.u.v)))),
                ))
            })?);
            b.conclusions.push(self.vanish("kernel.totally_geodesic", |l, _| {
                let ms: Vec<Vec<f64>> = (0..l.p).map(|i| l.nabla_xi(i)).collect();
                Ok(sum_max((0..l.p).flat_map(|i| {
                    let ms = &ms;
                    (0..l.p).flat_map(move |j| {
                        let a = matvec(&ms[j], &l.xi[i].v);
                        let c = matvec(&ms[i], &l.xi[j].v);
                        a.into_iter().zip(c).map(|(p, q)| p + q).collect::<Vec<_>>()
                    })
                })))
            })?);
        }
        Ok(b.finish())
    }

    /// Killing property of each `ξ_i`; on weak almost para-S/C structures also
    /// the equivalence with `N3_i = 0`.
    pub fn check_killing(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("killing", self.hyps(v, &["weak_para_K", "weak_almost_para_S", "weak_almost_para_C"]))
            .any_of();
        if !self.axioms_condition().pass {
            return Ok(b.finish());
        }
        let class_tol = self.tol.class_for("killing");
        for i in 0..self.bundle.p() {
            let lie = self.vanish(&format!("lie_g.xi{}", i + 1), |l, _| Ok(max_abs(&l.lie_g(&l.xi[i])?)))?;
            let n3 = self.vanish(&format!("n3.xi{}", i + 1), |l, a| {
                Ok(sum_max(a.iter().flat_map(|u| l.n3(i, &u.u))))
            })?;
            if b.holds() {
                if v.holds("weak_para_K") {
                    let mut c = lie.clone();
                    c.id = format!("killing.xi{}", i + 1);
                    c.bound = Bound::AtMost(class_tol);
                    c.pass = c.bound.admits(c.residual);
                    b.conclusions.push(c);
                }
                if v.holds("weak_almost_para_S") || v.holds("weak_almost_para_C") {
                    let agree = (lie.residual <= class_tol) == (n3.residual <= class_tol);
                    let c = Condition::new(
                        format!("killing_iff_n3.xi{}", i + 1),
                        if agree { 0.0 } else { 1.0 },
                        lie.worst_sample,
                        Bound::AtMost(0.0),
                    )
                    .with("lie_g", lie.residual)
                    .with("n3", n3.residual);
                    b.conclusions.push(c);
                }
            }
            b.observations.push(lie);
            b.observations.push(n3);
        }
        Ok(b.finish())
    }

    /// Weak para-K: `∇_{ξ_i} ξ_j = 0`, integrable `ker f` with flat leaves,
    /// Riemannian foliation.
    pub fn check_totally_geodesic_kernel(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("totally_geodesic_kernel", self.hyps(v, &["weak_para_K"]));
        if b.holds() {
            b.conclusions.push(self.kernel_parallel()?);
            b.conclusions.push(self.vanish("kernel.integrable", |l, a| {
                let mut w = 0.0f64;
                for i in 0..l.p {
                    for j in 0..l.p {
                        let br = bracket(&l.xi[i], &l.xi[j]);
                        for u in a {
                            w = w.max(l.gv(&br, &u.fu.v).abs());
                        }
                    }
                }
                Ok(w)
            })?);
            self.flat_leaves(&mut b)?;
            b.conclusions.push(self.riemannian_foliation()?);
        }
        Ok(b.finish())
    }

    /// Weak para-K expression of `∇f` and its `ξ_i` direction.
    pub fn check_weak_para_k_formula(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("weak_para_K_formula", self.hyps(v, &["weak_para_K"]));
        if b.holds() {
            b.conclusions.push(self.triples("nabla_f.para_K_formula", |l, x, y, z| {
                let mut r = l.n5(x, y, z);
                let br = bracket(&y.qtu, &z.fu);
                for i in 0..l.p {
                    r += 2.0 * l.deta_t(i, &y.fu.v, &x.u.v) * l.eta_v(i, &z.u.v)
                        - 2.0 * l.deta_t(i, &z.fu.v, &x.u.v) * l.eta_v(i, &y.u.v)
                        + dot(&l.eta[i].v, &br) * l.eta_v(i, &x.u.v);
                }
                (l.lhs_31(&x.u.v, &y.u.v, &z.u.v), r)
            })?);
            b.conclusions.push(self.pairs("nabla_f.xi_direction", |l, y, z| {
                let br = bracket(&y.qtu, &z.fu);
                Ok((
                    (0..l.p).map(|i| l.lhs_31(&l.xi[i].v, &y.u.v, &z.u.v)).collect(),
                    (0..l.p).map(|i| dot(&l.eta[i].v, &br)).collect(),
                ))
            })?);
        }
        Ok(b.finish())
    }

    /// Weak almost para-S: vanishing `N2`, `N4`, the kernel part of `N1`,
    /// `∇f` formulas and the `h` tensor identities.
    pub fn check_weak_almost_para_s(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("weak_almost_para_S", self.hyps(v, &["weak_almost_para_S"]));
        if !b.holds() {
            return Ok(b.finish());
        }
        b.conclusions.push(self.n2_vanishes()?);
        b.conclusions.push(self.n4_vanishes()?);
        b.conclusions.push(self.pairs("n1.kernel_part", |l, x, y| {
            let lhs = l.perp(&l.n1(&x.u, &y.u));
            let s = 2.0 * l.gv(&x.u.v, &l.fv(&y.qtu.v));
            Ok((lhs, l.xi_bar().iter().map(|c| s * c).collect()))
        })?);
        b.conclusions.push(self.triples("nabla_f.almost_S_formula", |l, x, y, z| {
            let (fx, fy, fz) = (&x.fu.v, &y.fu.v, &z.fu.v);
            let r = -l.gv(&l.n1(&y.u, &z.u), fx) + 2.0 * l.gv(fx, fy) * l.eta_bar(&z.u.v)
                - 2.0 * l.gv(fx, fz) * l.eta_bar(&y.u.v)
                + l.n5(x, y, z);
            (l.lhs_31(&x.u.v, &y.u.v, &z.u.v), r)
        })?);
        b.conclusions.push(self.pairs("nabla_f.xi_direction_n5", |l, y, z| {
            let mut p = vec![];
            let mut q = vec![];
            for i in 0..l.p {
                p.push(l.lhs_31(&l.xi[i].v, &y.u.v, &z.u.v));
                q.push(l.n5(&l.arg(l.xi[i].clone()), y, z));
            }
            Ok((p, q))
        })?);
        b.conclusions.push(self.kernel_parallel()?);
        b.conclusions.push(self.vanish("h.kernel", |l, _| {
            let mut w = 0.0f64;
            for i in 0..l.p {
                let h = l.h(i)?;
                for xj in &l.xi {
                    w = w.max(max_abs(&matvec(&h, &xj.v)));
                }
            }
            Ok(w)
        })?);
        b.conclusions.push(self.pairs("h.antisymmetric_part", |l, x, y| {
            let mut p = vec![];
            let mut q = vec![];
            for i in 0..l.p {
                let h = l.h(i)?;
                let hs = l.adjoint(&h);
                let d: Vec<f64> = h.iter().zip(&hs).map(|(a, c)| a - c).collect();
                p.push(l.gv(&matvec(&d, &x.u.v), &y.u.v));
                q.push(0.5 * l.n5(&l.arg(l.xi[i].clone()), x, y));
            }
            Ok((p, q))
        })?);
        let n = self.bundle.dim();
        let mut formula = self.identity("nabla_xi.formula", |l, _| {
            let qinv = invert(&l.q.v, n)?;
            let (mut p, mut q) = (vec![], vec![]);
            for i in 0..l.p {
                let hs = l.adjoint(&l.h(i)?);
                let rhs: Vec<f64> =
                    matmul(&qinv, &matmul(&l.f.v, &hs, n), n).iter().zip(&l.f.v).map(|(a, c)| a - c).collect();
                p.extend(l.nabla_xi(i));
                q.extend(rhs);
            }
            Ok((p, q))
        })?;
        let (cond, _) = self.gather(|l, _| Ok(condition_number(&l.q.v, n)))?;
        formula.details.insert("q_condition".into(), cond);
        if cond > 1e8 {
            b.notes.push(format!("Q is ill-conditioned (condition number {cond:e})"));
        }
        b.conclusions.push(formula);
        b.conclusions.push(self.identity("h.anticommutator", |l, _| {
            let (mut p, mut q) = (vec![], vec![]);
            for i in 0..l.p {
                let h = l.h(i)?;
                p.extend(matmul(&h, &l.f.v, n).iter().zip(matmul(&l.f.v, &h, n)).map(|(a, c)| a + c));
                q.extend(l.lie_q(i)?.iter().map(|v| -0.5 * v));
            }
            Ok((p, q))
        })?);
        b.conclusions.push(self.vanish("nabla_xi.kernel_orthogonal", |l, a| {
            let mut w = 0.0f64;
            for i in 0..l.p {
                let m = l.nabla_xi(i);
                for u in a {
                    let nx = matvec(&m, &u.u.v);
                    for xk in &l.xi {
                        w = w.max(l.gv(&nx, &xk.v).abs());
                    }
                }
            }
            Ok(w)
        })?);
        Ok(b.finish())
    }

    /// Weak almost para-C: `N2 = N4 = 0`, `N1 = [f,f]`, commuting and parallel
    /// `ξ_i`, flat leaves.
    pub fn check_weak_almost_para_c(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("weak_almost_para_C", self.hyps(v, &["weak_almost_para_C"]));
        if b.holds() {
            b.conclusions.push(self.n2_vanishes()?);
            b.conclusions.push(self.n4_vanishes()?);
            b.conclusions.push(self.pairs("n1.equals_nijenhuis", |l, x, y| Ok((l.n1(&x.u, &y.u), l.nijenhuis(&x.u, &y.u))))?);
            b.conclusions.push(self.vanish("kernel.commuting", |l, _| {
                Ok(sum_max((0..l.p).flat_map(|i| (0..l.p).flat_map(move |j| bracket(&l.xi[i], &l.xi[j])))))
            })?);
            b.conclusions.push(self.kernel_parallel()?);
            self.flat_leaves(&mut b)?;
        }
        Ok(b.finish())
    }

    /// Weak para-S: the `∇f` formula, `h = 0`, Riemannian foliation.
    pub fn check_weak_para_s(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("weak_para_S", self.hyps(v, &["weak_para_S"]));
        if b.holds() {
            b.conclusions.push(self.triples("nabla_f.para_S_formula", |l, x, y, z| {
                let qx = matvec(&l.q.v, &x.u.v);
                let (yv, zv) = (&y.u.v, &z.u.v);
                let mut r = l.gv(&qx, zv) * l.eta_bar(yv) - l.gv(&qx, yv) * l.eta_bar(zv) + 0.5 * l.n5(x, y, z);
                for j in 0..l.p {
                    r -= l.eta_v(j, &x.u.v) * (l.eta_bar(yv) * l.eta_v(j, zv) - l.eta_v(j, yv) * l.eta_bar(zv));
                }
                (0.5 * l.lhs_31(&x.u.v, yv, zv), r)
            })?);
            b.conclusions.push(self.vanish("h.vanishes", |l, _| {
                Ok((0..l.p).map(|i| l.h(i).map(|h| max_abs(&h))).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max))
            })?);
            b.conclusions.push(self.riemannian_foliation()?);
        }
        Ok(b.finish())
    }

    /// Rigidity: on a normal structure with `dη^i = Φ`, `g(N1(X,Y), ξ_i) =
    /// 2g(Q̃X, fY)` forces `Q̃ = 0`.
    pub fn check_rigidity(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut h = vec![self.axioms_condition(), self.class_condition(v, "normal")];
        h.push(self.class_condition(v, "weak_almost_para_S"));
        let mut b = Builder::new("rigidity", h);
        if b.holds() {
            b.conclusions.push(self.pairs("n1.xi_component", |l, x, y| {
                let n1 = l.n1(&x.u, &y.u);
                let rhs = 2.0 * l.gv(&x.qtu.v, &y.fu.v);
                Ok(((0..l.p).map(|i| l.gv(&n1, &l.xi[i].v)).collect(), vec![rhs; l.p]))
            })?);
            b.conclusions.push(self.vanish("qtilde.on_image", |l, a| {
                Ok(sum_max(a.iter().flat_map(|x| a.iter().map(move |y| l.gv(&x.qtu.v, &y.fu.v)))))
            })?);
            b.conclusions.push(self.vanish("qtilde.vanishes", |l, _| Ok(max_abs(&l.qt.v)))?);
            let r = b.finish();
            let mut r = r;
            if r.status == TheoremStatus::Pass {
                r.notes.push("weak para-S with Q~ = 0: para_S".into());
            } else {
                r.notes.push("hypotheses hold but Q~ != 0: input residuals exceed tolerance".into());
            }
            return Ok(r);
        }
        Ok(b.finish())
    }

    /// `∇f = 0` and `[ξ_i, ξ_j]^⊥ = 0` give a weak para-C structure with
    /// `N5 = 0`.
    pub fn check_nabla_f_characterization(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut h = vec![self.axioms_condition()];
        if h[0].pass {
            h.push(self.nabla_f_vanishes()?);
            h.push(self.vanish("kernel.bracket_perp", |l, _| {
                Ok(sum_max((0..l.p).flat_map(|i| (0..l.p).flat_map(move |j| l.perp(&bracket(&l.xi[i], &l.xi[j]))))))
            })?);
        }
        let mut b = Builder::new("nabla_f_characterization", h);
        if b.holds() {
            let ok = v.holds("weak_para_C");
            b.conclusions.push(
                Condition::new("class.weak_para_C", if ok { 0.0 } else { 1.0 }, 0, Bound::AtMost(0.0))
                    .with("class_rank", v.class_id as u8 as f64),
            );
            b.conclusions.push(self.n5_vanishes()?);
            self.para_c_identities(&mut b)?;
        }
        Ok(b.finish())
    }

    /// Weak para-C: `2g((∇_X f)Y,Z) = N5(X,Y,Z)` and the two cyclic identities.
    pub fn check_weak_para_c(&self, v: &ClassVerdict) -> Result<TheoremReport> {
        let mut b = Builder::new("weak_para_C", self.hyps(v, &["weak_para_C"]));
        if b.holds() {
            self.para_c_identities(&mut b)?;
        }
        Ok(b.finish())
    }

    /// Every theorem suite, in a fixed order.
    pub fn theorems(&self, v: &ClassVerdict) -> Result<Vec<TheoremReport>> {
        let suites: [fn(&Self, &ClassVerdict) -> Result<TheoremReport>; 10] = [
            Self::check_normal_structure,
            Self::check_killing,
            Self::check_totally_geodesic_kernel,
            Self::check_weak_para_k_formula,
            Self::check_weak_almost_para_s,
            Self::check_weak_almost_para_c,
            Self::check_weak_para_s,
            Self::check_rigidity,
            Self::check_nabla_f_characterization,
            Self::check_weak_para_c,
        ];
        let mut out: Vec<TheoremReport> = suites.par_iter().map(|f| f(self, v)).collect::<Result<_>>()?;
        out.sort_by(|a, b| a.theorem_id.cmp(&b.theorem_id));
        Ok(out)
    }
}

fn condition_number(m: &[f64], n: usize) -> f64 {
    let sv = DMatrix::from_row_slice(n, n, m).singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 { f64::INFINITY } else { hi / lo }
}

/// `K(X, Y)` for the bundle metric at `pt`.
pub fn sectional_curvature(s: &StructureBundle, x: &[f64], y: &[f64], pt: &Point) -> Result<f64> {
    sectional_curvature_at(&s.g.field, x, y, pt, &s.ctx())
}

/// Standalone helper: the axioms, then classification (refused on failure).
pub fn classify(s: &StructureBundle, tol: &Tolerances) -> Result<ClassVerdict> {
    Analysis::new(s, tol.clone())?.classify()
}

/// Helper for reports: the axiom group of each failing outcome.
pub fn failing_groups(outcomes: &[CheckOutcome]) -> Vec<&str> {
    let mut v: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| axiom_group(&o.check_id)).collect();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residuals(normal: f64, closed_phi: f64, contact: f64, closed_eta: f64, classical: f64) -> PredicateResiduals {
        PredicateResiduals { normal, closed_phi, contact, closed_eta, classical }
    }

    #[test]
    fn lattice_implications_hold_for_every_predicate_combination() {
        let tol = Tolerances::for_strategy(crate::DerivativeStrategy::Exact);
        for mask in 0..32u32 {
            let pick = |bit: u32| if mask & (1 << bit) != 0 { 0.0 } else { 1.0 };
            let v = lattice(&residuals(pick(0), pick(1), pick(2), pick(3), pick(4)), &tol);
            let h = |k: &str| v[k];
            assert!(!h("weak_para_S") || (h("weak_para_K") && h("weak_almost_para_S")));
            assert!(!h("weak_para_K") || h("normal"));
            assert!(!h("weak_para_C") || (h("weak_para_K") && h("weak_almost_para_C")));
            assert!(!h("para_S") || h("weak_para_S"));
        }
    }

    #[test]
    fn most_specific_prefers_para_s() {
        let tol = Tolerances::for_strategy(crate::DerivativeStrategy::Exact);
        let v = lattice(&residuals(0.0, 0.0, 0.0, 1.0, 0.0), &tol);
        assert_eq!(most_specific(&v), ClassId::ParaS);
        let v = lattice(&residuals(0.0, 0.0, 1.0, 0.0, 1.0), &tol);
        assert_eq!(most_specific(&v), ClassId::WeakParaC);
        let v = lattice(&residuals(1.0, 1.0, 1.0, 1.0, 1.0), &tol);
        assert_eq!(most_specific(&v), ClassId::MetricWeakParaF);
    }

    #[test]
    fn class_ids_serialize_with_mixed_case() {
        assert_eq!(serde_json::to_string(&ClassId::ParaS).unwrap(), "\"para_S\"");
        assert_eq!(ClassId::WeakAlmostParaC.to_string(), "weak_almost_para_C");
    }
}

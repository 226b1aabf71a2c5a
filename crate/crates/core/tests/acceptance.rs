//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::time::Instant;

use paraf_core::calculus::exterior_derivative;
use paraf_core::catalog::{
    make_nonnormal_apc3, make_para_c_product, make_para_sasakian_r3, make_product_bar, perturb_q, DEFAULT_SAMPLES,
};
use paraf_core::check::{worst, Bound, CheckOutcome, Tolerances};
use paraf_core::classify::{Analysis, ClassId, TheoremReport};
use paraf_core::identities::nijenhuis_coordinate_residual;
use paraf_core::jet::max_abs;
use paraf_core::report::{run, RunConfig};
use paraf_core::structure::{failed_axioms, StructureBundle};
use paraf_core::{Chart, DerivativeStrategy, Expr, Field, Point, Result, TensorField, Valence};

const AXIOM_TOL: f64 = 1e-9;
const DETA_EXPECTED: f64 = 0.5;
const NIJENHUIS_FORMS_TOL: f64 = 1e-6;
const MASTER_TOL: f64 = 1e-6;
const MIN_COORDINATE_TRIPLES: usize = 100;
const NABLA_F_EXACT_TOL: f64 = 1e-9;
const NABLA_F_FD_TOL: f64 = 1e-5;
const N5_TOL: f64 = 1e-6;
const KILLING_TOL: f64 = 1e-8;
const FLAT_LEAVES_TOL: f64 = 1e-4;
const QTILDE_TOL: f64 = 1e-9;
const PERTURBATION: f64 = 0.1;
const PERTURBATION_REL_WINDOW: f64 = 0.2;
const H_TOL: f64 = 1e-8;
const H_IDENTITIES_TOL: f64 = 1e-6;
const NONNORMAL_FACTOR: f64 = 10.0;
const PRODUCT_BAR_TOL: f64 = 1e-9;
const CARTAN_TOL: f64 = 1e-6;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn exact() -> Tolerances {
    Tolerances::for_strategy(DerivativeStrategy::Exact)
}

fn worst_upper(outcomes: &[CheckOutcome]) -> f64 {
    outcomes.iter().filter(|o| matches!(o.bound, Bound::AtMost(_))).map(|o| o.residual).fold(0.0, f64::max)
}

fn theorem<'a>(ts: &'a [TheoremReport], id: &str) -> &'a TheoremReport {
    ts.iter().find(|t| t.theorem_id == id).unwrap_or_else(|| panic!("no theorem {id}"))
}

fn conclusion(ts: &[TheoremReport], theorem_id: &str, id: &str) -> f64 {
    theorem(ts, theorem_id).conclusion(id).map_or(f64::INFINITY, |c| c.residual)
}

struct Entry<'a> {
    name: &'static str,
    analysis: Analysis<'a>,
    tensors: Vec<CheckOutcome>,
    theorems: Vec<TheoremReport>,
    class: ClassId,
    normal: f64,
}

fn analyse<'a>(name: &'static str, b: &'a StructureBundle) -> Result<Entry<'a>> {
    let analysis = Analysis::new(b, exact())?;
    let tensors = analysis.tensor_checks()?;
    let v = analysis.verdict()?;
    let theorems = analysis.theorems(&v)?;
    let normal = v.residuals.get("normal").copied().unwrap_or(f64::NAN);
    Ok(Entry { name, analysis, tensors, theorems, class: v.class_id, normal })
}

fn criteria() -> Result<Vec<Line>> {
    let mut lines = Vec::new();
    let mut push = |id, name, pass, detail: String| lines.push(Line { id, name, pass, detail });

    let para_c = make_para_c_product(2.0, 1, 2)?.with_sampling(DEFAULT_SAMPLES, 1)?;
    let sas = make_para_sasakian_r3()?.with_sampling(DEFAULT_SAMPLES, 1)?;
    let apc3 = make_nonnormal_apc3()?.with_sampling(DEFAULT_SAMPLES, 1)?;
    let entries = [analyse("para_c_product", &para_c)?, analyse("para_sasakian_r3", &sas)?, analyse("nonnormal_apc3", &apc3)?];
    let [pc, ps, nn] = &entries;

    // 1
    let mut ok = true;
    let mut detail = vec![];
    for e in [pc, ps] {
        let w = worst_upper(&e.analysis.axioms);
        let failed = failed_axioms(&e.analysis.axioms);
        ok &= w <= AXIOM_TOL && failed.is_empty() && e.analysis.points.len() == DEFAULT_SAMPLES;
        detail.push(format!("{}: max {w:.2e} over {} samples", e.name, e.analysis.points.len()));
    }
    push(1, "axioms hold on the reference entries", ok, detail.join("; "));

    // 2
    let chart = Chart::new(vec!["x".into(), "y".into()], vec![(-1.0, 1.0); 2], 1, 1)?;
    let eta = TensorField::new(2, Valence::COVECTOR, vec![Expr::zero(), Expr::var(0)])?;
    let d = exterior_derivative(&eta, &Point { coords: vec![0.3, -0.7] }, &chart.diff_ctx(DerivativeStrategy::Exact))?;
    push(2, "d(x dy)(dx, dy) = 1/2", (d[1] - DETA_EXPECTED).abs() <= 1e-15, format!("{}", d[1]));

    // 3
    let mut w = 0.0f64;
    for e in &entries {
        for k in 0..e.analysis.points.len() {
            w = w.max(nijenhuis_coordinate_residual(e.analysis.local(k)?));
        }
    }
    push(3, "Nijenhuis bracket form equals connection form", w <= NIJENHUIS_FORMS_TOL, format!("max {w:.2e}"));

    // 4
    let mut w = 0.0f64;
    let mut triples = 0;
    for e in &entries {
        w = w.max(worst(&e.tensors, "master_formula").unwrap_or(f64::INFINITY));
        triples += e.analysis.points.len() * e.analysis.bundle.dim().pow(3);
    }
    push(
        4,
        "master formula for 2g((nabla_X f)Y, Z)",
        w <= MASTER_TOL && triples >= MIN_COORDINATE_TRIPLES,
        format!("max {w:.2e}, {triples} coordinate triples"),
    );

    // 5
    let hyp = |ts: &[TheoremReport], id: &str| {
        theorem(ts, "nabla_f_characterization").hypothesis(id).map_or(f64::INFINITY, |c| c.residual)
    };
    let nabla_exact = hyp(&pc.theorems, "nabla_f.vanishes");
    let fd_bundle = para_c.clone().with_strategy(DerivativeStrategy::fd());
    let fd = Analysis::new(&fd_bundle, Tolerances::for_strategy(DerivativeStrategy::fd()))?;
    let nabla_fd = (0..fd.points.len()).map(|k| fd.local(k).map(|l| max_abs(&l.nabla_f))).collect::<Result<Vec<_>>>()?;
    let nabla_fd = nabla_fd.into_iter().fold(0.0, f64::max);
    let n5 = conclusion(&pc.theorems, "nabla_f_characterization", "n5.vanishes");
    push(
        5,
        "para_c_product: parallel f, weak_para_C, N5 = 0",
        nabla_exact <= NABLA_F_EXACT_TOL && nabla_fd <= NABLA_F_FD_TOL && pc.class == ClassId::WeakParaC && n5 <= N5_TOL,
        format!("|nabla f| exact {nabla_exact:.1e} fd {nabla_fd:.1e}, class {}, |N5| {n5:.1e}", pc.class),
    );

    // 6
    let k = theorem(&pc.theorems, "killing");
    let killing = (1..=para_c.p()).map(|i| k.conclusion(&format!("killing.xi{i}")).map_or(f64::INFINITY, |c| c.residual));
    let killing = killing.fold(0.0, f64::max);
    let parallel = conclusion(&pc.theorems, "totally_geodesic_kernel", "kernel.parallel");
    let flat = conclusion(&pc.theorems, "totally_geodesic_kernel", "kernel.flat_leaves");
    push(
        6,
        "para_c_product: Killing, parallel and flat kernel",
        killing <= KILLING_TOL && parallel == 0.0 && flat <= FLAT_LEAVES_TOL,
        format!("|L_xi g| {killing:.1e}, |nabla_xi xi| {parallel:e}, |K| {flat:.1e}"),
    );

    // 7
    let rig = theorem(&ps.theorems, "rigidity");
    let qt = rig.conclusion("qtilde.vanishes").map_or(f64::INFINITY, |c| c.residual);
    let upgraded = ps.class == ClassId::ParaS && rig.status == paraf_core::classify::TheoremStatus::Pass && qt <= QTILDE_TOL;
    let pert = perturb_q(&sas, PERTURBATION)?;
    let pa = Analysis::new(&pert, exact())?;
    let center = pa.axioms.iter().find(|o| o.sample == 0 && o.check_id == "A3.f3_fQ").map_or(f64::NAN, |o| o.residual);
    let fmax = max_abs(&sas.f.eval(&sas.chart.center().coords, &sas.ctx())?);
    let expected = PERTURBATION * fmax;
    let window = (center - expected).abs() <= PERTURBATION_REL_WINDOW * expected;
    let mut never_s = true;
    for eps in [1e-3, 1e-2, PERTURBATION, 0.5] {
        let p = perturb_q(&sas, eps)?.with_sampling(40, 1)?;
        let v = Analysis::new(&p, exact())?.verdict()?;
        never_s &= !matches!(v.class_id, ClassId::WeakParaS | ClassId::ParaS);
    }
    push(
        7,
        "rigidity: para_S upgrade and perturbation",
        upgraded && window && never_s,
        format!("|Q~| {qt:.1e}, A3 at center {center:.4} vs {expected:.4}, perturbed never weak_para_S: {never_s}"),
    );

    // 8
    let h = conclusion(&ps.theorems, "weak_para_S", "h.vanishes");
    let ids = ["nabla_xi.formula", "h.anticommutator", "h.antisymmetric_part"];
    let hs: Vec<f64> = ids.iter().map(|id| conclusion(&ps.theorems, "weak_almost_para_S", id)).collect();
    push(
        8,
        "para_sasakian_r3: h = 0 and the h identities",
        h <= H_TOL && hs.iter().all(|v| *v <= H_IDENTITIES_TOL),
        format!("|h| {h:.1e}, {}", ids.iter().zip(&hs).map(|(i, v)| format!("{i} {v:.1e}")).collect::<Vec<_>>().join(", ")),
    );

    // 9
    let class_tol = exact().class;
    let ok = failed_axioms(&nn.analysis.axioms).is_empty()
        && nn.normal >= NONNORMAL_FACTOR * class_tol
        && nn.class == ClassId::MetricWeakParaF;
    push(9, "nonnormal_apc3 is metric but not normal", ok, format!("max|N1| {:.3}, class {}", nn.normal, nn.class));

    // 10
    let bar = make_product_bar(&make_para_c_product(2.0, 1, 1)?)?;
    let r = bar.square_residual(-1.0)?;
    push(10, "product bar squares to -Q_bar", r <= PRODUCT_BAR_TOL, format!("relative residual {r:.3}"));

    // 11
    let mut w = 0.0f64;
    for e in &entries {
        for id in ["cartan.eta", "cartan.fundamental_form"] {
            w = w.max(worst(&e.tensors, id).unwrap_or(f64::INFINITY));
        }
    }
    push(11, "Cartan formula for eta and Phi along xi", w <= CARTAN_TOL, format!("max {w:.2e}"));

    // 12
    let config = RunConfig::catalog("para_c_product");
    let t = Instant::now();
    let first = run(&config)?.to_json();
    let elapsed = t.elapsed().as_secs_f64();
    let second = run(&config)?.to_json();
    push(
        12,
        "reports are byte-identical across runs",
        first == second,
        format!("{} bytes, {elapsed:.1}s per run at {} samples", first.len(), config.samples),
    );
    Ok(lines)
}

fn main() {
    let lines = match criteria() {
        Ok(l) => l,
        Err(e) => {
            println!("FAIL setup: {e}");
            std::process::exit(1);
        }
    };
    let mut failed = 0;
    for l in &lines {
        println!("{} {:>2} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
        failed += usize::from(!l.pass);
    }
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Text description of a structure bundle.
//!
//! ```text
//! # para-Sasakian model on R^3
//! [chart]
//! coordinates = x y z
//! box = -1 1; -1 1; -1 1      # optional, default [-1, 1] per coordinate
//! signature = 2 1             # optional, counted at the chart center otherwise
//!
//! [metric]
//! x x = 0.5 + y^2
//! x z = -y                    # the transposed entry is filled in if absent
//! y y = -0.5
//! z z = 1
//!
//! [f]
//! x y = 1                     # f^x_y
//! y x = 1
//! z y = y
//!
//! [Q]
//! x x = 1
//! y y = 1
//! z z = 1
//!
//! [xi]
//! 1 z = 1                     # component z of xi_1
//!
//! [eta]
//! 1 x = -y
//! 1 z = 1
//! ```
//!
//! Index tokens are coordinate names or 1-based integers. Unlisted
//! components are zero.

use std::collections::BTreeMap;
use std::path::Path;

use crate::chart::{Chart, MetricField, Signature, TensorField, Valence};
use crate::catalog::{DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::structure::StructureBundle;

const SECTIONS: &[&str] = &["chart", "metric", "f", "Q", "xi", "eta"];

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

struct Entry {
    line: usize,
    /// Column where the right-hand side starts.
    column: usize,
    indices: Vec<(String, usize)>,
    rhs: String,
}

#[derive(Default)]
struct Raw {
    chart: BTreeMap<String, (usize, usize, String)>,
    sections: BTreeMap<String, Vec<Entry>>,
    headers: BTreeMap<String, usize>,
}

fn split_fields(src: &str) -> Result<Raw> {
    let mut raw = Raw::default();
    let mut current: Option<String> = None;
    for (k, full) in src.lines().enumerate() {
        let line = k + 1;
        let text = full.split('#').next().unwrap_or("");
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = text.len() - text.trim_start().len();
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| perr(line, indent + 1, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(perr(line, indent + 2, format!("unknown section [{name}]")));
            }
            if raw.headers.insert(name.to_string(), line).is_some() {
                return Err(perr(line, indent + 1, format!("duplicate section [{name}]")));
            }
            current = Some(name.to_string());
            continue;
        }
        let section = current.as_deref().ok_or_else(|| perr(line, indent + 1, "entry outside any section"))?;
        let eq = text.find('=').ok_or_else(|| perr(line, indent + 1, "expected '<indices> = <value>'"))?;
        let (lhs, rhs) = (&text[..eq], &text[eq + 1..]);
        let column = eq + 2 + (rhs.len() - rhs.trim_start().len());
        if section == "chart" {
            let key = lhs.trim().to_string();
            if raw.chart.insert(key.clone(), (line, column, rhs.trim().to_string())).is_some() {
                return Err(perr(line, indent + 1, format!("duplicate chart key '{key}'")));
            }
            continue;
        }
        let mut indices = Vec::new();
        let mut offset = 0;
        for tok in lhs.split_whitespace() {
            let at = lhs[offset..].find(tok).map(|p| p + offset).unwrap_or(offset);
            offset = at + tok.len();
            indices.push((tok.to_string(), at + 1));
        }
        raw.sections.entry(section.to_string()).or_default().push(Entry {
            line,
            column,
            indices,
            rhs: rhs.trim().to_string(),
        });
    }
    if raw.headers.is_empty() {
        return Err(perr(1, 1, "empty bundle description"));
    }
    Ok(raw)
}

fn index(tok: &(String, usize), line: usize, names: &[String], bound: usize) -> Result<usize> {
    if let Some(i) = names.iter().position(|n| *n == tok.0) {
        return Ok(i);
    }
    match tok.0.parse::<usize>() {
        Ok(i) if i >= 1 && i <= bound => Ok(i - 1),
        _ => Err(perr(line, tok.1, format!("index '{}' is neither a coordinate nor 1..={bound}", tok.0))),
    }
}

fn parse_expr(e: &Entry, names: &[String]) -> Result<Expr> {
    Expr::parse(&e.rhs, names).map_err(|x| perr(e.line, e.column + x.column - 1, x.message))
}

fn matrix(raw: &Raw, section: &str, names: &[String], symmetric: bool) -> Result<Vec<Expr>> {
    let n = names.len();
    let mut m: Vec<Option<Expr>> = vec![None; n * n];
    let mut explicit = vec![false; n * n];
    for e in raw.sections.get(section).map(Vec::as_slice).unwrap_or(&[]) {
        if e.indices.len() != 2 {
            return Err(perr(e.line, 1, format!("[{section}] entries take two indices")));
        }
        let a = index(&e.indices[0], e.line, names, n)?;
        let b = index(&e.indices[1], e.line, names, n)?;
        if explicit[a * n + b] {
            return Err(perr(e.line, 1, format!("duplicate [{section}] entry {} {}", names[a], names[b])));
        }
        let v = parse_expr(e, names)?;
        explicit[a * n + b] = true;
        if symmetric && !explicit[b * n + a] {
            m[b * n + a] = Some(v.clone());
        }
        m[a * n + b] = Some(v);
    }
    Ok(m.into_iter().map(|v| v.unwrap_or_else(Expr::zero)).collect())
}

fn vectors(raw: &Raw, section: &str, names: &[String]) -> Result<Vec<Vec<Expr>>> {
    let n = names.len();
    let mut out: BTreeMap<usize, Vec<Option<Expr>>> = BTreeMap::new();
    for e in raw.sections.get(section).map(Vec::as_slice).unwrap_or(&[]) {
        if e.indices.len() != 2 {
            return Err(perr(e.line, 1, format!("[{section}] entries take a field number and a component")));
        }
        let k = match e.indices[0].0.parse::<usize>() {
            Ok(k) if k >= 1 => k,
            _ => return Err(perr(e.line, e.indices[0].1, "field number must be a positive integer")),
        };
        let a = index(&e.indices[1], e.line, names, n)?;
        let slot = &mut out.entry(k).or_insert_with(|| vec![None; n])[a];
        if slot.is_some() {
            return Err(perr(e.line, 1, format!("duplicate [{section}] entry {k} {}", names[a])));
        }
        *slot = Some(parse_expr(e, names)?);
    }
    let count = out.keys().next_back().copied().unwrap_or(0);
    if out.len() != count {
        return Err(Error::DimensionMismatch(format!("[{section}] fields must be numbered 1..={count} without gaps")));
    }
    Ok(out.into_values().map(|v| v.into_iter().map(|c| c.unwrap_or_else(Expr::zero)).collect()).collect())
}

fn numbers(line: usize, column: usize, s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c.is_whitespace() || c == ';' || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| perr(line, column, format!("expected a number, got '{t}'"))))
        .collect()
}

/// Parse a bundle description.
pub fn parse_bundle(src: &str) -> Result<StructureBundle> {
    let raw = split_fields(src)?;
    for s in SECTIONS {
        if !raw.headers.contains_key(*s) {
            return Err(perr(src.lines().count().max(1), 1, format!("missing section [{s}]")));
        }
    }
    let (line, column, coords) =
        raw.chart.get("coordinates").ok_or_else(|| perr(raw.headers["chart"], 1, "[chart] needs 'coordinates = ...'"))?;
    let names: Vec<String> = coords.split_whitespace().map(str::to_string).collect();
    if names.is_empty() {
        return Err(perr(*line, *column, "no coordinates"));
    }
    for (i, n) in names.iter().enumerate() {
        if Expr::parse(n, &names) != Ok(Expr::var(i)) || names[..i].contains(n) {
            return Err(perr(*line, *column, format!("invalid or duplicate coordinate name '{n}'")));
        }
    }
    if let Some(key) = raw.chart.keys().find(|k| !["coordinates", "box", "signature"].contains(&k.as_str())) {
        let (l, _, _) = raw.chart[key];
        return Err(perr(l, 1, format!("unknown chart key '{key}'")));
    }
    let dim = names.len();
    let sample_box = match raw.chart.get("box") {
        Some((l, c, s)) => {
            let v = numbers(*l, *c, s)?;
            if v.len() != 2 * dim {
                return Err(Error::DimensionMismatch(format!("box lists {} numbers, need {}", v.len(), 2 * dim)));
            }
            v.chunks(2).map(|p| (p[0], p[1])).collect()
        }
        None => vec![(-1.0, 1.0); dim],
    };
    let chart = Chart::new(names.clone(), sample_box, DEFAULT_SAMPLES, DEFAULT_SEED)?;

    let g = TensorField::new(dim, Valence::BILINEAR, matrix(&raw, "metric", &names, true)?)?;
    let f = TensorField::new(dim, Valence::ENDO, matrix(&raw, "f", &names, false)?)?;
    let q = TensorField::new(dim, Valence::ENDO, matrix(&raw, "Q", &names, false)?)?;
    let xi = vectors(&raw, "xi", &names)?
        .into_iter()
        .map(|c| TensorField::new(dim, Valence::VECTOR, c))
        .collect::<Result<Vec<_>>>()?;
    let eta = vectors(&raw, "eta", &names)?
        .into_iter()
        .map(|c| TensorField::new(dim, Valence::COVECTOR, c))
        .collect::<Result<Vec<_>>>()?;

    let signature = match raw.chart.get("signature") {
        Some((l, c, s)) => {
            let v = numbers(*l, *c, s)?;
            if v.len() != 2 || v.iter().any(|x| x.fract() != 0.0 || *x < 0.0) || (v[0] + v[1]) as usize != dim {
                return Err(perr(*l, *c, format!("signature must be two counts summing to {dim}")));
            }
            Signature { plus: v[0] as usize, minus: v[1] as usize }
        }
        None => {
            let probe = MetricField::new(g.clone(), Signature { plus: dim, minus: 0 })?;
            let ctx = chart.diff_ctx(g.strategy());
            probe.diagnose(&chart.center().coords, &ctx)?.counted
        }
    };
    StructureBundle::new(chart, f, q, xi, eta, MetricField::new(g, signature)?)
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<StructureBundle> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_bundle(&src)
}

/// Render a bundle in the description format. Parsing the output gives a
/// bundle with the same components.
pub fn write_bundle(b: &StructureBundle) -> String {
    use std::fmt::Write;
    let names = b.chart.coordinate_names();
    let n = names.len();
    let mut s = String::from("[chart]\n");
    let _ = writeln!(s, "coordinates = {}", names.join(" "));
    let bx: Vec<String> = b.chart.sample_box().iter().map(|(lo, hi)| format!("{lo:?} {hi:?}")).collect();
    let _ = writeln!(s, "box = {}", bx.join("; "));
    let _ = writeln!(s, "signature = {} {}", b.g.signature.plus, b.g.signature.minus);
    let mut section = |title: &str, comps: &[Expr]| {
        let _ = writeln!(s, "\n[{title}]");
        for (k, e) in comps.iter().enumerate() {
            if !e.is_zero() {
                let _ = writeln!(s, "{} {} = {}", names[k / n], names[k % n], e.display(names));
            }
        }
    };
    section("metric", b.g.field.components());
    section("f", b.f.components());
    section("Q", b.q.components());
    for (title, fields) in [("xi", &b.xi), ("eta", &b.eta)] {
        let _ = writeln!(s, "\n[{title}]");
        for (k, fld) in fields.iter().enumerate() {
            for (a, e) in fld.components().iter().enumerate() {
                if !e.is_zero() {
                    let _ = writeln!(s, "{} {} = {}", k + 1, names[a], e.display(names));
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_nonnormal_apc3, make_para_c_product, make_para_sasakian_r3};
    use crate::chart::Field;

    #[test]
    fn round_trip_keeps_components() {
        for b in [make_para_c_product(2.0, 1, 1).unwrap(), make_para_sasakian_r3().unwrap(), make_nonnormal_apc3().unwrap()]
        {
            let text = write_bundle(&b);
            let back = parse_bundle(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            let ctx = b.ctx();
            for pt in b.sample_points().iter().take(5) {
                let x = &pt.coords;
                assert_eq!(b.f.eval(x, &ctx).unwrap(), back.f.eval(x, &ctx).unwrap());
                assert_eq!(b.g.field.eval(x, &ctx).unwrap(), back.g.field.eval(x, &ctx).unwrap());
                assert_eq!(b.eta[0].eval(x, &ctx).unwrap(), back.eta[0].eval(x, &ctx).unwrap());
            }
            assert_eq!(back.g.signature, b.g.signature);
        }
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(parse_bundle(""), Err(Error::Parse { line: 1, column: 1, .. })));
        assert!(matches!(parse_bundle("# nothing\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn xi_eta_count_mismatch() {
        let src = "[chart]\ncoordinates = x y z\n[metric]\nx x = 1\ny y = -1\nz z = 1\n[f]\nx y = 1\ny x = 1\n\
                   [Q]\nx x = 1\ny y = 1\nz z = 1\n[xi]\n1 z = 1\n2 z = 1\n[eta]\n1 z = 1\n";
        assert!(matches!(parse_bundle(src), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn malformed_expression_reports_position() {
        let src = "[chart]\ncoordinates = x y z\n[metric]\nx x = 1 + * y\n[f]\n[Q]\n[xi]\n[eta]\n";
        match parse_bundle(src) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 11)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inferred_signature() {
        let src = "[chart]\ncoordinates = x y z\n[metric]\nx x = 1\ny y = -1\nz z = 1\n[f]\nx y = 1\ny x = 1\n\
                   [Q]\nx x = 1\ny y = 1\nz z = 1\n[xi]\n1 3 = 1\n[eta]\n1 z = 1\n";
        let b = parse_bundle(src).unwrap();
        assert_eq!(b.g.signature, Signature { plus: 2, minus: 1 });
        assert_eq!(b.p(), 1);
    }
}

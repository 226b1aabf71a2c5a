//! Check outcomes, tolerances and residual aggregation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::chart::{DerivativeStrategy, TOL_DET, TOL_SYM};
use crate::error::{Error, Result};

/// Acceptance region for a residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    pub fn admits(&self, residual: f64) -> bool {
        match *self {
            Bound::AtMost(t) => residual <= t,
            Bound::AtLeast(t) => residual >= t,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Bound::AtMost(t) | Bound::AtLeast(t) => t,
        }
    }
}

/// One verified identity at one sample point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub suite: String,
    pub check_id: String,
    pub sample: usize,
    pub point: Vec<f64>,
    pub residual: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl CheckOutcome {
    pub fn new(suite: &str, check_id: &str, sample: usize, point: &[f64], residual: f64, bound: Bound) -> Self {
        Self {
            suite: suite.to_string(),
            check_id: check_id.to_string(),
            sample,
            point: point.to_vec(),
            residual,
            pass: bound.admits(residual),
            bound,
        }
    }
}

/// Worst case of one check over all samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSummary {
    pub suite: String,
    pub check_id: String,
    pub samples: usize,
    pub worst_residual: f64,
    pub worst_sample: usize,
    pub bound: Bound,
    pub pass: bool,
}

/// Aggregate outcomes per `(suite, check_id)`, keeping the least favourable sample.
pub fn summarize(outcomes: &[CheckOutcome]) -> Vec<CheckSummary> {
    let mut map: BTreeMap<(String, String), CheckSummary> = BTreeMap::new();
    for o in outcomes {
        let key = (o.suite.clone(), o.check_id.clone());
        let e = map.entry(key).or_insert_with(|| CheckSummary {
            suite: o.suite.clone(),
            check_id: o.check_id.clone(),
            samples: 0,
            worst_residual: o.residual,
            worst_sample: o.sample,
            bound: o.bound,
            pass: true,
        });
        e.samples += 1;
        e.pass &= o.pass;
        let worse = match o.bound {
            Bound::AtMost(_) => o.residual > e.worst_residual || o.residual.is_nan(),
            Bound::AtLeast(_) => o.residual < e.worst_residual || o.residual.is_nan(),
        };
        if worse {
            e.worst_residual = o.residual;
            e.worst_sample = o.sample;
        }
    }
    map.into_values().collect()
}

pub fn worst<'a>(outcomes: impl IntoIterator<Item = &'a CheckOutcome>, check_id: &str) -> Option<f64> {
    outcomes
        .into_iter()
        .filter(|o| o.check_id == check_id)
        .map(|o| o.residual)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
}

/// Tolerances for identity checks, class predicates and structural tests.
///
/// Identity residuals are relative: `max|L − R| / max(1, max|L|, max|R|)`.
/// Predicate residuals are plain maxima of the vanishing quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub identity: f64,
    pub class: f64,
    pub rank: f64,
    pub sym: f64,
    pub det: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn for_strategy(strategy: DerivativeStrategy) -> Self {
        let (identity, class) = if strategy.is_finite_difference() { (1e-6, 1e-4) } else { (1e-9, 1e-6) };
        Self { identity, class, rank: 1e-8, sym: TOL_SYM, det: TOL_DET, overrides: BTreeMap::new() }
    }

    /// Override either a tolerance group (`identity`, `class`, `rank`, `sym`,
    /// `det`) or a single check id.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Config(format!("tolerance for '{key}' must be positive, got {value}")));
        }
        match key {
            "identity" => self.identity = value,
            "class" => self.class = value,
            "rank" => self.rank = value,
            "sym" => self.sym = value,
            "det" => self.det = value,
            _ => {
                self.overrides.insert(key.to_string(), value);
            }
        }
        Ok(())
    }

    pub fn identity_for(&self, check_id: &str) -> f64 {
        self.overrides.get(check_id).copied().unwrap_or(self.identity)
    }

    pub fn class_for(&self, predicate: &str) -> f64 {
        self.overrides.get(predicate).copied().unwrap_or(self.class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::AtMost(1e-9).admits(1e-10));
        assert!(!Bound::AtMost(1e-9).admits(1e-8));
        assert!(Bound::AtLeast(1e-10).admits(0.25));
        assert!(!Bound::AtLeast(1e-10).admits(0.0));
        assert!(!Bound::AtMost(1.0).admits(f64::NAN));
    }

    #[test]
    fn summary_keeps_worst_sample() {
        let o = vec![
            CheckOutcome::new("axioms", "A3", 0, &[0.0], 1e-12, Bound::AtMost(1e-9)),
            CheckOutcome::new("axioms", "A3", 1, &[0.5], 1e-6, Bound::AtMost(1e-9)),
            CheckOutcome::new("axioms", "A2", 0, &[0.0], 0.5, Bound::AtLeast(1e-10)),
            CheckOutcome::new("axioms", "A2", 1, &[0.5], 0.25, Bound::AtLeast(1e-10)),
        ];
        let s = summarize(&o);
        assert_eq!(s[0].check_id, "A2");
        assert_eq!((s[0].worst_residual, s[0].worst_sample, s[0].pass), (0.25, 1, true));
        assert_eq!((s[1].worst_residual, s[1].worst_sample, s[1].pass), (1e-6, 1, false));
    }

    #[test]
    fn overrides_must_be_positive() {
        let mut t = Tolerances::for_strategy(DerivativeStrategy::Exact);
        assert!(t.set("A3", 0.0).is_err());
        t.set("A3", 1e-3).unwrap();
        t.set("class", 1e-5).unwrap();
        assert_eq!(t.identity_for("A3"), 1e-3);
        assert_eq!(t.identity_for("A4"), 1e-9);
        assert_eq!(t.class, 1e-5);
    }
}

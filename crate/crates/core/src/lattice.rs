//! Lattice / non-lattice classification of the centered observable.
//!
//! For each prefix (x_1, ..., x_{l-1}) the classifier computes the span of
//! the last-coordinate difference set (the largest h with every difference
//! in h*Z) and tests whether the values themselves sit on h*Z. A lattice
//! verdict needs one common span, on the lattice, across every prefix; a
//! non-lattice verdict needs one prefix whose differences admit no span at
//! all. Everything else is reported as Other with a diagnostic and left
//! unclassified.
//!
//! Certified verdicts require exact values (elements of Q + Q*sqrt2);
//! float-only tables get a heuristic verdict at tolerance 1e-9, flagged as
//! such.

use serde::Serialize;

use crate::chain::{unrank, FiniteChain};
use crate::error::{Error, Result};
use crate::exact::{float_span_of, span_of, FloatSpan, QSqrt2, Span};
use crate::observable::Observable;
use crate::sim::EmpiricalDistribution;

pub const HEURISTIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LatticeKind {
    Lattice,
    NonLattice,
    Other,
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LatticeKind::Lattice => "Lattice",
            LatticeKind::NonLattice => "NonLattice",
            LatticeKind::Other => "Other",
        };
        f.write_str(s)
    }
}

/// Span of the difference set B for one prefix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PrefixSpan {
    /// Every difference vanishes; any h works and the supremum is infinite.
    Unbounded,
    /// Incommensurable differences: B is empty.
    Empty,
    /// Finite span (float view; exact value kept alongside if certified).
    Value(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct PrefixReport {
    /// State indices of the prefix tuple (empty for l = 1).
    pub prefix: Vec<usize>,
    pub span: PrefixSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span_exact: Option<QSqrt2>,
    /// Whether the span divides every value on this prefix; None when the
    /// span is not finite.
    pub span_in_a: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeClassification {
    pub kind: LatticeKind,
    /// Common span, present iff kind = Lattice. Exact for certified
    /// verdicts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<QSqrt2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_f64: Option<f64>,
    /// Float-only input: verdict at tolerance 1e-9 rather than certified.
    pub heuristic: bool,
    /// NonLattice: the empty-span prefix. Other: which condition failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    /// Lattice span is an irrational multiple (flagged, still a span).
    pub irrational_span: bool,
    pub per_prefix: Vec<PrefixReport>,
}

impl LatticeClassification {
    pub fn span_f64(&self) -> Option<f64> {
        self.h_f64
    }
}

/// Classify the centered observable. Exact tables give certified verdicts;
/// float tables give heuristic ones.
pub fn classify(observable: &Observable, chain: &FiniteChain) -> Result<LatticeClassification> {
    if !observable.is_centered(1e-10) {
        return Err(Error::NotCentered {
            mean: observable.mean(),
            tol: 1e-10,
        });
    }
    if observable.has_mixed_exact() {
        return Err(Error::MixedRepresentation);
    }
    let s = chain.size();
    let ell = observable.ell();
    let prefixes = s.pow((ell - 1) as u32);

    match observable.exact_values() {
        Some(exact) => classify_exact(exact, chain, s, ell, prefixes),
        None => classify_float(observable.values(), chain, s, ell, prefixes),
    }
}

fn prefix_label(chain: &FiniteChain, prefix: &[usize]) -> String {
    format!(
        "({})",
        prefix
            .iter()
            .map(|&c| chain.labels()[c].as_str())
            .collect::<Vec<_>>()
            .join(",")
    )
}

fn classify_exact(
    exact: &[QSqrt2],
    chain: &FiniteChain,
    s: usize,
    ell: usize,
    prefixes: usize,
) -> Result<LatticeClassification> {
    let mut reports = Vec::with_capacity(prefixes);
    for p in 0..prefixes {
        let values = &exact[p * s..(p + 1) * s];
        let mut diffs = Vec::new();
        for i in 0..s {
            for j in i + 1..s {
                diffs.push(values[i].sub(&values[j]));
            }
        }
        let span = span_of(&diffs);
        let (span_view, span_exact, span_in_a) = match span {
            Span::Unbounded => (PrefixSpan::Unbounded, None, None),
            Span::Empty => (PrefixSpan::Empty, None, None),
            Span::Value(h) => {
                let in_a = values.iter().all(|v| v.divisible_by(&h));
                (PrefixSpan::Value(h.to_f64()), Some(h), Some(in_a))
            }
        };
        reports.push(PrefixReport {
            prefix: unrank(p, s, ell - 1),
            span: span_view,
            span_exact,
            span_in_a,
        });
    }
    Ok(aggregate(reports, chain, false))
}

fn classify_float(
    values: &[f64],
    chain: &FiniteChain,
    s: usize,
    ell: usize,
    prefixes: usize,
) -> Result<LatticeClassification> {
    let mut reports = Vec::with_capacity(prefixes);
    for p in 0..prefixes {
        let slice = &values[p * s..(p + 1) * s];
        let mut diffs = Vec::new();
        for i in 0..s {
            for j in i + 1..s {
                diffs.push(slice[i] - slice[j]);
            }
        }
        let (span_view, span_in_a) = match float_span_of(&diffs, HEURISTIC_TOL) {
            FloatSpan::Unbounded => (PrefixSpan::Unbounded, None),
            FloatSpan::Empty => (PrefixSpan::Empty, None),
            FloatSpan::Value(h) => {
                let in_a = slice.iter().all(|&v| {
                    let q = v / h;
                    (q - q.round()).abs() <= HEURISTIC_TOL * q.abs().max(1.0)
                });
                (PrefixSpan::Value(h), Some(in_a))
            }
        };
        reports.push(PrefixReport {
            prefix: unrank(p, s, ell - 1),
            span: span_view,
            span_exact: None,
            span_in_a,
        });
    }
    Ok(aggregate(reports, chain, true))
}

/// Shared verdict logic. Non-lattice takes precedence (one empty-span
/// prefix suffices); a lattice needs a common on-lattice span everywhere;
/// anything else is Other with a diagnostic.
fn aggregate(
    reports: Vec<PrefixReport>,
    chain: &FiniteChain,
    heuristic: bool,
) -> LatticeClassification {
    let base = LatticeClassification {
        kind: LatticeKind::Other,
        h: None,
        h_f64: None,
        heuristic,
        witness: None,
        irrational_span: false,
        per_prefix: Vec::new(),
    };

    if let Some(r) = reports.iter().find(|r| r.span == PrefixSpan::Empty) {
        let witness = prefix_label(chain, &r.prefix);
        return LatticeClassification {
            kind: LatticeKind::NonLattice,
            witness: Some(format!("B is empty on prefix {witness}")),
            per_prefix: reports,
            ..base
        };
    }

    if reports.iter().all(|r| r.span == PrefixSpan::Unbounded) {
        return LatticeClassification {
            witness: Some(
                "F is constant in its last coordinate on every prefix; \
                 the span is unbounded — reduce the arity"
                    .into(),
            ),
            per_prefix: reports,
            ..base
        };
    }
    if let Some(r) = reports.iter().find(|r| r.span == PrefixSpan::Unbounded) {
        let witness = prefix_label(chain, &r.prefix);
        return LatticeClassification {
            witness: Some(format!(
                "span is unbounded on prefix {witness} but finite elsewhere: \
                 h varies across prefixes"
            )),
            per_prefix: reports,
            ..base
        };
    }

    // all spans finite; demand a single common value
    let same = match reports[0].span_exact.as_ref() {
        Some(h0) => reports.iter().all(|r| r.span_exact.as_ref() == Some(h0)),
        None => {
            let h0 = match reports[0].span {
                PrefixSpan::Value(h) => h,
                _ => unreachable!(),
            };
            reports.iter().all(|r| match r.span {
                PrefixSpan::Value(h) => (h - h0).abs() <= HEURISTIC_TOL * h0.abs().max(1.0),
                _ => false,
            })
        }
    };
    if !same {
        return LatticeClassification {
            witness: Some("h varies across prefixes".into()),
            per_prefix: reports,
            ..base
        };
    }

    if let Some(r) = reports.iter().find(|r| r.span_in_a == Some(false)) {
        let witness = prefix_label(chain, &r.prefix);
        return LatticeClassification {
            witness: Some(format!(
                "span of prefix {witness} does not divide the values there \
                 (h is outside A): the values live on a shifted lattice"
            )),
            per_prefix: reports,
            ..base
        };
    }

    let h_exact = reports[0].span_exact.clone();
    let h_f64 = match reports[0].span {
        PrefixSpan::Value(h) => h,
        _ => unreachable!(),
    };
    let irrational = h_exact.as_ref().is_some_and(|h| !h.is_rational());
    LatticeClassification {
        kind: LatticeKind::Lattice,
        h: h_exact,
        h_f64: Some(h_f64),
        irrational_span: irrational,
        per_prefix: reports,
        ..base
    }
}

/// Consistency gate between the classifier and a distribution oracle: every
/// support point of an exact S_N distribution must sit on h*Z. Exact
/// arithmetic is used whenever both sides carry it.
pub fn lattice_mesh_check(
    classification: &LatticeClassification,
    distribution: &EmpiricalDistribution,
) -> Result<bool> {
    if classification.kind != LatticeKind::Lattice {
        return Err(Error::KindMismatch {
            expected: "Lattice".into(),
            got: classification.kind.to_string(),
        });
    }
    if let (Some(h), Some(support)) = (&classification.h, distribution.exact_support()) {
        return Ok(support.iter().all(|u| u.divisible_by(h)));
    }
    let h = classification
        .h_f64
        .expect("lattice classification carries a span");
    Ok(distribution.support().iter().all(|&u| {
        let q = u / h;
        (q - q.round()).abs() <= 1e-9 * q.abs().max(1.0)
    }))
}

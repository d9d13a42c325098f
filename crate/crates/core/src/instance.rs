//! Instance files: JSON schemas for chains and observables, parsing with
//! located diagnostics, and content digests for reproducible reports.
//!
//! Chain schema: `{"states": [labels], "transition": [[rows]], optional
//! "stationary": [..]}`. Transition entries may be JSON numbers or strings
//! like "1/3"; string entries feed the exact rational path directly.
//! Observable schema: {"ell": n, "values": [flat row-major table],
//! optional "exact_values": ["p/q" or "a+b*sqrt2", ...]}.

use std::path::Path;

use num_rational::BigRational;
use serde::Deserialize;

use crate::chain::FiniteChain;
use crate::error::{Error, Result};
use crate::exact::{self, QSqrt2};
use crate::observable::Observable;
use crate::sim::NonconvInstance;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum NumberOrString {
    Num(f64),
    Str(String),
}

impl NumberOrString {
    fn resolve(&self, what: &str) -> Result<(f64, Option<BigRational>)> {
        match self {
            NumberOrString::Num(v) => Ok((*v, exact::rational_from_f64_literal(*v))),
            NumberOrString::Str(s) => {
                let r = exact::parse_rational(s)
                    .ok_or_else(|| Error::Parse(format!("{what}: bad rational {s:?}")))?;
                let f = num_traits::ToPrimitive::to_f64(&r)
                    .ok_or_else(|| Error::Parse(format!("{what}: {s:?} overflows f64")))?;
                Ok((f, Some(r)))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct ChainSchema {
    states: Vec<serde_json::Value>,
    transition: Vec<Vec<NumberOrString>>,
    #[serde(default)]
    stationary: Option<Vec<NumberOrString>>,
}

#[derive(Debug, Deserialize)]
struct ObservableSchema {
    ell: usize,
    values: Vec<f64>,
    #[serde(default)]
    exact_values: Option<Vec<Option<String>>>,
}

/// Optional per-file analysis defaults; command-line flags override them.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
pub struct AnalysisDefaults {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct InstanceSchema {
    chain: ChainSchema,
    observable: ObservableSchema,
    #[serde(default)]
    ell: Option<usize>,
    #[serde(default)]
    defaults: Option<AnalysisDefaults>,
}

/// A parsed and validated instance plus the raw-observable statistics the
/// analyze report surfaces and the canonical content digest.
#[derive(Debug)]
pub struct LoadedInstance {
    pub instance: NonconvInstance,
    /// Mean of the observable as written (before centering).
    pub raw_mean: f64,
    /// Second moment b^2 of the observable as written.
    pub raw_second_moment: f64,
    pub defaults: AnalysisDefaults,
    /// FNV-1a 64 digest of the canonicalized (key-sorted, compact) JSON.
    pub digest: String,
}

pub fn load_instance_str(text: &str) -> Result<LoadedInstance> {
    let schema: InstanceSchema =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let digest = canonical_digest(text)?;

    let labels: Vec<String> = schema
        .chain
        .states
        .iter()
        .map(|v| match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            other => Err(Error::Parse(format!(
                "state labels must be strings or numbers, got {other}"
            ))),
        })
        .collect::<Result<_>>()?;

    let mut transition = Vec::with_capacity(schema.chain.transition.len());
    let mut exact_rows = Vec::with_capacity(schema.chain.transition.len());
    let mut all_exact = true;
    for (i, row) in schema.chain.transition.iter().enumerate() {
        let mut frow = Vec::with_capacity(row.len());
        let mut erow = Vec::with_capacity(row.len());
        for (j, entry) in row.iter().enumerate() {
            let (f, r) = entry.resolve(&format!("transition[{i}][{j}]"))?;
            frow.push(f);
            match r {
                Some(r) => erow.push(r),
                None => all_exact = false,
            }
        }
        transition.push(frow);
        exact_rows.push(erow);
    }
    let exact_transition = if all_exact
        && exact_rows
            .iter()
            .all(|row| num_traits::One::is_one(&row.iter().cloned().sum::<BigRational>()))
    {
        Some(exact_rows)
    } else {
        None
    };

    let stationary = schema
        .chain
        .stationary
        .as_ref()
        .map(|mu| {
            mu.iter()
                .enumerate()
                .map(|(i, v)| v.resolve(&format!("stationary[{i}]")).map(|(f, _)| f))
                .collect::<Result<Vec<f64>>>()
        })
        .transpose()?;

    let chain = FiniteChain::with_parts(labels, transition, exact_transition, stationary)?;

    if let Some(ell) = schema.ell {
        if ell != schema.observable.ell {
            return Err(Error::Parse(format!(
                "top-level ell = {ell} disagrees with observable.ell = {}",
                schema.observable.ell
            )));
        }
    }
    let exact_values = schema
        .observable
        .exact_values
        .map(|entries| {
            entries
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    e.map(|s| {
                        s.parse::<QSqrt2>()
                            .map_err(|msg| Error::Parse(format!("exact_values[{i}]: {msg}")))
                    })
                    .transpose()
                })
                .collect::<Result<Vec<Option<QSqrt2>>>>()
        })
        .transpose()?;

    let observable = Observable::build(
        schema.observable.ell,
        schema.observable.values,
        exact_values,
        &chain,
    )?;
    let raw_mean = observable.mean();
    let raw_second_moment = observable.second_moment();
    let instance = NonconvInstance::from_parts(chain, observable)?;

    Ok(LoadedInstance {
        instance,
        raw_mean,
        raw_second_moment,
        defaults: schema.defaults.unwrap_or_default(),
        digest,
    })
}

pub fn load_instance_path(path: &Path) -> Result<LoadedInstance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    load_instance_str(&text)
}

/// FNV-1a 64 over the canonicalized JSON: parsed and re-serialized
/// compactly with sorted object keys, so formatting differences do not
/// change the digest.
pub fn canonical_digest(text: &str) -> Result<String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let canonical = serde_json::to_string(&value).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(format!("{:016x}", fnv1a64(canonical.as_bytes())))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

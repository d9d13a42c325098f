//! The observable F on X^l as a dense value table, its centering, and the
//! telescoping decomposition F = F_1 + ... + F_l obtained by averaging out
//! trailing coordinates, each component mean-zero in its last coordinate.

use num_rational::BigRational;

use crate::chain::FiniteChain;
use crate::error::{Error, Result};
use crate::exact::QSqrt2;

/// Dense observable on X^l, row-major with the last coordinate fastest.
/// An optional parallel table of exact values (elements of Q + Q*sqrt2)
/// backs certified lattice classification.
#[derive(Clone, Debug)]
pub struct Observable {
    ell: usize,
    values: Vec<f64>,
    exact: Option<Vec<QSqrt2>>,
    /// Some exact entries were supplied but not all: certification is off.
    mixed_exact: bool,
    /// Exact entries were dropped during centering (no exact stationary).
    exact_dropped: bool,
    mean: f64,
    second_moment: f64,
}

impl Observable {
    /// Build an observable from a flat value table of length S^ell. The
    /// mean and second moment are computed against mu^ell; the table is
    /// NOT auto-centered.
    pub fn build(
        ell: usize,
        values: Vec<f64>,
        exact_entries: Option<Vec<Option<QSqrt2>>>,
        chain: &FiniteChain,
    ) -> Result<Self> {
        assert!(ell >= 1, "arity must be at least 1");
        let s = chain.size();
        let expected = s.checked_pow(ell as u32).ok_or(Error::LengthMismatch {
            got: values.len(),
            expected: usize::MAX,
        })?;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                got: values.len(),
                expected,
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index: idx });
        }

        let (exact, mixed_exact) = match exact_entries {
            None => (None, false),
            Some(entries) => {
                if entries.len() != expected {
                    return Err(Error::LengthMismatch {
                        got: entries.len(),
                        expected,
                    });
                }
                let present = entries.iter().filter(|e| e.is_some()).count();
                if present == 0 {
                    (None, false)
                } else if present < entries.len() {
                    (None, true)
                } else {
                    let table: Vec<QSqrt2> = entries.into_iter().map(|e| e.unwrap()).collect();
                    for (i, (e, &f)) in table.iter().zip(&values).enumerate() {
                        if (e.to_f64() - f).abs() > 1e-12 {
                            return Err(Error::Parse(format!(
                                "exact value {i} = {e} disagrees with float entry {f}"
                            )));
                        }
                    }
                    (Some(table), false)
                }
            }
        };

        let mean = weighted_mean(&values, ell, chain.stationary());
        let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
        let second_moment = weighted_mean(&squares, ell, chain.stationary());
        Ok(Self {
            ell,
            values,
            exact,
            mixed_exact,
            exact_dropped: false,
            mean,
            second_moment,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact_values(&self) -> Option<&[QSqrt2]> {
        self.exact.as_deref()
    }

    pub fn has_mixed_exact(&self) -> bool {
        self.mixed_exact
    }

    /// True when centering had to discard the exact table.
    pub fn exact_dropped(&self) -> bool {
        self.exact_dropped
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn is_centered(&self, tol: f64) -> bool {
        self.mean.abs() <= tol
    }

    /// Shift every value by -mean. The exact table is shifted exactly when
    /// an exact stationary distribution is available; otherwise it is
    /// dropped and `exact_dropped` is set.
    pub fn center(&self, chain: &FiniteChain) -> Observable {
        let shifted: Vec<f64> = self.values.iter().map(|v| v - self.mean).collect();
        let (exact, dropped) = match (&self.exact, chain.exact_stationary()) {
            (Some(table), Some(mu)) => {
                let exact_mean = exact_weighted_mean(table, self.ell, mu);
                (
                    Some(table.iter().map(|v| v.sub(&exact_mean)).collect()),
                    false,
                )
            }
            (Some(_), None) => (None, true),
            (None, _) => (None, self.exact_dropped),
        };
        let mean = weighted_mean(&shifted, self.ell, chain.stationary());
        let squares: Vec<f64> = shifted.iter().map(|v| v * v).collect();
        let second_moment = weighted_mean(&squares, self.ell, chain.stationary());
        Observable {
            ell: self.ell,
            values: shifted,
            exact,
            mixed_exact: self.mixed_exact,
            exact_dropped: dropped,
            mean,
            second_moment,
        }
    }
}

/// Average the last coordinate of a table on X^k against mu, producing a
/// table on X^{k-1}.
fn average_last(table: &[f64], mu: &[f64]) -> Vec<f64> {
    let s = mu.len();
    table
        .chunks(s)
        .map(|chunk| chunk.iter().zip(mu).map(|(v, m)| v * m).sum())
        .collect()
}

fn weighted_mean(table: &[f64], ell: usize, mu: &[f64]) -> f64 {
    let mut current = table.to_vec();
    for _ in 0..ell {
        current = average_last(&current, mu);
    }
    current[0]
}

fn exact_average_last(table: &[QSqrt2], mu: &[BigRational]) -> Vec<QSqrt2> {
    let s = mu.len();
    table
        .chunks(s)
        .map(|chunk| {
            chunk
                .iter()
                .zip(mu)
                .fold(QSqrt2::zero(), |acc, (v, m)| acc.add(&v.scale(m)))
        })
        .collect()
}

fn exact_weighted_mean(table: &[QSqrt2], ell: usize, mu: &[BigRational]) -> QSqrt2 {
    let mut current = table.to_vec();
    for _ in 0..ell {
        current = exact_average_last(&current, mu);
    }
    current[0].clone()
}

/// The components F_1, ..., F_l of the centered observable; component i is
/// a dense table on X^i. The last component is also kept exactly when the
/// observable and the stationary distribution are exact.
#[derive(Clone, Debug)]
pub struct Decomposition {
    components: Vec<Vec<f64>>,
    exact_f_ell: Option<Vec<QSqrt2>>,
}

impl Decomposition {
    pub fn ell(&self) -> usize {
        self.components.len()
    }

    /// Component F_i (1-based).
    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i - 1]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn f_ell(&self) -> &[f64] {
        self.components.last().unwrap()
    }

    pub fn exact_f_ell(&self) -> Option<&[QSqrt2]> {
        self.exact_f_ell.as_deref()
    }

    /// True iff the last component vanishes: exactly when an exact table
    /// is available, within `tol` (default 1e-10) otherwise.
    pub fn is_f_ell_zero(&self, tol: Option<f64>) -> bool {
        if let Some(exact) = &self.exact_f_ell {
            return exact.iter().all(|v| v.is_zero());
        }
        let tol = tol.unwrap_or(1e-10);
        self.f_ell().iter().all(|v| v.abs() <= tol)
    }
}

/// Decompose a centered observable per the trailing-coordinate averaging:
/// F_l subtracts the last-coordinate mean, and for i < l the component is
/// the difference of successive averagings. Requires |mean| < 1e-10.
pub fn decompose(observable: &Observable, chain: &FiniteChain) -> Result<Decomposition> {
    if !observable.is_centered(1e-10) {
        return Err(Error::NotCentered {
            mean: observable.mean(),
            tol: 1e-10,
        });
    }
    let ell = observable.ell();
    let mu = chain.stationary();

    // averaged[j] = F integrated over coordinates j+1..=l, a table on X^j;
    // averaged[l] is F itself, averaged[0] the scalar mean.
    let mut averaged: Vec<Vec<f64>> = vec![Vec::new(); ell + 1];
    averaged[ell] = observable.values().to_vec();
    for j in (0..ell).rev() {
        averaged[j] = average_last(&averaged[j + 1], mu);
    }

    let mut components = Vec::with_capacity(ell);
    let s = chain.size();
    for i in 1..=ell {
        let upper = &averaged[i];
        let lower = &averaged[i - 1];
        let table: Vec<f64> = upper
            .iter()
            .enumerate()
            .map(|(idx, v)| v - lower[idx / s])
            .collect();
        components.push(table);
    }

    let exact_f_ell = match (observable.exact_values(), chain.exact_stationary()) {
        (Some(table), Some(mu)) => {
            let trailing = exact_average_last(table, mu);
            Some(
                table
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| v.sub(&trailing[idx / s]))
                    .collect(),
            )
        }
        _ => None,
    };

    Ok(Decomposition {
        components,
        exact_f_ell,
    })
}

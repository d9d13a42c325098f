//! Finite-state stationary Markov chains and the chain-level coefficients
//! the limit theorems consume: the psi-mixing coefficient, Dobrushin
//! contraction delta_k, the L2 correlation coefficient rho_k, Doeblin
//! minorization certificates, the two row/column overlap conditions on
//! Pi^l, and the product chain driving the exact variance of the last
//! decomposition component.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::linalg;

/// Residual target for the stationary power iteration.
pub const STATIONARY_TOL: f64 = 1e-13;
/// Iteration cap for the stationary power iteration.
pub const STATIONARY_MAX_ITER: usize = 1_000_000;
/// Default cap on the number of product-chain states.
pub const DEFAULT_PRODUCT_CAP: u128 = 1_000_000;
/// Hard guard on dense product transition matrices (entries).
const DENSE_ENTRY_GUARD: u128 = 1 << 28;

/// A validated finite-state chain: row-stochastic transition matrix plus
/// its stationary distribution, with every state carrying positive mass.
/// Values are immutable after construction and safe to share across
/// threads; all operations are pure.
#[derive(Clone, Debug)]
pub struct FiniteChain {
    labels: Vec<String>,
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    exact_transition: Option<Vec<Vec<BigRational>>>,
    exact_stationary: Option<Vec<BigRational>>,
    cumulative: Vec<Vec<f64>>,
    stationary_cumulative: Vec<f64>,
}

impl FiniteChain {
    /// Validate a transition matrix and compute its stationary distribution
    /// by power iteration. Exact rational data is derived from the decimal
    /// round-trip of the entries when that reproduces the rows exactly.
    pub fn validate(labels: Vec<String>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let exact = derive_exact_transition(&transition);
        Self::with_parts(labels, transition, exact, None)
    }

    /// Full-control constructor: optional exact transition entries and an
    /// optional caller-supplied stationary vector (checked, not trusted).
    pub fn with_parts(
        labels: Vec<String>,
        transition: Vec<Vec<f64>>,
        exact_transition: Option<Vec<Vec<BigRational>>>,
        stationary: Option<Vec<f64>>,
    ) -> Result<Self> {
        let s = transition.len();
        if s < 2 || transition.iter().any(|row| row.len() != s) {
            return Err(Error::NotSquare {
                rows: s,
                cols: transition.first().map_or(0, |r| r.len()),
            });
        }
        if labels.len() != s {
            return Err(Error::Parse(format!(
                "{} state labels for {} transition rows",
                labels.len(),
                s
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || !(-1e-15..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::EntryOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::NonStochastic { row: i, sum });
            }
        }

        let stationary = match stationary {
            Some(mu) => {
                let total: f64 = mu.iter().sum();
                let image = linalg::vec_mat(&mu, &transition);
                let residual = image
                    .iter()
                    .zip(&mu)
                    .map(|(a, b)| (a - b).abs())
                    .fold((total - 1.0).abs(), f64::max);
                if residual > 1e-10 {
                    return Err(Error::StationaryMismatch { residual });
                }
                mu
            }
            None => linalg::stationary_power_iteration(
                &transition,
                STATIONARY_TOL,
                STATIONARY_MAX_ITER,
            )?,
        };
        for (i, &m) in stationary.iter().enumerate() {
            if m < 1e-12 {
                return Err(Error::ZeroMassState {
                    state: labels[i].clone(),
                    mass: m,
                });
            }
        }

        let exact_transition = match exact_transition {
            Some(rows) => {
                for (i, row) in rows.iter().enumerate() {
                    let sum: BigRational = row.iter().cloned().sum();
                    if !sum.is_one() {
                        return Err(Error::Parse(format!(
                            "exact transition row {i} sums to {sum}, not 1"
                        )));
                    }
                    for (j, v) in row.iter().enumerate() {
                        let f = v.to_f64().unwrap_or(f64::NAN);
                        if (f - transition[i][j]).abs() > 1e-12 {
                            return Err(Error::Parse(format!(
                                "exact transition entry [{i}][{j}] = {v} disagrees with float {}",
                                transition[i][j]
                            )));
                        }
                    }
                }
                Some(rows)
            }
            None => None,
        };
        let exact_stationary = exact_transition
            .as_ref()
            .and_then(|p| exact::exact_stationary(p))
            .filter(|mu| {
                mu.iter().zip(&stationary).all(|(e, f)| {
                    e.to_f64().is_some_and(|v| (v - f).abs() <= 1e-9) && e > &BigRational::zero()
                })
            });

        Ok(Self::assemble(
            labels,
            transition,
            stationary,
            exact_transition,
            exact_stationary,
        ))
    }

    fn assemble(
        labels: Vec<String>,
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
        exact_transition: Option<Vec<Vec<BigRational>>>,
        exact_stationary: Option<Vec<BigRational>>,
    ) -> Self {
        let cumulative = transition.iter().map(|r| cumulative_row(r)).collect();
        let stationary_cumulative = cumulative_row(&stationary);
        Self {
            labels,
            transition,
            stationary,
            exact_transition,
            exact_stationary,
            cumulative,
            stationary_cumulative,
        }
    }

    pub fn size(&self) -> usize {
        self.transition.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn exact_transition(&self) -> Option<&[Vec<BigRational>]> {
        self.exact_transition.as_deref()
    }

    pub fn exact_stationary(&self) -> Option<&[BigRational]> {
        self.exact_stationary.as_deref()
    }

    pub(crate) fn cumulative_rows(&self) -> &[Vec<f64>] {
        &self.cumulative
    }

    pub(crate) fn stationary_cumulative(&self) -> &[f64] {
        &self.stationary_cumulative
    }

    /// k-step transition matrix Pi^k.
    pub fn k_step(&self, k: usize) -> Vec<Vec<f64>> {
        assert!(k >= 1, "k_step needs k >= 1");
        linalg::mat_pow(&self.transition, k)
    }

    /// Dobrushin contraction coefficient delta_k: the largest total
    /// variation distance between two rows of Pi^k.
    pub fn doeblin_delta(&self, k: usize) -> f64 {
        let pk = self.k_step(k);
        let s = self.size();
        let mut worst = 0.0_f64;
        for x in 0..s {
            for y in x + 1..s {
                let tv: f64 = pk[x]
                    .iter()
                    .zip(&pk[y])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    * 0.5;
                worst = worst.max(tv);
            }
        }
        worst
    }

    /// Correlation coefficient rho_k: the operator norm of Pi^k on the
    /// mean-zero subspace of L2(mu), computed through the sqrt(mu)
    /// similarity transform and a projected spectral norm.
    pub fn rho_correlation(&self, k: usize) -> f64 {
        let pk = self.k_step(k);
        let s = self.size();
        let w: Vec<f64> = self.stationary.iter().map(|m| m.sqrt()).collect();
        // A = D^{1/2} Pi^k D^{-1/2}
        let mut a = vec![vec![0.0; s]; s];
        for i in 0..s {
            for j in 0..s {
                a[i][j] = w[i] * pk[i][j] / w[j];
            }
        }
        // project off the unit vector w on both sides: B = (I-ww^T) A (I-ww^T)
        let wa = linalg::vec_mat(&w, &a);
        for i in 0..s {
            for j in 0..s {
                a[i][j] -= w[i] * wa[j];
            }
        }
        let aw = linalg::mat_vec(&a, &w);
        for i in 0..s {
            for j in 0..s {
                a[i][j] -= aw[i] * w[j];
            }
        }
        linalg::spectral_norm(&a).min(1.0)
    }

    /// psi-mixing coefficient psi(m) = max_{i,j} |p^(m)_{ij}/mu_j - 1|.
    /// For stationary finite chains the supremum over full past/future
    /// sigma-algebras is attained on single-coordinate events, which the
    /// exhaustive event-pair oracle in the tests confirms.
    pub fn psi_coefficient(&self, m: usize) -> f64 {
        let pm = self.k_step(m);
        let mut worst = 0.0_f64;
        for row in &pm {
            for (j, &p) in row.iter().enumerate() {
                worst = worst.max((p / self.stationary[j] - 1.0).abs());
            }
        }
        worst
    }

    /// Largest gamma with gamma*mu_j <= p^(n0)_{ij} <= mu_j/gamma for all
    /// i, j, using the stationary distribution as the reference measure.
    /// Absent when some n0-step probability vanishes.
    pub fn check_doeblin(&self, n0: usize) -> Option<DoeblinCertificate> {
        let pn = self.k_step(n0);
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = 0.0_f64;
        for row in &pn {
            for (j, &p) in row.iter().enumerate() {
                if p <= 0.0 {
                    return None;
                }
                let r = p / self.stationary[j];
                min_ratio = min_ratio.min(r);
                max_ratio = max_ratio.max(r);
            }
        }
        let gamma = min_ratio.min(1.0 / max_ratio);
        (gamma > 0.0).then_some(DoeblinCertificate { gamma, n0 })
    }

    /// Evaluates both overlap inequalities on Pi^l: rows
    /// (min_{i,j} sum_k min(p^(l)_{ik}, p^(l)_{jk}) > 0) and the analogous
    /// condition on columns. Also reports the least k <= S^2 with Pi^k
    /// strictly positive, when one exists.
    pub fn check_2_20(&self, ell: usize) -> OverlapConditions {
        let pl = self.k_step(ell);
        let s = self.size();
        let mut min_row = f64::INFINITY;
        let mut min_col = f64::INFINITY;
        for i in 0..s {
            for j in i + 1..s {
                let row_overlap: f64 = (0..s).map(|k| pl[i][k].min(pl[j][k])).sum();
                let col_overlap: f64 = (0..s).map(|k| pl[k][i].min(pl[k][j])).sum();
                min_row = min_row.min(row_overlap);
                min_col = min_col.min(col_overlap);
            }
        }
        if min_row == f64::INFINITY {
            min_row = 1.0;
            min_col = 1.0;
        }
        OverlapConditions {
            rows_overlap: min_row > 0.0,
            columns_overlap: min_col > 0.0,
            min_row_overlap: min_row,
            min_column_overlap: min_col,
            positivity_index: self.positivity_index(),
        }
    }

    /// Least k <= S^2 with Pi^k strictly positive, if any.
    pub fn positivity_index(&self) -> Option<usize> {
        let s = self.size();
        let mut power = self.transition.clone();
        for k in 1..=s * s {
            if power.iter().all(|row| row.iter().all(|&v| v > 0.0)) {
                return Some(k);
            }
            power = linalg::mat_mul(&power, &self.transition);
        }
        None
    }

    /// The chain of (xi^(1)_n, xi^(2)_{2n}, ..., xi^(l)_{ln}) built from l
    /// independent copies run at speeds 1..l: transition matrix
    /// Pi (x) Pi^2 (x) ... (x) Pi^l, stationary mu^l. States are indexed
    /// row-major with the last coordinate fastest.
    pub fn product_chain(&self, ell: usize, cap: Option<u128>) -> Result<FiniteChain> {
        assert!(ell >= 1);
        let cap = cap.unwrap_or(DEFAULT_PRODUCT_CAP);
        let s = self.size() as u128;
        let states = s.checked_pow(ell as u32).ok_or(Error::CapExceeded {
            states: u128::MAX,
            cap,
        })?;
        if states > cap {
            return Err(Error::CapExceeded { states, cap });
        }
        if states * states > DENSE_ENTRY_GUARD {
            return Err(Error::CapExceeded {
                states,
                cap: (DENSE_ENTRY_GUARD as f64).sqrt() as u128,
            });
        }
        if ell == 1 {
            return Ok(self.clone());
        }

        let mut transition = self.transition.clone();
        for speed in 2..=ell {
            transition = kronecker(&transition, &self.k_step(speed));
        }
        let n = states as usize;
        let mut labels = Vec::with_capacity(n);
        let mut stationary = Vec::with_capacity(n);
        let base = self.size();
        for idx in 0..n {
            let tuple = unrank(idx, base, ell);
            labels.push(format!(
                "({})",
                tuple
                    .iter()
                    .map(|&c| self.labels[c].as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            ));
            stationary.push(tuple.iter().map(|&c| self.stationary[c]).product());
        }
        let exact_stationary = self.exact_stationary.as_ref().map(|mu| {
            (0..n)
                .map(|idx| {
                    unrank(idx, base, ell)
                        .iter()
                        .fold(BigRational::one(), |acc, &c| acc * &mu[c])
                })
                .collect()
        });

        Ok(FiniteChain::assemble(
            labels,
            transition,
            stationary,
            None,
            exact_stationary,
        ))
    }
}

/// Decompose a flat row-major index (last coordinate fastest) into its
/// coordinate tuple.
pub fn unrank(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut tuple = vec![0; len];
    for slot in tuple.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    tuple
}

fn cumulative_row(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(row.len());
    for &v in row {
        acc += v;
        out.push(acc);
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn kronecker(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (na, nb) = (a.len(), b.len());
    let n = na * nb;
    let mut out = vec![vec![0.0; n]; n];
    for i1 in 0..na {
        for i2 in 0..nb {
            let row = &mut out[i1 * nb + i2];
            for j1 in 0..na {
                let av = a[i1][j1];
                if av == 0.0 {
                    continue;
                }
                for j2 in 0..nb {
                    row[j1 * nb + j2] = av * b[i2][j2];
                }
            }
        }
    }
    out
}

fn derive_exact_transition(transition: &[Vec<f64>]) -> Option<Vec<Vec<BigRational>>> {
    let rows: Option<Vec<Vec<BigRational>>> = transition
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| exact::rational_from_f64_literal(v))
                .collect()
        })
        .collect();
    let rows = rows?;
    rows.iter()
        .all(|row| row.iter().cloned().sum::<BigRational>().is_one())
        .then_some(rows)
}

/// Two-sided minorization certificate with the stationary distribution as
/// the reference measure.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DoeblinCertificate {
    pub gamma: f64,
    pub n0: usize,
}

/// The pair of overlap inequalities evaluated on Pi^l plus the positivity
/// index of Pi.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OverlapConditions {
    pub rows_overlap: bool,
    pub columns_overlap: bool,
    pub min_row_overlap: f64,
    pub min_column_overlap: f64,
    pub positivity_index: Option<usize>,
}

/// All chain-level coefficients a verdict consumes, tabulated for
/// k = 1..=k_max.
#[derive(Clone, Debug, Serialize)]
pub struct MixingProfile {
    pub ell: usize,
    /// psi(m) for m = 1..=k_max (index m-1).
    pub psi: Vec<f64>,
    /// delta_k for k = 1..=k_max.
    pub delta: Vec<f64>,
    /// rho_k for k = 1..=k_max.
    pub rho: Vec<f64>,
    pub doeblin: Option<DoeblinCertificate>,
    pub rho_ell: f64,
    pub delta_ell: f64,
    /// rho_ell < 1.
    pub cond_2_13: bool,
    /// delta_ell < 1.
    pub cond_2_13_plus: bool,
    pub overlap: OverlapConditions,
    /// Largest alpha with psi(m) <= exp(-alpha*m)/alpha over the tabulated
    /// range; a strictly positive value certifies the geometric-decay fit.
    pub psi_decay_alpha: f64,
}

impl MixingProfile {
    pub fn compute(chain: &FiniteChain, ell: usize, k_max: usize) -> Self {
        let psi: Vec<f64> = (1..=k_max).map(|m| chain.psi_coefficient(m)).collect();
        let delta: Vec<f64> = (1..=k_max).map(|k| chain.doeblin_delta(k)).collect();
        let rho: Vec<f64> = (1..=k_max).map(|k| chain.rho_correlation(k)).collect();
        let rho_ell = if ell <= k_max && ell >= 1 {
            rho[ell - 1]
        } else {
            chain.rho_correlation(ell)
        };
        let delta_ell = if ell <= k_max && ell >= 1 {
            delta[ell - 1]
        } else {
            chain.doeblin_delta(ell)
        };
        let doeblin = chain
            .positivity_index()
            .and_then(|n0| chain.check_doeblin(n0));
        let psi_decay_alpha = fit_geometric_alpha(&psi);
        MixingProfile {
            ell,
            psi,
            delta,
            rho,
            doeblin,
            rho_ell,
            delta_ell,
            cond_2_13: rho_ell < 1.0 - 1e-9,
            cond_2_13_plus: delta_ell < 1.0 - 1e-9,
            overlap: chain.check_2_20(ell),
            psi_decay_alpha,
        }
    }
}

/// Largest alpha in (0, 50] with psi(m) <= exp(-alpha m)/alpha for every
/// tabulated m; feasibility is monotone in alpha, so bisection applies.
fn fit_geometric_alpha(psi: &[f64]) -> f64 {
    let feasible = |alpha: f64| {
        psi.iter()
            .enumerate()
            .all(|(i, &p)| p <= (-(alpha * (i + 1) as f64)).exp() / alpha)
    };
    let (mut lo, hi) = (1e-9, 50.0);
    if feasible(hi) {
        return hi;
    }
    let mut hi = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain_07() -> FiniteChain {
        FiniteChain::validate(
            vec!["-1".into(), "1".into()],
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
        )
        .unwrap()
    }

    pub(crate) fn iid_coin() -> FiniteChain {
        FiniteChain::validate(
            vec!["-1".into(), "1".into()],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap()
    }

    #[test]
    fn doubly_stochastic_chains_have_uniform_stationary() {
        assert!((iid_coin().stationary()[0] - 0.5).abs() < 1e-13);
        let c = chain_07();
        assert!((c.stationary()[0] - 0.5).abs() < 1e-12);
        assert!((c.stationary()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn biased_chain_stationary_matches_linear_solve() {
        let c = FiniteChain::validate(
            vec!["a".into(), "b".into()],
            vec![vec![0.9, 0.1], vec![0.5, 0.5]],
        )
        .unwrap();
        assert!((c.stationary()[0] - 5.0 / 6.0).abs() < 1e-10);
        assert!((c.stationary()[1] - 1.0 / 6.0).abs() < 1e-10);
        // exact route agrees
        let mu = c.exact_stationary().unwrap();
        assert_eq!(mu[0], exact::parse_rational("5/6").unwrap());
    }

    #[test]
    fn nonstochastic_row_is_rejected_with_row_index() {
        let err = FiniteChain::validate(
            vec!["a".into(), "b".into()],
            vec![vec![0.7, 0.2], vec![0.3, 0.7]],
        )
        .unwrap_err();
        match err {
            Error::NonStochastic { row, .. } => assert_eq!(row, 0),
            other => panic!("expected NonStochastic, got {other}"),
        }
    }

    #[test]
    fn transient_state_is_rejected() {
        let err = FiniteChain::validate(
            vec!["absorbing".into(), "transient".into()],
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroMassState { .. }));
    }

    #[test]
    fn periodic_chain_fails_validation() {
        let err = FiniteChain::validate(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. }));
    }

    #[test]
    fn periodic_chain_accepts_explicit_stationary() {
        let c = FiniteChain::with_parts(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            None,
            Some(vec![0.5, 0.5]),
        )
        .unwrap();
        assert_eq!(c.stationary(), &[0.5, 0.5]);
    }

    #[test]
    fn k_step_squares_correctly() {
        let c = chain_07();
        let p2 = c.k_step(2);
        assert!((p2[0][0] - 0.58).abs() < 1e-12);
        assert!((p2[0][1] - 0.42).abs() < 1e-12);
        assert!((p2[1][0] - 0.42).abs() < 1e-12);
        let p1 = c.k_step(1);
        assert_eq!(p1, c.transition().to_vec());
        let coin = iid_coin();
        let p5 = coin.k_step(5);
        assert!((p5[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn delta_examples() {
        let c = chain_07();
        assert!((c.doeblin_delta(1) - 0.4).abs() < 1e-12);
        assert!((c.doeblin_delta(2) - 0.16).abs() < 1e-12);
        for k in 1..6 {
            assert!(iid_coin().doeblin_delta(k) < 1e-15);
        }
    }

    #[test]
    fn rho_examples() {
        let c = chain_07();
        assert!((c.rho_correlation(1) - 0.4).abs() < 1e-12);
        assert!((c.rho_correlation(3) - 0.064).abs() < 1e-12);
        assert!(iid_coin().rho_correlation(1) < 1e-12);
    }

    #[test]
    fn psi_examples() {
        let c = chain_07();
        assert!((c.psi_coefficient(1) - 0.4).abs() < 1e-12);
        assert!((c.psi_coefficient(2) - 0.16).abs() < 1e-12);
        assert!(iid_coin().psi_coefficient(3) < 1e-15);
    }

    #[test]
    fn closed_form_geometric_coefficients() {
        // second eigenvalue 0.4 drives all three coefficients: 0.4^m
        let c = chain_07();
        for m in 1..=10 {
            let expect = 0.4_f64.powi(m as i32);
            assert!((c.psi_coefficient(m) - expect).abs() < 1e-10, "psi({m})");
            assert!((c.doeblin_delta(m) - expect).abs() < 1e-10, "delta({m})");
            assert!((c.rho_correlation(m) - expect).abs() < 1e-10, "rho({m})");
        }
    }

    #[test]
    fn doeblin_certificate_examples() {
        let c = chain_07();
        // Pi^2 rows are (0.58, 0.42); ratios to mu are 1.16 and 0.84, so the
        // largest two-sided gamma is min(0.84, 1/1.16) = 0.84.
        let cert = c.check_doeblin(2).unwrap();
        assert!((cert.gamma - 0.84).abs() < 1e-12);
        // a zero entry kills the certificate
        let lazy = FiniteChain::with_parts(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            None,
            None,
        )
        .unwrap();
        assert!(lazy.check_doeblin(1).is_none());
        // equal rows give gamma = 1
        let cert = iid_coin().check_doeblin(3).unwrap();
        assert!((cert.gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_conditions_examples() {
        let c = chain_07();
        let cond = c.check_2_20(2);
        assert!(cond.rows_overlap && cond.columns_overlap);
        assert!((cond.min_row_overlap - 0.84).abs() < 1e-12);
        assert_eq!(cond.positivity_index, Some(1));

        let flip = FiniteChain::with_parts(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            None,
            Some(vec![0.5, 0.5]),
        )
        .unwrap();
        let cond = flip.check_2_20(1);
        assert!(!cond.rows_overlap && !cond.columns_overlap);
        assert_eq!(cond.positivity_index, None);

        let cond = iid_coin().check_2_20(1);
        assert!(cond.rows_overlap && cond.columns_overlap);
    }

    #[test]
    fn product_chain_structure() {
        let c = chain_07();
        let prod = c.product_chain(2, None).unwrap();
        assert_eq!(prod.size(), 4);
        // transition = Pi (x) Pi^2
        let p2 = c.k_step(2);
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        let got = prod.transition()[i1 * 2 + i2][j1 * 2 + j2];
                        let want = c.transition()[i1][j1] * p2[i2][j2];
                        assert!((got - want).abs() < 1e-15);
                    }
                }
            }
        }
        for &m in prod.stationary() {
            assert!((m - 0.25).abs() < 1e-12);
        }
        // m-step transition of the product is the Kronecker product of the
        // per-speed m-step matrices
        let m = 3;
        let lhs = prod.k_step(m);
        let rhs = kronecker(&c.k_step(m), &c.k_step(2 * m));
        for i in 0..4 {
            for j in 0..4 {
                assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_chain_ell_one_is_identity() {
        let c = chain_07();
        let p = c.product_chain(1, None).unwrap();
        assert_eq!(p.transition(), c.transition());
    }

    #[test]
    fn product_chain_depth_three() {
        let c = chain_07();
        let prod = c.product_chain(3, None).unwrap();
        assert_eq!(prod.size(), 8);
        // stationary = tensor cube of mu
        for &m in prod.stationary() {
            assert!((m - 0.125).abs() < 1e-12);
        }
        // m-step transition factorizes as Pi^m (x) Pi^2m (x) Pi^3m
        let m = 2;
        let lhs = prod.k_step(m);
        let rhs = kronecker(&c.k_step(m), &kronecker(&c.k_step(2 * m), &c.k_step(3 * m)));
        for i in 0..8 {
            for j in 0..8 {
                assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_chain_cap() {
        let c = chain_07();
        assert!(matches!(
            c.product_chain(3, Some(4)),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn monotone_and_submultiplicative_coefficients() {
        for chain in [chain_07(), iid_coin()] {
            let delta: Vec<f64> = (1..=8).map(|k| chain.doeblin_delta(k)).collect();
            let rho: Vec<f64> = (1..=8).map(|k| chain.rho_correlation(k)).collect();
            for k in 1..8 {
                assert!(delta[k] <= delta[k - 1] + 1e-12);
            }
            for j in 1..=4usize {
                for k in 1..=4usize {
                    assert!(rho[j + k - 1] <= rho[j - 1] * rho[k - 1] + 1e-10);
                }
            }
            for k in 1..=8usize {
                assert!(rho[k - 1] <= chain.doeblin_delta(k).sqrt() + 1e-10);
            }
        }
    }

    #[test]
    fn mixing_profile_flags() {
        let profile = MixingProfile::compute(&chain_07(), 2, 10);
        assert!(profile.cond_2_13);
        assert!(profile.cond_2_13_plus);
        assert!(profile.overlap.rows_overlap);
        assert!(profile.doeblin.is_some());
        assert!(profile.psi_decay_alpha > 0.0);
        // fitted alpha really bounds psi over the range
        let a = profile.psi_decay_alpha;
        for (i, &p) in profile.psi.iter().enumerate() {
            assert!(p <= (-(a * (i + 1) as f64)).exp() / a + 1e-12);
        }
    }
}

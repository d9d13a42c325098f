//! Asymptotic variance machinery: the exact per-step variance s_l^2 of the
//! last decomposition component along the product chain (via a Poisson
//! equation solve), Monte Carlo estimates of sigma^2 = lim var(S_N)/N, the
//! component covariance structure, and the positivity verdict combining
//! the mixing conditions with the lower bound sigma^2 >= s_l^2 / (2 l).

use serde::Serialize;

use crate::chain::{FiniteChain, MixingProfile};
use crate::error::{Error, Result};
use crate::linalg;
use crate::observable::Decomposition;
use crate::sim::{simulate_sums, NonconvInstance, SimConfig};
use crate::stats;

/// Exact asymptotic variance of f = F_l along the product chain
/// T = Pi (x) Pi^2 (x) ... (x) Pi^l: solve (I - T) g = f on the mean-zero
/// subspace of L2(mu^l) and return 2<f,g> - <f,f>. The rank-one correction
/// A = I - T + 1 mu^T pins the solution to mean zero; the solve residual
/// must stay below 1e-11.
pub fn s_ell_squared(
    chain: &FiniteChain,
    decomposition: &Decomposition,
    cap: Option<u128>,
) -> Result<f64> {
    let ell = decomposition.ell();
    let f_raw = decomposition.f_ell();
    if f_raw.iter().all(|v| v.abs() < 1e-14) {
        return Ok(0.0);
    }
    let product = chain.product_chain(ell, cap)?;
    let t = product.transition();
    let mu = product.stationary();
    let n = product.size();

    let mean: f64 = f_raw.iter().zip(mu).map(|(v, m)| v * m).sum();
    let f: Vec<f64> = f_raw.iter().map(|v| v - mean).collect();

    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = -t[i][j] + mu[j];
        }
        a[i][i] += 1.0;
    }
    let g = linalg::lu_solve(&a, &f).map_err(|e| match e {
        Error::SolveFailed(msg) => Error::SolveFailed(format!(
            "product chain has a unit eigenvalue on the mean-zero subspace: {msg}"
        )),
        other => other,
    })?;
    let image = linalg::mat_vec(&a, &g);
    let residual = image
        .iter()
        .zip(&f)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max);
    if residual > 1e-11 {
        return Err(Error::SolveFailed(format!(
            "Poisson solve residual {residual:.3e} exceeds 1e-11"
        )));
    }

    let fg: f64 = f.iter().zip(&g).zip(mu).map(|((x, y), m)| x * y * m).sum();
    let ff: f64 = f.iter().zip(mu).map(|(x, m)| x * x * m).sum();
    let s2 = 2.0 * fg - ff;
    if s2 < -1e-10 {
        return Err(Error::NegativeVariance { value: s2 });
    }
    Ok(s2.max(0.0))
}

/// Independent oracle for `s_ell_squared`: the truncated covariance series
/// Var(f) + 2 sum_{k=1..K} <f, T^k f>. Exposed for tests and diagnostics.
pub fn s_ell_squared_series(
    chain: &FiniteChain,
    decomposition: &Decomposition,
    truncation: usize,
    cap: Option<u128>,
) -> Result<f64> {
    let ell = decomposition.ell();
    let f_raw = decomposition.f_ell();
    let product = chain.product_chain(ell, cap)?;
    let t = product.transition();
    let mu = product.stationary();

    let mean: f64 = f_raw.iter().zip(mu).map(|(v, m)| v * m).sum();
    let f: Vec<f64> = f_raw.iter().map(|v| v - mean).collect();
    let var: f64 = f.iter().zip(mu).map(|(x, m)| x * x * m).sum();
    let mut acc = var;
    let mut tf = f.clone();
    for _ in 1..=truncation {
        tf = linalg::mat_vec(t, &tf);
        let cov: f64 = f.iter().zip(&tf).zip(mu).map(|((x, y), m)| x * y * m).sum();
        acc += 2.0 * cov;
    }
    Ok(acc)
}

/// A Monte Carlo estimate of sigma^2 across an ascending horizon grid: the
/// headline value is var(S_N)/N at the largest horizon, with a slope
/// diagnostic in 1/N showing the grid trend (no extrapolation).
#[derive(Clone, Debug, Serialize)]
pub struct SigmaEstimate {
    pub sigma2: f64,
    pub stderr: f64,
    pub grid: Vec<SigmaGridPoint>,
    /// Least-squares slope of var(S_N)/N against 1/N over the grid.
    pub slope_vs_inverse_n: f64,
    pub samples_per_horizon: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SigmaGridPoint {
    pub n: usize,
    pub var_over_n: f64,
    pub stderr: f64,
}

pub fn sigma_squared_estimate(
    instance: &NonconvInstance,
    n_grid: &[usize],
    samples_per_n: usize,
    seed: u64,
    workers: usize,
) -> Result<SigmaEstimate> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse(
            "horizon grid must be ascending with at least 3 points".into(),
        ));
    }
    let mut grid = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let config = SimConfig::new(n, samples_per_n, seed, workers);
        let sums = simulate_sums(instance, &config, false)?;
        let (_, var) = stats::mean_var(&sums.totals);
        grid.push(SigmaGridPoint {
            n,
            var_over_n: var / n as f64,
            stderr: stats::variance_stderr(&sums.totals) / n as f64,
        });
    }
    let xs: Vec<f64> = grid.iter().map(|p| 1.0 / p.n as f64).collect();
    let ys: Vec<f64> = grid.iter().map(|p| p.var_over_n).collect();
    let (slope, _, _) = stats::linear_fit(&xs, &ys);
    let last = grid.last().unwrap();
    Ok(SigmaEstimate {
        sigma2: last.var_over_n,
        stderr: last.stderr,
        grid,
        slope_vs_inverse_n: slope,
        samples_per_horizon: samples_per_n,
        seed,
    })
}

/// Estimated covariance structure of the component sums at one horizon:
/// C_ij = Cov(S_{i,N}, S_{j,N})/N and D_ij = C_ij / min(i, j), plus the
/// reconciliation var(S_N)/N = sum_ij C_ij computed from the same sample.
#[derive(Clone, Debug, Serialize)]
pub struct CovarianceEstimate {
    pub c: Vec<Vec<f64>>,
    pub c_stderr: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub d_stderr: Vec<Vec<f64>>,
    pub sum_c: f64,
    pub sigma2_same_sample: f64,
    pub sigma2_same_sample_stderr: f64,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
}

pub fn covariance_matrix(
    instance: &NonconvInstance,
    config: &SimConfig,
) -> Result<CovarianceEstimate> {
    let ell = instance.ell();
    let sums = simulate_sums(instance, config, true)?;
    let comps = sums.components.as_ref().unwrap();
    let m = config.samples;
    let nf = config.horizon as f64;

    let mut c = vec![vec![0.0; ell]; ell];
    let mut c_stderr = vec![vec![0.0; ell]; ell];
    for i in 0..ell {
        for j in i..ell {
            let cov = stats::covariance(&comps[i], &comps[j]) / nf;
            c[i][j] = cov;
            c[j][i] = cov;
        }
    }
    for i in 0..ell {
        for j in 0..ell {
            // Gaussian-order stderr of a covariance estimate
            let v = (c[i][i] * c[j][j] + c[i][j] * c[i][j]).max(0.0);
            let se = (v / (m as f64 - 1.0)).sqrt();
            c_stderr[i][j] = se;
        }
    }
    let mut d = vec![vec![0.0; ell]; ell];
    let mut d_stderr = vec![vec![0.0; ell]; ell];
    for i in 0..ell {
        for j in 0..ell {
            let denom = (i + 1).min(j + 1) as f64;
            d[i][j] = c[i][j] / denom;
            d_stderr[i][j] = c_stderr[i][j] / denom;
        }
    }
    let sum_c: f64 = c.iter().flatten().sum();
    // var(S_N)/N from the identical sample, as the reconciliation target
    let totals: Vec<f64> = (0..m)
        .map(|j| (0..ell).map(|i| comps[i][j]).sum())
        .collect();
    let (_, var) = stats::mean_var(&totals);
    Ok(CovarianceEstimate {
        c,
        c_stderr,
        d,
        d_stderr,
        sum_c,
        sigma2_same_sample: var / nf,
        sigma2_same_sample_stderr: stats::variance_stderr(&totals) / nf,
        n: config.horizon,
        samples: m,
        seed: config.seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PositivityVerdict {
    /// F_l is nonzero and a contraction condition holds: sigma^2 > 0.
    PositiveCertified,
    /// No contraction condition, but the exact s_l^2 is positive, giving
    /// the bound sigma^2 >= s_l^2/(2l).
    PositiveEmpirical,
    /// F_l vanishes: reduce the arity and reanalyze.
    DegenerateFEllZero,
    Inconclusive,
}

/// Which hypotheses fired while issuing the verdict.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictBasis {
    pub f_ell_zero: bool,
    pub cond_2_13: bool,
    pub cond_2_13_plus: bool,
    pub overlap_rows: bool,
    pub overlap_columns: bool,
    pub doeblin_gamma: Option<f64>,
    pub route: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceReport {
    pub verdict: PositivityVerdict,
    pub s_ell2: f64,
    /// s_l^2 / (2 l), a certified lower bound for sigma^2 whenever the
    /// verdict is positive.
    pub lower_bound: f64,
    pub basis: VerdictBasis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_hat: Option<SigmaEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_hat: Option<CovarianceEstimate>,
}

/// Verdict logic: a vanishing F_l is degenerate; otherwise a contraction
/// condition (rho_l < 1 or delta_l < 1) certifies positivity outright; a
/// positive exact s_l^2 still gives the 1/(2l) lower bound; anything else
/// is inconclusive.
pub fn positivity_verdict(
    instance: &NonconvInstance,
    profile: &MixingProfile,
    s_ell2: f64,
    sigma2_hat: Option<SigmaEstimate>,
    d_hat: Option<CovarianceEstimate>,
) -> VarianceReport {
    let ell = instance.ell();
    let f_ell_zero = instance.decomposition().is_f_ell_zero(None);
    let (verdict, route) = if f_ell_zero {
        (
            PositivityVerdict::DegenerateFEllZero,
            "F_l = 0: the observable depends on fewer coordinates; reduce l".to_string(),
        )
    } else if profile.cond_2_13 {
        (
            PositivityVerdict::PositiveCertified,
            format!("rho_l = {:.6} < 1 with F_l != 0", profile.rho_ell),
        )
    } else if profile.cond_2_13_plus {
        (
            PositivityVerdict::PositiveCertified,
            format!("delta_l = {:.6} < 1 with F_l != 0", profile.delta_ell),
        )
    } else if s_ell2 > 1e-10 {
        (
            PositivityVerdict::PositiveEmpirical,
            format!("s_l^2 = {s_ell2:.6} > 0 bounds sigma^2 from below"),
        )
    } else {
        (
            PositivityVerdict::Inconclusive,
            "no contraction condition holds and s_l^2 = 0".to_string(),
        )
    };
    VarianceReport {
        verdict,
        s_ell2,
        lower_bound: s_ell2 / (2.0 * ell as f64),
        basis: VerdictBasis {
            f_ell_zero,
            cond_2_13: profile.cond_2_13,
            cond_2_13_plus: profile.cond_2_13_plus,
            overlap_rows: profile.overlap.rows_overlap,
            overlap_columns: profile.overlap.columns_overlap,
            doeblin_gamma: profile.doeblin.map(|d| d.gamma),
            route,
        },
        sigma2_hat,
        d_hat,
    }
}

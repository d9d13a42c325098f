//! Path simulation of S_N = sum_{n<=N} F(xi_n, xi_{2n}, ..., xi_{ln}) and
//! its component sums, the exact distribution by full path enumeration
//! (the ground-truth oracle behind every statistical claim), empirical and
//! exact characteristic functions, the CLT check, and the local limit
//! comparison of scaled point masses against the Gaussian density.
//!
//! The sampler materializes the whole path xi_0..xi_{lN}: the summand at n
//! reads positions n, 2n, ..., ln, and those interleave at incompatible
//! rates, so no fixed window suffices. Memory stays at desk scale.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::chain::FiniteChain;
use crate::error::{Error, Result};
use crate::exact::QSqrt2;
use crate::lattice::{classify, LatticeClassification, LatticeKind};
use crate::observable::{decompose, Decomposition, Observable};
use crate::rng::Xoshiro256pp;
use crate::stats;

/// Default cap on enumerated paths (S^(lN+1)); NLLT_MAX_ENUM overrides.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 24;
/// Paths cap for carrying exact support through the enumeration.
const EXACT_SUPPORT_CAP: u128 = 1 << 16;
/// Default budget on total chain steps per simulation call.
pub const DEFAULT_SIM_BUDGET: u128 = 1 << 35;

fn enum_cap() -> u128 {
    std::env::var("NLLT_MAX_ENUM")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_ENUM_CAP)
}

/// Simulation knobs: horizon N, sample count M, base seed, worker count.
/// Workers only affect speed, never values: sample j always draws from the
/// stream keyed by (seed, j).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SimConfig {
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn new(horizon: usize, samples: usize, seed: u64, workers: usize) -> Self {
        Self {
            horizon,
            samples,
            seed,
            workers: workers.max(1),
        }
    }
}

/// A fully assembled analysis instance: validated chain, centered
/// observable, its decomposition and lattice classification, with arities
/// consistent by construction.
#[derive(Clone, Debug)]
pub struct NonconvInstance {
    chain: FiniteChain,
    observable: Observable,
    decomposition: Decomposition,
    lattice: LatticeClassification,
}

impl NonconvInstance {
    /// Assemble from a chain and a raw (possibly uncentered) observable;
    /// centering is applied when needed.
    pub fn from_parts(chain: FiniteChain, observable: Observable) -> Result<Self> {
        let observable = if observable.is_centered(1e-10) {
            observable
        } else {
            observable.center(&chain)
        };
        let decomposition = decompose(&observable, &chain)?;
        let lattice = classify(&observable, &chain)?;
        Ok(Self {
            chain,
            observable,
            decomposition,
            lattice,
        })
    }

    pub fn chain(&self) -> &FiniteChain {
        &self.chain
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn lattice(&self) -> &LatticeClassification {
        &self.lattice
    }

    pub fn ell(&self) -> usize {
        self.observable.ell()
    }
}

/// One draw of (S_N, (S_{1,N}, ..., S_{l,N})) from the supplied stream.
pub fn sample_s_n(
    instance: &NonconvInstance,
    n: usize,
    stream: &mut Xoshiro256pp,
) -> (f64, Vec<f64>) {
    let ell = instance.ell();
    let mut path = Vec::with_capacity(ell * n + 1);
    let mut components = vec![0.0; ell];
    let total = sample_into(instance, n, stream, &mut path, &mut components);
    (total, components)
}

/// Core sampling kernel; reuses the caller's path buffer.
fn sample_into(
    instance: &NonconvInstance,
    n: usize,
    rng: &mut Xoshiro256pp,
    path: &mut Vec<u16>,
    components: &mut [f64],
) -> f64 {
    let chain = &instance.chain;
    let s = chain.size();
    let ell = instance.ell();
    let values = instance.observable.values();
    let comps = instance.decomposition.components();

    path.clear();
    path.push(rng.next_index(chain.stationary_cumulative()) as u16);
    let rows = chain.cumulative_rows();
    for _ in 0..ell * n {
        let prev = *path.last().unwrap() as usize;
        path.push(rng.next_index(&rows[prev]) as u16);
    }

    components.iter_mut().for_each(|c| *c = 0.0);
    let mut total = 0.0;
    for term in 1..=n {
        let mut acc = 0usize;
        for (i, comp) in comps.iter().enumerate().take(ell) {
            acc = acc * s + path[(i + 1) * term] as usize;
            components[i] += comp[acc];
        }
        total += values[acc];
    }
    total
}

/// All M sampled totals (and optionally per-component sums) of S_N,
/// partitioned across `workers` threads under the counter-based stream
/// contract: results are identical for any worker count.
pub struct SimulatedSums {
    pub totals: Vec<f64>,
    /// `components[i][j]` = S_{i+1,N} of sample j.
    pub components: Option<Vec<Vec<f64>>>,
}

pub fn simulate_sums(
    instance: &NonconvInstance,
    config: &SimConfig,
    want_components: bool,
) -> Result<SimulatedSums> {
    let n = config.horizon;
    let m = config.samples;
    let ell = instance.ell();
    if n == 0 || m == 0 {
        return Err(Error::Parse("horizon and samples must be positive".into()));
    }
    let draws = m as u128 * (ell as u128 * n as u128 + 1);
    if draws > DEFAULT_SIM_BUDGET {
        return Err(Error::BudgetExceeded {
            draws,
            cap: DEFAULT_SIM_BUDGET,
        });
    }

    let workers = config.workers.max(1).min(m);
    let chunk = m.div_ceil(workers);
    let mut results: Vec<(Vec<f64>, Vec<Vec<f64>>)> = Vec::with_capacity(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(m);
                scope.spawn(move || {
                    let mut totals = Vec::with_capacity(hi.saturating_sub(lo));
                    let mut comps: Vec<Vec<f64>> = if want_components {
                        vec![Vec::with_capacity(hi.saturating_sub(lo)); ell]
                    } else {
                        Vec::new()
                    };
                    let mut path = Vec::with_capacity(ell * n + 1);
                    let mut comp_buf = vec![0.0; ell];
                    for j in lo..hi {
                        let mut rng = Xoshiro256pp::for_sample(config.seed, j as u64);
                        let total = sample_into(instance, n, &mut rng, &mut path, &mut comp_buf);
                        totals.push(total);
                        if want_components {
                            for (i, c) in comp_buf.iter().enumerate() {
                                comps[i].push(*c);
                            }
                        }
                    }
                    (totals, comps)
                })
            })
            .collect();
        for h in handles {
            results.push(h.join().expect("simulation worker panicked"));
        }
    });

    let mut totals = Vec::with_capacity(m);
    let mut components = if want_components {
        Some(vec![Vec::with_capacity(m); ell])
    } else {
        None
    };
    for (t, c) in results {
        totals.extend(t);
        if let Some(out) = components.as_mut() {
            for (i, col) in c.into_iter().enumerate() {
                out[i].extend(col);
            }
        }
    }
    Ok(SimulatedSums { totals, components })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DistributionKind {
    Exact,
    MonteCarlo,
}

/// A distribution of S_N on a sorted support, exact (from enumeration) or
/// empirical (from sampling, with per-point standard errors).
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalDistribution {
    pub kind: DistributionKind,
    support: Vec<f64>,
    mass: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_support: Option<Vec<QSqrt2>>,
}

impl EmpiricalDistribution {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stderr(&self) -> Option<&[f64]> {
        self.stderr.as_deref()
    }

    pub fn sample_count(&self) -> Option<usize> {
        self.sample_count
    }

    pub fn exact_support(&self) -> Option<&[QSqrt2]> {
        self.exact_support.as_deref()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Total variation distance against another distribution, merging the
    /// two supports with tolerance 1e-9.
    pub fn tv_distance(&self, other: &EmpiricalDistribution) -> f64 {
        let mut merged: Vec<(f64, f64, f64)> = Vec::new();
        for (&u, &p) in self.support.iter().zip(&self.mass) {
            merged.push((u, p, 0.0));
        }
        for (&u, &q) in other.support.iter().zip(&other.mass) {
            match merged
                .iter_mut()
                .find(|(v, _, _)| (*v - u).abs() <= 1e-9 * v.abs().max(1.0))
            {
                Some(entry) => entry.2 += q,
                None => merged.push((u, 0.0, q)),
            }
        }
        0.5 * merged.iter().map(|(_, p, q)| (p - q).abs()).sum::<f64>()
    }
}

/// Exact distribution of S_N by full path enumeration: every path
/// (xi_0, ..., xi_{lN}) is weighted by mu(xi_0) * prod p(xi_k, xi_{k+1})
/// and its sum accumulated. Support is merged at tolerance 1e-12, exactly
/// (in Q + Q*sqrt2) when the observable carries exact values and the path
/// count stays small.
pub fn exact_distribution(instance: &NonconvInstance, n: usize) -> Result<EmpiricalDistribution> {
    let s = instance.chain.size() as u128;
    let ell = instance.ell();
    let depth = ell * n;
    let paths = s.checked_pow(depth as u32 + 1).unwrap_or(u128::MAX);
    let cap = enum_cap();
    if paths > cap {
        return Err(Error::EnumerationCapExceeded { paths, cap });
    }

    let use_exact = instance.observable.exact_values().is_some() && paths <= EXACT_SUPPORT_CAP;
    if use_exact {
        let exact_values = instance.observable.exact_values().unwrap();
        let mut acc: BTreeMap<QSqrt2, f64> = BTreeMap::new();
        enumerate_paths(instance, n, &mut |path, weight| {
            let mut sum = QSqrt2::zero();
            let sz = instance.chain.size();
            for term in 1..=n {
                let mut idx = 0usize;
                for i in 1..=ell {
                    idx = idx * sz + path[i * term];
                }
                sum = sum.add(&exact_values[idx]);
            }
            *acc.entry(sum).or_insert(0.0) += weight;
        });
        let (exact_support, mass): (Vec<QSqrt2>, Vec<f64>) = acc.into_iter().unzip();
        let support: Vec<f64> = exact_support.iter().map(|v| v.to_f64()).collect();
        return Ok(EmpiricalDistribution {
            kind: DistributionKind::Exact,
            support,
            mass,
            stderr: None,
            sample_count: None,
            exact_support: Some(exact_support),
        });
    }

    let values = instance.observable.values();
    let mut acc: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    enumerate_paths(instance, n, &mut |path, weight| {
        let mut sum = 0.0;
        let sz = instance.chain.size();
        for term in 1..=n {
            let mut idx = 0usize;
            for i in 1..=ell {
                idx = idx * sz + path[i * term];
            }
            sum += values[idx];
        }
        let entry = acc.entry(sum.to_bits()).or_insert((sum, 0.0));
        entry.1 += weight;
    });
    let mut points: Vec<(f64, f64)> = acc.into_values().collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // merge support at tolerance 1e-12
    let mut support: Vec<f64> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    for (u, w) in points {
        match support.last() {
            Some(&last) if (u - last) <= 1e-12 * f64::max(1.0, last.abs()) => {
                *mass.last_mut().unwrap() += w;
            }
            _ => {
                support.push(u);
                mass.push(w);
            }
        }
    }
    Ok(EmpiricalDistribution {
        kind: DistributionKind::Exact,
        support,
        mass,
        stderr: None,
        sample_count: None,
        exact_support: None,
    })
}

/// Depth-first walk over all paths with their stationary path weights.
fn enumerate_paths(instance: &NonconvInstance, n: usize, visit: &mut impl FnMut(&[usize], f64)) {
    let chain = &instance.chain;
    let s = chain.size();
    let depth = instance.ell() * n;
    let mut path = vec![0usize; depth + 1];

    fn recurse(
        chain: &FiniteChain,
        s: usize,
        depth: usize,
        level: usize,
        weight: f64,
        path: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize], f64),
    ) {
        if level > depth {
            visit(path, weight);
            return;
        }
        for state in 0..s {
            let w = if level == 0 {
                chain.stationary()[state]
            } else {
                chain.transition()[path[level - 1]][state]
            };
            if w == 0.0 {
                continue;
            }
            path[level] = state;
            recurse(chain, s, depth, level + 1, weight * w, path, visit);
        }
    }
    recurse(chain, s, depth, 0, 1.0, &mut path, visit);
}

/// Monte Carlo distribution of S_N. Certified or heuristic lattice
/// instances are binned at exact lattice points; other instances return
/// the raw sample values as a discrete distribution.
pub fn empirical_distribution(
    instance: &NonconvInstance,
    config: &SimConfig,
) -> Result<EmpiricalDistribution> {
    let sums = simulate_sums(instance, config, false)?;
    let m = sums.totals.len();
    let (support, counts): (Vec<f64>, Vec<usize>) = match instance.lattice.span_f64() {
        Some(h) if instance.lattice.kind == LatticeKind::Lattice => {
            let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
            for &v in &sums.totals {
                let k = (v / h).round();
                assert!(
                    (v - k * h).abs() < h * 1e-6,
                    "sample {v} is off the lattice with span {h}"
                );
                *bins.entry(k as i64).or_insert(0) += 1;
            }
            bins.into_iter().map(|(k, c)| (k as f64 * h, c)).unzip()
        }
        _ => {
            let mut sorted = sums.totals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut support = Vec::new();
            let mut counts: Vec<usize> = Vec::new();
            for v in sorted {
                match support.last() {
                    Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
                    _ => {
                        support.push(v);
                        counts.push(1);
                    }
                }
            }
            (support, counts)
        }
    };
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    let stderr = mass
        .iter()
        .map(|&p| (p * (1.0 - p) / m as f64).sqrt())
        .collect();
    Ok(EmpiricalDistribution {
        kind: DistributionKind::MonteCarlo,
        support,
        mass,
        stderr: Some(stderr),
        sample_count: Some(m),
        exact_support: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CfMode {
    Exact,
    MonteCarlo,
}

/// The characteristic function of S_N on a theta grid at one horizon.
#[derive(Clone, Debug)]
pub struct CfRow {
    pub n: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub mode: CfMode,
    pub sample_count: Option<usize>,
    /// Largest |phi(theta + 2 pi / h) - phi(theta)| over the grid, checked
    /// for lattice instances in exact mode.
    pub period_deviation: Option<f64>,
}

/// phi_N(theta) = E exp(i theta S_N), exactly (from the enumeration
/// oracle) or by Monte Carlo. theta = 0 always returns exactly 1.
pub fn characteristic_function(
    instance: &NonconvInstance,
    n: usize,
    thetas: &[f64],
    mode: CfMode,
    mc: Option<&SimConfig>,
) -> Result<CfRow> {
    let eval_points = |points: &[(f64, f64)], theta: f64| -> Complex64 {
        if theta == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        points
            .iter()
            .map(|&(u, w)| Complex64::from_polar(w, theta * u))
            .sum()
    };

    match mode {
        CfMode::Exact => {
            let dist = exact_distribution(instance, n)?;
            let points: Vec<(f64, f64)> = dist
                .support()
                .iter()
                .copied()
                .zip(dist.mass().iter().copied())
                .collect();
            let phi: Vec<Complex64> = thetas.iter().map(|&t| eval_points(&points, t)).collect();
            let period_deviation = match (instance.lattice.kind, instance.lattice.span_f64()) {
                (LatticeKind::Lattice, Some(h)) => {
                    let period = 2.0 * std::f64::consts::PI / h;
                    Some(
                        thetas
                            .iter()
                            .map(|&t| {
                                (eval_points(&points, t + period) - eval_points(&points, t)).norm()
                            })
                            .fold(0.0_f64, f64::max),
                    )
                }
                _ => None,
            };
            Ok(CfRow {
                n,
                theta: thetas.to_vec(),
                phi,
                mode,
                sample_count: None,
                period_deviation,
            })
        }
        CfMode::MonteCarlo => {
            let config = mc.ok_or_else(|| {
                Error::Parse("Monte Carlo characteristic function needs a SimConfig".into())
            })?;
            let config = SimConfig {
                horizon: n,
                ..*config
            };
            let sums = simulate_sums(instance, &config, false)?;
            let m = sums.totals.len() as f64;
            let phi: Vec<Complex64> = thetas
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        sums.totals
                            .iter()
                            .map(|&v| Complex64::from_polar(1.0, t * v))
                            .sum::<Complex64>()
                            / m
                    }
                })
                .collect();
            Ok(CfRow {
                n,
                theta: thetas.to_vec(),
                phi,
                mode,
                sample_count: Some(sums.totals.len()),
                period_deviation: None,
            })
        }
    }
}

/// Kolmogorov-Smirnov distance between the law of N^{-1/2} S_N (from M
/// samples) and the centered normal with variance sigma2.
pub fn clt_check(instance: &NonconvInstance, config: &SimConfig, sigma2: f64) -> Result<f64> {
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateVariance { sigma2 });
    }
    let sums = simulate_sums(instance, config, false)?;
    let scale = (config.horizon as f64).sqrt();
    let mut xs: Vec<f64> = sums.totals.iter().map(|v| v / scale).collect();
    Ok(stats::ks_statistic(&mut xs, |x| {
        stats::normal_cdf(x, sigma2)
    }))
}

/// One row of the local-limit comparison table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LltRow {
    pub u: f64,
    /// sigma sqrt(2 pi N) times the estimated mass (lattice) or smoothed
    /// mass (non-lattice) at u.
    pub l: f64,
    /// Gaussian reference: h exp(-u^2 / (2 N sigma^2)) in the lattice case,
    /// w exp(...) in the non-lattice case.
    pub r: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LltReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub sigma2: f64,
    /// Lattice span h, or None in the non-lattice case.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_h: Option<f64>,
    /// Triangle half-width w for the non-lattice comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    pub rows: Vec<LltRow>,
    pub max_abs_deviation: f64,
    /// Largest 3-sigma Monte Carlo error across rows, on the L scale.
    pub max_noise_3sigma: f64,
}

/// The local limit comparison. Lattice case: for u on h*Z within
/// [-2 sigma sqrt(N), 2 sigma sqrt(N)], compare sigma sqrt(2 pi N) *
/// P{S_N = u} against h exp(-u^2/(2 N sigma^2)). Non-lattice case: smooth
/// with a triangle test function of half-width `width` (default 0.5) over
/// a 41-point u grid. Classification Other is refused.
pub fn llt_check(
    instance: &NonconvInstance,
    config: &SimConfig,
    sigma2: f64,
    width: Option<f64>,
) -> Result<LltReport> {
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateVariance { sigma2 });
    }
    let n = config.horizon;
    let sigma = sigma2.sqrt();
    let scale = sigma * (2.0 * std::f64::consts::PI * n as f64).sqrt();
    let radius = 2.0 * sigma * (n as f64).sqrt();
    let gauss = |u: f64| (-u * u / (2.0 * n as f64 * sigma2)).exp();

    match instance.lattice.kind {
        LatticeKind::Lattice => {
            let h = instance
                .lattice
                .span_f64()
                .expect("lattice classification carries a span");
            let dist = empirical_distribution(instance, config)?;
            let m = dist.sample_count().unwrap() as f64;
            let mut masses: BTreeMap<i64, f64> = BTreeMap::new();
            for (&u, &p) in dist.support().iter().zip(dist.mass()) {
                masses.insert((u / h).round() as i64, p);
            }
            let k_max = (radius / h).floor() as i64;
            let mut rows = Vec::new();
            for k in -k_max..=k_max {
                let u = k as f64 * h;
                let p = masses.get(&k).copied().unwrap_or(0.0);
                rows.push(LltRow {
                    u,
                    l: scale * p,
                    r: h * gauss(u),
                    stderr: scale * (p * (1.0 - p) / m).sqrt(),
                });
            }
            Ok(finish_llt(rows, config, sigma2, Some(h), None))
        }
        LatticeKind::NonLattice => {
            let w = width.unwrap_or(0.5);
            let sums = simulate_sums(instance, config, false)?;
            let m = sums.totals.len() as f64;
            let grid: Vec<f64> = (0..41)
                .map(|i| -radius + 2.0 * radius * i as f64 / 40.0)
                .collect();
            let mut rows = Vec::new();
            for &u in &grid {
                let g_vals: Vec<f64> = sums
                    .totals
                    .iter()
                    .map(|&v| {
                        let t = (v - u).abs() / w;
                        (1.0 - t).max(0.0)
                    })
                    .collect();
                let (mean, var) = stats::mean_var(&g_vals);
                rows.push(LltRow {
                    u,
                    l: scale * mean,
                    r: w * gauss(u),
                    stderr: scale * (var / m).sqrt(),
                });
            }
            Ok(finish_llt(rows, config, sigma2, None, Some(w)))
        }
        LatticeKind::Other => Err(Error::KindOther {
            diagnostic: instance
                .lattice
                .witness
                .clone()
                .unwrap_or_else(|| "unclassified span structure".into()),
        }),
    }
}

fn finish_llt(
    rows: Vec<LltRow>,
    config: &SimConfig,
    sigma2: f64,
    lattice_h: Option<f64>,
    width: Option<f64>,
) -> LltReport {
    let max_abs_deviation = rows
        .iter()
        .map(|r| (r.l - r.r).abs())
        .fold(0.0_f64, f64::max);
    let max_noise_3sigma = rows.iter().map(|r| 3.0 * r.stderr).fold(0.0_f64, f64::max);
    LltReport {
        n: config.horizon,
        samples: config.samples,
        seed: config.seed,
        sigma2,
        lattice_h,
        width,
        rows,
        max_abs_deviation,
        max_noise_3sigma,
    }
}

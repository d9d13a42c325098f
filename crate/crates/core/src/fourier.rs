//! Finite-state Fourier operators: for a prefix (x_1, ..., x_{l-1}) and a
//! frequency theta, the operator matrix p^(l)_{ab} e^{i theta F(x, b)}
//! propagates phases along l-step transitions. No single such operator
//! generates the characteristic function of a nonconventional sum, but
//! products over length-m blocks are bounded by the explicit contraction
//! number rho_theta(x), and the scans here fit the e^{-qN} and
//! e^{-r N theta^2} decay regimes of |phi_N| numerically.

use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{unrank, FiniteChain};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::sim::{characteristic_function, CfMode, NonconvInstance, SimConfig};
use crate::stats;

/// Smallest block length m with (m-2)*l at least the positivity index of
/// Pi, so that the front factor of rho_theta is strictly positive.
pub fn default_block_length(chain: &FiniteChain, ell: usize) -> Result<usize> {
    let k = chain
        .positivity_index()
        .ok_or(Error::PositivityWindowUnavailable {
            cap: chain.size() * chain.size(),
        })?;
    Ok(2 + k.div_ceil(ell))
}

fn validated_block_length(
    chain: &FiniteChain,
    ell: usize,
    m: Option<usize>,
) -> Result<(usize, Vec<Vec<f64>>)> {
    let m = match m {
        Some(m) => m,
        None => default_block_length(chain, ell)?,
    };
    if m < 3 {
        return Err(Error::Parse("block length m must be at least 3".into()));
    }
    let front = chain.k_step((m - 2) * ell);
    if !front.iter().all(|row| row.iter().all(|&v| v > 0.0)) {
        return Err(Error::PositivityWindowUnavailable {
            cap: chain.size() * chain.size(),
        });
    }
    Ok((m, front))
}

/// The operator matrix for one prefix and frequency.
#[derive(Clone, Debug)]
pub struct FourierOperator {
    pub prefix: Vec<usize>,
    pub theta: f64,
    pub matrix: Vec<Vec<Complex64>>,
    pub block_length: usize,
}

/// Build the Fourier operator p^(l)_{ab} e^{i theta F(prefix, b)}.
pub fn phi_operator(
    chain: &FiniteChain,
    observable: &Observable,
    prefix: &[usize],
    theta: f64,
    m: Option<usize>,
) -> Result<FourierOperator> {
    let ell = observable.ell();
    assert_eq!(prefix.len(), ell - 1, "prefix arity mismatch");
    let (m, _) = validated_block_length(chain, ell, m)?;
    let s = chain.size();
    let pl = chain.k_step(ell);
    let prefix_index = prefix.iter().fold(0usize, |acc, &c| acc * s + c);
    let values = observable.values();
    let matrix = (0..s)
        .map(|a| {
            (0..s)
                .map(|b| Complex64::from_polar(pl[a][b], theta * values[prefix_index * s + b]))
                .collect()
        })
        .collect();
    Ok(FourierOperator {
        prefix: prefix.to_vec(),
        theta,
        matrix,
        block_length: m,
    })
}

/// The explicit contraction number
/// max_a sum_b p^((m-2)l)_{ab} sum_d |sum_c p^(l)_{bc} e^{i theta F(x,c)}
/// p^(l)_{cd}|, always in [0, 1], equal to 1 exactly when the phase is
/// constant on every set {c : p^(l)_{bc} > 0, p^(l)_{cd} > 0}.
pub fn rho_theta(
    chain: &FiniteChain,
    observable: &Observable,
    prefix: &[usize],
    theta: f64,
    m: Option<usize>,
) -> Result<f64> {
    let ell = observable.ell();
    assert_eq!(prefix.len(), ell - 1, "prefix arity mismatch");
    let (_, front) = validated_block_length(chain, ell, m)?;
    let s = chain.size();
    let pl = chain.k_step(ell);
    let prefix_index = prefix.iter().fold(0usize, |acc, &c| acc * s + c);
    let values = observable.values();
    let phase: Vec<Complex64> = (0..s)
        .map(|c| Complex64::from_polar(1.0, theta * values[prefix_index * s + c]))
        .collect();

    // inner(b) = sum_d |sum_c p_{bc} phase_c p_{cd}|, independent of a
    let mut inner = vec![0.0_f64; s];
    for (b, inn) in inner.iter_mut().enumerate() {
        let mut total = 0.0;
        for d in 0..s {
            let mut z = Complex64::new(0.0, 0.0);
            for c in 0..s {
                z += pl[b][c] * phase[c] * pl[c][d];
            }
            total += z.norm();
        }
        *inn = total;
    }
    let rho = front
        .iter()
        .map(|row| row.iter().zip(&inner).map(|(p, i)| p * i).sum::<f64>())
        .fold(0.0_f64, f64::max);
    Ok(rho.min(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaContraction {
    pub theta: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub mean_rho: f64,
    /// Stationary mass of the set G of prefixes with rho < 1.
    pub g_mass: f64,
    pub g_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionProfile {
    pub block_length: usize,
    pub theta: Vec<f64>,
    /// `rho[theta_index][prefix_index]`.
    pub rho: Vec<Vec<f64>>,
    pub prefixes: Vec<Vec<usize>>,
    pub per_theta: Vec<ThetaContraction>,
    /// Per-prefix least-squares coefficient r in 1 - rho ~ r theta^2 over
    /// grid points with theta in (0, 0.1].
    pub quadratic_r: Vec<f64>,
}

/// Evaluate rho_theta over every positive-mass prefix and the whole theta
/// grid; report per-theta contraction statistics, the contracting set G
/// with its stationary mass, and the small-theta quadratic coefficients.
pub fn contraction_profile(
    instance: &NonconvInstance,
    theta_grid: &[f64],
    m: Option<usize>,
) -> Result<ContractionProfile> {
    let chain = instance.chain();
    let obs = instance.observable();
    let ell = instance.ell();
    let s = chain.size();
    let (m, _) = validated_block_length(chain, ell, m)?;
    let prefix_count = s.pow((ell - 1) as u32);
    let prefixes: Vec<Vec<usize>> = (0..prefix_count).map(|p| unrank(p, s, ell - 1)).collect();
    let prefix_mass: Vec<f64> = prefixes
        .iter()
        .map(|p| p.iter().map(|&c| chain.stationary()[c]).product::<f64>())
        .collect();

    let mut rho = Vec::with_capacity(theta_grid.len());
    let mut per_theta = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        let row: Vec<f64> = prefixes
            .iter()
            .map(|p| rho_theta(chain, obs, p, theta, Some(m)))
            .collect::<Result<_>>()?;
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = row.iter().cloned().fold(0.0_f64, f64::max);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        let mut g_mass = 0.0;
        let mut g_count = 0;
        for (r, &mass) in row.iter().zip(&prefix_mass) {
            if *r < 1.0 - 1e-12 {
                g_mass += mass;
                g_count += 1;
            }
        }
        per_theta.push(ThetaContraction {
            theta,
            min_rho: min,
            max_rho: max,
            mean_rho: mean,
            g_mass,
            g_count,
        });
        rho.push(row);
    }

    // quadratic regime fit per prefix on theta in (0, 0.1]
    let small: Vec<usize> = theta_grid
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0 && t <= 0.1)
        .map(|(i, _)| i)
        .collect();
    let quadratic_r = (0..prefix_count)
        .map(|p| {
            let xs: Vec<f64> = small
                .iter()
                .map(|&i| theta_grid[i] * theta_grid[i])
                .collect();
            let ys: Vec<f64> = small.iter().map(|&i| 1.0 - rho[i][p]).collect();
            stats::slope_through_origin(&xs, &ys)
        })
        .collect();

    Ok(ContractionProfile {
        block_length: m,
        theta: theta_grid.to_vec(),
        rho,
        prefixes,
        per_theta,
        quadratic_r,
    })
}

/// Per-theta decay fit of -log|phi_N(theta)| against N.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayFit {
    pub theta: f64,
    pub q: f64,
    pub intercept: f64,
    pub relative_residual: f64,
    pub points: usize,
}

/// Characteristic-function decay scan over a theta list and a horizon
/// grid.
#[derive(Clone, Debug, Serialize)]
pub struct CfScan {
    pub mode: CfMode,
    pub theta: Vec<f64>,
    pub n_grid: Vec<usize>,
    /// `abs_phi[theta_index][n_index]`.
    pub abs_phi: Vec<Vec<f64>>,
    /// Fits in the bounded-away-from-zero regime, one per eligible theta.
    pub q_fits: Vec<DecayFit>,
    /// Pooled quadratic-regime coefficient from theta in (0, 0.1]:
    /// -log|phi_N(theta)| ~ r * N theta^2.
    pub r_fit: Option<f64>,
    pub r_points: usize,
    /// 3/sqrt(M) for Monte Carlo scans; points below it are left out of
    /// the fits.
    pub noise_floor: Option<f64>,
    pub excluded_below_floor: usize,
    pub sample_count: Option<usize>,
}

/// Scan |phi_N(theta)| over the grid and fit both decay regimes. The
/// bounded-away regime fits theta in [0.2, pi/h - 0.2] (lattice) or
/// [0.2, 5] (otherwise); the quadratic regime pools theta in (0, 0.1].
pub fn cf_decay_scan(
    instance: &NonconvInstance,
    theta_list: &[f64],
    n_grid: &[usize],
    mode: CfMode,
    mc: Option<&SimConfig>,
) -> Result<CfScan> {
    if n_grid.is_empty() || theta_list.is_empty() {
        return Err(Error::Parse(
            "theta list and horizon grid must be non-empty".into(),
        ));
    }
    let mut abs_phi = vec![vec![0.0; n_grid.len()]; theta_list.len()];
    let mut sample_count = None;
    for (n_idx, &n) in n_grid.iter().enumerate() {
        let row = characteristic_function(instance, n, theta_list, mode, mc)?;
        sample_count = row.sample_count;
        for (t_idx, phi) in row.phi.iter().enumerate() {
            abs_phi[t_idx][n_idx] = phi.norm();
        }
    }

    let noise_floor = match mode {
        CfMode::MonteCarlo => sample_count.map(|m| 3.0 / (m as f64).sqrt()),
        CfMode::Exact => None,
    };
    let floor = noise_floor.unwrap_or(0.0);

    let q_window_hi = match instance.lattice().span_f64() {
        Some(h) if instance.lattice().kind == crate::lattice::LatticeKind::Lattice => {
            std::f64::consts::PI / h - 0.2
        }
        _ => 5.0,
    };

    let mut excluded = 0usize;
    let mut q_fits = Vec::new();
    for (t_idx, &theta) in theta_list.iter().enumerate() {
        if !(0.2..=q_window_hi).contains(&theta) {
            continue;
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (n_idx, &n) in n_grid.iter().enumerate() {
            let a = abs_phi[t_idx][n_idx];
            if a <= floor {
                excluded += 1;
                continue;
            }
            let y = -a.ln();
            if y.is_finite() {
                xs.push(n as f64);
                ys.push(y);
            }
        }
        if xs.len() >= 2 {
            let (q, intercept, rel) = stats::linear_fit(&xs, &ys);
            q_fits.push(DecayFit {
                theta,
                q,
                intercept,
                relative_residual: rel,
                points: xs.len(),
            });
        }
    }

    let mut r_xs = Vec::new();
    let mut r_ys = Vec::new();
    for (t_idx, &theta) in theta_list.iter().enumerate() {
        if theta <= 0.0 || theta > 0.1 {
            continue;
        }
        for (n_idx, &n) in n_grid.iter().enumerate() {
            let a = abs_phi[t_idx][n_idx];
            if a <= floor {
                excluded += 1;
                continue;
            }
            let y = -a.ln();
            if y.is_finite() {
                r_xs.push(n as f64 * theta * theta);
                r_ys.push(y);
            }
        }
    }
    let r_fit = (!r_xs.is_empty()).then(|| stats::slope_through_origin(&r_xs, &r_ys));

    Ok(CfScan {
        mode,
        theta: theta_list.to_vec(),
        n_grid: n_grid.to_vec(),
        abs_phi,
        q_fits,
        r_fit,
        r_points: r_xs.len(),
        noise_floor,
        excluded_below_floor: excluded,
        sample_count,
    })
}

/// Product of two operator matrices.
pub fn cmat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let v = a[i][k];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += v * b[k][j];
            }
        }
    }
    out
}

/// Operator norm induced by the sup norm: max row absolute sum.
pub fn inf_norm(m: &[Vec<Complex64>]) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::Observable;
    use crate::rng::Xoshiro256pp;

    fn instance_b() -> NonconvInstance {
        let chain = FiniteChain::validate(
            vec!["-1".into(), "1".into()],
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
        )
        .unwrap();
        let obs = Observable::build(2, vec![-2.0, 0.0, 0.0, 2.0], None, &chain).unwrap();
        NonconvInstance::from_parts(chain, obs).unwrap()
    }

    fn constant_last_instance() -> NonconvInstance {
        // F(x, y) = f(x): phase constant in the last coordinate
        let chain = FiniteChain::validate(
            vec!["-1".into(), "1".into()],
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
        )
        .unwrap();
        let obs = Observable::build(2, vec![-1.0, -1.0, 1.0, 1.0], None, &chain).unwrap();
        NonconvInstance::from_parts(chain, obs).unwrap()
    }

    #[test]
    fn block_length_defaults_to_positivity_index() {
        let inst = instance_b();
        // Pi > 0, so k = 1 and m = 2 + ceil(1/2) = 3
        assert_eq!(default_block_length(inst.chain(), 2).unwrap(), 3);
    }

    #[test]
    fn operator_at_zero_frequency_is_the_l_step_matrix() {
        let inst = instance_b();
        let op = phi_operator(inst.chain(), inst.observable(), &[0], 0.0, None).unwrap();
        let p2 = inst.chain().k_step(2);
        for a in 0..2 {
            for b in 0..2 {
                assert!((op.matrix[a][b].re - p2[a][b]).abs() < 1e-15);
                assert!(op.matrix[a][b].im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn operator_entries_carry_the_phase() {
        let inst = instance_b();
        let theta = std::f64::consts::FRAC_PI_2;
        let op = phi_operator(inst.chain(), inst.observable(), &[0], theta, None).unwrap();
        let p2 = inst.chain().k_step(2);
        let values = inst.observable().values();
        for a in 0..2 {
            for b in 0..2 {
                let expect = Complex64::from_polar(p2[a][b], theta * values[b]);
                assert!((op.matrix[a][b] - expect).norm() < 1e-15);
                // modulus of each entry equals the transition probability
                assert!((op.matrix[a][b].norm() - p2[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rho_is_one_at_zero_and_at_the_phase_period() {
        let inst = instance_b();
        for prefix in [[0], [1]] {
            let r0 = rho_theta(inst.chain(), inst.observable(), &prefix, 0.0, None).unwrap();
            assert!((r0 - 1.0).abs() < 1e-12);
            // lattice span 2: phases at theta = 2 pi / h = pi are all 1
            let rp = rho_theta(
                inst.chain(),
                inst.observable(),
                &prefix,
                std::f64::consts::PI,
                None,
            )
            .unwrap();
            assert!((rp - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_is_one_for_constant_last_coordinate() {
        let inst = constant_last_instance();
        for theta in [0.3, 1.0, 2.0] {
            for prefix in [[0], [1]] {
                let r = rho_theta(inst.chain(), inst.observable(), &prefix, theta, None).unwrap();
                assert!((r - 1.0).abs() < 1e-12, "theta {theta}");
            }
        }
    }

    #[test]
    fn rho_contracts_strictly_for_non_constant_phase() {
        let inst = instance_b();
        for prefix in [[0], [1]] {
            let r = rho_theta(
                inst.chain(),
                inst.observable(),
                &prefix,
                std::f64::consts::FRAC_PI_2,
                Some(3),
            )
            .unwrap();
            assert!(r < 1.0 - 1e-6, "rho = {r}");
        }
    }

    #[test]
    fn block_product_norm_is_bounded_by_rho() {
        // for random prefix sequences of length m, the sup-norm of the
        // operator product is bounded by rho of the second-to-last prefix
        let inst = instance_b();
        let m = default_block_length(inst.chain(), 2).unwrap();
        let mut rng = Xoshiro256pp::from_key(2024);
        for theta in [0.4, std::f64::consts::FRAC_PI_2, 1.3] {
            for _ in 0..20 {
                let seq: Vec<usize> = (0..m).map(|_| (rng.next_u64() % 2) as usize).collect();
                let mut product =
                    phi_operator(inst.chain(), inst.observable(), &[seq[0]], theta, Some(m))
                        .unwrap()
                        .matrix;
                for &p in &seq[1..] {
                    let next = phi_operator(inst.chain(), inst.observable(), &[p], theta, Some(m))
                        .unwrap()
                        .matrix;
                    product = cmat_mul(&product, &next);
                }
                let bound = rho_theta(
                    inst.chain(),
                    inst.observable(),
                    &[seq[m - 2]],
                    theta,
                    Some(m),
                )
                .unwrap();
                assert!(
                    inf_norm(&product) <= bound + 1e-10,
                    "norm {} > rho {}",
                    inf_norm(&product),
                    bound
                );
            }
        }
    }

    #[test]
    fn profile_finds_contracting_set_with_positive_mass() {
        let inst = instance_b();
        let grid = [0.02, 0.05, 0.1, 0.8, std::f64::consts::FRAC_PI_2];
        let profile = contraction_profile(&inst, &grid, None).unwrap();
        let at_boundary = profile.per_theta.last().unwrap();
        assert!(at_boundary.g_count > 0);
        assert!(at_boundary.g_mass > 0.0);
        // quadratic coefficient is positive for every prefix
        for &r in &profile.quadratic_r {
            assert!(r > 0.0);
        }
    }

    #[test]
    fn profile_of_constant_phase_never_contracts() {
        let inst = constant_last_instance();
        let profile = contraction_profile(&inst, &[0.5, 1.0, 2.0], None).unwrap();
        for row in &profile.rho {
            for &r in row {
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
        for t in &profile.per_theta {
            assert_eq!(t.g_count, 0);
        }
    }

    #[test]
    fn ell_one_cf_matches_operator_power() {
        // for l = 1 the characteristic function is mu^T Phi(theta)^N 1
        let chain = FiniteChain::validate(
            vec!["-1".into(), "1".into()],
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
        )
        .unwrap();
        let obs = Observable::build(1, vec![-1.0, 1.0], None, &chain).unwrap();
        let inst = NonconvInstance::from_parts(chain, obs).unwrap();
        for theta in [0.3, 1.1] {
            let op = phi_operator(inst.chain(), inst.observable(), &[], theta, Some(3))
                .unwrap()
                .matrix;
            for n in 1..=6usize {
                let mut power = op.clone();
                for _ in 1..n {
                    power = cmat_mul(&power, &op);
                }
                let mut from_op = Complex64::new(0.0, 0.0);
                for (i, row) in power.iter().enumerate() {
                    let row_sum: Complex64 = row.iter().sum();
                    from_op += inst.chain().stationary()[i] * row_sum;
                }
                let row = characteristic_function(&inst, n, &[theta], CfMode::Exact, None).unwrap();
                assert!(
                    (row.phi[0] - from_op).norm() < 1e-10,
                    "n = {n}, theta = {theta}"
                );
            }
        }
    }

    #[test]
    fn decay_scan_fits_positive_q_on_exact_data() {
        // instance A: |phi_N(1)| = |cos 1|^N |cos 2|^{N/2}, linear in N on
        // the log scale with slope ~ 1.0539
        let chain = FiniteChain::validate(
            vec!["-1".into(), "1".into()],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let obs = Observable::build(2, vec![-2.0, 0.0, 0.0, 2.0], None, &chain).unwrap();
        let inst = NonconvInstance::from_parts(chain, obs).unwrap();
        let scan = cf_decay_scan(
            &inst,
            &[0.0, 0.05, 1.0],
            &[2, 4, 6, 8, 10],
            CfMode::Exact,
            None,
        )
        .unwrap();
        // theta = 0 is excluded from fits but present in the table
        assert!(scan.abs_phi[0].iter().all(|&a| (a - 1.0).abs() < 1e-12));
        assert_eq!(scan.q_fits.len(), 1);
        let fit = &scan.q_fits[0];
        assert!(fit.q > 0.0);
        assert!(fit.relative_residual < 0.05);
        let expect = -(1.0_f64.cos().abs().ln()) - 0.5 * (2.0_f64.cos().abs().ln());
        assert!((fit.q - expect).abs() < 1e-6);
        // small-theta family gives r near sigma^2/2 = 1.5
        let r = scan.r_fit.unwrap();
        assert!((r - 1.5).abs() < 0.05, "r = {r}");
    }

    #[test]
    fn decay_scan_of_zero_observable_is_flat() {
        let chain = FiniteChain::validate(
            vec!["-1".into(), "1".into()],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let obs = Observable::build(2, vec![0.0; 4], None, &chain).unwrap();
        let inst = NonconvInstance::from_parts(chain, obs).unwrap();
        let scan = cf_decay_scan(&inst, &[0.5, 1.0], &[2, 4, 6], CfMode::Exact, None).unwrap();
        for row in &scan.abs_phi {
            for &a in row {
                assert!((a - 1.0).abs() < 1e-12);
            }
        }
        for fit in &scan.q_fits {
            assert!(fit.q.abs() < 1e-12);
        }
    }

    /// True when the phase e^{i theta F(prefix, c)} is constant in c on
    /// every set {c : p^(l)_{bc} > 0, p^(l)_{cd} > 0}.
    fn phase_constant_on_connecting_sets(
        inst: &NonconvInstance,
        prefix: &[usize],
        theta: f64,
    ) -> bool {
        let s = inst.chain().size();
        let ell = inst.ell();
        let pl = inst.chain().k_step(ell);
        let prefix_index = prefix.iter().fold(0usize, |acc, &c| acc * s + c);
        let values = inst.observable().values();
        let phase: Vec<Complex64> = (0..s)
            .map(|c| Complex64::from_polar(1.0, theta * values[prefix_index * s + c]))
            .collect();
        for b in 0..s {
            for d in 0..s {
                let members: Vec<usize> = (0..s)
                    .filter(|&c| pl[b][c] > 0.0 && pl[c][d] > 0.0)
                    .collect();
                for w in members.windows(2) {
                    if (phase[w[0]] - phase[w[1]]).norm() > 1e-12 {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn contraction_is_one_iff_phase_is_constant_on_connecting_sets() {
        // both directions of the exactness criterion, across a corpus of
        // constant, lattice and generic observables and a theta sweep
        let corpus = [constant_last_instance(), instance_b(), {
            let chain = FiniteChain::validate(
                vec!["-1".into(), "1".into()],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            )
            .unwrap();
            let obs = Observable::build(2, vec![1.0, -1.0, -1.0, 1.0], None, &chain).unwrap();
            NonconvInstance::from_parts(chain, obs).unwrap()
        }];
        let thetas = [
            0.0,
            0.3,
            1.0,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
            2.0 * std::f64::consts::PI,
        ];
        for inst in &corpus {
            for prefix in [[0usize], [1]] {
                for &theta in &thetas {
                    let rho = rho_theta(inst.chain(), inst.observable(), &prefix, theta, Some(3))
                        .unwrap();
                    let constant = phase_constant_on_connecting_sets(inst, &prefix, theta);
                    assert_eq!(
                        (rho - 1.0).abs() <= 1e-12,
                        constant,
                        "rho = {rho} vs constancy {constant} at theta = {theta}"
                    );
                }
            }
        }
    }
}

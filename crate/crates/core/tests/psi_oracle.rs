#![allow(clippy::needless_range_loop)]

//! Exhaustive event-pair oracle for the psi-mixing coefficient on 2-state
//! chains: psi(m) as computed from the single-coordinate pair formula must
//! equal the supremum of |P(G and H)/(P(G) P(H)) - 1| over ALL nonempty
//! event pairs G on (xi_0, xi_1) and H on (xi_{1+m}, xi_{2+m}). If the
//! oracle ever exceeds the formula, the reduction to pair events is wrong
//! and the build must fail loudly.

use nllt_core::chain::FiniteChain;
use nllt_core::linalg;
use nllt_core::rng::Xoshiro256pp;

fn random_two_state_chain(rng: &mut Xoshiro256pp) -> FiniteChain {
    let p = 0.05 + 0.9 * rng.next_f64();
    let q = 0.05 + 0.9 * rng.next_f64();
    FiniteChain::validate(
        vec!["0".into(), "1".into()],
        vec![vec![p, 1.0 - p], vec![q, 1.0 - q]],
    )
    .unwrap()
}

/// sup over all nonempty pair events of the relative dependence ratio.
fn psi_event_pair_oracle(chain: &FiniteChain, m: usize) -> f64 {
    let s = chain.size();
    let mu = chain.stationary();
    let p1 = chain.k_step(1);
    let pm = chain.k_step(m);

    // joint law of (xi_0, xi_1, xi_{1+m}, xi_{2+m})
    let mut weights = vec![vec![0.0_f64; s * s]; s * s];
    for a in 0..s {
        for b in 0..s {
            for c in 0..s {
                for d in 0..s {
                    weights[a * s + b][c * s + d] = mu[a] * p1[a][b] * pm[b][c] * p1[c][d];
                }
            }
        }
    }

    let pairs = s * s;
    let mut worst = 0.0_f64;
    for gamma_mask in 1u32..(1 << pairs) {
        let p_gamma: f64 = (0..pairs)
            .filter(|i| gamma_mask >> i & 1 == 1)
            .map(|i| {
                let (a, b) = (i / s, i % s);
                mu[a] * p1[a][b]
            })
            .sum();
        if p_gamma <= 0.0 {
            continue;
        }
        for psi_mask in 1u32..(1 << pairs) {
            let p_psi: f64 = (0..pairs)
                .filter(|j| psi_mask >> j & 1 == 1)
                .map(|j| {
                    let (c, d) = (j / s, j % s);
                    mu[c] * p1[c][d]
                })
                .sum();
            if p_psi <= 0.0 {
                continue;
            }
            let mut p_and = 0.0;
            for i in 0..pairs {
                if gamma_mask >> i & 1 == 0 {
                    continue;
                }
                for j in 0..pairs {
                    if psi_mask >> j & 1 == 1 {
                        p_and += weights[i][j];
                    }
                }
            }
            worst = worst.max((p_and / (p_gamma * p_psi) - 1.0).abs());
        }
    }
    worst
}

#[test]
fn psi_formula_equals_event_pair_oracle_on_random_chains() {
    let mut rng = Xoshiro256pp::from_key(0x5150);
    for trial in 0..20 {
        let chain = random_two_state_chain(&mut rng);
        for m in 1..=3 {
            let formula = chain.psi_coefficient(m);
            let oracle = psi_event_pair_oracle(&chain, m);
            assert!(
                (formula - oracle).abs() <= 1e-10,
                "trial {trial}, m = {m}: formula {formula} vs oracle {oracle}"
            );
        }
    }
}

#[test]
fn rho_bounded_by_sqrt_delta_on_random_chains() {
    let mut rng = Xoshiro256pp::from_key(0xD0B0);
    for _ in 0..20 {
        let chain = random_two_state_chain(&mut rng);
        for k in 1..=5 {
            let rho = chain.rho_correlation(k);
            let delta = chain.doeblin_delta(k);
            assert!(
                rho <= delta.sqrt() + 1e-10,
                "rho {rho} vs sqrt(delta) {}",
                delta.sqrt()
            );
        }
    }
}

#[test]
fn delta_monotone_rho_submultiplicative_on_random_chains() {
    let mut rng = Xoshiro256pp::from_key(0xCAFE);
    for _ in 0..10 {
        let chain = random_two_state_chain(&mut rng);
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
    }
}

#[test]
fn doeblin_certificate_comes_with_positive_decay_rate() {
    // whenever a minorization certificate exists, the fitted geometric
    // decay rate of psi over m = 1..30 is strictly positive
    let mut rng = Xoshiro256pp::from_key(0xA1FA);
    for _ in 0..10 {
        let chain = random_two_state_chain(&mut rng);
        let profile = nllt_core::MixingProfile::compute(&chain, 2, 30);
        if profile.doeblin.is_some() {
            assert!(profile.psi_decay_alpha > 0.0);
            let a = profile.psi_decay_alpha;
            for (i, &p) in profile.psi.iter().enumerate() {
                assert!(p <= (-(a * (i + 1) as f64)).exp() / a + 1e-12);
            }
        }
    }
}

#[test]
fn stationary_power_iteration_agrees_with_direct_solve() {
    // independent route: solve mu (P - I) = 0 with normalization via LU on
    // the transposed system
    let mut rng = Xoshiro256pp::from_key(0xBEEF);
    for _ in 0..10 {
        let chain = random_two_state_chain(&mut rng);
        let p = chain.transition();
        let n = p.len();
        let mut a = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in 0..n {
                a[r][c] = p[c][r] - if r == c { 1.0 } else { 0.0 };
            }
        }
        a[n - 1] = vec![1.0; n];
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = 1.0;
        let mu = linalg::lu_solve(&a, &rhs).unwrap();
        for (x, y) in mu.iter().zip(chain.stationary()) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

//! Monte Carlo estimators against the exact enumeration oracle, the
//! reproducibility contract across worker counts, and the classical
//! single-coordinate reproduction of the variance engine.

use nllt_core::chain::FiniteChain;
use nllt_core::observable::Observable;
use nllt_core::sim::{
    characteristic_function, empirical_distribution, exact_distribution, CfMode, NonconvInstance,
    SimConfig,
};
use nllt_core::variance::{s_ell_squared, sigma_squared_estimate};

fn instance_a() -> NonconvInstance {
    let chain = FiniteChain::validate(
        vec!["-1".into(), "1".into()],
        vec![vec![0.5, 0.5], vec![0.5, 0.5]],
    )
    .unwrap();
    let obs = Observable::build(2, vec![-2.0, 0.0, 0.0, 2.0], None, &chain).unwrap();
    NonconvInstance::from_parts(chain, obs).unwrap()
}

fn instance_b() -> NonconvInstance {
    let chain = FiniteChain::validate(
        vec!["-1".into(), "1".into()],
        vec![vec![0.7, 0.3], vec![0.3, 0.7]],
    )
    .unwrap();
    let obs = Observable::build(2, vec![-2.0, 0.0, 0.0, 2.0], None, &chain).unwrap();
    NonconvInstance::from_parts(chain, obs).unwrap()
}

#[test]
fn empirical_tracks_exact_for_small_horizons() {
    for (name, inst) in [("A", instance_a()), ("B", instance_b())] {
        for n in 1..=5 {
            let exact = exact_distribution(&inst, n).unwrap();
            let config = SimConfig::new(n, 100_000, 0xAB + n as u64, 4);
            let emp = empirical_distribution(&inst, &config).unwrap();
            let tv = emp.tv_distance(&exact);
            assert!(tv <= 0.01, "instance {name}, N = {n}: TV = {tv}");
        }
    }
}

#[test]
fn exact_masses_sum_to_one() {
    for inst in [instance_a(), instance_b()] {
        for n in 1..=4 {
            let d = exact_distribution(&inst, n).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-12);
            // support strictly ascending
            for w in d.support().windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }
}

#[test]
fn cf_from_sampling_matches_enumeration_within_noise() {
    let inst = instance_b();
    let thetas = [0.4, 0.9, 2.2];
    let exact = characteristic_function(&inst, 3, &thetas, CfMode::Exact, None).unwrap();
    let config = SimConfig::new(3, 400_000, 77, 8);
    let mc = characteristic_function(&inst, 3, &thetas, CfMode::MonteCarlo, Some(&config)).unwrap();
    for (e, m) in exact.phi.iter().zip(&mc.phi) {
        // 3-sigma noise on each CF coordinate is about 3/sqrt(M)
        assert!((e - m).norm() < 6.0 / (400_000_f64).sqrt());
    }
}

#[test]
fn variance_engine_reproduces_classical_markov_variance() {
    // l = 1: the Poisson-equation value must agree with the Monte Carlo
    // estimate within 3 standard errors
    let chain = FiniteChain::validate(
        vec!["-1".into(), "1".into()],
        vec![vec![0.7, 0.3], vec![0.3, 0.7]],
    )
    .unwrap();
    let obs = Observable::build(1, vec![-1.0, 1.0], None, &chain).unwrap();
    let inst = NonconvInstance::from_parts(chain, obs).unwrap();
    let s2 = s_ell_squared(inst.chain(), inst.decomposition(), None).unwrap();
    assert!((s2 - 7.0 / 3.0).abs() < 1e-10);
    let est = sigma_squared_estimate(&inst, &[256, 512, 1024], 40_000, 5, 8).unwrap();
    assert!(
        (est.sigma2 - s2).abs() <= 3.0 * est.stderr + 0.01,
        "sigma2 {} vs s2 {s2} (stderr {})",
        est.sigma2,
        est.stderr
    );
}

#[test]
fn seeding_contract_is_worker_invariant_end_to_end() {
    let inst = instance_b();
    let reference = empirical_distribution(&inst, &SimConfig::new(32, 5000, 123, 1)).unwrap();
    for workers in [2, 8] {
        let alt = empirical_distribution(&inst, &SimConfig::new(32, 5000, 123, workers)).unwrap();
        assert_eq!(reference.support(), alt.support());
        assert_eq!(reference.mass(), alt.mass());
    }
}

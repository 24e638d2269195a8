mod common;

use common::{catalog, contract, heston, PAYOFFS};
use geoasian_core::laplace::price_with;
use geoasian_core::lognormal::{geometric_asian_price, log_average_mgf};
use geoasian_core::mc::{mc_log_average_mgf, mc_martingale_mean, mc_price, mc_price_batch, SimConfig};
use geoasian_core::model::*;
use geoasian_core::{AveragePayoffKind, ContourConfig, ContractSpec, SolverConfig};

fn sim(n_paths: usize, n_steps: usize, seed: u64, model: &ModelSpec) -> SimConfig {
    SimConfig {
        n_paths,
        n_steps,
        seed,
        ..Default::default()
    }
    .for_model(model)
}

#[test]
fn martingale_for_every_model() {
    for model in catalog() {
        let ct = contract(AveragePayoffKind::AveragePriceCall);
        let e = mc_martingale_mean(&model, &ct, &sim(100_000, 200, 17, &model)).unwrap();
        assert!((e.mean - 1.0).abs() < 4.0 * e.std_error, "{}: {} ± {}", model.name(), e.mean, e.std_error);
    }
}

#[test]
fn antithetic_pairs_reduce_the_standard_error() {
    let model = ModelSpec::Heston(HestonParams {
        vol_of_vol: 1e-12,
        ..heston()
    });
    let ct = contract(AveragePayoffKind::AveragePriceCall);
    let base = sim(100_000, 20, 5, &model);
    let anti = mc_price(&model, &ct, &SimConfig { antithetic: true, ..base }).unwrap();
    let plain = mc_price(&model, &ct, &SimConfig { antithetic: false, ..base }).unwrap();
    assert!(anti.std_error <= plain.std_error, "{} > {}", anti.std_error, plain.std_error);
    let exact = geometric_asian_price(&ct, 0.2);
    for e in [anti, plain] {
        assert!((e.mean - exact).abs() < 4.0 * e.std_error);
    }
}

#[test]
fn lognormal_average_moments_match() {
    let model = ModelSpec::Heston(HestonParams {
        vol_of_vol: 1e-12,
        ..heston()
    });
    let ct = contract(AveragePayoffKind::AveragePriceCall);
    for u in [0.5, 1.0, 2.0] {
        let e = mc_log_average_mgf(&model, &ct, u, &sim(100_000, 100, 8, &model)).unwrap();
        let exact = log_average_mgf(&ct, 0.2, u);
        assert!((e.mean - exact).abs() < 4.0 * e.std_error, "u = {u}: {} vs {exact}", e.mean);
    }
}

#[test]
fn step_doubling_moves_price_by_less_than_two_standard_errors() {
    let model = ModelSpec::Heston(heston());
    let d = SimConfig::default();
    let contracts: Vec<ContractSpec> = PAYOFFS.iter().map(|&p| contract(p)).collect();
    let coarse = mc_price_batch(&model, &contracts, &SimConfig { n_paths: 100_000, ..d }).unwrap();
    let fine = mc_price_batch(&model, &contracts, &SimConfig { n_paths: 100_000, n_steps: 2 * d.n_steps, ..d }).unwrap();
    for ((a, b), ct) in coarse.iter().zip(&fine).zip(&contracts) {
        assert!((a.mean - b.mean).abs() < 2.0 * a.std_error, "{}: {} vs {}", ct.payoff.name(), a.mean, b.mean);
    }
}

#[test]
fn transform_prices_agree_with_simulation_across_the_catalog() {
    for model in catalog() {
        let fc = functional_characteristics(&model);
        let contracts: Vec<ContractSpec> = PAYOFFS.iter().map(|&p| contract(p)).collect();
        let mc = mc_price_batch(&model, &contracts, &sim(100_000, 1000, 23, &model)).unwrap();
        for (ct, e) in contracts.iter().zip(mc) {
            let p = price_with(ct, &fc, &ContourConfig::default(), &SolverConfig::default()).unwrap();
            assert!(
                (p.price - e.mean).abs() <= 3.0 * e.std_error + p.error_estimate,
                "{} {}: {} vs {} ± {}",
                model.name(),
                ct.payoff.name(),
                p.price,
                e.mean,
                e.std_error
            );
        }
    }
}

#![allow(dead_code)]

use geoasian_core::model::*;
use geoasian_core::{AveragePayoffKind, ContractSpec, SolverConfig};

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn tight() -> SolverConfig {
    SolverConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..Default::default()
    }
}

pub fn heston() -> HestonParams {
    HestonParams {
        mean_reversion: 2.0,
        long_run_var: 0.04,
        vol_of_vol: 0.5,
        correlation: -0.7,
    }
}

pub fn gamma_ou() -> SubordinatorCumulant {
    SubordinatorCumulant::GammaOu {
        intensity: 0.6,
        rate: 15.0,
    }
}

/// Standard parameter set for each of the six catalog models.
pub fn catalog() -> Vec<ModelSpec> {
    let h = heston();
    let normal = JumpLaw::Normal {
        mean: -0.1,
        stdev: 0.15,
    };
    let levy = LevyCumulant {
        diffusion: 1.0,
        jump_intensity: 0.5,
        jump_law: JumpLaw::Kou {
            up_prob: 0.4,
            up_rate: 10.0,
            down_rate: 8.0,
        },
    };
    vec![
        ModelSpec::Heston(h),
        ModelSpec::Bates(BatesParams {
            heston: h,
            jump_intensity: 0.5,
            jump_law: normal,
        }),
        ModelSpec::TurboBates(TurboBatesParams {
            heston: h,
            base_intensity: 0.3,
            var_intensity: 5.0,
            jump_law: normal,
        }),
        ModelSpec::Bns(BnsParams {
            decay: 1.5,
            leverage: -0.5,
            bdlp_cumulant: gamma_ou(),
        }),
        ModelSpec::OuTcLevy(OuTimeChangeParams {
            decay: 1.5,
            subordinator_cumulant: gamma_ou(),
            base_levy_cumulant: levy,
        }),
        ModelSpec::CirTcLevy(CirTimeChangeParams {
            mean_reversion: 2.0,
            long_run: 0.04,
            vol_of_vol: 0.3,
            base_levy_cumulant: levy,
        }),
    ]
}

pub fn contract(payoff: AveragePayoffKind) -> ContractSpec {
    ContractSpec {
        spot: 100.0,
        initial_var: 0.04,
        rate: 0.03,
        dividend_yield: 0.01,
        strike: 100.0,
        maturity: 1.0,
        payoff,
    }
}

pub const PAYOFFS: [AveragePayoffKind; 4] = [
    AveragePayoffKind::AveragePriceCall,
    AveragePayoffKind::AveragePricePut,
    AveragePayoffKind::AverageStrikeCall,
    AveragePayoffKind::AverageStrikePut,
];

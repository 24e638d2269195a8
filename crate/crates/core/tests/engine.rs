mod common;

use common::{c, catalog, contract, heston, tight};
use geoasian_core::closed_forms::{heston_closed_form, KummerSeriesConfig, LinearPath};
use geoasian_core::model::*;
use geoasian_core::riccati::{
    cumulant_average_price, cumulant_average_strike, cumulant_integrated_variance, solve_joint_with,
};
use geoasian_core::{AveragePayoffKind, SolverConfig};
use proptest::prelude::*;

fn heston_strategy() -> impl Strategy<Value = HestonParams> {
    (0.2f64..5.0, 0.01f64..0.2, 0.05f64..1.5, -0.95f64..0.95).prop_map(|(l, t, z, r)| HestonParams {
        mean_reversion: l,
        long_run_var: t,
        vol_of_vol: z,
        correlation: r,
    })
}

fn law_strategy() -> impl Strategy<Value = JumpLaw> {
    prop_oneof![
        (-0.3f64..0.1, 0.01f64..0.4).prop_map(|(mean, stdev)| JumpLaw::Normal { mean, stdev }),
        (0.1f64..0.9, 3.0f64..30.0, 3.0f64..30.0).prop_map(|(p, a, b)| JumpLaw::Kou {
            up_prob: p,
            up_rate: a,
            down_rate: b,
        }),
    ]
}

fn subordinator_strategy() -> impl Strategy<Value = SubordinatorCumulant> {
    prop_oneof![
        (0.1f64..2.0, 5.0f64..30.0).prop_map(|(i, r)| SubordinatorCumulant::GammaOu { intensity: i, rate: r }),
        (0.1f64..2.0, 2.0f64..10.0).prop_map(|(d, g)| SubordinatorCumulant::InverseGaussian { delta: d, gamma: g }),
    ]
}

fn levy_strategy() -> impl Strategy<Value = LevyCumulant> {
    (0.2f64..2.0, 0.0f64..2.0, law_strategy()).prop_map(|(d, i, law)| LevyCumulant {
        diffusion: d,
        jump_intensity: i,
        jump_law: law,
    })
}

fn model_strategy() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        heston_strategy().prop_map(ModelSpec::Heston),
        (heston_strategy(), 0.0f64..2.0, law_strategy()).prop_map(|(h, i, law)| ModelSpec::Bates(BatesParams {
            heston: h,
            jump_intensity: i,
            jump_law: law,
        })),
        (heston_strategy(), 0.0f64..1.0, 0.0f64..20.0, law_strategy()).prop_map(|(h, b, v, law)| {
            ModelSpec::TurboBates(TurboBatesParams {
                heston: h,
                base_intensity: b,
                var_intensity: v,
                jump_law: law,
            })
        }),
        (0.2f64..5.0, -2.0f64..0.0, subordinator_strategy()).prop_map(|(d, r, k)| ModelSpec::Bns(BnsParams {
            decay: d,
            leverage: r,
            bdlp_cumulant: k,
        })),
        (0.2f64..5.0, subordinator_strategy(), levy_strategy()).prop_map(|(d, k, l)| {
            ModelSpec::OuTcLevy(OuTimeChangeParams {
                decay: d,
                subordinator_cumulant: k,
                base_levy_cumulant: l,
            })
        }),
        (0.2f64..5.0, 0.2f64..2.0, 0.05f64..1.5, levy_strategy()).prop_map(|(l, m, e, lv)| {
            ModelSpec::CirTcLevy(CirTimeChangeParams {
                mean_reversion: l,
                long_run: m,
                vol_of_vol: e,
                base_levy_cumulant: lv,
            })
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn martingale_identity(model in model_strategy()) {
        prop_assert!(model.validate().is_ok());
        let report = check_martingale(&model);
        prop_assert!(report.martingale, "{:?}", report);
        let fc = functional_characteristics(&model);
        let zero = c(0.0);
        prop_assert!(fc.f(zero, zero).unwrap().norm() < 1e-12);
        prop_assert!(fc.r(zero, zero).unwrap().norm() < 1e-12);
        prop_assert!(fc.f(c(1.0), zero).unwrap().norm() < 1e-12);
        prop_assert!(fc.r(c(1.0), zero).unwrap().norm() < 1e-12);
        for t in [0.25, 1.0, 5.0] {
            let r = solve_joint_with(&fc, [c(1.0), zero, zero, zero], t, &SolverConfig::default()).unwrap();
            prop_assert!(r.phi.norm() < 1e-9 && r.psi.norm() < 1e-9);
        }
    }

    #[test]
    fn characteristics_are_analytic_in_u(model in model_strategy(), v in -20.0f64..20.0, wr in -0.5f64..0.1, wi in -2.0f64..2.0) {
        let fc = functional_characteristics(&model);
        let (lo, hi) = fc.strip();
        let re = 0.5f64.clamp(lo + 0.1, hi - 0.1);
        let u = C64::new(re, v);
        let w = C64::new(wr, wi);
        let h = 1e-5;
        let i = C64::new(0.0, 1.0);
        for g in [|fc: &FunctionalCharacteristics, u, w| fc.f(u, w), |fc: &FunctionalCharacteristics, u, w| fc.r(u, w)] {
            let dx = (g(&fc, u + h, w).unwrap() - g(&fc, u - h, w).unwrap()) / (2.0 * h);
            let dy = (g(&fc, u + i * h, w).unwrap() - g(&fc, u - i * h, w).unwrap()) / (2.0 * h * i);
            prop_assert!((dx - dy).norm() <= 1e-6 * (1.0 + dx.norm()), "{} vs {}", dx, dy);
        }
    }

    #[test]
    fn jump_cumulant_is_real(law in law_strategy(), zr in -2.0f64..2.0, zi in -30.0f64..30.0) {
        let z = C64::new(zr, zi);
        let a = jump_cumulant(&law, z).unwrap();
        let b = jump_cumulant(&law, z.conj()).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }
}

#[test]
fn kou_cumulant_poles() {
    let law = JumpLaw::Kou {
        up_prob: 0.4,
        up_rate: 10.0,
        down_rate: 8.0,
    };
    for pole in [10.0, -8.0] {
        for dz in [C64::new(5e-8, 0.0), C64::new(-5e-8, 0.0), C64::new(0.0, 5e-8)] {
            if let Ok(k) = jump_cumulant(&law, c(pole) + dz) {
                assert!(k.norm() > 1e6, "{pole}: {k}");
            }
        }
    }
}

#[test]
fn conjugate_symmetry_of_transforms() {
    for model in catalog() {
        let fc = functional_characteristics(&model);
        let base = contract(AveragePayoffKind::AveragePriceCall);
        for v in [0.3, 2.0, 11.0, 37.0] {
            let up = C64::new(1.5, v);
            let a = cumulant_average_price(up, &base, &fc, &tight()).unwrap();
            let b = cumulant_average_price(up.conj(), &base, &fc, &tight()).unwrap();
            assert!((a.conj() - b).norm() <= 1e-9 * a.norm().max(1.0), "{}", model.name());

            let us = C64::new(-0.5, v);
            let a = cumulant_average_strike(us, &base, &fc, &tight()).unwrap();
            let b = cumulant_average_strike(us.conj(), &base, &fc, &tight()).unwrap();
            assert!((a.conj() - b).norm() <= 1e-9 * a.norm().max(1.0), "{}", model.name());

            let w = C64::new(-0.5, v);
            let a = cumulant_integrated_variance(w, 1.0, 0.04, &fc, &tight()).unwrap();
            let b = cumulant_integrated_variance(w.conj(), 1.0, 0.04, &fc, &tight()).unwrap();
            assert!((a.conj() - b).norm() <= 1e-9 * a.norm().max(1.0), "{}", model.name());
        }
    }
}

#[test]
fn semiflow_on_autonomous_systems() {
    for model in catalog() {
        let fc = functional_characteristics(&model);
        for (u1, u2) in [(C64::new(0.5, 3.0), c(0.0)), (C64::new(-0.3, -7.0), C64::new(-0.2, 0.5))] {
            let (s, t) = (0.4, 0.9);
            let zero = c(0.0);
            let whole = solve_joint_with(&fc, [u1, u2, zero, zero], s + t, &tight()).unwrap();
            let first = solve_joint_with(&fc, [u1, u2, zero, zero], s, &tight()).unwrap();
            let second = solve_joint_with(&fc, [u1, first.psi, zero, zero], t, &tight()).unwrap();
            assert!((whole.psi - second.psi).norm() < 1e-8, "{}", model.name());
            assert!((whole.phi - (first.phi + second.phi)).norm() < 1e-8, "{}", model.name());
        }
    }
}

#[test]
fn tolerance_halving_stays_within_error_estimate() {
    for model in catalog() {
        let fc = functional_characteristics(&model);
        for u in [C64::new(1.5, 4.0), C64::new(-0.5, 20.0)] {
            let ct = contract(AveragePayoffKind::AveragePriceCall);
            let cfg = SolverConfig::default();
            let half = SolverConfig {
                rel_tol: cfg.rel_tol / 2.0,
                abs_tol: cfg.abs_tol / 2.0,
                ..cfg
            };
            let t = ct.maturity;
            let zero = c(0.0);
            let a = solve_joint_with(&fc, [zero, zero, u / t, zero], t, &cfg).unwrap();
            let b = solve_joint_with(&fc, [zero, zero, u / t, zero], t, &half).unwrap();
            let ka = a.log_mgf(ct.log_spot(), ct.initial_var);
            let kb = b.log_mgf(ct.log_spot(), ct.initial_var);
            let bound = 10.0 * a.diagnostics.error_estimate * (1.0 + ct.initial_var);
            assert!((ka - kb).norm() <= bound, "{}: {} > {}", model.name(), (ka - kb).norm(), bound);
        }
    }
}

#[test]
fn real_axis_blow_up_is_monotone() {
    let params = HestonParams {
        vol_of_vol: 1.2,
        correlation: 0.5,
        ..heston()
    };
    let fc = functional_characteristics(&ModelSpec::Heston(params));
    let ct = geoasian_core::ContractSpec {
        maturity: 5.0,
        ..contract(AveragePayoffKind::AveragePriceCall)
    };
    let flags: Vec<bool> = (0..=80)
        .map(|i| {
            let u = c(0.5 * i as f64);
            match cumulant_average_price(u, &ct, &fc, &SolverConfig::default()) {
                Ok(k) => !k.is_finite(),
                Err(e) => {
                    assert!(e.is_moment_failure(), "{e}");
                    true
                }
            }
        })
        .collect();
    let first = flags.iter().position(|&b| b).expect("explosion on the real axis");
    assert!(first > 2);
    assert!(flags[first..].iter().all(|&b| b));
}

#[test]
fn closed_form_phi_is_branch_continuous() {
    let cfg = KummerSeriesConfig::default();
    for u in [C64::new(1.5, 40.0), C64::new(-0.8, -60.0), C64::new(2.0, 15.0)] {
        for strike in [false, true] {
            let maturity = 2.0;
            let path = if strike {
                LinearPath::average_strike(u, maturity)
            } else {
                LinearPath::average_price(u, maturity)
            };
            let phis: Vec<C64> = (1..=256)
                .map(|i| heston_closed_form(path, maturity * i as f64 / 256.0, &heston(), &cfg).unwrap().phi)
                .collect();
            for w in phis.windows(2) {
                assert!((w[1].im - w[0].im).abs() < std::f64::consts::PI, "{u}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

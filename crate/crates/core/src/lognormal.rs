//! Geometric Asian prices when the log-price is a Brownian motion with
//! constant volatility. Used as a degenerate-model reference.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::contract::{AveragePayoffKind, ContractSpec};

fn n(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

/// Mean and variance of `log Ŝ_T`.
pub fn log_average_moments(contract: &ContractSpec, vol: f64) -> (f64, f64) {
    let t = contract.maturity;
    let mean = contract.log_spot() + (contract.carry() - 0.5 * vol * vol) * t / 2.0;
    (mean, vol * vol * t / 3.0)
}

/// `log E[Ŝ_T^u]` for real `u`.
pub fn log_average_mgf(contract: &ContractSpec, vol: f64, u: f64) -> f64 {
    let (m, v) = log_average_moments(contract, vol);
    u * m + 0.5 * u * u * v
}

/// Time-zero price of any of the four geometric Asian payoffs.
pub fn geometric_asian_price(contract: &ContractSpec, vol: f64) -> f64 {
    let (m, v) = log_average_moments(contract, vol);
    let disc = contract.discount();
    let mean_avg = (m + 0.5 * v).exp();
    match contract.payoff {
        AveragePayoffKind::AveragePriceCall | AveragePayoffKind::AveragePricePut => {
            let k = contract.strike;
            let sd = v.sqrt();
            if sd == 0.0 {
                let intrinsic = contract.payoff.payoff(mean_avg, 0.0, k);
                return disc * intrinsic;
            }
            let d1 = (m - k.ln() + v) / sd;
            let d2 = d1 - sd;
            if contract.payoff == AveragePayoffKind::AveragePriceCall {
                disc * (mean_avg * n(d1) - k * n(d2))
            } else {
                disc * (k * n(-d2) - mean_avg * n(-d1))
            }
        }
        AveragePayoffKind::AverageStrikeCall | AveragePayoffKind::AverageStrikePut => {
            // exchange of two jointly lognormal variables, var(log S_T − log Ŝ) = σ²T/3
            let forward = contract.spot * (contract.carry() * contract.maturity).exp();
            let sd = (vol * vol * contract.maturity / 3.0).sqrt();
            if sd == 0.0 {
                return disc * contract.payoff.payoff(mean_avg, forward, 0.0);
            }
            let d1 = ((forward / mean_avg).ln() + 0.5 * sd * sd) / sd;
            let d2 = d1 - sd;
            if contract.payoff == AveragePayoffKind::AverageStrikeCall {
                disc * (forward * n(d1) - mean_avg * n(d2))
            } else {
                disc * (mean_avg * n(-d2) - forward * n(-d1))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn contract(payoff: AveragePayoffKind) -> ContractSpec {
        ContractSpec {
            spot: 100.0,
            initial_var: 0.04,
            rate: 0.05,
            dividend_yield: 0.01,
            strike: 100.0,
            maturity: 1.0,
            payoff,
        }
    }

    #[test]
    fn put_call_parity() {
        let c = geometric_asian_price(&contract(AveragePayoffKind::AveragePriceCall), 0.2);
        let p = geometric_asian_price(&contract(AveragePayoffKind::AveragePricePut), 0.2);
        let k = contract(AveragePayoffKind::AveragePriceCall);
        let fwd = log_average_mgf(&k, 0.2, 1.0).exp();
        assert_abs_diff_eq!(c - p, k.discount() * (fwd - 100.0), epsilon = 1e-10);

        let c = geometric_asian_price(&contract(AveragePayoffKind::AverageStrikeCall), 0.2);
        let p = geometric_asian_price(&contract(AveragePayoffKind::AverageStrikePut), 0.2);
        let s_fwd = 100.0 * (0.04f64).exp();
        assert_abs_diff_eq!(c - p, k.discount() * (s_fwd - fwd), epsilon = 1e-10);
    }

    #[test]
    fn quadrature_oracle() {
        // integrate the discounted payoff against the normal density of log Ŝ
        let k = contract(AveragePayoffKind::AveragePriceCall);
        let (m, v) = log_average_moments(&k, 0.3);
        let sd = v.sqrt();
        let steps = 20_000;
        let (lo, hi) = (m - 12.0 * sd, m + 12.0 * sd);
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let x = lo + (i as f64 + 0.5) * h;
            let dens = (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
            acc += (x.exp() - 100.0).max(0.0) * dens * h;
        }
        let price = geometric_asian_price(&k, 0.3);
        assert_abs_diff_eq!(price, k.discount() * acc, epsilon = 1e-6);
    }
}

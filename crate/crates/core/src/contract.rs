use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Continuously monitored geometric Asian payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AveragePayoffKind {
    /// `(Ŝ_T − K)₊`
    AveragePriceCall,
    /// `(K − Ŝ_T)₊`
    AveragePricePut,
    /// `(S_T − Ŝ_T)₊`
    AverageStrikeCall,
    /// `(Ŝ_T − S_T)₊`
    AverageStrikePut,
}

impl AveragePayoffKind {
    pub fn is_average_price(self) -> bool {
        matches!(self, Self::AveragePriceCall | Self::AveragePricePut)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AveragePriceCall => "AveragePriceCall",
            Self::AveragePricePut => "AveragePricePut",
            Self::AverageStrikeCall => "AverageStrikeCall",
            Self::AverageStrikePut => "AverageStrikePut",
        }
    }

    /// Undiscounted payoff given the geometric average and terminal price.
    pub fn payoff(self, avg: f64, terminal: f64, strike: f64) -> f64 {
        match self {
            Self::AveragePriceCall => (avg - strike).max(0.0),
            Self::AveragePricePut => (strike - avg).max(0.0),
            Self::AverageStrikeCall => (terminal - avg).max(0.0),
            Self::AverageStrikePut => (avg - terminal).max(0.0),
        }
    }
}

/// Option contract on `S_t = exp((r − q)t + X_t)` with `X_0 = log S_0`.
///
/// The geometric average is `Ŝ_T = exp((1/T)∫₀ᵀ log S_s ds)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContractSpec {
    pub spot: f64,
    pub initial_var: f64,
    pub rate: f64,
    pub dividend_yield: f64,
    /// Ignored by average-strike payoffs.
    pub strike: f64,
    pub maturity: f64,
    pub payoff: AveragePayoffKind,
}

impl ContractSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(invalid("spot", "must be finite and > 0"));
        }
        if !(self.initial_var > 0.0 && self.initial_var.is_finite()) {
            return Err(invalid("initialVar", "must be finite and > 0"));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(invalid("maturity", "must be finite and > 0"));
        }
        if !self.rate.is_finite() {
            return Err(invalid("rate", "must be finite"));
        }
        if !self.dividend_yield.is_finite() {
            return Err(invalid("dividendYield", "must be finite"));
        }
        if self.payoff.is_average_price() && !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(invalid("strike", "must be finite and > 0 for average-price payoffs"));
        }
        Ok(())
    }

    pub fn log_spot(&self) -> f64 {
        self.spot.ln()
    }

    pub fn carry(&self) -> f64 {
        self.rate - self.dividend_yield
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        Self { strike, ..*self }
    }

    pub fn with_payoff(&self, payoff: AveragePayoffKind) -> Self {
        Self { payoff, ..*self }
    }
}

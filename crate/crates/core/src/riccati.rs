//! Generalized Riccati equations for the joint law of `(X_T, V_T, Y_T, Z_T)`
//! where `Y = ∫X ds` and `Z = ∫V ds`.
//!
//! With first argument `x(t) = u₁ + u₃t` the exponents solve
//!
//! ```text
//! Φ' = F(x(t), Ψ),        Φ(0) = 0
//! Ψ' = R(x(t), Ψ) + u₄,   Ψ(0) = u₂
//! ```
//!
//! and `log E[e^{u₁X_T + u₂V_T + u₃Y_T + u₄Z_T}] = Φ + (u₁ + u₃T)X₀ + ΨV₀`.
//! `Φ` is integrated alongside `Ψ`, so no logarithm is ever taken and the
//! exponent is automatically branch-continuous.

use serde::{Deserialize, Serialize};

use crate::contract::ContractSpec;
use crate::error::{Error, Result};
use crate::model::{functional_characteristics, FunctionalCharacteristics, ModelSpec, C64};
use crate::ode::{self, Tolerances};

/// `|Ψ|` above which the solution is declared to explode.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Defaults to `T / 200` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            initial_step: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(crate::error::invalid("relTol/absTol", "tolerances must be > 0"));
        }
        if self.max_steps == 0 {
            return Err(crate::error::invalid("maxSteps", "must be >= 1"));
        }
        Ok(())
    }

    fn tolerances(&self, horizon: f64) -> Tolerances {
        Tolerances {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
            initial_step: self.initial_step.unwrap_or(horizon / 200.0),
            blow_up: BLOW_UP_THRESHOLD,
        }
    }
}

/// Transform query `(u₁, u₂, u₃, u₄)` at horizon `T`.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiProblem<'a> {
    pub u1: C64,
    pub u2: C64,
    pub u3: C64,
    pub u4: C64,
    pub horizon: f64,
    pub model: &'a ModelSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveDiagnostics {
    pub steps: usize,
    pub rejected_steps: usize,
    pub final_step: f64,
    pub rhs_evals: usize,
    /// Accumulated local error estimate of `(Φ, Ψ)`.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantResult {
    pub phi: C64,
    pub psi: C64,
    /// Coefficient of `X₀`, `u₁ + u₃T`.
    pub x_coeff: C64,
    pub diagnostics: SolveDiagnostics,
}

impl CumulantResult {
    /// `Φ + x_coeff·X₀ + Ψ·V₀`.
    pub fn log_mgf(&self, log_spot: f64, initial_var: f64) -> C64 {
        self.phi + self.x_coeff * log_spot + self.psi * initial_var
    }
}

/// Solves the joint Riccati system for a catalog model.
pub fn solve_joint(problem: &RiccatiProblem<'_>, config: &SolverConfig) -> Result<CumulantResult> {
    let fc = functional_characteristics(problem.model);
    solve_joint_with(
        &fc,
        [problem.u1, problem.u2, problem.u3, problem.u4],
        problem.horizon,
        config,
    )
}

/// Solves the joint Riccati system for arbitrary characteristics.
pub fn solve_joint_with(
    fc: &FunctionalCharacteristics,
    u: [C64; 4],
    horizon: f64,
    config: &SolverConfig,
) -> Result<CumulantResult> {
    let [u1, u2, u3, u4] = u;
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(crate::error::invalid("horizon", "must be finite and >= 0"));
    }
    let start = u1.re;
    let end = u1.re + u3.re * horizon;
    if !fc.in_strip(start) {
        return Err(Error::DomainExit {
            t: 0.0,
            detail: format!("Re(u1) = {start} outside strip {:?}", fc.strip()),
        });
    }
    if !fc.in_strip(end) {
        let (lo, hi) = fc.strip();
        let edge = if end >= hi { hi } else { lo };
        let t = (edge - start) / u3.re;
        return Err(Error::DomainExit {
            t,
            detail: format!("first argument path reaches Re = {end} outside strip {:?}", fc.strip()),
        });
    }

    let rhs = |t: f64, y: &[C64; 2]| -> Result<[C64; 2]> {
        let x = u1 + u3 * t;
        let psi = y[1];
        let wrap = |e: Error| match e {
            Error::Domain { what, arg } => Error::DomainExit {
                t,
                detail: format!("{what} at {arg}"),
            },
            other => other,
        };
        let f = fc.f(x, psi).map_err(wrap)?;
        let r = fc.r(x, psi).map_err(wrap)?;
        Ok([f, r + u4])
    };
    let (y, stats) = ode::integrate(rhs, [C64::new(0.0, 0.0), u2], horizon, &config.tolerances(horizon))?;
    Ok(CumulantResult {
        phi: y[0],
        psi: y[1],
        x_coeff: u1 + u3 * horizon,
        diagnostics: SolveDiagnostics {
            steps: stats.steps,
            rejected_steps: stats.rejected_steps,
            final_step: stats.final_step,
            rhs_evals: stats.rhs_evals,
            error_estimate: stats.error_estimate,
        },
    })
}

/// Deterministic drift contribution of `log Ŝ_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftConvention {
    /// `Ŝ_T` is the geometric average of `S_t = e^{(r−q)t + X_t}`, so the
    /// drift of `log Ŝ_T` is `(r − q)T/2`. Used throughout the library.
    HalfMaturity,
    /// Drift `(r − q)` independent of maturity. Kept only for comparison.
    Literal,
}

impl DriftConvention {
    pub fn average_drift(self, contract: &ContractSpec) -> f64 {
        match self {
            DriftConvention::HalfMaturity => 0.5 * contract.carry() * contract.maturity,
            DriftConvention::Literal => contract.carry(),
        }
    }
}

/// `κ(u) = log E[Ŝ_T^u]` together with solver diagnostics.
pub fn average_price_cumulant_detailed(
    u: C64,
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    config: &SolverConfig,
) -> Result<(C64, SolveDiagnostics)> {
    let t = contract.maturity;
    let zero = C64::new(0.0, 0.0);
    let res = solve_joint_with(fc, [zero, zero, u / t, zero], t, config)?;
    let drift = u * DriftConvention::HalfMaturity.average_drift(contract);
    Ok((drift + res.log_mgf(contract.log_spot(), contract.initial_var), res.diagnostics))
}

/// Cumulant of the log geometric average, `κ(T, u) = log E[Ŝ_T^u]`.
pub fn cumulant_average_price(
    u: C64,
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    config: &SolverConfig,
) -> Result<C64> {
    average_price_cumulant_detailed(u, contract, fc, config).map(|(k, _)| k)
}

/// `κ(u) = log E[Ŝ_T^u S_T^{1−u}]` together with solver diagnostics.
pub fn average_strike_cumulant_detailed(
    u: C64,
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    config: &SolverConfig,
) -> Result<(C64, SolveDiagnostics)> {
    let t = contract.maturity;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let res = solve_joint_with(fc, [one - u, zero, u / t, zero], t, config)?;
    let drift = u * DriftConvention::HalfMaturity.average_drift(contract) + (one - u) * (contract.carry() * t);
    Ok((drift + res.log_mgf(contract.log_spot(), contract.initial_var), res.diagnostics))
}

/// Joint cumulant of geometric average and terminal price,
/// `κ(T, u) = log E[Ŝ_T^u S_T^{1−u}]`, driving the average-strike payoff.
pub fn cumulant_average_strike(
    u: C64,
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    config: &SolverConfig,
) -> Result<C64> {
    average_strike_cumulant_detailed(u, contract, fc, config).map(|(k, _)| k)
}

/// `log E[e^{wZ_t}]` with `Z_t = ∫₀ᵗ V_s ds`.
pub fn cumulant_integrated_variance(
    w: C64,
    t: f64,
    initial_var: f64,
    fc: &FunctionalCharacteristics,
    config: &SolverConfig,
) -> Result<C64> {
    let zero = C64::new(0.0, 0.0);
    let res = solve_joint_with(fc, [zero, zero, zero, w], t, config)?;
    Ok(res.phi + res.psi * initial_var)
}

/// Characteristics under the share measure: `F¹(u, w) = F(u + 1, w)`,
/// `R¹(u, w) = R(u + 1, w)`.
pub fn numeraire_shift(fc: &FunctionalCharacteristics) -> FunctionalCharacteristics {
    let f = fc.f_arc();
    let r = fc.r_arc();
    let one = C64::new(1.0, 0.0);
    let (lo, hi) = fc.strip();
    FunctionalCharacteristics::from_fns(
        move |u, w| f(u + one, w),
        move |u, w| r(u + one, w),
        (lo - 1.0, hi - 1.0),
    )
}

/// Both sides of the average-strike / average-price duality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityCheck {
    /// `κ` from the average-strike system with argument `ut/T + (1 − u)`.
    pub lhs: C64,
    /// `κ` from the average-price-structured system under the share
    /// measure, where the argument `ut/T` is replaced by `ut/T − u`.
    pub rhs: C64,
}

pub fn duality_check(
    u: C64,
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    config: &SolverConfig,
) -> Result<DualityCheck> {
    let lhs = cumulant_average_strike(u, contract, fc, config)?;
    let t = contract.maturity;
    let zero = C64::new(0.0, 0.0);
    let shifted = numeraire_shift(fc);
    let res = solve_joint_with(&shifted, [-u, zero, u / t, zero], t, config)?;
    let drift = u * DriftConvention::HalfMaturity.average_drift(contract)
        + (C64::new(1.0, 0.0) - u) * (contract.carry() * t);
    // E⁰[e^{X_T}·G] = e^{X₀} E¹[G]; the X₀ coefficient under the share
    // measure, −u + u, vanishes.
    let rhs = drift + contract.log_spot() + res.phi + res.psi * contract.initial_var;
    Ok(DualityCheck { lhs, rhs })
}

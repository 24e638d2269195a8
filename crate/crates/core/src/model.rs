//! Affine stochastic volatility model catalog.
//!
//! Every model is described by its functional characteristics `F(u, w)` and
//! `R(u, w)`: the time derivatives at zero of the affine exponents of the
//! joint cumulant generating function of log-price `X` and variance `V`.
//! Martingale compensation is already folded into `F` and `R`, so every valid
//! model satisfies `F(0,0) = R(0,0) = F(1,0) = R(1,0) = 0`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Jump-size law of a compound Poisson component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum JumpLaw {
    /// Gaussian jump sizes with mean `mean` and standard deviation `stdev`.
    Normal { mean: f64, stdev: f64 },
    /// Double-exponential jump sizes: up with probability `up_prob` and
    /// rate `up_rate`, down with rate `down_rate`.
    Kou {
        up_prob: f64,
        up_rate: f64,
        down_rate: f64,
    },
    None,
}

impl JumpLaw {
    /// Open strip `(lo, hi)` of real parts on which the cumulant is finite.
    pub fn strip(&self) -> (f64, f64) {
        match *self {
            JumpLaw::Kou {
                up_rate, down_rate, ..
            } => (-down_rate, up_rate),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Validates the law for use as a log-price jump, which requires a
    /// finite exponential moment at 1.
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::Normal { mean, stdev } => {
                if !mean.is_finite() {
                    return Err(invalid("jumpLaw.mean", "must be finite"));
                }
                if !(stdev >= 0.0) || !stdev.is_finite() {
                    return Err(invalid("jumpLaw.stdev", "must be finite and >= 0"));
                }
            }
            JumpLaw::Kou {
                up_prob,
                up_rate,
                down_rate,
            } => {
                if !(0.0..=1.0).contains(&up_prob) {
                    return Err(invalid("jumpLaw.upProb", "must lie in [0, 1]"));
                }
                if !(up_rate > 1.0) || !up_rate.is_finite() {
                    return Err(invalid(
                        "jumpLaw.upRate",
                        "must exceed 1 so that the jump cumulant is finite at 1",
                    ));
                }
                if !(down_rate > 0.0) || !down_rate.is_finite() {
                    return Err(invalid("jumpLaw.downRate", "must be > 0"));
                }
            }
            JumpLaw::None => {}
        }
        Ok(())
    }
}

/// Cumulant of one unit-intensity compound Poisson jump, `E[e^{zJ}] - 1`.
///
/// Intensities are applied by the caller.
pub fn jump_cumulant(law: &JumpLaw, z: C64) -> Result<C64> {
    match *law {
        JumpLaw::Normal { mean, stdev } => {
            Ok((z * mean + z * z * (0.5 * stdev * stdev)).exp() - 1.0)
        }
        JumpLaw::Kou {
            up_prob,
            up_rate,
            down_rate,
        } => {
            if !(z.re < up_rate && z.re > -down_rate) {
                return Err(Error::Domain {
                    what: "the double-exponential jump cumulant",
                    arg: format!("{z}"),
                });
            }
            Ok(z * (up_prob / (up_rate - z) - (1.0 - up_prob) / (down_rate + z)))
        }
        JumpLaw::None => Ok(C64::new(0.0, 0.0)),
    }
}

/// User-supplied subordinator cumulant with its real-domain bound `ℓ`:
/// the closure must be finite and analytic for `Re(θ) < bound`.
#[derive(Clone)]
pub struct CustomCumulant {
    pub name: String,
    pub bound: f64,
    pub func: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
}

impl fmt::Debug for CustomCumulant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCumulant")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl PartialEq for CustomCumulant {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.bound == other.bound && Arc::ptr_eq(&self.func, &other.func)
    }
}

/// Cumulant `k(θ) = log E[e^{θ Z(1)}]` of a subordinator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase")]
pub enum SubordinatorCumulant {
    /// Compound Poisson with rate `intensity` and `Exp(rate)` jumps:
    /// `k(θ) = intensity·θ / (rate − θ)`. Drives the Gamma-OU variance.
    GammaOu { intensity: f64, rate: f64 },
    /// BDLP of the inverse-Gaussian OU process:
    /// `k(θ) = δθ / sqrt(γ² − 2θ)`.
    InverseGaussian { delta: f64, gamma: f64 },
    #[serde(skip)]
    Custom(CustomCumulant),
}

impl SubordinatorCumulant {
    /// Supremum `ℓ` of real parts where the cumulant exists.
    pub fn bound(&self) -> f64 {
        match self {
            SubordinatorCumulant::GammaOu { rate, .. } => *rate,
            SubordinatorCumulant::InverseGaussian { gamma, .. } => 0.5 * gamma * gamma,
            SubordinatorCumulant::Custom(c) => c.bound,
        }
    }

    pub fn eval(&self, theta: C64) -> Result<C64> {
        if !(theta.re < self.bound()) || !theta.re.is_finite() {
            return Err(Error::Domain {
                what: "the subordinator cumulant",
                arg: format!("{theta}"),
            });
        }
        Ok(match self {
            SubordinatorCumulant::GammaOu { intensity, rate } => theta * *intensity / (*rate - theta),
            SubordinatorCumulant::InverseGaussian { delta, gamma } => {
                theta * *delta / (C64::from(gamma * gamma) - theta * 2.0).sqrt()
            }
            SubordinatorCumulant::Custom(c) => (c.func)(theta),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SubordinatorCumulant::GammaOu { intensity, rate } => {
                if !(*intensity > 0.0) || !intensity.is_finite() {
                    return Err(invalid("subordinator.intensity", "must be > 0"));
                }
                if !(*rate > 0.0) || !rate.is_finite() {
                    return Err(invalid("subordinator.rate", "must be > 0"));
                }
            }
            SubordinatorCumulant::InverseGaussian { delta, gamma } => {
                if !(*delta > 0.0) || !delta.is_finite() {
                    return Err(invalid("subordinator.delta", "must be > 0"));
                }
                if !(*gamma > 0.0) || !gamma.is_finite() {
                    return Err(invalid("subordinator.gamma", "must be > 0"));
                }
            }
            SubordinatorCumulant::Custom(c) => {
                if !(c.bound > 0.0) {
                    return Err(invalid("subordinator.bound", "must be > 0"));
                }
                let at_zero = (c.func)(C64::new(0.0, 0.0));
                if at_zero.norm() > 1e-12 {
                    return Err(invalid("subordinator", "cumulant must vanish at 0"));
                }
            }
        }
        Ok(())
    }
}

/// Lévy process subjected to a random time change: Brownian part with
/// volatility `diffusion` plus compound Poisson jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevyCumulant {
    pub diffusion: f64,
    pub jump_intensity: f64,
    pub jump_law: JumpLaw,
}

impl LevyCumulant {
    /// Uncompensated cumulant `½σ²u² + ν κ_J(u)`.
    pub fn raw(&self, u: C64) -> Result<C64> {
        let jumps = if self.jump_intensity == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            jump_cumulant(&self.jump_law, u)? * self.jump_intensity
        };
        Ok(u * u * (0.5 * self.diffusion * self.diffusion) + jumps)
    }

    /// Martingale-compensated cumulant `θ(u) − uθ(1)`.
    pub fn compensated(&self, u: C64) -> Result<C64> {
        let at_one = self.raw(C64::new(1.0, 0.0))?;
        Ok(self.raw(u)? - u * at_one)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion >= 0.0) || !self.diffusion.is_finite() {
            return Err(invalid("baseLevyCumulant.diffusion", "must be finite and >= 0"));
        }
        if !(self.jump_intensity >= 0.0) || !self.jump_intensity.is_finite() {
            return Err(invalid("baseLevyCumulant.jumpIntensity", "must be finite and >= 0"));
        }
        self.jump_law.validate()
    }

    fn strip(&self) -> (f64, f64) {
        if self.jump_intensity > 0.0 {
            self.jump_law.strip()
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HestonParams {
    pub mean_reversion: f64,
    pub long_run_var: f64,
    pub vol_of_vol: f64,
    pub correlation: f64,
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        positive("meanReversion", self.mean_reversion)?;
        positive("longRunVar", self.long_run_var)?;
        positive("volOfVol", self.vol_of_vol)?;
        if !(-1.0..=1.0).contains(&self.correlation) {
            return Err(invalid("correlation", "must lie in [-1, 1]"));
        }
        Ok(())
    }

    /// Feller condition `ζ² < 2λθ`.
    pub fn satisfies_feller(&self) -> bool {
        self.vol_of_vol * self.vol_of_vol < 2.0 * self.mean_reversion * self.long_run_var
    }

    fn r(&self, u: C64, w: C64) -> C64 {
        let z = self.vol_of_vol;
        (u * u - u) * 0.5 + w * w * (0.5 * z * z) - w * self.mean_reversion
            + u * w * (self.correlation * z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BatesParams {
    pub heston: HestonParams,
    pub jump_intensity: f64,
    pub jump_law: JumpLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TurboBatesParams {
    pub heston: HestonParams,
    pub base_intensity: f64,
    pub var_intensity: f64,
    pub jump_law: JumpLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BnsParams {
    pub decay: f64,
    pub leverage: f64,
    pub bdlp_cumulant: SubordinatorCumulant,
}

/// Lévy process run on the clock `∫V ds` with `V` an OU process driven by a
/// subordinator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OuTimeChangeParams {
    pub decay: f64,
    pub subordinator_cumulant: SubordinatorCumulant,
    pub base_levy_cumulant: LevyCumulant,
}

/// Lévy process run on the clock `∫V ds` with `V` a CIR process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CirTimeChangeParams {
    pub mean_reversion: f64,
    pub long_run: f64,
    pub vol_of_vol: f64,
    pub base_levy_cumulant: LevyCumulant,
}

/// One of the six catalog models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ModelSpec {
    Heston(HestonParams),
    Bates(BatesParams),
    TurboBates(TurboBatesParams),
    #[serde(rename = "BNS")]
    Bns(BnsParams),
    OuTcLevy(OuTimeChangeParams),
    CirTcLevy(CirTimeChangeParams),
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {x}")))
    }
}

fn nonnegative(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {x}")))
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Heston(_) => "Heston",
            ModelSpec::Bates(_) => "Bates",
            ModelSpec::TurboBates(_) => "TurboBates",
            ModelSpec::Bns(_) => "BNS",
            ModelSpec::OuTcLevy(_) => "OuTcLevy",
            ModelSpec::CirTcLevy(_) => "CirTcLevy",
        }
    }

    /// Checks parameter invariants and the martingale conditions.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Heston(h) => h.validate()?,
            ModelSpec::Bates(b) => {
                b.heston.validate()?;
                nonnegative("jumpIntensity", b.jump_intensity)?;
                b.jump_law.validate()?;
            }
            ModelSpec::TurboBates(b) => {
                b.heston.validate()?;
                nonnegative("baseIntensity", b.base_intensity)?;
                nonnegative("varIntensity", b.var_intensity)?;
                b.jump_law.validate()?;
            }
            ModelSpec::Bns(b) => {
                positive("decay", b.decay)?;
                if !(b.leverage <= 0.0) || !b.leverage.is_finite() {
                    return Err(invalid("leverage", "must be finite and <= 0"));
                }
                b.bdlp_cumulant.validate()?;
            }
            ModelSpec::OuTcLevy(p) => {
                positive("decay", p.decay)?;
                p.subordinator_cumulant.validate()?;
                p.base_levy_cumulant.validate()?;
            }
            ModelSpec::CirTcLevy(p) => {
                positive("meanReversion", p.mean_reversion)?;
                positive("longRun", p.long_run)?;
                positive("volOfVol", p.vol_of_vol)?;
                p.base_levy_cumulant.validate()?;
            }
        }
        let report = check_martingale(self);
        if !report.martingale {
            return Err(invalid(
                "model",
                format!(
                    "martingale conditions fail: {}",
                    report.failure.unwrap_or_default()
                ),
            ));
        }
        Ok(())
    }

    /// Non-fatal diagnostics, currently the Feller condition for CIR-type
    /// variance.
    pub fn warnings(&self) -> Vec<String> {
        let feller = match self {
            ModelSpec::Heston(h) => Some(*h),
            ModelSpec::Bates(b) => Some(b.heston),
            ModelSpec::TurboBates(b) => Some(b.heston),
            ModelSpec::CirTcLevy(p) => Some(HestonParams {
                mean_reversion: p.mean_reversion,
                long_run_var: p.long_run,
                vol_of_vol: p.vol_of_vol,
                correlation: 0.0,
            }),
            _ => None,
        };
        match feller {
            Some(h) if !h.satisfies_feller() => vec![format!(
                "Feller condition violated: volOfVol^2 = {:.6} >= 2*meanReversion*longRun = {:.6}; \
                 variance may touch zero, transform pricing remains valid",
                h.vol_of_vol * h.vol_of_vol,
                2.0 * h.mean_reversion * h.long_run_var
            )],
            _ => Vec::new(),
        }
    }
}

/// Signature of a functional characteristic `(u, w) ↦ F(u, w)`.
pub type CharacteristicFn = Arc<dyn Fn(C64, C64) -> Result<C64> + Send + Sync>;

/// The pair `(F, R)` of a model together with the real strip of first
/// arguments on which both are finite at `w = 0`.
#[derive(Clone)]
pub struct FunctionalCharacteristics {
    f: CharacteristicFn,
    r: CharacteristicFn,
    strip: (f64, f64),
}

impl fmt::Debug for FunctionalCharacteristics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalCharacteristics")
            .field("strip", &self.strip)
            .finish_non_exhaustive()
    }
}

impl FunctionalCharacteristics {
    pub fn new(f: CharacteristicFn, r: CharacteristicFn, strip: (f64, f64)) -> Self {
        Self { f, r, strip }
    }

    /// Builds characteristics from plain closures.
    pub fn from_fns<F, R>(f: F, r: R, strip: (f64, f64)) -> Self
    where
        F: Fn(C64, C64) -> Result<C64> + Send + Sync + 'static,
        R: Fn(C64, C64) -> Result<C64> + Send + Sync + 'static,
    {
        Self::new(Arc::new(f), Arc::new(r), strip)
    }

    #[inline]
    pub fn f(&self, u: C64, w: C64) -> Result<C64> {
        (self.f)(u, w)
    }

    #[inline]
    pub fn r(&self, u: C64, w: C64) -> Result<C64> {
        (self.r)(u, w)
    }

    pub fn strip(&self) -> (f64, f64) {
        self.strip
    }

    pub fn in_strip(&self, re: f64) -> bool {
        re > self.strip.0 && re < self.strip.1
    }

    pub(crate) fn f_arc(&self) -> CharacteristicFn {
        self.f.clone()
    }

    pub(crate) fn r_arc(&self) -> CharacteristicFn {
        self.r.clone()
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Compensated jump term `κ(u) − uκ(1)` scaled by an intensity.
fn compensated_jumps(law: JumpLaw, intensity: f64) -> impl Fn(C64) -> Result<C64> + Send + Sync {
    move |u: C64| {
        if intensity == 0.0 {
            return Ok(c(0.0));
        }
        let at_one = jump_cumulant(&law, c(1.0))?;
        Ok((jump_cumulant(&law, u)? - u * at_one) * intensity)
    }
}

/// Functional characteristics `(F, R)` of a catalog model.
pub fn functional_characteristics(model: &ModelSpec) -> FunctionalCharacteristics {
    let all = (f64::NEG_INFINITY, f64::INFINITY);
    match model.clone() {
        ModelSpec::Heston(h) => {
            let drift = h.mean_reversion * h.long_run_var;
            FunctionalCharacteristics::from_fns(
                move |_u, w| Ok(w * drift),
                move |u, w| Ok(h.r(u, w)),
                all,
            )
        }
        ModelSpec::Bates(b) => {
            let h = b.heston;
            let drift = h.mean_reversion * h.long_run_var;
            let jumps = compensated_jumps(b.jump_law, b.jump_intensity);
            let strip = if b.jump_intensity > 0.0 { b.jump_law.strip() } else { all };
            FunctionalCharacteristics::from_fns(
                move |u, w| Ok(w * drift + jumps(u)?),
                move |u, w| Ok(h.r(u, w)),
                strip,
            )
        }
        ModelSpec::TurboBates(b) => {
            let h = b.heston;
            let drift = h.mean_reversion * h.long_run_var;
            let base = compensated_jumps(b.jump_law, b.base_intensity);
            let state = compensated_jumps(b.jump_law, b.var_intensity);
            let strip = if b.base_intensity > 0.0 || b.var_intensity > 0.0 {
                b.jump_law.strip()
            } else {
                all
            };
            FunctionalCharacteristics::from_fns(
                move |u, w| Ok(w * drift + base(u)?),
                move |u, w| Ok(h.r(u, w) + state(u)?),
                strip,
            )
        }
        ModelSpec::Bns(b) => {
            let lambda = b.decay;
            let rho = b.leverage;
            let strip = if rho < 0.0 {
                (b.bdlp_cumulant.bound() / rho, f64::INFINITY)
            } else {
                all
            };
            let k = b.bdlp_cumulant;
            FunctionalCharacteristics::from_fns(
                move |u, w| {
                    let k_rho = k.eval(c(rho))?;
                    Ok((k.eval(w + u * rho)? - u * k_rho) * lambda)
                },
                move |u, w| Ok((u * u - u) * 0.5 - w * lambda),
                strip,
            )
        }
        ModelSpec::OuTcLevy(p) => {
            let lambda = p.decay;
            let k = p.subordinator_cumulant;
            let levy = p.base_levy_cumulant;
            FunctionalCharacteristics::from_fns(
                move |_u, w| Ok(k.eval(w)? * lambda),
                move |u, w| Ok(levy.compensated(u)? - w * lambda),
                levy.strip(),
            )
        }
        ModelSpec::CirTcLevy(p) => {
            let drift = p.mean_reversion * p.long_run;
            let lambda = p.mean_reversion;
            let eta2 = p.vol_of_vol * p.vol_of_vol;
            let levy = p.base_levy_cumulant;
            FunctionalCharacteristics::from_fns(
                move |_u, w| Ok(w * drift),
                move |u, w| Ok(w * w * (0.5 * eta2) - w * lambda + levy.compensated(u)?),
                levy.strip(),
            )
        }
    }
}

/// Outcome of the sufficient martingale conditions check.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    pub conservative: bool,
    pub martingale: bool,
    pub chi0: f64,
    pub chi1: f64,
    /// Name and value of the first offending quantity.
    pub failure: Option<String>,
}

const MARTINGALE_TOL: f64 = 1e-12;

/// Checks `F(0,0) = R(0,0) = F(1,0) = R(1,0) = 0` and finiteness of
/// `χ(u) = ∂R/∂w(u, 0)` at `u ∈ {0, 1}`. Never fails; offending quantities
/// are reported.
pub fn check_martingale(model: &ModelSpec) -> MartingaleReport {
    check_martingale_characteristics(&functional_characteristics(model))
}

pub fn check_martingale_characteristics(fc: &FunctionalCharacteristics) -> MartingaleReport {
    let zero = c(0.0);
    let one = c(1.0);
    let eval = |name: &str, v: Result<C64>| -> (f64, Option<String>) {
        match v {
            Ok(z) if z.norm() < MARTINGALE_TOL => (z.norm(), None),
            Ok(z) => (z.norm(), Some(format!("|{name}| = {:.3e}", z.norm()))),
            Err(e) => (f64::NAN, Some(format!("{name} not evaluable: {e}"))),
        }
    };
    let chi = |u: C64| -> f64 {
        let h = 1e-6;
        match (fc.r(u, c(h)), fc.r(u, c(-h))) {
            (Ok(a), Ok(b)) => ((a - b) / (2.0 * h)).re,
            _ => f64::NAN,
        }
    };
    let chi0 = chi(zero);
    let chi1 = chi(one);

    let (_, f00) = eval("F(0,0)", fc.f(zero, zero));
    let (_, r00) = eval("R(0,0)", fc.r(zero, zero));
    let (_, f10) = eval("F(1,0)", fc.f(one, zero));
    let (_, r10) = eval("R(1,0)", fc.r(one, zero));
    let chi_failure = if !chi0.is_finite() {
        Some(format!("chi(0) = {chi0} is not finite"))
    } else if !chi1.is_finite() {
        Some(format!("chi(1) = {chi1} is not finite"))
    } else {
        None
    };

    let conservative_failure = f00.or(r00).or(chi_failure.clone());
    let failure = conservative_failure.clone().or(f10).or(r10);
    MartingaleReport {
        conservative: conservative_failure.is_none(),
        martingale: failure.is_none(),
        chi0,
        chi1,
        failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn std_heston() -> HestonParams {
        HestonParams {
            mean_reversion: 2.0,
            long_run_var: 0.04,
            vol_of_vol: 0.5,
            correlation: -0.7,
        }
    }

    #[test]
    fn normal_jump_cumulant_values() {
        let degenerate = JumpLaw::Normal { mean: 0.0, stdev: 0.0 };
        assert_eq!(jump_cumulant(&degenerate, c(5.0)).unwrap(), c(0.0));
        let law = JumpLaw::Normal { mean: 0.1, stdev: 0.2 };
        let k = jump_cumulant(&law, c(1.0)).unwrap();
        assert_abs_diff_eq!(k.re, 0.12f64.exp() - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.re, 0.127497, epsilon = 1e-6);
    }

    #[test]
    fn kou_jump_cumulant_values() {
        let law = JumpLaw::Kou {
            up_prob: 0.5,
            up_rate: 10.0,
            down_rate: 10.0,
        };
        assert_eq!(jump_cumulant(&law, c(0.0)).unwrap(), c(0.0));
        let k = jump_cumulant(&law, c(2.0)).unwrap();
        assert_abs_diff_eq!(k.re, 2.0 * (0.5 / 8.0 - 0.5 / 12.0), epsilon = 1e-15);
        assert_abs_diff_eq!(k.re, 0.0416667, epsilon = 1e-7);
        assert!(matches!(jump_cumulant(&law, c(10.0)), Err(Error::Domain { .. })));
        assert!(matches!(jump_cumulant(&law, c(-10.5)), Err(Error::Domain { .. })));
    }

    #[test]
    fn kou_has_poles_at_rates() {
        let law = JumpLaw::Kou {
            up_prob: 0.3,
            up_rate: 4.0,
            down_rate: 6.0,
        };
        for k in 0..8 {
            let angle = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / 8.0;
            let eps = C64::from_polar(1e-7, angle);
            let near_up = c(4.0) + eps;
            if near_up.re < 4.0 {
                assert!(jump_cumulant(&law, near_up).unwrap().norm() > 1e6);
            }
            let near_down = c(-6.0) - eps;
            if near_down.re > -6.0 {
                assert!(jump_cumulant(&law, near_down).unwrap().norm() > 1e6);
            }
        }
    }

    #[test]
    fn heston_characteristics_examples() {
        let fc = functional_characteristics(&ModelSpec::Heston(std_heston()));
        assert_abs_diff_eq!(fc.f(c(3.0), c(2.0)).unwrap().re, 0.16, epsilon = 1e-15);
        assert_eq!(fc.r(c(1.0), c(0.0)).unwrap(), c(0.0));
        let mut h = std_heston();
        h.correlation = 0.0;
        let fc = functional_characteristics(&ModelSpec::Heston(h));
        assert_eq!(fc.r(c(2.0), c(0.0)).unwrap(), c(1.0));
    }

    #[test]
    fn bns_f_vanishes_at_zero_w_with_zero_leverage() {
        let model = ModelSpec::Bns(BnsParams {
            decay: 1.0,
            leverage: 0.0,
            bdlp_cumulant: SubordinatorCumulant::GammaOu {
                intensity: 0.3,
                rate: 5.0,
            },
        });
        let fc = functional_characteristics(&model);
        let k = SubordinatorCumulant::GammaOu {
            intensity: 0.3,
            rate: 5.0,
        };
        for u in [c(0.3), C64::new(1.5, -2.0)] {
            assert_eq!(fc.f(u, c(0.0)).unwrap(), c(0.0));
            let w = C64::new(0.4, 0.2);
            assert_abs_diff_eq!((fc.f(u, w).unwrap() - k.eval(w).unwrap()).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn heston_martingale_report() {
        let report = check_martingale(&ModelSpec::Heston(std_heston()));
        assert!(report.martingale && report.conservative);
        assert_abs_diff_eq!(report.chi0, -2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(report.chi1, -2.35, epsilon = 1e-8);
    }

    #[test]
    fn broken_compensation_is_detected() {
        let law = JumpLaw::Normal { mean: -0.1, stdev: 0.15 };
        let h = std_heston();
        let nu = 0.8;
        let fc = FunctionalCharacteristics::from_fns(
            move |u, w| Ok(w * (h.mean_reversion * h.long_run_var) + jump_cumulant(&law, u)? * nu),
            move |u, w| Ok(h.r(u, w)),
            (f64::NEG_INFINITY, f64::INFINITY),
        );
        let report = check_martingale_characteristics(&fc);
        assert!(report.conservative);
        assert!(!report.martingale);
        assert!(report.failure.unwrap().contains("F(1,0)"));
    }

    #[test]
    fn feller_violation_is_a_warning_only() {
        let model = ModelSpec::Heston(HestonParams {
            vol_of_vol: 1.0,
            ..std_heston()
        });
        assert!(model.validate().is_ok());
        assert_eq!(model.warnings().len(), 1);
        // the standard set has zeta^2 = 0.25 >= 2 lambda theta = 0.16
        assert_eq!(ModelSpec::Heston(std_heston()).warnings().len(), 1);
        let mild = HestonParams {
            vol_of_vol: 0.3,
            ..std_heston()
        };
        assert!(ModelSpec::Heston(mild).warnings().is_empty());
    }

    #[test]
    fn kou_up_rate_must_exceed_one_for_bates() {
        let model = ModelSpec::Bates(BatesParams {
            heston: std_heston(),
            jump_intensity: 1.0,
            jump_law: JumpLaw::Kou {
                up_prob: 0.5,
                up_rate: 0.9,
                down_rate: 3.0,
            },
        });
        assert!(matches!(
            model.validate(),
            Err(Error::InvalidParameter { name: "jumpLaw.upRate", .. })
        ));
    }

    #[test]
    fn model_round_trips_through_serde() {
        let model = ModelSpec::Bates(BatesParams {
            heston: std_heston(),
            jump_intensity: 0.5,
            jump_law: JumpLaw::Normal { mean: -0.05, stdev: 0.1 },
        });
        let text = serde_json::to_string(&model).unwrap();
        assert!(text.contains("\"variant\":\"Bates\"") && text.contains("\"jumpIntensity\""));
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
    }
}

//! Bromwich-contour pricing of geometric Asian options.
//!
//! With `u = a + iv` the price is `(1/π)∫₀^∞ Re g(v) dv`, where
//!
//! * average price: `g = e^{−rT} K^{1−u} e^{κ(u)} / (u(u − 1))`, `a > 1` for
//!   the call and `a < 0` for the put;
//! * average strike call: `g = e^{−rT} e^{κ_s(u)} / (u(u − 1))`, `a < 0`,
//!   with `κ_s(u) = log E[Ŝ_T^u S_T^{1−u}]`.
//!
//! The average-strike put follows from parity.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::contract::{AveragePayoffKind, ContractSpec};
use crate::error::{Error, Result};
use crate::model::{functional_characteristics, FunctionalCharacteristics, ModelSpec, C64};
use crate::quadrature::GaussLegendre;
use crate::riccati::{average_price_cumulant_detailed, average_strike_cumulant_detailed, SolverConfig};

const PANEL_NODES: usize = 16;
/// Auto half-width stops once `|g| < AUTO_TAIL_RATIO · ∫|g|`.
const AUTO_TAIL_RATIO: f64 = 1e-12;
/// Integrand at the truncation point above this fraction of its peak is
/// reported as a non-decaying tail.
const TAIL_FAILURE_RATIO: f64 = 1e-6;
const MAX_HALF_WIDTH: f64 = 1.048576e6;
/// Closest approach of a refined abscissa to a pole.
const MIN_POLE_DISTANCE: f64 = 1e-3;

/// A contour parameter that is either chosen automatically or fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Setting {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Setting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Setting::Auto => s.serialize_str("auto"),
            Setting::Fixed(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Setting::Fixed(x)),
            Raw::Text(t) if t.eq_ignore_ascii_case("auto") => Ok(Setting::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"auto\", got {t:?}"))),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Auto => write!(f, "auto"),
            Setting::Fixed(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QuadratureRule {
    Simpson,
    #[default]
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ContourConfig {
    pub abscissa: Setting,
    pub half_width: Setting,
    pub nodes: usize,
    pub rule: QuadratureRule,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            abscissa: Setting::Auto,
            half_width: Setting::Auto,
            nodes: 2048,
            rule: QuadratureRule::GaussLegendre,
        }
    }
}

impl ContourConfig {
    /// Checks the node count, the half-width and, for a fixed abscissa, that
    /// it lies on the side of the poles required by `payoff`.
    pub fn validate(&self, payoff: AveragePayoffKind) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::InvalidContour(format!("nodes = {} < 16", self.nodes)));
        }
        if let Setting::Fixed(u) = self.half_width {
            if !(u > 0.0 && u.is_finite()) {
                return Err(Error::InvalidContour(format!("halfWidth = {u} must be finite and > 0")));
            }
        }
        if let Setting::Fixed(a) = self.abscissa {
            let ok = match payoff {
                AveragePayoffKind::AveragePriceCall => a > 1.0,
                _ => a < 0.0,
            };
            if !ok || !a.is_finite() {
                let need = if payoff == AveragePayoffKind::AveragePriceCall { "> 1" } else { "< 0" };
                return Err(Error::InvalidContour(format!(
                    "abscissa = {a} for {}: must be {need}",
                    payoff.name()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PriceResult {
    pub price: f64,
    pub error_estimate: f64,
    pub abscissa_used: f64,
    pub half_width_used: f64,
    pub nodes_used: usize,
    pub ode_evals: usize,
}

/// Which payoff of `e^x` a transform represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    /// `(e^x − K)₊`, `Re u > 1`
    Call,
    /// `(K − e^x)₊`, `Re u < 0`
    Put,
    /// `(e^x − K)₊ − e^x`, `0 < Re u < 1`
    Protected,
}

impl TransformKind {
    pub fn admits(self, re: f64) -> bool {
        match self {
            TransformKind::Call => re > 1.0,
            TransformKind::Put => re < 0.0,
            TransformKind::Protected => re > 0.0 && re < 1.0,
        }
    }

    /// The payoff the transform inverts to.
    pub fn payoff(self, x: f64, strike: f64) -> f64 {
        match self {
            TransformKind::Call => (x.exp() - strike).max(0.0),
            TransformKind::Put => (strike - x.exp()).max(0.0),
            TransformKind::Protected => (x.exp() - strike).max(0.0) - x.exp(),
        }
    }
}

fn pole_check(u: C64) -> Result<()> {
    if u.norm() < 1e-10 || (u - 1.0).norm() < 1e-10 {
        return Err(Error::PoleProximity { u: u.to_string() });
    }
    Ok(())
}

/// `(1/K)^u · K/(u(u − 1))`, the transform shared by all three payoffs;
/// `kind` only fixes the admissible strip.
pub fn payoff_transform(kind: TransformKind, u: C64, strike: f64) -> Result<C64> {
    pole_check(u)?;
    if !(strike > 0.0) {
        return Err(crate::error::invalid("strike", "must be > 0"));
    }
    if !kind.admits(u.re) {
        return Err(Error::InvalidContour(format!("Re u = {} outside the strip of {kind:?}", u.re)));
    }
    Ok((-u * strike.ln()).exp() * strike / (u * (u - 1.0)))
}

/// Inverts `payoff_transform` at `x` on the line `Re u = abscissa`.
///
/// With `d = x − log K`, the part `K e^{ud}/((u − c₁)(u − c₂))`,
/// `c₁,₂ = ½ ± s`, is inverted exactly by residues and removed from the
/// integrand. The poles straddle the contour and `c₁ + c₂ = 1`, which
/// leaves an `O(v⁻⁴)` tail.
pub fn invert_payoff_transform(
    kind: TransformKind,
    strike: f64,
    x: f64,
    abscissa: f64,
    nodes: usize,
    half_width: f64,
) -> Result<f64> {
    if !kind.admits(abscissa) {
        return Err(Error::InvalidContour(format!("abscissa {abscissa} outside the strip of {kind:?}")));
    }
    let d = x - strike.ln();
    let s = (abscissa - 0.5).abs() + 0.25;
    let (lo_pole, hi_pole) = (0.5 - s, 0.5 + s);
    let exact = if d > 0.0 {
        -strike * (lo_pole * d).exp() / (2.0 * s)
    } else {
        -strike * (hi_pole * d).exp() / (2.0 * s)
    };
    let g = |v: f64| -> Result<C64> {
        let u = C64::new(abscissa, v);
        let full = payoff_transform(kind, u, strike)? * (u * x).exp();
        Ok(full - (u * d).exp() * strike / ((u - lo_pole) * (u - hi_pole)))
    };
    let panels = (nodes / PANEL_NODES).max(1);
    let rule = GaussLegendre::new(PANEL_NODES);
    let h = half_width / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = p as f64 * h;
        for (v, w) in rule.mapped(lo, lo + h) {
            acc += g(v)?.re * w;
        }
    }
    Ok(exact + acc / std::f64::consts::PI)
}

fn side(payoff: AveragePayoffKind) -> f64 {
    if payoff == AveragePayoffKind::AveragePriceCall {
        1.0
    } else {
        -1.0
    }
}

/// `κ` of the transform the payoff is priced with, with solver diagnostics.
fn payoff_cumulant(
    u: C64,
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    solver: &SolverConfig,
) -> Result<(C64, usize)> {
    let (k, d) = if contract.payoff.is_average_price() {
        average_price_cumulant_detailed(u, contract, fc, solver)?
    } else {
        average_strike_cumulant_detailed(u, contract, fc, solver)?
    };
    Ok((k, d.rhs_evals))
}

fn moment_exists(a: f64, contract: &ContractSpec, fc: &FunctionalCharacteristics, solver: &SolverConfig) -> Result<bool> {
    match payoff_cumulant(C64::new(a, 0.0), contract, fc, solver) {
        Ok((k, _)) => Ok(k.is_finite()),
        Err(e) if e.is_moment_failure() => Ok(false),
        Err(e) => Err(e),
    }
}

/// Moment-boundary abscissa for the payoff's contour.
///
/// Scans outward from the pole (`1` for the average-price call, `0`
/// otherwise) for the real moment boundary `a*` by doubling and bisection,
/// then returns `min(1 + ¾(a* − 1), 2)` on the right and `max(¾a*, −1)` on
/// the left.
pub fn choose_abscissa(contract: &ContractSpec, model: &ModelSpec, solver: &SolverConfig) -> Result<f64> {
    model.validate()?;
    contract.validate()?;
    choose_abscissa_with(contract, &functional_characteristics(model), solver)
}

pub fn choose_abscissa_with(
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    solver: &SolverConfig,
) -> Result<f64> {
    let sgn = side(contract.payoff);
    let pole = if sgn > 0.0 { 1.0 } else { 0.0 };
    let at = |dist: f64| pole + sgn * dist;
    let ok = |dist: f64| moment_exists(at(dist), contract, fc, solver);
    if !ok(1e-6)? {
        return Err(Error::NoValidAbscissa(format!(
            "no finite moment at {} for {}",
            at(1e-6),
            contract.payoff.name()
        )));
    }
    const CAP: f64 = 64.0;
    let mut good = 1e-6;
    let mut probe = 1.0;
    let boundary = loop {
        if ok(probe)? {
            good = probe;
            if probe >= CAP {
                break f64::INFINITY;
            }
            probe *= 2.0;
        } else {
            let mut bad = probe;
            for _ in 0..60 {
                if bad - good <= 1e-6 * bad {
                    break;
                }
                let mid = 0.5 * (good + bad);
                if ok(mid)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            break good;
        }
    };
    let dist = (0.75 * boundary).min(1.0);
    let a = at(dist);
    if !ok(dist)? {
        return Err(Error::NoValidAbscissa(format!("moment at {a} failed on re-solve")));
    }
    Ok(a)
}

/// Moves the abscissa between the pole and the moment-boundary choice to
/// minimize `log|g(0)|`, the real-axis magnitude of the integrand. This
/// keeps the integrand from being dominated by `K^{1−a}` at extreme strikes.
fn refine_abscissa(
    start: f64,
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    solver: &SolverConfig,
) -> f64 {
    let sgn = side(contract.payoff);
    let pole = if sgn > 0.0 { 1.0 } else { 0.0 };
    let far = (start - pole).abs();
    if far <= MIN_POLE_DISTANCE {
        return start;
    }
    let log_k = if contract.payoff.is_average_price() { contract.strike.ln() } else { 0.0 };
    let h = |dist: f64| -> f64 {
        let a = pole + sgn * dist;
        match payoff_cumulant(C64::new(a, 0.0), contract, fc, solver) {
            Ok((k, _)) if k.re.is_finite() => (1.0 - a) * log_k + k.re - (a * (a - 1.0)).ln(),
            _ => f64::INFINITY,
        }
    };
    // golden section in log-distance from the pole
    let (mut lo, mut hi) = (MIN_POLE_DISTANCE.ln(), far.ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (h(x1.exp()), h(x2.exp()));
    for _ in 0..40 {
        if hi - lo < 1e-3 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = h(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = h(x2.exp());
        }
    }
    let best = 0.5 * (lo + hi);
    let f_best = h(best.exp());
    if f_best <= h(far) {
        pole + sgn * best.exp()
    } else {
        start
    }
}

struct Integrand<'a> {
    contract: &'a ContractSpec,
    fc: &'a FunctionalCharacteristics,
    solver: &'a SolverConfig,
    abscissa: f64,
}

impl Integrand<'_> {
    fn eval(&self, v: f64) -> Result<(C64, usize)> {
        let u = C64::new(self.abscissa, v);
        pole_check(u)?;
        let (k, evals) = payoff_cumulant(u, self.contract, self.fc, self.solver)?;
        let log_k = if self.contract.payoff.is_average_price() {
            (C64::new(1.0, 0.0) - u) * self.contract.strike.ln()
        } else {
            C64::new(0.0, 0.0)
        };
        let g = (k + log_k - self.contract.rate * self.contract.maturity).exp() / (u * (u - 1.0));
        Ok((g, evals))
    }

    fn eval_many(&self, vs: &[f64]) -> Result<(Vec<C64>, usize)> {
        let raw: Vec<Result<(C64, usize)>> = vs.par_iter().map(|&v| self.eval(v)).collect();
        let mut out = Vec::with_capacity(raw.len());
        let mut evals = 0;
        for r in raw {
            let (g, e) = r?;
            out.push(g);
            evals += e;
        }
        Ok((out, evals))
    }
}

/// Panel edges on `[0, U]`: widths grow geometrically from `base` and are
/// capped so that the panels end exactly at `U`.
fn graded_edges(base: f64, half_width: f64, panels: usize) -> Vec<f64> {
    let total = |cap: f64| -> f64 {
        let mut w = base;
        let mut s = 0.0;
        for _ in 0..panels {
            s += w.min(cap);
            w *= 2.0;
        }
        s
    };
    let cap = if total(half_width) <= half_width {
        half_width
    } else if half_width <= base * panels as f64 {
        half_width / panels as f64
    } else {
        let (mut lo, mut hi) = (half_width / panels as f64, half_width);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < half_width {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut edges = Vec::with_capacity(panels + 1);
    edges.push(0.0);
    let mut w = base;
    let mut x = 0.0;
    for _ in 0..panels {
        x += w.min(cap);
        edges.push(x);
        w *= 2.0;
    }
    let scale = half_width / x;
    edges.iter_mut().for_each(|e| *e *= scale);
    edges
}

struct Quadrature {
    integral: f64,
    coarse: f64,
    abs_integral: f64,
    peak: f64,
    evals: usize,
    nodes: usize,
}

fn gauss_panels(f: &Integrand<'_>, edges: &[f64], rule: &GaussLegendre) -> Result<(f64, f64, f64, usize)> {
    let mut vs = Vec::with_capacity(rule.len() * (edges.len() - 1));
    let mut ws = Vec::with_capacity(vs.capacity());
    for p in edges.windows(2) {
        for (v, w) in rule.mapped(p[0], p[1]) {
            vs.push(v);
            ws.push(w);
        }
    }
    let (gs, evals) = f.eval_many(&vs)?;
    let mut re = 0.0;
    let mut abs = 0.0;
    let mut peak: f64 = 0.0;
    for (g, w) in gs.iter().zip(&ws) {
        re += g.re * w;
        abs += g.norm() * w;
        peak = peak.max(g.norm());
    }
    Ok((re, abs, peak, evals))
}

fn integrate(f: &Integrand<'_>, half_width: f64, pole_scale: f64, config: &ContourConfig) -> Result<Quadrature> {
    match config.rule {
        QuadratureRule::GaussLegendre => {
            let mut panels = config.nodes.div_ceil(PANEL_NODES).max(2);
            panels += panels % 2;
            let edges = graded_edges(0.5 * pole_scale, half_width, panels);
            let rule = GaussLegendre::new(PANEL_NODES);
            let (fine, abs, peak, e1) = gauss_panels(f, &edges, &rule)?;
            let merged: Vec<f64> = edges.iter().step_by(2).copied().collect();
            let (coarse, _, _, e2) = gauss_panels(f, &merged, &rule)?;
            Ok(Quadrature {
                integral: fine,
                coarse,
                abs_integral: abs,
                peak,
                evals: e1 + e2,
                nodes: panels * PANEL_NODES,
            })
        }
        QuadratureRule::Simpson => {
            let mut n = config.nodes.max(4);
            n += n % 4;
            let h = half_width / n as f64;
            let vs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
            let (gs, evals) = f.eval_many(&vs)?;
            let simpson = |stride: usize| -> (f64, f64) {
                let m = n / stride;
                let hh = h * stride as f64;
                let (mut re, mut abs) = (0.0, 0.0);
                for j in 0..=m {
                    let wt = if j == 0 || j == m {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    re += wt * gs[j * stride].re;
                    abs += wt * gs[j * stride].norm();
                }
                (re * hh / 3.0, abs * hh / 3.0)
            };
            let (fine, abs) = simpson(1);
            let (coarse, _) = simpson(2);
            let peak = gs.iter().map(|g| g.norm()).fold(0.0, f64::max);
            Ok(Quadrature {
                integral: fine,
                coarse,
                abs_integral: abs,
                peak,
                evals,
                nodes: n + 1,
            })
        }
    }
}

/// Doubles `v` from the pole scale until `|g(v)|` drops below
/// `AUTO_TAIL_RATIO` times a running estimate of `∫|g|`.
fn auto_half_width(f: &Integrand<'_>, pole_scale: f64) -> Result<(f64, usize)> {
    let (g0, mut evals) = f.eval(0.0)?;
    let mut running = g0.norm() * pole_scale;
    let mut peak = g0.norm();
    let mut prev = 0.0;
    let mut v = pole_scale;
    loop {
        let (g, e) = f.eval(v)?;
        evals += e;
        let m = g.norm();
        peak = peak.max(m);
        running += m * (v - prev);
        if m < AUTO_TAIL_RATIO * running && v >= 4.0 * pole_scale {
            return Ok((v, evals));
        }
        if v >= MAX_HALF_WIDTH {
            let ratio = m / peak;
            if ratio > TAIL_FAILURE_RATIO {
                return Err(Error::TailNotDecaying { half_width: v, ratio });
            }
            return Ok((v, evals));
        }
        prev = v;
        v *= 2.0;
    }
}

/// Prices `contract` under `model` by contour integration.
pub fn price(
    contract: &ContractSpec,
    model: &ModelSpec,
    contour: &ContourConfig,
    solver: &SolverConfig,
) -> Result<PriceResult> {
    model.validate()?;
    price_with(contract, &functional_characteristics(model), contour, solver)
}

/// As [`price`], with precomputed functional characteristics.
pub fn price_with(
    contract: &ContractSpec,
    fc: &FunctionalCharacteristics,
    contour: &ContourConfig,
    solver: &SolverConfig,
) -> Result<PriceResult> {
    contract.validate()?;
    solver.validate()?;
    contour.validate(contract.payoff)?;
    if contract.payoff == AveragePayoffKind::AverageStrikePut {
        let call = contract.with_payoff(AveragePayoffKind::AverageStrikeCall);
        let mut res = price_with(&call, fc, contour, solver)?;
        let zero = C64::new(0.0, 0.0);
        let (k_terminal, e1) = payoff_cumulant(zero, &call, fc, solver)?;
        let (k_average, e2) = payoff_cumulant(C64::new(1.0, 0.0), &call, fc, solver)?;
        res.price -= contract.discount() * (k_terminal.re.exp() - k_average.re.exp());
        res.ode_evals += e1 + e2;
        return Ok(res);
    }
    let abscissa = match contour.abscissa {
        Setting::Fixed(a) => a,
        Setting::Auto => {
            let a = choose_abscissa_with(contract, fc, solver)?;
            refine_abscissa(a, contract, fc, solver)
        }
    };
    let f = Integrand {
        contract,
        fc,
        solver,
        abscissa,
    };
    let pole_scale = abscissa.abs().min((abscissa - 1.0).abs()).min(1.0);
    let (half_width, probe_evals) = match contour.half_width {
        Setting::Fixed(u) => (u, 0),
        Setting::Auto => auto_half_width(&f, pole_scale)?,
    };
    let q = integrate(&f, half_width, pole_scale, contour)?;
    let (g_end, end_evals) = f.eval(half_width)?;
    let ratio = g_end.norm() / q.peak.max(f64::MIN_POSITIVE);
    if ratio > TAIL_FAILURE_RATIO {
        return Err(Error::TailNotDecaying { half_width, ratio });
    }
    let pi = std::f64::consts::PI;
    let price = q.integral / pi;
    let error_estimate = (q.integral - q.coarse).abs() / pi
        + g_end.norm() * half_width / pi
        + 10.0 * solver.rel_tol * q.abs_integral / pi;
    Ok(PriceResult {
        price,
        error_estimate,
        abscissa_used: abscissa,
        half_width_used: half_width,
        nodes_used: q.nodes,
        ode_evals: q.evals + probe_evals + end_evals,
    })
}

/// `log E[Ŝ_T^u]` for average-price payoffs and `log E[Ŝ_T^u S_T^{1−u}]`
/// for average-strike payoffs.
pub fn payoff_log_mgf(contract: &ContractSpec, model: &ModelSpec, u: C64, solver: &SolverConfig) -> Result<C64> {
    payoff_cumulant(u, contract, &functional_characteristics(model), solver).map(|(k, _)| k)
}

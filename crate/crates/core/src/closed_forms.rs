//! Analytic and semi-analytic Riccati solutions used to cross-check the
//! numerical engine.
//!
//! Heston: along a linear argument path `x(t) = α + βt` the substitution
//! `ψ = −(2/ζ²)·y'/y` turns the Riccati equation into
//!
//! ```text
//! y'' + (λ − ρζx(t)) y' + (ζ²/4)(x(t)² − x(t)) y = 0.
//! ```
//!
//! Writing `y = exp(μt + νt²/2)·w(t)` with `ν² + p₁ν + q₂ = 0` removes the
//! quadratic potential, a shift `τ = t + m/s` and `z = −sτ²/2` then give
//! Kummer's equation `z w'' + (½ − z) w' − a w = 0` with `a = k/(2s)`.
//! The basis is `M(a, ½, z)` and `τ·M(a + ½, 3/2, z)`.
//!
//! BNS: the variance equation is linear, so `ψ` is a combination of
//! `f₀, f₁, f₂` and `φ` is a one-dimensional quadrature.

use serde::{Deserialize, Serialize};

use crate::contract::AveragePayoffKind;
use crate::error::{invalid, Error, Result};
use crate::model::{jump_cumulant, BatesParams, BnsParams, HestonParams, C64};
use crate::quadrature::adaptive_composite;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KummerSeriesConfig {
    pub max_terms: usize,
    pub tail_tol: f64,
}

impl Default for KummerSeriesConfig {
    fn default() -> Self {
        Self {
            max_terms: 500,
            tail_tol: 1e-15,
        }
    }
}

/// Radius inside which the Maclaurin series is summed directly.
const DIRECT_RADIUS: f64 = 4.0;
/// Step length of the analytic continuation beyond `DIRECT_RADIUS`.
const CONTINUATION_STEP: f64 = 1.5;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn maclaurin(a: C64, b: C64, z: C64, cfg: &KummerSeriesConfig) -> Result<C64> {
    let mut term = c(1.0);
    let mut sum = c(1.0);
    let mut small = 0;
    for n in 0..cfg.max_terms {
        let nf = n as f64;
        term = term * (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        if term.norm() <= cfg.tail_tol * sum.norm() {
            small += 1;
            if small >= 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        if term == c(0.0) {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence(format!(
        "M({a}, {b}, {z}): {} terms, last term {:.3e}",
        cfg.max_terms,
        term.norm()
    )))
}

/// Kummer's confluent hypergeometric function `M(a, b, z) = ₁F₁(a; b; z)`.
///
/// Summed from its Maclaurin series for `|z| ≤ 4`. Further out the series
/// is re-expanded about points on the ray to `z`, using Kummer's equation
/// to generate the local Taylor coefficients; this keeps every partial sum
/// well conditioned for large imaginary arguments.
pub fn kummer_m(a: C64, b: C64, z: C64, cfg: &KummerSeriesConfig) -> Result<C64> {
    kummer_with_derivative(a, b, z, cfg).map(|(m, _)| m)
}

/// `(M(a, b, z), dM/dz)`.
pub fn kummer_with_derivative(a: C64, b: C64, z: C64, cfg: &KummerSeriesConfig) -> Result<(C64, C64)> {
    if b.im == 0.0 && b.re <= 0.0 && b.re.fract() == 0.0 {
        return Err(invalid("b", "must not be a nonpositive integer"));
    }
    let r = z.norm();
    if r <= DIRECT_RADIUS {
        let m = maclaurin(a, b, z, cfg)?;
        let dm = maclaurin(a + 1.0, b + 1.0, z, cfg)? * a / b;
        return Ok((m, dm));
    }
    let dir = z / r;
    let mut z0 = dir * DIRECT_RADIUS;
    let mut w = maclaurin(a, b, z0, cfg)?;
    let mut dw = maclaurin(a + 1.0, b + 1.0, z0, cfg)? * a / b;
    let mut travelled = DIRECT_RADIUS;
    while travelled < r {
        let len = CONTINUATION_STEP.min(r - travelled);
        let h = dir * len;
        let (nw, ndw) = taylor_step(a, b, z0, h, w, dw, cfg)?;
        w = nw;
        dw = ndw;
        z0 += h;
        travelled += len;
    }
    Ok((w, dw))
}

/// Advances `(w, w')` of a solution of Kummer's equation from `z0` to `z0 + h`.
fn taylor_step(
    a: C64,
    b: C64,
    z0: C64,
    h: C64,
    w: C64,
    dw: C64,
    cfg: &KummerSeriesConfig,
) -> Result<(C64, C64)> {
    // z0 c_{n+2} (n+2)(n+1) = (n + a) c_n − (n+1)(n + b − z0) c_{n+1}
    let mut c0 = w;
    let mut c1 = dw;
    let mut hp = h; // h^(n+1)
    let mut val = c0 + c1 * h;
    let mut der = c1;
    let mut small = 0;
    for n in 0..cfg.max_terms {
        let nf = n as f64;
        let c2 = ((a + nf) * c0 - (b + nf - z0) * c1 * (nf + 1.0)) / (z0 * ((nf + 2.0) * (nf + 1.0)));
        let dterm = c2 * hp * (nf + 2.0);
        hp *= h;
        let vterm = c2 * hp;
        val += vterm;
        der += dterm;
        if vterm.norm() <= cfg.tail_tol * val.norm() && dterm.norm() <= cfg.tail_tol * der.norm() {
            small += 1;
            if small >= 3 {
                return Ok((val, der));
            }
        } else {
            small = 0;
        }
        c0 = c1;
        c1 = c2;
    }
    Err(Error::NoConvergence(format!(
        "Kummer continuation step at z0 = {z0} did not converge"
    )))
}

/// Linear first-argument path `x(t) = α + βt` of the Riccati system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPath {
    pub alpha: C64,
    pub beta: C64,
}

impl LinearPath {
    /// Average-price path `ut/T`.
    pub fn average_price(u: C64, maturity: f64) -> Self {
        Self {
            alpha: c(0.0),
            beta: u / maturity,
        }
    }

    /// Average-strike path `ut/T + (1 − u)`.
    pub fn average_strike(u: C64, maturity: f64) -> Self {
        Self {
            alpha: c(1.0) - u,
            beta: u / maturity,
        }
    }

    pub fn at(&self, t: f64) -> C64 {
        self.alpha + self.beta * t
    }

    /// `∫₀ᵗ x(s) ds`.
    pub fn integral(&self, t: f64) -> C64 {
        self.alpha * t + self.beta * (0.5 * t * t)
    }
}

/// `(φ(t), ψ(t))` with `ψ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub phi: C64,
    pub psi: C64,
}

/// Precomputed Kummer reduction of the Heston Riccati equation.
struct HestonKummer {
    mu: C64,
    nu: C64,
    s: C64,
    shift: C64,
    coeffs: [C64; 5],
    a: C64,
    cfg: KummerSeriesConfig,
}

impl HestonKummer {
    fn new(path: LinearPath, p: &HestonParams, cfg: KummerSeriesConfig) -> Result<Self> {
        let z2 = 0.25 * p.vol_of_vol * p.vol_of_vol;
        let rz = p.correlation * p.vol_of_vol;
        let (al, be) = (path.alpha, path.beta);
        let p0 = c(p.mean_reversion) - al * rz;
        let p1 = -be * rz;
        let q0 = (al * al - al) * z2;
        let q1 = (al * be * 2.0 - be) * z2;
        let q2 = be * be * z2;
        let d = (p1 * p1 - q2 * 4.0).sqrt();
        if d.norm() < 1e-12 {
            return Err(Error::NoConvergence(
                "degenerate Kummer reduction (|rho| = 1 or beta = 0)".into(),
            ));
        }
        let nu = (d - p1) * 0.5;
        let s = d;
        let mu = -(p0 * nu + q1) / s;
        let m = mu * 2.0 + p0;
        let k = mu * mu + nu + p0 * mu + q0;
        Ok(Self {
            mu,
            nu,
            s,
            shift: m / s,
            coeffs: [p0, p1, q0, q1, q2],
            a: k / (s * 2.0),
            cfg,
        })
    }

    /// `(y₁, y₁', y₂, y₂')` without the common factor `exp(μt + νt²/2)`.
    fn basis(&self, t: f64) -> Result<[C64; 4]> {
        let tau = self.shift + t;
        let z = -self.s * tau * tau * 0.5;
        let dz = -self.s * tau;
        let g = self.mu + self.nu * t;
        let (m1, dm1) = kummer_with_derivative(self.a, c(0.5), z, &self.cfg)?;
        let (m2, dm2) = kummer_with_derivative(self.a + 0.5, c(1.5), z, &self.cfg)?;
        let y1 = m1;
        let dy1 = g * m1 + dm1 * dz;
        let y2 = tau * m2;
        let dy2 = g * tau * m2 + m2 + tau * dm2 * dz;
        Ok([y1, dy1, y2, dy2])
    }

    fn log_envelope(&self, t: f64) -> C64 {
        self.mu * t + self.nu * (0.5 * t * t)
    }

    /// Advances `y = 1 + δ` from `t0` to `t0 + h` where `y(t0) = 1` and
    /// `y'(t0) = l`, by the Taylor series of `δ'' + Pδ' + Qδ = −Q`.
    /// Returns `(δ(h), δ'(h))`.
    fn local_step(&self, t0: f64, h: f64, l: C64) -> Result<(C64, C64)> {
        let [p0, p1, q0, q1, q2] = self.coeffs;
        let pc = [p0 + p1 * t0, p1];
        let qc = [q0 + q1 * t0 + q2 * (t0 * t0), q1 + q2 * (2.0 * t0), q2];
        let mut d: Vec<C64> = vec![c(0.0), l];
        let mut val = l * h;
        let mut der = l;
        let mut hp = h; // h^(n+1)
        let mut small = 0;
        for n in 0..self.cfg.max_terms {
            let mut acc = if n < 3 { -qc[n] } else { c(0.0) };
            for (j, pj) in pc.iter().enumerate() {
                if j <= n {
                    acc -= pj * d[n - j + 1] * (n - j + 1) as f64;
                }
            }
            for (j, qj) in qc.iter().enumerate() {
                if j <= n {
                    acc -= qj * d[n - j];
                }
            }
            let next = acc / ((n + 2) * (n + 1)) as f64;
            d.push(next);
            let dterm = next * hp * (n + 2) as f64;
            hp *= h;
            let vterm = next * hp;
            val += vterm;
            der += dterm;
            let vscale = val.norm().max(1.0);
            if n >= 2 && vterm.norm() <= self.cfg.tail_tol * vscale.min(val.norm().max(1e-300)) && dterm.norm() <= self.cfg.tail_tol * der.norm() {
                small += 1;
                if small >= 3 {
                    return Ok((val, der));
                }
            } else {
                small = 0;
            }
        }
        Err(Error::NoConvergence(format!("local series at t = {t0} did not converge")))
    }

    /// `(log y(t), y'(t)/y(t))` for the solution with `y(0) = 1`, `y'(0) = 0`,
    /// by renormalized local series; the logarithm accumulates step by step
    /// as `log1p(δ)` with `|δ| ≤ ½`, which fixes the branch.
    fn cauchy_solution(&self, t: f64) -> Result<(C64, C64)> {
        let [p0, p1, q0, q1, q2] = self.coeffs.map(|x| x.norm());
        let mut l = c(0.0);
        let mut log_y = c(0.0);
        let mut t0 = 0.0;
        let hmax = t / 64.0;
        while t0 < t {
            let pn = p0 + p1 * t0;
            let qn = q0 + q1 * t0 + q2 * t0 * t0;
            let mut h = hmax
                .min(0.5 / pn.max(1e-300))
                .min((0.5 / qn.max(1e-300)).sqrt())
                .min((0.5 / p1.max(1e-300)).sqrt())
                .min((0.5 / q1.max(1e-300)).cbrt())
                .min((0.5 / q2.max(1e-300)).powf(0.25))
                .min(t - t0);
            let (delta, ddelta) = loop {
                let (delta, ddelta) = self.local_step(t0, h, l)?;
                if delta.norm() <= 0.5 {
                    break (delta, ddelta);
                }
                h *= 0.5;
                if h < 1e-12 * t {
                    return Err(Error::BranchAmbiguity { grid: (t / h) as usize });
                }
            };
            log_y += log1p(delta);
            l = ddelta / (delta + 1.0);
            t0 = if t - t0 - h < 1e-15 * t { t } else { t0 + h };
        }
        Ok((log_y, l))
    }
}

fn log1p(d: C64) -> C64 {
    let re = 0.5 * (2.0 * d.re + d.norm_sqr()).ln_1p();
    C64::new(re, d.im.atan2(1.0 + d.re))
}

/// Basis combinations lose this factor or more to cancellation before the
/// Cauchy-data series is used instead.
const MAX_BASIS_CANCELLATION: f64 = 1e3;

/// Heston `(φ, ψ)` along a linear argument path from the Kummer basis.
///
/// When the solution with `y'(0) = 0` is a strongly cancelling combination
/// of `M(a, ½, z)` and `τM(a + ½, 3/2, z)`, the same reduced equation is
/// instead summed from its Cauchy data at `t = 0` by local Taylor series.
///
/// The logarithm in `φ` is unwound by continuity on a time grid that starts
/// at 64 points and is refined until consecutive phase increments stay
/// below `π/4`.
pub fn heston_closed_form(path: LinearPath, t: f64, params: &HestonParams, cfg: &KummerSeriesConfig) -> Result<Exponents> {
    if path.alpha == c(0.0) && path.beta == c(0.0) || (path.alpha == c(1.0) && path.beta == c(0.0)) || t == 0.0 {
        return Ok(Exponents {
            phi: c(0.0),
            psi: c(0.0),
        });
    }
    let hk = HestonKummer::new(path, params, *cfg)?;
    let b0 = hk.basis(0.0)?;
    // y = y2'(0) y1 − y1'(0) y2, which has y'(0) = 0
    let (c1, c2) = (b0[3], -b0[1]);
    let combine = |b: &[C64; 4]| (c1 * b[0] + c2 * b[2], c1 * b[1] + c2 * b[3]);
    let (y0, _) = combine(&b0);
    let zeta2 = params.vol_of_vol * params.vol_of_vol;
    let phi_scale = params.mean_reversion * params.long_run_var * 2.0 / zeta2;
    let bt = hk.basis(t)?;
    let (yt, dyt) = combine(&bt);
    let cancellation = [
        (c1 * b0[0]).norm().max((c2 * b0[2]).norm()) / y0.norm(),
        (c1 * bt[0]).norm().max((c2 * bt[2]).norm()) / yt.norm(),
        (c1 * bt[1]).norm().max((c2 * bt[3]).norm()) / dyt.norm(),
    ];
    if !cancellation.iter().all(|&x| x <= MAX_BASIS_CANCELLATION) {
        let (log_y, dlog_y) = hk.cauchy_solution(t)?;
        return Ok(Exponents {
            phi: -log_y * phi_scale,
            psi: -dlog_y * (2.0 / zeta2),
        });
    }
    let psi = -(dyt / yt) * (2.0 / zeta2);

    let log_ratio = unwound_log_ratio(|s| Ok(combine(&hk.basis(s)?).0), y0, t)? + hk.log_envelope(t);
    let phi = -log_ratio * phi_scale;
    Ok(Exponents { phi, psi })
}

/// `log(y(t)/y(0))` on the branch continuous in `t`.
fn unwound_log_ratio<Y>(y: Y, y0: C64, t: f64) -> Result<C64>
where
    Y: Fn(f64) -> Result<C64>,
{
    let mut grid = 64usize;
    while grid <= 8192 {
        let mut prev = y0;
        let mut phase = 0.0;
        let mut ok = true;
        for i in 1..=grid {
            let cur = y(t * i as f64 / grid as f64)?;
            let step = (cur / prev).arg();
            if step.abs() > std::f64::consts::FRAC_PI_4 {
                ok = false;
                break;
            }
            phase += step;
            prev = cur;
        }
        if ok {
            let modulus = (prev.norm() / y0.norm()).ln();
            return Ok(C64::new(modulus, phase));
        }
        grid *= 2;
    }
    Err(Error::BranchAmbiguity { grid: 8192 })
}

/// Heston average-price exponents at time `t` for the argument `ut/T`.
pub fn heston_closed_form_price_cumulant(
    u: C64,
    t: f64,
    maturity: f64,
    params: &HestonParams,
    cfg: &KummerSeriesConfig,
) -> Result<Exponents> {
    heston_closed_form(LinearPath::average_price(u, maturity), t, params, cfg)
}

/// Heston average-strike exponents at time `t` for the argument
/// `ut/T + (1 − u)`.
pub fn heston_closed_form_strike_cumulant(
    u: C64,
    t: f64,
    maturity: f64,
    params: &HestonParams,
    cfg: &KummerSeriesConfig,
) -> Result<Exponents> {
    heston_closed_form(LinearPath::average_strike(u, maturity), t, params, cfg)
}

/// `f₀, f₁, f₂` of the BNS linear variance equation, where
/// `f_k(t) = ∫₀ᵗ s^k e^{−λ(t−s)} ds` (with `f₀` using `s⁰ = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnsClosedFormPieces {
    pub decay: f64,
}

impl BnsClosedFormPieces {
    pub fn f0(&self, t: f64) -> f64 {
        self.f(0, t)
    }

    pub fn f1(&self, t: f64) -> f64 {
        self.f(1, t)
    }

    pub fn f2(&self, t: f64) -> f64 {
        self.f(2, t)
    }

    fn f(&self, k: u32, t: f64) -> f64 {
        let l = self.decay;
        if l * t < 0.1 {
            // Σ_n (−λ)^n t^{k+n+1} k! / (k+n+1)!
            let kfact = (1..=k).product::<u32>() as f64;
            let mut term = kfact * t.powi(k as i32 + 1) / (1..=k + 1).product::<u32>() as f64;
            let mut sum = term;
            for n in 1..60 {
                term *= -l * t / (k + n + 1) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            return sum;
        }
        let e = -(-l * t).exp_m1(); // 1 − e^{−λt}
        match k {
            0 => e / l,
            1 => t / l - e / (l * l),
            _ => t * t / l - 2.0 * t / (l * l) + 2.0 * e / (l * l * l),
        }
    }

    /// `ψ(t)` of `ψ' = ½(x² − x) − λψ`, `ψ(0) = 0`, for `x = α + βs`.
    pub fn psi(&self, path: LinearPath, t: f64) -> C64 {
        let (al, be) = (path.alpha, path.beta);
        ((al * al - al) * self.f0(t) + (al * be * 2.0 - be) * self.f1(t) + be * be * self.f2(t)) * 0.5
    }
}

/// BNS `(φ, ψ)` along a linear argument path; `φ` by adaptive composite
/// Gauss-Legendre quadrature of `λk(ψ(s) + ρx(s)) − λk(ρ)x(s)`.
pub fn bns_pieces(path: LinearPath, t: f64, params: &BnsParams) -> Result<Exponents> {
    let pieces = BnsClosedFormPieces { decay: params.decay };
    let lambda = params.decay;
    let rho = params.leverage;
    let k = &params.bdlp_cumulant;
    let k_rho = k.eval(c(rho))?;
    let psi = pieces.psi(path, t);
    if t == 0.0 {
        return Ok(Exponents { phi: c(0.0), psi });
    }
    let (integral, _) = adaptive_composite(0.0, t, 1e-14, |s| {
        let arg = pieces.psi(path, s) + path.at(s) * rho;
        k.eval(arg).map_err(|e| match e {
            Error::Domain { what, arg } => Error::DomainExit {
                t: s,
                detail: format!("{what} at {arg}"),
            },
            other => other,
        })
    })?;
    let phi = integral * lambda - path.integral(t) * (lambda * k_rho);
    Ok(Exponents { phi, psi })
}

/// BNS average-price exponents at time `t` for argument `ut/T`.
pub fn bns_average_price_pieces(u: C64, t: f64, maturity: f64, params: &BnsParams) -> Result<Exponents> {
    bns_pieces(LinearPath::average_price(u, maturity), t, params)
}

/// BNS average-strike exponents at time `t` for argument `ut/T + (1 − u)`.
pub fn bns_average_strike_pieces(u: C64, t: f64, maturity: f64, params: &BnsParams) -> Result<Exponents> {
    bns_pieces(LinearPath::average_strike(u, maturity), t, params)
}

/// Jump contribution to the Bates `φ` over `[0, T]`:
/// `ν∫₀ᵀ (κ(x(s)) − x(s)κ(1)) ds` along the payoff's argument path.
pub fn bates_phi_jump_correction(u: C64, maturity: f64, bates: &BatesParams, kind: AveragePayoffKind) -> Result<C64> {
    if bates.jump_intensity == 0.0 {
        return Ok(c(0.0));
    }
    let path = if kind.is_average_price() {
        LinearPath::average_price(u, maturity)
    } else {
        LinearPath::average_strike(u, maturity)
    };
    let law = bates.jump_law;
    let k1 = jump_cumulant(&law, c(1.0))?;
    let (integral, _) = adaptive_composite(0.0, maturity, 1e-14, |s| {
        let x = path.at(s);
        Ok(jump_cumulant(&law, x)? - x * k1)
    })?;
    Ok(integral * bates.jump_intensity)
}

/// Bates exponents at maturity: Heston closed form plus the jump integral.
pub fn bates_closed_form(
    u: C64,
    maturity: f64,
    bates: &BatesParams,
    kind: AveragePayoffKind,
    cfg: &KummerSeriesConfig,
) -> Result<Exponents> {
    let path = if kind.is_average_price() {
        LinearPath::average_price(u, maturity)
    } else {
        LinearPath::average_strike(u, maturity)
    };
    let h = heston_closed_form(path, maturity, &bates.heston, cfg)?;
    let jumps = bates_phi_jump_correction(u, maturity, bates, kind)?;
    Ok(Exponents {
        phi: h.phi + jumps,
        psi: h.psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{functional_characteristics, JumpLaw, ModelSpec, SubordinatorCumulant};
    use crate::riccati::{solve_joint_with, SolverConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> KummerSeriesConfig {
        KummerSeriesConfig::default()
    }

    /// erf by its Maclaurin series, independent of the Kummer code path.
    fn erf_series(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = x;
        for n in 0..200 {
            sum += term / (2 * n + 1) as f64;
            term *= -x * x / (n + 1) as f64;
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    #[test]
    fn kummer_special_values() {
        let m0 = kummer_m(C64::new(0.3, 1.0), c(2.5), c(0.0), &cfg()).unwrap();
        assert_eq!(m0, c(1.0));
        let e = kummer_m(c(1.0), c(1.0), c(1.0), &cfg()).unwrap();
        assert_abs_diff_eq!(e.re, std::f64::consts::E, epsilon = 1e-14);
        let m = kummer_m(c(0.5), c(1.5), c(-1.0), &cfg()).unwrap();
        let oracle = std::f64::consts::PI.sqrt() * erf_series(1.0) / 2.0;
        assert_abs_diff_eq!(m.re, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(m.re, 0.7468241, epsilon = 1e-7);
    }

    #[test]
    fn continuation_matches_closed_forms() {
        for z in [C64::new(10.0, 5.0), C64::new(0.0, 30.0), c(-20.0), C64::new(-3.0, -45.0)] {
            let m = kummer_m(c(1.0), c(1.0), z, &cfg()).unwrap();
            assert!((m - z.exp()).norm() < 1e-12 * (1.0 + z.exp().norm()), "{z}: {m}");
        }
        let x: f64 = 3.0;
        let m = kummer_m(c(0.5), c(1.5), c(-x * x), &cfg()).unwrap();
        let oracle = std::f64::consts::PI.sqrt() * erf_series(x) / (2.0 * x);
        assert_abs_diff_eq!(m.re, oracle, epsilon = 1e-13);
    }

    #[test]
    fn rejects_nonpositive_integer_b() {
        assert!(kummer_m(c(1.0), c(-2.0), c(0.5), &cfg()).is_err());
    }

    proptest! {
        #[test]
        fn contiguous_relation(
            ar in -2.0f64..2.0, ai in -2.0f64..2.0,
            br in 0.2f64..3.0, bi in -1.0f64..1.0,
            zr in -12.0f64..12.0, zi in -12.0f64..12.0,
        ) {
            let (a, b, z) = (C64::new(ar, ai), C64::new(br, bi), C64::new(zr, zi));
            let lhs = kummer_m(a, b, z, &cfg()).unwrap();
            let rhs = kummer_m(a + 1.0, b, z, &cfg()).unwrap()
                - z / b * kummer_m(a + 1.0, b + 1.0, z, &cfg()).unwrap();
            let scale = lhs.norm().max(rhs.norm()).max(1.0);
            prop_assert!((lhs - rhs).norm() < 1e-10 * scale, "{} vs {}", lhs, rhs);
        }
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, t: f64, n: usize) -> f64 {
        let h = t / n as f64;
        let mut acc = f(0.0) + f(t);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn bns_pieces_match_quadrature() {
        for &(l, t) in &[(1.0, 1.0), (0.3, 2.5), (4.0, 0.7), (0.01, 1.0), (2.0, 0.001)] {
            let p = BnsClosedFormPieces { decay: l };
            for k in 0..3 {
                let oracle = simpson(|s| s.powi(k) * (-l * (t - s)).exp(), t, 10_000);
                let got = p.f(k as u32, t);
                assert_abs_diff_eq!(got, oracle, epsilon = 1e-10);
            }
            assert!(p.f0(t) >= 0.0 && p.f1(t) >= 0.0 && p.f2(t) >= 0.0);
        }
        let p = BnsClosedFormPieces { decay: 1.0 };
        assert_eq!(p.f0(0.0), 0.0);
        assert_eq!(p.f2(0.0), 0.0);
    }

    fn bns_params() -> BnsParams {
        BnsParams {
            decay: 1.0,
            leverage: -0.3,
            bdlp_cumulant: SubordinatorCumulant::GammaOu {
                intensity: 0.5,
                rate: 20.0,
            },
        }
    }

    #[test]
    fn bns_average_price_psi_value() {
        let e = bns_average_price_pieces(c(2.0), 1.0, 1.0, &bns_params()).unwrap();
        let exact = 2.0 - 5.0 * (-1.0f64).exp();
        assert_abs_diff_eq!(e.psi.re, exact, epsilon = 1e-14);
        assert_abs_diff_eq!(e.psi.re, 0.160603, epsilon = 1e-6);
        let zero = bns_average_price_pieces(c(0.0), 1.0, 1.0, &bns_params()).unwrap();
        assert_eq!(zero.psi, c(0.0));
        assert_abs_diff_eq!(zero.phi.norm(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn bns_pieces_match_engine() {
        let params = bns_params();
        let fc = functional_characteristics(&ModelSpec::Bns(params.clone()));
        let cfg = SolverConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..Default::default()
        };
        for u in [c(2.0), C64::new(1.5, 4.0), C64::new(-1.0, -2.0)] {
            let price = bns_average_price_pieces(u, 1.0, 1.0, &params).unwrap();
            let r = solve_joint_with(&fc, [c(0.0), c(0.0), u, c(0.0)], 1.0, &cfg).unwrap();
            assert!((price.psi - r.psi).norm() < 1e-10);
            assert!((price.phi - r.phi).norm() < 1e-10);
            let strike = bns_average_strike_pieces(u, 1.0, 1.0, &params).unwrap();
            let r = solve_joint_with(&fc, [c(1.0) - u, c(0.0), u, c(0.0)], 1.0, &cfg).unwrap();
            assert!((strike.psi - r.psi).norm() < 1e-10);
            assert!((strike.phi - r.phi).norm() < 1e-10);
        }
    }

    fn heston() -> HestonParams {
        HestonParams {
            mean_reversion: 2.0,
            long_run_var: 0.04,
            vol_of_vol: 0.5,
            correlation: -0.7,
        }
    }

    #[test]
    fn heston_kummer_matches_engine() {
        let params = heston();
        let fc = functional_characteristics(&ModelSpec::Heston(params));
        let scfg = SolverConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..Default::default()
        };
        for u in [c(1.0), c(2.0), C64::new(2.0, 5.0), C64::new(1.2, -15.0)] {
            for t in [0.25, 1.0] {
                let cf = heston_closed_form_price_cumulant(u, t, 1.0, &params, &cfg()).unwrap();
                let r = solve_joint_with(&fc, [c(0.0), c(0.0), u, c(0.0)], t, &scfg).unwrap();
                assert!((cf.psi - r.psi).norm() < 1e-9 * (1.0 + r.psi.norm()), "{u} {t}: {cf:?} vs {r:?}");
                assert!((cf.phi - r.phi).norm() < 1e-9 * (1.0 + r.phi.norm()), "{u} {t}: {cf:?} vs {r:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn heston_kummer_agrees_with_engine(
            lambda in 0.5f64..4.0, theta in 0.01f64..0.1, zeta in 0.1f64..1.0, rho in -0.9f64..0.5,
            ur in -2.0f64..3.0, ui in -25.0f64..25.0, t in 0.05f64..2.0, strike in proptest::bool::ANY,
        ) {
            let params = HestonParams { mean_reversion: lambda, long_run_var: theta, vol_of_vol: zeta, correlation: rho };
            let fc = functional_characteristics(&ModelSpec::Heston(params));
            let scfg = SolverConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..Default::default() };
            let u = C64::new(ur, ui);
            let path = if strike { LinearPath::average_strike(u, t) } else { LinearPath::average_price(u, t) };
            let eng = solve_joint_with(&fc, [path.alpha, c(0.0), path.beta, c(0.0)], t, &scfg);
            prop_assume!(eng.is_ok());
            let eng = eng.unwrap();
            let cf = heston_closed_form(path, t, &params, &cfg()).unwrap();
            prop_assert!((cf.psi - eng.psi).norm() < 1e-7 * (1.0 + eng.psi.norm()), "{:?} vs {:?}", cf, eng);
            prop_assert!((cf.phi - eng.phi).norm() < 1e-7 * (1.0 + eng.phi.norm()), "{:?} vs {:?}", cf, eng);
        }
    }

    #[test]
    fn heston_kummer_zero_and_linear_limit() {
        let z = heston_closed_form_price_cumulant(c(0.0), 1.0, 1.0, &heston(), &cfg()).unwrap();
        assert_eq!(z.psi, c(0.0));
        assert_eq!(z.phi, c(0.0));
        // zeta -> 0 with rho = 0: psi' = ½(x² − x) − λψ is linear
        let params = HestonParams {
            vol_of_vol: 1e-6,
            correlation: 0.0,
            ..heston()
        };
        let u = C64::new(1.5, 2.0);
        let cf = heston_closed_form_price_cumulant(u, 1.0, 1.0, &params, &cfg()).unwrap();
        let linear = BnsClosedFormPieces { decay: 2.0 }.psi(LinearPath::average_price(u, 1.0), 1.0);
        assert!((cf.psi - linear).norm() < 1e-6, "{} vs {}", cf.psi, linear);
    }

    #[test]
    fn bates_jump_correction() {
        let mut bates = BatesParams {
            heston: heston(),
            jump_intensity: 0.0,
            jump_law: JumpLaw::Normal { mean: -0.1, stdev: 0.2 },
        };
        let kind = AveragePayoffKind::AveragePriceCall;
        assert_eq!(bates_phi_jump_correction(c(1.5), 1.0, &bates, kind).unwrap(), c(0.0));
        bates.jump_intensity = 1.0;
        bates.jump_law = JumpLaw::Normal { mean: 0.0, stdev: 0.0 };
        assert_eq!(bates_phi_jump_correction(c(1.5), 1.0, &bates, kind).unwrap(), c(0.0));

        let law = JumpLaw::Kou {
            up_prob: 0.5,
            up_rate: 10.0,
            down_rate: 10.0,
        };
        bates.jump_law = law;
        let got = bates_phi_jump_correction(c(1.0), 1.0, &bates, kind).unwrap();
        let k1 = jump_cumulant(&law, c(1.0)).unwrap().re;
        let n = 10_000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) / n as f64;
                jump_cumulant(&law, c(s)).unwrap().re - s * k1
            })
            .sum::<f64>()
            / n as f64;
        assert_abs_diff_eq!(got.re, oracle, epsilon = 1e-8);
    }
}

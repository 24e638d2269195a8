//! Adaptive Dormand-Prince 5(4) integrator for small complex systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

type State = [Complex64; 2];

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    /// Magnitude of the second component treated as a blow-up.
    pub blow_up: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub steps: usize,
    pub rejected_steps: usize,
    pub final_step: f64,
    pub rhs_evals: usize,
    /// Sum of accepted local error estimates (max-norm, absolute).
    pub error_estimate: f64,
}

// Dormand-Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..2 {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `0` to `t_end`.
pub fn integrate<F>(f: F, y0: State, t_end: f64, tol: &Tolerances) -> Result<(State, StepStats)>
where
    F: Fn(f64, &State) -> Result<State>,
{
    let mut stats = StepStats::default();
    let mut t = 0.0;
    let mut y = y0;
    if t_end == 0.0 {
        return Ok((y, stats));
    }
    let h_min = 1e-14 * t_end;
    let mut h = tol.initial_step.min(t_end).max(h_min);
    let mut k1 = f(t, &y)?;
    stats.rhs_evals += 1;

    let eval = |t: f64, y: &State| -> Result<State> {
        let v = f(t, y)?;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BlowUp { t });
        }
        Ok(v)
    };

    while t < t_end {
        if stats.steps + stats.rejected_steps >= tol.max_steps {
            return Err(Error::MaxSteps {
                t,
                max_steps: tol.max_steps,
            });
        }
        let last = t + h >= t_end * (1.0 - 1e-15);
        if last {
            h = t_end - t;
        }

        let k2 = eval(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = eval(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = eval(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = eval(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = eval(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = eval(t + h, &y_new)?;
        stats.rhs_evals += 6;

        let mut err_norm: f64 = 0.0;
        let mut err_abs: f64 = 0.0;
        for i in 0..2 {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let scale = tol.abs_tol + tol.rel_tol * y[i].norm().max(y_new[i].norm());
            err_norm = err_norm.max(e.norm() / scale);
            err_abs = err_abs.max(e.norm());
        }
        if !err_norm.is_finite() {
            err_norm = 1e10;
        }

        if err_norm <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            stats.steps += 1;
            stats.final_step = h;
            stats.error_estimate += err_abs;
            if y[1].norm() > tol.blow_up {
                return Err(Error::BlowUp { t });
            }
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            stats.rejected_steps += 1;
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(Error::StepUnderflow { t });
            }
        }
    }
    Ok((y, stats))
}

//! Monte Carlo simulation of the catalog models.
//!
//! Each path (or antithetic pair) draws from its own ChaCha8 stream keyed by
//! `(seed, index)`, and results are reduced in index order, so estimates do
//! not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contract::ContractSpec;
use crate::error::{invalid, Error, Result};
use crate::model::{jump_cumulant, JumpLaw, LevyCumulant, ModelSpec, SubordinatorCumulant, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Square-root variance, truncated at zero in drift and diffusion.
    FullTruncationEuler,
    /// OU variance driven by a compound Poisson subordinator, exact on the grid.
    ExactOu,
}

impl Scheme {
    /// The scheme matching the model's variance process.
    pub fn for_model(model: &ModelSpec) -> Self {
        match model {
            ModelSpec::Bns(_) | ModelSpec::OuTcLevy(_) => Scheme::ExactOu,
            _ => Scheme::FullTruncationEuler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub antithetic: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 1000,
            seed: 1,
            scheme: Scheme::FullTruncationEuler,
            antithetic: true,
        }
    }
}

impl SimConfig {
    /// Same settings with the scheme matched to `model`.
    pub fn for_model(self, model: &ModelSpec) -> Self {
        Self {
            scheme: Scheme::for_model(model),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(invalid("nPaths", "must be >= 100"));
        }
        if self.n_steps < 10 {
            return Err(invalid("nSteps", "must be >= 10"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// End state of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    /// `X_T`, started from `X₀ = log S₀`.
    pub x_terminal: f64,
    /// `(1/T)∫₀ᵀ X_s ds` by the trapezoid rule on the step grid.
    pub x_average: f64,
    pub v_terminal: f64,
}

impl PathSample {
    /// `(Ŝ_T, S_T)`.
    pub fn prices(&self, contract: &ContractSpec) -> (f64, f64) {
        let carry = contract.carry() * contract.maturity;
        ((0.5 * carry + self.x_average).exp(), (carry + self.x_terminal).exp())
    }
}

struct Draws {
    rng: ChaCha8Rng,
    sign: f64,
}

impl Draws {
    fn new(seed: u64, stream: u64, sign: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, sign }
    }

    fn normal(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }

    fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }

    fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        if mean > 30.0 {
            return Poisson::new(mean).expect("positive mean").sample(&mut self.rng) as u64;
        }
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    fn jump(&mut self, law: &JumpLaw) -> f64 {
        match *law {
            JumpLaw::Normal { mean, stdev } => mean + stdev * self.normal(),
            JumpLaw::Kou {
                up_prob,
                up_rate,
                down_rate,
            } => {
                if self.uniform() < up_prob {
                    self.exponential(up_rate)
                } else {
                    -self.exponential(down_rate)
                }
            }
            JumpLaw::None => 0.0,
        }
    }

    fn jump_sum(&mut self, law: &JumpLaw, mean_count: f64) -> f64 {
        let n = self.poisson(mean_count);
        (0..n).map(|_| self.jump(law)).sum()
    }
}

fn unit_jump_mean(law: &JumpLaw, intensity: f64) -> Result<f64> {
    if intensity == 0.0 {
        return Ok(0.0);
    }
    Ok(jump_cumulant(law, C64::new(1.0, 0.0))?.re)
}

/// Square-root variance step: exact mean reversion applied to the truncated
/// state plus a truncated Euler diffusion term.
fn cir_step(v: f64, lambda: f64, theta: f64, eta: f64, dt: f64, z: f64) -> f64 {
    let vp = v.max(0.0);
    theta + (vp - theta) * (-lambda * dt).exp() + eta * (vp * dt).sqrt() * z
}

/// OU variance driven by a compound Poisson subordinator with `Exp(rate)`
/// jumps arriving at `arrival` per unit time, advanced exactly over `dt`.
/// Returns `(V_end, ∫V ds, jump sum)`.
fn ou_step(v: f64, lambda: f64, arrival: f64, rate: f64, dt: f64, d: &mut Draws) -> (f64, f64, f64) {
    let n = d.poisson(arrival * dt);
    let mut times: Vec<(f64, f64)> = (0..n).map(|_| (d.uniform() * dt, d.exponential(rate))).collect();
    times.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut v = v;
    let mut integral = 0.0;
    let mut jumps = 0.0;
    let mut t = 0.0;
    for (at, size) in times {
        let h = at - t;
        integral += v * -(-lambda * h).exp_m1() / lambda;
        v = v * (-lambda * h).exp() + size;
        jumps += size;
        t = at;
    }
    let h = dt - t;
    integral += v * -(-lambda * h).exp_m1() / lambda;
    v *= (-lambda * h).exp();
    (v, integral, jumps)
}

/// Increment of the compensated base Lévy process over business time `clock`.
fn levy_increment(levy: &LevyCumulant, k1: f64, clock: f64, d: &mut Draws) -> f64 {
    let s2 = levy.diffusion * levy.diffusion;
    let mut x = levy.diffusion * clock.sqrt() * d.normal() - (0.5 * s2 + levy.jump_intensity * k1) * clock;
    if levy.jump_intensity > 0.0 {
        x += d.jump_sum(&levy.jump_law, levy.jump_intensity * clock);
    }
    x
}

fn gamma_ou(cumulant: &SubordinatorCumulant) -> Result<(f64, f64)> {
    match *cumulant {
        SubordinatorCumulant::GammaOu { intensity, rate } => Ok((intensity, rate)),
        _ => Err(Error::UnsupportedModel(
            "the Monte Carlo oracle simulates only the GammaOu subordinator".into(),
        )),
    }
}

/// Simulates one path; `d` supplies every random draw.
fn simulate_path(model: &ModelSpec, contract: &ContractSpec, n_steps: usize, d: &mut Draws) -> Result<PathSample> {
    let dt = contract.maturity / n_steps as f64;
    let mut x = contract.log_spot();
    let mut v = contract.initial_var;
    let mut x_area = 0.5 * x;
    match model {
        ModelSpec::Heston(_) | ModelSpec::Bates(_) | ModelSpec::TurboBates(_) => {
            let (h, law, nu0, nu1) = match model {
                ModelSpec::Heston(h) => (*h, JumpLaw::None, 0.0, 0.0),
                ModelSpec::Bates(b) => (b.heston, b.jump_law, b.jump_intensity, 0.0),
                ModelSpec::TurboBates(b) => (b.heston, b.jump_law, b.base_intensity, b.var_intensity),
                _ => unreachable!(),
            };
            let k1 = unit_jump_mean(&law, nu0 + nu1)?;
            let rho = h.correlation;
            let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
            for _ in 0..n_steps {
                let z1 = d.normal();
                let z2 = rho * z1 + rho_c * d.normal();
                let vp = v.max(0.0);
                let v_next = cir_step(v, h.mean_reversion, h.long_run_var, h.vol_of_vol, dt, z2);
                x += -0.5 * vp * dt + (vp * dt).sqrt() * z1;
                if nu0 > 0.0 || nu1 > 0.0 {
                    let (a, b) = (nu0 + nu1 * vp, nu0 + nu1 * v_next.max(0.0));
                    let bound = a.max(b);
                    // thinning against the larger endpoint intensity
                    let candidates = d.poisson(bound * dt);
                    for _ in 0..candidates {
                        let s = d.uniform();
                        let accept = d.uniform() * bound < a + (b - a) * s;
                        let size = d.jump(&law);
                        if accept {
                            x += size;
                        }
                    }
                    x -= k1 * 0.5 * (a + b) * dt;
                }
                v = v_next;
                x_area += x;
            }
        }
        ModelSpec::Bns(p) => {
            let (intensity, rate) = gamma_ou(&p.bdlp_cumulant)?;
            let lambda = p.decay;
            let k_rho = p.bdlp_cumulant.eval(C64::new(p.leverage, 0.0))?.re;
            for _ in 0..n_steps {
                let (v_next, iv, jumps) = ou_step(v, lambda, lambda * intensity, rate, dt, d);
                x += -lambda * k_rho * dt - 0.5 * iv + iv.sqrt() * d.normal() + p.leverage * jumps;
                v = v_next;
                x_area += x;
            }
        }
        ModelSpec::OuTcLevy(p) => {
            let (intensity, rate) = gamma_ou(&p.subordinator_cumulant)?;
            let levy = p.base_levy_cumulant;
            let k1 = unit_jump_mean(&levy.jump_law, levy.jump_intensity)?;
            for _ in 0..n_steps {
                let (v_next, clock, _) = ou_step(v, p.decay, p.decay * intensity, rate, dt, d);
                x += levy_increment(&levy, k1, clock, d);
                v = v_next;
                x_area += x;
            }
        }
        ModelSpec::CirTcLevy(p) => {
            let levy = p.base_levy_cumulant;
            let k1 = unit_jump_mean(&levy.jump_law, levy.jump_intensity)?;
            for _ in 0..n_steps {
                let v_next = cir_step(v, p.mean_reversion, p.long_run, p.vol_of_vol, dt, d.normal());
                let clock = 0.5 * (v.max(0.0) + v_next.max(0.0)) * dt;
                x += levy_increment(&levy, k1, clock, d);
                v = v_next;
                x_area += x;
            }
        }
    }
    x_area -= 0.5 * x;
    Ok(PathSample {
        x_terminal: x,
        x_average: x_area / n_steps as f64,
        v_terminal: v,
    })
}

fn check_pairing(model: &ModelSpec, sim: &SimConfig) -> Result<()> {
    if sim.scheme != Scheme::for_model(model) {
        return Err(invalid(
            "scheme",
            format!("{:?} cannot simulate the {} model", sim.scheme, model.name()),
        ));
    }
    Ok(())
}

/// Simulated path groups: antithetic pairs, or single paths.
fn simulate_groups(model: &ModelSpec, contract: &ContractSpec, sim: &SimConfig) -> Result<Vec<Vec<PathSample>>> {
    model.validate()?;
    contract.validate()?;
    sim.validate()?;
    check_pairing(model, sim)?;
    let (groups, per) = if sim.antithetic {
        (sim.n_paths.div_ceil(2), 2)
    } else {
        (sim.n_paths, 1)
    };
    let out: Vec<Result<Vec<PathSample>>> = (0..groups)
        .into_par_iter()
        .map(|g| {
            (0..per)
                .map(|k| {
                    let sign = if k == 0 { 1.0 } else { -1.0 };
                    let mut d = Draws::new(sim.seed, g as u64, sign);
                    simulate_path(model, contract, sim.n_steps, &mut d)
                })
                .collect()
        })
        .collect();
    out.into_iter().collect()
}

/// Terminal log-price, trapezoidal time average of the log-price, and
/// terminal variance of every simulated path. Antithetic partners are
/// adjacent.
pub fn simulate_terminal(model: &ModelSpec, contract: &ContractSpec, sim: &SimConfig) -> Result<Vec<PathSample>> {
    Ok(simulate_groups(model, contract, sim)?.into_iter().flatten().collect())
}

/// Sample mean and standard error of per-group averages, summed in chunks
/// of fixed size and order.
fn estimate(values: &[f64], n_paths: usize) -> McEstimate {
    const CHUNK: usize = 4096;
    let n = values.len() as f64;
    let sum: f64 = values.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).sum();
    let mean = sum / n;
    let ss: f64 = values
        .chunks(CHUNK)
        .map(|c| c.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>())
        .sum();
    let var = if values.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_paths,
    }
}

fn group_means<F: Fn(&PathSample) -> f64>(groups: &[Vec<PathSample>], f: F) -> Vec<f64> {
    groups
        .iter()
        .map(|g| g.iter().map(&f).sum::<f64>() / g.len() as f64)
        .collect()
}

fn same_paths(a: &ContractSpec, b: &ContractSpec) -> bool {
    a.spot == b.spot
        && a.initial_var == b.initial_var
        && a.rate == b.rate
        && a.dividend_yield == b.dividend_yield
        && a.maturity == b.maturity
}

/// Discounted payoff estimates for several contracts on one set of paths.
/// The contracts may differ only in strike and payoff.
pub fn mc_price_batch(model: &ModelSpec, contracts: &[ContractSpec], sim: &SimConfig) -> Result<Vec<McEstimate>> {
    let Some(first) = contracts.first() else {
        return Ok(Vec::new());
    };
    if contracts.iter().any(|c| !same_paths(c, first)) {
        return Err(invalid("contracts", "batch contracts may differ only in strike and payoff"));
    }
    for c in contracts {
        c.validate()?;
    }
    let groups = simulate_groups(model, first, sim)?;
    let n = groups.iter().map(Vec::len).sum();
    Ok(contracts
        .iter()
        .map(|c| {
            let disc = c.discount();
            let vals = group_means(&groups, |p| {
                let (avg, terminal) = p.prices(c);
                disc * c.payoff.payoff(avg, terminal, c.strike)
            });
            estimate(&vals, n)
        })
        .collect())
}

/// Discounted payoff estimate.
pub fn mc_price(model: &ModelSpec, contract: &ContractSpec, sim: &SimConfig) -> Result<McEstimate> {
    Ok(mc_price_batch(model, std::slice::from_ref(contract), sim)?[0])
}

fn log_mean_estimate(
    groups: &[Vec<PathSample>],
    n: usize,
    exponent: impl Fn(&PathSample) -> f64,
) -> McEstimate {
    let vals = group_means(groups, |p| exponent(p).exp());
    let e = estimate(&vals, n);
    let mean = e.mean;
    let m4 = vals.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / vals.len() as f64;
    let m2 = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / vals.len() as f64;
    if m2 > 0.0 && m4 / (m2 * m2) > 100.0 {
        log::warn!("sample kurtosis {:.1} of the exponential moment exceeds 100", m4 / (m2 * m2));
    }
    McEstimate {
        mean: mean.ln(),
        std_error: e.std_error / mean,
        n_paths: n,
    }
}

/// `log E[exp(u₁X_T + u₃∫₀ᵀX_s ds)]` with `X₀ = log S₀`.
pub fn mc_cumulant(model: &ModelSpec, u1: f64, u3: f64, contract: &ContractSpec, sim: &SimConfig) -> Result<McEstimate> {
    let groups = simulate_groups(model, contract, sim)?;
    let n = groups.iter().map(Vec::len).sum();
    if u1 == 0.0 && u3 == 0.0 {
        return Ok(McEstimate {
            mean: 0.0,
            std_error: 0.0,
            n_paths: n,
        });
    }
    let t = contract.maturity;
    Ok(log_mean_estimate(&groups, n, |p| u1 * p.x_terminal + u3 * t * p.x_average))
}

/// `log E[Ŝ_T^u]` with `Ŝ_T` the trapezoidal geometric mean of the
/// simulated `S_t = exp((r − q)t + X_t)`.
pub fn mc_log_average_mgf(model: &ModelSpec, contract: &ContractSpec, u: f64, sim: &SimConfig) -> Result<McEstimate> {
    let groups = simulate_groups(model, contract, sim)?;
    let n = groups.iter().map(Vec::len).sum();
    let drift = 0.5 * contract.carry() * contract.maturity;
    Ok(log_mean_estimate(&groups, n, |p| u * (drift + p.x_average)))
}

/// `E[e^{X_T − X₀}]`, which is 1 for a martingale.
pub fn mc_martingale_mean(model: &ModelSpec, contract: &ContractSpec, sim: &SimConfig) -> Result<McEstimate> {
    let groups = simulate_groups(model, contract, sim)?;
    let n = groups.iter().map(Vec::len).sum();
    let x0 = contract.log_spot();
    Ok(estimate(&group_means(&groups, |p| (p.x_terminal - x0).exp()), n))
}

//! Gauss-Legendre rules and composite panel integration.

use std::f64::consts::PI;

use crate::error::Result;

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates a smooth function on `[a, b]` with composite Gauss-Legendre,
/// doubling the panel count until two successive results agree to `tol`
/// (absolute, relative to `1 + |I|`). Returns `(integral, last change)`.
pub fn adaptive_composite<T, F>(a: f64, b: f64, tol: f64, mut f: F) -> Result<(T, f64)>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Norm + Default,
    F: FnMut(f64) -> Result<T>,
{
    let rule = GaussLegendre::new(16);
    let mut panels = 4usize;
    let mut prev: Option<T> = None;
    loop {
        let h = (b - a) / panels as f64;
        let mut acc = T::default();
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (x, w) in rule.mapped(lo, lo + h) {
                acc = acc + f(x)? * w;
            }
        }
        if let Some(old) = prev {
            let change = (acc + old * -1.0).norm_value();
            if change <= tol * (1.0 + acc.norm_value()) || panels >= 4096 {
                return Ok((acc, change));
            }
        }
        prev = Some(acc);
        panels *= 2;
    }
}

/// Magnitude used by the adaptive convergence test.
pub trait Norm {
    fn norm_value(&self) -> f64;
}

impl Norm for f64 {
    fn norm_value(&self) -> f64 {
        self.abs()
    }
}

impl Norm for num_complex::Complex64 {
    fn norm_value(&self) -> f64 {
        self.norm()
    }
}

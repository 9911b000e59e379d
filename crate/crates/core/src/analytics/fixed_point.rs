use serde::{Deserialize, Serialize};

use crate::analytics::metrics::{busy_probability, x_from_tau};
use crate::analytics::tau::tau_from_params;
use crate::error::{invalid, Error, Result};
use crate::params::EdcaParams;
use crate::timing::TimingConstants;

/// Coupled transmission and collision probabilities of one BSS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BssState {
    pub tau: Vec<f64>,
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub iterations: usize,
}

pub const DAMPING: f64 = 0.5;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;

/// Solves `τ_i = f(params_i, p_i)`, `p_i = 1 − Π_{i'≠i}(1 − τ_{i'})` by
/// damped fixed-point iteration from `τ = 0.01`.
pub fn solve_bss_fixed_point(params: &[EdcaParams], timing: &TimingConstants) -> Result<BssState> {
    if params.is_empty() {
        return Err(invalid("params", "a BSS needs at least one station"));
    }
    let n = params.len();
    let mut tau = vec![0.01; n];
    let mut residual = f64::INFINITY;
    for iteration in 0..MAX_ITERATIONS {
        let mapped = image(params, &tau, timing)?;
        residual = tau
            .iter()
            .zip(&mapped)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < RESIDUAL_TOL {
            let p: Vec<f64> = (0..n).map(|i| busy_probability(i, &tau)).collect();
            // one last evaluation so τ is the exact image of the reported p
            let tau = mapped;
            let x = tau.iter().map(|&t| x_from_tau(t)).collect();
            return Ok(BssState {
                tau,
                p,
                x,
                iterations: iteration,
            });
        }
        for (t, m) in tau.iter_mut().zip(&mapped) {
            *t = (1.0 - DAMPING) * *t + DAMPING * m;
        }
    }
    Err(Error::Convergence {
        what: "BSS fixed point",
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn image(params: &[EdcaParams], tau: &[f64], timing: &TimingConstants) -> Result<Vec<f64>> {
    params
        .iter()
        .enumerate()
        .map(|(i, prm)| tau_from_params(prm, busy_probability(i, tau), timing))
        .collect()
}

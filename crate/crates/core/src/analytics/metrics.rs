//! Per-BSS throughput and airtime in both the `τ` and the `x = τ/(1 − τ)`
//! parameterizations.

use crate::error::{domain, Result};
use crate::timing::TimingConstants;

fn check_x(x: &[f64]) -> Result<()> {
    match x.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(&bad) => Err(domain("x", bad, "[0, ∞)")),
        None => Ok(()),
    }
}

fn check_tau(tau: &[f64]) -> Result<()> {
    match tau.iter().find(|v| !(0.0..1.0).contains(*v)) {
        Some(&bad) => Err(domain("tau", bad, "[0, 1)")),
        None => Ok(()),
    }
}

pub fn x_from_tau(tau: f64) -> f64 {
    tau / (1.0 - tau)
}

pub fn tau_from_x(x: f64) -> f64 {
    x / (1.0 + x)
}

/// `Π(1 + x_i)`.
fn growth(x: &[f64]) -> f64 {
    x.iter().map(|v| 1.0 + v).product()
}

/// Probability that a general time-slot is idle: `1 / Π(1 + x_i)`.
pub fn p_idle(x: &[f64]) -> Result<f64> {
    check_x(x)?;
    Ok(1.0 / growth(x))
}

/// Probability that station `i` transmits alone: `x_i · P_idle`.
pub fn p_succ(i: usize, x: &[f64]) -> Result<f64> {
    Ok(x[i] * p_idle(x)?)
}

/// Collision probability seen by station `i`: `1 − Π_{i'≠i}(1 − τ_{i'})`.
pub fn busy_probability(i: usize, tau: &[f64]) -> f64 {
    1.0 - tau
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, t)| 1.0 - t)
        .product::<f64>()
}

/// Throughput of station `i` (bits/s) at link rate `rate` (bits/s):
/// `x_i r t / (Π(1 + x) − t')`.
pub fn throughput(i: usize, x: &[f64], rate: f64, timing: &TimingConstants) -> Result<f64> {
    check_x(x)?;
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(domain("rate", rate, "[0, ∞)"));
    }
    Ok(x[i] * rate * timing.t / (growth(x) - timing.t_prime))
}

/// Fraction of channel time station `i` occupies, counting successes and
/// collisions: `x_i Π_{i'≠i}(1 + x_{i'}) / (Π(1 + x) − t')`.
pub fn airtime(i: usize, x: &[f64], timing: &TimingConstants) -> Result<f64> {
    check_x(x)?;
    let others: f64 = x
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, v)| 1.0 + v)
        .product();
    Ok(x[i] * others / (growth(x) - timing.t_prime))
}

/// Throughput from the `τ` form: `P_succ,i r T_TXOP / (P_idle δ + (1 − P_idle) T)`.
pub fn throughput_tau_form(i: usize, tau: &[f64], rate: f64, timing: &TimingConstants) -> Result<f64> {
    check_tau(tau)?;
    let idle: f64 = tau.iter().map(|t| 1.0 - t).product();
    let succ = tau[i] * (1.0 - busy_probability(i, tau));
    let slot = idle * timing.slot() + (1.0 - idle) * timing.busy;
    Ok(succ * rate * timing.raw.t_txop / slot)
}

/// Airtime from the `τ` form: `(P_coll,i + P_succ,i) T / E{T_g}`.
pub fn airtime_tau_form(i: usize, tau: &[f64], timing: &TimingConstants) -> Result<f64> {
    check_tau(tau)?;
    let idle: f64 = tau.iter().map(|t| 1.0 - t).product();
    let busy = busy_probability(i, tau);
    let succ = tau[i] * (1.0 - busy);
    let coll = tau[i] * busy;
    let slot = idle * timing.slot() + (1.0 - idle) * timing.busy;
    Ok((coll + succ) * timing.busy / slot)
}

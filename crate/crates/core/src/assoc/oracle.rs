//! Brute-force reference for one AP shared by two STAs from two ISPs.

use serde::{Deserialize, Serialize};

use crate::analytics::metrics::{airtime_tau_form, throughput_tau_form};
use crate::analytics::tau::tau_upper_bound;
use crate::error::Result;
use crate::timing::TimingConstants;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub tau: [f64; 2],
    /// Total throughput in the units of the rates.
    pub throughput: f64,
}

/// Scans `τ_1, τ_2` on a `resolution²` grid over `[1e-4, τ̄(0)]` and keeps
/// the best point with `τ_i ≤ τ̄(τ_j)` and airtime `≥ η_i` for both.
pub fn grid_search_two_stations(
    rates: [f64; 2],
    eta: [f64; 2],
    timing: &TimingConstants,
    resolution: usize,
) -> Result<Option<GridOptimum>> {
    let n = timing.frozen_slots;
    let top = tau_upper_bound(0.0, n)?;
    let lo = 1e-4;
    let step = (top - lo) / (resolution - 1) as f64;
    let grid: Vec<f64> = (0..resolution).map(|k| lo + k as f64 * step).collect();
    let bounds: Vec<f64> = grid
        .iter()
        .map(|&t| tau_upper_bound(t, n))
        .collect::<Result<_>>()?;
    let mut best: Option<GridOptimum> = None;
    for (a, &t1) in grid.iter().enumerate() {
        for (b, &t2) in grid.iter().enumerate() {
            // each STA's collision probability is the other's τ
            if t1 > bounds[b] || t2 > bounds[a] {
                continue;
            }
            let tau = [t1, t2];
            if airtime_tau_form(0, &tau, timing)? < eta[0] || airtime_tau_form(1, &tau, timing)? < eta[1] {
                continue;
            }
            let total = throughput_tau_form(0, &tau, rates[0], timing)?
                + throughput_tau_form(1, &tau, rates[1], timing)?;
            if best.is_none_or(|b| total > b.throughput) {
                best = Some(GridOptimum { tau, throughput: total });
            }
        }
    }
    Ok(best)
}

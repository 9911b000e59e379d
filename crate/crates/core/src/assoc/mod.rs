//! Joint association and airtime control by successive geometric programming.
//!
//! Every (STA, AP) link with a positive rate gets a transmission probability
//! `τ = x/(1+x)`. The optimizer maximizes total throughput subject to a
//! per-ISP airtime floor and the per-link bound `τ ≤ τ̄(p)`. The problem is a
//! complementary GP: the posynomial denominators are condensed into
//! monomials at the current point and a standard GP is solved, repeatedly.
//!
//! The auxiliary relations `t = 1 + x`, `y = Π t − t'` and `u = Π_{others} 1/t`
//! enter as one-sided inequalities in the direction every other constraint
//! pushes them, so each condensed GP is an inner approximation of the
//! original problem and the iterates stay feasible.

mod cgp;
pub mod oracle;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytics::metrics::tau_from_x;
use crate::analytics::tau::tau_upper_bound;
use crate::error::{invalid, Error, Result};
use crate::gp::{solve_gp, GpOptions, GpStatus};
use crate::scenario::{evaluate_network, generate_topology, link_rates, ChannelModel, NetworkMetrics, RateMatrix, RateTable, TopologySpec};
use crate::timing::TimingConstants;

pub use cgp::{build_cgp, c14_lhs, Cgp, ConstraintCounts, Link, Phase};

/// One ISP: its STAs and airtime floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IspSpec {
    pub id: usize,
    pub members: Vec<usize>,
    pub eta: f64,
}

/// How airtime targets are chosen.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaPolicy {
    /// `η_k = N_a / |K|`.
    #[default]
    ApsPerIsp,
    Fixed(Vec<f64>),
    /// Equal targets at `fraction` of the largest airtime every ISP with a
    /// usable link can get at once. ISPs without usable links get 0.
    FairShare { fraction: f64 },
}

/// ISPs from per-STA labels, all with target `eta`.
pub fn isps_from_labels(isp_of: &[usize], isp_count: usize, eta: f64) -> Vec<IspSpec> {
    (0..isp_count)
        .map(|k| IspSpec {
            id: k,
            members: (0..isp_of.len()).filter(|&i| isp_of[i] == k).collect(),
            eta,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssocOptions {
    pub max_iter: usize,
    /// Stop when `max |Δx| / max(1, x)` falls below this.
    pub tol: f64,
    /// `M = m_factor · Σ r t` over links, with rates normalized to the fastest.
    pub m_factor: f64,
    pub init_x: f64,
    /// Extra starts with `x` spread around `init_x`. The uniform start is a
    /// fixed point on instances symmetric across STAs, even when an
    /// asymmetric point does better; the best run is kept.
    pub restarts: usize,
    /// Trust-region factors tried in order when a subproblem fails.
    pub trust_regions: Vec<f64>,
    pub gp: GpOptions,
}

impl Default for AssocOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-4,
            m_factor: 10.0,
            init_x: 0.01,
            restarts: 1,
            trust_regions: vec![10.0, 3.0, 1.5, 1.2, 1.1],
            gp: GpOptions {
                tol: 1e-10,
                ..GpOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub phase: Phase,
    /// Total throughput (Mbps) of the iterate.
    pub objective: f64,
    pub max_dx: f64,
    pub trust: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub c12: f64,
    pub c13: f64,
    pub c14: f64,
    pub c15: f64,
    pub c16: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.c12, self.c13, self.c14, self.c15, self.c16]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationSolution {
    /// `[sta][ap]`, zero on unusable links.
    pub tau: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    /// Collision probability seen on each link, `1 − u`.
    pub p: Vec<Vec<f64>>,
    pub metrics: NetworkMetrics,
    pub eta: Vec<f64>,
    pub trace: Vec<TraceRow>,
    /// Δ: SCA iterations over both phases.
    pub iterations: usize,
    pub feasibility_iterations: usize,
    pub converged: bool,
    /// The successive GP stopped because no trust region made progress.
    pub stalled: bool,
    pub excluded_stas: Vec<usize>,
    pub residuals: Residuals,
    /// Iterations used by each start, the uniform one first.
    pub start_iterations: Vec<usize>,
}

/// Start `s` of the multi-start: uniform for `s = 0`, otherwise each link
/// scaled by a factor in `[1, 1.5)` from a low-discrepancy sequence.
fn start_point(links: usize, init_x: f64, s: usize) -> Vec<f64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    (0..links)
        .map(|k| {
            if s == 0 {
                init_x
            } else {
                init_x * (1.0 + 0.5 * ((k + 1) as f64 * GOLDEN * s as f64).fract())
            }
        })
        .collect()
}

/// Runs the successive GP from `x = init_x` on every usable link, then from
/// `opts.restarts` spread starts, and keeps the highest total throughput.
pub fn solve_association(
    rates: &RateMatrix,
    isps: &[IspSpec],
    timing: &TimingConstants,
    opts: &AssocOptions,
) -> Result<AssociationSolution> {
    let cgp = build_cgp(rates, isps, timing, opts.m_factor)?;
    if let Some(sol) = single_station(&cgp, rates, isps, timing)? {
        return Ok(sol);
    }
    let mut best: Option<AssociationSolution> = None;
    let mut first_err = None;
    let mut used = Vec::with_capacity(opts.restarts + 1);
    for s in 0..=opts.restarts {
        match solve_from(&cgp, rates, isps, timing, opts, start_point(cgp.links.len(), opts.init_x, s)) {
            Ok(sol) => {
                used.push(sol.iterations);
                let better = best
                    .as_ref()
                    .is_none_or(|b| sol.metrics.total_throughput > b.metrics.total_throughput * (1.0 + 1e-9));
                if better {
                    best = Some(sol);
                }
            }
            Err(e @ Error::Infeasible(_)) => {
                used.push(0);
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some(mut sol) => {
            sol.start_iterations = used;
            Ok(sol)
        }
        None => Err(first_err.expect("at least one start ran")),
    }
}

fn solve_from(
    cgp: &Cgp,
    rates: &RateMatrix,
    isps: &[IspSpec],
    timing: &TimingConstants,
    opts: &AssocOptions,
    start: Vec<f64>,
) -> Result<AssociationSolution> {
    let mut x = start;
    let mut trace = Vec::new();
    let mut iterations = 0;

    // Phase 1: reach the airtime floors when the start misses them.
    let worst = cgp.target_fraction(&x);
    let mut feasibility_iterations = 0;
    if worst < 1.0 {
        let cap = 1.0 + 1e-3;
        let (found, fraction, used) = scale_phase(cgp, x, cap, opts, &mut trace)?;
        feasibility_iterations = used;
        iterations += used;
        if fraction < 1.0 {
            return Err(Error::Infeasible(format!(
                "airtime targets are out of reach: at best {:.4} of every target can be met at once",
                fraction
            )));
        }
        x = found;
    }

    let mut converged = false;
    let mut stalled = false;
    while iterations < opts.max_iter {
        let Some((next, trust, steps)) = sca_step(cgp, &x, Phase::Throughput, opts)? else {
            stalled = true;
            break;
        };
        // x is feasible for the condensed problem, so a lower objective is
        // solver noise: nothing left to gain
        if cgp.throughput_mbps(&next) < cgp.throughput_mbps(&x) {
            converged = true;
            break;
        }
        iterations += 1;
        let dx = max_relative_change(&x, &next);
        x = next;
        trace.push(TraceRow {
            iteration: iterations,
            phase: Phase::Throughput,
            objective: cgp.throughput_mbps(&x),
            max_dx: dx,
            trust,
            newton_steps: steps,
        });
        if dx < opts.tol {
            converged = true;
            break;
        }
    }
    let mut sol = finish(cgp, rates, isps, timing, x, trace, iterations, feasibility_iterations, converged)?;
    sol.stalled = stalled;
    Ok(sol)
}

/// Largest common airtime every ISP with a usable link can reach, and the
/// point that reaches it.
pub fn max_common_airtime(
    rates: &RateMatrix,
    isp_of: &[usize],
    isp_count: usize,
    timing: &TimingConstants,
    opts: &AssocOptions,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut isps = isps_from_labels(isp_of, isp_count, 1.0);
    for isp in &mut isps {
        if isp.members.iter().all(|&i| (0..rates.n_aps()).all(|a| !rates.usable(i, a))) {
            isp.eta = 0.0;
        }
    }
    if isps.iter().all(|k| k.eta == 0.0) {
        return Ok((0.0, vec![vec![0.0; rates.n_aps()]; rates.n_stas()]));
    }
    let cgp = build_cgp(rates, &isps, timing, opts.m_factor)?;
    let x0 = vec![opts.init_x; cgp.links.len()];
    let mut trace = Vec::new();
    let (x, level, _) = scale_phase(&cgp, x0, f64::INFINITY, opts, &mut trace)?;
    Ok((level, cgp.to_matrix(&x)))
}

/// Resolves a target policy into one `η` per ISP.
pub fn resolve_targets(
    policy: &EtaPolicy,
    rates: &RateMatrix,
    isp_of: &[usize],
    isp_count: usize,
    timing: &TimingConstants,
    opts: &AssocOptions,
) -> Result<Vec<f64>> {
    match policy {
        EtaPolicy::ApsPerIsp => Ok(vec![rates.n_aps() as f64 / isp_count as f64; isp_count]),
        EtaPolicy::Fixed(eta) => {
            if eta.len() != isp_count {
                return Err(invalid("eta", format!("expected {isp_count} targets, got {}", eta.len())));
            }
            Ok(eta.clone())
        }
        EtaPolicy::FairShare { fraction } => {
            if !(*fraction > 0.0 && *fraction < 1.0) {
                return Err(invalid("fraction", "must lie in (0, 1)"));
            }
            let (level, _) = max_common_airtime(rates, isp_of, isp_count, timing, opts)?;
            let usable: Vec<bool> = (0..isp_count)
                .map(|k| {
                    (0..isp_of.len())
                        .any(|i| isp_of[i] == k && (0..rates.n_aps()).any(|a| rates.usable(i, a)))
                })
                .collect();
            Ok(usable
                .into_iter()
                .map(|u| if u { fraction * level } else { 0.0 })
                .collect())
        }
    }
}

/// Maximizes a common scale `σ ≤ cap` of the airtime targets. Returns the
/// final point, the scale reached and the iterations used.
fn scale_phase(
    cgp: &Cgp,
    mut x: Vec<f64>,
    cap: f64,
    opts: &AssocOptions,
    trace: &mut Vec<TraceRow>,
) -> Result<(Vec<f64>, f64, usize)> {
    let mut level = cgp.target_fraction(&x);
    for used in 1..=opts.max_iter {
        let phase = Phase::Scale { cap };
        let Some((next, trust, steps)) = sca_step(cgp, &x, phase, opts)? else {
            return Ok((x, level, used - 1));
        };
        let dx = max_relative_change(&x, &next);
        x = next;
        let reached = cgp.target_fraction(&x);
        trace.push(TraceRow {
            iteration: trace.len() + 1,
            phase,
            objective: cgp.throughput_mbps(&x),
            max_dx: dx,
            trust,
            newton_steps: steps,
        });
        level = reached;
        if level >= cap * (1.0 - 1e-6) || dx < opts.tol {
            return Ok((x, level, used));
        }
    }
    Ok((x, level, opts.max_iter))
}

/// Condenses at `x`, solves the GP, and shrinks the trust region on failure.
/// `None` when no trust region yields progress; `x` is still feasible then.
fn sca_step(cgp: &Cgp, x: &[f64], phase: Phase, opts: &AssocOptions) -> Result<Option<(Vec<f64>, f64, usize)>> {
    for &trust in &opts.trust_regions {
        let (problem, start) = cgp.condensed(x, phase, trust)?;
        let sol = solve_gp(&problem, Some(&start), &opts.gp)?;
        let ok = match sol.status {
            GpStatus::Optimal => true,
            GpStatus::MaxIter => sol.max_violation < 1e-9,
            GpStatus::Infeasible => false,
        };
        if ok {
            let next = cgp.extract_x(&sol.x);
            // the inner approximation guarantees no loss; guard against a
            // subproblem that returned a clearly worse point anyway
            let (before, after) = (cgp.phase_value(x, phase), cgp.phase_value(&next, phase));
            if after >= before - 1e-6 * before.abs().max(1e-12) {
                return Ok(Some((next, trust, sol.newton_steps)));
            }
        }
    }
    Ok(None)
}

fn max_relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| (b - a).abs() / b.max(1.0))
        .fold(0.0, f64::max)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    cgp: &Cgp,
    rates: &RateMatrix,
    isps: &[IspSpec],
    timing: &TimingConstants,
    x: Vec<f64>,
    trace: Vec<TraceRow>,
    iterations: usize,
    feasibility_iterations: usize,
    converged: bool,
) -> Result<AssociationSolution> {
    let xm = cgp.to_matrix(&x);
    let (n, k) = (rates.n_stas(), rates.n_aps());
    let mut tau = vec![vec![0.0; k]; n];
    let mut p = vec![vec![0.0; k]; n];
    for i in 0..n {
        for a in 0..k {
            if rates.usable(i, a) {
                tau[i][a] = tau_from_x(xm[i][a]);
            }
        }
    }
    let mut c14 = 0.0f64;
    for a in 0..k {
        for i in 0..n {
            if !rates.usable(i, a) {
                continue;
            }
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| 1.0 - tau[j][a]).product();
            p[i][a] = 1.0 - others;
            let bound = tau_upper_bound(p[i][a], timing.frozen_slots)?;
            c14 = c14.max(tau[i][a] - bound);
        }
    }
    let mut isp_of = vec![0; n];
    for isp in isps {
        for &i in &isp.members {
            isp_of[i] = isp.id;
        }
    }
    let metrics = evaluate_network(&xm, rates, &isp_of, isps.len(), timing)?;
    let c13 = isps
        .iter()
        .map(|isp| isp.eta - metrics.isp_airtime[isp.id])
        .fold(0.0, f64::max);
    Ok(AssociationSolution {
        tau,
        x: xm,
        p,
        metrics,
        eta: isps.iter().map(|k| k.eta).collect(),
        trace,
        iterations,
        feasibility_iterations,
        converged,
        stalled: false,
        excluded_stas: cgp.excluded_stas.clone(),
        // t, y and u are recomputed from x, so their relations hold exactly
        residuals: Residuals {
            c13,
            c14: c14.max(0.0),
            ..Residuals::default()
        },
        start_iterations: vec![iterations],
    })
}

/// A network with one usable STA needs no iteration: alone on each of its
/// links it sees `p = 0`, so throughput peaks at the bound `τ = 1/3`.
fn single_station(
    cgp: &Cgp,
    rates: &RateMatrix,
    isps: &[IspSpec],
    timing: &TimingConstants,
) -> Result<Option<AssociationSolution>> {
    let mut stas: Vec<usize> = cgp.links.iter().map(|l| l.sta).collect();
    stas.dedup();
    if stas.len() != 1 {
        return Ok(None);
    }
    let bound = tau_upper_bound(0.0, timing.frozen_slots)?;
    let x = vec![bound / (1.0 - bound); cgp.links.len()];
    let sol = finish(cgp, rates, isps, timing, x, Vec::new(), 0, 0, true)?;
    if sol.residuals.c13 > 0.0 {
        return Err(Error::Infeasible(format!(
            "a single STA cannot meet its ISP's airtime target {:?}",
            sol.eta
        )));
    }
    Ok(Some(sol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub lambda_mean: f64,
    pub replication: usize,
    pub stations: usize,
    pub links: usize,
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
}

/// Δ across a sweep of STA densities, one scenario per (λ, replication).
/// Targets follow `policy`; infeasible instances are skipped.
#[allow(clippy::too_many_arguments)]
pub fn iteration_count_experiment(
    lambdas: &[f64],
    replications: usize,
    base: &TopologySpec,
    policy: &EtaPolicy,
    channel: &ChannelModel,
    table: &RateTable,
    timing: &TimingConstants,
    opts: &AssocOptions,
    seed: u64,
) -> Result<Vec<IterationRow>> {
    let mut rows = Vec::new();
    for (li, &lambda_mean) in lambdas.iter().enumerate() {
        let spec = TopologySpec {
            lambda_mean,
            ..base.clone()
        };
        for rep in 0..replications {
            let s = seed.wrapping_add((li * replications + rep) as u64);
            let topo = generate_topology(&spec, s)?;
            let rates = link_rates(&topo, channel, table, s)?;
            let isp_of: Vec<usize> = topo.stas.iter().map(|st| st.isp).collect();
            let started = Instant::now();
            let eta = match resolve_targets(policy, &rates, &isp_of, topo.isp_count, timing, opts) {
                Ok(eta) => eta,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            };
            let isps: Vec<IspSpec> = isps_from_labels(&isp_of, topo.isp_count, 0.0)
                .into_iter()
                .zip(eta)
                .map(|(k, eta)| IspSpec { eta, ..k })
                .collect();
            let sol = match solve_association(&rates, &isps, timing, opts) {
                Ok(sol) => sol,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            };
            rows.push(IterationRow {
                lambda_mean,
                replication: rep,
                stations: topo.stas.len(),
                links: (0..rates.n_stas())
                    .map(|i| (0..rates.n_aps()).filter(|&a| rates.usable(i, a)).count())
                    .sum(),
                iterations: sol.iterations,
                converged: sol.converged,
                wall_seconds: started.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests;

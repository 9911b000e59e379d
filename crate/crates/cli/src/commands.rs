//! The `simulate`, `optimize` and `params` subcommands.

use std::path::{Path, PathBuf};

use airslice_core::analytics::{busy_probability, solve_bss_fixed_point};
use airslice_core::assoc::{isps_from_labels, resolve_targets, solve_association, IspSpec, Phase};
use airslice_core::control::{params_for_tau_from, params_for_tau_refined};
use airslice_core::scenario::{generate_topology, link_rates, max_snr_association};
use airslice_core::sim::{run_sim, Horizon, SimConfig, StationConfig};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::experiments::{BASELINE, GP};
use crate::output::{write_csv, Stamp};

fn stamp(cfg: &ExperimentConfig) -> Stamp {
    Stamp {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimRow {
    pub station: usize,
    pub w_min: u32,
    pub m: u32,
    pub h: u32,
    pub a: u32,
    pub q: f64,
    pub l: u32,
    pub rate_mbps: f64,
    pub tau: f64,
    pub tau_ci95: f64,
    /// Fixed-point prediction of the analytical model.
    pub model_tau: f64,
    pub throughput_mbps: f64,
    pub throughput_ci95: f64,
    pub airtime: f64,
    pub airtime_ci95: f64,
    pub collision_probability: f64,
    pub collision_probability_ci95: f64,
    pub attempts: u64,
    pub successes: u64,
    pub collisions: u64,
    pub no_success: bool,
}

/// Simulates the configured BSS and writes `simulate.csv`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let timing = cfg.timing()?;
    let s = &cfg.simulate;
    if s.stations.is_empty() {
        bail!("simulate.stations is empty");
    }
    let stations: Vec<StationConfig> = s
        .stations
        .iter()
        .map(|st| StationConfig {
            params: st.params,
            rate: st.rate_mbps * 1e6,
        })
        .collect();
    let mut sim = SimConfig::new(stations, timing, Horizon::Slots(s.slots), cfg.seed);
    sim.warmup_fraction = s.warmup_fraction;
    sim.batches = s.batches;
    let report = run_sim(&sim)?;
    let params: Vec<_> = s.stations.iter().map(|st| st.params).collect();
    let model = solve_bss_fixed_point(&params, &timing)?;
    let stamp = stamp(cfg);
    let rows: Vec<SimRow> = report
        .stations
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = s.stations[i].params;
            SimRow {
                station: i,
                w_min: p.w_min,
                m: p.m,
                h: p.h,
                a: p.a,
                q: p.q,
                l: p.l,
                rate_mbps: s.stations[i].rate_mbps,
                tau: r.tau.mean,
                tau_ci95: r.tau.ci95,
                model_tau: model.tau[i],
                throughput_mbps: r.throughput.mean / 1e6,
                throughput_ci95: r.throughput.ci95 / 1e6,
                airtime: r.airtime.mean,
                airtime_ci95: r.airtime.ci95,
                collision_probability: r.collision_probability.mean,
                collision_probability_ci95: r.collision_probability.ci95,
                attempts: r.attempts,
                successes: r.successes,
                collisions: r.collisions,
                no_success: r.no_success,
            }
        })
        .collect();
    write_csv(&cfg.out_dir, "simulate.csv", &rows, &stamp)
}

#[derive(Debug, Clone, Serialize)]
struct LinkRow {
    scheme: &'static str,
    sta: usize,
    isp: usize,
    ap: usize,
    rate_mbps: f64,
    snr_db: f64,
    tau: f64,
    x: f64,
}

#[derive(Debug, Clone, Serialize)]
struct IspRow {
    scheme: &'static str,
    isp: usize,
    eta: f64,
    throughput_mbps: f64,
    airtime: f64,
}

#[derive(Debug, Clone, Serialize)]
struct TraceCsvRow {
    iteration: usize,
    phase: &'static str,
    objective: f64,
    max_dx: f64,
    trust: f64,
    newton_steps: usize,
}

/// One scenario drawn from `scenario` with the run seed, solved by both
/// schemes. Writes `optimize_links.csv`, `optimize_isps.csv` and
/// `optimize_trace.csv`.
pub fn optimize(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let timing = cfg.timing()?;
    let table = cfg.rate_table()?;
    let topo = generate_topology(&cfg.scenario, cfg.seed)?;
    let rates = link_rates(&topo, &cfg.channel, &table, cfg.seed)?;
    let isp_of: Vec<usize> = topo.stas.iter().map(|s| s.isp).collect();
    let k = topo.isp_count;
    let stamp = stamp(cfg);

    let base = max_snr_association(&rates, &isp_of, k, &cfg.defaults.into(), &timing)?;
    let eta = resolve_targets(&cfg.eta, &rates, &isp_of, k, &timing, &cfg.optimizer)?;
    let isps: Vec<IspSpec> = isps_from_labels(&isp_of, k, 0.0)
        .into_iter()
        .zip(&eta)
        .map(|(isp, &eta)| IspSpec { eta, ..isp })
        .collect();
    let sol = solve_association(&rates, &isps, &timing, &cfg.optimizer).context("GP association")?;

    let mut links = Vec::new();
    for (scheme, tau, x) in [(BASELINE, &base.tau, &base.x), (GP, &sol.tau, &sol.x)] {
        for i in 0..rates.n_stas() {
            for a in 0..rates.n_aps() {
                if tau[i][a] > 0.0 {
                    links.push(LinkRow {
                        scheme,
                        sta: i,
                        isp: isp_of[i],
                        ap: a,
                        rate_mbps: rates.rate(i, a),
                        snr_db: rates.snr_db[i][a],
                        tau: tau[i][a],
                        x: x[i][a],
                    });
                }
            }
        }
    }
    let mut per_isp = Vec::new();
    for (scheme, metrics, eta) in [(BASELINE, &base.metrics, None), (GP, &sol.metrics, Some(&sol.eta))] {
        for isp in 0..k {
            per_isp.push(IspRow {
                scheme,
                isp,
                eta: eta.map_or(f64::NAN, |e| e[isp]),
                throughput_mbps: metrics.isp_throughput[isp],
                airtime: metrics.isp_airtime[isp],
            });
        }
    }
    let trace: Vec<TraceCsvRow> = sol
        .trace
        .iter()
        .map(|r| TraceCsvRow {
            iteration: r.iteration,
            phase: match r.phase {
                Phase::Throughput => "throughput",
                Phase::Scale { .. } => "scale",
            },
            objective: r.objective,
            max_dx: r.max_dx,
            trust: r.trust,
            newton_steps: r.newton_steps,
        })
        .collect();
    Ok(vec![
        write_csv(&cfg.out_dir, "optimize_links.csv", &links, &stamp)?,
        write_csv(&cfg.out_dir, "optimize_isps.csv", &per_isp, &stamp)?,
        write_csv(&cfg.out_dir, "optimize_trace.csv", &trace, &stamp)?,
    ])
}

/// A row of the `params` input: a target and, optionally, the collision
/// probability the station sees.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TauTarget {
    tau: f64,
    p: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct ParamsRow {
    tau_target: f64,
    p: f64,
    w_min: u32,
    m: u32,
    h: u32,
    a: u32,
    q: f64,
    l: u32,
    tau_model: f64,
    relative_error: f64,
    last_knob: &'static str,
    unreachable: bool,
}

/// Inverts a table of targets into EDCA parameters and writes `params.csv`.
///
/// The table has a `tau` column and an optional `p` column. Rows without `p`
/// are taken as the STAs of one BSS, so each sees
/// `p = 1 − Π_{others}(1 − τ)`.
pub fn params(cfg: &ExperimentConfig, table: &Path, refined: bool) -> Result<PathBuf> {
    let timing = cfg.timing()?;
    let mut reader = csv::Reader::from_path(table).with_context(|| format!("opening {}", table.display()))?;
    let targets: Vec<TauTarget> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("reading {}", table.display()))?;
    let taus: Vec<f64> = targets.iter().map(|t| t.tau).collect();
    let stamp = stamp(cfg);
    let mut rows = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let p = t.p.unwrap_or_else(|| busy_probability(i, &taus));
        let r = if refined {
            params_for_tau_refined(cfg.defaults, t.tau, p, &timing)?
        } else {
            params_for_tau_from(cfg.defaults, t.tau, p, &timing)?
        };
        rows.push(ParamsRow {
            tau_target: t.tau,
            p,
            w_min: r.params.w_min,
            m: r.params.m,
            h: r.params.h,
            a: r.params.a,
            q: r.params.q,
            l: r.params.l,
            tau_model: r.tau,
            relative_error: r.relative_error(t.tau),
            last_knob: r.knob.name(),
            unreachable: r.unreachable,
        });
    }
    write_csv(&cfg.out_dir, "params.csv", &rows, &stamp)
}

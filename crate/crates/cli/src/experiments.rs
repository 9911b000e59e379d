//! Replicated scenario runs: Max-SNR baseline against the GP association.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use airslice_core::assoc::{isps_from_labels, resolve_targets, solve_association, AssocOptions, EtaPolicy, IspSpec};
use airslice_core::scenario::{
    generate_topology, jain_index, link_rates, max_snr_association, ChannelModel, Density, RateTable, TopologySpec,
};
use airslice_core::{EdcaParams, Error, TimingConstants};
use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentName};
use crate::output::{mean_ci, write_csv, Stamp};

/// Everything a replication needs besides its topology parameters.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub timing: TimingConstants,
    pub channel: ChannelModel,
    pub table: RateTable,
    pub defaults: EdcaParams,
    pub opts: AssocOptions,
    pub eta: EtaPolicy,
}

impl RunContext {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            timing: cfg.timing()?,
            channel: cfg.channel,
            table: cfg.rate_table()?,
            defaults: EdcaParams::from(cfg.defaults),
            opts: cfg.optimizer.clone(),
            eta: cfg.eta.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub isp_throughput: Vec<f64>,
    pub isp_airtime: Vec<f64>,
    pub total_throughput: f64,
    /// `None` when every ISP got zero throughput.
    pub jain: Option<f64>,
}

impl SchemeResult {
    fn new(isp_throughput: Vec<f64>, isp_airtime: Vec<f64>, total_throughput: f64) -> Result<Self> {
        let jain = match jain_index(&isp_throughput) {
            Ok(f) => Some(f),
            Err(Error::UndefinedFairness) => None,
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            isp_throughput,
            isp_airtime,
            total_throughput,
            jain,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpResult {
    pub metrics: SchemeResult,
    pub eta: Vec<f64>,
    pub iterations: usize,
    /// Largest iteration count over all starts of the multi-start.
    pub max_start_iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    pub max_residual: f64,
    /// Every throughput-phase step kept the objective within 1e-8 of the last.
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    /// The GP scheme could not meet the airtime targets.
    Infeasible,
    /// No STA has a usable link to any AP.
    NoLinks,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRun {
    pub spec: TopologySpec,
    pub replication: usize,
    pub scenario_seed: u64,
    pub stations: usize,
    pub excluded_stas: usize,
    pub links: usize,
    pub status: RunStatus,
    pub reason: Option<String>,
    pub baseline: SchemeResult,
    pub gp: Option<GpResult>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Seed of replication `rep` at sweep point `point`.
pub fn scenario_seed(base: u64, point: usize, rep: usize) -> u64 {
    base.wrapping_add(1_000_000 * point as u64 + rep as u64)
}

/// One scenario: topology, link rates, both association schemes.
pub fn run_scenario(ctx: &RunContext, spec: &TopologySpec, replication: usize, seed: u64) -> Result<ScenarioRun> {
    let started = Instant::now();
    let topo = generate_topology(spec, seed)?;
    let rates = link_rates(&topo, &ctx.channel, &ctx.table, seed)?;
    let isp_of: Vec<usize> = topo.stas.iter().map(|s| s.isp).collect();
    let k = topo.isp_count;
    let links = (0..rates.n_stas())
        .map(|i| (0..rates.n_aps()).filter(|&a| rates.usable(i, a)).count())
        .sum();

    let base = max_snr_association(&rates, &isp_of, k, &ctx.defaults, &ctx.timing)?;
    let baseline = SchemeResult::new(
        base.metrics.isp_throughput.clone(),
        base.metrics.isp_airtime.clone(),
        base.metrics.total_throughput,
    )?;

    let mut run = ScenarioRun {
        spec: spec.clone(),
        replication,
        scenario_seed: seed,
        stations: topo.stas.len(),
        excluded_stas: rates.excluded_stas().len(),
        links,
        status: RunStatus::Ok,
        reason: None,
        baseline,
        gp: None,
        wall_seconds: 0.0,
    };
    if links == 0 {
        run.status = RunStatus::NoLinks;
        run.wall_seconds = started.elapsed().as_secs_f64();
        return Ok(run);
    }
    let solved = resolve_targets(&ctx.eta, &rates, &isp_of, k, &ctx.timing, &ctx.opts).and_then(|eta| {
        let isps: Vec<IspSpec> = isps_from_labels(&isp_of, k, 0.0)
            .into_iter()
            .zip(eta)
            .map(|(isp, eta)| IspSpec { eta, ..isp })
            .collect();
        solve_association(&rates, &isps, &ctx.timing, &ctx.opts)
    });
    match solved {
        Ok(sol) => {
            let main: Vec<f64> = sol
                .trace
                .iter()
                .filter(|r| r.phase == airslice_core::assoc::Phase::Throughput)
                .map(|r| r.objective)
                .collect();
            let monotone = main.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0));
            run.gp = Some(GpResult {
                metrics: SchemeResult::new(
                    sol.metrics.isp_throughput.clone(),
                    sol.metrics.isp_airtime.clone(),
                    sol.metrics.total_throughput,
                )?,
                eta: sol.eta.clone(),
                iterations: sol.iterations,
                max_start_iterations: sol.start_iterations.iter().copied().max().unwrap_or(0),
                converged: sol.converged,
                stalled: sol.stalled,
                max_residual: sol.residuals.max(),
                monotone,
            });
        }
        Err(Error::Infeasible(why)) => {
            run.status = RunStatus::Infeasible;
            run.reason = Some(why);
        }
        Err(e) => return Err(e.into()),
    }
    run.wall_seconds = started.elapsed().as_secs_f64();
    Ok(run)
}

/// Sweep points of an experiment family.
pub fn sweep_points(name: ExperimentName, cfg: &ExperimentConfig) -> Vec<TopologySpec> {
    let base = &cfg.scenario;
    let with = |kind: Density, lambda_mean: f64, rho: f64| TopologySpec {
        kind,
        lambda_mean,
        rho,
        ..base.clone()
    };
    match name {
        ExperimentName::ThroughputVsDensityHomogeneous => {
            cfg.sweep.lambdas.iter().map(|&l| with(Density::Homogeneous, l, base.rho)).collect()
        }
        ExperimentName::ThroughputVsDensityNonhomogeneous => {
            cfg.sweep.lambdas.iter().map(|&l| with(Density::NonHomogeneous, l, base.rho)).collect()
        }
        ExperimentName::ThroughputVsLoad => {
            cfg.sweep.rhos.iter().map(|&r| with(base.kind, cfg.sweep.load_lambda, r)).collect()
        }
        ExperimentName::FairnessVsDensity => cfg
            .sweep
            .lambdas
            .iter()
            .flat_map(|&l| cfg.sweep.rhos.iter().map(move |&r| (l, r)))
            .map(|(l, r)| with(base.kind, l, r))
            .collect(),
        ExperimentName::Iterations => cfg.sweep.lambdas.iter().map(|&l| with(base.kind, l, base.rho)).collect(),
    }
}

/// Runs every (point, replication) pair on `jobs` threads. Results come back
/// in point-major order whatever the scheduling.
pub fn run_points(
    ctx: &RunContext,
    points: &[TopologySpec],
    replications: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<Vec<ScenarioRun>> {
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..replications).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, r)| run_scenario(ctx, &points[p], r, scenario_seed(seed, p, r)))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub density: Density,
    pub lambda_mean: f64,
    pub rho: f64,
    pub scheme: &'static str,
    /// ISP index, or `all` for network-wide metrics.
    pub isp: String,
    pub metric: &'static str,
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
    /// Replications left out because the GP scheme had no answer.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub density: Density,
    pub lambda_mean: f64,
    pub rho: f64,
    pub replication: usize,
    pub scenario_seed: u64,
    pub status: RunStatus,
    pub scheme: &'static str,
    pub isp: String,
    pub metric: &'static str,
    pub value: f64,
}

pub const BASELINE: &str = "max-snr";
pub const GP: &str = "gp";

fn scheme_values(m: &SchemeResult) -> Vec<(String, &'static str, f64)> {
    let mut out = vec![("all".to_string(), "total_throughput", m.total_throughput)];
    if let Some(f) = m.jain {
        out.push(("all".to_string(), "jain", f));
    }
    for (k, (&t, &a)) in m.isp_throughput.iter().zip(&m.isp_airtime).enumerate() {
        out.push((k.to_string(), "isp_throughput", t));
        out.push((k.to_string(), "isp_airtime", a));
    }
    out
}

fn gp_values(g: &GpResult) -> Vec<(String, &'static str, f64)> {
    let mut out = scheme_values(&g.metrics);
    out.push(("all".to_string(), "iterations", g.iterations as f64));
    out.push(("all".to_string(), "converged", f64::from(u8::from(g.converged))));
    for (k, &e) in g.eta.iter().enumerate() {
        out.push((k.to_string(), "eta", e));
    }
    out
}

/// Long-format rows, one per (replication, scheme, ISP, metric).
pub fn replication_rows(runs: &[ScenarioRun]) -> Vec<ReplicationRow> {
    let mut rows = Vec::new();
    for run in runs {
        let mut push = |scheme: &'static str, values: Vec<(String, &'static str, f64)>| {
            for (isp, metric, value) in values {
                rows.push(ReplicationRow {
                    density: run.spec.kind,
                    lambda_mean: run.spec.lambda_mean,
                    rho: run.spec.rho,
                    replication: run.replication,
                    scenario_seed: run.scenario_seed,
                    status: run.status,
                    scheme,
                    isp,
                    metric,
                    value,
                });
            }
        };
        let mut common = scheme_values(&run.baseline);
        common.push(("all".to_string(), "stations", run.stations as f64));
        common.push(("all".to_string(), "excluded_stas", run.excluded_stas as f64));
        push(BASELINE, common);
        if let Some(g) = &run.gp {
            push(GP, gp_values(g));
        }
    }
    rows
}

/// Mean and CI per sweep point, scheme, ISP and metric, over the
/// replications where the GP scheme produced an answer.
pub fn summarize(runs: &[ScenarioRun]) -> Vec<SummaryRow> {
    // sweep points keyed by their position of first appearance
    let mut order: Vec<TopologySpec> = Vec::new();
    for run in runs {
        if !order.contains(&run.spec) {
            order.push(run.spec.clone());
        }
    }
    let mut rows = Vec::new();
    for spec in &order {
        let at: Vec<&ScenarioRun> = runs.iter().filter(|r| &r.spec == spec).collect();
        let kept: Vec<&ScenarioRun> = at.iter().copied().filter(|r| r.gp.is_some()).collect();
        let excluded = at.len() - kept.len();
        let mut groups: BTreeMap<(u8, String, &'static str), Vec<f64>> = BTreeMap::new();
        // keep metric order stable: scheme, then first-seen metric order
        let mut seen: Vec<(u8, String, &'static str)> = Vec::new();
        for run in &kept {
            let gp = run.gp.as_ref().expect("kept runs have a GP answer");
            for (scheme, values) in [(0u8, scheme_values(&run.baseline)), (1u8, gp_values(gp))] {
                for (isp, metric, v) in values {
                    let key = (scheme, isp, metric);
                    if !seen.contains(&key) {
                        seen.push(key.clone());
                    }
                    groups.entry(key).or_default().push(v);
                }
            }
        }
        seen.sort_by_key(|k| k.0);
        for key in seen {
            let values = &groups[&key];
            let (mean, ci95) = mean_ci(values);
            rows.push(SummaryRow {
                density: spec.kind,
                lambda_mean: spec.lambda_mean,
                rho: spec.rho,
                scheme: if key.0 == 0 { BASELINE } else { GP },
                isp: key.1,
                metric: key.2,
                mean,
                ci95,
                n: values.len(),
                excluded,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
struct TimingRecord {
    lambda_mean: f64,
    replication: usize,
    scenario_seed: u64,
    iterations: Option<usize>,
    wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<ScenarioRun>,
    pub files: Vec<PathBuf>,
}

/// Runs one family and writes `<name>.csv`, `<name>_replications.csv` and,
/// for the iteration count sweep, a JSON sidecar with wall-clock times.
pub fn run_experiment(name: ExperimentName, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ctx = RunContext::from_config(cfg)?;
    let points = sweep_points(name, cfg);
    let runs = run_points(&ctx, &points, cfg.replications, cfg.seed, cfg.jobs)?;
    let stamp = Stamp {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    let mut files = vec![
        write_csv(&cfg.out_dir, &format!("{}.csv", name.as_str()), &summarize(&runs), &stamp)?,
        write_csv(
            &cfg.out_dir,
            &format!("{}_replications.csv", name.as_str()),
            &replication_rows(&runs),
            &stamp,
        )?,
    ];
    if name == ExperimentName::Iterations {
        // wall time varies between runs, so it stays out of the CSVs
        let records: Vec<TimingRecord> = runs
            .iter()
            .map(|r| TimingRecord {
                lambda_mean: r.spec.lambda_mean,
                replication: r.replication,
                scenario_seed: r.scenario_seed,
                iterations: r.gp.as_ref().map(|g| g.iterations),
                wall_seconds: r.wall_seconds,
            })
            .collect();
        let path = cfg.out_dir.join("iterations_timing.json");
        std::fs::write(&path, serde_json::to_string_pretty(&records)?)?;
        files.push(path);
    }
    Ok(ExperimentOutput { runs, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_do_not_collide_across_points() {
        let mut seen = std::collections::HashSet::new();
        for p in 0..30 {
            for r in 0..100 {
                assert!(seen.insert(scenario_seed(7, p, r)));
            }
        }
    }

    #[test]
    fn sweeps_follow_the_config() {
        let cfg = ExperimentConfig::default();
        assert_eq!(sweep_points(ExperimentName::FairnessVsDensity, &cfg).len(), 30);
        let load = sweep_points(ExperimentName::ThroughputVsLoad, &cfg);
        assert!(load.iter().all(|s| s.lambda_mean == 3.0));
        assert_eq!(load.iter().map(|s| s.rho).collect::<Vec<_>>(), cfg.sweep.rhos);
        let nh = sweep_points(ExperimentName::ThroughputVsDensityNonhomogeneous, &cfg);
        assert!(nh.iter().all(|s| s.kind == Density::NonHomogeneous));
    }
}

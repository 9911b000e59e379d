use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::grid_search_two_stations;
use super::*;
use crate::timing::{derive_timing, RawTiming};

fn timing() -> TimingConstants {
    derive_timing(&RawTiming::default()).unwrap()
}

fn two_isps(eta: [f64; 2]) -> Vec<IspSpec> {
    vec![
        IspSpec { id: 0, members: vec![0], eta: eta[0] },
        IspSpec { id: 1, members: vec![1], eta: eta[1] },
    ]
}

fn one_ap(r1: f64, r2: f64) -> RateMatrix {
    RateMatrix::from_rates(vec![vec![r1], vec![r2]]).unwrap()
}

#[test]
fn constraint_counts_for_one_ap() {
    let cgp = build_cgp(&one_ap(6.0, 54.0), &two_isps([0.3, 0.3]), &timing(), 10.0).unwrap();
    let c = cgp.counts();
    assert_eq!((c.c11, c.c12, c.c13, c.c14, c.c15, c.c16), (1, 1, 2, 2, 2, 2));
    let (gp, _) = cgp.condensed(&[0.01, 0.01], Phase::Throughput, 10.0).unwrap();
    assert_eq!(gp.inequalities.len(), 1 + 1 + 2 + 3 * 2);
}

#[test]
fn c14_matches_the_tau_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let u: f64 = rng.random_range(0.01..1.0);
        let x: f64 = rng.random_range(1e-4..2.0);
        let n: u32 = rng.random_range(0..200);
        let tau = x / (1.0 + x);
        let bound = tau_upper_bound(1.0 - u, n).unwrap();
        // numerator − denominator = u (1+x) (τ/τ̄ − 1)
        let nf = n as f64;
        let diff = (u * x + (1.0 + nf) * x) - (u + nf * u * u * x);
        let expected = u * (1.0 + x) * (tau / bound - 1.0);
        assert!((diff - expected).abs() <= 1e-9 * (1.0 + diff.abs()), "{diff} vs {expected}");
        assert_eq!(c14_lhs(u, x, nf) <= 1.0, tau <= bound * (1.0 + 1e-12) || (tau - bound).abs() < 1e-12);
    }
}

#[test]
fn default_targets_sum_to_the_ap_count() {
    let rates = RateMatrix::from_rates(vec![vec![6.0; 4]; 3]).unwrap();
    let eta = resolve_targets(&EtaPolicy::ApsPerIsp, &rates, &[0, 1, 1], 2, &timing(), &AssocOptions::default()).unwrap();
    assert_eq!(eta.iter().sum::<f64>(), 4.0);
}

#[test]
fn tight_symmetric_targets_split_evenly() {
    // with both floors near half the airtime no asymmetric point is feasible
    let sol = solve_association(&one_ap(24.0, 24.0), &two_isps([0.45, 0.45]), &timing(), &AssocOptions::default()).unwrap();
    assert!(sol.converged);
    let (a, b) = (sol.tau[0][0], sol.tau[1][0]);
    assert!((a - b).abs() < 1e-4 * a, "{a} {b}");
    let air = &sol.metrics.isp_airtime;
    assert!((air[0] - air[1]).abs() < 1e-3, "{air:?}");
}

#[test]
fn matches_the_grid_oracle() {
    let t = timing();
    for eta in [0.3, 0.45] {
        let sol = solve_association(&one_ap(6.0, 54.0), &two_isps([eta, eta]), &t, &AssocOptions::default()).unwrap();
        let grid = grid_search_two_stations([6.0, 54.0], [eta, eta], &t, 400).unwrap().unwrap();
        let gp = sol.metrics.total_throughput;
        assert!(gp >= grid.throughput * (1.0 - 0.005), "eta {eta}: {gp} vs {}", grid.throughput);
        assert!(sol.residuals.max() < 1e-6, "{:?}", sol.residuals);
    }
}

#[test]
fn doubling_m_leaves_the_optimum() {
    let t = timing();
    let tight = AssocOptions { tol: 1e-10, ..AssocOptions::default() };
    let base = solve_association(&one_ap(12.0, 36.0), &two_isps([0.3, 0.3]), &t, &tight).unwrap();
    let doubled = AssocOptions { m_factor: 20.0, ..tight };
    let other = solve_association(&one_ap(12.0, 36.0), &two_isps([0.3, 0.3]), &t, &doubled).unwrap();
    for i in 0..2 {
        let d = (base.tau[i][0] - other.tau[i][0]).abs();
        assert!(d < 1e-6, "STA {i}: {d:e}");
    }
}

#[test]
fn zero_rate_links_stay_off() {
    let rates = RateMatrix::from_rates(vec![vec![12.0, 0.0], vec![0.0, 6.0], vec![24.0, 18.0]]).unwrap();
    let isps = vec![
        IspSpec { id: 0, members: vec![0, 1], eta: 0.4 },
        IspSpec { id: 1, members: vec![2], eta: 0.4 },
    ];
    let sol = solve_association(&rates, &isps, &timing(), &AssocOptions::default()).unwrap();
    assert_eq!(sol.tau[0][1], 0.0);
    assert_eq!(sol.tau[1][0], 0.0);
    assert!(sol.tau[2][0] > 0.0 && sol.tau[2][1] > 0.0);
    assert!(sol.residuals.max() < 1e-6);
}

#[test]
fn empty_isp_with_a_target_is_infeasible() {
    let isps = vec![
        IspSpec { id: 0, members: vec![0, 1], eta: 0.3 },
        IspSpec { id: 1, members: vec![], eta: 0.3 },
    ];
    let err = solve_association(&one_ap(6.0, 6.0), &isps, &timing(), &AssocOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)));
}

#[test]
fn excessive_targets_are_reported() {
    let err = solve_association(&one_ap(6.0, 6.0), &two_isps([0.6, 0.6]), &timing(), &AssocOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)), "{err:?}");
}

#[test]
fn single_station_is_closed_form() {
    let rates = RateMatrix::from_rates(vec![vec![54.0, 6.0]]).unwrap();
    let isps = vec![IspSpec { id: 0, members: vec![0], eta: 1.5 }];
    let sol = solve_association(&rates, &isps, &timing(), &AssocOptions::default()).unwrap();
    assert_eq!(sol.iterations, 0);
    assert!((sol.tau[0][0] - 1.0 / 3.0).abs() < 1e-12);
    assert!(sol.metrics.isp_airtime[0] > 1.5);
}

#[test]
fn trace_is_monotone() {
    let rates = RateMatrix::from_rates(vec![vec![6.0, 12.0], vec![54.0, 0.0], vec![18.0, 24.0], vec![0.0, 36.0]]).unwrap();
    let isps = vec![
        IspSpec { id: 0, members: vec![0, 1], eta: 0.5 },
        IspSpec { id: 1, members: vec![2, 3], eta: 0.5 },
    ];
    let sol = solve_association(&rates, &isps, &timing(), &AssocOptions::default()).unwrap();
    assert!(sol.converged);
    let main: Vec<f64> = sol
        .trace
        .iter()
        .filter(|r| r.phase == Phase::Throughput)
        .map(|r| r.objective)
        .collect();
    for w in main.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 1e-8), "{} -> {}", w[0], w[1]);
    }
    assert!(sol.residuals.max() < 1e-6, "{:?}", sol.residuals);
}

#[test]
fn fair_share_is_reachable() {
    let rates = RateMatrix::from_rates(vec![vec![6.0, 0.0], vec![54.0, 12.0], vec![0.0, 24.0]]).unwrap();
    let isp_of = [0, 1, 1];
    let t = timing();
    let opts = AssocOptions::default();
    let (level, _) = max_common_airtime(&rates, &isp_of, 2, &t, &opts).unwrap();
    assert!(level > 0.3 && level < 2.0, "{level}");
    let eta = resolve_targets(&EtaPolicy::FairShare { fraction: 0.95 }, &rates, &isp_of, 2, &t, &opts).unwrap();
    let isps: Vec<IspSpec> = isps_from_labels(&isp_of, 2, 0.0)
        .into_iter()
        .zip(eta)
        .map(|(k, eta)| IspSpec { eta, ..k })
        .collect();
    let sol = solve_association(&rates, &isps, &t, &opts).unwrap();
    for k in 0..2 {
        assert!(sol.metrics.isp_airtime[k] >= isps[k].eta - 1e-6);
    }
}

#[test]
fn spread_start_leaves_the_symmetric_ridge() {
    let t = timing();
    let grid = grid_search_two_stations([18.0, 18.0], [0.3, 0.3], &t, 400).unwrap().unwrap();
    let literal = AssocOptions { restarts: 0, ..AssocOptions::default() };
    let uniform = solve_association(&one_ap(18.0, 18.0), &two_isps([0.3, 0.3]), &t, &literal).unwrap();
    // the uniform start is a fixed point of the iteration
    assert!((uniform.tau[0][0] - uniform.tau[1][0]).abs() < 1e-9);
    assert!(uniform.metrics.total_throughput < grid.throughput * 0.995);
    let sol = solve_association(&one_ap(18.0, 18.0), &two_isps([0.3, 0.3]), &t, &AssocOptions::default()).unwrap();
    assert_eq!(sol.start_iterations.len(), 2);
    assert!(sol.metrics.total_throughput >= grid.throughput * (1.0 - 1e-3));
}

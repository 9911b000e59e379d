use airslice_core::assoc::{isps_from_labels, resolve_targets, solve_association, AssocOptions, EtaPolicy, IspSpec};
use airslice_core::scenario::{
    generate_topology, jain_index, link_rates, max_snr_association, ChannelModel, Density, RateMatrix, RateTable,
    TopologySpec,
};
use airslice_core::{derive_timing, EdcaParams, RawTiming};

fn spec(kind: Density, lambda: f64) -> TopologySpec {
    TopologySpec { kind, lambda_mean: lambda, ..TopologySpec::default() }
}

fn permute_aps(rates: &RateMatrix, order: &[usize]) -> RateMatrix {
    let pick = |m: &Vec<Vec<f64>>| m.iter().map(|row| order.iter().map(|&a| row[a]).collect()).collect();
    RateMatrix {
        distance: pick(&rates.distance),
        snr_db: pick(&rates.snr_db),
        rate_mbps: pick(&rates.rate_mbps),
    }
}

#[test]
fn same_seed_same_scenario() {
    let s = spec(Density::NonHomogeneous, 4.0);
    let table = RateTable::ieee80211a();
    let a = generate_topology(&s, 11).unwrap();
    let b = generate_topology(&s, 11).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        link_rates(&a, &ChannelModel::default(), &table, 11).unwrap(),
        link_rates(&b, &ChannelModel::default(), &table, 11).unwrap()
    );
    assert_ne!(a, generate_topology(&s, 12).unwrap());
}

#[test]
fn rates_follow_the_table() {
    let table = RateTable::ieee80211a();
    for seed in 0..20 {
        let topo = generate_topology(&spec(Density::Homogeneous, 3.0), seed).unwrap();
        let rates = link_rates(&topo, &ChannelModel::default(), &table, seed).unwrap();
        for i in 0..rates.n_stas() {
            for a in 0..rates.n_aps() {
                assert_eq!(rates.rate(i, a), table.rate(rates.snr_db[i][a]));
                assert!((rates.distance[i][a] - topo.distance(i, a)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn max_snr_does_not_depend_on_ap_order() {
    let timing = derive_timing(&RawTiming::default()).unwrap();
    let table = RateTable::ieee80211a();
    let order = [2, 0, 3, 1];
    for seed in 0..30 {
        let topo = generate_topology(&spec(Density::Homogeneous, 3.0), seed).unwrap();
        let rates = link_rates(&topo, &ChannelModel::default(), &table, seed).unwrap();
        let isp_of: Vec<usize> = topo.stas.iter().map(|s| s.isp).collect();
        let d = EdcaParams::default();
        let base = max_snr_association(&rates, &isp_of, 2, &d, &timing).unwrap();
        let shuffled = max_snr_association(&permute_aps(&rates, &order), &isp_of, 2, &d, &timing).unwrap();
        for (i, (c, s)) in base.choice.iter().zip(&shuffled.choice).enumerate() {
            assert_eq!(*c, s.map(|k| order[k]), "STA {i}");
        }
        let (t0, t1) = (base.metrics.total_throughput, shuffled.metrics.total_throughput);
        assert!((t0 - t1).abs() <= 1e-9 * t0.max(1.0), "{t0} vs {t1}");
    }
}

#[test]
fn optimized_scenarios_meet_their_airtime_targets() {
    let timing = derive_timing(&RawTiming::default()).unwrap();
    let table = RateTable::ieee80211a();
    let opts = AssocOptions::default();
    let mut solved = 0;
    for seed in 0..6 {
        let topo = generate_topology(&spec(Density::Homogeneous, 2.0), seed).unwrap();
        let rates = link_rates(&topo, &ChannelModel::default(), &table, seed).unwrap();
        if rates.excluded_stas().len() == rates.n_stas() {
            continue;
        }
        let isp_of: Vec<usize> = topo.stas.iter().map(|s| s.isp).collect();
        let eta = resolve_targets(&EtaPolicy::FairShare { fraction: 0.95 }, &rates, &isp_of, 2, &timing, &opts).unwrap();
        let isps: Vec<IspSpec> = isps_from_labels(&isp_of, 2, 0.0)
            .into_iter()
            .zip(&eta)
            .map(|(k, &eta)| IspSpec { eta, ..k })
            .collect();
        let sol = solve_association(&rates, &isps, &timing, &opts).unwrap();
        for k in 0..2 {
            assert!(sol.metrics.isp_airtime[k] >= eta[k] - 1e-6, "seed {seed}: {:?} vs {eta:?}", sol.metrics.isp_airtime);
        }
        assert!(sol.residuals.max() < 1e-6);
        for i in 0..rates.n_stas() {
            for a in 0..rates.n_aps() {
                if !rates.usable(i, a) {
                    assert_eq!(sol.tau[i][a], 0.0);
                }
            }
        }
        solved += 1;
    }
    assert!(solved > 0);
}

#[test]
fn jain_bounds() {
    assert_eq!(jain_index(&[3.0, 3.0, 3.0]).unwrap(), 1.0);
    assert!((jain_index(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    assert!(jain_index(&[0.0, 0.0]).is_err());
}

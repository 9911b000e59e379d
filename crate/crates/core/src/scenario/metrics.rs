use serde::{Deserialize, Serialize};

use crate::analytics::metrics::{airtime, throughput};
use crate::error::{invalid, Result};
use crate::scenario::RateMatrix;
use crate::timing::TimingConstants;

/// Throughput (Mbps) and airtime per link, and their per-ISP sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub throughput: Vec<Vec<f64>>,
    pub airtime: Vec<Vec<f64>>,
    pub isp_throughput: Vec<f64>,
    pub isp_airtime: Vec<f64>,
    pub total_throughput: f64,
}

/// Evaluates `x[sta][ap]` (zero on unused links) with the per-BSS throughput
/// and airtime formulas. Both association schemes go through here.
pub fn evaluate_network(
    x: &[Vec<f64>],
    rates: &RateMatrix,
    isp_of: &[usize],
    isp_count: usize,
    timing: &TimingConstants,
) -> Result<NetworkMetrics> {
    let (n, k) = (rates.n_stas(), rates.n_aps());
    if x.len() != n || x.iter().any(|r| r.len() != k) || isp_of.len() != n {
        return Err(invalid("x", "shape does not match the rate matrix"));
    }
    let mut thr = vec![vec![0.0; k]; n];
    let mut air = vec![vec![0.0; k]; n];
    for a in 0..k {
        let col: Vec<f64> = (0..n).map(|i| x[i][a]).collect();
        if col.iter().all(|&v| v == 0.0) {
            continue;
        }
        for i in 0..n {
            if col[i] > 0.0 {
                thr[i][a] = throughput(i, &col, rates.rate(i, a), timing)?;
                air[i][a] = airtime(i, &col, timing)?;
            }
        }
    }
    let mut isp_throughput = vec![0.0; isp_count];
    let mut isp_airtime = vec![0.0; isp_count];
    for i in 0..n {
        isp_throughput[isp_of[i]] += thr[i].iter().sum::<f64>();
        isp_airtime[isp_of[i]] += air[i].iter().sum::<f64>();
    }
    Ok(NetworkMetrics {
        total_throughput: isp_throughput.iter().sum(),
        throughput: thr,
        airtime: air,
        isp_throughput,
        isp_airtime,
    })
}

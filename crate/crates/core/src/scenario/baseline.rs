use serde::{Deserialize, Serialize};

use crate::analytics::fixed_point::solve_bss_fixed_point;
use crate::error::{invalid, Error, Result};
use crate::params::EdcaParams;
use crate::scenario::{evaluate_network, NetworkMetrics, RateMatrix};
use crate::timing::TimingConstants;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxSnrOutcome {
    /// Chosen AP per STA; `None` for STAs with no usable link.
    pub choice: Vec<Option<usize>>,
    pub tau: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub metrics: NetworkMetrics,
}

/// Each STA joins its highest-SNR AP (lowest index on ties); every BSS then
/// runs default EDCA and settles at the symmetric fixed point.
pub fn max_snr_association(
    rates: &RateMatrix,
    isp_of: &[usize],
    isp_count: usize,
    defaults: &EdcaParams,
    timing: &TimingConstants,
) -> Result<MaxSnrOutcome> {
    let (n, k) = (rates.n_stas(), rates.n_aps());
    let choice: Vec<Option<usize>> = (0..n)
        .map(|i| {
            let best = (0..k).fold(None, |best: Option<usize>, a| match best {
                Some(b) if rates.snr_db[i][b] >= rates.snr_db[i][a] => Some(b),
                _ => Some(a),
            })?;
            rates.usable(i, best).then_some(best)
        })
        .collect();
    let mut tau = vec![vec![0.0; k]; n];
    let mut x = vec![vec![0.0; k]; n];
    for a in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| choice[i] == Some(a)).collect();
        if members.is_empty() {
            continue;
        }
        let bss = solve_bss_fixed_point(&vec![*defaults; members.len()], timing)?;
        for (slot, &i) in members.iter().enumerate() {
            tau[i][a] = bss.tau[slot];
            x[i][a] = bss.x[slot];
        }
    }
    let metrics = evaluate_network(&x, rates, isp_of, isp_count, timing)?;
    Ok(MaxSnrOutcome {
        choice,
        tau,
        x,
        metrics,
    })
}

/// Jain's index `(Σ T)² / (K · Σ T²)`.
pub fn jain_index(throughputs: &[f64]) -> Result<f64> {
    if throughputs.is_empty() {
        return Err(invalid("throughputs", "need at least one ISP"));
    }
    if throughputs.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("throughputs", "must be finite and nonnegative"));
    }
    let sum: f64 = throughputs.iter().sum();
    let squares: f64 = throughputs.iter().map(|t| t * t).sum();
    if squares == 0.0 {
        return Err(Error::UndefinedFairness);
    }
    Ok(sum * sum / (throughputs.len() as f64 * squares))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::{derive_timing, RawTiming};

    fn timing() -> TimingConstants {
        derive_timing(&RawTiming::default()).unwrap()
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[10.0, 10.0]).unwrap(), 1.0);
        assert_eq!(jain_index(&[10.0, 0.0]).unwrap(), 0.5);
        assert!((jain_index(&[6.0, 3.0]).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(jain_index(&[0.0, 0.0]), Err(Error::UndefinedFairness));
        assert!(jain_index(&[]).is_err());
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        let mut rates = RateMatrix::from_rates(vec![vec![12.0, 12.0, 6.0]]).unwrap();
        rates.snr_db = vec![vec![11.0, 11.0, 6.0]];
        let out = max_snr_association(&rates, &[0], 1, &EdcaParams::default(), &timing()).unwrap();
        assert_eq!(out.choice, vec![Some(0)]);
    }

    #[test]
    fn single_ap_takes_everyone() {
        let rates = RateMatrix::from_rates(vec![vec![6.0], vec![54.0], vec![12.0]]).unwrap();
        let out = max_snr_association(&rates, &[0, 1, 0], 2, &EdcaParams::default(), &timing()).unwrap();
        assert_eq!(out.choice, vec![Some(0); 3]);
        // identical parameters give identical τ
        assert!((out.tau[0][0] - out.tau[1][0]).abs() < 1e-12);
        assert!(out.metrics.isp_throughput[1] > out.metrics.isp_throughput[0]);
    }

    #[test]
    fn unusable_stas_get_nothing() {
        let rates = RateMatrix::from_rates(vec![vec![0.0, 0.0], vec![0.0, 6.0]]).unwrap();
        let out = max_snr_association(&rates, &[0, 0], 1, &EdcaParams::default(), &timing()).unwrap();
        assert_eq!(out.choice, vec![None, Some(1)]);
        assert_eq!(out.tau[0], vec![0.0, 0.0]);
    }
}

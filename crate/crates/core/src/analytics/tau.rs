//! Closed-form transmission probability of one station.
//!
//! Every stationary probability of the three-dimensional chain is a multiple
//! of `b_{0,0,0}`. Normalizing gives
//!
//! ```text
//!          S
//! τ = ─────────────────────────────,   S = Σ_{j=0}^{m+h} p^j
//!     coin + aifs + S + backoff
//!
//! coin    = L (1 − q) / q
//! aifs    = (1 + pN)/p · [(1 − p)^{−(A+1)} − 1]
//! backoff = (1 + pN) / (2 (1 − p)^A) · Σ_j W_j p^j
//! ```
//!
//! The `aifs` term has a removable singularity at `p = 0`, where it tends
//! to `A + 1`.

use crate::error::{domain, Result};
use crate::params::EdcaParams;
use crate::timing::TimingConstants;

/// Below this collision probability the AIFS term uses its series expansion.
pub const SMALL_P: f64 = 1e-9;

/// The four groups of states in the normalization sum, each divided by
/// `b_{0,0,0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauTerms {
    /// Long inter-frame wait after a failed coin flip.
    pub coin: f64,
    /// AIFS wait (and the freezes it suffers) before stage 0.
    pub aifs: f64,
    /// Transmission states `b_{j,0,0}`; equals `S`.
    pub transmit: f64,
    /// Countdown and frozen states of every backoff stage.
    pub backoff: f64,
}

impl TauTerms {
    pub fn total(&self) -> f64 {
        self.coin + self.aifs + self.transmit + self.backoff
    }

    pub fn tau(&self) -> f64 {
        let total = self.total();
        if total.is_infinite() {
            0.0
        } else {
            self.transmit / total
        }
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || !(0.0..1.0).contains(&p) {
        return Err(domain("p", p, "[0, 1)"));
    }
    Ok(())
}

/// `Σ_{j=0}^{k-1} p^j`.
pub(crate) fn geometric_sum(p: f64, k: u32) -> f64 {
    let mut acc = 0.0;
    let mut pow = 1.0;
    for _ in 0..k {
        acc += pow;
        pow *= p;
    }
    acc
}

/// `[(1 − p)^{−n} − 1] / p`, continuous at `p = 0`.
pub(crate) fn freeze_growth(p: f64, n: u32) -> f64 {
    let n = f64::from(n);
    if p < SMALL_P {
        n + 0.5 * n * (n + 1.0) * p
    } else {
        (-n * (-p).ln_1p()).exp_m1() / p
    }
}

/// `Σ_j (W_j / W_min) p^j`: the window sum per unit of minimum window.
pub(crate) fn window_gain(params: &EdcaParams, p: f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = 1.0;
    for j in 0..params.stages() {
        acc += f64::from(1u32 << j.min(params.m)) * pow;
        pow *= p;
    }
    acc
}

/// Backoff term contributed by one unit of `W_min` at AIFS offset `a`.
pub(crate) fn backoff_per_window(params: &EdcaParams, p: f64, frozen: f64) -> f64 {
    (1.0 + p * frozen) / (2.0 * (1.0 - p).powi(params.a as i32)) * window_gain(params, p)
}

pub(crate) fn aifs_term(a: u32, p: f64, frozen: f64) -> f64 {
    (1.0 + p * frozen) * freeze_growth(p, a + 1)
}

pub(crate) fn coin_term(q: f64, l: u32) -> f64 {
    if q == 0.0 {
        f64::INFINITY
    } else if l == 0 {
        0.0
    } else {
        f64::from(l) * (1.0 - q) / q
    }
}

/// Normalization terms for `params` at collision probability `p` and
/// frozen time `frozen_slots`.
pub fn tau_terms(params: &EdcaParams, p: f64, frozen_slots: u32) -> Result<TauTerms> {
    params.validate()?;
    check_p(p)?;
    let frozen = f64::from(frozen_slots);
    Ok(TauTerms {
        coin: coin_term(params.q, params.l),
        aifs: aifs_term(params.a, p, frozen),
        transmit: geometric_sum(p, params.stages()),
        backoff: f64::from(params.w_min) * backoff_per_window(params, p, frozen),
    })
}

/// Transmission probability per general time-slot for the given EDCA
/// parameters and constant collision probability `p ∈ [0, 1)`.
pub fn tau_from_params(params: &EdcaParams, p: f64, timing: &TimingConstants) -> Result<f64> {
    Ok(tau_terms(params, p, timing.frozen_slots)?.tau())
}

/// Closed form with the window bracket reduced by `S`, i.e.
/// `Σ_j (W_j − 1) p^j`. This is the stationary sum of the same chain when
/// backoff counters are drawn from `0..W_j` (window size `W_j`) instead of
/// `0..=W_j`. Kept for comparison with the inclusive-window chain; it is
/// not a valid model when `W_min = 0`.
pub fn tau_exclusive_window(params: &EdcaParams, p: f64, timing: &TimingConstants) -> Result<f64> {
    let mut terms = tau_terms(params, p, timing.frozen_slots)?;
    let frozen = f64::from(timing.frozen_slots);
    terms.backoff -= (1.0 + p * frozen) / (2.0 * (1.0 - p).powi(params.a as i32)) * terms.transmit;
    Ok(terms.tau())
}

/// Largest transmission probability reachable by any EDCA parameters:
/// `[1 + (1 + pN)(2 − p)/(1 − p)]^{−1}`.
pub fn tau_upper_bound(p: f64, frozen_slots: u32) -> Result<f64> {
    check_p(p)?;
    let n = f64::from(frozen_slots);
    Ok(1.0 / (1.0 + (1.0 + p * n) * (2.0 - p) / (1.0 - p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timing(n: u32) -> TimingConstants {
        TimingConstants::default().with_frozen_slots(n)
    }

    fn base() -> EdcaParams {
        EdcaParams {
            w_min: 16,
            m: 2,
            h: 1,
            a: 1,
            q: 1.0,
            l: 0,
        }
    }

    #[test]
    fn vanishes_without_access() {
        let t = timing(119);
        let mut p = base();
        p.q = 0.0;
        assert_eq!(tau_from_params(&p, 0.1, &t).unwrap(), 0.0);
        p.l = 10;
        assert_eq!(tau_from_params(&p, 0.1, &t).unwrap(), 0.0);

        let mut p = base();
        p.q = 0.5;
        let mut last = 1.0;
        for l in [10, 1_000, 100_000, 10_000_000] {
            p.l = l;
            let tau = tau_from_params(&p, 0.1, &t).unwrap();
            assert!(tau < last);
            last = tau;
        }
        assert!(last < 1e-6);

        let mut p = base();
        p.a = 2_000;
        assert!(tau_from_params(&p, 0.1, &t).unwrap() < 1e-12);
    }

    #[test]
    fn deterministic_cycle_at_zero_p() {
        let p = EdcaParams {
            w_min: 0,
            m: 0,
            h: 0,
            a: 1,
            q: 1.0,
            l: 0,
        };
        let tau = tau_from_params(&p, 0.0, &timing(119)).unwrap();
        assert!((tau - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn small_p_branch_is_continuous() {
        let t = timing(119);
        let p = base();
        let below = tau_from_params(&p, 0.999e-9, &t).unwrap();
        let above = tau_from_params(&p, 1.001e-9, &t).unwrap();
        assert!((below - above).abs() / above < 1e-9);
        for n in [1, 2, 7, 64] {
            let x: f64 = 0.5e-9;
            let exact = (-f64::from(n) * (-x).ln_1p()).exp_m1() / x;
            let series = freeze_growth(x, n);
            assert!((exact - series).abs() / exact < 1e-8);
        }
    }

    #[test]
    fn domain_errors() {
        let t = timing(10);
        assert!(tau_from_params(&base(), 1.0, &t).is_err());
        assert!(tau_from_params(&base(), -0.1, &t).is_err());
        assert!(tau_from_params(&base(), f64::NAN, &t).is_err());
        assert!(tau_upper_bound(1.0, 10).is_err());
    }

    #[test]
    fn upper_bound_values() {
        assert!((tau_upper_bound(0.0, 119).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let v = tau_upper_bound(0.5, 111).unwrap();
        assert!((v - 1.0 / 170.5).abs() < 1e-15);
        assert!((v - 0.0058651).abs() < 1e-7);
    }

    #[test]
    fn upper_bound_is_strictly_decreasing() {
        let grid: Vec<f64> = (0..200).map(|k| k as f64 / 200.0).collect();
        for n in [1, 10, 119] {
            for w in grid.windows(2) {
                assert!(tau_upper_bound(w[0], n).unwrap() > tau_upper_bound(w[1], n).unwrap());
            }
        }
        for p in [0.01, 0.3, 0.8] {
            assert!(tau_upper_bound(p, 10).unwrap() > tau_upper_bound(p, 11).unwrap());
        }
    }

    #[test]
    fn bound_is_reached_by_the_extreme_parameters() {
        let t = timing(119);
        for p in [0.05, 0.2, 0.5] {
            let extreme = EdcaParams {
                w_min: 0,
                m: 30,
                h: 200,
                a: 1,
                q: 1.0,
                l: 0,
            };
            let tau = tau_from_params(&extreme, p, &t).unwrap();
            let bound = tau_upper_bound(p, 119).unwrap();
            assert!(tau <= bound + 1e-15);
            assert!((bound - tau) / bound < 1e-12);
        }
    }

    #[test]
    fn exclusive_window_differs_by_the_window_offset() {
        let t = timing(119);
        let p = base();
        let inclusive = tau_from_params(&p, 0.1, &t).unwrap();
        let exclusive = tau_exclusive_window(&p, 0.1, &t).unwrap();
        assert!(exclusive > inclusive);
        let mut shifted = p;
        shifted.w_min = 0;
        // with W_min = 0 the reduced bracket turns negative and breaks the bound
        let broken = tau_exclusive_window(&shifted, 1e-9, &t).unwrap();
        assert!((broken - 0.4).abs() < 1e-6);
        assert!(broken > tau_upper_bound(1e-9, 119).unwrap());
    }
}

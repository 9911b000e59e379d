//! MAC timing constants shared by the analytical model and the simulator.
//!
//! Successes and collisions are both approximated by a single duration `T`
//! built from the success form `T_TXOP + SIFS + 2γ + ACK + AIFS`. The
//! simulator still uses the separate success and collision durations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Raw durations in seconds, as they appear in a MAC parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawTiming {
    /// Idle slot duration δ.
    pub slot: f64,
    /// Propagation delay γ.
    pub propagation: f64,
    pub sifs: f64,
    pub ack: f64,
    /// Data burst duration of one transmission opportunity.
    pub t_txop: f64,
    /// AIFS used inside `T`; one network-wide value.
    pub aifs_ref: f64,
}

impl RawTiming {
    /// 802.11e values used throughout the experiments (δ = 9 µs, γ = 1 µs,
    /// SIFS = 10 µs, ACK = 40 µs, T_TXOP = 1 ms) with AIFS = 2δ.
    pub fn ieee80211e() -> Self {
        let slot = 9e-6;
        Self {
            slot,
            propagation: 1e-6,
            sifs: 10e-6,
            ack: 40e-6,
            t_txop: 1e-3,
            aifs_ref: 2.0 * slot,
        }
    }
}

impl Default for RawTiming {
    fn default() -> Self {
        Self::ieee80211e()
    }
}

/// Derived timing used by every throughput and airtime formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConstants {
    pub raw: RawTiming,
    /// Unified success/collision duration `T` (seconds).
    pub busy: f64,
    /// `t = T_TXOP / T`.
    pub t: f64,
    /// `t' = (T − δ) / T`.
    pub t_prime: f64,
    /// Average frozen time `N` in idle slots, `round(T/δ)`, at least 1.
    pub frozen_slots: u32,
}

/// Builds [`TimingConstants`] from raw durations.
///
/// The slot and the TXOP must be positive; the remaining overheads may be
/// zero (degenerate equal-slot configurations are allowed).
pub fn derive_timing(raw: &RawTiming) -> Result<TimingConstants> {
    let finite_nonneg = |what: &'static str, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(invalid(what, format!("must be a finite non-negative duration, got {v}")))
        }
    };
    finite_nonneg("propagation", raw.propagation)?;
    finite_nonneg("sifs", raw.sifs)?;
    finite_nonneg("ack", raw.ack)?;
    finite_nonneg("aifs_ref", raw.aifs_ref)?;
    if !(raw.slot.is_finite() && raw.slot > 0.0) {
        return Err(invalid("slot", format!("must be positive, got {}", raw.slot)));
    }
    if !(raw.t_txop.is_finite() && raw.t_txop > 0.0) {
        return Err(invalid("t_txop", format!("must be positive, got {}", raw.t_txop)));
    }
    if raw.slot > raw.t_txop {
        return Err(invalid(
            "slot",
            format!("slot {} exceeds the TXOP {}", raw.slot, raw.t_txop),
        ));
    }

    let busy = raw.t_txop + raw.sifs + 2.0 * raw.propagation + raw.ack + raw.aifs_ref;
    let frozen_slots = ((busy / raw.slot).round() as u32).max(1);
    Ok(TimingConstants {
        raw: *raw,
        busy,
        t: raw.t_txop / busy,
        t_prime: (busy - raw.slot) / busy,
        frozen_slots,
    })
}

impl TimingConstants {
    /// Same constants with a different frozen-slot count; used to study the
    /// chain at small `N`.
    pub fn with_frozen_slots(mut self, frozen_slots: u32) -> Self {
        self.frozen_slots = frozen_slots.max(1);
        self
    }

    pub fn slot(&self) -> f64 {
        self.raw.slot
    }

    /// Channel occupancy of a successful transmission (data, SIFS, ACK, AIFS).
    pub fn success_duration(&self) -> f64 {
        let r = &self.raw;
        r.t_txop + r.sifs + 2.0 * r.propagation + r.ack + r.aifs_ref
    }

    /// Channel occupancy of a collision (data, one propagation delay, AIFS).
    pub fn collision_duration(&self) -> f64 {
        let r = &self.raw;
        r.t_txop + r.propagation + r.aifs_ref
    }
}

impl Default for TimingConstants {
    fn default() -> Self {
        derive_timing(&RawTiming::ieee80211e()).expect("built-in timing is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let c = derive_timing(&RawTiming::ieee80211e()).unwrap();
        assert!((c.busy - 1070e-6).abs() < 1e-12);
        assert!((c.t - 1000.0 / 1070.0).abs() < 1e-12);
        assert!((c.t_prime - 1061.0 / 1070.0).abs() < 1e-12);
        assert_eq!(c.frozen_slots, 119);
        assert!((c.t - 0.93458).abs() < 1e-5);
        assert!((c.t_prime - 0.99159).abs() < 1e-5);
    }

    #[test]
    fn degenerate_equal_slot() {
        let raw = RawTiming {
            slot: 1e-3,
            propagation: 0.0,
            sifs: 0.0,
            ack: 0.0,
            t_txop: 1e-3,
            aifs_ref: 0.0,
        };
        let c = derive_timing(&raw).unwrap();
        assert_eq!(c.t, 1.0);
        assert_eq!(c.t_prime, 0.0);
        assert_eq!(c.frozen_slots, 1);
    }

    #[test]
    fn txop_over_slot() {
        let raw = RawTiming {
            slot: 9e-6,
            propagation: 0.0,
            sifs: 0.0,
            ack: 0.0,
            t_txop: 1e-3,
            aifs_ref: 0.0,
        };
        assert_eq!(derive_timing(&raw).unwrap().frozen_slots, 111);
    }

    #[test]
    fn rejects_bad_durations() {
        let mut raw = RawTiming::ieee80211e();
        raw.slot = 0.0;
        assert!(derive_timing(&raw).is_err());
        let mut raw = RawTiming::ieee80211e();
        raw.ack = -1e-6;
        assert!(derive_timing(&raw).is_err());
        let mut raw = RawTiming::ieee80211e();
        raw.t_txop = 1e-6;
        assert!(derive_timing(&raw).is_err());
    }

    #[test]
    fn success_and_collision_durations() {
        let c = TimingConstants::default();
        assert!((c.success_duration() - 1070e-6).abs() < 1e-12);
        assert!((c.collision_duration() - 1019e-6).abs() < 1e-12);
    }
}

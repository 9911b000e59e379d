//! Inverts the closed-form `τ` to pick EDCA parameters for a target
//! transmission probability.
//!
//! The cascade starts from [`ControlDefaults`] and solves one knob at a time:
//! `W_min`, then `L`, then `A`, then `m`, then `h`. A knob whose solution
//! falls below its floor (0, 0, 1, 0, 0) is clamped there and the next knob
//! takes over.

use serde::{Deserialize, Serialize};

use crate::analytics::tau::{tau_terms, tau_upper_bound};
use crate::error::{domain, Result};
use crate::params::{ControlDefaults, EdcaParams};
use crate::timing::TimingConstants;

pub const MAX_A: u32 = 64;
pub const MAX_M: u32 = 16;
pub const MAX_H: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    WMin,
    L,
    A,
    M,
    H,
}

impl Knob {
    pub const ALL: [Knob; 5] = [Knob::WMin, Knob::L, Knob::A, Knob::M, Knob::H];

    pub fn name(self) -> &'static str {
        match self {
            Knob::WMin => "w_min",
            Knob::L => "l",
            Knob::A => "a",
            Knob::M => "m",
            Knob::H => "h",
        }
    }

    fn floor(self) -> u32 {
        match self {
            Knob::A => 1,
            _ => 0,
        }
    }

    fn ceiling(self, params: &EdcaParams) -> u32 {
        match self {
            Knob::WMin => u32::MAX >> params.m,
            Knob::L => u32::MAX,
            Knob::A => MAX_A,
            Knob::M => {
                // keep the largest window representable
                let room = 31 - params.w_min.max(1).ilog2();
                MAX_M.min(room)
            }
            Knob::H => MAX_H,
        }
    }

    pub fn get(self, p: &EdcaParams) -> u32 {
        match self {
            Knob::WMin => p.w_min,
            Knob::L => p.l,
            Knob::A => p.a,
            Knob::M => p.m,
            Knob::H => p.h,
        }
    }

    fn with(self, mut p: EdcaParams, v: u32) -> EdcaParams {
        match self {
            Knob::WMin => p.w_min = v,
            Knob::L => p.l = v,
            Knob::A => p.a = v,
            Knob::M => p.m = v,
            Knob::H => p.h = v,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlResult {
    pub params: EdcaParams,
    /// `τ` the returned parameters achieve at the given `p`.
    pub tau: f64,
    /// Knob that was solved last.
    pub knob: Knob,
    /// The target is above what the fully clamped parameters can reach.
    pub unreachable: bool,
}

impl ControlResult {
    pub fn relative_error(&self, target: f64) -> f64 {
        (self.tau - target).abs() / target
    }
}

/// Outcome of solving a single knob with the others fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Solve {
    /// The solution lies below the knob's floor.
    Below,
    Inside(EdcaParams),
    /// The solution lies above the knob's ceiling; the ceiling is returned.
    Saturated(EdcaParams),
}

fn tau_of(params: &EdcaParams, p: f64, frozen: u32) -> Result<f64> {
    Ok(tau_terms(params, p, frozen)?.tau())
}

/// Picks whichever of `candidates` lands closest to `target`.
fn closest(
    knob: Knob,
    base: EdcaParams,
    candidates: impl IntoIterator<Item = u32>,
    target: f64,
    p: f64,
    frozen: u32,
) -> Result<EdcaParams> {
    let mut best: Option<(f64, EdcaParams)> = None;
    for v in candidates {
        let cand = knob.with(base, v);
        let err = (tau_of(&cand, p, frozen)? - target).abs();
        if best.is_none_or(|(e, _)| err < e) {
            best = Some((err, cand));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

/// `W_min` and `L` enter the normalization sum linearly, so their real
/// solution is explicit.
fn solve_affine(knob: Knob, base: EdcaParams, target: f64, p: f64, frozen: u32) -> Result<Solve> {
    let zero = tau_terms(&knob.with(base, 0), p, frozen)?;
    let one = tau_terms(&knob.with(base, 1), p, frozen)?;
    let unit = one.total() - zero.total();
    let ceiling = knob.ceiling(&base);
    if unit <= 0.0 {
        // the knob does nothing here (q = 1 for L); fall through to the next one
        return Ok(Solve::Below);
    }
    let exact = (zero.transmit / target - zero.total()) / unit;
    let rounded = exact.round();
    if rounded < 0.0 {
        return Ok(Solve::Below);
    }
    if rounded >= f64::from(ceiling) {
        return Ok(Solve::Saturated(knob.with(base, ceiling)));
    }
    let r = rounded as u32;
    let neighbors = [r.saturating_sub(1), r, r + 1];
    Ok(Solve::Inside(closest(knob, base, neighbors, target, p, frozen)?))
}

/// Integer bisection for knobs in which `τ` is monotone but not affine.
fn solve_monotone(knob: Knob, base: EdcaParams, target: f64, p: f64, frozen: u32) -> Result<Solve> {
    let (lo, hi) = (knob.floor(), knob.ceiling(&base));
    let at = |v: u32| tau_of(&knob.with(base, v), p, frozen);
    let (t_lo, t_hi) = (at(lo)?, at(hi)?);
    let increasing = t_hi > t_lo;
    // below the floor: the floor overshoots in the direction the knob moves τ
    let beyond_lo = if increasing { t_lo > target } else { t_lo < target };
    if beyond_lo || t_lo == t_hi {
        return Ok(Solve::Below);
    }
    let beyond_hi = if increasing { t_hi < target } else { t_hi > target };
    if beyond_hi {
        return Ok(Solve::Saturated(knob.with(base, hi)));
    }
    // invariant: target lies between τ(a) and τ(b)
    let (mut a, mut b) = (lo, hi);
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        let t = at(mid)?;
        let past = if increasing { t >= target } else { t <= target };
        if past {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Solve::Inside(closest(knob, base, [a, b], target, p, frozen)?))
}

fn solve_knob(knob: Knob, base: EdcaParams, target: f64, p: f64, frozen: u32) -> Result<Solve> {
    match knob {
        Knob::WMin | Knob::L => solve_affine(knob, base, target, p, frozen),
        _ => solve_monotone(knob, base, target, p, frozen),
    }
}

fn check_target(tau_target: f64, p: f64) -> Result<()> {
    if !(tau_target > 0.0 && tau_target < 1.0) {
        return Err(domain("tau_target", tau_target, "(0, 1)"));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(domain("p", p, "[0, 1)"));
    }
    Ok(())
}

/// Runs the full cascade from `defaults`.
///
/// `p` is the collision probability the station will see,
/// `1 − Π_{i'≠i}(1 − τ*_{i'})`.
pub fn params_for_tau_from(
    defaults: ControlDefaults,
    tau_target: f64,
    p: f64,
    timing: &TimingConstants,
) -> Result<ControlResult> {
    check_target(tau_target, p)?;
    let frozen = timing.frozen_slots;
    let mut params = EdcaParams::from(defaults);
    params.validate()?;
    let done = |params: EdcaParams, knob: Knob, unreachable: bool| -> Result<ControlResult> {
        Ok(ControlResult {
            tau: tau_of(&params, p, frozen)?,
            params,
            knob,
            unreachable,
        })
    };
    if params.q == 0.0 {
        return done(params, Knob::WMin, true);
    }

    for knob in Knob::ALL {
        match solve_knob(knob, params, tau_target, p, frozen)? {
            Solve::Inside(found) => return done(found, knob, false),
            Solve::Below => params = knob.with(params, knob.floor()),
            Solve::Saturated(found) => match knob {
                // more stages than m allows still help; let h continue
                Knob::M => params = found,
                Knob::H => return done(found, knob, true),
                _ => return done(found, knob, false),
            },
        }
    }
    // every knob clamped at its floor: the floor values overshoot the target
    // in the lowering direction, which only happens when h is already useless
    let unreachable = tau_of(&params, p, frozen)? < tau_target;
    done(params, Knob::H, unreachable)
}

/// [`params_for_tau_from`] with the standard defaults.
pub fn params_for_tau(tau_target: f64, p: f64, timing: &TimingConstants) -> Result<ControlResult> {
    params_for_tau_from(ControlDefaults::default(), tau_target, p, timing)
}

/// The cascade followed by a joint local search.
///
/// The cascade alone leaves large gaps once it reaches the integer knob `A`:
/// neighboring values can be 20% or more apart in `τ`. Around the cascade's
/// answer this tries small moves of `W_min`, `A`, `m` and `h` together, solves
/// `L` for each, and keeps the closest. Never worse than the cascade.
pub fn params_for_tau_refined(
    defaults: ControlDefaults,
    tau_target: f64,
    p: f64,
    timing: &TimingConstants,
) -> Result<ControlResult> {
    let start = params_for_tau_from(defaults, tau_target, p, timing)?;
    if start.unreachable || start.relative_error(tau_target) == 0.0 {
        return Ok(start);
    }
    let frozen = timing.frozen_slots;
    let s = start.params;
    let mut best = (start.tau - tau_target).abs();
    let mut params = s;
    for w in s.w_min.saturating_sub(2)..=s.w_min.saturating_add(2) {
        for a in s.a.saturating_sub(1).max(1)..=(s.a + 1).min(MAX_A) {
            for m in 0..=(s.m + 2).min(MAX_M) {
                for h in 0..=s.h.max(6) + 2 {
                    let base = EdcaParams { w_min: w, a, m, h, ..s };
                    if base.validate().is_err() {
                        continue;
                    }
                    let cand = match solve_affine(Knob::L, base, tau_target, p, frozen)? {
                        Solve::Inside(c) | Solve::Saturated(c) => c,
                        Solve::Below => Knob::L.with(base, 0),
                    };
                    let err = (tau_of(&cand, p, frozen)? - tau_target).abs();
                    if err < best {
                        best = err;
                        params = cand;
                    }
                }
            }
        }
    }
    Ok(ControlResult {
        tau: tau_of(&params, p, frozen)?,
        params,
        knob: start.knob,
        unreachable: false,
    })
}

pub fn single_knob_base(knob: Knob) -> EdcaParams {
    let defaults = EdcaParams::default();
    match knob {
        Knob::L => defaults,
        _ => EdcaParams { l: 0, ..defaults },
    }
}

/// Tunes a single knob, leaving every other one alone. The base is the
/// default set, except that knobs other than `L` start from `L = 0`: with
/// the default tail the coin term swamps them.
/// Targets out of the knob's reach come back clamped at its floor or
/// ceiling with `unreachable` set.
pub fn params_for_tau_single(
    knob: Knob,
    tau_target: f64,
    p: f64,
    timing: &TimingConstants,
) -> Result<ControlResult> {
    check_target(tau_target, p)?;
    let frozen = timing.frozen_slots;
    let base = single_knob_base(knob);
    let (params, unreachable) = match solve_knob(knob, base, tau_target, p, frozen)? {
        Solve::Inside(found) => (found, false),
        Solve::Saturated(found) => (found, true),
        Solve::Below => {
            let floor = knob.with(base, knob.floor());
            // a knob with no effect is "below" too; flag only if it really misses
            let t = tau_of(&floor, p, frozen)?;
            (floor, (t - tau_target).abs() > 1e-12 * tau_target)
        }
    };
    Ok(ControlResult {
        tau: tau_of(&params, p, frozen)?,
        params,
        knob,
        unreachable,
    })
}

/// The all-clamped extreme: `W_min = 0`, `L = 0`, `A = 1`, `m` and `h` at
/// their ceilings. Its `τ` approaches [`tau_upper_bound`].
pub fn extreme_params(q: f64) -> EdcaParams {
    EdcaParams {
        w_min: 0,
        m: MAX_M,
        h: MAX_H,
        a: 1,
        q,
        l: 0,
    }
}

/// Gap between the extreme parameters and the bound, for diagnostics.
pub fn ceiling_gap(p: f64, timing: &TimingConstants) -> Result<f64> {
    let extreme = tau_of(&extreme_params(1.0), p, timing.frozen_slots)?;
    Ok(tau_upper_bound(p, timing.frozen_slots)? - extreme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::tau::tau_from_params;

    fn timing() -> TimingConstants {
        TimingConstants::default()
    }

    #[test]
    fn tiny_target_moves_only_the_window() {
        let r = params_for_tau(0.001, 0.1, &timing()).unwrap();
        assert_eq!(r.knob, Knob::WMin);
        let d = EdcaParams::default();
        assert!(r.params.w_min > 15);
        assert_eq!((r.params.l, r.params.a, r.params.m, r.params.h), (d.l, d.a, d.m, d.h));
        assert!(r.relative_error(0.001) < 0.01);
        let direct = tau_from_params(&r.params, 0.1, &timing()).unwrap();
        assert_eq!(direct, r.tau);
    }

    #[test]
    fn cascade_reaches_each_knob() {
        let t = timing();
        let p = 0.2;
        let bound = tau_upper_bound(p, t.frozen_slots).unwrap();
        let mut seen = Vec::new();
        for k in 1..=200 {
            let target = bound * 0.995 * k as f64 / 200.0;
            let r = params_for_tau(target, p, &t).unwrap();
            assert!(r.params.validate().is_ok());
            assert!(!r.unreachable, "{target}");
            if !seen.contains(&r.knob) {
                seen.push(r.knob);
            }
        }
        assert!(seen.contains(&Knob::WMin) && seen.contains(&Knob::L) && seen.contains(&Knob::A));
    }

    #[test]
    fn larger_target_never_larger_window() {
        let t = timing();
        let mut last = u32::MAX;
        for k in 1..100 {
            let r = params_for_tau(1e-4 * 1.05f64.powi(k), 0.3, &t).unwrap();
            if r.knob != Knob::WMin {
                break;
            }
            assert!(r.params.w_min <= last);
            last = r.params.w_min;
        }
    }

    #[test]
    fn above_ceiling_is_flagged() {
        let t = timing();
        let p = 0.2;
        let bound = tau_upper_bound(p, t.frozen_slots).unwrap();
        let r = params_for_tau((bound * 1.01).min(0.99), p, &t).unwrap();
        assert!(r.unreachable);
        assert_eq!((r.params.w_min, r.params.l, r.params.a), (0, 0, 1));
        assert!(ceiling_gap(p, &t).unwrap().abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_targets() {
        let t = timing();
        assert!(params_for_tau(0.0, 0.1, &t).is_err());
        assert!(params_for_tau(1.0, 0.1, &t).is_err());
        assert!(params_for_tau(0.1, 1.0, &t).is_err());
    }

    #[test]
    fn single_knob_leaves_the_rest() {
        let t = timing();
        for knob in Knob::ALL {
            let r = params_for_tau_single(knob, 0.01, 0.03, &t).unwrap();
            for other in Knob::ALL.into_iter().filter(|&k| k != knob) {
                assert_eq!(other.get(&r.params), other.get(&single_knob_base(knob)));
            }
        }
    }
}

//! State space of the per-station EDCA chain and its closed-form
//! stationary distribution.
//!
//! A state is a triple `(stage, counter, timer)`:
//!
//! * `(-2, 0, d)`, `0 ≤ d < L`: waiting after a failed coin flip;
//! * `(-1, 0, d)`, `0 ≤ d ≤ N + A`: AIFS wait before stage 0, `d > A` while frozen;
//! * `(j, 0, 0)`: transmitting at stage `j`;
//! * `(j, b, d)`, `1 ≤ b ≤ W_j`, `0 ≤ d ≤ N + A`: counting down or frozen.

use crate::analytics::tau::{check_p, tau_terms};
use crate::error::{domain, invalid, Result};
use crate::params::EdcaParams;
use crate::timing::TimingConstants;

/// How backoff counters are drawn at stage `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowConvention {
    /// Uniform on `0..=W_j` (`W_j + 1` values); the model used everywhere.
    #[default]
    Inclusive,
    /// Uniform on `0..W_j` (`W_j` values). Requires `W_min ≥ 1`.
    Exclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainState {
    pub stage: i32,
    pub counter: u32,
    pub timer: u32,
}

impl ChainState {
    pub fn new(stage: i32, counter: u32, timer: u32) -> Self {
        Self {
            stage,
            counter,
            timer,
        }
    }
}

/// Dense indexing of every chain state.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub params: EdcaParams,
    pub frozen_slots: u32,
    pub convention: WindowConvention,
    stage_offsets: Vec<usize>,
    len: usize,
}

impl StateSpace {
    pub fn new(params: &EdcaParams, frozen_slots: u32, convention: WindowConvention) -> Result<Self> {
        params.validate()?;
        if params.q == 0.0 && params.l == 0 {
            return Err(invalid("q", "q = 0 with L = 0 leaves the chain without states"));
        }
        if convention == WindowConvention::Exclusive && params.w_min == 0 {
            return Err(invalid("w_min", "exclusive windows need W_min >= 1"));
        }
        let mut space = Self {
            params: *params,
            frozen_slots,
            convention,
            stage_offsets: Vec::with_capacity(params.stages() as usize),
            len: 0,
        };
        let mut offset = params.l as usize + space.timer_span();
        for j in 0..params.stages() {
            space.stage_offsets.push(offset);
            offset += 1 + space.max_counter(j) as usize * space.timer_span();
        }
        space.len = offset;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of timer values `0..=N + A`.
    pub fn timer_span(&self) -> usize {
        (self.frozen_slots + self.params.a) as usize + 1
    }

    pub fn top_timer(&self) -> u32 {
        self.frozen_slots + self.params.a
    }

    /// Largest backoff counter at stage `j`.
    pub fn max_counter(&self, stage: u32) -> u32 {
        let w = self.params.window(stage) as u32;
        match self.convention {
            WindowConvention::Inclusive => w,
            WindowConvention::Exclusive => w - 1,
        }
    }

    pub fn index(&self, s: ChainState) -> Option<usize> {
        let top = self.top_timer();
        match s.stage {
            -2 => (s.counter == 0 && s.timer < self.params.l).then_some(s.timer as usize),
            -1 => (s.counter == 0 && s.timer <= top).then(|| self.params.l as usize + s.timer as usize),
            j if j >= 0 && (j as u32) < self.params.stages() => {
                let j = j as u32;
                let base = self.stage_offsets[j as usize];
                if s.counter == 0 {
                    (s.timer == 0).then_some(base)
                } else if s.counter <= self.max_counter(j) && s.timer <= top {
                    Some(base + 1 + (s.counter as usize - 1) * self.timer_span() + s.timer as usize)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Inverse of [`StateSpace::index`].
    pub fn state(&self, index: usize) -> ChainState {
        let l = self.params.l as usize;
        if index < l {
            return ChainState::new(-2, 0, index as u32);
        }
        if index < l + self.timer_span() {
            return ChainState::new(-1, 0, (index - l) as u32);
        }
        let j = self.stage_offsets.partition_point(|&o| o <= index) - 1;
        let rel = index - self.stage_offsets[j];
        if rel == 0 {
            ChainState::new(j as i32, 0, 0)
        } else {
            let span = self.timer_span();
            ChainState::new(j as i32, ((rel - 1) / span + 1) as u32, ((rel - 1) % span) as u32)
        }
    }

    pub fn states(&self) -> impl Iterator<Item = ChainState> + '_ {
        (0..self.len).map(|i| self.state(i))
    }

    /// Indices of the transmission states `(j, 0, 0)`.
    pub fn transmit_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.stage_offsets.iter().copied()
    }
}

/// Stationary probabilities `b_{j,b,d}` of one station's chain.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pub space: StateSpace,
    pub p: f64,
    probs: Vec<f64>,
}

impl StationaryDistribution {
    pub fn from_vec(space: StateSpace, p: f64, probs: Vec<f64>) -> Self {
        assert_eq!(space.len(), probs.len());
        Self { space, p, probs }
    }

    pub fn get(&self, s: ChainState) -> Option<f64> {
        self.space.index(s).map(|i| self.probs[i])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChainState, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &v)| (self.space.state(i), v))
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ_j b_{j,0,0}`.
    pub fn tau(&self) -> f64 {
        self.space.transmit_indices().map(|i| self.probs[i]).sum()
    }
}

/// Closed-form stationary distribution for `p ∈ (0, 1)`.
pub fn stationary_distribution(
    params: &EdcaParams,
    p: f64,
    timing: &TimingConstants,
) -> Result<StationaryDistribution> {
    check_p(p)?;
    if p == 0.0 {
        return Err(domain("p", p, "(0, 1)"));
    }
    let space = StateSpace::new(params, timing.frozen_slots, WindowConvention::Inclusive)?;
    let mut probs = vec![0.0; space.len()];

    if params.q == 0.0 {
        let share = 1.0 / f64::from(params.l);
        probs[..params.l as usize].iter_mut().for_each(|v| *v = share);
        return Ok(StationaryDistribution::from_vec(space, p, probs));
    }

    let b000 = 1.0 / tau_terms(params, p, timing.frozen_slots)?.total();
    let idle = 1.0 - p;
    let a = params.a;
    let top = space.top_timer();

    for d in 0..params.l {
        probs[space.index(ChainState::new(-2, 0, d)).unwrap()] = (1.0 - params.q) / params.q * b000;
    }
    for d in 0..=top {
        let v = if d <= a {
            idle.powi(-(d as i32 + 1))
        } else {
            idle.powi(-(a as i32 + 1)) - 1.0
        };
        probs[space.index(ChainState::new(-1, 0, d)).unwrap()] = v * b000;
    }
    let mut tx = b000;
    for j in 0..params.stages() {
        let stage = j as i32;
        probs[space.index(ChainState::new(stage, 0, 0)).unwrap()] = tx;
        let w = space.max_counter(j);
        for b in 1..=w {
            let level = f64::from(w + 1 - b) / f64::from(w + 1) * tx;
            for d in 0..=top {
                let v = match d {
                    0 => level,
                    d if d <= a => level * p / idle.powi(d as i32),
                    _ => level * p / idle.powi(a as i32),
                };
                probs[space.index(ChainState::new(stage, b, d)).unwrap()] = v;
            }
        }
        tx *= p;
    }
    Ok(StationaryDistribution::from_vec(space, p, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::tau::tau_from_params;

    fn params() -> EdcaParams {
        EdcaParams {
            w_min: 8,
            m: 1,
            h: 1,
            a: 1,
            q: 0.5,
            l: 4,
        }
    }

    #[test]
    fn index_roundtrip() {
        let space = StateSpace::new(&params(), 10, WindowConvention::Inclusive).unwrap();
        assert_eq!(space.len(), 4 + 12 + (1 + 8 * 12) + (1 + 16 * 12) + (1 + 16 * 12));
        for i in 0..space.len() {
            assert_eq!(space.index(space.state(i)), Some(i));
        }
        assert_eq!(space.index(ChainState::new(0, 0, 3)), None);
        assert_eq!(space.index(ChainState::new(3, 0, 0)), None);
        assert_eq!(space.index(ChainState::new(0, 9, 0)), None);
    }

    #[test]
    fn normalized_and_consistent_with_closed_form() {
        let t = TimingConstants::default().with_frozen_slots(10);
        for p in [1e-6, 0.05, 0.2, 0.6, 0.95] {
            let dist = stationary_distribution(&params(), p, &t).unwrap();
            assert!((dist.sum() - 1.0).abs() < 1e-9, "sum {}", dist.sum());
            assert!(dist.as_slice().iter().all(|&v| v >= 0.0));
            let tau = tau_from_params(&params(), p, &t).unwrap();
            assert!((dist.tau() - tau).abs() <= 1e-9 * tau);
        }
    }

    #[test]
    fn transmit_states_scale_geometrically() {
        let t = TimingConstants::default().with_frozen_slots(10);
        let p = 0.3;
        let dist = stationary_distribution(&params(), p, &t).unwrap();
        let b0 = dist.get(ChainState::new(0, 0, 0)).unwrap();
        for j in 0..3 {
            let bj = dist.get(ChainState::new(j, 0, 0)).unwrap();
            assert!((bj / b0 - p.powi(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_boundary_p() {
        let t = TimingConstants::default();
        assert!(stationary_distribution(&params(), 0.0, &t).is_err());
        assert!(stationary_distribution(&params(), 1.0, &t).is_err());
    }

    #[test]
    fn parked_station_lives_in_the_tail() {
        let mut p = params();
        p.q = 0.0;
        let dist = stationary_distribution(&p, 0.2, &TimingConstants::default()).unwrap();
        assert_eq!(dist.tau(), 0.0);
        assert!((dist.sum() - 1.0).abs() < 1e-12);
    }
}

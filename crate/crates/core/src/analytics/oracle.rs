//! Reference solver for the per-station chain.
//!
//! Builds the full transition matrix straight from the transition rules and
//! solves `π = πP` numerically. Nothing here uses the closed form, so it can
//! be used to check it.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::analytics::chain::{ChainState, StateSpace, StationaryDistribution, WindowConvention};
use crate::analytics::tau::check_p;
use crate::error::{Error, Result};
use crate::params::EdcaParams;

/// Sparse row-stochastic transition matrix.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub space: StateSpace,
    pub p: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn build(
        params: &EdcaParams,
        p: f64,
        frozen_slots: u32,
        convention: WindowConvention,
    ) -> Result<Self> {
        check_p(p)?;
        let space = StateSpace::new(params, frozen_slots, convention)?;
        let idx = |s: ChainState| space.index(s).expect("state inside the space");
        let (q, l, a) = (params.q, params.l, params.a);
        let top = space.top_timer();
        let idle = 1.0 - p;
        let aifs_entry = idx(ChainState::new(-1, 0, a));

        // After a success or a drop: heads → AIFS, tails → long wait (or an
        // immediate re-flip when L = 0).
        let coin = |weight: f64, out: &mut Vec<(usize, f64)>| {
            if l == 0 {
                out.push((aifs_entry, weight));
            } else {
                out.push((aifs_entry, weight * q));
                out.push((idx(ChainState::new(-2, 0, l - 1)), weight * (1.0 - q)));
            }
        };
        let draw = |stage: u32, weight: f64, out: &mut Vec<(usize, f64)>| {
            let w = space.max_counter(stage);
            let share = weight / f64::from(w + 1);
            for b in 0..=w {
                out.push((idx(ChainState::new(stage as i32, b, 0)), share));
            }
        };

        let mut rows = Vec::with_capacity(space.len());
        for i in 0..space.len() {
            let s = space.state(i);
            let mut out = Vec::with_capacity(4);
            match s.stage {
                -2 => {
                    if s.timer > 0 {
                        out.push((idx(ChainState::new(-2, 0, s.timer - 1)), 1.0));
                    } else {
                        out.push((aifs_entry, q));
                        out.push((idx(ChainState::new(-2, 0, l - 1)), 1.0 - q));
                    }
                }
                -1 => {
                    let frozen = idx(ChainState::new(-1, 0, top));
                    if s.timer > a {
                        out.push((idx(ChainState::new(-1, 0, s.timer - 1)), 1.0));
                    } else if s.timer > 0 {
                        out.push((idx(ChainState::new(-1, 0, s.timer - 1)), idle));
                        out.push((frozen, p));
                    } else {
                        out.push((frozen, p));
                        draw(0, idle, &mut out);
                    }
                }
                j => {
                    let stage = j as u32;
                    let last = stage + 1 == params.stages();
                    if s.counter == 0 {
                        if last {
                            coin(1.0, &mut out);
                        } else {
                            coin(idle, &mut out);
                            draw(stage + 1, p, &mut out);
                        }
                    } else {
                        let frozen = idx(ChainState::new(j, s.counter, top));
                        let down = idx(ChainState::new(j, s.counter - 1, 0));
                        if s.timer == 0 || s.timer == 1 {
                            out.push((down, idle));
                            out.push((frozen, p));
                        } else if s.timer > a {
                            out.push((idx(ChainState::new(j, s.counter, s.timer - 1)), 1.0));
                        } else {
                            out.push((idx(ChainState::new(j, s.counter, s.timer - 1)), idle));
                            out.push((frozen, p));
                        }
                    }
                }
            }
            rows.push(merge(out));
        }
        Ok(Self { space, p, rows })
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `‖πP − π‖₁`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let next = self.step(pi);
        next.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
    }

    fn step(&self, pi: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; pi.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let mass = pi[i];
            if mass != 0.0 {
                for &(t, w) in row {
                    next[t] += mass * w;
                }
            }
        }
        next
    }

    /// Lazy power iteration `π ← ½π + ½πP` from the uniform vector, until the
    /// L1 change of one step drops below `tol`.
    pub fn power_iteration(&self, tol: f64, max_iter: usize) -> Result<StationaryDistribution> {
        let n = self.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..max_iter {
            let next = self.step(&pi);
            let mut change = 0.0;
            for (v, w) in pi.iter_mut().zip(&next) {
                let lazy = 0.5 * (*v + w);
                change += (lazy - *v).abs();
                *v = lazy;
            }
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= total);
            if change < tol {
                return Ok(StationaryDistribution::from_vec(self.space.clone(), self.p, pi));
            }
        }
        Err(Error::Convergence {
            what: "power iteration",
            iterations: max_iter,
            residual: self.residual(&pi),
        })
    }

    /// Gauss–Seidel sweeps over the balance equations
    /// `π_s (1 − P_ss) = Σ_{r≠s} π_r P_rs`, normalized after every sweep.
    /// Converges in far fewer sweeps than power iteration on these chains,
    /// whose mass mostly flows along long deterministic countdowns.
    pub fn gauss_seidel(&self, tol: f64, max_sweeps: usize) -> Result<StationaryDistribution> {
        let n = self.len();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut self_loop = vec![0.0; n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(t, w) in row {
                if t == r {
                    self_loop[t] += w;
                } else {
                    incoming[t].push((r, w));
                }
            }
        }
        let order = self.flow_order();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..max_sweeps {
            let mut change: f64 = 0.0;
            for &s in &order {
                let inflow: f64 = incoming[s].iter().map(|&(r, w)| pi[r] * w).sum();
                let v = inflow / (1.0 - self_loop[s]);
                change = change.max((v - pi[s]).abs());
                pi[s] = v;
            }
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= total);
            if change / total < tol {
                return Ok(StationaryDistribution::from_vec(self.space.clone(), self.p, pi));
            }
        }
        Err(Error::Convergence {
            what: "Gauss-Seidel",
            iterations: max_sweeps,
            residual: self.residual(&pi),
        })
    }
}

impl TransitionMatrix {
    /// Block Gauss–Seidel: every freeze/AIFS cycle (the timers of one
    /// counter, the AIFS wait, the long wait) is solved exactly with a dense
    /// LU, so a sweep pushes mass around those loops at once. Blocks with the
    /// same internal transitions share one factorization.
    pub fn block_gauss_seidel(&self, tol: f64, max_sweeps: usize) -> Result<StationaryDistribution> {
        let n = self.len();
        let blocks = self.flow_blocks();
        let mut block_of = vec![0usize; n];
        for (k, r) in blocks.iter().enumerate() {
            block_of[r.clone()].fill(k);
        }
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut internal: Vec<Vec<(u32, u32, u64)>> = vec![Vec::new(); blocks.len()];
        for (r, row) in self.rows.iter().enumerate() {
            let k = block_of[r];
            for &(t, w) in row {
                if block_of[t] == k {
                    let start = blocks[k].start;
                    internal[k].push(((r - start) as u32, (t - start) as u32, w.to_bits()));
                } else {
                    incoming[t].push((r, w));
                }
            }
        }
        let mut shapes: HashMap<Vec<(u32, u32, u64)>, usize> = HashMap::new();
        let mut factors: Vec<LU<f64, Dyn, Dyn>> = Vec::new();
        let mut factor_of = Vec::with_capacity(blocks.len());
        for (k, r) in blocks.iter().enumerate() {
            let key = std::mem::take(&mut internal[k]);
            let id = match shapes.get(&key) {
                Some(&id) => id,
                None => {
                    // (I − P_BB)ᵀ, so that the block balance reads M π_B = inflow
                    let size = r.len();
                    let mut m = DMatrix::<f64>::identity(size, size);
                    for &(from, to, w) in &key {
                        m[(to as usize, from as usize)] -= f64::from_bits(w);
                    }
                    factors.push(m.lu());
                    shapes.insert(key, factors.len() - 1);
                    factors.len() - 1
                }
            };
            factor_of.push(id);
        }

        let mut pi = vec![1.0 / n as f64; n];
        for sweep in 1..=max_sweeps {
            let mut change: f64 = 0.0;
            for (k, r) in blocks.iter().enumerate() {
                let rhs = DVector::from_iterator(
                    r.len(),
                    r.clone().map(|s| incoming[s].iter().map(|&(from, w)| pi[from] * w).sum::<f64>()),
                );
                let Some(sol) = factors[factor_of[k]].solve(&rhs) else {
                    return self.gauss_seidel(tol, max_sweeps);
                };
                for (s, v) in r.clone().zip(sol.iter()) {
                    change = change.max((v - pi[s]).abs());
                    pi[s] = *v;
                }
            }
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= total);
            // the per-sweep change can jitter at rounding level once converged
            if change / total < tol || (sweep % 64 == 0 && self.residual(&pi) < tol) {
                return Ok(StationaryDistribution::from_vec(self.space.clone(), self.p, pi));
            }
        }
        Err(Error::Convergence {
            what: "block Gauss-Seidel",
            iterations: max_sweeps,
            residual: self.residual(&pi),
        })
    }

    /// Contiguous index ranges in flow order: long wait, AIFS wait, then per
    /// stage each counter's timers from the highest counter down, and the
    /// transmission state.
    fn flow_blocks(&self) -> Vec<Range<usize>> {
        let space = &self.space;
        let params = &space.params;
        let span = space.timer_span();
        let l = params.l as usize;
        let mut blocks = Vec::new();
        if l > 0 {
            blocks.push(0..l);
        }
        blocks.push(l..l + span);
        for j in 0..params.stages() {
            let base = space.index(ChainState::new(j as i32, 0, 0)).expect("stage exists");
            for b in (1..=space.max_counter(j) as usize).rev() {
                let start = base + 1 + (b - 1) * span;
                blocks.push(start..start + span);
            }
            blocks.push(base..base + 1);
        }
        blocks
    }

    /// States in the order mass moves through them: long wait, AIFS wait,
    /// then each stage from the highest counter down to the transmission.
    fn flow_order(&self) -> Vec<usize> {
        let space = &self.space;
        let params = &space.params;
        let top = space.top_timer();
        let idx = |s: ChainState| space.index(s).expect("state inside the space");
        let mut order = Vec::with_capacity(space.len());
        order.extend((0..params.l).rev().map(|d| idx(ChainState::new(-2, 0, d))));
        order.extend((0..=top).rev().map(|d| idx(ChainState::new(-1, 0, d))));
        for j in 0..params.stages() {
            let stage = j as i32;
            for b in (1..=space.max_counter(j)).rev() {
                order.push(idx(ChainState::new(stage, b, 0)));
                order.extend((1..=top).rev().map(|d| idx(ChainState::new(stage, b, d))));
            }
            order.push(idx(ChainState::new(stage, 0, 0)));
        }
        order
    }
}

fn merge(mut out: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    out.sort_by_key(|&(t, _)| t);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
    for (t, w) in out {
        match merged.last_mut() {
            Some(last) if last.0 == t => last.1 += w,
            _ => merged.push((t, w)),
        }
    }
    merged.retain(|&(_, w)| w != 0.0);
    merged
}

/// Transmission probability of the chain solved numerically.
pub fn reference_tau(
    params: &EdcaParams,
    p: f64,
    frozen_slots: u32,
    convention: WindowConvention,
) -> Result<f64> {
    let matrix = TransitionMatrix::build(params, p, frozen_slots, convention)?;
    Ok(matrix.block_gauss_seidel(1e-15, 20_000)?.tau())
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn rows_are_stochastic() {
        for conv in [WindowConvention::Inclusive, WindowConvention::Exclusive] {
            let m = TransitionMatrix::build(&params(), 0.3, 5, conv).unwrap();
            for i in 0..m.len() {
                let s: f64 = m.row(i).iter().map(|&(_, w)| w).sum();
                assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
            }
        }
    }

    #[test]
    fn solvers_agree() {
        let m = TransitionMatrix::build(&params(), 0.2, 10, WindowConvention::Inclusive).unwrap();
        let pw = m.power_iteration(1e-14, 2_000_000).unwrap();
        let gs = m.gauss_seidel(1e-15, 100_000).unwrap();
        let err = pw
            .as_slice()
            .iter()
            .zip(gs.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "max abs difference {err}");
        assert!(m.residual(gs.as_slice()) < 1e-12);
        let block = m.block_gauss_seidel(1e-15, 10_000).unwrap();
        let err = block
            .as_slice()
            .iter()
            .zip(gs.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "block solver differs by {err}");
    }

    #[test]
    fn deterministic_cycle() {
        let p = EdcaParams {
            w_min: 0,
            m: 0,
            h: 0,
            a: 1,
            q: 1.0,
            l: 0,
        };
        let tau = reference_tau(&p, 0.0, 119, WindowConvention::Inclusive).unwrap();
        assert!((tau - 1.0 / 3.0).abs() < 1e-12);
    }
}

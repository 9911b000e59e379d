use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::params::EdcaParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// `q = 0` and `L = 0`: never leaves the coin.
    Parked,
    Tail(u32),
    Aifs(u32),
    /// `counter = 0` (with `timer = 0`) is the transmission state.
    Backoff { stage: u32, counter: u32, timer: u32 },
}

/// One saturated station following the chain's transition rules, with the
/// busy indication supplied by the caller.
#[derive(Debug, Clone)]
pub(crate) struct Station {
    params: EdcaParams,
    /// `N + A` under the chain freeze, `A` under the busy-period freeze.
    top: u32,
    phase: Phase,
    rng: ChaCha8Rng,
}

impl Station {
    pub fn new(params: EdcaParams, frozen_slots: u32, rng: ChaCha8Rng) -> Self {
        let mut st = Self {
            params,
            top: frozen_slots + params.a,
            phase: Phase::Parked,
            rng,
        };
        st.phase = st.coin();
        st
    }

    pub fn is_transmitting(&self) -> bool {
        matches!(self.phase, Phase::Backoff { counter: 0, .. })
    }

    fn coin(&mut self) -> Phase {
        let p = &self.params;
        if p.q == 0.0 && p.l == 0 {
            Phase::Parked
        } else if p.l == 0 || self.rng.random_bool(p.q) {
            Phase::Aifs(p.a)
        } else {
            Phase::Tail(p.l - 1)
        }
    }

    fn draw(&mut self, stage: u32) -> Phase {
        let w = self.params.window(stage) as u32;
        Phase::Backoff {
            stage,
            counter: self.rng.random_range(0..=w),
            timer: 0,
        }
    }

    /// Advances one general slot; `busy` is whether anyone else transmitted in it.
    pub fn step(&mut self, busy: bool) {
        let a = self.params.a;
        self.phase = match self.phase {
            Phase::Parked => Phase::Parked,
            Phase::Tail(0) => self.coin(),
            Phase::Tail(d) => Phase::Tail(d - 1),
            Phase::Aifs(d) if d > a => Phase::Aifs(d - 1),
            Phase::Aifs(_) if busy => Phase::Aifs(self.top),
            Phase::Aifs(0) => self.draw(0),
            Phase::Aifs(d) => Phase::Aifs(d - 1),
            Phase::Backoff { stage, counter: 0, .. } => {
                if busy && stage + 1 < self.params.stages() {
                    self.draw(stage + 1)
                } else {
                    self.coin()
                }
            }
            Phase::Backoff { stage, counter, timer } => {
                if timer > a {
                    Phase::Backoff { stage, counter, timer: timer - 1 }
                } else if busy {
                    Phase::Backoff { stage, counter, timer: self.top }
                } else if timer <= 1 {
                    Phase::Backoff { stage, counter: counter - 1, timer: 0 }
                } else {
                    Phase::Backoff { stage, counter, timer: timer - 1 }
                }
            }
        };
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Per-(STA, AP) EDCA knobs.
///
/// `a` is AIFS minus one, in slots. After a success or a drop the station
/// flips a coin: heads (probability `q`) starts the AIFS wait, tails parks it
/// for `l` slots before flipping again.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdcaParams {
    /// Minimum contention window `W_min`; backoff draws are uniform on `0..=W_j`.
    pub w_min: u32,
    /// Maximum backoff stage.
    pub m: u32,
    /// Retransmission limit at the maximum stage.
    pub h: u32,
    pub a: u32,
    pub q: f64,
    pub l: u32,
}

impl EdcaParams {
    pub fn validate(&self) -> Result<()> {
        if self.a < 1 {
            return Err(invalid("a", "AIFS offset must be at least one slot"));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(invalid("q", format!("coin probability {} not in [0, 1]", self.q)));
        }
        if self.m > 30 {
            return Err(invalid("m", format!("maximum backoff stage {} too large", self.m)));
        }
        if self.window(self.m) > u64::from(u32::MAX) {
            return Err(invalid("w_min", "largest contention window exceeds 2^32 - 1"));
        }
        Ok(())
    }

    /// Number of backoff/retransmission stages, `m + h + 1`.
    pub fn stages(&self) -> u32 {
        self.m + self.h + 1
    }

    /// Contention window at stage `j`: doubles up to stage `m`, then stays.
    pub fn window(&self, stage: u32) -> u64 {
        u64::from(self.w_min) << stage.min(self.m)
    }
}

/// Starting point of the MAC parameter control cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlDefaults {
    pub w_min: u32,
    pub a: u32,
    pub q: f64,
    pub l: u32,
    pub m: u32,
    pub h: u32,
}

impl Default for ControlDefaults {
    fn default() -> Self {
        Self {
            w_min: 15,
            a: 6,
            q: 0.5,
            l: 100,
            m: 6,
            h: 6,
        }
    }
}

impl From<ControlDefaults> for EdcaParams {
    fn from(d: ControlDefaults) -> Self {
        EdcaParams {
            w_min: d.w_min,
            m: d.m,
            h: d.h,
            a: d.a,
            q: d.q,
            l: d.l,
        }
    }
}

impl Default for EdcaParams {
    fn default() -> Self {
        ControlDefaults::default().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_schedule_doubles_then_caps() {
        let p = EdcaParams {
            w_min: 16,
            m: 2,
            h: 2,
            a: 1,
            q: 1.0,
            l: 0,
        };
        let w: Vec<u64> = (0..p.stages()).map(|j| p.window(j)).collect();
        assert_eq!(w, vec![16, 32, 64, 64, 64]);
    }

    #[test]
    fn rejects_zero_aifs_and_bad_coin() {
        let mut p = EdcaParams::default();
        p.a = 0;
        assert!(p.validate().is_err());
        let mut p = EdcaParams::default();
        p.q = 1.5;
        assert!(p.validate().is_err());
        assert!(EdcaParams::default().validate().is_ok());
    }
}

//! Experiment worlds: AP grid, Poisson STA placement, fading channel,
//! SNR-to-rate mapping, the Max-SNR baseline, and the metrics shared by
//! every association scheme.

mod baseline;
mod channel;
mod metrics;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

pub use baseline::{jain_index, max_snr_association, MaxSnrOutcome};
pub use channel::{link_rates, ChannelModel, RateMatrix, RateRow, RateTable};
pub use metrics::{evaluate_network, NetworkMetrics};

/// Labels for the independent random substreams of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Placement = 1,
    IspLabels = 2,
    Fading = 3,
}

/// Deterministic generator for substream `label`, attempt `attempt`.
pub fn substream_rng(seed: u64, label: Substream, attempt: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((attempt as u64) << 8) | label as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Density {
    Homogeneous,
    NonHomogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySpec {
    pub kind: Density,
    /// Mean STAs per AP grid.
    pub lambda_mean: f64,
    /// Must be a perfect square; APs sit at the centers of a square grid.
    pub n_aps: usize,
    pub grid_size: f64,
    pub isp_count: usize,
    /// Probability that a STA belongs to ISP 0.
    pub rho: f64,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            kind: Density::Homogeneous,
            lambda_mean: 3.0,
            n_aps: 4,
            grid_size: 5.0,
            isp_count: 2,
            rho: 0.5,
        }
    }
}

impl TopologySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_mean.is_finite() && self.lambda_mean > 0.0) {
            return Err(domain("lambda_mean", self.lambda_mean, "(0, ∞)"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(domain("rho", self.rho, "[0, 1]"));
        }
        if !(self.grid_size.is_finite() && self.grid_size > 0.0) {
            return Err(domain("grid_size", self.grid_size, "(0, ∞)"));
        }
        if self.isp_count == 0 {
            return Err(invalid("isp_count", "need at least one ISP"));
        }
        let side = grid_side(self.n_aps);
        if self.n_aps == 0 || side * side != self.n_aps {
            return Err(invalid("n_aps", format!("{} is not a positive perfect square", self.n_aps)));
        }
        Ok(())
    }
}

fn grid_side(n: usize) -> usize {
    (n as f64).sqrt().round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub x: f64,
    pub y: f64,
    pub channel: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub x: f64,
    pub y: f64,
    /// Grid (and hence AP) whose area the STA was dropped into.
    pub grid: usize,
    pub isp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub width: f64,
    pub height: f64,
    pub aps: Vec<AccessPoint>,
    pub stas: Vec<Station>,
    pub isp_count: usize,
    /// Empty draws thrown away before this one.
    pub regenerations: u32,
}

impl Topology {
    /// STA ids of each ISP.
    pub fn isp_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.isp_count];
        for (i, s) in self.stas.iter().enumerate() {
            members[s.isp].push(i);
        }
        members
    }

    pub fn distance(&self, sta: usize, ap: usize) -> f64 {
        let (s, a) = (&self.stas[sta], &self.aps[ap]);
        (s.x - a.x).hypot(s.y - a.y)
    }
}

/// Regeneration cap for draws that come out empty.
const MAX_REGENERATIONS: u32 = 10_000;

/// Drops STAs on the AP grid. A draw with no STAs at all is retried with
/// the next sub-seed; the count of retries is kept on the topology.
pub fn generate_topology(spec: &TopologySpec, seed: u64) -> Result<Topology> {
    spec.validate()?;
    let side = grid_side(spec.n_aps);
    let g = spec.grid_size;
    let aps: Vec<AccessPoint> = (0..spec.n_aps)
        .map(|k| AccessPoint {
            x: (k % side) as f64 * g + g / 2.0,
            y: (k / side) as f64 * g + g / 2.0,
            channel: k as u32,
        })
        .collect();
    for attempt in 0..MAX_REGENERATIONS {
        let stas = draw_stations(spec, side, seed, attempt)?;
        if !stas.is_empty() {
            return Ok(Topology {
                width: side as f64 * g,
                height: side as f64 * g,
                aps,
                stas,
                isp_count: spec.isp_count,
                regenerations: attempt,
            });
        }
    }
    Err(invalid("topology", "every draw came out empty"))
}

fn draw_stations(spec: &TopologySpec, side: usize, seed: u64, attempt: u32) -> Result<Vec<Station>> {
    let mut place = substream_rng(seed, Substream::Placement, attempt);
    let mut labels = substream_rng(seed, Substream::IspLabels, attempt);
    let unit = Uniform::new(0.0, 1.0).expect("unit interval");
    let first_isp = Bernoulli::new(spec.rho).map_err(|_| domain("rho", spec.rho, "[0, 1]"))?;
    let g = spec.grid_size;
    let mut stas = Vec::new();
    for grid in 0..spec.n_aps {
        let lambda = match spec.kind {
            Density::Homogeneous => spec.lambda_mean,
            Density::NonHomogeneous => spec.lambda_mean * unit.sample(&mut place),
        };
        let count = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|_| domain("lambda", lambda, "(0, ∞)"))?
                .sample(&mut place) as usize
        } else {
            0
        };
        let (gx, gy) = ((grid % side) as f64 * g, (grid / side) as f64 * g);
        for _ in 0..count {
            let x = gx + g * unit.sample(&mut place);
            let y = gy + g * unit.sample(&mut place);
            let isp = if spec.isp_count == 1 || first_isp.sample(&mut labels) {
                0
            } else {
                1 + labels.random_range(0..spec.isp_count - 1)
            };
            stas.push(Station { x, y, grid, isp });
        }
    }
    Ok(stas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_layout() {
        let t = generate_topology(&TopologySpec::default(), 1).unwrap();
        let centers: Vec<(f64, f64)> = t.aps.iter().map(|a| (a.x, a.y)).collect();
        assert_eq!(centers, vec![(2.5, 2.5), (7.5, 2.5), (2.5, 7.5), (7.5, 7.5)]);
        assert_eq!((t.width, t.height), (10.0, 10.0));
        let mut channels: Vec<u32> = t.aps.iter().map(|a| a.channel).collect();
        channels.dedup();
        assert_eq!(channels.len(), 4);
        for s in &t.stas {
            let ap = &t.aps[s.grid];
            assert!((s.x - ap.x).abs() <= 2.5 && (s.y - ap.y).abs() <= 2.5);
        }
    }

    #[test]
    fn same_seed_same_topology() {
        let spec = TopologySpec::default();
        assert_eq!(generate_topology(&spec, 9).unwrap(), generate_topology(&spec, 9).unwrap());
        assert_ne!(generate_topology(&spec, 9).unwrap(), generate_topology(&spec, 10).unwrap());
    }

    #[test]
    fn poisson_mean_per_grid() {
        let spec = TopologySpec {
            n_aps: 1,
            ..TopologySpec::default()
        };
        let mut total = 0usize;
        let draws = 10_000u32;
        for attempt in 0..draws {
            total += draw_stations(&spec, 1, 77, attempt).unwrap().len();
        }
        let mean = total as f64 / draws as f64;
        assert!((mean - 3.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn rho_one_puts_everyone_in_the_first_isp() {
        let spec = TopologySpec {
            rho: 1.0,
            lambda_mean: 5.0,
            ..TopologySpec::default()
        };
        let t = generate_topology(&spec, 3).unwrap();
        assert!(t.stas.iter().all(|s| s.isp == 0));
        let spec = TopologySpec { rho: 0.0, ..spec };
        let t = generate_topology(&spec, 3).unwrap();
        assert!(t.stas.iter().all(|s| s.isp == 1));
    }

    #[test]
    fn empty_draws_are_regenerated() {
        let spec = TopologySpec {
            lambda_mean: 0.05,
            n_aps: 1,
            ..TopologySpec::default()
        };
        let t = generate_topology(&spec, 5).unwrap();
        assert!(!t.stas.is_empty());
        assert!(t.regenerations > 0);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            TopologySpec { lambda_mean: 0.0, ..TopologySpec::default() },
            TopologySpec { rho: 1.5, ..TopologySpec::default() },
            TopologySpec { n_aps: 3, ..TopologySpec::default() },
            TopologySpec { isp_count: 0, ..TopologySpec::default() },
        ];
        for spec in bad {
            assert!(generate_topology(&spec, 0).is_err());
        }
    }
}

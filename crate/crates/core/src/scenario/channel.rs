//! Path loss with block Rayleigh fading, and the SNR-to-rate step function.

use std::io::Read;

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::scenario::{substream_rng, Substream, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModel {
    pub path_loss_exponent: f64,
    pub gain_constant: f64,
    /// Transmit SNR `P/σ²` in dB.
    pub reference_snr_db: f64,
    /// Distances are clamped to at least this many meters.
    pub min_distance: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            path_loss_exponent: 3.0,
            gain_constant: 1.0,
            reference_snr_db: 10.0,
            min_distance: 0.1,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite()) {
            return Err(domain("path_loss_exponent", self.path_loss_exponent, "[2, ∞)"));
        }
        if !(self.gain_constant > 0.0 && self.gain_constant.is_finite()) {
            return Err(domain("gain_constant", self.gain_constant, "(0, ∞)"));
        }
        if !(self.min_distance > 0.0) {
            return Err(domain("min_distance", self.min_distance, "(0, ∞)"));
        }
        Ok(())
    }

    /// Received SNR in dB for distance `d` and fading power `|h'|²`.
    pub fn snr_db(&self, distance: f64, fading_power: f64) -> f64 {
        let d = distance.max(self.min_distance);
        let gain = fading_power * self.gain_constant.powi(2) * d.powf(-self.path_loss_exponent);
        self.reference_snr_db + 10.0 * gain.log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub modulation: String,
    pub lo_db: f64,
    /// Exclusive; infinite for the last row.
    pub hi_db: f64,
    pub rate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    rows: Vec<RateRow>,
}

impl Default for RateTable {
    fn default() -> Self {
        Self::ieee80211a()
    }
}

impl RateTable {
    pub fn new(rows: Vec<RateRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("rate table", "no rows"));
        }
        for w in rows.windows(2) {
            if w[0].hi_db != w[1].lo_db {
                return Err(invalid("rate table", format!("gap or overlap at {} dB", w[0].hi_db)));
            }
            if w[1].rate_mbps <= w[0].rate_mbps {
                return Err(invalid("rate table", "rates must strictly increase"));
            }
        }
        for r in &rows {
            if !(r.lo_db < r.hi_db && r.rate_mbps > 0.0) {
                return Err(invalid("rate table", format!("bad row {r:?}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn ieee80211a() -> Self {
        let spec = [
            ("BPSK 1/2", 5.0, 8.0, 6.0),
            ("BPSK 3/4", 8.0, 10.0, 9.0),
            ("QPSK 1/2", 10.0, 13.0, 12.0),
            ("QPSK 3/4", 13.0, 16.0, 18.0),
            ("16QAM 1/2", 16.0, 19.0, 24.0),
            ("16QAM 3/4", 19.0, 22.0, 36.0),
            ("64QAM 2/3", 22.0, 25.0, 48.0),
            ("64QAM 3/4", 25.0, f64::INFINITY, 54.0),
        ];
        let rows = spec
            .iter()
            .map(|&(m, lo, hi, r)| RateRow {
                modulation: m.to_string(),
                lo_db: lo,
                hi_db: hi,
                rate_mbps: r,
            })
            .collect();
        Self::new(rows).expect("table is well formed")
    }

    /// Reads `modulation,lo_db,hi_db,rate_mbps` rows with a header; an empty
    /// or `inf` upper bound means unbounded.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            modulation: String,
            lo_db: f64,
            hi_db: String,
            rate_mbps: f64,
        }
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(reader).deserialize::<Raw>() {
            let raw = rec.map_err(|e| invalid("rate table csv", e.to_string()))?;
            let hi = raw.hi_db.trim();
            let hi_db = if hi.is_empty() || hi.eq_ignore_ascii_case("inf") {
                f64::INFINITY
            } else {
                hi.parse()
                    .map_err(|_| invalid("rate table csv", format!("bad hi_db {hi:?}")))?
            };
            rows.push(RateRow {
                modulation: raw.modulation,
                lo_db: raw.lo_db,
                hi_db,
                rate_mbps: raw.rate_mbps,
            });
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> &[RateRow] {
        &self.rows
    }

    /// Rate for `snr_db` with `[lo, hi)` intervals; 0 below the first row.
    pub fn rate(&self, snr_db: f64) -> f64 {
        self.rows
            .iter()
            .find(|r| snr_db >= r.lo_db && snr_db < r.hi_db)
            .map_or(0.0, |r| r.rate_mbps)
    }
}

/// Per-(STA, AP) link data, indexed `[sta][ap]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    pub distance: Vec<Vec<f64>>,
    pub snr_db: Vec<Vec<f64>>,
    pub rate_mbps: Vec<Vec<f64>>,
}

impl RateMatrix {
    /// Builds a matrix straight from rates; SNRs are set to the rate so
    /// that argmax-SNR follows the fastest link.
    pub fn from_rates(rate_mbps: Vec<Vec<f64>>) -> Result<Self> {
        let n_aps = rate_mbps.first().map_or(0, |r| r.len());
        if rate_mbps.iter().any(|r| r.len() != n_aps) {
            return Err(invalid("rates", "ragged matrix"));
        }
        if let Some(&bad) = rate_mbps.iter().flatten().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(domain("rate", bad, "[0, ∞)"));
        }
        Ok(Self {
            distance: vec![vec![f64::NAN; n_aps]; rate_mbps.len()],
            snr_db: rate_mbps.clone(),
            rate_mbps,
        })
    }

    pub fn n_stas(&self) -> usize {
        self.rate_mbps.len()
    }

    pub fn n_aps(&self) -> usize {
        self.rate_mbps.first().map_or(0, |r| r.len())
    }

    pub fn rate(&self, sta: usize, ap: usize) -> f64 {
        self.rate_mbps[sta][ap]
    }

    pub fn usable(&self, sta: usize, ap: usize) -> bool {
        self.rate_mbps[sta][ap] > 0.0
    }

    /// STAs without a single usable link.
    pub fn excluded_stas(&self) -> Vec<usize> {
        (0..self.n_stas())
            .filter(|&i| (0..self.n_aps()).all(|a| !self.usable(i, a)))
            .collect()
    }
}

/// Draws one fading value per (STA, AP), frozen for the experiment.
pub fn link_rates(
    topology: &Topology,
    channel: &ChannelModel,
    table: &RateTable,
    seed: u64,
) -> Result<RateMatrix> {
    channel.validate()?;
    let mut rng = substream_rng(seed, Substream::Fading, topology.regenerations);
    let n_aps = topology.aps.len();
    let mut out = RateMatrix {
        distance: Vec::with_capacity(topology.stas.len()),
        snr_db: Vec::with_capacity(topology.stas.len()),
        rate_mbps: Vec::with_capacity(topology.stas.len()),
    };
    for i in 0..topology.stas.len() {
        let mut d_row = Vec::with_capacity(n_aps);
        let mut s_row = Vec::with_capacity(n_aps);
        let mut r_row = Vec::with_capacity(n_aps);
        for a in 0..n_aps {
            let d = topology.distance(i, a);
            let fading: f64 = Exp1.sample(&mut rng);
            let snr = channel.snr_db(d, fading);
            d_row.push(d);
            s_row.push(snr);
            r_row.push(table.rate(snr));
        }
        out.distance.push(d_row);
        out.snr_db.push(s_row);
        out.rate_mbps.push(r_row);
    }
    Ok(out)
}

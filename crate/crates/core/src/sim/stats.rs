use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::sim::{Estimate, StationReport};

/// Two-sided 95% Student-t quantile with `df` degrees of freedom.
pub fn student_t_975(df: usize) -> f64 {
    if df == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, Default)]
struct Batch {
    slots: u64,
    time: f64,
    attempts: Vec<u64>,
    successes: Vec<u64>,
    collisions: Vec<u64>,
    tx_time: Vec<f64>,
}

/// Non-overlapping batch means over the measurement window.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    batches: Vec<Batch>,
    batch_len: f64,
    current: usize,
}

impl BatchMeans {
    pub fn new(stations: usize, batches: usize, batch_len: f64) -> Self {
        let empty = Batch {
            attempts: vec![0; stations],
            successes: vec![0; stations],
            collisions: vec![0; stations],
            tx_time: vec![0.0; stations],
            ..Batch::default()
        };
        Self {
            batches: vec![empty; batches],
            batch_len,
            current: 0,
        }
    }

    /// Opens the batch containing `offset` (horizon units past warmup) and
    /// charges it one slot of `duration` seconds.
    pub fn record_slot(&mut self, offset: f64, duration: f64) {
        let k = (offset / self.batch_len) as usize;
        self.current = k.min(self.batches.len() - 1);
        let b = &mut self.batches[self.current];
        b.slots += 1;
        b.time += duration;
    }

    pub fn record_attempt(&mut self, station: usize, collided: bool, duration: f64) {
        let b = &mut self.batches[self.current];
        b.attempts[station] += 1;
        if collided {
            b.collisions[station] += 1;
        } else {
            b.successes[station] += 1;
        }
        b.tx_time[station] += duration;
    }

    fn estimate(&self, num: impl Fn(&Batch) -> f64, den: impl Fn(&Batch) -> f64) -> Estimate {
        let (n, d) = self
            .batches
            .iter()
            .fold((0.0, 0.0), |(n, d), b| (n + num(b), d + den(b)));
        let mean = if d > 0.0 { n / d } else { 0.0 };
        let samples: Vec<f64> = self
            .batches
            .iter()
            .filter(|b| den(b) > 0.0)
            .map(|b| num(b) / den(b))
            .collect();
        let k = samples.len();
        let ci95 = if k < 2 {
            f64::INFINITY
        } else {
            let avg = samples.iter().sum::<f64>() / k as f64;
            let var = samples.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (k - 1) as f64;
            student_t_975(k - 1) * (var / k as f64).sqrt()
        };
        Estimate { mean, ci95 }
    }

    pub fn station_report(&self, i: usize, rate: f64, t_txop: f64) -> StationReport {
        let total = |f: fn(&Batch, usize) -> u64| self.batches.iter().map(|b| f(b, i)).sum::<u64>();
        let attempts = total(|b, i| b.attempts[i]);
        let successes = total(|b, i| b.successes[i]);
        let collisions = total(|b, i| b.collisions[i]);
        StationReport {
            tau: self.estimate(|b| b.attempts[i] as f64, |b| b.slots as f64),
            throughput: self.estimate(|b| b.successes[i] as f64 * rate * t_txop, |b| b.time),
            airtime: self.estimate(|b| b.tx_time[i], |b| b.time),
            collision_probability: self.estimate(|b| b.collisions[i] as f64, |b| b.attempts[i] as f64),
            attempts,
            successes,
            collisions,
            no_success: successes == 0,
        }
    }
}

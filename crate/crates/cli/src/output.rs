use std::fs;
use std::path::{Path, PathBuf};

use airslice_core::sim::student_t_975;
use anyhow::{Context, Result};
use serde::Serialize;

/// Config hash and seed carried by every CSV row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

/// Writes `rows` with a header line and the stamp appended to every record;
/// the directory is created if needed.
pub fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T], stamp: &Stamp) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    // serialize once to learn the header, then re-emit with the stamp columns
    let mut body = csv::Writer::from_writer(Vec::new());
    for row in rows {
        body.serialize(row)?;
    }
    let body = body.into_inner().map_err(|e| e.into_error())?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("opening {}", path.display()))?;
    let seed = stamp.seed.to_string();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_slice());
    for (k, record) in reader.records().enumerate() {
        let mut record = record?;
        if k == 0 {
            record.push_field("config_hash");
            record.push_field("seed");
        } else {
            record.push_field(&stamp.config_hash);
            record.push_field(&seed);
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(path)
}

/// Mean and 95% Student-t half-width; the half-width is 0 for one sample.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, student_t_975(n - 1) * (var / n as f64).sqrt())
}

//! Empirical success-probability curves and their CSV export.

use std::io::Write;
use std::path::Path;

use super::forgery::AttemptRecord;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CdfError {
    #[error("cannot build a distribution from an empty record")]
    EmptyRecord,
}

/// Empirical CDF: cumulative success probability by attempt count.
/// Non-decreasing, ends at 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    points: Vec<(u64, f64)>,
}

pub fn cdf_build(record: &AttemptRecord) -> Result<CdfTable, CdfError> {
    if record.attempts.is_empty() {
        return Err(CdfError::EmptyRecord);
    }
    let mut sorted = record.attempts.clone();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut points: Vec<(u64, f64)> = Vec::new();
    for (i, &attempts) in sorted.iter().enumerate() {
        let cumulative = (i + 1) as f64 / n;
        match points.last_mut() {
            Some((last, p)) if *last == attempts => *p = cumulative,
            _ => points.push((attempts, cumulative)),
        }
    }
    Ok(CdfTable { points })
}

impl CdfTable {
    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("attempts,cumulative_probability\n");
        for (attempts, probability) in &self.points {
            out.push_str(&format!("{attempts},{probability}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv().as_bytes())
    }
}

//! Experiment records and CSV reporting.
//!
//! Every runner produces per-run records plus aggregates; aggregates are
//! always recomputable from the records. CSV files hold one header row and
//! one row per record, floats rendered with six significant digits.

use std::io::Write;
use std::path::Path;

use crate::util::g6;
use crate::Result;

/// One map of the convergence experiment: normalized final-COR spread and
/// path efficiency of independently released drones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub map_index: usize,
    pub seed: u64,
    /// Standard deviation of the mean-normalized final COR values.
    pub sigma: f64,
    pub mean_final_cor: f64,
    /// Mean (steps to reach the final state) / (minimum possible steps).
    pub step_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub records: Vec<ConvergenceRecord>,
    pub mean_sigma: f64,
    pub mean_step_ratio: f64,
}

impl ConvergenceReport {
    pub fn new(records: Vec<ConvergenceRecord>) -> Self {
        let (mean_sigma, mean_step_ratio) = Self::aggregate(&records);
        Self { records, mean_sigma, mean_step_ratio }
    }

    pub fn aggregate(records: &[ConvergenceRecord]) -> (f64, f64) {
        (
            mean(records.iter().map(|r| r.sigma)),
            mean(records.iter().map(|r| r.step_ratio)),
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "map_index,seed,sigma,mean_final_cor,step_ratio")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.map_index,
                r.seed,
                g6(r.sigma),
                g6(r.mean_final_cor),
                g6(r.step_ratio)
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One map of the patrol comparison: time-averaged global coverage of the
/// learned patroller against the zigzag baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct PatrolRecord {
    pub map_index: usize,
    pub seed: u64,
    pub ours: f64,
    pub zigzag: f64,
    pub boost_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatrolReport {
    pub records: Vec<PatrolRecord>,
    pub mean_ours: f64,
    pub mean_zigzag: f64,
    pub mean_boost_pct: f64,
    /// Maps on which the learned patroller strictly beats the baseline.
    pub wins: usize,
}

impl PatrolReport {
    pub fn new(records: Vec<PatrolRecord>) -> Self {
        let (mean_ours, mean_zigzag, mean_boost_pct, wins) = Self::aggregate(&records);
        Self { records, mean_ours, mean_zigzag, mean_boost_pct, wins }
    }

    pub fn aggregate(records: &[PatrolRecord]) -> (f64, f64, f64, usize) {
        (
            mean(records.iter().map(|r| r.ours)),
            mean(records.iter().map(|r| r.zigzag)),
            mean(records.iter().map(|r| r.boost_pct)),
            records.iter().filter(|r| r.ours > r.zigzag).count(),
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "map_index,seed,ours_g,zigzag_g,boost_pct")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.map_index,
                r.seed,
                g6(r.ours),
                g6(r.zigzag),
                g6(r.boost_pct)
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One swarm-size/map pair of the cooperative-vs-greedy comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmRecord {
    pub drones: usize,
    pub map_index: usize,
    pub seed: u64,
    pub coop: f64,
    pub greedy: f64,
    pub boost_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmReport {
    pub records: Vec<SwarmRecord>,
    /// `(drones, mean coop G, mean greedy G, mean boost %)` per swarm size.
    pub per_count: Vec<(usize, f64, f64, f64)>,
}

impl SwarmReport {
    pub fn new(records: Vec<SwarmRecord>) -> Self {
        let per_count = Self::aggregate(&records);
        Self { records, per_count }
    }

    pub fn aggregate(records: &[SwarmRecord]) -> Vec<(usize, f64, f64, f64)> {
        let mut counts: Vec<usize> = records.iter().map(|r| r.drones).collect();
        counts.sort_unstable();
        counts.dedup();
        counts
            .into_iter()
            .map(|n| {
                let rows: Vec<&SwarmRecord> =
                    records.iter().filter(|r| r.drones == n).collect();
                (
                    n,
                    mean(rows.iter().map(|r| r.coop)),
                    mean(rows.iter().map(|r| r.greedy)),
                    mean(rows.iter().map(|r| r.boost_pct)),
                )
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "drones,map_index,seed,coop_g,greedy_g,boost_pct")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.drones,
                r.map_index,
                r.seed,
                g6(r.coop),
                g6(r.greedy),
                g6(r.boost_pct)
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean single-threaded forward-pass latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    pub trials: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

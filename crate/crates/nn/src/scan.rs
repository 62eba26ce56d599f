//! Test error against training-set size, and the sample complexity P*.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use rhm_core::dataset::sample_train_test;
use rhm_core::rng::{mix_seed, task_rng};
use rhm_core::{build_hfm_instance, ModelParams, RhmInstance};
use serde::{Deserialize, Serialize};

use crate::arch::Architecture;
use crate::error::{NnError, Result};
use crate::network::Network;
use crate::train::{test_error, train, TrainConfig};

/// Test-error level defining P*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Threshold {
    /// A fraction of the chance error `1 - 1/n_c`.
    OfChance(f64),
    Absolute(f64),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::OfChance(0.1)
    }
}

impl Threshold {
    pub fn value(&self, params: &ModelParams) -> f64 {
        match *self {
            Threshold::OfChance(f) => f * params.eps_rand(),
            Threshold::Absolute(x) => x,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::OfChance(x) => write!(f, "{x}*eps_rand"),
            Threshold::Absolute(x) => write!(f, "{x}"),
        }
    }
}

/// Which generative ensemble the instances come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Rhm,
    /// Rules without exploitable input-label correlations.
    Hfm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub arch: Architecture,
    /// Training-set sizes, visited in increasing order.
    pub grid: Vec<u64>,
    /// Independent (instance, initialization) pairs per grid point.
    pub seeds: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub threshold: Threshold,
    /// Held-out data per run: `min(p_max - P, test_cap)`.
    pub test_cap: u64,
    /// Skip the rest of the grid once P* is found.
    pub stop_at_first: bool,
    pub source: Source,
}

/// One trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub v: usize,
    pub m: usize,
    pub s: usize,
    #[serde(rename = "L")]
    pub depth: usize,
    pub n_c: usize,
    pub arch: String,
    #[serde(rename = "P")]
    pub p: u64,
    pub seed: u64,
    pub test_error: f64,
    pub train_loss: f64,
    pub epochs: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub p: u64,
    /// Mean test error over converged runs, `None` if none converged.
    pub mean_error: Option<f64>,
    pub se: f64,
    pub runs: usize,
    pub converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub threshold: Threshold,
    pub threshold_value: f64,
    pub records: Vec<ScanRecord>,
    pub points: Vec<ScanPoint>,
    /// Smallest grid P whose mean error is below the threshold, `None` when the
    /// criterion is not met anywhere on the grid.
    pub p_star: Option<u64>,
}

impl ScanResult {
    /// Interpolated P at which the mean error first crosses `level`, linear in
    /// `ln P` between the bracketing grid points.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter_map(|pt| pt.mean_error.map(|e| ((pt.p as f64).ln(), e)))
            .collect();
        if pts.first()?.1 < level {
            return Some(pts[0].0.exp());
        }
        pts.windows(2).find(|w| w[1].1 < level).map(|w| {
            let t = (w[0].1 - level) / (w[0].1 - w[1].1);
            (w[0].0 + t * (w[1].0 - w[0].0)).exp()
        })
    }
}

/// Trains one network of `config.arch` per (grid point, seed). Seed `i` uses
/// the same instance at every grid point; training sets, initializations and
/// shuffles are drawn independently per cell.
pub fn sample_complexity_scan(params: &ModelParams, config: &ScanConfig) -> Result<ScanResult> {
    params.validate()?;
    config.arch.validate(params)?;
    if config.grid.is_empty() {
        return Err(NnError::Architecture("empty training-set grid".into()));
    }
    if config.seeds == 0 {
        return Err(NnError::Architecture("at least one seed is needed".into()));
    }
    let p_max = params.p_max().as_u64();
    let mut grid = config.grid.clone();
    grid.sort_unstable();
    grid.dedup();
    if grid[0] == 0 || p_max.is_some_and(|t| grid[grid.len() - 1] > t) {
        return Err(NnError::Architecture(format!("grid must lie within [1, p_max = {}]", params.p_max())));
    }
    let instances: Vec<RhmInstance> = (0..config.seeds as u64)
        .map(|i| {
            let p = params.with_seed(mix_seed(&[config.seed, i]));
            match config.source {
                Source::Rhm => RhmInstance::build(p),
                Source::Hfm => build_hfm_instance(p),
            }
        })
        .collect::<rhm_core::Result<_>>()?;
    let threshold_value = config.threshold.value(params);
    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut p_star = None;
    for &p in &grid {
        let cells: Vec<ScanRecord> = instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| run_cell(inst, config, p, i as u64))
            .collect::<Result<_>>()?;
        let point = summarize(p, &cells);
        if point.converged < point.runs {
            log::warn!(
                "P = {p}: {} of {} runs hit the epoch cap and are excluded",
                point.runs - point.converged,
                point.runs
            );
        }
        let met = point.mean_error.is_some_and(|e| e < threshold_value);
        records.extend(cells);
        points.push(point);
        if met && p_star.is_none() {
            p_star = Some(p);
            if config.stop_at_first {
                break;
            }
        }
    }
    Ok(ScanResult { threshold: config.threshold, threshold_value, records, points, p_star })
}

fn run_cell(instance: &RhmInstance, config: &ScanConfig, p: u64, i: u64) -> Result<ScanRecord> {
    let params = instance.params();
    let cell = mix_seed(&[config.seed, i, p]);
    let (train_set, test_set) = sample_train_test(instance, p, config.test_cap, &mut task_rng(cell, 0))?;
    let mut net = Network::init(config.arch, params, &mut task_rng(cell, 1))?;
    let outcome = train(&mut net, &train_set, &config.train, &mut task_rng(cell, 2))?;
    let err = if test_set.is_empty() { f64::NAN } else { test_error(&net, &test_set)? };
    Ok(ScanRecord {
        v: params.v,
        m: params.m,
        s: params.s,
        depth: params.depth,
        n_c: params.n_classes,
        arch: config.arch.kind.to_string(),
        p,
        seed: i,
        test_error: err,
        train_loss: outcome.final_loss(),
        epochs: outcome.epochs,
        converged: outcome.converged,
    })
}

fn summarize(p: u64, cells: &[ScanRecord]) -> ScanPoint {
    let errs: Vec<f64> = cells
        .iter()
        .filter(|r| r.converged && r.test_error.is_finite())
        .map(|r| r.test_error)
        .collect();
    let n = errs.len() as f64;
    let mean = (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / n);
    let se = match mean {
        Some(m) if errs.len() > 1 => (errs.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt(),
        _ => 0.0,
    };
    ScanPoint { p, mean_error: mean, se, runs: cells.len(), converged: errs.len() }
}

pub const RECORD_SCHEMA: &str = "rhm-scan/1";

/// Writes the records as CSV after a `# schema=` line.
pub fn write_records<W: Write>(mut out: W, records: &[ScanRecord]) -> Result<()> {
    writeln!(out, "# schema={RECORD_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses records written by [`write_records`]; the schema line is required.
pub fn read_records(text: &str) -> Result<Vec<ScanRecord>> {
    let body = text
        .strip_prefix(&format!("# schema={RECORD_SCHEMA}\n"))
        .ok_or_else(|| rhm_core::RhmError::Parse {
            what: "records",
            detail: format!("line 1: expected `# schema={RECORD_SCHEMA}`"),
        })?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchKind;

    fn config(params: &ModelParams) -> ScanConfig {
        ScanConfig {
            arch: Architecture::default_for(ArchKind::TreeCnn, params),
            grid: vec![4, 8],
            seeds: 2,
            seed: 3,
            train: TrainConfig { max_epochs: 20, ..Default::default() },
            threshold: Threshold::default(),
            test_cap: 50,
            stop_at_first: false,
            source: Source::Rhm,
        }
    }

    #[test]
    fn records_cover_the_grid_and_round_trip() {
        let p = ModelParams::symmetric(3, 2, 2, 0);
        let res = sample_complexity_scan(&p, &config(&p)).unwrap();
        assert_eq!(res.records.len(), 4);
        assert_eq!(res.points.len(), 2);
        let mut buf = Vec::new();
        write_records(&mut buf, &res.records).unwrap();
        let back = read_records(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, res.records);
        assert!(read_records("v,m\n1,2\n").is_err());
    }

    #[test]
    fn bad_grids_are_rejected() {
        let p = ModelParams::symmetric(3, 2, 2, 0);
        let mut c = config(&p);
        c.grid.clear();
        assert!(sample_complexity_scan(&p, &c).is_err());
        c.grid = vec![1000];
        assert!(sample_complexity_scan(&p, &c).is_err());
    }

    #[test]
    fn crossing_interpolates_in_log_p() {
        let pt = |p, e| ScanPoint { p, mean_error: Some(e), se: 0.0, runs: 1, converged: 1 };
        let res = ScanResult {
            threshold: Threshold::default(),
            threshold_value: 0.1,
            records: vec![],
            points: vec![pt(10, 0.8), pt(100, 0.4), pt(1000, 0.0)],
            p_star: Some(1000),
        };
        assert!((res.crossing(0.2).unwrap() - 316.227766).abs() < 1e-3);
        assert_eq!(res.crossing(-1.0), None);
    }
}

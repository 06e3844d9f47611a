//! Deviation of empirical from limiting rates along a size ladder.

use std::io::Write;

use crate::config::{describe, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, RunOptions, SCHEMA_VERSION};
use crate::report::CsvOut;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub estimator: String,
    pub alpha: f64,
    pub p: usize,
    pub n: usize,
    pub replicates: usize,
    /// Mean over replicates of `|empirical p0 - p0_analytic|`.
    pub p0_deviation: f64,
    /// Mean over replicates of `|empirical p1 - p1_analytic|` (plug-in deflection).
    pub p1_deviation: f64,
    /// Set when the deviation did not decrease from the previous size.
    pub p0_not_decreasing: bool,
    pub p1_not_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub master_seed: u64,
    pub records: Vec<ConvergenceRecord>,
}

fn check_ladder(cfg: &ExperimentConfig) -> Result<Vec<(usize, usize)>> {
    if cfg.sizes.len() < 3 {
        return Err(HarnessError::Config("converge needs at least three sizes".into()));
    }
    let (p0, n0) = cfg.sizes[0];
    if cfg.sizes.iter().any(|&(p, n)| p * n0 != p0 * n) {
        return Err(HarnessError::Config(
            "converge needs a fixed ratio p/n across sizes".into(),
        ));
    }
    let mut sizes = cfg.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(HarnessError::Config(
            "converge needs at least three distinct sizes".into(),
        ));
    }
    Ok(sizes)
}

pub fn convergence_study(cfg: &ExperimentConfig, master_seed: u64, opts: RunOptions) -> Result<ConvergenceTable> {
    let sizes = check_ladder(cfg)?;
    let cfg = ExperimentConfig { sizes, ..cfg.clone() };
    let result = run_experiment(&cfg, master_seed, opts)?;
    if let Some(cell) = result.cells.iter().find(|c| c.error.is_some()) {
        return Err(HarnessError::Config(format!(
            "cell ({}, {}): {}",
            cell.p,
            cell.n,
            cell.error.as_deref().unwrap_or_default()
        )));
    }
    let mut records = Vec::new();
    for (e, spec) in cfg.estimators.iter().enumerate() {
        for (k, &alpha) in cfg.alphas.iter().enumerate() {
            let mut previous: Option<(f64, f64)> = None;
            for cell in &result.cells {
                let fits: Vec<_> = cell.successes(e).map(|(_, f)| &f.rates[k]).collect();
                if fits.is_empty() {
                    let err = cell.first_error(e).unwrap_or("no successful replicate");
                    return Err(HarnessError::Config(format!(
                        "{} at ({}, {}): {err}",
                        describe(spec),
                        cell.p,
                        cell.n
                    )));
                }
                let count = fits.len() as f64;
                let d0 = fits.iter().map(|r| (r.empirical.p0 - r.plug_in.p0).abs()).sum::<f64>() / count;
                let d1 = fits.iter().map(|r| (r.empirical.p1 - r.plug_in.p1).abs()).sum::<f64>() / count;
                records.push(ConvergenceRecord {
                    estimator: describe(spec),
                    alpha,
                    p: cell.p,
                    n: cell.n,
                    replicates: fits.len(),
                    p0_deviation: d0,
                    p1_deviation: d1,
                    p0_not_decreasing: previous.is_some_and(|(q0, _)| d0 >= q0),
                    p1_not_decreasing: previous.is_some_and(|(_, q1)| d1 >= q1),
                });
                previous = Some((d0, d1));
            }
        }
    }
    Ok(ConvergenceTable { master_seed, records })
}

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let header = format!("# amfshrink converge schema={SCHEMA_VERSION} seed={}", self.master_seed);
        let mut out = CsvOut::new(w, &header)?;
        out.row(
            &[
                "estimator",
                "alpha",
                "p",
                "n",
                "replicates",
                "p0_deviation",
                "p1_deviation",
                "p0_not_decreasing",
                "p1_not_decreasing",
            ]
            .map(String::from),
        )?;
        for r in &self.records {
            out.row(&[
                r.estimator.clone(),
                r.alpha.to_string(),
                r.p.to_string(),
                r.n.to_string(),
                r.replicates.to_string(),
                r.p0_deviation.to_string(),
                r.p1_deviation.to_string(),
                r.p0_not_decreasing.to_string(),
                r.p1_not_decreasing.to_string(),
            ])?;
        }
        out.finish()
    }
}

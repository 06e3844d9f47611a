//! Paired comparison of estimators on common random numbers.

use std::io::Write;

use crate::config::{describe, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, CellResult, ExperimentResult, RunOptions, SCHEMA_VERSION};
use crate::report::{fmt_opt, CsvOut};

/// Estimator `a` against estimator `b` in one cell at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub p: usize,
    pub n: usize,
    pub alpha: f64,
    pub a: String,
    pub b: String,
    /// Replicates where both fits succeeded.
    pub pairs: usize,
    /// Fraction of pairs with `nu(a) > nu(b)`; ties count one half.
    pub nu_win_rate: Option<f64>,
    /// Mean of `nu(a) - nu(b)`.
    pub mean_delta_nu: Option<f64>,
    /// Same, for `p1` at the empirically matched false-alarm rate.
    pub p1_win_rate: Option<f64>,
    pub mean_delta_p1: Option<f64>,
    /// 1-based rank of `a` among all estimators by mean `nu`.
    pub nu_rank_a: Option<usize>,
    pub p1_rank_a: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub master_seed: u64,
    pub records: Vec<PairRecord>,
}

fn win(x: f64, y: f64) -> f64 {
    match x.partial_cmp(&y) {
        Some(std::cmp::Ordering::Greater) => 1.0,
        Some(std::cmp::Ordering::Equal) => 0.5,
        _ => 0.0,
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Competition ranks (1 = largest mean); estimators without fits get none.
fn ranks(means: &[Option<f64>]) -> Vec<Option<usize>> {
    means
        .iter()
        .map(|m| m.map(|m| 1 + means.iter().flatten().filter(|&&o| o > m).count()))
        .collect()
}

fn cell_records(cell: &CellResult, cfg: &ExperimentConfig, out: &mut Vec<PairRecord>) {
    let k = cfg.estimators.len();
    let names: Vec<String> = cfg.estimators.iter().map(describe).collect();
    let column = |e: usize, f: &dyn Fn(&crate::experiment::Fit) -> f64| -> Vec<Option<f64>> {
        cell.fits.iter().map(|row| row[e].as_ref().ok().map(f)).collect()
    };
    for (level, &alpha) in cfg.alphas.iter().enumerate() {
        let nu: Vec<Vec<Option<f64>>> = (0..k).map(|e| column(e, &|f| f.diagnostics.nu)).collect();
        let p1: Vec<Vec<Option<f64>>> = (0..k).map(|e| column(e, &|f| f.matched_p1[level])).collect();
        let mean_of = |col: &Vec<Option<f64>>| mean(&col.iter().flatten().copied().collect::<Vec<_>>());
        let nu_ranks = ranks(&nu.iter().map(mean_of).collect::<Vec<_>>());
        let p1_ranks = ranks(&p1.iter().map(mean_of).collect::<Vec<_>>());
        for a in 0..k {
            for b in 0..k {
                if a == b {
                    continue;
                }
                let paired = |x: &Vec<Option<f64>>, y: &Vec<Option<f64>>| -> Vec<(f64, f64)> {
                    x.iter().zip(y).filter_map(|(u, v)| Some(((*u)?, (*v)?))).collect()
                };
                let pn = paired(&nu[a], &nu[b]);
                let pp = paired(&p1[a], &p1[b]);
                out.push(PairRecord {
                    p: cell.p,
                    n: cell.n,
                    alpha,
                    a: names[a].clone(),
                    b: names[b].clone(),
                    pairs: pn.len(),
                    nu_win_rate: mean(&pn.iter().map(|&(x, y)| win(x, y)).collect::<Vec<_>>()),
                    mean_delta_nu: mean(&pn.iter().map(|&(x, y)| x - y).collect::<Vec<_>>()),
                    p1_win_rate: mean(&pp.iter().map(|&(x, y)| win(x, y)).collect::<Vec<_>>()),
                    mean_delta_p1: mean(&pp.iter().map(|&(x, y)| x - y).collect::<Vec<_>>()),
                    nu_rank_a: nu_ranks[a],
                    p1_rank_a: p1_ranks[a],
                });
            }
        }
    }
}

impl Comparison {
    pub fn from_result(result: &ExperimentResult) -> Result<Self> {
        if result.config.estimators.len() < 2 {
            return Err(HarnessError::Config("compare needs at least two estimators".into()));
        }
        let mut records = Vec::new();
        for cell in result.cells.iter().filter(|c| c.error.is_none()) {
            cell_records(cell, &result.config, &mut records);
        }
        Ok(Self {
            master_seed: result.master_seed,
            records,
        })
    }

    /// Ordered pairs `(a, b)` for every cell and level.
    pub fn pair(&self, p: usize, n: usize, a: &str, b: &str) -> impl Iterator<Item = &PairRecord> {
        let (a, b) = (a.to_string(), b.to_string());
        self.records
            .iter()
            .filter(move |r| r.p == p && r.n == n && r.a == a && r.b == b)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let header = format!("# amfshrink compare schema={SCHEMA_VERSION} seed={}", self.master_seed);
        let mut out = CsvOut::new(w, &header)?;
        out.row(
            &[
                "p",
                "n",
                "alpha",
                "a",
                "b",
                "pairs",
                "nu_win_rate",
                "mean_delta_nu",
                "p1_win_rate",
                "mean_delta_p1",
                "nu_rank_a",
                "p1_rank_a",
            ]
            .map(String::from),
        )?;
        for r in &self.records {
            let rank = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
            out.row(&[
                r.p.to_string(),
                r.n.to_string(),
                r.alpha.to_string(),
                r.a.clone(),
                r.b.clone(),
                r.pairs.to_string(),
                fmt_opt(r.nu_win_rate),
                fmt_opt(r.mean_delta_nu),
                fmt_opt(r.p1_win_rate),
                fmt_opt(r.mean_delta_p1),
                rank(r.nu_rank_a),
                rank(r.p1_rank_a),
            ])?;
        }
        out.finish()
    }
}

/// Runs the experiment and compares every ordered pair of estimators.
pub fn compare_estimators(cfg: &ExperimentConfig, master_seed: u64, opts: RunOptions) -> Result<Comparison> {
    if cfg.estimators.len() < 2 {
        return Err(HarnessError::Config("compare needs at least two estimators".into()));
    }
    Comparison::from_result(&run_experiment(cfg, master_seed, opts)?)
}

//! Seeded Monte Carlo sweeps over (p, n) cells.
//!
//! Seeds: each cell hashes `(master, p, n)`, each replicate hashes
//! `(cell seed, replicate)`, and the training data, signal direction and
//! observation pools of a replicate come from tag-separated streams of that
//! seed. All estimators of a replicate see the same training data, the same
//! signal and the same observation noise.

use std::io::Write;
use std::time::{Duration, Instant};

use amfshrink_core::detector::{
    analytic_point, conditional_point, diagnostics, draw_statistic_pools, p0_analytic, threshold_for_alpha,
    DetectorDiagnostics, RocPoint,
};
use amfshrink_core::estimators::{
    oracle_from_spectrum, EstimatorSpec, SampleSpectrum, ShrinkageCovariance, RATIO_GUARD,
};
use amfshrink_core::population::{build_population, PopulationCovariance};
use amfshrink_core::rng::{derive_seed, Stream};
use amfshrink_core::sampling::{sample_signal_direction, sample_training};
use amfshrink_core::{CVector, Complex64};
use rayon::prelude::*;

use crate::config::{describe, ExperimentConfig, Signal};
use crate::error::{HarnessError, Result};
use crate::report::{fmt_opt, CsvOut};

/// Version of the CSV layouts written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

pub fn cell_seed(master: u64, p: usize, n: usize) -> u64 {
    derive_seed(master, Stream::Cell, &[p as u64, n as u64])
}

pub fn replicate_seed(cell_seed: u64, replicate: usize) -> u64 {
    derive_seed(cell_seed, Stream::Replicate, &[replicate as u64])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClipCounts {
    pub upper: usize,
    pub lower: usize,
    pub floored: usize,
}

/// Rates of one fit at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRates {
    pub threshold: f64,
    pub empirical: RocPoint,
    /// Limit law with the plug-in deflection `|a| (mu' R^-1 mu)^{1/2}`.
    pub plug_in: RocPoint,
    /// Exact law given the fit (uses the true `R` through `xi` and `nu`).
    pub conditional: RocPoint,
}

/// One estimator fitted on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub diagnostics: DetectorDiagnostics,
    pub amplitude: Complex64,
    /// `p^-1 sum_j (d_j - u_j' R u_j)^2`; absent for the clairvoyant reference.
    pub oracle_mse: Option<f64>,
    pub clip: Option<ClipCounts>,
    pub rates: Vec<ThresholdRates>,
    /// Per alpha: empirical `p1` at the empirical null quantile.
    pub matched_p1: Vec<f64>,
}

pub type FitOutcome = std::result::Result<Fit, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub p: usize,
    pub n: usize,
    /// Set when the whole cell could not run.
    pub error: Option<String>,
    /// `fits[replicate][estimator]`.
    pub fits: Vec<Vec<FitOutcome>>,
}

impl CellResult {
    /// Successful fits of one estimator, in replicate order.
    pub fn successes(&self, estimator: usize) -> impl Iterator<Item = (usize, &Fit)> {
        self.fits
            .iter()
            .enumerate()
            .filter_map(move |(r, row)| row[estimator].as_ref().ok().map(|f| (r, f)))
    }

    pub fn first_error(&self, estimator: usize) -> Option<&str> {
        self.error.as_deref().or_else(|| {
            self.fits
                .iter()
                .find_map(|row| row[estimator].as_ref().err().map(String::as_str))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    /// The thresholds every fit was evaluated at.
    pub thresholds: Vec<f64>,
    pub cells: Vec<CellResult>,
    /// Not part of any output file.
    pub wall_time: Duration,
}

fn in_guard(p: usize, n: usize) -> bool {
    let ratio = p as f64 / n as f64;
    ratio > RATIO_GUARD.0 && ratio < RATIO_GUARD.1
}

struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    signal: Signal,
    thresholds: &'a [f64],
}

impl Plan<'_> {
    fn replicate(&self, pop: &PopulationCovariance, n: usize, seed: u64) -> Vec<FitOutcome> {
        let k = self.cfg.estimators.len();
        let field = self.cfg.field;
        let shared = (|| {
            let x = sample_training(pop, n, self.cfg.entry_law, field, seed)?;
            let spectrum = SampleSpectrum::from_training(&x)?;
            let mu = sample_signal_direction(pop.dim(), field, seed)?;
            let oracle = oracle_from_spectrum(&spectrum, pop)?;
            Ok::<_, amfshrink_core::Error>((spectrum, mu, oracle))
        })();
        let (spectrum, mu, oracle) = match shared {
            Ok(s) => s,
            Err(e) => return vec![Err(e.to_string()); k],
        };
        self.cfg
            .estimators
            .iter()
            .map(|spec| {
                self.fit(spec, &spectrum, pop, &mu, &oracle, seed)
                    .map_err(|e| e.to_string())
            })
            .collect()
    }

    fn fit(
        &self,
        spec: &EstimatorSpec,
        spectrum: &SampleSpectrum,
        pop: &PopulationCovariance,
        mu: &CVector,
        oracle: &ShrinkageCovariance,
        seed: u64,
    ) -> amfshrink_core::Result<Fit> {
        let field = self.cfg.field;
        let est = spec.fit(spectrum, Some(pop))?;
        let d = diagnostics(mu, &est, pop)?;
        let a = self.signal.amplitude(d.mu_quad);
        let pools = draw_statistic_pools(mu, &est, pop, a, field, self.cfg.trials_per_replicate, seed)?;
        let rates = self
            .thresholds
            .iter()
            .map(|&t| ThresholdRates {
                threshold: t,
                empirical: pools.rates_at(t),
                plug_in: analytic_point(t, a, d.mu_quad, field),
                conditional: conditional_point(t, a, &d, field),
            })
            .collect();
        let matched_p1 = self
            .cfg
            .alphas
            .iter()
            .map(|&alpha| pools.rates_at(pools.matched_threshold(alpha)).p1)
            .collect();
        let oracle_mse = (*spec != EstimatorSpec::Clairvoyant).then(|| {
            let p = est.dim() as f64;
            est.shrunken()
                .iter()
                .zip(oracle.shrunken())
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                / p
        });
        let clip = est.diagnostics().map(|g| ClipCounts {
            upper: g.upper_clipped,
            lower: g.lower_clipped,
            floored: g.floored,
        });
        Ok(Fit {
            diagnostics: d,
            amplitude: a,
            oracle_mse,
            clip,
            rates,
            matched_p1,
        })
    }
}

fn with_threads<T: Send>(opts: RunOptions, job: impl FnOnce() -> T + Send) -> Result<T> {
    match opts.threads {
        None => Ok(job()),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs every cell and replicate, evaluating each fit at `thresholds`.
pub fn simulate(
    cfg: &ExperimentConfig,
    master_seed: u64,
    thresholds: &[f64],
    opts: RunOptions,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let plan = Plan {
        cfg,
        signal: cfg.signal()?,
        thresholds,
    };
    let start = Instant::now();
    let cells = with_threads(opts, || {
        let populations: Vec<std::result::Result<PopulationCovariance, String>> = cfg
            .sizes
            .par_iter()
            .map(|&(p, n)| {
                if in_guard(p, n) {
                    return Err(amfshrink_core::Error::RatioNearOne { p, n }.to_string());
                }
                build_population(&cfg.spectrum, p, cfg.rotate, cell_seed(master_seed, p, n)).map_err(|e| e.to_string())
            })
            .collect();
        let jobs: Vec<(usize, usize)> = populations
            .iter()
            .enumerate()
            .filter(|(_, pop)| pop.is_ok())
            .flat_map(|(c, _)| (0..cfg.replicates).map(move |r| (c, r)))
            .collect();
        let mut outcomes = jobs
            .par_iter()
            .map(|&(c, r)| {
                let (_, n) = cfg.sizes[c];
                let pop = populations[c].as_ref().expect("filtered");
                let seed = replicate_seed(cell_seed(master_seed, pop.dim(), n), r);
                plan.replicate(pop, n, seed)
            })
            .collect::<Vec<_>>()
            .into_iter();
        cfg.sizes
            .iter()
            .zip(&populations)
            .map(|(&(p, n), pop)| match pop {
                Err(e) => CellResult {
                    p,
                    n,
                    error: Some(e.clone()),
                    fits: Vec::new(),
                },
                Ok(_) => CellResult {
                    p,
                    n,
                    error: None,
                    fits: outcomes.by_ref().take(cfg.replicates).collect(),
                },
            })
            .collect()
    })?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        master_seed,
        thresholds: thresholds.to_vec(),
        cells,
        wall_time: start.elapsed(),
    })
}

/// Thresholds `t = threshold_for_alpha(alpha)` for the configured levels.
pub fn alpha_thresholds(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    cfg.alphas
        .iter()
        .map(|&a| threshold_for_alpha(a, cfg.field).map_err(HarnessError::from))
        .collect()
}

/// The experiment: each fit evaluated at the threshold of every alpha.
pub fn run_experiment(cfg: &ExperimentConfig, master_seed: u64, opts: RunOptions) -> Result<ExperimentResult> {
    let thresholds = alpha_thresholds(cfg)?;
    simulate(cfg, master_seed, &thresholds, opts)
}

/// Evenly spaced thresholds from 0 up to the level-`1e-3` threshold.
pub fn roc_thresholds(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let top = threshold_for_alpha(1e-3, cfg.field)?;
    let k = cfg.roc_points;
    Ok((0..k).map(|i| top * i as f64 / (k - 1) as f64).collect())
}

pub fn run_roc(cfg: &ExperimentConfig, master_seed: u64, opts: RunOptions) -> Result<ExperimentResult> {
    let thresholds = roc_thresholds(cfg)?;
    simulate(cfg, master_seed, &thresholds, opts)
}

/// Mean, standard deviation and 5% / 95% quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            mean,
            std,
            q05: quantile(&sorted, 0.05),
            q95: quantile(&sorted, 0.95),
        })
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Aggregate over replicates for one (cell, estimator, alpha).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub estimator: String,
    pub p: usize,
    pub n: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub succeeded: usize,
    pub failed: usize,
    pub p0: Option<Summary>,
    pub p1: Option<Summary>,
    pub nu: Option<Summary>,
    pub xi: Option<Summary>,
    pub p0_analytic: f64,
    pub p1_plug_in: Option<f64>,
    pub p0_conditional: Option<f64>,
    pub p1_conditional: Option<f64>,
    pub p1_matched: Option<f64>,
    pub oracle_mse: Option<f64>,
    pub upper_clipped: Option<f64>,
    pub lower_clipped: Option<f64>,
    pub floored: Option<f64>,
    pub error: Option<String>,
}

impl ExperimentResult {
    /// One record per cell x estimator x alpha, in configuration order.
    /// Only meaningful for results of [`run_experiment`].
    pub fn summaries(&self) -> Vec<SummaryRecord> {
        let cfg = &self.config;
        let mut out = Vec::new();
        for cell in &self.cells {
            for (e, spec) in cfg.estimators.iter().enumerate() {
                for (k, &alpha) in cfg.alphas.iter().enumerate() {
                    let fits: Vec<&Fit> = cell.successes(e).map(|(_, f)| f).collect();
                    let pick = |f: &dyn Fn(&Fit) -> f64| fits.iter().map(|x| f(x)).collect::<Vec<f64>>();
                    let clip = |f: &dyn Fn(&ClipCounts) -> usize| {
                        mean_of(fits.iter().filter_map(|x| x.clip.as_ref().map(|c| f(c) as f64)))
                    };
                    let threshold = self.thresholds[k];
                    out.push(SummaryRecord {
                        estimator: describe(spec),
                        p: cell.p,
                        n: cell.n,
                        alpha,
                        threshold,
                        succeeded: fits.len(),
                        failed: if cell.error.is_some() {
                            cfg.replicates
                        } else {
                            cell.fits.len() - fits.len()
                        },
                        p0: Summary::of(&pick(&|x| x.rates[k].empirical.p0)),
                        p1: Summary::of(&pick(&|x| x.rates[k].empirical.p1)),
                        nu: Summary::of(&pick(&|x| x.diagnostics.nu)),
                        xi: Summary::of(&pick(&|x| x.diagnostics.xi)),
                        p0_analytic: p0_analytic(threshold, cfg.field),
                        p1_plug_in: mean_of(fits.iter().map(|x| x.rates[k].plug_in.p1)),
                        p0_conditional: mean_of(fits.iter().map(|x| x.rates[k].conditional.p0)),
                        p1_conditional: mean_of(fits.iter().map(|x| x.rates[k].conditional.p1)),
                        p1_matched: mean_of(fits.iter().map(|x| x.matched_p1[k])),
                        oracle_mse: mean_of(fits.iter().filter_map(|x| x.oracle_mse)),
                        upper_clipped: clip(&|c| c.upper),
                        lower_clipped: clip(&|c| c.lower),
                        floored: clip(&|c| c.floored),
                        error: cell.first_error(e).map(str::to_string),
                    });
                }
            }
        }
        out
    }

    fn header(&self, kind: &str) -> String {
        format!(
            "# amfshrink {kind} schema={SCHEMA_VERSION} seed={} field={}",
            self.master_seed,
            self.config.field.name()
        )
    }

    /// Aggregated records; byte-identical for identical config and seed.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = CsvOut::new(w, &self.header("experiment"))?;
        let stat = |name: &str| ["mean", "std", "q05", "q95"].map(|s| format!("{name}_{s}"));
        let mut columns: Vec<String> = ["estimator", "p", "n", "alpha", "threshold", "succeeded", "failed"]
            .map(String::from)
            .to_vec();
        for name in ["p0", "p1", "nu", "xi"] {
            columns.extend(stat(name));
        }
        columns.extend(
            [
                "p0_analytic",
                "p1_plug_in",
                "p0_conditional",
                "p1_conditional",
                "p1_matched",
                "oracle_mse",
                "upper_clipped",
                "lower_clipped",
                "floored",
                "error",
            ]
            .map(String::from),
        );
        out.row(&columns)?;
        for r in self.summaries() {
            let mut row = vec![
                r.estimator.clone(),
                r.p.to_string(),
                r.n.to_string(),
                r.alpha.to_string(),
                r.threshold.to_string(),
                r.succeeded.to_string(),
                r.failed.to_string(),
            ];
            for s in [r.p0, r.p1, r.nu, r.xi] {
                row.extend([s.map(|s| s.mean), s.map(|s| s.std), s.map(|s| s.q05), s.map(|s| s.q95)].map(fmt_opt));
            }
            row.push(r.p0_analytic.to_string());
            row.extend(
                [
                    r.p1_plug_in,
                    r.p0_conditional,
                    r.p1_conditional,
                    r.p1_matched,
                    r.oracle_mse,
                    r.upper_clipped,
                    r.lower_clipped,
                    r.floored,
                ]
                .map(fmt_opt),
            );
            row.push(r.error.clone().unwrap_or_default());
            out.row(&row)?;
        }
        out.finish()
    }

    /// One row per cell x estimator x replicate x threshold.
    pub fn write_points_csv<W: Write>(&self, w: W, kind: &str) -> Result<()> {
        let mut out = CsvOut::new(w, &self.header(kind))?;
        out.row(
            &[
                "estimator",
                "p",
                "n",
                "replicate",
                "threshold",
                "p0",
                "p1",
                "se0",
                "se1",
                "p0_analytic",
                "p1_plug_in",
                "p0_conditional",
                "p1_conditional",
                "nu",
                "xi",
                "mu_quad",
                "amplitude_re",
                "amplitude_im",
                "oracle_mse",
                "error",
            ]
            .map(String::from),
        )?;
        for cell in &self.cells {
            for (e, spec) in self.config.estimators.iter().enumerate() {
                let name = describe(spec);
                let head = |r: String| vec![name.clone(), cell.p.to_string(), cell.n.to_string(), r];
                if let Some(err) = &cell.error {
                    let mut row = head(String::new());
                    row.extend(std::iter::repeat_n(String::new(), 15));
                    row.push(err.clone());
                    out.row(&row)?;
                    continue;
                }
                for (r, outcome) in cell.fits.iter().map(|row| &row[e]).enumerate() {
                    match outcome {
                        Err(err) => {
                            let mut row = head(r.to_string());
                            row.extend(std::iter::repeat_n(String::new(), 15));
                            row.push(err.clone());
                            out.row(&row)?;
                        }
                        Ok(fit) => {
                            for rate in &fit.rates {
                                let mut row = head(r.to_string());
                                let d = fit.diagnostics;
                                row.extend(
                                    [
                                        rate.threshold,
                                        rate.empirical.p0,
                                        rate.empirical.p1,
                                        rate.empirical.se0,
                                        rate.empirical.se1,
                                        rate.plug_in.p0,
                                        rate.plug_in.p1,
                                        rate.conditional.p0,
                                        rate.conditional.p1,
                                        d.nu,
                                        d.xi,
                                        d.mu_quad,
                                        fit.amplitude.re,
                                        fit.amplitude.im,
                                    ]
                                    .map(|v| v.to_string()),
                                );
                                row.push(fmt_opt(fit.oracle_mse));
                                row.push(String::new());
                                out.row(&row)?;
                            }
                        }
                    }
                }
            }
        }
        out.finish()
    }
}

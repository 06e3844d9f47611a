//! Experiment configuration, read from TOML.
//!
//! ```toml
//! field = "complex"                 # or "real"
//! sizes = [[200, 400], [400, 200]]  # (p, n) cells
//! alphas = [0.1]
//! replicates = 20
//! trials_per_replicate = 10000
//! rotate = true                     # Haar-rotate the population
//! master_seed = 7                   # optional; the CLI's --seed wins
//! entry_law = { kind = "gaussian_unit" }
//!
//! [signal]
//! deflection = 2.0                  # or: amplitude = 1.5 / amplitude = [1.0, -0.5]
//!
//! [[spectrum]]
//! kind = "point_mass"
//! value = 1.0
//! weight = 0.5
//!
//! [[spectrum]]
//! kind = "uniform_interval"
//! lo = 4.0
//! hi = 6.0
//! weight = 0.5
//!
//! [[estimators]]
//! kind = "lw"                       # t0 = 0.0, upper = "sample-max" | "edge-scaled"
//!
//! [[estimators]]
//! kind = "diagonal-loading"         # beta = ... (default 0.1 tr(S)/p)
//! ```

use std::path::Path;

use amfshrink_core::estimators::{EstimatorSpec, UpperClip};
use amfshrink_core::population::SpectrumModel;
use amfshrink_core::sampling::EntryLaw;
use amfshrink_core::{Complex64, Field};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

fn default_field() -> Field {
    Field::Complex
}

fn default_alphas() -> Vec<f64> {
    vec![0.1]
}

fn default_replicates() -> usize {
    20
}

fn default_trials() -> usize {
    10_000
}

fn default_law() -> EntryLaw {
    EntryLaw::GaussianUnit
}

fn default_true() -> bool {
    true
}

fn default_roc_points() -> usize {
    21
}

/// Signal amplitude, either fixed or solved per fit for a target deflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> Complex64 {
        match self {
            Amplitude::Real(re) => Complex64::new(re, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Amplitude>,
    /// Target `m = |a| (mu' R^-1 mu)^{1/2}`; `a` is then real and positive and
    /// recomputed for every fitted estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deflection: Option<f64>,
}

/// How the amplitude of one fit is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    Amplitude(Complex64),
    Deflection(f64),
}

impl Signal {
    /// Amplitude for a fit with `mu' R^-1 mu = mu_quad`.
    pub fn amplitude(self, mu_quad: f64) -> Complex64 {
        match self {
            Signal::Amplitude(a) => a,
            Signal::Deflection(m) => Complex64::new(m / mu_quad.sqrt(), 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_field")]
    pub field: Field,
    pub spectrum: SpectrumModel,
    pub sizes: Vec<(usize, usize)>,
    #[serde(default = "default_law")]
    pub entry_law: EntryLaw,
    pub signal: SignalConfig,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_trials")]
    pub trials_per_replicate: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default = "default_true")]
    pub rotate: bool,
    /// Threshold grid size for ROC output.
    #[serde(default = "default_roc_points")]
    pub roc_points: usize,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks everything except the aspect-ratio guard, which is reported per
    /// cell so that one bad cell does not stop a sweep.
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(invalid("sizes must list at least one (p, n) cell"));
        }
        if let Some(&(p, n)) = self.sizes.iter().find(|&&(p, n)| p == 0 || n == 0) {
            return Err(invalid(format!("cell ({p}, {n}): p and n must be positive")));
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators must not be empty"));
        }
        for spec in &self.estimators {
            match *spec {
                EstimatorSpec::Lw { t0, .. } if !(t0 >= 0.0 && t0.is_finite()) => {
                    return Err(invalid("lw: t0 must be finite and nonnegative"));
                }
                EstimatorSpec::DiagonalLoading { beta: Some(b) } if !(b > 0.0 && b.is_finite()) => {
                    return Err(invalid("diagonal-loading: beta must be positive"));
                }
                _ => {}
            }
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(invalid("alphas must be a nonempty list of values in (0, 1)"));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.trials_per_replicate == 0 {
            return Err(invalid("trials_per_replicate must be at least 1"));
        }
        if self.roc_points < 2 {
            return Err(invalid("roc_points must be at least 2"));
        }
        self.entry_law.validate()?;
        self.signal()?;
        Ok(())
    }

    pub fn signal(&self) -> Result<Signal> {
        match (self.signal.amplitude, self.signal.deflection) {
            (Some(a), None) => {
                let a = a.value();
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(invalid("signal amplitude must be finite"));
                }
                if self.field == Field::Real && a.im != 0.0 {
                    return Err(invalid("a real-field experiment needs a real amplitude"));
                }
                Ok(Signal::Amplitude(a))
            }
            (None, Some(m)) if m > 0.0 && m.is_finite() => Ok(Signal::Deflection(m)),
            (None, Some(_)) => Err(invalid("signal deflection must be positive")),
            _ => Err(invalid("signal needs exactly one of amplitude or deflection")),
        }
    }
}

/// `name(param=value, ...)` identifying one configured estimator.
pub fn describe(spec: &EstimatorSpec) -> String {
    match *spec {
        EstimatorSpec::Lw { t0, upper } => {
            let clip = match upper {
                UpperClip::SampleMax => "sample-max",
                UpperClip::EdgeScaled => "edge-scaled",
            };
            format!("{}(t0={t0},upper={clip})", spec.label())
        }
        EstimatorSpec::DiagonalLoading { beta: Some(b) } => format!("{}(beta={b})", spec.label()),
        EstimatorSpec::DiagonalLoading { beta: None } => format!("{}(beta=0.1*tr(S)/p)", spec.label()),
        _ => spec.label().to_string(),
    }
}

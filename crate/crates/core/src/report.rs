//! Residual statistics with sample provenance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{EvalError, Point3};
use crate::sampling::{Generator, SampleSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: Generator,
    pub seed: u64,
    pub count: usize,
    pub domain: String,
}

impl Provenance {
    pub fn of(samples: &SampleSet) -> Self {
        Provenance {
            generator: samples.generator,
            seed: samples.seed,
            count: samples.len(),
            domain: samples.domain.to_string(),
        }
    }
}

/// Statistics of one nonnegative residual over a sample set.
///
/// Samples whose evaluation failed are excluded from `max`, `mean`, `rms` and
/// counted in `n_failed`; a check with failures or no valid samples does not
/// pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckStats {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub rms: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_error: Option<String>,
}

impl CheckStats {
    pub fn from_results(name: &str, values: &[Result<f64, EvalError>], tolerance: f64) -> Self {
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut n_ok = 0;
        let mut first_error = None;
        for v in values {
            match v {
                Ok(r) if r.is_finite() => {
                    max = max.max(*r);
                    sum += r;
                    sq += r * r;
                    n_ok += 1;
                }
                Ok(_) => {
                    first_error.get_or_insert_with(|| "non-finite residual".to_string());
                }
                Err(e) => {
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let n_failed = values.len() - n_ok;
        let (mean, rms) = if n_ok > 0 {
            (sum / n_ok as f64, (sq / n_ok as f64).sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        CheckStats {
            name: name.to_string(),
            max: if n_ok > 0 { max } else { f64::NAN },
            mean,
            rms,
            n_ok,
            n_failed,
            tolerance,
            passed: n_ok > 0 && n_failed == 0 && max < tolerance,
            first_error,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub subject: String,
    pub provenance: Provenance,
    pub checks: Vec<CheckStats>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl ResidualReport {
    pub fn new(subject: impl Into<String>, samples: &SampleSet) -> Self {
        ResidualReport {
            subject: subject.into(),
            provenance: Provenance::of(samples),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckStats) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckStats> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Max of the named check; NaN when absent.
    pub fn max(&self, name: &str) -> f64 {
        self.check(name).map_or(f64::NAN, |c| c.max)
    }

    pub fn merge(&mut self, other: ResidualReport) {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

/// Evaluates `f` at every sample in parallel; results keep sample order.
pub fn per_sample<T, F>(samples: &SampleSet, f: F) -> Vec<Result<T, EvalError>>
where
    T: Send,
    F: Fn(Point3) -> Result<T, EvalError> + Sync,
{
    samples.points.par_iter().map(|p| f(*p)).collect()
}

/// Splits tuple-valued per-sample results into one column per residual.
pub fn columns<const N: usize>(rows: &[Result<[f64; N], EvalError>]) -> [Vec<Result<f64, EvalError>>; N] {
    std::array::from_fn(|k| {
        rows.iter()
            .map(|r| r.as_ref().map(|v| v[k]).map_err(Clone::clone))
            .collect()
    })
}

pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

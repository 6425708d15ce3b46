//! Seeded, reproducible experiments selectable by name.

mod commutator;
mod custom;
mod gap;
mod lens;
mod polydisc;
mod rowball;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::freepoly::PolyMatrix;
use crate::matrix::{op_norm, random_tuple_with, MatrixTuple};
use crate::spectral::SampleConfig;

pub use commutator::{commutator_min_search, weighted_shift, CommutatorExperiment, MinSearch};
pub use custom::CustomExperiment;
pub use gap::{shift_counter_instance, GapExperiment, ShiftInstance};
pub use lens::LensExperiment;
pub use polydisc::PolydiscExperiment;
pub use rowball::RowballExperiment;

/// Name-value parameters of an experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub BTreeMap<String, Value>);

impl Params {
    /// Parses `key=value` pairs; values are read as JSON when possible and
    /// as plain strings otherwise.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[S]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for pair in pairs {
            let pair = pair.as_ref();
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter `{pair}` is not of the form key=value")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            map.insert(k.trim().to_string(), value);
        }
        Ok(Self(map))
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| Error::InvalidParameter(format!("{key} must be a number, got {v}"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("{key} must be a nonnegative integer, got {v}"))),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(Error::InvalidParameter(format!("{key} must be a string, got {v}"))),
        }
    }
}

/// Shared inputs of an experiment run.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub seed: u64,
    pub params: Params,
    /// Sampling settings; `levels` and `trials_per_level` may be overridden
    /// from the command line.
    pub sample: SampleConfig,
    pub tol: f64,
}

impl RunContext {
    pub fn new(seed: u64, params: Params) -> Self {
        Self { seed, params, sample: SampleConfig::default().with_seed(seed), tol: 1e-10 }
    }
}

/// A pass/fail comparison recorded in a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: "<=", bound, passed: value <= bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: ">=", bound, passed: value >= bound }
    }
}

/// One row of the CSV summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub level: usize,
    pub trials: usize,
    pub estimate: Option<f64>,
    pub witness_id: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub params: Params,
    pub checks: Vec<Check>,
    pub results: BTreeMap<String, Value>,
    pub summary: Vec<SummaryRow>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: &str, ctx: &RunContext) -> Self {
        Self {
            experiment: name.into(),
            seed: ctx.seed,
            params: ctx.params.clone(),
            checks: Vec::new(),
            results: BTreeMap::new(),
            summary: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn put<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.results.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Accepted parameter names with a short description each.
    fn params(&self) -> &'static [(&'static str, &'static str)];
    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport>;
}

#[derive(Clone)]
pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, e: Arc<dyn Experiment>) {
        self.entries.insert(e.name(), e);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Experiment>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "experiment",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Experiment>> {
        self.entries.values()
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(GapExperiment));
        r.register(Arc::new(RowballExperiment));
        r.register(Arc::new(PolydiscExperiment));
        r.register(Arc::new(CommutatorExperiment));
        r.register(Arc::new(LensExperiment));
        r.register(Arc::new(CustomExperiment));
        r
    }
}

/// A validated request to run one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Rejects unknown experiment names and parameters.
    pub fn new(
        name: &str,
        params: Params,
        seed: u64,
        output_path: Option<PathBuf>,
        registry: &ExperimentRegistry,
    ) -> Result<Self> {
        let spec = Self { name: name.to_string(), params, seed, output_path };
        spec.check(registry)?;
        Ok(spec)
    }

    pub fn check(&self, registry: &ExperimentRegistry) -> Result<()> {
        let exp = registry.get(&self.name)?;
        let known: Vec<&str> = exp.params().iter().map(|(k, _)| *k).collect();
        for key in self.params.0.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::Unknown {
                    kind: "parameter",
                    name: format!("{}.{key}", self.name),
                    known: known.join(", "),
                });
            }
        }
        Ok(())
    }
}

/// Random tuple at level `n` with `||δ(x)|| = target`, for `δ` whose
/// entries are linear forms (so that `δ(cx) = cδ(x)`).
pub fn tuple_with_delta_norm<R: Rng + ?Sized>(
    delta: &PolyMatrix,
    n: usize,
    target: f64,
    rng: &mut R,
) -> Result<MatrixTuple> {
    if !(delta.vanishes_at_zero() && delta.is_affine()) {
        return Err(Error::InvalidParameter("delta must be linear to rescale to a target norm".into()));
    }
    loop {
        let x = random_tuple_with(n, delta.d(), 1.0, rng);
        let norm = op_norm(&delta.eval(&x)?);
        if norm > 0.0 {
            return Ok(x.scale_real(target / norm));
        }
    }
}

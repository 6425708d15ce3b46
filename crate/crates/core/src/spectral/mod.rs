//! Sampling and local optimization over `G_δ`: sup-norm lower bounds,
//! spectral-set checks, falsification of complete contractivity, and the
//! compression inequality for affine `δ`.

pub mod family;
pub mod sampler;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freepoly::PolyMatrix;
use crate::matrix::{block_assemble, op_norm, random_tuple_with, ComplexMatrix, MatrixTuple};
use crate::rng::{derive_seed, rng_for};

pub use family::{family_builder, words_up_to, FamilyKind};
pub use sampler::{GaussianRejection, PointSource, Sampler, SamplerRegistry, UnitaryOrbit};

use sampler::admissible;

/// Gap by which `lhs` must exceed `rhs` to count as a violation.
pub const VIOLATION_SLACK: f64 = 1e-10;

/// Shrink factors tried when a proposal leaves `G_δ`.
const SHRINKS: [f64; 3] = [0.5, 0.25, 0.125];
const REJECTS_BEFORE_DECAY: usize = 10;
const STEP_DECAY: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub levels: Vec<usize>,
    pub trials_per_level: usize,
    pub ascent_steps: usize,
    pub step_size: f64,
    pub margin: f64,
    pub seed: u64,
    /// Sampler names; trial `i` uses `samplers[i % len]`.
    pub samplers: Vec<String>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            levels: (1..=8).collect(),
            trials_per_level: 64,
            ascent_steps: 40,
            step_size: 0.1,
            margin: 1e-3,
            seed: 0,
            samplers: vec!["gaussian".into(), "unitary_orbit".into()],
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return Err(Error::InvalidParameter(format!("margin must lie in (0, 1), got {}", self.margin)));
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(Error::InvalidParameter("levels must be a nonempty list of positive sizes".into()));
        }
        if self.trials_per_level == 0 {
            return Err(Error::InvalidParameter("trials_per_level must be positive".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!("step_size must be positive, got {}", self.step_size)));
        }
        if self.samplers.is_empty() {
            return Err(Error::InvalidParameter("at least one sampler is required".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A stored point achieving a reported value.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub id: String,
    pub level: usize,
    pub sampler: String,
    pub seed: u64,
    pub value: f64,
    pub delta_norm: f64,
    pub converged: bool,
    pub x: MatrixTuple,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub trials: usize,
    pub admissible: usize,
    pub estimate: Option<f64>,
    pub witness_id: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Exceeds `K` times a supplied upper bound on the supremum.
    Definite,
    /// Exceeds `K` times the sampled lower bound only.
    Potential,
    /// `||P(x)|| > ||P(T)||` at a concrete pair.
    Witness,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub index: usize,
    pub poly: String,
    pub point: String,
    pub lhs: f64,
    pub rhs: f64,
    pub kind: ViolationKind,
}

/// Result of [`sup_norm_estimate`]. The estimate is a lower bound on
/// `sup ||P(x)||` over the sampled levels.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub estimate: Option<f64>,
    pub witness: Option<Witness>,
    pub admissible_samples: usize,
    pub trials: usize,
    pub levels: Vec<LevelSummary>,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

struct TrialOutcome {
    label: String,
    level: usize,
    sampler: String,
    seed: u64,
    admissible: usize,
    best: Option<(f64, f64, bool, MatrixTuple)>,
}

struct Ascent {
    x: MatrixTuple,
    value: f64,
    delta_norm: f64,
    admissible: usize,
    converged: bool,
}

/// Random-direction hill climb on `||P(x)||` that never leaves `G_δ`.
fn ascend(
    p: &PolyMatrix,
    delta: &PolyMatrix,
    cfg: &SampleConfig,
    x0: MatrixTuple,
    rng: &mut ChaCha8Rng,
) -> Result<Ascent> {
    let mut x = x0;
    let mut value = op_norm(&p.eval(&x)?);
    let mut delta_norm = op_norm(&delta.eval(&x)?);
    let mut admissible_count = 1;
    let mut eta = cfg.step_size;
    let mut rejects = 0;
    for _ in 0..cfg.ascent_steps {
        let dir = random_tuple_with(x.level(), x.d(), 1.0, rng);
        let mut accepted = false;
        for lambda in std::iter::once(1.0).chain(SHRINKS) {
            let cand = x.axpy(eta * lambda, &dir);
            let dn = op_norm(&delta.eval(&cand)?);
            if dn > 1.0 - cfg.margin {
                continue;
            }
            admissible_count += 1;
            let v = op_norm(&p.eval(&cand)?);
            if v > value {
                x = cand;
                value = v;
                delta_norm = dn;
                accepted = true;
            }
            break;
        }
        if accepted {
            rejects = 0;
        } else {
            rejects += 1;
            if rejects >= REJECTS_BEFORE_DECAY {
                eta *= STEP_DECAY;
                rejects = 0;
            }
        }
    }
    Ok(Ascent { x, value, delta_norm, admissible: admissible_count, converged: eta < cfg.step_size * 1e-2 })
}

fn prepare_sources(
    delta: &PolyMatrix,
    cfg: &SampleConfig,
    registry: &SamplerRegistry,
) -> Result<Vec<(String, Box<dyn PointSource>)>> {
    cfg.samplers
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let s: Arc<dyn Sampler> = registry.get(name)?;
            Ok((name.clone(), s.prepare(delta, cfg.margin, derive_seed(cfg.seed, &[u64::MAX, i as u64]))?))
        })
        .collect()
}

fn check_vars(p: &PolyMatrix, delta: &PolyMatrix) -> Result<()> {
    if p.d() != delta.d() {
        return Err(Error::VariableCount { left: p.d(), right: delta.d() });
    }
    Ok(())
}

pub fn sup_norm_estimate(p: &PolyMatrix, delta: &PolyMatrix, cfg: &SampleConfig) -> Result<SpectralReport> {
    sup_norm_estimate_with(p, delta, cfg, &SamplerRegistry::default(), &[])
}

/// Like [`sup_norm_estimate`], also climbing from each admissible point in
/// `candidates`.
pub fn sup_norm_estimate_with(
    p: &PolyMatrix,
    delta: &PolyMatrix,
    cfg: &SampleConfig,
    registry: &SamplerRegistry,
    candidates: &[MatrixTuple],
) -> Result<SpectralReport> {
    cfg.validate()?;
    check_vars(p, delta)?;
    let sources = prepare_sources(delta, cfg, registry)?;
    let jobs: Vec<(usize, usize)> =
        cfg.levels.iter().flat_map(|&n| (0..cfg.trials_per_level).map(move |t| (n, t))).collect();

    let mut outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let idx = trial % sources.len();
            let (name, source) = &sources[idx];
            let seed = derive_seed(cfg.seed, &[n as u64, trial as u64, idx as u64]);
            let mut rng = rng_for(seed, &[]);
            let mut out = TrialOutcome {
                label: format!("L{n}-T{trial}"),
                level: n,
                sampler: name.clone(),
                seed,
                admissible: 0,
                best: None,
            };
            if let Some(x0) = source.draw(n, &mut rng)? {
                let a = ascend(p, delta, cfg, x0, &mut rng)?;
                out.admissible = a.admissible;
                out.best = Some((a.value, a.delta_norm, a.converged, a.x));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let extra: Vec<TrialOutcome> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let seed = derive_seed(cfg.seed, &[u64::MAX - 1, i as u64]);
            let mut out = TrialOutcome {
                label: format!("candidate-{i}"),
                level: x.level(),
                sampler: "candidate".into(),
                seed,
                admissible: 0,
                best: None,
            };
            if x.d() == delta.d() && admissible(delta, x, cfg.margin)? {
                let a = ascend(p, delta, cfg, x.clone(), &mut rng_for(seed, &[]))?;
                out.admissible = a.admissible;
                out.best = Some((a.value, a.delta_norm, a.converged, a.x));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    outcomes.extend(extra);
    Ok(reduce(cfg, outcomes))
}

/// Deterministic max: first outcome in job order wins ties.
fn reduce(cfg: &SampleConfig, outcomes: Vec<TrialOutcome>) -> SpectralReport {
    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Some((v, ..)) = &o.best {
            if best.is_none_or(|b| *v > outcomes[b].best.as_ref().map(|t| t.0).unwrap_or(f64::NEG_INFINITY)) {
                best = Some(i);
            }
        }
    }
    let mut levels = Vec::new();
    for &n in &cfg.levels {
        let here: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.level == n && o.sampler != "candidate").collect();
        let mut lb: Option<&TrialOutcome> = None;
        for o in &here {
            if let Some((v, ..)) = &o.best {
                if lb.is_none_or(|b| *v > b.best.as_ref().unwrap().0) {
                    lb = Some(o);
                }
            }
        }
        levels.push(LevelSummary {
            level: n,
            trials: here.len(),
            admissible: here.iter().map(|o| o.admissible).sum(),
            estimate: lb.map(|o| o.best.as_ref().unwrap().0),
            witness_id: lb.map(|o| o.label.clone()),
        });
    }
    let admissible_samples = outcomes.iter().map(|o| o.admissible).sum();
    let trials = outcomes.len();
    let mut notes = vec![format!("lower bound over levels {:?}; larger levels are not sampled", cfg.levels)];
    let witness = best.map(|i| {
        let o = &outcomes[i];
        let (value, delta_norm, converged, x) = o.best.clone().unwrap();
        Witness {
            id: o.label.clone(),
            level: o.level,
            sampler: o.sampler.clone(),
            seed: o.seed,
            value,
            delta_norm,
            converged,
            x,
        }
    });
    if witness.is_none() {
        notes.push("possibly empty G_delta at these levels".into());
    }
    SpectralReport {
        estimate: witness.as_ref().map(|w| w.value),
        witness,
        admissible_samples,
        trials,
        levels,
        violations: Vec::new(),
        notes,
    }
}

/// Admissible starting points, one per trial that found one (no ascent).
pub fn admissible_points(delta: &PolyMatrix, cfg: &SampleConfig) -> Result<Vec<MatrixTuple>> {
    cfg.validate()?;
    let sources = prepare_sources(delta, cfg, &SamplerRegistry::default())?;
    let jobs: Vec<(usize, usize)> =
        cfg.levels.iter().flat_map(|&n| (0..cfg.trials_per_level).map(move |t| (n, t))).collect();
    let draws: Vec<Option<MatrixTuple>> = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let idx = trial % sources.len();
            let mut rng = rng_for(cfg.seed, &[n as u64, trial as u64, idx as u64]);
            sources[idx].1.draw(n, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(draws.into_iter().flatten().collect())
}

/// Short human-readable form of a polynomial matrix.
pub fn describe(p: &PolyMatrix) -> String {
    if p.shape() == (1, 1) {
        return p.entry(0, 0).to_string();
    }
    let rows: Vec<String> = (0..p.rows())
        .map(|i| {
            let cells: Vec<String> = (0..p.cols()).map(|j| p.entry(i, j).to_string()).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyEntry {
    pub index: usize,
    pub poly: String,
    pub lhs: f64,
    pub sup_estimate: Option<f64>,
    pub rhs: Option<f64>,
    pub admissible_samples: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KSpectralReport {
    pub k: f64,
    pub t_delta_norm: f64,
    pub t_admissible: bool,
    pub entries: Vec<FamilyEntry>,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl KSpectralReport {
    pub fn definite_violations(&self) -> usize {
        self.violations.iter().filter(|v| v.kind == ViolationKind::Definite).count()
    }
}

/// Compares `||P(T)||` with `K` times the sampled supremum over `G_δ` for
/// each `P` in `family`.
///
/// A violation is `Definite` only when `upper_evidence[i]` bounds the true
/// supremum from above, `||P(T)||` exceeds `K` times it, and the witness
/// ascent converged; otherwise it is `Potential`.
pub fn k_spectral_check(
    delta: &PolyMatrix,
    t: &MatrixTuple,
    k: f64,
    family: &[PolyMatrix],
    cfg: &SampleConfig,
    upper_evidence: Option<&[f64]>,
) -> Result<KSpectralReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("family must be nonempty".into()));
    }
    if k.is_nan() || k <= 0.0 {
        return Err(Error::InvalidParameter(format!("K must be positive, got {k}")));
    }
    if let Some(ue) = upper_evidence {
        if ue.len() != family.len() {
            return Err(Error::Shape(format!("{} upper bounds for {} polynomials", ue.len(), family.len())));
        }
    }
    let t_delta_norm = op_norm(&delta.eval(t)?);
    let t_admissible = t_delta_norm <= 1.0 - cfg.margin;
    let candidates = if t_admissible { vec![t.clone()] } else { Vec::new() };
    let registry = SamplerRegistry::default();
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    let mut notes = vec!["sup estimates are sampled lower bounds".to_string()];
    let mut any_empty = false;
    for (i, p) in family.iter().enumerate() {
        let lhs = op_norm(&p.eval(t)?);
        let rep = sup_norm_estimate_with(p, delta, cfg, &registry, &candidates)?;
        let converged = rep.witness.as_ref().is_some_and(|w| w.converged);
        let rhs = rep.estimate.map(|e| k * e);
        if let Some(rhs) = rhs {
            if lhs > rhs + VIOLATION_SLACK {
                let definite = converged
                    && upper_evidence.is_some_and(|ue| lhs > k * ue[i] + VIOLATION_SLACK);
                violations.push(Violation {
                    index: i,
                    poly: describe(p),
                    point: "T".into(),
                    lhs,
                    rhs,
                    kind: if definite { ViolationKind::Definite } else { ViolationKind::Potential },
                });
            }
        } else {
            any_empty = true;
        }
        entries.push(FamilyEntry {
            index: i,
            poly: describe(p),
            lhs,
            sup_estimate: rep.estimate,
            rhs,
            admissible_samples: rep.admissible_samples,
            converged,
        });
    }
    if any_empty {
        notes.push("possibly empty G_delta at these levels".into());
    }
    Ok(KSpectralReport { k, t_delta_norm, t_admissible, entries, violations, notes })
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaReport {
    pub witness: Option<Violation>,
    pub checked: usize,
    pub notes: Vec<String>,
}

/// Looks for `P` with `||P(x)|| > ||P(T)||`, which shows `x` is not in the
/// completely contractive spectrum of `T`.
pub fn sigma_cc_falsify(x: &MatrixTuple, t: &MatrixTuple, family: &[PolyMatrix]) -> Result<SigmaReport> {
    if x.d() != t.d() {
        return Err(Error::IncompatibleTuples { left: x.d(), right: t.d() });
    }
    for (i, p) in family.iter().enumerate() {
        let lhs = op_norm(&p.eval(x)?);
        let rhs = op_norm(&p.eval(t)?);
        if lhs > rhs + VIOLATION_SLACK {
            return Ok(SigmaReport {
                witness: Some(Violation { index: i, poly: describe(p), point: "x".into(), lhs, rhs, kind: ViolationKind::Witness }),
                checked: i + 1,
                notes: Vec::new(),
            });
        }
    }
    Ok(SigmaReport { witness: None, checked: family.len(), notes: vec!["no witness in family".into()] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressionMode {
    /// Refuse non-affine `δ`.
    Assert,
    /// Report both norms for any `δ`.
    Report,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompressionReport {
    pub level: usize,
    pub compressed_level: usize,
    pub affine: bool,
    pub norm_full: f64,
    pub norm_compressed: f64,
    /// `||δ(x_N)|| <= ||δ(S)|| + 1e-10`.
    pub inequality_holds: bool,
    pub notes: Vec<String>,
}

/// Compresses `S` to its leading `N x N` corner and compares `||δ||`.
pub fn compression_check(
    delta: &PolyMatrix,
    s: &MatrixTuple,
    n: usize,
    mode: CompressionMode,
) -> Result<CompressionReport> {
    if n == 0 || n > s.level() {
        return Err(Error::InvalidParameter(format!("N must lie in 1..={}, got {n}", s.level())));
    }
    let affine = delta.is_affine();
    if !affine && mode == CompressionMode::Assert {
        return Err(Error::Hypothesis(
            "compression inequality needs every entry of delta to be a scalar plus a linear form".into(),
        ));
    }
    let norm_full = op_norm(&delta.eval(s)?);
    let norm_compressed = op_norm(&delta.eval(&s.compress(n)?)?);
    let inequality_holds = norm_compressed <= norm_full + VIOLATION_SLACK;
    let mut notes = Vec::new();
    if !affine {
        notes.push("delta is not affine: the inequality is reported, not guaranteed".into());
    }
    Ok(CompressionReport { level: s.level(), compressed_level: n, affine, norm_full, norm_compressed, inequality_holds, notes })
}

/// Norm of an assembled block matrix next to its largest block norm.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlockNorms {
    pub assembled: f64,
    pub max_entry: f64,
}

pub fn block_norms(grid: &[Vec<ComplexMatrix>]) -> Result<BlockNorms> {
    let assembled = op_norm(&block_assemble(grid)?);
    let max_entry = grid.iter().flatten().map(op_norm).fold(0.0, f64::max);
    Ok(BlockNorms { assembled, max_entry })
}

/// Cyclic shift `U e_k = e_{k+1 mod n}`.
pub fn cyclic_shift(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { crate::matrix::ONE } else { crate::matrix::ZERO })
}

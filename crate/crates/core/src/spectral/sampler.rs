//! Strategies that draw points of `G_δ = {x : ||δ(x)|| <= 1 - margin}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::freepoly::PolyMatrix;
use crate::matrix::{random_tuple_with, random_unitary, ComplexMatrix, MatrixTuple, C64};
use crate::rng::rng_for;

/// Target norms swept by rejection sampling.
pub const NORM_GRID: [f64; 12] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2];

/// A sampling strategy. [`Sampler::prepare`] runs once per estimate and may
/// precompute state shared by all trials.
pub trait Sampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn prepare(&self, delta: &PolyMatrix, margin: f64, seed: u64) -> Result<Box<dyn PointSource>>;
}

pub trait PointSource: Send + Sync {
    /// One admissible point at level `n`, or `None` if none was found.
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Option<MatrixTuple>>;
}

pub(crate) fn admissible(delta: &PolyMatrix, x: &MatrixTuple, margin: f64) -> Result<bool> {
    Ok(delta.membership(x, margin)?.inside)
}

/// Gaussian tuples at norms drawn from [`NORM_GRID`], kept if admissible.
pub struct GaussianRejection {
    pub attempts: usize,
}

impl Default for GaussianRejection {
    fn default() -> Self {
        Self { attempts: 64 }
    }
}

struct GaussianSource {
    delta: PolyMatrix,
    margin: f64,
    attempts: usize,
}

impl Sampler for GaussianRejection {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn prepare(&self, delta: &PolyMatrix, margin: f64, _seed: u64) -> Result<Box<dyn PointSource>> {
        Ok(Box::new(GaussianSource { delta: delta.clone(), margin, attempts: self.attempts }))
    }
}

impl PointSource for GaussianSource {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Option<MatrixTuple>> {
        for _ in 0..self.attempts {
            let target = NORM_GRID[rng.random_range(0..NORM_GRID.len())];
            let x = random_tuple_with(n, self.delta.d(), target, rng);
            if admissible(&self.delta, &x, self.margin)? {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }
}

/// Direct sums of admissible scalar points, rotated by a random unitary and
/// pushed off the commuting locus by a short admissible random walk.
///
/// Unitary conjugation preserves `||δ(x)||`, so every draw starts inside
/// `G_δ`. Works for domains whose admissible set is too thin for Gaussian
/// rejection at higher levels.
pub struct UnitaryOrbit {
    pub scalar_attempts: usize,
    pub pool_cap: usize,
    pub walk_steps: usize,
    pub walk_step: f64,
}

impl Default for UnitaryOrbit {
    fn default() -> Self {
        Self { scalar_attempts: 60_000, pool_cap: 4_000, walk_steps: 8, walk_step: 0.05 }
    }
}

struct OrbitSource {
    delta: PolyMatrix,
    margin: f64,
    pool: Vec<Vec<C64>>,
    walk_steps: usize,
    walk_step: f64,
}

/// Scalar radii tried when filling the level-1 pool.
const SCALAR_RADII: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];

impl Sampler for UnitaryOrbit {
    fn name(&self) -> &'static str {
        "unitary_orbit"
    }

    fn prepare(&self, delta: &PolyMatrix, margin: f64, seed: u64) -> Result<Box<dyn PointSource>> {
        let mut rng = rng_for(seed, &[u64::MAX]);
        let d = delta.d();
        let mut pool = Vec::new();
        for attempt in 0..self.scalar_attempts {
            if pool.len() >= self.pool_cap {
                break;
            }
            let radius = SCALAR_RADII[attempt % SCALAR_RADII.len()];
            let point: Vec<C64> = (0..d)
                .map(|_| {
                    let r = radius * rng.random::<f64>().sqrt();
                    C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
                })
                .collect();
            if admissible(delta, &MatrixTuple::scalars(&point)?, margin)? {
                pool.push(point);
            }
        }
        Ok(Box::new(OrbitSource {
            delta: delta.clone(),
            margin,
            pool,
            walk_steps: self.walk_steps,
            walk_step: self.walk_step,
        }))
    }
}

impl PointSource for OrbitSource {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Option<MatrixTuple>> {
        if self.pool.is_empty() {
            return Ok(None);
        }
        let d = self.delta.d();
        let picks: Vec<&Vec<C64>> = (0..n).map(|_| &self.pool[rng.random_range(0..self.pool.len())]).collect();
        let u = random_unitary(n, rng);
        let ua = u.adjoint();
        let coords = (0..d)
            .map(|j| {
                let diag = ComplexMatrix::diagonal(&picks.iter().map(|p| p[j]).collect::<Vec<_>>());
                &(&u * &diag) * &ua
            })
            .collect();
        let mut x = MatrixTuple::new(coords)?;
        let scale = x.max_coord_norm().max(0.1);
        for _ in 0..self.walk_steps {
            let dir = random_tuple_with(n, d, 1.0, rng);
            let candidate = x.axpy(self.walk_step * scale, &dir);
            if admissible(&self.delta, &candidate, self.margin)? {
                x = candidate;
            }
        }
        Ok(Some(x))
    }
}

/// Samplers selectable by name.
#[derive(Clone)]
pub struct SamplerRegistry {
    entries: BTreeMap<String, Arc<dyn Sampler>>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, sampler: Arc<dyn Sampler>) {
        self.entries.insert(sampler.name().to_string(), sampler);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Sampler>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "sampler",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(GaussianRejection::default()));
        r.register(Arc::new(UnitaryOrbit::default()));
        r
    }
}

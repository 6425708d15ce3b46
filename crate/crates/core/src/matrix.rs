//! Dense complex matrices and matrix tuples.
//!
//! [`ComplexMatrix`] is a thin newtype over an `nalgebra` dense matrix that
//! enforces finiteness on construction and carries the handful of operations
//! the calculus needs: operator norms, Kronecker ampliation, block assembly,
//! direct sums and similarity.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Complex scalar: a pair of `f64`.
pub type C64 = Complex<f64>;

/// Above this dimension [`op_norm`] switches from a full SVD to power iteration.
pub const SVD_DIM_LIMIT: usize = 512;

/// Relative threshold on the smallest singular value below which a matrix is
/// treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "crate::io::MatrixWire", try_from = "crate::io::MatrixWire")]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix({}x{})", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 36 {
            write!(f, " {:?}", self.to_row_major())?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// `c * I_n`.
    pub fn scalar(n: usize, c: C64) -> Self {
        Self(DMatrix::identity(n, n) * c)
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} entries for a {rows}x{cols} matrix, found {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self(DMatrix::from_row_iterator(rows, cols, data)))
    }

    /// Real-valued convenience constructor, row-major.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|row| row.iter().map(|&v| C64::new(v, 0.0))).collect();
        Self::from_row_major(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
    }

    /// Wraps an `nalgebra` matrix. The caller is responsible for finiteness.
    pub fn from_dmatrix(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let (r, c) = self.shape();
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|ij| self.0[ij]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True when every entry is exactly zero.
    pub fn is_exact_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Induced 2-norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        op_norm(self)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows() == 0 || self.cols() == 0 {
            return Vec::new();
        }
        let mut s: Vec<f64> = self.0.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Copy of the sub-block starting at `(r0, c0)` with the given shape.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self(self.0.view((r0, c0), (rows, cols)).into_owned())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &ComplexMatrix) {
        self.0.view_mut((r0, c0), b.shape()).copy_from(&b.0);
    }

    /// Leading principal `k x k` compression.
    pub fn leading(&self, k: usize) -> Self {
        self.block(0, 0, k, k)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Inverse with a singularity check against [`SINGULAR_RTOL`].
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Shape(format!("cannot invert a {}x{} matrix", self.rows(), self.cols())));
        }
        if self.rows() == 0 {
            return Ok(self.clone());
        }
        let sv = self.singular_values();
        let (smax, smin) = (sv[0], *sv.last().unwrap());
        if smin < SINGULAR_RTOL * smax || smax == 0.0 {
            return Err(Error::Singular { smin, smax });
        }
        self.0
            .clone()
            .try_inverse()
            .map(Self)
            .ok_or(Error::Singular { smin, smax })
    }

    /// 2-norm condition number; infinite for singular or empty matrices.
    pub fn condition_number(&self) -> f64 {
        let sv = self.singular_values();
        match (sv.first(), sv.last()) {
            (Some(&a), Some(&b)) if b > 0.0 => a / b,
            _ => f64::INFINITY,
        }
    }

    /// Solves `self * X = rhs` by LU.
    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<Self> {
        self.0
            .clone()
            .lu()
            .solve(&rhs.0)
            .map(Self)
            .ok_or(Error::Singular { smin: 0.0, smax: self.op_norm() })
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::identity(self.rows());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        result
    }

    /// Spectral radius of a square matrix.
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(self)
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Which algorithm computes the operator norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    Svd,
    PowerIteration,
}

/// Largest singular value, choosing the algorithm by size.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    let method = if m.rows().max(m.cols()) <= SVD_DIM_LIMIT {
        NormMethod::Svd
    } else {
        NormMethod::PowerIteration
    };
    op_norm_with(m, method)
}

pub fn op_norm_with(m: &ComplexMatrix, method: NormMethod) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    match method {
        NormMethod::Svd => m.0.clone().svd(false, false).singular_values.max(),
        NormMethod::PowerIteration => power_norm(m),
    }
}

/// Power iteration on `M*M` with a Rayleigh-quotient stopping rule.
fn power_norm(m: &ComplexMatrix) -> f64 {
    const RTOL: f64 = 1e-13;
    const MAX_ITERS: usize = 10_000;
    let n = m.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f5e);
    let mut v = DVector::from_fn(n, |_, _| complex_gaussian(&mut rng));
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = 0.0_f64;
    for _ in 0..MAX_ITERS {
        let mv = &m.0 * &v;
        let w = m.0.ad_mul(&mv);
        let next = mv.norm_squared();
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / C64::new(wn, 0.0);
        if lambda > 0.0 && ((next - lambda).abs() / next) < RTOL {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

fn spectral_radius(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 {
        return 0.0;
    }
    if let Some(schur) = nalgebra::linalg::Schur::try_new(m.0.clone(), 1e-14, 10_000) {
        if let Some(ev) = schur.eigenvalues() {
            return ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
    }
    // Gelfand bound rho <= ||M^k||^(1/k); reached only if Schur fails.
    let k = 64;
    op_norm(&m.pow(k)).powf(1.0 / k as f64)
}

/// `I_n ⊗ A`.
pub fn ampliate(n: usize, a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::identity(n).kron(a)
}

/// Concatenates an `I x J` grid of blocks into one matrix.
pub fn block_assemble(blocks: &[Vec<ComplexMatrix>]) -> Result<ComplexMatrix> {
    let nrows_grid = blocks.len();
    if nrows_grid == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let ncols_grid = blocks[0].len();
    if blocks.iter().any(|row| row.len() != ncols_grid) {
        return Err(Error::Shape("ragged block grid: rows have different block counts".into()));
    }
    let heights: Vec<usize> = blocks.iter().map(|row| row.first().map_or(0, |b| b.rows())).collect();
    let widths: Vec<usize> = (0..ncols_grid).map(|j| blocks[0][j].cols()).collect();
    for (i, row) in blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            if b.rows() != heights[i] || b.cols() != widths[j] {
                return Err(Error::Shape(format!(
                    "block ({i}, {j}) is {}x{}, expected {}x{}",
                    b.rows(),
                    b.cols(),
                    heights[i],
                    widths[j]
                )));
            }
        }
    }
    let mut out = ComplexMatrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (i, row) in blocks.iter().enumerate() {
        let mut c0 = 0;
        for (j, b) in row.iter().enumerate() {
            out.set_block(r0, c0, b);
            c0 += widths[j];
        }
        r0 += heights[i];
    }
    Ok(out)
}

/// Block-diagonal direct sum of two matrices.
pub fn direct_sum_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() + b.rows(), a.cols() + b.cols());
    out.set_block(0, 0, a);
    out.set_block(a.rows(), a.cols(), b);
    out
}

/// Reorders a matrix laid out as an `outer_r x outer_c` grid of `n_r x n_c`
/// blocks into the interleaved layout `M[(a, p), (b, q)] = old[(p, a), (q, b)]`,
/// i.e. converts between `K ⊗ C^n` and `C^n ⊗ K` index orders.
pub fn commute_layout(m: &ComplexMatrix, outer_r: usize, outer_c: usize, n_r: usize, n_c: usize) -> ComplexMatrix {
    assert_eq!(m.rows(), outer_r * n_r);
    assert_eq!(m.cols(), outer_c * n_c);
    ComplexMatrix::from_fn(m.rows(), m.cols(), |r, c| {
        let (a, p) = (r / outer_r, r % outer_r);
        let (b, q) = (c / outer_c, c % outer_c);
        m.get(p * n_r + a, q * n_c + b)
    })
}

/// A point `x = (x^1, ..., x^d)` of `M_n^d`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "crate::io::TupleWire", try_from = "crate::io::TupleWire")]
pub struct MatrixTuple {
    n: usize,
    coords: Vec<ComplexMatrix>,
}

impl MatrixTuple {
    pub fn new(coords: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = coords.first() else {
            return Err(Error::Shape("a matrix tuple needs at least one coordinate".into()));
        };
        let n = first.rows();
        if n == 0 {
            return Err(Error::Shape("tuple level must be positive".into()));
        }
        for (j, c) in coords.iter().enumerate() {
            if c.rows() != n || c.cols() != n {
                return Err(Error::Shape(format!(
                    "coordinate {} is {}x{}, expected {n}x{n}",
                    j + 1,
                    c.rows(),
                    c.cols()
                )));
            }
        }
        Ok(Self { n, coords })
    }

    /// Scalar tuple at level 1.
    pub fn scalars(values: &[C64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| ComplexMatrix::scalar(1, v)).collect())
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, coords: vec![ComplexMatrix::zeros(n, n); d] }
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[ComplexMatrix] {
        &self.coords
    }

    pub fn coord(&self, j: usize) -> &ComplexMatrix {
        &self.coords[j]
    }

    pub fn into_coords(self) -> Vec<ComplexMatrix> {
        self.coords
    }

    /// `max_j ||x^j||`.
    pub fn max_coord_norm(&self) -> f64 {
        self.coords.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// Applies `f` to every coordinate; `f` must return square matrices of
    /// a common size.
    pub fn map(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let coords: Vec<ComplexMatrix> = self.coords.iter().map(f).collect();
        Self { n: coords[0].rows(), coords }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|m| m.scale(c))
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `self + t * dir`, coordinatewise.
    pub fn axpy(&self, t: f64, dir: &MatrixTuple) -> Self {
        let coords = self.coords.iter().zip(&dir.coords).map(|(a, b)| a + &b.scale_real(t)).collect();
        Self { n: self.n, coords }
    }

    /// Leading principal compression of each coordinate.
    pub fn compress(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return Err(Error::Shape(format!("cannot compress level {} tuple to {k}", self.n)));
        }
        Ok(self.map(|m| m.leading(k)))
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(ComplexMatrix::is_finite)
    }
}

/// Coordinatewise block-diagonal direct sum `x ⊕ y`.
pub fn direct_sum(x: &MatrixTuple, y: &MatrixTuple) -> Result<MatrixTuple> {
    if x.d() != y.d() {
        return Err(Error::IncompatibleTuples { left: x.d(), right: y.d() });
    }
    MatrixTuple::new(x.coords.iter().zip(&y.coords).map(|(a, b)| direct_sum_matrix(a, b)).collect())
}

/// A checked invertible change of basis `x ↦ s⁻¹ x s`.
#[derive(Clone, Debug)]
pub struct Similarity {
    s: ComplexMatrix,
    s_inv: ComplexMatrix,
    condition: f64,
}

impl Similarity {
    pub fn new(s: ComplexMatrix) -> Result<Self> {
        let s_inv = s.inverse()?;
        let condition = s.condition_number();
        Ok(Self { s, s_inv, condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.s
    }

    pub fn inverse_matrix(&self) -> &ComplexMatrix {
        &self.s_inv
    }

    /// `s⁻¹ m s`.
    pub fn conjugate(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &(&self.s_inv * m) * &self.s
    }

    /// `(id_K2 ⊗ s⁻¹) m (id_K1 ⊗ s)` for `m` laid out as a `k2 x k1` grid of
    /// `n x n` blocks.
    pub fn conjugate_blocks(&self, m: &ComplexMatrix, k2: usize, k1: usize) -> ComplexMatrix {
        let left = ComplexMatrix::identity(k2).kron(&self.s_inv);
        let right = ComplexMatrix::identity(k1).kron(&self.s);
        &(&left * m) * &right
    }

    pub fn apply(&self, x: &MatrixTuple) -> Result<MatrixTuple> {
        if x.level() != self.s.rows() {
            return Err(Error::Shape(format!(
                "similarity of size {} applied to a level {} tuple",
                self.s.rows(),
                x.level()
            )));
        }
        Ok(x.map(|m| self.conjugate(m)))
    }
}

/// Coordinatewise `s⁻¹ x^j s`.
pub fn similarity(s: &ComplexMatrix, x: &MatrixTuple) -> Result<MatrixTuple> {
    Similarity::new(s.clone())?.apply(x)
}

/// Standard complex Gaussian, `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Gaussian tuple rescaled so that `max_j ||x^j|| = target_norm`.
pub fn random_tuple_with<R: Rng + ?Sized>(n: usize, d: usize, target_norm: f64, rng: &mut R) -> MatrixTuple {
    let coords: Vec<ComplexMatrix> = (0..d).map(|_| random_gaussian_matrix(n, n, rng)).collect();
    let t = MatrixTuple { n, coords };
    let current = t.max_coord_norm();
    if current == 0.0 {
        return t;
    }
    t.scale_real(target_norm / current)
}

/// Deterministic random tuple for a fixed seed.
pub fn random_tuple(n: usize, d: usize, target_norm: f64, seed: u64) -> Result<MatrixTuple> {
    if target_norm <= 0.0 || !target_norm.is_finite() {
        return Err(Error::InvalidParameter(format!("target_norm must be positive, got {target_norm}")));
    }
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("level and d must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_tuple_with(n, d, target_norm, &mut rng))
}

/// Haar-ish random unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_gaussian_matrix(n, n, rng);
    let qr = g.0.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / C64::new(norm, 0.0);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    ComplexMatrix(q)
}

/// Random invertible `n x n` matrix `U diag(σ) V` with singular values in
/// `[1, max_condition]`.
pub fn random_similarity<R: Rng + ?Sized>(n: usize, max_condition: f64, rng: &mut R) -> Result<Similarity> {
    if !(max_condition >= 1.0 && max_condition.is_finite()) {
        return Err(Error::InvalidParameter(format!("condition bound must be >= 1, got {max_condition}")));
    }
    let u = random_unitary(n, rng);
    let v = random_unitary(n, rng);
    let sigma: Vec<C64> = (0..n).map(|_| C64::new(max_condition.powf(rng.random::<f64>()), 0.0)).collect();
    Similarity::new(&(&u * &ComplexMatrix::diagonal(&sigma)) * &v)
}

/// `rows x cols` matrix with orthonormal columns (`rows >= cols`).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if rows < cols {
        return Err(Error::Shape(format!("no isometry from C^{cols} into C^{rows}")));
    }
    if cols == 0 {
        return Ok(ComplexMatrix::zeros(rows, 0));
    }
    let g = random_gaussian_matrix(rows, cols, rng);
    Ok(ComplexMatrix(g.0.qr().q()))
}

/// Relative distance `||a - b|| / max(1, ||b||)`.
pub fn rel_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    op_norm(&(a - b)) / op_norm(b).max(1.0)
}

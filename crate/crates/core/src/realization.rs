//! Transfer-function realizations of nc functions on the coordinate ball.
//!
//! A [`Colligation`] `V = [A B; C D] : K1 ⊕ M^I → K2 ⊕ M^J` encodes
//!
//! ```text
//! F(Y) = A + B·Y_M·(I - D·Y_M)⁻¹·C
//! ```
//!
//! where `Y` is an `I x J` operator matrix (given as an `nI x nJ` block
//! matrix, block `(i, j)` acting on `C^n`) and `Y_M = Σ E_ij ⊗ id_M ⊗ Y_ij`.
//! All ampliated quantities use the operator-matrix layout: the finite
//! dimensional index is outer and the `C^n` index is inner, so `id ⊗ A` is
//! the Kronecker product `A ⊗ I_n` in memory. Values returned by
//! [`Colligation::eval`] are `k2 x k1` grids of `n x n` blocks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::freepoly::{FreePoly, PolyMatrix};
use crate::matrix::{op_norm, random_isometry, ComplexMatrix, C64, ONE, ZERO};

/// Tolerance used when certifying a colligation as an isometry.
pub const ISOMETRY_TOL: f64 = 1e-8;

/// Resolvent norm above which evaluation is reported as divergent.
pub const RESOLVENT_LIMIT: f64 = 1e12;

/// Margin required on the spectral radius of `D·Y_M`.
pub const RADIUS_MARGIN: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "crate::io::ColligationWire", try_from = "crate::io::ColligationWire")]
pub struct Colligation {
    k1: usize,
    k2: usize,
    i_dim: usize,
    j_dim: usize,
    m: usize,
    a: ComplexMatrix,
    b: ComplexMatrix,
    c: ComplexMatrix,
    d: ComplexMatrix,
    isometric_certified: bool,
}

/// Outcome of [`Colligation::is_isometry`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryCheck {
    pub isometric: bool,
    pub defect: f64,
}

/// How two colligations are combined.
#[derive(Clone, Copy, Debug)]
pub enum Combine {
    Sum,
    /// Pointwise product `F(Y)·G(Y)`.
    Product,
    Scale(C64),
}

/// A homogeneous term recovered by sampling on a circle.
#[derive(Clone, Debug)]
pub struct DftExtraction {
    pub value: ComplexMatrix,
    /// Bound on the aliased tail, `t^(N-k) / (1 - t)`.
    pub alias_bound: f64,
    pub samples: usize,
}

/// The blocks of a colligation ampliated to level `n` at a fixed point.
#[derive(Clone, Debug)]
pub(crate) struct Ampliated {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
    pub y_m: ComplexMatrix,
}

impl Colligation {
    /// Validates block shapes; the result is not marked isometric.
    pub fn new(
        a: ComplexMatrix,
        b: ComplexMatrix,
        c: ComplexMatrix,
        d: ComplexMatrix,
        i_dim: usize,
        j_dim: usize,
        m: usize,
    ) -> Result<Self> {
        if i_dim == 0 || j_dim == 0 {
            return Err(Error::Shape("I and J must be positive".into()));
        }
        let (k2, k1) = a.shape();
        let expect = [
            ("B", &b, (k2, i_dim * m)),
            ("C", &c, (j_dim * m, k1)),
            ("D", &d, (j_dim * m, i_dim * m)),
        ];
        for (name, blk, (r, cc)) in expect {
            if blk.shape() != (r, cc) {
                return Err(Error::Shape(format!(
                    "block {name} is {}x{}, expected {r}x{cc}",
                    blk.rows(),
                    blk.cols()
                )));
            }
        }
        Ok(Self { k1, k2, i_dim, j_dim, m, a, b, c, d, isometric_certified: false })
    }

    /// Runs the isometry check and records the outcome in the flag.
    pub fn certify(mut self) -> Self {
        self.isometric_certified = self.is_isometry(ISOMETRY_TOL).isometric;
        self
    }

    /// Constant function `A` (no auxiliary space).
    pub fn constant(a: ComplexMatrix, i_dim: usize, j_dim: usize) -> Result<Self> {
        let (k2, k1) = a.shape();
        Self::new(
            a,
            ComplexMatrix::zeros(k2, 0),
            ComplexMatrix::zeros(0, k1),
            ComplexMatrix::zeros(0, 0),
            i_dim,
            j_dim,
            0,
        )
    }

    /// Scalar function `Y ↦ Y_ij` (0-based), realized with `m = 1`.
    pub fn coordinate(i_dim: usize, j_dim: usize, i: usize, j: usize) -> Result<Self> {
        if i >= i_dim || j >= j_dim {
            return Err(Error::InvalidParameter(format!("entry ({i}, {j}) outside {i_dim}x{j_dim}")));
        }
        let mut b = ComplexMatrix::zeros(1, i_dim);
        b.set(0, i, ONE);
        let mut c = ComplexMatrix::zeros(j_dim, 1);
        c.set(j, 0, ONE);
        Ok(Self::new(ComplexMatrix::zeros(1, 1), b, c, ComplexMatrix::zeros(j_dim, i_dim), i_dim, j_dim, 1)?.certify())
    }

    /// Random isometric colligation from an orthonormalized Gaussian block.
    /// Needs `k2 + J·m >= k1 + I·m`.
    pub fn random_isometric<R: Rng + ?Sized>(
        k1: usize,
        k2: usize,
        i_dim: usize,
        j_dim: usize,
        m: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let rows = k2 + j_dim * m;
        let cols = k1 + i_dim * m;
        let v = random_isometry(rows, cols, rng)?;
        let f = Self::new(
            v.block(0, 0, k2, k1),
            v.block(0, k1, k2, i_dim * m),
            v.block(k2, 0, j_dim * m, k1),
            v.block(k2, k1, j_dim * m, i_dim * m),
            i_dim,
            j_dim,
            m,
        )?
        .certify();
        debug_assert!(f.isometric_certified);
        Ok(f)
    }

    pub fn k1(&self) -> usize {
        self.k1
    }
    pub fn k2(&self) -> usize {
        self.k2
    }
    pub fn i_dim(&self) -> usize {
        self.i_dim
    }
    pub fn j_dim(&self) -> usize {
        self.j_dim
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }
    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }
    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }
    pub fn d(&self) -> &ComplexMatrix {
        &self.d
    }
    pub fn isometric_certified(&self) -> bool {
        self.isometric_certified
    }

    /// Number of variables of the coordinate ball, `I·J`.
    pub fn num_vars(&self) -> usize {
        self.i_dim * self.j_dim
    }

    /// The assembled block operator `V`.
    pub fn v_matrix(&self) -> ComplexMatrix {
        let rows = self.k2 + self.j_dim * self.m;
        let cols = self.k1 + self.i_dim * self.m;
        let mut v = ComplexMatrix::zeros(rows, cols);
        v.set_block(0, 0, &self.a);
        v.set_block(0, self.k1, &self.b);
        v.set_block(self.k2, 0, &self.c);
        v.set_block(self.k2, self.k1, &self.d);
        v
    }

    /// `||V*V - I|| <= tol`.
    pub fn is_isometry(&self, tol: f64) -> IsometryCheck {
        let v = self.v_matrix();
        let gram = &v.adjoint() * &v;
        let defect = op_norm(&(&gram - &ComplexMatrix::identity(v.cols())));
        IsometryCheck { isometric: defect <= tol, defect }
    }

    /// Level `n` of an `nI x nJ` input, or a shape error.
    pub fn level_of(&self, y: &ComplexMatrix) -> Result<usize> {
        let (r, c) = y.shape();
        if r == 0 || r % self.i_dim != 0 || c % self.j_dim != 0 || r / self.i_dim != c / self.j_dim {
            return Err(Error::Shape(format!(
                "input is {r}x{c}, expected (n*{})x(n*{}) for some n >= 1",
                self.i_dim, self.j_dim
            )));
        }
        Ok(r / self.i_dim)
    }

    /// `Σ E_ij ⊗ id_M ⊗ Y_ij` in operator-matrix layout.
    pub fn aux_ampliate(&self, y: &ComplexMatrix, n: usize) -> ComplexMatrix {
        let m = self.m;
        let mut out = ComplexMatrix::zeros(self.i_dim * m * n, self.j_dim * m * n);
        for i in 0..self.i_dim {
            for j in 0..self.j_dim {
                let blk = y.block(i * n, j * n, n, n);
                for mu in 0..m {
                    out.set_block((i * m + mu) * n, (j * m + mu) * n, &blk);
                }
            }
        }
        out
    }

    pub(crate) fn ampliated(&self, y: &ComplexMatrix) -> Result<(usize, Ampliated)> {
        let n = self.level_of(y)?;
        let id = ComplexMatrix::identity(n);
        Ok((
            n,
            Ampliated {
                a: self.a.kron(&id),
                b: self.b.kron(&id),
                c: self.c.kron(&id),
                d: self.d.kron(&id),
                y_m: self.aux_ampliate(y, n),
            },
        ))
    }

    /// Closed-form evaluation `A + B·Y_M·(I - D·Y_M)⁻¹·C`.
    pub fn eval(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (_, amp) = self.ampliated(y)?;
        if self.m == 0 {
            return Ok(amp.a);
        }
        let k = &amp.d * &amp.y_m;
        let skip_radius = self.isometric_certified && op_norm(y) < 1.0;
        if !skip_radius {
            let rho = k.spectral_radius();
            if rho >= 1.0 - RADIUS_MARGIN {
                return Err(Error::OutsideDomain(format!("spectral radius of D*Y_M is {rho}")));
            }
        }
        let resolvent_arg = &ComplexMatrix::identity(k.rows()) - &k;
        let resolvent = resolvent_arg
            .inverse()
            .map_err(|e| Error::OutsideDomain(format!("resolvent not invertible: {e}")))?;
        let rnorm = op_norm(&resolvent);
        if rnorm > RESOLVENT_LIMIT {
            return Err(Error::OutsideDomain(format!("resolvent norm {rnorm:e} exceeds {RESOLVENT_LIMIT:e}")));
        }
        let tail = &(&(&amp.b * &amp.y_m) * &resolvent) * &amp.c;
        Ok(&amp.a + &tail)
    }

    /// Degree-`k` term `B·Y_M·(D·Y_M)^(k-1)·C`; `k = 0` gives `A`.
    pub fn homog_term(&self, k: usize, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut series = HomogSeries::new(self, y)?;
        let mut term = series.next_term();
        for _ in 0..k {
            term = series.next_term();
        }
        Ok(term)
    }

    /// Recovers `P_k(Y)` as `(1/N) Σ_j e^{-2πijk/N} F(e^{2πij/N} Y)`.
    ///
    /// Requires `t = ||Y|| < 1` and `N >= k + ceil(ln(tol(1-t)) / ln t)` so
    /// that the aliased tail is below `tol`.
    pub fn homog_extract_dft(&self, y: &ComplexMatrix, k: usize, samples: usize, tol: f64) -> Result<DftExtraction> {
        if samples <= k {
            return Err(Error::Aliasing(format!("need more than k = {k} samples, got {samples}")));
        }
        let t = op_norm(y);
        if t >= 1.0 {
            return Err(Error::Aliasing(format!("||Y|| = {t} is not below 1")));
        }
        let alias_bound = if t == 0.0 { 0.0 } else { t.powi((samples - k) as i32) / (1.0 - t) };
        if t > 0.0 {
            let need = k as f64 + ((tol * (1.0 - t)).ln() / t.ln()).ceil();
            if (samples as f64) < need {
                return Err(Error::Aliasing(format!(
                    "{samples} samples leave aliasing {alias_bound:e} above tol {tol:e}; need at least {need}"
                )));
            }
        }
        let mut acc: Option<ComplexMatrix> = None;
        for j in 0..samples {
            let theta = std::f64::consts::TAU * j as f64 / samples as f64;
            let z = C64::from_polar(1.0, theta);
            let val = self.eval(&y.scale(z))?.scale(C64::from_polar(1.0 / samples as f64, -theta * k as f64));
            acc = Some(match acc {
                None => val,
                Some(a) => &a + &val,
            });
        }
        Ok(DftExtraction { value: acc.expect("samples > 0"), alias_bound, samples })
    }

    /// `V` with the auxiliary space rotated by a unitary `u` (`m x m`).
    /// Evaluation is unchanged.
    pub fn change_aux_basis(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.shape() != (self.m, self.m) {
            return Err(Error::Shape(format!("basis change must be {0}x{0}", self.m)));
        }
        let ui = ComplexMatrix::identity(self.i_dim).kron(u);
        let uj = ComplexMatrix::identity(self.j_dim).kron(u);
        let out = Self {
            b: &self.b * &ui.adjoint(),
            c: &uj * &self.c,
            d: &(&uj * &self.d) * &ui.adjoint(),
            ..self.clone()
        };
        Ok(if self.isometric_certified { out.certify() } else { out })
    }

    /// Symbolic `P_k` as a polynomial matrix in the `I·J` coordinates.
    /// Offered only when `D·E_M` is nilpotent, i.e. the colligation
    /// realizes a polynomial.
    pub fn symbolic_homog_term(&self, k: usize) -> Result<PolyMatrix> {
        let d = self.num_vars();
        if k == 0 {
            return constant_poly_matrix(&self.a, d);
        }
        if self.m == 0 {
            return constant_poly_matrix(&ComplexMatrix::zeros(self.k2, self.k1), d);
        }
        if !self.is_polynomial()? {
            return Err(Error::InvalidParameter(
                "symbolic homogeneous terms need a polynomial colligation (nilpotent D)".into(),
            ));
        }
        let e_m = self.symbolic_e_m()?;
        let dmat = constant_poly_matrix(&self.d, d)?;
        let mut acc = constant_poly_matrix(&self.b, d)?.try_mul(&e_m)?;
        for _ in 1..k {
            acc = acc.try_mul(&dmat)?.try_mul(&e_m)?;
        }
        acc.try_mul(&constant_poly_matrix(&self.c, d)?)
    }

    /// True when `(D·E_M)^q` vanishes symbolically for some `q <= J·m + 1`.
    pub fn is_polynomial(&self) -> Result<bool> {
        if self.m == 0 {
            return Ok(true);
        }
        let d = self.num_vars();
        let de = constant_poly_matrix(&self.d, d)?.try_mul(&self.symbolic_e_m()?)?;
        let mut pow = de.clone();
        for _ in 0..=(self.j_dim * self.m) {
            if pow.entries().iter().all(FreePoly::is_zero) {
                return Ok(true);
            }
            pow = pow.try_mul(&de)?;
        }
        Ok(false)
    }

    fn symbolic_e_m(&self) -> Result<PolyMatrix> {
        let d = self.num_vars();
        let (m, rows, cols) = (self.m, self.i_dim * self.m, self.j_dim * self.m);
        let mut entries = vec![FreePoly::zero(d); rows * cols];
        for i in 0..self.i_dim {
            for j in 0..self.j_dim {
                for mu in 0..m {
                    entries[(i * m + mu) * cols + j * m + mu] = FreePoly::coordinate(d, i * self.j_dim + j)?;
                }
            }
        }
        PolyMatrix::new(rows, cols, entries)
    }
}

fn constant_poly_matrix(a: &ComplexMatrix, d: usize) -> Result<PolyMatrix> {
    let entries = a.to_row_major().into_iter().map(|c| FreePoly::constant(d, c)).collect();
    PolyMatrix::new(a.rows(), a.cols(), entries)
}

/// Successive homogeneous terms `P_0(Y), P_1(Y), ...`, each costing two
/// matrix products.
pub(crate) struct HomogSeries {
    amp: Ampliated,
    /// `(Y_M·D)^(k-1)·Y_M·C` for the next `k`.
    u: Option<ComplexMatrix>,
    k: usize,
    /// Set once `u` is exactly zero; all later terms vanish.
    exhausted: bool,
}

impl HomogSeries {
    pub fn new(f: &Colligation, y: &ComplexMatrix) -> Result<Self> {
        let (_, amp) = f.ampliated(y)?;
        Ok(Self { amp, u: None, k: 0, exhausted: f.m == 0 })
    }

    /// Returns `P_k` and advances `k`.
    pub fn next_term(&mut self) -> ComplexMatrix {
        let k = self.k;
        self.k += 1;
        if k == 0 {
            return self.amp.a.clone();
        }
        if self.exhausted {
            return ComplexMatrix::zeros(self.amp.a.rows(), self.amp.a.cols());
        }
        let u = match self.u.take() {
            None => &self.amp.y_m * &self.amp.c,
            Some(prev) => &self.amp.y_m * &(&self.amp.d * &prev),
        };
        if u.is_exact_zero() {
            self.exhausted = true;
        }
        let term = &self.amp.b * &u;
        self.u = Some(u);
        term
    }

    /// Every later term is exactly zero (nilpotent structure reached).
    pub fn exhausted(&self) -> bool {
        self.exhausted && self.k > 0
    }
}

pub fn is_isometry(f: &Colligation, tol: f64) -> IsometryCheck {
    f.is_isometry(tol)
}

pub fn eval_colligation(f: &Colligation, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    f.eval(y)
}

pub fn homog_term(f: &Colligation, k: usize, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    f.homog_term(k, y)
}

pub fn homog_extract_dft(f: &Colligation, y: &ComplexMatrix, k: usize, samples: usize, tol: f64) -> Result<DftExtraction> {
    f.homog_extract_dft(y, k, samples, tol)
}

/// Places `src` into `dst` with row and column index maps.
fn scatter(dst: &mut ComplexMatrix, src: &ComplexMatrix, row: impl Fn(usize) -> usize, col: impl Fn(usize) -> usize) {
    for r in 0..src.rows() {
        for c in 0..src.cols() {
            let v = src.get(r, c);
            if v != ZERO {
                dst.set(row(r), col(c), v);
            }
        }
    }
}

/// Sum, pointwise product or scalar multiple of realizations. The auxiliary
/// spaces add; the result is never marked isometric.
pub fn combine(f: &Colligation, g: &Colligation, kind: Combine) -> Result<Colligation> {
    if let Combine::Scale(c) = kind {
        let mut out = Colligation::new(f.a.scale(c), f.b.scale(c), f.c.clone(), f.d.clone(), f.i_dim, f.j_dim, f.m)?;
        out.isometric_certified = false;
        return Ok(out);
    }
    if (f.i_dim, f.j_dim) != (g.i_dim, g.j_dim) {
        return Err(Error::Shape(format!(
            "coordinate balls differ: {}x{} vs {}x{}",
            f.i_dim, f.j_dim, g.i_dim, g.j_dim
        )));
    }
    let (i_dim, j_dim) = (f.i_dim, f.j_dim);
    let (mf, mg) = (f.m, g.m);
    let m = mf + mg;
    let f_slot = |idx: usize| (idx / mf.max(1)) * m + idx % mf.max(1);
    let g_slot = |idx: usize| (idx / mg.max(1)) * m + mf + idx % mg.max(1);
    let id = |x: usize| x;
    match kind {
        Combine::Sum => {
            if (f.k1, f.k2) != (g.k1, g.k2) {
                return Err(Error::Shape(format!(
                    "sum needs equal value shapes: {}x{} vs {}x{}",
                    f.k2, f.k1, g.k2, g.k1
                )));
            }
            let a = &f.a + &g.a;
            let mut b = ComplexMatrix::zeros(f.k2, i_dim * m);
            scatter(&mut b, &f.b, id, f_slot);
            scatter(&mut b, &g.b, id, g_slot);
            let mut c = ComplexMatrix::zeros(j_dim * m, f.k1);
            scatter(&mut c, &f.c, f_slot, id);
            scatter(&mut c, &g.c, g_slot, id);
            let mut d = ComplexMatrix::zeros(j_dim * m, i_dim * m);
            scatter(&mut d, &f.d, f_slot, f_slot);
            scatter(&mut d, &g.d, g_slot, g_slot);
            Colligation::new(a, b, c, d, i_dim, j_dim, m)
        }
        Combine::Product => {
            if f.k1 != g.k2 {
                return Err(Error::Shape(format!(
                    "product needs F input dim {} to equal G output dim {}",
                    f.k1, g.k2
                )));
            }
            let a = &f.a * &g.a;
            let mut b = ComplexMatrix::zeros(f.k2, i_dim * m);
            scatter(&mut b, &f.b, id, f_slot);
            scatter(&mut b, &(&f.a * &g.b), id, g_slot);
            let mut c = ComplexMatrix::zeros(j_dim * m, g.k1);
            scatter(&mut c, &(&f.c * &g.a), f_slot, id);
            scatter(&mut c, &g.c, g_slot, id);
            let mut d = ComplexMatrix::zeros(j_dim * m, i_dim * m);
            scatter(&mut d, &f.d, f_slot, f_slot);
            scatter(&mut d, &(&f.c * &g.b), f_slot, g_slot);
            scatter(&mut d, &g.d, g_slot, g_slot);
            Colligation::new(a, b, c, d, i_dim, j_dim, m)
        }
        Combine::Scale(_) => unreachable!(),
    }
}

/// Compiles a polynomial matrix over the `I·J` coordinates of the
/// `E_λ` arrangement into a realization with nilpotent `D`.
pub fn poly_to_colligation(p: &PolyMatrix, i_dim: usize, j_dim: usize) -> Result<Colligation> {
    if p.d() != i_dim * j_dim {
        return Err(Error::VariableCount { left: p.d(), right: i_dim * j_dim });
    }
    let (k2, k1) = p.shape();
    let mut acc = Colligation::constant(ComplexMatrix::zeros(k2, k1), i_dim, j_dim)?;
    for r in 0..k2 {
        for col in 0..k1 {
            for (w, &coeff) in p.entry(r, col).terms() {
                let scalar = word_colligation(w.letters(), coeff, i_dim, j_dim)?;
                let embedded = embed_scalar(&scalar, k2, k1, r, col)?;
                acc = combine(&acc, &embedded, Combine::Sum)?;
            }
        }
    }
    Ok(acc)
}

/// `coeff · Y_{l1} Y_{l2} ... Y_{lq}` for E_λ letters.
fn word_colligation(letters: &[u32], coeff: C64, i_dim: usize, j_dim: usize) -> Result<Colligation> {
    let Some((&last, rest)) = letters.split_last() else {
        return Colligation::constant(ComplexMatrix::scalar(1, coeff), i_dim, j_dim);
    };
    let coord = |l: u32| Colligation::coordinate(i_dim, j_dim, l as usize / j_dim, l as usize % j_dim);
    let mut acc = coord(last)?;
    for &l in rest.iter().rev() {
        acc = combine(&coord(l)?, &acc, Combine::Product)?;
    }
    combine(&acc, &acc, Combine::Scale(coeff))
}

/// Places a scalar-valued realization at entry `(r, c)` of a `k2 x k1` value.
fn embed_scalar(f: &Colligation, k2: usize, k1: usize, r: usize, c: usize) -> Result<Colligation> {
    let mut a = ComplexMatrix::zeros(k2, k1);
    a.set(r, c, f.a.get(0, 0));
    let mut b = ComplexMatrix::zeros(k2, f.b.cols());
    b.set_block(r, 0, &f.b);
    let mut cm = ComplexMatrix::zeros(f.c.rows(), k1);
    cm.set_block(0, c, &f.c);
    Colligation::new(a, b, cm, f.d.clone(), f.i_dim, f.j_dim, f.m)
}

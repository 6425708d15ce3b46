//! Free (noncommutative) polynomials and matrices of them.
//!
//! Letters are stored 0-based (`x^1` is letter `0`); the JSON encoding and
//! the `Display` impl use 1-based indices.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{block_assemble, op_norm, ComplexMatrix, MatrixTuple, C64, ONE, ZERO};

/// A monomial: a finite sequence of letters. The empty word is the identity.
///
/// Ordered by length first, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u32>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(letters: Vec<u32>) -> Self {
        Self(letters)
    }

    pub fn letter(l: u32) -> Self {
        Self(vec![l])
    }

    /// Builds from 1-based letter indices.
    pub fn from_one_based(letters: &[u32]) -> Result<Self> {
        if letters.contains(&0) {
            return Err(Error::Parse("letter indices are 1-based; found 0".into()));
        }
        Ok(Self(letters.iter().map(|l| l - 1).collect()))
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    fn max_letter(&self) -> Option<u32> {
        self.0.iter().copied().max()
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Arithmetic selector for [`poly_arith`].
#[derive(Clone, Copy, Debug)]
pub enum PolyOp {
    Add,
    Mul,
    Scale(C64),
}

/// An element of the free algebra in `d` letters.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "crate::io::PolyWire", try_from = "crate::io::PolyWire")]
pub struct FreePoly {
    d: usize,
    terms: BTreeMap<Word, C64>,
}

impl FreePoly {
    pub fn zero(d: usize) -> Self {
        Self { d, terms: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: C64) -> Self {
        Self::monomial(d, Word::empty(), c).expect("empty word is always valid")
    }

    pub fn one(d: usize) -> Self {
        Self::constant(d, ONE)
    }

    /// The coordinate function `x^{j+1}` (0-based `j`).
    pub fn coordinate(d: usize, j: usize) -> Result<Self> {
        Self::monomial(d, Word::letter(j as u32), ONE)
    }

    pub fn monomial(d: usize, word: Word, coeff: C64) -> Result<Self> {
        Self::from_terms(d, [(word, coeff)])
    }

    /// Collects like terms and prunes zeros.
    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Word, C64)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("number of variables must be positive".into()));
        }
        let mut p = Self::zero(d);
        for (w, c) in terms {
            if let Some(l) = w.max_letter() {
                if l as usize >= d {
                    return Err(Error::InvalidParameter(format!(
                        "letter x^{} out of range for d = {d}",
                        l + 1
                    )));
                }
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite(format!("coefficient of word {w:?}")));
            }
            p.add_term(w, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, w: Word, c: C64) {
        match self.terms.entry(w) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == ZERO {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if c != ZERO {
                    e.insert(c);
                }
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> C64 {
        self.terms.get(w).copied().unwrap_or(ZERO)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Word::len).max()
    }

    pub fn constant_term(&self) -> C64 {
        self.coeff(&Word::empty())
    }

    /// Sum of absolute values of the coefficients; bounds `||p(x)||` whenever
    /// every `||x^j|| <= 1`.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    fn check_d(&self, other: &FreePoly) -> Result<()> {
        if self.d != other.d {
            return Err(Error::VariableCount { left: self.d, right: other.d });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &FreePoly) -> Result<FreePoly> {
        self.check_d(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &FreePoly) -> Result<FreePoly> {
        self.try_add(&other.scale(-ONE))
    }

    pub fn try_mul(&self, other: &FreePoly) -> Result<FreePoly> {
        self.check_d(other)?;
        let mut out = FreePoly::zero(self.d);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.concat(w2), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: C64) -> FreePoly {
        if c == ZERO {
            return FreePoly::zero(self.d);
        }
        let terms = self.terms.iter().map(|(w, v)| (w.clone(), v * c)).filter(|(_, v)| *v != ZERO).collect();
        FreePoly { d: self.d, terms }
    }

    /// Evaluates at a matrix tuple; the empty word maps to `I_n`.
    pub fn eval(&self, x: &MatrixTuple) -> Result<ComplexMatrix> {
        if x.d() != self.d {
            return Err(Error::VariableCount { left: self.d, right: x.d() });
        }
        let n = x.level();
        let mut acc = ComplexMatrix::zeros(n, n);
        for (w, c) in &self.terms {
            let mut prod: Option<ComplexMatrix> = None;
            for &l in w.letters() {
                let xl = x.coord(l as usize);
                prod = Some(match prod {
                    None => xl.clone(),
                    Some(p) => &p * xl,
                });
            }
            let term = match prod {
                None => ComplexMatrix::scalar(n, *c),
                Some(p) => p.scale(*c),
            };
            acc = &acc + &term;
        }
        Ok(acc)
    }

    /// Degree-`k` homogeneous components, `parts[k]`. Their sum is `self`.
    pub fn homogeneous_parts(&self) -> Vec<FreePoly> {
        let deg = self.degree().unwrap_or(0);
        let mut parts = vec![FreePoly::zero(self.d); deg + 1];
        for (w, c) in &self.terms {
            parts[w.len()].terms.insert(w.clone(), *c);
        }
        parts
    }

    /// True when every term has degree at most one.
    pub fn is_affine(&self) -> bool {
        self.degree().unwrap_or(0) <= 1
    }

    /// Substitutes `subs[j]` for `x^{j+1}`. All substitutes share their own `d`.
    pub fn compose(&self, subs: &[FreePoly]) -> Result<FreePoly> {
        if subs.len() != self.d {
            return Err(Error::VariableCount { left: self.d, right: subs.len() });
        }
        let new_d = subs[0].d;
        if let Some(bad) = subs.iter().find(|s| s.d != new_d) {
            return Err(Error::VariableCount { left: new_d, right: bad.d });
        }
        let mut out = FreePoly::zero(new_d);
        for (w, c) in &self.terms {
            let mut term = FreePoly::constant(new_d, *c);
            for &l in w.letters() {
                term = term.try_mul(&subs[l as usize])?;
            }
            out = out.try_add(&term)?;
        }
        Ok(out)
    }
}

impl fmt::Display for FreePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            for l in w.letters() {
                write!(f, "*x{}", l + 1)?;
            }
        }
        Ok(())
    }
}

/// Polynomial arithmetic by selector.
pub fn poly_arith(p: &FreePoly, q: &FreePoly, op: PolyOp) -> Result<FreePoly> {
    match op {
        PolyOp::Add => p.try_add(q),
        PolyOp::Mul => p.try_mul(q),
        PolyOp::Scale(c) => {
            p.check_d(q)?;
            Ok(p.scale(c))
        }
    }
}

/// An `I x J` matrix of free polynomials over a common `d`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "crate::io::PolyMatrixWire", try_from = "crate::io::PolyMatrixWire")]
pub struct PolyMatrix {
    d: usize,
    rows: usize,
    cols: usize,
    entries: Vec<FreePoly>,
}

/// Result of a `G_δ` membership test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub norm: f64,
}

impl PolyMatrix {
    /// Row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<FreePoly>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("polynomial matrices need positive dimensions".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} entries for a {rows}x{cols} polynomial matrix, found {}",
                rows * cols,
                entries.len()
            )));
        }
        let d = entries[0].d;
        if let Some(bad) = entries.iter().find(|p| p.d != d) {
            return Err(Error::VariableCount { left: d, right: bad.d });
        }
        Ok(Self { d, rows, cols, entries })
    }

    pub fn from_grid(grid: Vec<Vec<FreePoly>>) -> Result<Self> {
        let rows = grid.len();
        let cols = grid.first().map_or(0, Vec::len);
        if grid.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged polynomial grid".into()));
        }
        Self::new(rows, cols, grid.into_iter().flatten().collect())
    }

    /// `1 x 1` matrix holding `p`.
    pub fn scalar(p: FreePoly) -> Self {
        Self { d: p.d, rows: 1, cols: 1, entries: vec![p] }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entry `(i, j)`, 0-based.
    pub fn entry(&self, i: usize, j: usize) -> &FreePoly {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[FreePoly] {
        &self.entries
    }

    /// Applies `f` entrywise; `f` may change the number of variables, but
    /// must do so uniformly.
    pub fn map(&self, f: impl Fn(&FreePoly) -> FreePoly) -> Self {
        let entries: Vec<FreePoly> = self.entries.iter().map(f).collect();
        let d = entries[0].d;
        debug_assert!(entries.iter().all(|p| p.d == d));
        Self { d, rows: self.rows, cols: self.cols, entries }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|p| p.scale(c))
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn try_sub(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.try_sub(b)).collect::<Result<_>>()?;
        PolyMatrix::new(self.rows, self.cols, entries)
    }

    pub fn try_mul(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = FreePoly::zero(self.d);
                for k in 0..self.cols {
                    acc = acc.try_add(&self.entry(i, k).try_mul(other.entry(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        PolyMatrix::new(self.rows, other.cols, entries)
    }

    pub fn degree(&self) -> Option<usize> {
        self.entries.iter().filter_map(FreePoly::degree).max()
    }

    /// Every entry is a scalar plus a homogeneous linear polynomial.
    pub fn is_affine(&self) -> bool {
        self.entries.iter().all(FreePoly::is_affine)
    }

    /// `δ(0) = 0`: no entry has a constant term.
    pub fn vanishes_at_zero(&self) -> bool {
        self.entries.iter().all(|p| p.constant_term() == ZERO)
    }

    /// `nI x nJ` block matrix whose `(i, j)` block is `δ_ij(x)`.
    pub fn eval(&self, x: &MatrixTuple) -> Result<ComplexMatrix> {
        if x.d() != self.d {
            return Err(Error::VariableCount { left: self.d, right: x.d() });
        }
        let grid = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.entry(i, j).eval(x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        block_assemble(&grid)
    }

    /// `||δ(x)|| <= 1 - margin`, reporting the norm either way.
    pub fn membership(&self, x: &MatrixTuple, margin: f64) -> Result<Membership> {
        let norm = op_norm(&self.eval(x)?);
        Ok(Membership { inside: norm <= 1.0 - margin, norm })
    }
}

/// Matrix-level evaluation of `δ` at `x`.
pub fn eval_matrix(delta: &PolyMatrix, x: &MatrixTuple) -> Result<ComplexMatrix> {
    delta.eval(x)
}

pub fn eval_poly(p: &FreePoly, x: &MatrixTuple) -> Result<ComplexMatrix> {
    p.eval(x)
}

pub fn in_g_delta(delta: &PolyMatrix, x: &MatrixTuple, margin: f64) -> Result<Membership> {
    delta.membership(x, margin)
}

/// Coordinate arrangement `E_λ`: entry `(i, j)` is `x^{(i-1)J + j}`.
pub fn e_lambda(rows: usize, cols: usize) -> Result<PolyMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("E_lambda needs positive dimensions".into()));
    }
    let d = rows * cols;
    let entries = (0..d).map(|k| FreePoly::coordinate(d, k)).collect::<Result<_>>()?;
    PolyMatrix::new(rows, cols, entries)
}

/// The row `(x^1 ... x^d)`; its domain is the row-contraction ball.
pub fn row_delta(d: usize) -> Result<PolyMatrix> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    e_lambda(1, d)
}

/// `diag(x^1, ..., x^d)`; its domain is the free polydisc.
pub fn diag_delta(d: usize) -> Result<PolyMatrix> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let mut entries = vec![FreePoly::zero(d); d * d];
    for j in 0..d {
        entries[j * d + j] = FreePoly::coordinate(d, j)?;
    }
    PolyMatrix::new(d, d, entries)
}

/// `diag((yx - I)/ε, x/(1+ε), y/(1+ε))` in the two letters `x = x^1`, `y = x^2`,
/// for `0 < ε < 0.2`.
pub fn gap_delta(eps: f64) -> Result<PolyMatrix> {
    if !(eps > 0.0 && eps < 0.2) {
        return Err(Error::InvalidParameter(format!("gap_delta requires 0 < eps < 0.2, got {eps}")));
    }
    let r = |v: f64| C64::new(v, 0.0);
    let yx_minus_one = FreePoly::from_terms(2, [(Word::new(vec![1, 0]), ONE), (Word::empty(), -ONE)])?;
    let mut entries = vec![FreePoly::zero(2); 9];
    entries[0] = yx_minus_one.scale(r(1.0 / eps));
    entries[4] = FreePoly::coordinate(2, 0)?.scale(r(1.0 / (1.0 + eps)));
    entries[8] = FreePoly::coordinate(2, 1)?.scale(r(1.0 / (1.0 + eps)));
    PolyMatrix::new(3, 3, entries)
}

/// `diag(x, x - 1)` in one letter; its scalar domain is the lens
/// `{|z| < 1, |z - 1| < 1}`.
pub fn lens_delta() -> PolyMatrix {
    let x = FreePoly::coordinate(1, 0).expect("d = 1");
    let x_minus_one = x.try_sub(&FreePoly::one(1)).expect("same d");
    PolyMatrix::new(2, 2, vec![x, FreePoly::zero(1), FreePoly::zero(1), x_minus_one]).expect("2x2")
}

/// The commutator defect `x^1 x^2 - x^2 x^1 - 1`.
pub fn commutator_q() -> FreePoly {
    FreePoly::from_terms(
        2,
        [(Word::new(vec![0, 1]), ONE), (Word::new(vec![1, 0]), -ONE), (Word::empty(), -ONE)],
    )
    .expect("valid letters")
}

/// Named builders for the standard `δ` families, selectable at runtime.
pub fn delta_by_name(name: &str, params: &BTreeMap<String, f64>) -> Result<PolyMatrix> {
    let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
    let dim = |k: &str, default: f64| -> Result<usize> {
        let v = get(k, default);
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!("{k} must be a positive integer, got {v}")));
        }
        Ok(v as usize)
    };
    match name {
        "e_lambda" => e_lambda(dim("I", 1.0)?, dim("J", 1.0)?),
        "row" => row_delta(dim("d", 2.0)?),
        "diag" => diag_delta(dim("d", 2.0)?),
        "gap" => gap_delta(get("eps", 0.1)),
        "lens" => Ok(lens_delta()),
        "commutator" => Ok(PolyMatrix::scalar(commutator_q())),
        other => Err(Error::Unknown {
            kind: "delta",
            name: other.to_string(),
            known: "e_lambda, row, diag, gap, lens, commutator".into(),
        }),
    }
}

/// Witnesses that `δ` separates points: one polynomial `h_r` per coordinate,
/// in the `I·J` entries of `δ` (row-major), with `h_r ∘ δ = x^r`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SeparatingCheck {
    /// The user's claim, recorded as given.
    pub claimed: bool,
    pub witnesses: usize,
    /// `h_r ∘ δ` reduces to `x^r` after collecting like terms, for every `r`.
    pub exact: bool,
    /// Max over points and `r` of `||h_r(δ(x)) - x^r||`.
    pub max_residual: f64,
    pub verified: bool,
}

/// Verifies user-supplied separating witnesses at `points`. Does not search
/// for witnesses.
pub fn check_separating(
    delta: &PolyMatrix,
    claimed: bool,
    witnesses: &[FreePoly],
    points: &[MatrixTuple],
    tol: f64,
) -> Result<SeparatingCheck> {
    let d = delta.d();
    if witnesses.len() != d {
        return Err(Error::VariableCount { left: d, right: witnesses.len() });
    }
    let mut exact = true;
    for (r, h) in witnesses.iter().enumerate() {
        if h.d() != delta.entries().len() {
            return Err(Error::VariableCount { left: delta.entries().len(), right: h.d() });
        }
        exact &= h.compose(delta.entries())? == FreePoly::coordinate(d, r)?;
    }
    let mut max_residual = 0.0f64;
    for x in points {
        let entries = MatrixTuple::new(delta.entries().iter().map(|e| e.eval(x)).collect::<Result<_>>()?)?;
        for (r, h) in witnesses.iter().enumerate() {
            max_residual = max_residual.max(op_norm(&(&h.eval(&entries)? - x.coord(r))));
        }
    }
    Ok(SeparatingCheck { claimed, witnesses: d, exact, max_residual, verified: claimed && max_residual <= tol })
}

//! JSON formats for matrices, tuples, polynomials, colligations and jobs,
//! plus a validator that reports line-anchored errors.
//!
//! Complex scalars are `[re, im]`; matrices are
//! `{"rows", "cols", "data"}` with `data` in row-major order.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::freepoly::{FreePoly, PolyMatrix, Word};
use crate::funcalc::CalcParams;
use crate::matrix::{ComplexMatrix, MatrixTuple, C64};
use crate::realization::{Colligation, ISOMETRY_TOL};

/// Crate version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct MatrixWire {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl From<ComplexMatrix> for MatrixWire {
    fn from(m: ComplexMatrix) -> Self {
        Self { rows: m.rows(), cols: m.cols(), data: m.to_row_major().into_iter().map(|c| [c.re, c.im]).collect() }
    }
}

impl TryFrom<MatrixWire> for ComplexMatrix {
    type Error = Error;
    fn try_from(w: MatrixWire) -> Result<Self> {
        ComplexMatrix::from_row_major(w.rows, w.cols, w.data.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TupleWire {
    n: usize,
    d: usize,
    coords: Vec<ComplexMatrix>,
}

impl From<MatrixTuple> for TupleWire {
    fn from(x: MatrixTuple) -> Self {
        Self { n: x.level(), d: x.d(), coords: x.into_coords() }
    }
}

impl TryFrom<TupleWire> for MatrixTuple {
    type Error = Error;
    fn try_from(w: TupleWire) -> Result<Self> {
        if w.coords.len() != w.d {
            return Err(Error::Shape(format!("tuple declares d = {} but has {} coords", w.d, w.coords.len())));
        }
        let x = MatrixTuple::new(w.coords)?;
        if x.level() != w.n {
            return Err(Error::Shape(format!("tuple declares n = {} but coords are {}x{}", w.n, x.level(), x.level())));
        }
        Ok(x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermWire {
    /// 1-based letters.
    word: Vec<u32>,
    coeff: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PolyWire {
    d: usize,
    terms: Vec<TermWire>,
}

impl From<FreePoly> for PolyWire {
    fn from(p: FreePoly) -> Self {
        let terms = p
            .terms()
            .map(|(w, c)| TermWire { word: w.letters().iter().map(|l| l + 1).collect(), coeff: [c.re, c.im] })
            .collect();
        Self { d: p.d(), terms }
    }
}

impl TryFrom<PolyWire> for FreePoly {
    type Error = Error;
    fn try_from(w: PolyWire) -> Result<Self> {
        let terms = w
            .terms
            .into_iter()
            .map(|t| Ok((Word::from_one_based(&t.word)?, C64::new(t.coeff[0], t.coeff[1]))))
            .collect::<Result<Vec<_>>>()?;
        FreePoly::from_terms(w.d, terms)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PolyMatrixWire {
    #[serde(rename = "I")]
    rows: usize,
    #[serde(rename = "J")]
    cols: usize,
    entries: Vec<FreePoly>,
}

impl From<PolyMatrix> for PolyMatrixWire {
    fn from(p: PolyMatrix) -> Self {
        Self { rows: p.rows(), cols: p.cols(), entries: p.entries().to_vec() }
    }
}

impl TryFrom<PolyMatrixWire> for PolyMatrix {
    type Error = Error;
    fn try_from(w: PolyMatrixWire) -> Result<Self> {
        PolyMatrix::new(w.rows, w.cols, w.entries)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ColligationWire {
    k1: usize,
    k2: usize,
    #[serde(rename = "I")]
    i_dim: usize,
    #[serde(rename = "J")]
    j_dim: usize,
    m: usize,
    #[serde(rename = "A")]
    a: ComplexMatrix,
    #[serde(rename = "B")]
    b: ComplexMatrix,
    #[serde(rename = "C")]
    c: ComplexMatrix,
    #[serde(rename = "D")]
    d: ComplexMatrix,
    #[serde(default)]
    isometric_certified: bool,
}

impl From<Colligation> for ColligationWire {
    fn from(f: Colligation) -> Self {
        Self {
            k1: f.k1(),
            k2: f.k2(),
            i_dim: f.i_dim(),
            j_dim: f.j_dim(),
            m: f.m(),
            a: f.a().clone(),
            b: f.b().clone(),
            c: f.c().clone(),
            d: f.d().clone(),
            isometric_certified: f.isometric_certified(),
        }
    }
}

impl TryFrom<ColligationWire> for Colligation {
    type Error = Error;
    fn try_from(w: ColligationWire) -> Result<Self> {
        if w.a.shape() != (w.k2, w.k1) {
            return Err(Error::Shape(format!(
                "block A is {}x{}, expected {}x{}",
                w.a.rows(),
                w.a.cols(),
                w.k2,
                w.k1
            )));
        }
        let f = Colligation::new(w.a, w.b, w.c, w.d, w.i_dim, w.j_dim, w.m)?;
        if !w.isometric_certified {
            return Ok(f);
        }
        let check = f.is_isometry(ISOMETRY_TOL);
        if !check.isometric {
            return Err(Error::InvalidParameter(format!(
                "isometric_certified is true but ||V*V - I|| = {:e} exceeds {ISOMETRY_TOL:e}",
                check.defect
            )));
        }
        Ok(f.certify())
    }
}

/// A functional-calculus job: evaluate `F♯(δ(T)/s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    #[serde(rename = "F")]
    pub f: Colligation,
    pub delta: PolyMatrix,
    #[serde(rename = "T")]
    pub t: MatrixTuple,
    #[serde(default)]
    pub params: CalcParams,
}

/// Kinds of input documents the validator recognizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Matrix,
    Tuple,
    Poly,
    PolyMatrix,
    Colligation,
    Job,
}

impl DocKind {
    pub fn name(self) -> &'static str {
        match self {
            DocKind::Matrix => "matrix",
            DocKind::Tuple => "tuple",
            DocKind::Poly => "poly",
            DocKind::PolyMatrix => "polymatrix",
            DocKind::Colligation => "colligation",
            DocKind::Job => "job",
        }
    }

    /// Guesses the kind from the top-level keys.
    pub fn detect(v: &Value) -> Option<Self> {
        let obj = v.as_object()?;
        let has = |k: &str| obj.contains_key(k);
        Some(if has("F") || has("T") {
            DocKind::Job
        } else if has("k1") || has("A") {
            DocKind::Colligation
        } else if has("entries") {
            DocKind::PolyMatrix
        } else if has("terms") {
            DocKind::Poly
        } else if has("coords") {
            DocKind::Tuple
        } else if has("data") {
            DocKind::Matrix
        } else {
            return None;
        })
    }
}

/// Outcome of [`validate_str`].
#[derive(Clone, Debug, Serialize)]
pub struct Validation {
    pub kind: Option<DocKind>,
    pub ok: bool,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

pub fn validate_str(text: &str) -> Validation {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return failure(None, &e, text),
    };
    let Some(kind) = DocKind::detect(&value) else {
        return Validation {
            kind: None,
            ok: false,
            message: "unrecognized document: expected a matrix, tuple, poly, polymatrix, colligation or job".into(),
            line: Some(1),
            column: Some(1),
        };
    };
    let res = match kind {
        DocKind::Matrix => serde_json::from_str::<ComplexMatrix>(text).map(drop),
        DocKind::Tuple => serde_json::from_str::<MatrixTuple>(text).map(drop),
        DocKind::Poly => serde_json::from_str::<FreePoly>(text).map(drop),
        DocKind::PolyMatrix => serde_json::from_str::<PolyMatrix>(text).map(drop),
        DocKind::Colligation => serde_json::from_str::<Colligation>(text).map(drop),
        DocKind::Job => serde_json::from_str::<Job>(text).map(drop),
    };
    match res {
        Ok(()) => Validation { kind: Some(kind), ok: true, message: "OK".into(), line: None, column: None },
        Err(e) => failure(Some(kind), &e, text),
    }
}

pub fn validate_file(path: &Path) -> Result<Validation> {
    Ok(validate_str(&std::fs::read_to_string(path)?))
}

/// Semantic errors surface at the end of the enclosing object; when the
/// message names a block, point at that key instead.
fn failure(kind: Option<DocKind>, e: &serde_json::Error, text: &str) -> Validation {
    let message = strip_position(&e.to_string());
    let (mut line, mut column) = (e.line(), e.column());
    if let Some(block) = message.split("block ").nth(1).and_then(|s| s.split_whitespace().next()) {
        let needle = format!("\"{block}\"");
        if let Some((l, c)) = locate(text, &needle) {
            line = l;
            column = c;
        }
    }
    Validation { kind, ok: false, message, line: Some(line), column: Some(column) }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn locate(text: &str, needle: &str) -> Option<(usize, usize)> {
    text.lines().enumerate().find_map(|(i, l)| l.find(needle).map(|c| (i + 1, c + 1)))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

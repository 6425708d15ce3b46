//! Finite test families of polynomials.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freepoly::{FreePoly, PolyMatrix, Word};
use crate::matrix::complex_gaussian;
use crate::rng::rng_for;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Every monomial of length at most `max_len`.
    Monomials { max_len: usize },
    /// Scalar polynomials with random words and Gaussian coefficients.
    RandomPolys { count: usize, max_len: usize, terms: usize, seed: u64 },
    /// `rows x cols` matrices of random polynomials.
    MatrixPolys { rows: usize, cols: usize, count: usize, max_len: usize, terms: usize, seed: u64 },
}

/// Builds the family over `d` variables. The constant `1` and the
/// coordinates `x^1, ..., x^d` always come first.
pub fn family_builder(kind: &FamilyKind, d: usize) -> Result<Vec<PolyMatrix>> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let mut out = vec![PolyMatrix::scalar(FreePoly::one(d))];
    for j in 0..d {
        out.push(PolyMatrix::scalar(FreePoly::coordinate(d, j)?));
    }
    match *kind {
        FamilyKind::Monomials { max_len } => {
            for w in words_up_to(d, max_len).into_iter().filter(|w| w.len() >= 2) {
                out.push(PolyMatrix::scalar(FreePoly::monomial(d, w, crate::matrix::ONE)?));
            }
        }
        FamilyKind::RandomPolys { count, max_len, terms, seed } => {
            for i in 0..count {
                let mut rng = rng_for(seed, &[i as u64]);
                out.push(PolyMatrix::scalar(random_poly(d, max_len, terms, &mut rng)?));
            }
        }
        FamilyKind::MatrixPolys { rows, cols, count, max_len, terms, seed } => {
            if rows == 0 || cols == 0 {
                return Err(Error::InvalidParameter("matrix family needs positive shape".into()));
            }
            for i in 0..count {
                let mut rng = rng_for(seed, &[i as u64]);
                let entries = (0..rows * cols).map(|_| random_poly(d, max_len, terms, &mut rng)).collect::<Result<_>>()?;
                out.push(PolyMatrix::new(rows, cols, entries)?);
            }
        }
    }
    Ok(out)
}

/// All words of length `<= max_len`, in word order.
pub fn words_up_to(d: usize, max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut frontier = vec![Vec::<u32>::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * d);
        for w in &frontier {
            for l in 0..d as u32 {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(Word::new));
        frontier = next;
    }
    out
}

fn random_poly<R: Rng + ?Sized>(d: usize, max_len: usize, terms: usize, rng: &mut R) -> Result<FreePoly> {
    let mut list = Vec::with_capacity(terms);
    for _ in 0..terms.max(1) {
        let len = rng.random_range(0..=max_len);
        let w = Word::new((0..len).map(|_| rng.random_range(0..d as u32)).collect());
        list.push((w, complex_gaussian(rng)));
    }
    FreePoly::from_terms(d, list)
}

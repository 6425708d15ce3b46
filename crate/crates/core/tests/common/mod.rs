#![allow(dead_code)]

use freecalc::freepoly::{diag_delta, e_lambda, row_delta};
use freecalc::matrix::op_norm;
use freecalc::realization::poly_to_colligation;
use freecalc::{Colligation, ComplexMatrix, FreePoly, PolyMatrix, Word, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn random_poly(d: usize, max_len: usize, rng: &mut ChaCha8Rng) -> FreePoly {
    let terms: Vec<(Word, C64)> = (0..rng.random_range(1..=5))
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            let w = Word::new((0..len).map(|_| rng.random_range(0..d as u32)).collect());
            (w, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
        .collect();
    FreePoly::from_terms(d, terms).unwrap()
}

/// Blockwise direct sum of two `rows x cols` grids of square blocks of
/// sizes `na` and `nb`.
pub fn blockwise_sum(a: &ComplexMatrix, b: &ComplexMatrix, rows: usize, cols: usize, na: usize, nb: usize) -> ComplexMatrix {
    let n = na + nb;
    let mut out = ComplexMatrix::zeros(rows * n, cols * n);
    for r in 0..rows {
        for c in 0..cols {
            out.set_block(r * n, c * n, &a.block(r * na, c * na, na, na));
            out.set_block(r * n + na, c * n + na, &b.block(r * nb, c * nb, nb, nb));
        }
    }
    out
}

pub fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    op_norm(&(a - b)) / op_norm(b).max(1.0)
}

/// One of the linear defining matrices with its shape.
pub fn linear_delta(kind: usize, rng: &mut ChaCha8Rng) -> (PolyMatrix, usize, usize) {
    match kind % 3 {
        0 => {
            let i = rng.random_range(1..=2);
            let j = rng.random_range(i..=3);
            (e_lambda(i, j).unwrap(), i, j)
        }
        1 => {
            let d = rng.random_range(1..=3);
            (diag_delta(d).unwrap(), d, d)
        }
        _ => {
            let d = rng.random_range(1..=3);
            (row_delta(d).unwrap(), 1, d)
        }
    }
}

/// Realization of `P ∘ (δ/s)^{-1}`: each `x^j` is replaced by `s` times the
/// entry of `δ` that equals `x^j`.
pub fn compile(p: &PolyMatrix, delta: &PolyMatrix, s: f64) -> Colligation {
    let d = delta.d();
    let (i_dim, j_dim) = delta.shape();
    let subs: Vec<FreePoly> = (0..d)
        .map(|j| {
            let target = FreePoly::coordinate(d, j).unwrap();
            let pos = delta.entries().iter().position(|e| *e == target).unwrap();
            FreePoly::coordinate(i_dim * j_dim, pos).unwrap().scale(C64::new(s, 0.0))
        })
        .collect();
    poly_to_colligation(&p.map(|e| e.compose(&subs).unwrap()), i_dim, j_dim).unwrap()
}

use rand::Rng;
use serde::Serialize;

use super::{Check, Experiment, ExperimentReport, RunContext};
use crate::error::Result;
use crate::freepoly::{lens_delta, FreePoly, PolyMatrix, Word};
use crate::funcalc::{sharp, CalcParams, AGREEMENT_SLACK};
use crate::matrix::{complex_gaussian, op_norm, random_gaussian_matrix, random_similarity, ComplexMatrix, MatrixTuple, C64};
use crate::realization::{poly_to_colligation, Colligation};
use crate::rng::rng_for;
use crate::spectral::words_up_to;

/// A single matrix on the lens `{|z| < 1, |z - 1| < 1}` via
/// `δ(x) = diag(x, x - 1)` and `φ(z) = g(z, z - 1)`.
pub struct LensExperiment;

#[derive(Serialize)]
struct Instance {
    r: f64,
    s: f64,
    discrepancy: f64,
    phi_norm: f64,
    estimate: f64,
    similarity_condition: f64,
    similar_phi_norm: f64,
    similar_estimate: f64,
    covariance_error: f64,
}

/// Random `g` in two letters with unit coefficient 1-norm.
pub fn random_g<R: Rng + ?Sized>(degree: usize, terms: usize, rng: &mut R) -> Result<FreePoly> {
    let words = words_up_to(2, degree);
    let list: Vec<(Word, C64)> =
        (0..terms.max(1)).map(|_| (words[rng.random_range(0..words.len())].clone(), complex_gaussian(rng))).collect();
    let g = FreePoly::from_terms(2, list)?;
    let l1 = g.coeff_l1();
    Ok(if l1 > 0.0 { g.scale(C64::new(1.0 / l1, 0.0)) } else { FreePoly::one(2) })
}

/// Realization of `y ↦ g(s·y_11, s·y_22)` on 2x2 operator matrices, so that
/// at `y = δ(T)/s` it returns `g(T, T - I)`.
pub fn lens_colligation(g: &FreePoly, s: f64) -> Result<Colligation> {
    let sc = C64::new(s, 0.0);
    let subs = [FreePoly::coordinate(4, 0)?.scale(sc), FreePoly::coordinate(4, 3)?.scale(sc)];
    poly_to_colligation(&PolyMatrix::scalar(g.compose(&subs)?), 2, 2)
}

/// `T = c·I + N` with `||N|| = rho`, centered on the lens.
pub fn lens_point<R: Rng + ?Sized>(n: usize, rho: f64, rng: &mut R) -> Result<MatrixTuple> {
    let g = random_gaussian_matrix(n, n, rng);
    let center = C64::new(0.5, 0.2 * (rng.random::<f64>() - 0.5));
    MatrixTuple::new(vec![&ComplexMatrix::scalar(n, center) + &g.scale_real(rho / op_norm(&g))])
}

fn g_at(g: &FreePoly, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    let shifted = t - &ComplexMatrix::identity(t.rows());
    g.eval(&MatrixTuple::new(vec![t.clone(), shifted])?)
}

impl Experiment for LensExperiment {
    fn name(&self) -> &'static str {
        "lens"
    }

    fn summary(&self) -> &'static str {
        "calculus of a single matrix on the lens through a two-variable polynomial"
    }

    fn params(&self) -> &'static [(&'static str, &'static str)] {
        &[
            ("level", "matrix size, default 4"),
            ("instances", "random (g, T) pairs, default 10"),
            ("rho", "perturbation size around the lens center, default 0.3"),
            ("degree", "max word length in g, default 3"),
            ("terms", "terms drawn for g, default 6"),
            ("condition", "max condition number of the similarity, default 5"),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let level = ctx.params.usize("level", 4)?;
        let instances = ctx.params.usize("instances", 10)?;
        let rho = ctx.params.f64("rho", 0.3)?;
        let degree = ctx.params.usize("degree", 3)?;
        let terms = ctx.params.usize("terms", 6)?;
        let condition = ctx.params.f64("condition", 5.0)?;
        let delta = lens_delta();
        let mut rows = Vec::new();
        for i in 0..instances {
            let mut rng = rng_for(ctx.seed, &[i as u64]);
            let g = random_g(degree, terms, &mut rng)?;
            let t = lens_point(level, rho, &mut rng)?;
            let tm = t.coord(0);
            let r = op_norm(tm).max(op_norm(&(tm - &ComplexMatrix::identity(level))));
            let s = (r + 1.0) / 2.0;
            let f = lens_colligation(&g, s)?;
            let rep = sharp(&f, &delta, &t, &CalcParams { s: Some(s), tol: ctx.tol, ..CalcParams::default() })?;
            let direct = g_at(&g, tm)?;
            let l1 = g.coeff_l1();
            let phi_norm = op_norm(&rep.value);

            let a = random_similarity(level, condition, &mut rng)?;
            let similar = a.conjugate(tm);
            let similar_phi = g_at(&g, &similar)?;
            let covariance_error = op_norm(&(&similar_phi - &a.conjugate(&rep.value)));
            rows.push(Instance {
                r,
                s,
                discrepancy: op_norm(&(&rep.value - &direct)),
                phi_norm,
                estimate: l1 / (1.0 - r),
                similarity_condition: a.condition(),
                similar_phi_norm: op_norm(&similar_phi),
                similar_estimate: a.condition() * l1 / (1.0 - r),
                covariance_error,
            });
        }
        let mut report = ExperimentReport::new(self.name(), ctx);
        let max = |f: &dyn Fn(&Instance) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        report.checks.push(Check::at_most("max_calculus_discrepancy", max(&|r| r.discrepancy), ctx.tol + AGREEMENT_SLACK));
        report.checks.push(Check::at_most("max_norm_over_estimate", max(&|r| r.phi_norm / r.estimate), 1.0));
        report.checks.push(Check::at_most(
            "max_similar_norm_over_estimate",
            max(&|r| r.similar_phi_norm / r.similar_estimate),
            1.0,
        ));
        report.checks.push(Check::at_most("max_similarity_covariance_error", max(&|r| r.covariance_error), 1e-8));
        report.put("instances", &rows)?;
        report.notes.push("the coefficient 1-norm of g stands in for its sup norm on the bidisc (an upper bound)".into());
        Ok(report)
    }
}

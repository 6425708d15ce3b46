use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Check, Experiment, ExperimentReport, RunContext};
use crate::error::Result;
use crate::freepoly::{commutator_q, PolyMatrix};
use crate::matrix::{op_norm, random_gaussian_matrix, ComplexMatrix, MatrixTuple, C64};
use crate::rng::rng_for;
use crate::spectral::sup_norm_estimate;

/// `q = x^1 x^2 - x^2 x^1 - I`: `||q(x)|| >= 1` at every matrix pair, so
/// `G_q` is empty, while an operator pair can have `||q(T)|| = 1/2`.
pub struct CommutatorExperiment;

/// Smallest `||q(x)||` over random pairs, with the trace cross-check.
#[derive(Clone, Debug, Serialize)]
pub struct MinSearch {
    pub count: usize,
    pub max_level: usize,
    pub min_norm: f64,
    pub argmin_index: usize,
    pub argmin_level: usize,
    pub trace_cases: usize,
    /// Max of `|tr q(x) / n + 1|` scaled by the size of the entries.
    pub max_trace_error: f64,
    /// Trace-checked pairs whose norm fell below `|tr q(x)| / n`.
    pub trace_bound_failures: usize,
}

struct Sample {
    level: usize,
    norm: f64,
    trace_error: f64,
    below_trace_bound: bool,
}

/// Pair `i` has level `1 + i % max_level` and coordinates at independent
/// random scales between `1e-2` and `1e1`.
pub fn commutator_min_search(count: usize, max_level: usize, trace_cases: usize, seed: u64) -> Result<MinSearch> {
    let q = commutator_q();
    let samples: Vec<Sample> = (0..count)
        .into_par_iter()
        .map(|i| {
            let n = 1 + i % max_level;
            let mut rng = rng_for(seed, &[i as u64]);
            let mut coord = || {
                let scale = 10f64.powf(rng.random_range(-2.0..1.0));
                random_gaussian_matrix(n, n, &mut rng).scale_real(scale)
            };
            let x = MatrixTuple::new(vec![coord(), coord()])?;
            let qx = q.eval(&x)?;
            let norm = op_norm(&qx);
            let tr = qx.trace() / C64::new(n as f64, 0.0);
            let magnitude = 1.0 + op_norm(x.coord(0)) * op_norm(x.coord(1));
            Ok(Sample {
                level: n,
                norm,
                trace_error: (tr + C64::new(1.0, 0.0)).norm() / magnitude,
                below_trace_bound: norm < tr.norm() * (1.0 - 1e-12),
            })
        })
        .collect::<Result<_>>()?;
    let mut arg = 0;
    for (i, s) in samples.iter().enumerate() {
        if s.norm < samples[arg].norm {
            arg = i;
        }
    }
    let checked = &samples[..trace_cases.min(count)];
    Ok(MinSearch {
        count,
        max_level,
        min_norm: samples.get(arg).map_or(f64::INFINITY, |s| s.norm),
        argmin_index: arg,
        argmin_level: samples.get(arg).map_or(0, |s| s.level),
        trace_cases: checked.len(),
        max_trace_error: checked.iter().map(|s| s.trace_error).fold(0.0, f64::max),
        trace_bound_failures: checked.iter().filter(|s| s.below_trace_bound).count(),
    })
}

/// `(x*, x)` for the weighted shift `x e_k = sqrt((k+1)/2) e_{k+1}` on `C^n`.
/// Then `q = diag(-1/2, ..., -1/2, -(n+1)/2)`.
pub fn weighted_shift(n: usize) -> Result<MatrixTuple> {
    let x = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j + 1 {
            C64::new(((j + 1) as f64 / 2.0).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    MatrixTuple::new(vec![x.adjoint(), x])
}

impl Experiment for CommutatorExperiment {
    fn name(&self) -> &'static str {
        "commutator"
    }

    fn summary(&self) -> &'static str {
        "||x1 x2 - x2 x1 - I|| >= 1 on matrices versus 1/2 on a truncated weighted shift"
    }

    fn params(&self) -> &'static [(&'static str, &'static str)] {
        &[
            ("count", "random matrix pairs, default 10000"),
            ("max_level", "largest pair size, default 8"),
            ("trace_cases", "pairs also checked through the trace, default 100"),
            ("shift_size", "size of the weighted shift T, default 8"),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let count = ctx.params.usize("count", 10_000)?;
        let max_level = ctx.params.usize("max_level", 8)?.max(1);
        let trace_cases = ctx.params.usize("trace_cases", 100)?;
        let size = ctx.params.usize("shift_size", 8)?.max(2);
        let mut report = ExperimentReport::new(self.name(), ctx);

        let search = commutator_min_search(count, max_level, trace_cases, ctx.seed)?;
        report.checks.push(Check::at_least("min_q_norm", search.min_norm, 1.0 - 1e-10));
        report.checks.push(Check::at_most("max_trace_error", search.max_trace_error, 1e-10));
        report.checks.push(Check::at_most("trace_bound_failures", search.trace_bound_failures as f64, 0.0));

        let t = weighted_shift(size)?;
        let q = commutator_q();
        let qt = q.eval(&t)?;
        let full = op_norm(&qt);
        let compressed = op_norm(&qt.leading(size - 1));
        report.checks.push(Check::at_most("compressed_q_norm_error", (compressed - 0.5).abs(), 1e-12));
        report.put("q_norm_full", &full)?;
        report.put("q_norm_compressed", &compressed)?;
        report.put("q_norm_discrepancy", &(full - 0.5))?;
        report.put("T", &t)?;
        let witnesses = if search.min_norm > compressed + 1e-10 { search.count } else { 0 };
        report.put("sigma_cc_witnesses", &witnesses)?;
        report.notes.push(format!(
            "T is a {size}x{size} truncation; q(T) is -1/2 on the first {} basis vectors, the last corner carries the trace",
            size - 1
        ));

        let qm = PolyMatrix::scalar(q);
        let est = sup_norm_estimate(&qm, &qm, &ctx.sample)?;
        report.checks.push(Check::at_most("admissible_points_in_G_q", est.admissible_samples as f64, 0.0));
        report.put("min_search", &search)?;
        report.notes.extend(est.notes);
        Ok(report)
    }
}

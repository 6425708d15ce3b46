use rand::Rng;
use serde::Serialize;

use super::{Check, Experiment, ExperimentReport, RunContext};
use crate::error::Result;
use crate::freepoly::diag_delta;
use crate::funcalc::{sharp, CalcParams, CONTRACTIVITY_SLACK};
use crate::matrix::{op_norm, random_gaussian_matrix, MatrixTuple};
use crate::realization::Colligation;
use crate::rng::rng_for;

/// The free polydisc: `||diag(T^1, ..., T^d)|| = max_j ||T^j||`, and
/// contractivity of isometric realizations there.
pub struct PolydiscExperiment;

#[derive(Serialize)]
struct Instance {
    coord_norms: Vec<f64>,
    delta_norm: f64,
    discrepancy: f64,
    value_norm: f64,
}

/// Tuple whose coordinates have independent norms in `[lo, hi)`.
pub(crate) fn spread_tuple<R: Rng + ?Sized>(n: usize, d: usize, lo: f64, hi: f64, rng: &mut R) -> Result<MatrixTuple> {
    let coords = (0..d)
        .map(|_| {
            let g = random_gaussian_matrix(n, n, rng);
            let target = lo + (hi - lo) * rng.random::<f64>();
            g.scale_real(target / op_norm(&g))
        })
        .collect();
    MatrixTuple::new(coords)
}

impl Experiment for PolydiscExperiment {
    fn name(&self) -> &'static str {
        "polydisc"
    }

    fn summary(&self) -> &'static str {
        "norm of the diagonal defining matrix on the free polydisc"
    }

    fn params(&self) -> &'static [(&'static str, &'static str)] {
        &[
            ("d", "number of variables, default 3"),
            ("level", "matrix size of T, default 4"),
            ("instances", "number of random tuples, default 20"),
            ("m", "auxiliary dimension of the random realization, default 1"),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let d = ctx.params.usize("d", 3)?;
        let level = ctx.params.usize("level", 4)?;
        let instances = ctx.params.usize("instances", 20)?;
        let m = ctx.params.usize("m", 1)?;
        let delta = diag_delta(d)?;
        let mut rows = Vec::new();
        for i in 0..instances {
            let mut rng = rng_for(ctx.seed, &[i as u64]);
            let t = spread_tuple(level, d, 0.05, 0.95, &mut rng)?;
            let coord_norms: Vec<f64> = t.coords().iter().map(op_norm).collect();
            let max_coord = coord_norms.iter().copied().fold(0.0, f64::max);
            let delta_norm = op_norm(&delta.eval(&t)?);
            let f = Colligation::random_isometric(1, 1, d, d, m, &mut rng)?;
            let r = sharp(&f, &delta, &t, &CalcParams { tol: ctx.tol, ..CalcParams::with_s(1.0) })?;
            rows.push(Instance { discrepancy: (delta_norm - max_coord).abs(), coord_norms, delta_norm, value_norm: r.value_norm() });
        }
        let mut report = ExperimentReport::new(self.name(), ctx);
        let max = |f: fn(&Instance) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        report.checks.push(Check::at_most("max_norm_discrepancy", max(|r| r.discrepancy), 1e-12));
        report.checks.push(Check::at_most("max_value_norm", max(|r| r.value_norm), 1.0 + CONTRACTIVITY_SLACK));
        report.put("instances", &rows)?;
        Ok(report)
    }
}

use serde::Serialize;

use super::{tuple_with_delta_norm, Check, Experiment, ExperimentReport, RunContext};
use crate::error::Result;
use crate::freepoly::row_delta;
use crate::funcalc::{sharp, CalcParams, AGREEMENT_SLACK, CONTRACTIVITY_SLACK};
use crate::matrix::op_norm;
use crate::realization::{Colligation, HomogSeries};
use crate::rng::rng_for;

/// Random isometric realizations on the row ball evaluated at row
/// contractions: contractivity, the `1/(1-t)` bound, and absolute
/// convergence of the grouped series.
pub struct RowballExperiment;

#[derive(Serialize)]
struct Instance {
    t: f64,
    value_norm: f64,
    abs_series: f64,
    neumann_bound: f64,
    terms_used: usize,
    path_agreement: f64,
}

impl Experiment for RowballExperiment {
    fn name(&self) -> &'static str {
        "rowball"
    }

    fn summary(&self) -> &'static str {
        "isometric realizations on the row ball at random row contractions"
    }

    fn params(&self) -> &'static [(&'static str, &'static str)] {
        &[
            ("d", "number of variables, default 2"),
            ("m", "auxiliary dimension, default 2"),
            ("level", "matrix size of T, default 4"),
            ("instances", "number of random (F, T) pairs, default 20"),
            ("target", "||delta(T)||, default 0.9"),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let d = ctx.params.usize("d", 2)?;
        let m = ctx.params.usize("m", 2)?;
        let level = ctx.params.usize("level", 4)?;
        let instances = ctx.params.usize("instances", 20)?;
        let target = ctx.params.f64("target", 0.9)?;
        let delta = row_delta(d)?;
        let params = CalcParams { s: Some(1.0), tol: ctx.tol, ..CalcParams::default() };
        let mut rows = Vec::new();
        for i in 0..instances {
            let mut rng = rng_for(ctx.seed, &[i as u64]);
            let f = Colligation::random_isometric(1, 1, 1, d, m, &mut rng)?;
            let t = tuple_with_delta_norm(&delta, level, target, &mut rng)?;
            let r = sharp(&f, &delta, &t, &params)?;
            let y = delta.eval(&t)?;
            let mut series = HomogSeries::new(&f, &y)?;
            let abs_series: f64 = (0..=r.terms_used).map(|_| op_norm(&series.next_term())).sum();
            rows.push(Instance {
                t: r.t,
                value_norm: r.value_norm(),
                abs_series,
                neumann_bound: 1.0 / (1.0 - r.t),
                terms_used: r.terms_used,
                path_agreement: r.closed_form_agreement,
            });
        }
        let mut report = ExperimentReport::new(self.name(), ctx);
        let max = |f: fn(&Instance) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        report.checks.push(Check::at_most("max_value_norm", max(|r| r.value_norm), 1.0 + CONTRACTIVITY_SLACK));
        report.checks.push(Check::at_most(
            "max_abs_series_over_bound",
            max(|r| r.abs_series / r.neumann_bound),
            1.0 + CONTRACTIVITY_SLACK,
        ));
        report.checks.push(Check::at_most("max_path_agreement", max(|r| r.path_agreement), ctx.tol + AGREEMENT_SLACK));
        report.put("instances", &rows)?;
        Ok(report)
    }
}

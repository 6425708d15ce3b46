use std::path::Path;

use super::{Check, Experiment, ExperimentReport, RunContext};
use crate::error::{Error, Result};
use crate::funcalc::{sharp, CalcParams};
use crate::io::{read_json, Job};

/// Runs a user-supplied calculus job file.
pub struct CustomExperiment;

impl Experiment for CustomExperiment {
    fn name(&self) -> &'static str {
        "custom"
    }

    fn summary(&self) -> &'static str {
        "evaluate a job file (F, delta, T, params) and report its certificates"
    }

    fn params(&self) -> &'static [(&'static str, &'static str)] {
        &[("job", "path to a job JSON file"), ("s", "override the job's scaling"), ("tol", "override the job's tolerance")]
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let path = ctx
            .params
            .string("job")?
            .ok_or_else(|| Error::InvalidParameter("custom experiment needs job=<path>".into()))?;
        let job: Job = read_json(Path::new(&path))?;
        let params = CalcParams {
            s: match ctx.params.0.get("s") {
                Some(_) => Some(ctx.params.f64("s", 1.0)?),
                None => job.params.s,
            },
            tol: ctx.params.f64("tol", job.params.tol)?,
            max_terms: job.params.max_terms,
        };
        let calc = sharp(&job.f, &job.delta, &job.t, &params)?;
        let mut report = ExperimentReport::new(self.name(), ctx);
        for c in &calc.certificates {
            report.checks.push(Check::at_most(&c.name, c.value, c.bound));
        }
        report.put("calc", &calc)?;
        Ok(report)
    }
}

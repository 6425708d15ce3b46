use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use freecalc::experiments::{ExperimentRegistry, ExperimentSpec, Params, RunContext, SummaryRow};
use freecalc::freepoly::{delta_by_name, FreePoly, PolyMatrix};
use freecalc::funcalc::{sharp, CalcParams};
use freecalc::io::{read_json, to_json_pretty, validate_file, DocKind, Job, VERSION};
use freecalc::realization::Colligation;
use freecalc::spectral::{
    family_builder, k_spectral_check, sup_norm_estimate, FamilyKind, SampleConfig, SpectralReport,
};
use freecalc::{ComplexMatrix, MatrixTuple};

#[derive(Parser, Debug)]
#[command(name = "freecalc", version, about = "Free functional calculus for tuples of matrices")]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, env = "FREECALC_SEED", default_value_t = 0)]
    seed: u64,
    /// Matrix sizes to sample, e.g. `1-8` or `1,2,4`.
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Trials per level.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; the output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a colligation at an operator matrix or at δ(T).
    Eval {
        #[arg(long)]
        colligation: PathBuf,
        /// Matrix file (nI x nJ block matrix).
        #[arg(long, conflicts_with = "tuple")]
        point: Option<PathBuf>,
        /// Tuple file; requires --delta.
        #[arg(long, requires = "delta")]
        tuple: Option<PathBuf>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long = "delta-param", value_name = "KEY=VALUE")]
        delta_params: Vec<String>,
    },
    /// Run a functional-calculus job.
    Calc {
        job: PathBuf,
        /// Override the job's scaling.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        max_terms: Option<usize>,
    },
    /// Sampled lower bound on the sup norm of a polynomial over G_δ.
    Supnorm {
        /// Poly or polymatrix file.
        #[arg(long)]
        poly: PathBuf,
        /// Builder name (e_lambda, row, diag, gap, lens, commutator) or polymatrix file.
        #[arg(long)]
        delta: String,
        #[arg(long = "delta-param", value_name = "KEY=VALUE")]
        delta_params: Vec<String>,
        #[arg(long, default_value_t = 40)]
        ascent_steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        margin: f64,
        /// Sampler names, comma separated.
        #[arg(long, default_value = "gaussian,unitary_orbit")]
        samplers: String,
    },
    /// Compare ||P(T)|| against K times the sampled sup over a family.
    SpectralCheck {
        #[arg(long)]
        delta: String,
        #[arg(long = "delta-param", value_name = "KEY=VALUE")]
        delta_params: Vec<String>,
        #[arg(long)]
        tuple: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// `monomials:LEN`, `random:COUNT:LEN:TERMS` or a JSON list of polymatrices.
        #[arg(long, default_value = "monomials:2")]
        family: String,
        #[arg(long, default_value_t = 40)]
        ascent_steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        margin: f64,
    },
    /// Run a named experiment.
    Experiment {
        /// One of: commutator, custom, gap, lens, polydisc, rowball.
        name: String,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Check an input file against its schema.
    Validate { path: PathBuf },
}

/// Exit status of a completed command.
enum Outcome {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Eval { colligation, point, tuple, delta, delta_params } => {
            let f: Colligation = read_json(colligation)?;
            let (y, source) = match (point, tuple) {
                (Some(p), _) => (read_json::<ComplexMatrix>(p)?, json!({ "point": p })),
                (None, Some(t)) => {
                    let x: MatrixTuple = read_json(t)?;
                    let d = load_delta(delta.as_deref().unwrap_or_default(), delta_params)?;
                    (d.eval(&x)?, json!({ "tuple": t, "delta": delta, "delta_params": delta_params }))
                }
                (None, None) => bail!("eval needs --point or --tuple with --delta"),
            };
            let value = f.eval(&y)?;
            reject_csv(cli, "eval")?;
            emit(cli, "eval", source, &json!({ "level": f.level_of(&y)?, "value": value }))?;
            Ok(Outcome::Ok)
        }
        Command::Calc { job, s, max_terms } => {
            let job: Job = read_json(job)?;
            let params = CalcParams {
                s: s.or(job.params.s),
                tol: cli.tol,
                max_terms: max_terms.unwrap_or(job.params.max_terms),
            };
            let report = sharp(&job.f, &job.delta, &job.t, &params)?;
            reject_csv(cli, "calc")?;
            emit(cli, "calc", json!({ "params": params }), &report)?;
            Ok(if report.all_passed() { Outcome::Ok } else { Outcome::CheckFailed })
        }
        Command::Supnorm { poly, delta, delta_params, ascent_steps, margin, samplers } => {
            let p = load_poly(poly)?;
            let d = load_delta(delta, delta_params)?;
            let cfg = SampleConfig {
                ascent_steps: *ascent_steps,
                margin: *margin,
                samplers: samplers.split(',').map(|s| s.trim().to_string()).collect(),
                ..sample_config(cli)?
            };
            let report = sup_norm_estimate(&p, &d, &cfg)?;
            let extra = json!({ "poly": poly, "delta": delta, "delta_params": delta_params, "sample": cfg });
            if cli.format == Format::Csv {
                write_csv(cli, &summary_rows(&report))?;
            } else {
                emit(cli, "supnorm", extra, &report)?;
            }
            Ok(Outcome::Ok)
        }
        Command::SpectralCheck { delta, delta_params, tuple, k, family, ascent_steps, margin } => {
            let d = load_delta(delta, delta_params)?;
            let t: MatrixTuple = read_json(tuple)?;
            let fam = load_family(family, d.d(), cli.seed)?;
            let cfg = SampleConfig { ascent_steps: *ascent_steps, margin: *margin, ..sample_config(cli)? };
            let report = k_spectral_check(&d, &t, *k, &fam, &cfg, None)?;
            reject_csv(cli, "spectral-check")?;
            let extra = json!({ "delta": delta, "delta_params": delta_params, "tuple": tuple, "k": k, "family": family, "sample": cfg });
            emit(cli, "spectral-check", extra, &report)?;
            Ok(if report.definite_violations() == 0 { Outcome::Ok } else { Outcome::CheckFailed })
        }
        Command::Experiment { name, params } => {
            let registry = ExperimentRegistry::default();
            let request = ExperimentSpec::new(name, Params::from_pairs(params)?, cli.seed, cli.out.clone(), &registry)?;
            let mut ctx = RunContext::new(request.seed, request.params.clone());
            ctx.sample = sample_config(cli)?;
            ctx.tol = cli.tol;
            let report = registry.get(&request.name)?.run(&ctx)?;
            if cli.format == Format::Csv {
                write_csv(cli, &report.summary)?;
            } else {
                emit(cli, "experiment", json!({ "name": request.name, "params": request.params, "sample": ctx.sample }), &report)?;
            }
            Ok(if report.passed() { Outcome::Ok } else { Outcome::CheckFailed })
        }
        Command::Validate { path } => {
            let v = validate_file(path).with_context(|| format!("reading {}", path.display()))?;
            reject_csv(cli, "validate")?;
            if !v.ok {
                let at = match (v.line, v.column) {
                    (Some(l), Some(c)) => format!(" at line {l} column {c}"),
                    _ => String::new(),
                };
                let kind = v.kind.map(DocKind::name).unwrap_or("document");
                bail!("{}: invalid {kind}{at}: {}", path.display(), v.message);
            }
            emit(cli, "validate", json!({ "path": path }), &v)?;
            Ok(Outcome::Ok)
        }
    }
}

fn reject_csv(cli: &Cli, command: &str) -> anyhow::Result<()> {
    if cli.format == Format::Csv {
        bail!("csv output is available for supnorm and experiment, not {command}");
    }
    Ok(())
}

fn parse_levels(arg: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in arg.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
            if a > b {
                bail!("empty level range {part}");
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().with_context(|| format!("bad level `{part}`"))?);
        }
    }
    if out.is_empty() {
        bail!("no levels given");
    }
    Ok(out)
}

fn sample_config(cli: &Cli) -> anyhow::Result<SampleConfig> {
    let mut cfg = SampleConfig::default().with_seed(cli.seed);
    if let Some(l) = &cli.levels {
        cfg.levels = parse_levels(l)?;
    }
    if let Some(t) = cli.trials {
        cfg.trials_per_level = t;
    }
    Ok(cfg)
}

fn load_delta(arg: &str, params: &[String]) -> anyhow::Result<PolyMatrix> {
    let path = Path::new(arg);
    if arg.ends_with(".json") || path.is_file() {
        return Ok(read_json(path)?);
    }
    let mut map = BTreeMap::new();
    for (k, v) in Params::from_pairs(params)?.0 {
        let x = v.as_f64().with_context(|| format!("delta parameter {k} must be numeric"))?;
        map.insert(k, x);
    }
    Ok(delta_by_name(arg, &map)?)
}

fn load_poly(path: &Path) -> anyhow::Result<PolyMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(match DocKind::detect(&value) {
        Some(DocKind::Poly) => PolyMatrix::scalar(serde_json::from_value::<FreePoly>(value)?),
        Some(DocKind::PolyMatrix) => serde_json::from_value(value)?,
        _ => bail!("{} is neither a poly nor a polymatrix", path.display()),
    })
}

fn load_family(arg: &str, d: usize, seed: u64) -> anyhow::Result<Vec<PolyMatrix>> {
    let parts: Vec<&str> = arg.split(':').collect();
    let num = |i: usize| -> anyhow::Result<usize> {
        parts.get(i).with_context(|| format!("family `{arg}` is missing a field"))?.parse().context("family field")
    };
    let kind = match parts[0] {
        "monomials" => FamilyKind::Monomials { max_len: num(1)? },
        "random" => FamilyKind::RandomPolys { count: num(1)?, max_len: num(2)?, terms: num(3)?, seed },
        _ => return Ok(read_json(Path::new(arg))?),
    };
    Ok(family_builder(&kind, d)?)
}

fn summary_rows(r: &SpectralReport) -> Vec<SummaryRow> {
    r.levels
        .iter()
        .map(|l| SummaryRow { level: l.level, trials: l.trials, estimate: l.estimate, witness_id: l.witness_id.clone() })
        .collect()
}

/// Wraps a report with the tool version and the full configuration.
fn emit<T: Serialize>(cli: &Cli, command: &str, extra: Value, report: &T) -> anyhow::Result<()> {
    let doc = json!({
        "tool": "freecalc",
        "version": VERSION,
        "command": command,
        "config": {
            "seed": cli.seed,
            "levels": cli.levels,
            "trials": cli.trials,
            "tol": cli.tol,
            "format": cli.format,
            "args": extra,
        },
        "report": report,
    });
    write_out(cli, &to_json_pretty(&doc)?)
}

fn write_csv(cli: &Cli, rows: &[SummaryRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "trials", "estimate", "witness_id"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.trials.to_string(),
            r.estimate.map(|e| format!("{e:.17e}")).unwrap_or_default(),
            r.witness_id.clone().unwrap_or_default(),
        ])?;
    }
    write_out(cli, &String::from_utf8(w.into_inner()?)?)
}

fn write_out(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

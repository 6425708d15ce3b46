//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use freecalc::experiments::{
    commutator_min_search, shift_counter_instance, tuple_with_delta_norm, ExperimentRegistry, Params, RunContext,
};
use freecalc::freepoly::{diag_delta, e_lambda, gap_delta, lens_delta, row_delta};
use freecalc::funcalc::{poly_consistency, sharp, CalcParams};
use freecalc::io::{to_json_pretty, Job};
use freecalc::matrix::{direct_sum, op_norm, random_gaussian_matrix, random_similarity, random_tuple_with};
use freecalc::realization::homog_extract_dft;
use freecalc::rng::rng_for;
use freecalc::spectral::{block_norms, compression_check, sup_norm_estimate, CompressionMode, SampleConfig};
use freecalc::{Colligation, ComplexMatrix, FreePoly, MatrixTuple, PolyMatrix, Word, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;
const ONE: C64 = C64::new(1.0, 0.0);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("contractivity of isometric realizations", contractivity),
        ("series norm bound", series_norm_bound),
        ("series agrees with closed form", series_vs_closed_form),
        ("homogeneous term bound and DFT extraction", homogeneous_terms),
        ("defect identity", defect_identity),
        ("direct sums and similarity", nc_axioms),
        ("free polydisc norm", polydisc_norm),
        ("gap domain sup estimate", gap_domain),
        ("commutator lower bound", commutator_bound),
        ("compression inequality", compression),
        ("polynomial consistency", polynomial_consistency),
        ("block matrix norm", block_matrix_norm),
        ("experiment determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let tag = if out.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:02} {name}: {} ({:.1} s)", i + 1, out.detail, start.elapsed().as_secs_f64());
        if !out.passed {
            failures += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// A random isometric realization over one of the linear defining matrices,
/// with a tuple `T` such that `||δ(T)|| <= 0.9`.
struct Instance {
    f: Colligation,
    delta: PolyMatrix,
    t: MatrixTuple,
}

fn instance(i: usize) -> Instance {
    let mut rng = rng_for(SEED, &[1, i as u64]);
    let (delta, i_dim, j_dim) = match i % 3 {
        0 => {
            let i_dim = rng.random_range(1..=3);
            let j_dim = rng.random_range(i_dim..=3);
            (e_lambda(i_dim, j_dim).unwrap(), i_dim, j_dim)
        }
        1 => {
            let d = rng.random_range(1..=3);
            (diag_delta(d).unwrap(), d, d)
        }
        _ => {
            let d = rng.random_range(1..=3);
            (row_delta(d).unwrap(), 1, d)
        }
    };
    let m = rng.random_range(1..=4);
    let k = rng.random_range(1..=2);
    let f = Colligation::random_isometric(k, k, i_dim, j_dim, m, &mut rng).unwrap();
    let n = rng.random_range(1..=4);
    let target = rng.random_range(0.05..=0.9);
    let t = tuple_with_delta_norm(&delta, n, target, &mut rng).unwrap();
    Instance { f, delta, t }
}

/// `Y_M = Σ E_ij ⊗ I_m ⊗ Y_ij`, built independently of the library.
fn oracle_aux(f: &Colligation, y: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let (i_dim, j_dim, m) = (f.i_dim(), f.j_dim(), f.m());
    let mut out = ComplexMatrix::zeros(i_dim * m * n, j_dim * m * n);
    for i in 0..i_dim {
        for j in 0..j_dim {
            let mut e = ComplexMatrix::zeros(i_dim, j_dim);
            e.set(i, j, ONE);
            let term = e.kron(&ComplexMatrix::identity(m)).kron(&y.block(i * n, j * n, n, n));
            out = &out + &term;
        }
    }
    out
}

struct OracleBlocks {
    a: ComplexMatrix,
    b: ComplexMatrix,
    c: ComplexMatrix,
    d: ComplexMatrix,
    y_m: ComplexMatrix,
}

fn oracle_blocks(f: &Colligation, y: &ComplexMatrix, n: usize) -> OracleBlocks {
    let id = ComplexMatrix::identity(n);
    OracleBlocks { a: f.a().kron(&id), b: f.b().kron(&id), c: f.c().kron(&id), d: f.d().kron(&id), y_m: oracle_aux(f, y, n) }
}

/// `A + B Y_M (I - D Y_M)^{-1} C` via a linear solve.
fn oracle_value(f: &Colligation, y: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let o = oracle_blocks(f, y, n);
    let dy = &o.d * &o.y_m;
    let lhs = &ComplexMatrix::identity(dy.rows()) - &dy;
    let u = lhs.solve(&o.c).unwrap();
    &o.a + &(&(&o.b * &o.y_m) * &u)
}

fn scaled_point(inst: &Instance, s: f64) -> ComplexMatrix {
    inst.delta.eval(&inst.t).unwrap().scale_real(1.0 / s)
}

fn contractivity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut errors = 0;
    for i in 0..100 {
        let inst = instance(i);
        match sharp(&inst.f, &inst.delta, &inst.t, &CalcParams::default()) {
            Ok(r) => worst = worst.max(r.value_norm()),
            Err(_) => errors += 1,
        }
    }
    let elapsed = start.elapsed();
    let passed = errors == 0 && worst <= 1.0 + 1e-8 && elapsed <= Duration::from_secs(60);
    Outcome::new(
        passed,
        format!("max ||value|| = {worst:.12} (bound 1 + 1e-8), {errors} errors over 100 instances, {:.2} s of 60 s", elapsed.as_secs_f64()),
    )
}

fn series_norm_bound() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut errors = 0;
    for i in 0..100 {
        let inst = instance(i);
        match sharp(&inst.f, &inst.delta, &inst.t, &CalcParams::default()) {
            Ok(r) => worst_excess = worst_excess.max(r.series_norm() - 1.0 / (1.0 - r.t)),
            Err(_) => errors += 1,
        }
    }
    Outcome::new(
        errors == 0 && worst_excess <= 1e-6,
        format!("max of ||series|| - 1/(1-t) = {worst_excess:.3e} (bound 1e-6), {errors} errors"),
    )
}

fn series_vs_closed_form() -> Outcome {
    let mut worst_disc = 0.0f64;
    let mut worst_tail = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut errors = 0;
    for i in 0..100 {
        let inst = instance(i);
        let r = match sharp(&inst.f, &inst.delta, &inst.t, &CalcParams::default()) {
            Ok(r) => r,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let closed = oracle_value(&inst.f, &scaled_point(&inst, r.s), inst.t.level());
        worst_disc = worst_disc.max(op_norm(&(&r.series_value - &closed)));
        worst_oracle = worst_oracle.max(op_norm(&(&r.value - &closed)));
        worst_tail = worst_tail.max(r.tail_bound);
    }
    Outcome::new(
        errors == 0 && worst_tail <= 1e-10 && worst_disc <= 1e-9 && worst_oracle <= 1e-9,
        format!(
            "max tail bound {worst_tail:.2e} (<= 1e-10), max series vs closed form {worst_disc:.2e} (<= 1e-9), \
             library vs independent closed form {worst_oracle:.2e}"
        ),
    )
}

fn homogeneous_terms() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_dft = 0.0f64;
    let mut errors = 0;
    for c in 0..50 {
        let mut rng = rng_for(SEED, &[4, c]);
        let i_dim = rng.random_range(1..=3);
        let j_dim = rng.random_range(i_dim..=3);
        let m = rng.random_range(1..=4);
        let k = rng.random_range(1..=2);
        let f = Colligation::random_isometric(k, k, i_dim, j_dim, m, &mut rng).unwrap();
        let delta = e_lambda(i_dim, j_dim).unwrap();
        for p in 0..20 {
            let n = rng.random_range(1..=3);
            let target = rng.random_range(0.05..0.98);
            let x = tuple_with_delta_norm(&delta, n, target, &mut rng).unwrap();
            let y = delta.eval(&x).unwrap();
            let y_norm = op_norm(&y);
            let terms: Vec<ComplexMatrix> = (0..=12).map(|deg| f.homog_term(deg, &y).unwrap()).collect();
            for (deg, term) in terms.iter().enumerate() {
                worst_excess = worst_excess.max(op_norm(term) - y_norm.powi(deg as i32));
            }
            if p < 3 {
                let small = y.scale_real(0.5 / y_norm);
                for (deg, _) in terms.iter().enumerate() {
                    let algebraic = f.homog_term(deg, &small).unwrap();
                    match homog_extract_dft(&f, &small, deg, 64, 1e-12) {
                        Ok(ext) => worst_dft = worst_dft.max(op_norm(&(&ext.value - &algebraic))),
                        Err(_) => errors += 1,
                    }
                }
            }
        }
    }
    Outcome::new(
        errors == 0 && worst_excess <= 1e-8 && worst_dft <= 1e-10,
        format!(
            "max ||P_k(Y)|| - ||Y||^k = {worst_excess:.2e} (<= 1e-8) for k <= 12 over 1000 points, \
             max DFT vs algebraic {worst_dft:.2e} (<= 1e-10), {errors} errors"
        ),
    )
}

fn defect_identity() -> Outcome {
    let mut worst_residual = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for i in 0..50 {
        let inst = instance(i);
        let s = 1.0;
        let y = scaled_point(&inst, s);
        let n = inst.t.level();
        let value = sharp(&inst.f, &inst.delta, &inst.t, &CalcParams::with_s(s)).unwrap().value;
        let o = oracle_blocks(&inst.f, &y, n);
        let dy = &o.d * &o.y_m;
        let u = (&ComplexMatrix::identity(dy.rows()) - &dy).solve(&o.c).unwrap();
        let inner = &ComplexMatrix::identity(o.y_m.cols()) - &(&o.y_m.adjoint() * &o.y_m);
        let rhs = &(&u.adjoint() * &inner) * &u;
        let lhs = &ComplexMatrix::identity(value.cols()) - &(&value.adjoint() * &value);
        worst_residual = worst_residual.max(op_norm(&(&lhs - &rhs)));
        let herm = (&rhs + &rhs.adjoint()).scale_real(0.5);
        min_eig = min_eig.min(herm.hermitian_eigenvalues().into_iter().fold(f64::INFINITY, f64::min));
    }
    Outcome::new(
        worst_residual <= 1e-9 && min_eig >= -1e-9,
        format!("max residual {worst_residual:.2e} (<= 1e-9), min eigenvalue of right side {min_eig:.2e} (>= -1e-9)"),
    )
}

fn random_poly(d: usize, rng: &mut ChaCha8Rng) -> FreePoly {
    let terms = (0..rng.random_range(1..=5))
        .map(|_| {
            let len = rng.random_range(0..=4);
            let w = Word::new((0..len).map(|_| rng.random_range(0..d as u32)).collect());
            (w, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
        .collect::<Vec<_>>();
    FreePoly::from_terms(d, terms).unwrap()
}

/// Blockwise direct sum of two `rows x cols` grids of square blocks.
fn blockwise_sum(a: &ComplexMatrix, b: &ComplexMatrix, rows: usize, cols: usize, na: usize, nb: usize) -> ComplexMatrix {
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

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    op_norm(&(a - b)) / op_norm(b).max(1.0)
}

fn nc_axioms() -> Outcome {
    let mut worst_sum = 0.0f64;
    let mut worst_sim = 0.0f64;
    for c in 0..200u64 {
        let mut rng = rng_for(SEED, &[6, c]);
        let na = rng.random_range(1..=3);
        let nb = rng.random_range(1..=3);
        let sim = random_similarity(na, 10.0, &mut rng).unwrap();
        if c % 2 == 0 {
            let d = rng.random_range(1..=3);
            let p = random_poly(d, &mut rng);
            let x = random_tuple_with(na, d, rng.random_range(0.2..1.5), &mut rng);
            let z = random_tuple_with(nb, d, rng.random_range(0.2..1.5), &mut rng);
            let px = p.eval(&x).unwrap();
            let pz = p.eval(&z).unwrap();
            let joint = p.eval(&direct_sum(&x, &z).unwrap()).unwrap();
            worst_sum = worst_sum.max(op_norm(&(&joint - &blockwise_sum(&px, &pz, 1, 1, na, nb))));
            let moved = p.eval(&sim.apply(&x).unwrap()).unwrap();
            worst_sim = worst_sim.max(rel(&moved, &sim.conjugate(&px)));
        } else {
            let i_dim = rng.random_range(1..=2);
            let j_dim = rng.random_range(i_dim..=3);
            let k = rng.random_range(1..=2);
            let f = Colligation::random_isometric(k, k, i_dim, j_dim, rng.random_range(1..=3), &mut rng).unwrap();
            let delta = e_lambda(i_dim, j_dim).unwrap();
            let x = tuple_with_delta_norm(&delta, na, rng.random_range(0.1..0.9), &mut rng).unwrap();
            let z = tuple_with_delta_norm(&delta, nb, rng.random_range(0.1..0.9), &mut rng).unwrap();
            let fx = f.eval(&delta.eval(&x).unwrap()).unwrap();
            let fz = f.eval(&delta.eval(&z).unwrap()).unwrap();
            let joint = f.eval(&delta.eval(&direct_sum(&x, &z).unwrap()).unwrap()).unwrap();
            worst_sum = worst_sum.max(op_norm(&(&joint - &blockwise_sum(&fx, &fz, k, k, na, nb))));
            let moved = f.eval(&delta.eval(&sim.apply(&x).unwrap()).unwrap()).unwrap();
            worst_sim = worst_sim.max(rel(&moved, &sim.conjugate_blocks(&fx, k, k)));
        }
    }
    Outcome::new(
        worst_sum <= 1e-10 && worst_sim <= 1e-8,
        format!(
            "200 cases: max direct-sum error {worst_sum:.2e} (<= 1e-10), max relative similarity error {worst_sim:.2e} \
             (<= 1e-8, condition <= 10)"
        ),
    )
}

fn polydisc_norm() -> Outcome {
    let mut worst = 0.0f64;
    for c in 0..100u64 {
        let mut rng = rng_for(SEED, &[7, c]);
        let d = [2, 3, 5][c as usize % 3];
        let n = rng.random_range(1..=5);
        let coords: Vec<ComplexMatrix> =
            (0..d).map(|_| random_gaussian_matrix(n, n, &mut rng).scale_real(rng.random_range(0.1..2.0))).collect();
        let t = MatrixTuple::new(coords).unwrap();
        let lhs = op_norm(&diag_delta(d).unwrap().eval(&t).unwrap());
        let rhs = max(t.coords().iter().map(op_norm));
        worst = worst.max((lhs - rhs).abs());
    }
    Outcome::new(worst <= 1e-12, format!("max |‖diag(T)‖ - max_j ‖T^j‖| = {worst:.2e} (<= 1e-12) over 100 tuples"))
}

fn gap_domain() -> Outcome {
    let start = Instant::now();
    let p = PolyMatrix::scalar(
        FreePoly::from_terms(2, [(Word::new(vec![0, 1]), ONE), (Word::empty(), -ONE)]).unwrap(),
    );
    let mut parts = Vec::new();
    let mut passed = true;
    for eps in [0.05, 0.1, 0.15] {
        let delta = gap_delta(eps).unwrap();
        let mut cfg = SampleConfig::default().with_seed(SEED);
        let mut rep = sup_norm_estimate(&p, &delta, &cfg).unwrap();
        while rep.admissible_samples < 10_000 && cfg.trials_per_level < 4096 {
            cfg.trials_per_level *= 2;
            rep = sup_norm_estimate(&p, &delta, &cfg).unwrap();
        }
        let bound = eps + 4.0 * eps * eps;
        let ok = rep.admissible_samples >= 10_000 && rep.estimate.is_some_and(|v| v <= bound);
        passed &= ok;
        parts.push(format!(
            "eps {eps}: {:.4} <= {bound:.4} with {} samples",
            rep.estimate.unwrap_or(f64::NAN),
            rep.admissible_samples
        ));
    }
    let elapsed = start.elapsed();
    passed &= elapsed <= Duration::from_secs(180);
    Outcome::new(passed, format!("{}; {:.1} s of 180 s", parts.join("; "), elapsed.as_secs_f64()))
}

fn commutator_bound() -> Outcome {
    let s = commutator_min_search(10_000, 8, 100, SEED).unwrap();
    Outcome::new(
        s.min_norm >= 1.0 - 1e-10 && s.trace_bound_failures == 0 && s.max_trace_error <= 1e-10,
        format!(
            "min ||q(x)|| = {:.15} over {} pairs (>= 1 - 1e-10); trace check on {} pairs: max error {:.2e}, {} failures",
            s.min_norm, s.count, s.trace_cases, s.max_trace_error, s.trace_bound_failures
        ),
    )
}

/// Linear and affine defining matrices used for the compression sweep.
fn affine_delta(c: u64) -> PolyMatrix {
    match c % 4 {
        0 => diag_delta(2).unwrap(),
        1 => row_delta(3).unwrap(),
        2 => e_lambda(2, 2).unwrap(),
        _ => lens_delta(),
    }
}

fn compression() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for c in 0..100u64 {
        let mut rng = rng_for(SEED, &[10, c]);
        let delta = affine_delta(c);
        let level = rng.random_range(2..=8);
        let n = rng.random_range(1..=level);
        let s = random_tuple_with(level, delta.d(), rng.random_range(0.1..2.0), &mut rng);
        let rep = compression_check(&delta, &s, n, CompressionMode::Assert).unwrap();
        worst = worst.max(rep.norm_compressed - rep.norm_full);
        if !rep.inequality_holds {
            failures += 1;
        }
    }
    let shift = shift_counter_instance(0.1, 40, 20).unwrap();
    let counter = !shift.inequality_holds && shift.delta_norm_full < 1.0 && shift.delta_norm_compressed > 1.0;
    Outcome::new(
        failures == 0 && worst <= 1e-10 && counter,
        format!(
            "max ||δ(x_N)|| - ||δ(S)|| = {worst:.2e} (<= 1e-10) over 100 cases; cyclic shift pair: \
             ||δ(S)|| = {:.4}, ||δ(x_N)|| = {:.4}, ||p(x_N)|| = {:.4}",
            shift.delta_norm_full, shift.delta_norm_compressed, shift.p_norm_compressed
        ),
    )
}

/// Position of the entry `x^j` in a linear defining matrix.
fn entry_of(delta: &PolyMatrix, j: usize) -> usize {
    let target = FreePoly::coordinate(delta.d(), j).unwrap();
    delta.entries().iter().position(|e| *e == target).unwrap()
}

fn polynomial_consistency() -> Outcome {
    let s = 0.95;
    let mut worst = 0.0f64;
    let mut hypothesis_failures = 0;
    let mut failures = 0;
    for c in 0..50u64 {
        let mut rng = rng_for(SEED, &[11, c]);
        let (delta, i_dim, j_dim) = match c % 3 {
            0 => (diag_delta(2).unwrap(), 2, 2),
            1 => (row_delta(3).unwrap(), 1, 3),
            _ => (e_lambda(2, 2).unwrap(), 2, 2),
        };
        let d = delta.d();
        let subs: Vec<FreePoly> = (0..d)
            .map(|j| FreePoly::coordinate(i_dim * j_dim, entry_of(&delta, j)).unwrap().scale(C64::new(s, 0.0)))
            .collect();
        let (rows, cols) = if c % 2 == 0 { (1, 1) } else { (2, 2) };
        let p = PolyMatrix::new(rows, cols, (0..rows * cols).map(|_| random_poly(d, &mut rng)).collect()).unwrap();
        let lifted = p.map(|e| e.compose(&subs).unwrap());
        let f = freecalc::realization::poly_to_colligation(&lifted, i_dim, j_dim).unwrap();
        let t = tuple_with_delta_norm(&delta, rng.random_range(1..=4), rng.random_range(0.1..0.9), &mut rng).unwrap();
        let rep = poly_consistency(&p, &f, &delta, &t, &CalcParams::with_s(s), None).unwrap();
        if !rep.hypothesis_holds {
            hypothesis_failures += 1;
        }
        if !rep.passed {
            failures += 1;
        }
        worst = worst.max(rep.discrepancy);
    }
    Outcome::new(
        hypothesis_failures == 0 && failures == 0 && worst <= 1e-9,
        format!("max discrepancy {worst:.2e} (<= 1e-9) over 50 compiled realizations, {hypothesis_failures} outside hypothesis"),
    )
}

fn block_matrix_norm() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for c in 0..100u64 {
        let mut rng = rng_for(SEED, &[12, c]);
        let row_sizes: Vec<usize> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(1..=4)).collect();
        let col_sizes: Vec<usize> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(1..=4)).collect();
        let grid: Vec<Vec<ComplexMatrix>> = row_sizes
            .iter()
            .map(|&r| {
                col_sizes
                    .iter()
                    .map(|&k| {
                        if rng.random::<f64>() < 0.2 {
                            ComplexMatrix::zeros(r, k)
                        } else {
                            random_gaussian_matrix(r, k, &mut rng).scale_real(rng.random_range(0.01..10.0))
                        }
                    })
                    .collect()
            })
            .collect();
        let b = block_norms(&grid).unwrap();
        worst = worst.max(b.max_entry - b.assembled);
    }
    Outcome::new(worst <= 1e-12, format!("max of (max block norm - assembled norm) = {worst:.2e} (<= 1e-12) over 100 grids"))
}

fn custom_job_file() -> std::path::PathBuf {
    let mut rng = rng_for(SEED, &[13]);
    let delta = row_delta(2).unwrap();
    let f = Colligation::random_isometric(1, 1, 1, 2, 2, &mut rng).unwrap();
    let t = tuple_with_delta_norm(&delta, 3, 0.7, &mut rng).unwrap();
    let job = Job { f, delta, t, params: CalcParams::default() };
    let path = std::env::temp_dir().join(format!("freecalc-acceptance-job-{}.json", std::process::id()));
    std::fs::write(&path, to_json_pretty(&job).unwrap()).unwrap();
    path
}

fn determinism() -> Outcome {
    let registry = ExperimentRegistry::default();
    let job = custom_job_file();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut differing = Vec::new();
    let mut errors = Vec::new();
    for exp in registry.iter() {
        let params = if exp.name() == "custom" {
            Params::from_pairs(&[format!("job={}", job.display())]).unwrap()
        } else {
            Params::default()
        };
        let ctx = RunContext::new(7, params);
        let first = exp.run(&ctx).and_then(|r| to_json_pretty(&r));
        let second = exp.run(&ctx).and_then(|r| to_json_pretty(&r));
        let serial = single.install(|| exp.run(&ctx).and_then(|r| to_json_pretty(&r)));
        match (first, second, serial) {
            (Ok(a), Ok(b), Ok(c)) => {
                if a != b || a != c {
                    differing.push(exp.name());
                }
            }
            _ => errors.push(exp.name()),
        }
    }
    let _ = std::fs::remove_file(&job);
    let names = registry.names().join(", ");
    Outcome::new(
        differing.is_empty() && errors.is_empty(),
        format!(
            "{names}: reports byte-identical across reruns and a single-thread pool; differing {differing:?}, errors {errors:?}"
        ),
    )
}

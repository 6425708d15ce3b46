//! The functional calculus `Φ♯(T) = F♯(δ(T)/s)`: a realization `F` on the
//! operator ball is evaluated at the scaled defining matrix of a tuple.
//!
//! Every run computes the closed form and the truncated homogeneous series
//! and reports how far apart they are.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freepoly::PolyMatrix;
use crate::matrix::{op_norm, ComplexMatrix, MatrixTuple};
use crate::realization::{Colligation, HomogSeries};
use crate::spectral::{admissible_points, SampleConfig};

/// Slack added to every path-agreement certificate.
pub const AGREEMENT_SLACK: f64 = 1e-9;

/// Slack on `||Φ♯(T)|| <= 1` for isometric realizations.
pub const CONTRACTIVITY_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalcParams {
    /// Scaling in `(0, 1]`; `None` picks `(||δ(T)|| + 1) / 2`.
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_terms() -> usize {
    100_000
}

impl Default for CalcParams {
    fn default() -> Self {
        Self { s: None, tol: default_tol(), max_terms: default_max_terms() }
    }
}

impl CalcParams {
    pub fn with_s(s: f64) -> Self {
        Self { s: Some(s), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.s {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be positive".into()));
        }
        Ok(())
    }
}

/// A named numeric bound and whether it held.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Certificate {
    fn new(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, passed: value <= bound }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CalcReport {
    /// Closed-form value, a `k2 x k1` grid of `n x n` blocks.
    pub value: ComplexMatrix,
    pub series_value: ComplexMatrix,
    pub s: f64,
    /// `||δ(T)||` before scaling.
    pub delta_norm: f64,
    /// `||δ(T)/s||`.
    pub t: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
    pub closed_form_agreement: f64,
    /// True when `F` is a certified isometry and the geometric tail applies.
    pub isometric_path: bool,
    pub certificates: Vec<Certificate>,
    pub notes: Vec<String>,
}

impl CalcReport {
    pub fn all_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    pub fn value_norm(&self) -> f64 {
        op_norm(&self.value)
    }

    pub fn series_norm(&self) -> f64 {
        op_norm(&self.series_value)
    }
}

/// Returned when the series needs more than `max_terms` terms.
#[derive(Debug)]
pub struct SeriesCapExceeded {
    pub partial: Box<CalcReport>,
}

/// `t^(N+1) / (1 - t)`, the tail of `Σ t^k` after `N`.
pub fn tail_bound(t: f64, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::NotContractive { t });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(t.powf(n as f64 + 1.0) / (1.0 - t))
}

/// Smallest `N` with `tail_bound(t, N) <= tol`.
pub fn terms_for_tol(t: f64, tol: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::NotContractive { t });
    }
    if t == 0.0 {
        return Ok(0);
    }
    let guess = ((tol * (1.0 - t)).ln() / t.ln() - 1.0).ceil().max(0.0) as usize;
    let mut n = guess.saturating_sub(1);
    while tail_bound(t, n)? > tol {
        n += 1;
    }
    Ok(n)
}

/// Evaluates `F♯(δ(T)/s)` by the closed form and the series.
///
/// On a series-cap failure the error message carries the partial figures;
/// use [`sharp_detailed`] to receive the partial report itself.
pub fn sharp(f: &Colligation, delta: &PolyMatrix, t: &MatrixTuple, params: &CalcParams) -> Result<CalcReport> {
    match sharp_detailed(f, delta, t, params)? {
        Ok(r) => Ok(r),
        Err(cap) => Err(Error::InvalidParameter(format!(
            "series cap of {} terms exceeded; partial sum has tail bound {:e} and closed-form gap {:e}",
            cap.partial.terms_used, cap.partial.tail_bound, cap.partial.closed_form_agreement
        ))),
    }
}

pub fn sharp_detailed(
    f: &Colligation,
    delta: &PolyMatrix,
    t: &MatrixTuple,
    params: &CalcParams,
) -> Result<Result<CalcReport, SeriesCapExceeded>> {
    params.validate()?;
    if delta.shape() != (f.i_dim(), f.j_dim()) {
        return Err(Error::Shape(format!(
            "delta is {}x{} but the realization lives on {}x{} operator matrices",
            delta.rows(),
            delta.cols(),
            f.i_dim(),
            f.j_dim()
        )));
    }
    let dt = delta.eval(t)?;
    let delta_norm = op_norm(&dt);
    let s = params.s.unwrap_or((delta_norm + 1.0) / 2.0);
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::NotContractive { t: delta_norm });
    }
    let y = dt.scale_real(1.0 / s);
    let tn = op_norm(&y);
    let isometric_path = f.isometric_certified();
    if isometric_path && tn >= 1.0 {
        return Err(Error::NotContractive { t: tn });
    }
    let closed = f.eval(&y)?;

    let mut series = HomogSeries::new(f, &y)?;
    let mut sum = series.next_term();
    let mut notes = Vec::new();
    let (terms_used, tail, capped) = if isometric_path {
        let need = terms_for_tol(tn, params.tol)?;
        let used = need.min(params.max_terms);
        for _ in 0..used {
            if series.exhausted() {
                break;
            }
            sum = &sum + &series.next_term();
        }
        let tail = if series.exhausted() { 0.0 } else { tail_bound(tn, used)? };
        (used, tail, need > params.max_terms && !series.exhausted())
    } else {
        general_series(f, &mut series, &mut sum, tn, params, &mut notes)
    };

    let agreement = op_norm(&(&closed - &sum));
    let mut certificates = Vec::new();
    if isometric_path {
        certificates.push(Certificate::new("contractivity", op_norm(&closed), 1.0 + CONTRACTIVITY_SLACK));
        certificates.push(Certificate::new("neumann_bound", op_norm(&sum), 1.0 / (1.0 - tn) + params.tol));
    } else {
        notes.push("realization is not a certified isometry; tail bounded by ||B|| ||C|| t q^N / (1 - q)".into());
    }
    certificates.push(Certificate::new("path_agreement", agreement, tail + params.tol + AGREEMENT_SLACK));

    let report = CalcReport {
        value: closed,
        series_value: sum,
        s,
        delta_norm,
        t: tn,
        terms_used,
        tail_bound: tail,
        closed_form_agreement: agreement,
        isometric_path,
        certificates,
        notes,
    };
    Ok(if capped { Err(SeriesCapExceeded { partial: Box::new(report) }) } else { Ok(report) })
}

/// Sums until the tail bound `||B|| ||C|| t q^N / (1 - q)`, `q = ||D|| t`,
/// drops below `tol`, or until the terms vanish identically.
fn general_series(
    f: &Colligation,
    series: &mut HomogSeries,
    sum: &mut ComplexMatrix,
    t: f64,
    params: &CalcParams,
    notes: &mut Vec<String>,
) -> (usize, f64, bool) {
    let q = op_norm(f.d()) * t;
    let bc = op_norm(f.b()) * op_norm(f.c()) * t;
    let bound = |n: usize| if q < 1.0 { bc * q.powf(n as f64) / (1.0 - q) } else { f64::INFINITY };
    if bc == 0.0 {
        return (0, 0.0, false);
    }
    if q >= 1.0 {
        notes.push(format!("||D|| t = {q} >= 1: no a priori tail bound; relying on exact vanishing of terms"));
    }
    let mut n = 0;
    loop {
        if series.exhausted() {
            return (n, 0.0, false);
        }
        if bound(n) <= params.tol {
            return (n, bound(n), false);
        }
        if n >= params.max_terms {
            return (n, bound(n), true);
        }
        *sum = &*sum + &series.next_term();
        n += 1;
    }
}

/// `max ||δ(rT)||` for `r ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RaySup {
    pub sup: f64,
    pub argmax: f64,
}

/// Samples `r ↦ ||δ(rT)||` on 101 equispaced points, then refines around the
/// best grid point by golden-section search.
pub fn sup_along_ray(delta: &PolyMatrix, t: &MatrixTuple) -> Result<RaySup> {
    let g = |r: f64| -> Result<f64> { Ok(op_norm(&delta.eval(&t.scale_real(r))?)) };
    let mut best = RaySup { sup: f64::NEG_INFINITY, argmax: 0.0 };
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        let v = g(r)?;
        if v > best.sup {
            best = RaySup { sup: v, argmax: r };
        }
    }
    let (mut a, mut b) = ((best.argmax - 0.01).max(0.0), (best.argmax + 0.01).min(1.0));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (g(c)?, g(d)?);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g(d)?;
        }
    }
    for (r, v) in [(c, fc), (d, fd)] {
        if v > best.sup {
            best = RaySup { sup: v, argmax: r };
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct WelldefReport {
    pub s: f64,
    pub samples: usize,
    /// Max over sampled `x` of `||F1(δ(x)/s) - F2(δ(x)/s)||`.
    pub sample_discrepancy: f64,
    /// `||F1♯ - F2♯||` at `T`.
    pub calc_discrepancy: f64,
    pub agreement_tol: f64,
    pub calc_tol: f64,
    pub violation: bool,
    pub notes: Vec<String>,
}

/// Compares two realizations on sampled points of `G_{δ/s}` and at `T`.
/// A violation means they agree on the samples but not at `T`.
pub fn welldef_check(
    f1: &Colligation,
    f2: &Colligation,
    delta: &PolyMatrix,
    t: &MatrixTuple,
    params: &CalcParams,
    cfg: &SampleConfig,
) -> Result<WelldefReport> {
    let r1 = sharp(f1, delta, t, params)?;
    let s = r1.s;
    let r2 = sharp(f2, delta, t, &CalcParams { s: Some(s), ..params.clone() })?;
    if r1.value.shape() != r2.value.shape() {
        return Err(Error::Shape("the two realizations have different value shapes".into()));
    }
    let scaled = delta.scale_real(1.0 / s);
    let points = admissible_points(&scaled, cfg)?;
    if points.is_empty() {
        return Err(Error::EmptySampleSet(format!("no admissible points in G_(delta/s) at levels {:?}", cfg.levels)));
    }
    let mut sample_discrepancy: f64 = 0.0;
    for x in &points {
        let y = scaled.eval(x)?;
        sample_discrepancy = sample_discrepancy.max(op_norm(&(&f1.eval(&y)? - &f2.eval(&y)?)));
    }
    let calc_discrepancy = op_norm(&(&r1.value - &r2.value));
    let agreement_tol = AGREEMENT_SLACK;
    let calc_tol = params.tol + AGREEMENT_SLACK;
    let violation = sample_discrepancy <= agreement_tol && calc_discrepancy > calc_tol;
    Ok(WelldefReport {
        s,
        samples: points.len(),
        sample_discrepancy,
        calc_discrepancy,
        agreement_tol,
        calc_tol,
        violation,
        notes: vec!["uniqueness is tested only against the supplied alternative realization".into()],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub delta_vanishes_at_zero: bool,
    pub ray_sup: RaySup,
    /// `δ(0) = 0` and `sup_r ||δ(rT)|| < 1` on the sampled ray.
    pub hypothesis_holds: bool,
    pub s: f64,
    pub discrepancy: f64,
    pub tol: f64,
    pub passed: bool,
    /// Max over sampled `x` of `||F(δ(x)/s) - P(x)||`, when sampling was requested.
    pub sample_discrepancy: Option<f64>,
    pub notes: Vec<String>,
}

/// Checks `F♯(δ(T)/s) = P(T)` for a realization that matches `P` on `G_{δ/s}`.
pub fn poly_consistency(
    p: &PolyMatrix,
    f: &Colligation,
    delta: &PolyMatrix,
    t: &MatrixTuple,
    params: &CalcParams,
    cfg: Option<&SampleConfig>,
) -> Result<ConsistencyReport> {
    let vanishes = delta.vanishes_at_zero();
    let ray = sup_along_ray(delta, t)?;
    let hypothesis_holds = vanishes && ray.sup < 1.0;
    let mut notes = vec!["the supremum over r is sampled, not certified".to_string()];
    if !vanishes {
        notes.push("delta(0) != 0: the ray criterion does not apply".into());
    }
    let report = sharp(f, delta, t, params)?;
    let pt = p.eval(t)?;
    if pt.shape() != report.value.shape() {
        return Err(Error::Shape(format!(
            "P(T) is {}x{} but the calculus value is {}x{}",
            pt.rows(),
            pt.cols(),
            report.value.rows(),
            report.value.cols()
        )));
    }
    let discrepancy = op_norm(&(&report.value - &pt));
    let tol = params.tol + AGREEMENT_SLACK;
    let sample_discrepancy = match cfg {
        None => None,
        Some(cfg) => {
            let scaled = delta.scale_real(1.0 / report.s);
            let mut worst: f64 = 0.0;
            for x in admissible_points(&scaled, cfg)? {
                worst = worst.max(op_norm(&(&f.eval(&scaled.eval(&x)?)? - &p.eval(&x)?)));
            }
            Some(worst)
        }
    };
    Ok(ConsistencyReport {
        delta_vanishes_at_zero: vanishes,
        ray_sup: ray,
        hypothesis_holds,
        s: report.s,
        discrepancy,
        tol,
        passed: discrepancy <= tol,
        sample_discrepancy,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freepoly::{diag_delta, e_lambda, FreePoly, Word};
    use crate::matrix::{random_tuple, rel_diff, C64, ONE};
    use crate::realization::{combine, poly_to_colligation, Combine};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tail_bound_values() {
        assert_eq!(tail_bound(0.0, 5).unwrap(), 0.0);
        assert!((tail_bound(0.5, 10).unwrap() - 2f64.powi(-10)).abs() < 1e-18);
        assert!(tail_bound(1.0, 3).is_err());
        let mut prev = f64::INFINITY;
        for n in 0..50 {
            let b = tail_bound(0.8, n).unwrap();
            assert!(b < prev);
            prev = b;
        }
        let n = terms_for_tol(0.9, 1e-10).unwrap();
        assert!(tail_bound(0.9, n).unwrap() <= 1e-10 && tail_bound(0.9, n - 1).unwrap() > 1e-10);
    }

    #[test]
    fn identity_function_returns_t() {
        let f = Colligation::coordinate(1, 1, 0, 0).unwrap();
        let delta = e_lambda(1, 1).unwrap();
        let t = random_tuple(4, 1, 0.9, 3).unwrap();
        let r = sharp(&f, &delta, &t, &CalcParams::with_s(1.0)).unwrap();
        assert!(rel_diff(&r.value, t.coord(0)) < 1e-12);
        assert!(r.all_passed());
    }

    #[test]
    fn constant_realization() {
        let a = ComplexMatrix::scalar(1, C64::new(0.3, 0.4));
        let f = Colligation::constant(a, 1, 2).unwrap();
        let t = random_tuple(3, 2, 0.5, 1).unwrap();
        let r = sharp(&f, &e_lambda(1, 2).unwrap(), &t, &CalcParams::default()).unwrap();
        assert_eq!(r.value, ComplexMatrix::scalar(3, C64::new(0.3, 0.4)));
        assert_eq!(r.terms_used, 0);
    }

    #[test]
    fn isometric_run_is_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Colligation::random_isometric(2, 2, 2, 2, 3, &mut rng).unwrap();
        let delta = e_lambda(2, 2).unwrap();
        let t = random_tuple(3, 4, 0.3, 6).unwrap();
        let r = sharp(&f, &delta, &t, &CalcParams::default()).unwrap();
        assert!(r.isometric_path && r.all_passed(), "{:?}", r.certificates);
        assert!(r.value_norm() <= 1.0 + 1e-8);
        assert!(r.closed_form_agreement <= 1e-9);
        assert!((r.s - (r.delta_norm + 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn not_contractive_at_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Colligation::random_isometric(1, 1, 1, 1, 2, &mut rng).unwrap();
        let t = MatrixTuple::scalars(&[C64::new(0.8, 0.0)]).unwrap();
        let err = sharp(&f, &e_lambda(1, 1).unwrap(), &t, &CalcParams::with_s(0.5)).unwrap_err();
        assert!(matches!(err, Error::NotContractive { .. }));
    }

    #[test]
    fn series_cap_returns_partial_report() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Colligation::random_isometric(1, 1, 1, 1, 2, &mut rng).unwrap();
        let t = MatrixTuple::scalars(&[C64::new(0.9, 0.0)]).unwrap();
        let params = CalcParams { s: Some(1.0), tol: 1e-12, max_terms: 5 };
        let partial = sharp_detailed(&f, &e_lambda(1, 1).unwrap(), &t, &params).unwrap().unwrap_err();
        assert_eq!(partial.partial.terms_used, 5);
        assert!(sharp(&f, &e_lambda(1, 1).unwrap(), &t, &params).is_err());
    }

    fn diag_compile(p: &FreePoly, d: usize, s: f64) -> Colligation {
        let subs: Vec<FreePoly> = (0..d)
            .map(|j| FreePoly::coordinate(d * d, j * d + j).unwrap().scale(C64::new(s, 0.0)))
            .collect();
        poly_to_colligation(&PolyMatrix::scalar(p.compose(&subs).unwrap()), d, d).unwrap()
    }

    #[test]
    fn polydisc_consistency() {
        let d = 2;
        let p = FreePoly::from_terms(
            d,
            [
                (Word::new(vec![0, 1, 0]), C64::new(0.5, -1.0)),
                (Word::new(vec![1]), ONE),
                (Word::empty(), C64::new(2.0, 0.0)),
            ],
        )
        .unwrap();
        let s = 0.95;
        let f = diag_compile(&p, d, s);
        let delta = diag_delta(d).unwrap();
        for seed in 0..5 {
            let t = random_tuple(3, d, 0.9, seed).unwrap();
            let rep = poly_consistency(&PolyMatrix::scalar(p.clone()), &f, &delta, &t, &CalcParams::with_s(s), None)
                .unwrap();
            assert!(rep.hypothesis_holds && rep.passed, "{rep:?}");
        }
    }

    #[test]
    fn calculus_is_multiplicative_for_polynomials() {
        let d = 2;
        let p = FreePoly::from_terms(d, [(Word::new(vec![0, 1]), ONE), (Word::empty(), -ONE)]).unwrap();
        let q = FreePoly::from_terms(d, [(Word::new(vec![1]), C64::new(0.0, 2.0)), (Word::new(vec![0, 0]), ONE)])
            .unwrap();
        let s = 0.9;
        let (fp, fq) = (diag_compile(&p, d, s), diag_compile(&q, d, s));
        let fpq = combine(&fp, &fq, Combine::Product).unwrap();
        let delta = diag_delta(d).unwrap();
        let t = random_tuple(4, d, 0.85, 11).unwrap();
        let params = CalcParams::with_s(s);
        let a = sharp(&fp, &delta, &t, &params).unwrap().value;
        let b = sharp(&fq, &delta, &t, &params).unwrap().value;
        let ab = sharp(&fpq, &delta, &t, &params).unwrap().value;
        assert!(op_norm(&(&ab - &(&a * &b))) <= 1e-9);
    }

    #[test]
    fn ray_sup_finds_interior_max() {
        // δ(rT) = diag(r x, r x - 1) at scalar x = 0.5 peaks at r = 0.
        let t = MatrixTuple::scalars(&[C64::new(0.5, 0.0)]).unwrap();
        let ray = sup_along_ray(&crate::freepoly::lens_delta(), &t).unwrap();
        assert!((ray.sup - 1.0).abs() < 1e-12 && ray.argmax == 0.0);
        let ray = sup_along_ray(&diag_delta(1).unwrap(), &t).unwrap();
        assert!((ray.sup - 0.5).abs() < 1e-12);
    }
}

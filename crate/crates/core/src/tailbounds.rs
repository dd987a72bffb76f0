//! Chernoff tail bounds for `||A(X)||^2` and their empirical counterparts.
//!
//! For unit-Frobenius `X`, `||A(X)||^2 = (1/K) sum_k Z_k` with iid
//! `Z_k = |u_k^H X v_k|^2`, `E Z = 1`. The upper bound is
//! `(E e^{hZ})^K e^{-hK(1+alpha)}` where every moment of `Z` beyond the first is
//! replaced by its all-ones majorant `E_t = g(t,M) g(t,N) / (MN)^t`. The lower bound uses
//! `e^{-x} <= 1 - x + x^2/2` for `x >= 0`, giving `(1 - h + h^2 E_2 / 2)^K e^{hK(1-alpha)}`.
//! In both cases the Chernoff parameter `h` is optimized numerically.
//!
//! Fixing `h = 1/4` in the lower bound with `E_2 <= 4` gives the per-measurement
//! factor `0.875 e^{(1-alpha)/4}`, which exceeds 1 for `alpha` below about 0.466;
//! optimizing `h` is what makes the lower bound decay for every `alpha > 0`.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::linalg::{dot, ComplexMatrix};
use crate::measurements::{sample_complex_gaussian, sample_phase, unit_phasor, EnsembleKind};
use crate::moments::{exact_all_ones_moment, AllOnesMoments, RunningStats};
use crate::rng::RngStream;

/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 1000;
/// Relative accuracy at which the series is truncated.
pub const SERIES_REL_TOL: f64 = 1e-16;
/// Upper end of the Chernoff parameter search interval for the upper tail.
pub const H_MAX: f64 = 2.0;
pub const GOLDEN_ITERS: usize = 200;
pub const GOLDEN_TOL: f64 = 1e-10;
/// Points of the fallback grid scan.
pub const GRID_POINTS: usize = 20_000;

const SMALL_TABLE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailSide {
    Upper,
    Lower,
}

impl TailSide {
    pub fn name(self) -> &'static str {
        match self {
            TailSide::Upper => "upper",
            TailSide::Lower => "lower",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "upper" => Some(TailSide::Upper),
            "lower" => Some(TailSide::Lower),
            _ => None,
        }
    }
}

/// Optimized Chernoff bound on `Pr(||A(X)||^2 >= 1 + alpha)` or `<= 1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundReport {
    pub side: TailSide,
    pub alpha: f64,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub h_star: f64,
    /// `ln` of the per-measurement factor; `-c_1` or `-c_2`.
    pub per_measurement_log: f64,
    /// `min(1, exp(K * per_measurement_log))`.
    pub total_bound: f64,
    /// No `h` with a per-measurement factor below one was found.
    pub degenerate: bool,
}

impl TailBoundReport {
    /// `exp(K * per_measurement_log)` before clamping to a probability.
    pub fn pre_clamp_bound(&self) -> f64 {
        libm::exp(self.k as f64 * self.per_measurement_log)
    }

    /// Same exponent, different measurement count.
    pub fn with_measurements(&self, k: usize) -> Self {
        let mut out = *self;
        out.k = k;
        out.total_bound = clamp_bound(k, self.per_measurement_log, self.degenerate);
        out
    }
}

fn clamp_bound(k: usize, log_factor: f64, degenerate: bool) -> f64 {
    if degenerate {
        1.0
    } else {
        libm::exp(k as f64 * log_factor).clamp(0.0, 1.0)
    }
}

/// Per-measurement quadratic majorant of `E e^{-hZ}`: `1 - h + h^2 E_2 / 2`.
pub fn quadratic_lower_factor(h: f64, second_moment: f64) -> f64 {
    1.0 - h + 0.5 * h * h * second_moment
}

/// Evaluates tail bounds for fixed `(M, N)`, reusing the moment table.
#[derive(Debug, Clone)]
pub struct TailBoundCalculator {
    m: usize,
    n: usize,
    mn: f64,
    moments: AllOnesMoments,
    second_moment: f64,
}

impl TailBoundCalculator {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("M and N must be positive"));
        }
        let mn = (m * n) as f64;
        Self::with_table_len(m, n, table_len_for(H_MAX, mn))
    }

    fn with_table_len(m: usize, n: usize, t_max: usize) -> Result<Self> {
        let moments = AllOnesMoments::new(m, n, t_max)?;
        let second_moment = exact_all_ones_moment(2, m, n)?;
        Ok(Self { m, n, mn: (m * n) as f64, moments, second_moment })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Exact `E_2 = (2 - 1/M)(2 - 1/N)`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// `ln sum_t h^t E_t / t!`, or `Ok(inf)` once the partial sum passes `cutoff`.
    ///
    /// The series stops at the first `t` with `term_t <= 1e-16 * partial` and
    /// `h M N / (t + 1) <= 1/2`. Since `Z <= MN`, `E_{t+1} <= MN E_t`, so past that point
    /// the terms shrink at least geometrically with ratio 1/2 and the remainder is below
    /// `term_t`.
    fn ln_mgf(&self, h: f64, cutoff: f64) -> Result<f64> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid("Chernoff parameter h must be positive"));
        }
        let ln_h = libm::log(h);
        let ln_tol = libm::log(SERIES_REL_TOL);
        // t = 0 and t = 1: E_0 = E_1 = 1
        let mut ln_partial = libm::log1p(h);
        let mut ln_fact = 0.0;
        if h * self.mn <= 1.0 && ln_h <= ln_partial + ln_tol {
            return Ok(ln_partial);
        }
        let t_max = self.moments.t_max().min(MAX_SERIES_TERMS);
        for t in 2..=t_max {
            ln_fact += libm::log(t as f64);
            let ln_term = t as f64 * ln_h - ln_fact + self.moments.ln_value(t);
            ln_partial = ln_add(ln_partial, ln_term);
            if ln_partial > cutoff {
                return Ok(f64::INFINITY);
            }
            if h * self.mn <= 0.5 * (t + 1) as f64 && ln_term <= ln_partial + ln_tol {
                return Ok(ln_partial);
            }
        }
        Err(Error::Truncation { terms: t_max + 1 })
    }

    /// Series majorant of `E e^{hZ}` for any unit-Frobenius `X`.
    pub fn mgf_series_upper(&self, h: f64) -> Result<f64> {
        if table_len_for(h, self.mn) > self.moments.t_max() && self.moments.t_max() < MAX_SERIES_TERMS {
            return Self::with_table_len(self.m, self.n, table_len_for(h, self.mn))?.mgf_series_upper(h);
        }
        Ok(libm::exp(self.ln_mgf(h, f64::INFINITY)?))
    }

    /// `ln f(h)` for the upper tail; `+inf` where the series is unusable.
    pub fn upper_log_factor(&self, h: f64, alpha: f64) -> f64 {
        // f(h) > e rules h out: f(0+) = 1
        let shift = h * (1.0 + alpha);
        match self.ln_mgf(h, shift + 1.0) {
            Ok(v) if v.is_finite() => v - shift,
            _ => f64::INFINITY,
        }
    }

    /// `ln g(h)` for the lower tail.
    pub fn lower_log_factor(&self, h: f64, alpha: f64) -> f64 {
        libm::log(quadratic_lower_factor(h, self.second_moment)) + h * (1.0 - alpha)
    }

    pub fn upper(&self, alpha: f64, k: usize) -> Result<TailBoundReport> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid("alpha must be positive"));
        }
        if k == 0 {
            return Err(invalid("K must be positive"));
        }
        let (h, log_factor) = minimize(|h| self.upper_log_factor(h, alpha), H_MAX);
        Ok(self.report(TailSide::Upper, alpha, k, h, log_factor))
    }

    pub fn lower(&self, alpha: f64, k: usize) -> Result<TailBoundReport> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("alpha must lie in (0, 1] for the lower tail"));
        }
        if k == 0 {
            return Err(invalid("K must be positive"));
        }
        let (h, log_factor) = minimize(|h| self.lower_log_factor(h, alpha), 1.0 / self.second_moment);
        Ok(self.report(TailSide::Lower, alpha, k, h, log_factor))
    }

    /// Lower-tail bound at a fixed Chernoff parameter.
    pub fn lower_at(&self, alpha: f64, k: usize, h: f64) -> Result<TailBoundReport> {
        if !(alpha > 0.0 && alpha <= 1.0) || !(h > 0.0) {
            return Err(invalid("need alpha in (0, 1] and h > 0"));
        }
        Ok(self.report(TailSide::Lower, alpha, k, h, self.lower_log_factor(h, alpha)))
    }

    pub fn bound(&self, side: TailSide, alpha: f64, k: usize) -> Result<TailBoundReport> {
        match side {
            TailSide::Upper => self.upper(alpha, k),
            TailSide::Lower => self.lower(alpha, k),
        }
    }

    fn report(&self, side: TailSide, alpha: f64, k: usize, h_star: f64, log_factor: f64) -> TailBoundReport {
        let degenerate = !(log_factor < 0.0);
        TailBoundReport {
            side,
            alpha,
            k,
            m: self.m,
            n: self.n,
            h_star,
            per_measurement_log: log_factor,
            total_bound: clamp_bound(k, log_factor, degenerate),
            degenerate,
        }
    }
}

/// Series terms needed before the geometric remainder argument applies at `h`.
fn table_len_for(h: f64, mn: f64) -> usize {
    let needed = libm::ceil(2.0 * h * mn) as usize + SMALL_TABLE;
    needed.clamp(SMALL_TABLE, MAX_SERIES_TERMS)
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + libm::log1p(libm::exp(lo - hi))
    }
}

/// Minimizes a convex `phi` on `(0, h_max]`: golden-section search reconciled with a
/// dense grid, keeping whichever point is lower.
fn minimize(phi: impl Fn(f64) -> f64, h_max: f64) -> (f64, f64) {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, h_max);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    for _ in 0..GOLDEN_ITERS {
        if b - a <= GOLDEN_TOL {
            break;
        }
        // infeasible values are +inf; both infinite means the minimum is further left
        if fc <= fd || (fc.is_infinite() && fd.is_infinite()) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    let mid = 0.5 * (a + b);
    let fm = phi(mid);
    if fm < best.1 {
        best = (mid, fm);
    }
    if h_max <= b + GOLDEN_TOL {
        let fe = phi(h_max);
        if fe < best.1 {
            best = (h_max, fe);
        }
    }
    let step = h_max / GRID_POINTS as f64;
    for i in 1..=GRID_POINTS {
        let h = step * i as f64;
        let v = phi(h);
        if v < best.1 {
            best = (h, v);
        }
        if v.is_infinite() {
            // convex: nothing to the right can be lower
            break;
        }
    }
    best
}

/// `sum_t h^t E_t / t!` for `(M, N)`.
pub fn mgf_series_upper(h: f64, m: usize, n: usize) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("Chernoff parameter h must be positive"));
    }
    let mn = (m.max(1) * n.max(1)) as f64;
    TailBoundCalculator::with_table_len(m, n, table_len_for(h, mn))?.mgf_series_upper(h)
}

pub fn upper_tail_bound(alpha: f64, k: usize, m: usize, n: usize) -> Result<TailBoundReport> {
    TailBoundCalculator::new(m, n)?.upper(alpha, k)
}

pub fn lower_tail_bound(alpha: f64, k: usize, m: usize, n: usize) -> Result<TailBoundReport> {
    TailBoundCalculator::new(m, n)?.lower(alpha, k)
}

/// `||A(X)||^2` for a fresh rank-one unit-modulus ensemble drawn from `stream`, with the
/// same draw order as [`crate::measurements::sample_unit_modulus_ensemble`].
pub fn unit_modulus_statistic(x: &ComplexMatrix, k: usize, stream: &RngStream) -> f64 {
    let (m, n) = x.shape();
    let mut rng = stream.rng();
    let mut u = alloc::vec![num_complex::Complex64::new(0.0, 0.0); m];
    let mut v = alloc::vec![num_complex::Complex64::new(0.0, 0.0); n];
    let mut total = 0.0;
    for _ in 0..k {
        for ui in u.iter_mut() {
            *ui = unit_phasor(sample_phase(&mut rng));
        }
        for vi in v.iter_mut() {
            *vi = unit_phasor(sample_phase(&mut rng));
        }
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (i, ui) in u.iter().enumerate() {
            acc += ui.conj() * dot(x.row(i), &v);
        }
        total += acc.norm_sqr();
    }
    total / k as f64
}

/// `||A(X)||^2` for a fresh dense Gaussian ensemble.
///
/// The inner products `<A_k, X>` of iid unit-variance complex Gaussian matrices with a
/// fixed `X` are iid `CN(0, ||X||_F^2)`, so they are drawn directly rather than through
/// `K M N` matrix entries; the distribution of the statistic is identical.
pub fn gaussian_statistic(x: &ComplexMatrix, k: usize, stream: &RngStream) -> f64 {
    let sigma = x.frobenius_norm();
    let mut rng = stream.rng();
    let total: f64 = (0..k).map(|_| (sample_complex_gaussian(&mut rng) * sigma).norm_sqr()).sum();
    total / k as f64
}

/// Fraction of fresh ensembles on the given side of `1 +- alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub side: TailSide,
    pub alpha: f64,
    pub k: usize,
    pub trials: usize,
    pub hits: usize,
    pub estimate: f64,
    /// `sqrt(p (1 - p) / trials)`.
    pub stderr: f64,
}

fn check_unit_frobenius(x: &ComplexMatrix) -> Result<()> {
    if (x.frobenius_norm() - 1.0).abs() > 1e-9 {
        return Err(invalid("X must have unit Frobenius norm"));
    }
    Ok(())
}

/// Empirical `Pr(||A(X)||^2 >= 1 + alpha)` (upper) or `Pr(||A(X)||^2 <= 1 - alpha)`
/// (lower) over fresh rank-one unit-modulus ensembles; trial `i` uses
/// `stream.substream(i)`.
pub fn empirical_tail_probability<E: Executor>(
    side: TailSide,
    x: &ComplexMatrix,
    alpha: f64,
    k: usize,
    trials: usize,
    stream: &RngStream,
    exec: &E,
) -> Result<TailEstimate> {
    check_unit_frobenius(x)?;
    if trials < 100 {
        return Err(invalid("at least 100 trials are required"));
    }
    if k == 0 || !(alpha > 0.0) {
        return Err(invalid("need K >= 1 and alpha > 0"));
    }
    let stats = exec.map(trials, |i| unit_modulus_statistic(x, k, &stream.substream(i as u64)));
    Ok(tail_estimate_from(side, alpha, k, &stats))
}

/// Tail fractions for both sides from one set of realizations.
pub fn tail_estimate_from(side: TailSide, alpha: f64, k: usize, values: &[f64]) -> TailEstimate {
    let hits = values
        .iter()
        .filter(|&&s| match side {
            TailSide::Upper => s >= 1.0 + alpha,
            TailSide::Lower => s <= 1.0 - alpha,
        })
        .count();
    let trials = values.len();
    let p = hits as f64 / trials as f64;
    TailEstimate { side, alpha, k, trials, hits, estimate: p, stderr: libm::sqrt(p * (1.0 - p) / trials as f64) }
}

/// Realizations of `||A(X)||^2` over fresh ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSample {
    pub values: Vec<f64>,
    pub k: usize,
    pub kind: EnsembleKind,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

impl ConcentrationSample {
    pub fn from_values(values: Vec<f64>, k: usize, kind: EnsembleKind) -> Self {
        let mut stats = RunningStats::default();
        values.iter().for_each(|&v| stats.push(v));
        Self { mean: stats.mean(), variance: stats.variance(), values, k, kind }
    }

    pub fn stderr(&self) -> f64 {
        libm::sqrt(self.variance / self.values.len() as f64)
    }
}

/// `trials` realizations of `||A(X)||^2`; trial `i` uses `stream.substream(i)`.
pub fn concentration_samples<E: Executor>(
    x: &ComplexMatrix,
    k: usize,
    kind: EnsembleKind,
    trials: usize,
    stream: &RngStream,
    exec: &E,
) -> Result<ConcentrationSample> {
    if trials < 2 {
        return Err(invalid("at least two trials are required"));
    }
    if k == 0 {
        return Err(invalid("K must be positive"));
    }
    let values = exec.map(trials, |i| {
        let s = stream.substream(i as u64);
        match kind {
            EnsembleKind::UnitModulus => unit_modulus_statistic(x, k, &s),
            EnsembleKind::Gaussian => gaussian_statistic(x, k, &s),
        }
    });
    Ok(ConcentrationSample::from_values(values, k, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::measurements::{sample_unit_frobenius_matrix, sample_unit_modulus_ensemble};

    #[test]
    fn mgf_small_h_and_partial_sum() {
        let v = mgf_series_upper(1e-12, 3, 5).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        let h = 0.1;
        let full = mgf_series_upper(h, 2, 2).unwrap();
        let through_two: f64 = 1.0 + 0.1 + 0.01 * 2.25 / 2.0;
        assert!((through_two - 1.11125).abs() < 1e-15);
        assert!(full > through_two);
        assert!(full >= 1.0 + h);
        assert!(mgf_series_upper(0.0, 2, 2).is_err());
    }

    #[test]
    fn mgf_at_scalar_dimension_is_exponential() {
        for h in [0.01, 0.5, 1.0, 2.0] {
            let v = mgf_series_upper(h, 1, 1).unwrap();
            assert!((v - libm::exp(h)).abs() < 1e-12 * libm::exp(h), "h={h}");
        }
    }

    #[test]
    fn truncation_is_reported() {
        assert!(matches!(mgf_series_upper(2.0, 40, 80), Err(Error::Truncation { .. })));
    }

    #[test]
    fn upper_bound_basic_contracts() {
        let r = upper_tail_bound(0.5, 100, 2, 2).unwrap();
        assert!(r.per_measurement_log < 0.0 && r.total_bound < 1.0 && r.h_star > 0.0);
        let doubled = r.with_measurements(200);
        assert!((doubled.pre_clamp_bound() - r.pre_clamp_bound().powi(2)).abs() <= 1e-12 * doubled.pre_clamp_bound().max(1e-300));
        assert!(upper_tail_bound(0.0, 10, 2, 2).is_err());
        assert!(upper_tail_bound(0.5, 0, 2, 2).is_err());
    }

    #[test]
    fn lower_bound_contracts() {
        let calc = TailBoundCalculator::new(40, 80).unwrap();
        let opt = calc.lower(0.5, 100).unwrap();
        let fixed = calc.lower_at(0.5, 100, 0.25).unwrap();
        assert!(opt.per_measurement_log <= fixed.per_measurement_log);
        assert!(opt.h_star <= 1.0 / calc.second_moment() + 1e-15);
        assert!((quadratic_lower_factor(0.25, 4.0) - 0.875).abs() < 1e-15);
        assert!(lower_tail_bound(1.5, 10, 2, 2).is_err());
        for a in [0.01, 0.1, 0.5, 1.0] {
            assert!(lower_tail_bound(a, 10, 40, 80).unwrap().per_measurement_log < 0.0);
        }
    }

    #[test]
    fn statistic_matches_ensemble_apply() {
        let x = sample_unit_frobenius_matrix(3, 4, &mut RngStream::new(1, 0).rng());
        let s = RngStream::new(1, 1);
        let direct = sample_unit_modulus_ensemble(3, 4, 6, &s).unwrap().apply(&x).unwrap().norm_sqr();
        assert!((unit_modulus_statistic(&x, 6, &s) - direct).abs() < 1e-12);
    }

    #[test]
    fn empirical_tail_degenerate_cases() {
        let mut x = ComplexMatrix::zeros(3, 3);
        x[(0, 0)] = num_complex::Complex64::new(1.0, 0.0);
        let s = RngStream::new(2, 0);
        for side in [TailSide::Upper, TailSide::Lower] {
            let e = empirical_tail_probability(side, &x, 0.5, 1, 200, &s, &Sequential).unwrap();
            assert_eq!(e.hits, 0);
        }
        let y = sample_unit_frobenius_matrix(2, 2, &mut s.rng());
        let e = empirical_tail_probability(TailSide::Upper, &y, 1e3, 3, 100, &s, &Sequential).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(empirical_tail_probability(TailSide::Upper, &y.scale_real(2.0), 0.5, 3, 100, &s, &Sequential).is_err());
        assert!(empirical_tail_probability(TailSide::Upper, &y, 0.5, 3, 99, &s, &Sequential).is_err());
    }
}

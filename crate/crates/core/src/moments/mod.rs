//! Even moments `E |u^H X v|^{2t}` of the rank-one bilinear form: exact all-ones
//! majorants and Monte Carlo estimates.

mod combinatorics;

pub use combinatorics::{
    abelian_square_count, abelian_square_table, composition_count, exact_all_ones_moment, legendre_sum,
    ln_abelian_square_table, ln_biguint, ratio_to_f64, weighted_multinomial_sum, AllOnesMoments, EXACT_DIGIT_LIMIT, EXACT_TABLE_MAX_ORDER,
    MAX_COMPOSITIONS,
};

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{invalid, Result};
use crate::exec::{Executor, Sequential};
use crate::linalg::{dot, ComplexMatrix};
use crate::measurements::{normalized_all_ones, sample_phase, sample_unit_frobenius_matrix, unit_phasor};
use crate::rng::RngStream;

/// Samples per independently seeded block of a Monte Carlo run.
pub const BLOCK_SAMPLES: usize = 4096;

/// Monte Carlo estimate of `E |u^H X v|^{2t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub t: usize,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Streaming mean/variance (Welford), merged in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            libm::sqrt(self.variance() / self.count as f64)
        }
    }
}

/// `|u^H X v|^2` for fresh unit-modulus `u`, `v` (row phases drawn first).
pub fn sample_bilinear_power<R: Rng + ?Sized>(x: &ComplexMatrix, rng: &mut R, u: &mut [num_complex::Complex64], v: &mut [num_complex::Complex64]) -> f64 {
    for ui in u.iter_mut() {
        *ui = unit_phasor(sample_phase(rng));
    }
    for vi in v.iter_mut() {
        *vi = unit_phasor(sample_phase(rng));
    }
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for (i, ui) in u.iter().enumerate() {
        acc += ui.conj() * dot(x.row(i), v);
    }
    acc.norm_sqr()
}

fn block_moment_stats(x: &ComplexMatrix, t_max: usize, samples: usize, stream: &RngStream) -> Vec<RunningStats> {
    let mut rng = stream.rng();
    let (m, n) = x.shape();
    let mut u = alloc::vec![num_complex::Complex64::new(0.0, 0.0); m];
    let mut v = alloc::vec![num_complex::Complex64::new(0.0, 0.0); n];
    let mut stats = alloc::vec![RunningStats::default(); t_max + 1];
    for _ in 0..samples {
        let z = sample_bilinear_power(x, &mut rng, &mut u, &mut v);
        let mut p = 1.0;
        for s in stats.iter_mut() {
            s.push(p);
            p *= z;
        }
    }
    stats
}

/// Estimates of `E |u^H X v|^{2t}` for every `t <= t_max` from one shared set of draws.
///
/// Samples are split into blocks of [`BLOCK_SAMPLES`], block `b` drawing from
/// `stream.substream(b)`; block statistics are merged in block order, so the result does
/// not depend on the executor.
pub fn estimate_moments<E: Executor>(
    x: &ComplexMatrix,
    t_max: usize,
    samples: usize,
    stream: &RngStream,
    exec: &E,
) -> Result<Vec<MomentEstimate>> {
    if samples < 2 {
        return Err(invalid("at least two samples are required"));
    }
    let blocks = samples.div_ceil(BLOCK_SAMPLES);
    let partial = exec.map(blocks, |b| {
        let len = BLOCK_SAMPLES.min(samples - b * BLOCK_SAMPLES);
        block_moment_stats(x, t_max, len, &stream.substream(b as u64))
    });
    let mut total = alloc::vec![RunningStats::default(); t_max + 1];
    for block in &partial {
        for (acc, s) in total.iter_mut().zip(block) {
            acc.merge(s);
        }
    }
    Ok(total
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let (mean, stderr) = if t == 0 { (1.0, 0.0) } else { (s.mean(), s.stderr()) };
            MomentEstimate { t, mean, stderr, samples }
        })
        .collect())
}

/// Monte Carlo estimate of `E |u^H X v|^{2t}`.
pub fn estimate_moment(x: &ComplexMatrix, t: usize, samples: usize, stream: &RngStream) -> Result<MomentEstimate> {
    Ok(estimate_moments(x, t, samples, stream, &Sequential)?.pop().expect("t_max + 1 estimates"))
}

/// One comparison of a Monte Carlo moment against the all-ones majorant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceRow {
    pub matrix_id: usize,
    pub t: usize,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub exact_all_ones: f64,
    /// `exact - (mc + 3 stderr)`.
    pub margin: f64,
    /// `mc - 3 stderr <= exact`.
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
}

impl DominanceReport {
    pub fn all_dominated(&self) -> bool {
        self.rows.iter().all(|r| r.dominated)
    }
}

/// Checks `E |u^H X v|^{2t} <= E_t(all-ones)` for `num_matrices` unit-Frobenius
/// matrices and `t = 1..=t_max`.
///
/// Matrix 0 is the normalized all-ones matrix (the equality case); the others are
/// normalized complex Gaussian matrices. Matrix `i` is drawn from
/// `stream.substream_at(&[i, 0])` and its moments from `stream.substream_at(&[i, 1])`.
pub fn verify_all_ones_dominance<E: Executor>(
    m: usize,
    n: usize,
    t_max: usize,
    num_matrices: usize,
    samples: usize,
    stream: &RngStream,
    exec: &E,
) -> Result<DominanceReport> {
    if t_max == 0 || num_matrices == 0 {
        return Err(invalid("t_max and the matrix count must be positive"));
    }
    if m == 0 || n == 0 {
        return Err(invalid("M and N must be positive"));
    }
    let exact = AllOnesMoments::new(m, n, t_max)?;
    let per_matrix = exec.map(num_matrices, |id| -> Result<Vec<DominanceRow>> {
        let x = if id == 0 {
            normalized_all_ones(m, n)
        } else {
            sample_unit_frobenius_matrix(m, n, &mut stream.substream_at(&[id as u64, 0]).rng())
        };
        let est = estimate_moments(&x, t_max, samples, &stream.substream_at(&[id as u64, 1]), &Sequential)?;
        Ok(est[1..]
            .iter()
            .map(|e| {
                let ex = exact.value(e.t);
                DominanceRow {
                    matrix_id: id,
                    t: e.t,
                    mc_mean: e.mean,
                    mc_stderr: e.stderr,
                    exact_all_ones: ex,
                    margin: ex - (e.mean + 3.0 * e.stderr),
                    dominated: e.mean - 3.0 * e.stderr <= ex,
                }
            })
            .collect())
    });
    let mut rows = Vec::with_capacity(num_matrices * t_max);
    for r in per_matrix {
        rows.extend(r?);
    }
    Ok(DominanceReport { rows })
}

/// Non-negative distributions for the moment-product inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonnegativeDistribution {
    Constant(f64),
    /// `scale * g^2` with `g` standard normal.
    SquaredGaussian { scale: f64 },
    Exponential { mean: f64 },
    Uniform { low: f64, high: f64 },
}

impl NonnegativeDistribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            NonnegativeDistribution::Constant(c) => c >= 0.0 && c.is_finite(),
            NonnegativeDistribution::SquaredGaussian { scale } => scale > 0.0 && scale.is_finite(),
            NonnegativeDistribution::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            NonnegativeDistribution::Uniform { low, high } => 0.0 <= low && low <= high && high.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("distribution parameters must describe a non-negative law"))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NonnegativeDistribution::Constant(c) => c,
            NonnegativeDistribution::SquaredGaussian { scale } => {
                let g: f64 = rng.sample(StandardNormal);
                scale * g * g
            }
            NonnegativeDistribution::Exponential { mean } => mean * Exp::new(1.0).expect("unit rate").sample(rng),
            NonnegativeDistribution::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }
}

/// Outcome of `E[prod X_n^{k_n}] <= max_n E[X_n^t]`, `t = sum k_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProductCheck {
    pub t: u32,
    pub product_mean: f64,
    pub product_stderr: f64,
    /// `(mean, stderr)` of `X_n^t` for each variable.
    pub power_means: Vec<(f64, f64)>,
    pub max_index: usize,
    pub combined_stderr: f64,
    pub holds: bool,
}

/// Monte Carlo check of the product-moment inequality for independent variables with
/// the given laws.
pub fn verify_moment_product_inequality(
    dists: &[NonnegativeDistribution],
    exponents: &[i32],
    samples: usize,
    stream: &RngStream,
) -> Result<MomentProductCheck> {
    if dists.is_empty() || dists.len() != exponents.len() {
        return Err(invalid("need one exponent per distribution"));
    }
    if exponents.iter().any(|&k| k < 0) {
        return Err(invalid("exponents must be non-negative"));
    }
    if samples < 2 {
        return Err(invalid("at least two samples are required"));
    }
    for d in dists {
        d.validate()?;
    }
    let t: u32 = exponents.iter().map(|&k| k as u32).sum();
    let mut rng = stream.rng();
    let mut product = RunningStats::default();
    let mut powers = alloc::vec![RunningStats::default(); dists.len()];
    let mut draws = alloc::vec![0.0; dists.len()];
    for _ in 0..samples {
        for (x, d) in draws.iter_mut().zip(dists) {
            *x = d.sample(&mut rng);
        }
        product.push(draws.iter().zip(exponents).map(|(&x, &k)| libm::pow(x, k as f64)).product());
        for (s, &x) in powers.iter_mut().zip(&draws) {
            s.push(libm::pow(x, t as f64));
        }
    }
    let (max_index, max_stats) = powers
        .iter()
        .enumerate()
        .fold((0, powers[0]), |best, (i, s)| if s.mean() > best.1.mean() { (i, *s) } else { best });
    let combined = libm::sqrt(product.stderr() * product.stderr() + max_stats.stderr() * max_stats.stderr());
    let slack = 3.0 * combined + 1e-12 * max_stats.mean().abs();
    Ok(MomentProductCheck {
        t,
        product_mean: product.mean(),
        product_stderr: product.stderr(),
        power_means: powers.iter().map(|s| (s.mean(), s.stderr())).collect(),
        max_index,
        combined_stderr: combined,
        holds: product.mean() <= max_stats.mean() + slack,
    })
}

//! Low-rank recovery from `y = A(X) + z`.
//!
//! Three solvers share [`SolverOptions`] and report a [`RecoveryResult`]:
//! [`nuclear_norm_recover`] (operator splitting with singular-value thresholding),
//! [`altmin_recover`] (alternating least squares on `X = L R^H`) and
//! [`factored_gd_recover`] (Wirtinger gradient descent on the balanced factored loss).

mod altmin;
mod cg;
mod gd;
mod nuclear;
mod sweep;

pub use altmin::{altmin_recover, altmin_recover_from};
pub use cg::{conjugate_gradient, CgOutcome};
pub use gd::{factored_gd_recover, factored_gd_recover_from, factored_gradient, factored_loss, FactoredGradient};
pub use nuclear::{nuclear_norm_recover, singular_value_threshold};
pub use sweep::{
    median, median_by_k, recovery_phase_sweep, sweep_cell, transition_k, SweepCell, SweepConfig, SweepRow,
};

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{truncated_svd, ComplexMatrix};
use crate::measurements::{sample_gaussian_matrix, MeasurementEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Nuclear,
    AltMin,
    Gd,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Nuclear => "nuclear",
            Solver::AltMin => "altmin",
            Solver::Gd => "gd",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "nuclear" => Some(Solver::Nuclear),
            "altmin" => Some(Solver::AltMin),
            "gd" => Some(Solver::Gd),
            _ => None,
        }
    }

    pub fn default_options(self) -> SolverOptions {
        let max_iters = match self {
            Solver::Nuclear => 500,
            Solver::AltMin => 100,
            Solver::Gd => 2000,
        };
        SolverOptions { max_iters, ..SolverOptions::default() }
    }
}

/// Solver controls. `Default` carries the splitting solver's iteration budget; use
/// [`Solver::default_options`] for the per-solver defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Relative residual target `||A(X) - y|| <= tol ||y||`.
    pub tol: f64,
    /// Gradient step, scaled by `1 / sigma_1(spectral init)^2`.
    pub step_size: f64,
    /// Splitting penalty; singular values are thresholded at `1 / rho`.
    pub rho: f64,
    /// Diagonal shift for the Gram factorization and the least-squares normal equations.
    pub ridge: f64,
    pub inner_cg_tol: f64,
    pub inner_cg_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
            step_size: 0.25,
            rho: 1.0,
            ridge: 1e-10,
            inner_cg_tol: 1e-10,
            inner_cg_iters: 200,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.max_iters == 0 || self.inner_cg_iters == 0 {
            return Err(invalid("iteration limits must be positive"));
        }
        if !positive(self.tol) || !positive(self.step_size) || !positive(self.rho) || !positive(self.inner_cg_tol) {
            return Err(invalid("tol, step_size, rho and inner_cg_tol must be positive"));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(invalid("ridge must be non-negative"));
        }
        Ok(())
    }
}

/// Optional replacements for individual [`SolverOptions`] fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOverrides {
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub step_size: Option<f64>,
    pub rho: Option<f64>,
    pub ridge: Option<f64>,
    pub inner_cg_tol: Option<f64>,
    pub inner_cg_iters: Option<usize>,
}

impl SolverOverrides {
    pub fn apply(&self, base: SolverOptions) -> SolverOptions {
        SolverOptions {
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            tol: self.tol.unwrap_or(base.tol),
            step_size: self.step_size.unwrap_or(base.step_size),
            rho: self.rho.unwrap_or(base.rho),
            ridge: self.ridge.unwrap_or(base.ridge),
            inner_cg_tol: self.inner_cg_tol.unwrap_or(base.inner_cg_tol),
            inner_cg_iters: self.inner_cg_iters.unwrap_or(base.inner_cg_iters),
        }
    }
}

/// `X = L R^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub l: ComplexMatrix,
    pub r: ComplexMatrix,
}

impl FactorPair {
    pub fn new(l: ComplexMatrix, r: ComplexMatrix) -> Result<Self> {
        if l.cols() != r.cols() {
            return Err(invalid("factor column counts differ"));
        }
        Ok(Self { l, r })
    }

    pub fn rank(&self) -> usize {
        self.l.cols()
    }

    pub fn product(&self) -> ComplexMatrix {
        self.l.matmul_adjoint(&self.r)
    }

    /// Balanced factors `U sqrt(S)`, `V sqrt(S)` of the rank-`r` truncation of `x`.
    pub fn balanced_from(x: &ComplexMatrix, r: usize) -> Result<Self> {
        let svd = truncated_svd(x, r, 1e-12)?;
        let root: Vec<f64> = svd.s.iter().map(|&s| libm::sqrt(s)).collect();
        Ok(Self { l: svd.u.scale_columns(&root), r: svd.v.scale_columns(&root) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub residual: f64,
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: ComplexMatrix,
    /// `||X_hat - X_true||_F / ||X_true||_F` when the truth is known.
    pub rel_error: Option<f64>,
    /// `||A(X_hat) - y||_2`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
    /// Numerical failure that stopped the run early; the trace covers the completed
    /// iterations.
    pub failure: Option<Error>,
}

impl RecoveryResult {
    /// `Err` when the run stopped on a numerical failure.
    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// `||X_hat - X_true||_F / ||X_true||_F`.
pub fn relative_error(x_hat: &ComplexMatrix, x_true: &ComplexMatrix) -> Result<f64> {
    if x_hat.shape() != x_true.shape() {
        return Err(invalid("matrix shapes differ"));
    }
    let denom = x_true.frobenius_norm();
    if !(denom > 0.0) {
        return Err(invalid("reference matrix must be non-zero"));
    }
    Ok(x_hat.sub(x_true).frobenius_norm() / denom)
}

/// Rank-`r` truncation of `A^*(y)`.
pub fn spectral_init(ensemble: &MeasurementEnsemble, y: &[num_complex::Complex64], r: usize) -> Result<ComplexMatrix> {
    let (m, n, _) = ensemble.dims();
    check_rank(r, m, n)?;
    let back = ensemble.apply_adjoint(y)?;
    Ok(truncated_svd(&back, r, 1e-12)?.reconstruct())
}

/// Random rank-`r` truth `G_1 G_2^H / ||G_1 G_2^H||_F` with Gaussian factors.
pub fn random_low_rank<R: Rng + ?Sized>(m: usize, n: usize, r: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_rank(r, m, n)?;
    loop {
        let x = sample_gaussian_matrix(m, r, rng).matmul_adjoint(&sample_gaussian_matrix(n, r, rng));
        let nrm = x.frobenius_norm();
        if nrm > 0.0 {
            return Ok(x.scale_real(1.0 / nrm));
        }
    }
}

pub(crate) fn check_rank(r: usize, m: usize, n: usize) -> Result<()> {
    if r == 0 || r > m.min(n) {
        return Err(invalid("rank must satisfy 1 <= r <= min(M, N)"));
    }
    Ok(())
}

pub(crate) fn check_problem(ensemble: &MeasurementEnsemble, y: &[num_complex::Complex64], options: &SolverOptions, truth: Option<&ComplexMatrix>) -> Result<()> {
    options.validate()?;
    let (m, n, k) = ensemble.dims();
    if y.len() != k {
        return Err(invalid("measurement vector length must equal K"));
    }
    if !crate::linalg::all_finite(y) {
        return Err(invalid("measurements must be finite"));
    }
    if let Some(t) = truth {
        if t.shape() != (m, n) {
            return Err(invalid("truth shape does not match the ensemble"));
        }
    }
    Ok(())
}

/// `A(X) - y`.
pub(crate) fn residual_vector(ensemble: &MeasurementEnsemble, x: &ComplexMatrix, y: &[num_complex::Complex64]) -> Result<Vec<num_complex::Complex64>> {
    let ax = ensemble.apply(x)?;
    Ok(ax.iter().zip(y).map(|(a, b)| a - b).collect())
}

pub(crate) fn trace_entry(x: &ComplexMatrix, residual: f64, truth: Option<&ComplexMatrix>) -> TraceEntry {
    TraceEntry { residual, rel_error: truth.and_then(|t| relative_error(x, t).ok()) }
}

pub(crate) fn finish(
    x_hat: ComplexMatrix,
    residual: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceEntry>,
    truth: Option<&ComplexMatrix>,
    failure: Option<Error>,
) -> RecoveryResult {
    let rel_error = truth.and_then(|t| relative_error(&x_hat, t).ok());
    RecoveryResult { x_hat, rel_error, residual, iterations, converged, trace, failure }
}

pub(crate) fn failure_message(what: &str, iteration: usize, detail: &Error) -> Error {
    Error::NumericalFailure(alloc::format!("{what} at iteration {iteration}: {detail}"))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn relative_error_cases() {
        let x = random_low_rank(3, 4, 2, &mut RngStream::new(0, 0).rng()).unwrap();
        assert_eq!(relative_error(&x, &x).unwrap(), 0.0);
        assert!((relative_error(&ComplexMatrix::zeros(3, 4), &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((relative_error(&x.scale_real(2.0), &x).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_error(&x, &ComplexMatrix::zeros(3, 4)).is_err());
        assert!(relative_error(&x, &ComplexMatrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn truth_is_unit_norm_low_rank() {
        let x = random_low_rank(6, 5, 2, &mut RngStream::new(3, 0).rng()).unwrap();
        assert!((x.frobenius_norm() - 1.0).abs() < 1e-14);
        let s = crate::linalg::svd_thin(&x).unwrap().s;
        assert!(s[2] < 1e-12 && s[1] > 1e-6);
        assert!(random_low_rank(3, 4, 4, &mut RngStream::new(3, 0).rng()).is_err());
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        assert!(SolverOptions { rho: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverOptions { ridge: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverOptions { max_iters: 0, ..Default::default() }.validate().is_err());
        assert_eq!(Solver::AltMin.default_options().max_iters, 100);
        assert_eq!(Solver::Gd.default_options().max_iters, 2000);
        assert_eq!(Solver::Nuclear.default_options().max_iters, 500);
    }
}

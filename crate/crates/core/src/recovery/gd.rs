use alloc::vec::Vec;

use num_complex::Complex64;

use super::{check_problem, check_rank, failure_message, finish, residual_vector, trace_entry, FactorPair, RecoveryResult, SolverOptions};
use crate::error::{invalid, numerical, Result};
use crate::linalg::{norm, norm_sqr, truncated_svd, ComplexMatrix};
use crate::measurements::MeasurementEnsemble;

const DIVERGENCE_FACTOR: f64 = 1e3;

/// Gradients of `f(L, R) = ||A(L R^H) - y||^2 / 2 + ||L^H L - R^H R||_F^2 / 8`, scaled so
/// that the directional derivative along `(dL, dR)` is `Re <grad_l, dL> + Re <grad_r, dR>`.
#[derive(Debug, Clone)]
pub struct FactoredGradient {
    pub grad_l: ComplexMatrix,
    pub grad_r: ComplexMatrix,
    pub loss: f64,
    /// `||A(L R^H) - y||`.
    pub residual: f64,
}

pub fn factored_loss(ensemble: &MeasurementEnsemble, y: &[Complex64], factors: &FactorPair) -> Result<f64> {
    let res = residual_vector(ensemble, &factors.product(), y)?;
    let d = factors.l.adjoint_matmul(&factors.l).sub(&factors.r.adjoint_matmul(&factors.r));
    Ok(0.5 * norm_sqr(&res) + 0.125 * d.frobenius_norm_sqr())
}

pub fn factored_gradient(ensemble: &MeasurementEnsemble, y: &[Complex64], factors: &FactorPair) -> Result<FactoredGradient> {
    let (m, n, k) = ensemble.dims();
    let FactorPair { l, r } = factors;
    if l.rows() != m || r.rows() != n || l.cols() != r.cols() || y.len() != k {
        return Err(invalid("factors or measurements do not match the ensemble"));
    }
    let res = residual_vector(ensemble, &l.matmul_adjoint(r), y)?;
    let back = ensemble.apply_adjoint(&res)?;
    let d = l.adjoint_matmul(l).sub(&r.adjoint_matmul(r));
    let mut grad_l = back.matmul(r);
    grad_l.axpy(0.5.into(), &l.matmul(&d));
    let mut grad_r = back.adjoint_matmul(l);
    grad_r.axpy((-0.5).into(), &r.matmul(&d));
    let residual_sqr = norm_sqr(&res);
    Ok(FactoredGradient {
        grad_l,
        grad_r,
        loss: 0.5 * residual_sqr + 0.125 * d.frobenius_norm_sqr(),
        residual: libm::sqrt(residual_sqr),
    })
}

/// Gradient descent on the balanced factored loss from the spectral initialization.
pub fn factored_gd_recover(
    ensemble: &MeasurementEnsemble,
    y: &[Complex64],
    r: usize,
    options: &SolverOptions,
    truth: Option<&ComplexMatrix>,
) -> Result<RecoveryResult> {
    check_problem(ensemble, y, options, truth)?;
    let (m, n, _) = ensemble.dims();
    check_rank(r, m, n)?;
    let svd = truncated_svd(&ensemble.apply_adjoint(y)?, r, 1e-12)?;
    let sigma1 = svd.s[0];
    let root: Vec<f64> = svd.s.iter().map(|&s| libm::sqrt(s)).collect();
    let init = FactorPair { l: svd.u.scale_columns(&root), r: svd.v.scale_columns(&root) };
    if !(sigma1 > 0.0) {
        // y = 0: the zero matrix is an exact fit
        let x = init.product();
        return Ok(finish(x, 0.0, 0, true, Vec::new(), truth, None));
    }
    factored_gd_recover_from(ensemble, y, init, options.step_size / (sigma1 * sigma1), options, truth)
}

/// Gradient descent from given factors with a fixed step.
pub fn factored_gd_recover_from(
    ensemble: &MeasurementEnsemble,
    y: &[Complex64],
    init: FactorPair,
    step: f64,
    options: &SolverOptions,
    truth: Option<&ComplexMatrix>,
) -> Result<RecoveryResult> {
    check_problem(ensemble, y, options, truth)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid("step must be positive"));
    }
    let y_norm = norm(y);
    let target = options.tol * y_norm;
    let mut factors = init;
    let mut trace = Vec::new();
    let mut grad = factored_gradient(ensemble, y, &factors)?;
    if grad.residual <= target {
        return Ok(finish(factors.product(), grad.residual, 0, true, trace, truth, None));
    }
    for it in 1..=options.max_iters {
        factors.l.axpy((-step).into(), &grad.grad_l);
        factors.r.axpy((-step).into(), &grad.grad_r);
        grad = factored_gradient(ensemble, y, &factors)?;
        let x = factors.product();
        trace.push(trace_entry(&x, grad.residual, truth));
        if !grad.residual.is_finite() || grad.residual > DIVERGENCE_FACTOR * y_norm {
            let e = numerical("residual exceeded 1e3 ||y||; reduce step_size");
            return Ok(finish(x, grad.residual, it, false, trace, truth, Some(failure_message("gradient descent diverged", it, &e))));
        }
        if grad.residual <= target {
            return Ok(finish(x, grad.residual, it, true, trace, truth, None));
        }
    }
    Ok(finish(factors.product(), grad.residual, options.max_iters, false, trace, truth, None))
}

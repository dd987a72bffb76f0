use alloc::vec::Vec;

use num_complex::Complex64;

use super::{check_problem, check_rank, conjugate_gradient, failure_message, finish, residual_vector, trace_entry, FactorPair, RecoveryResult, SolverOptions};
use crate::error::{invalid, Result};
use crate::linalg::{norm, ComplexMatrix};
use crate::measurements::MeasurementEnsemble;

/// Alternating least squares on `X = L R^H`, started from the balanced spectral factors.
///
/// Each half-step solves the ridge-regularized normal equations of the linear map in one
/// factor with conjugate gradients, warm-started from the current factor.
pub fn altmin_recover(
    ensemble: &MeasurementEnsemble,
    y: &[Complex64],
    r: usize,
    options: &SolverOptions,
    truth: Option<&ComplexMatrix>,
) -> Result<RecoveryResult> {
    check_problem(ensemble, y, options, truth)?;
    let (m, n, _) = ensemble.dims();
    check_rank(r, m, n)?;
    let init = FactorPair::balanced_from(&ensemble.apply_adjoint(y)?, r)?;
    altmin_recover_from(ensemble, y, init, options, truth)
}

pub fn altmin_recover_from(
    ensemble: &MeasurementEnsemble,
    y: &[Complex64],
    init: FactorPair,
    options: &SolverOptions,
    truth: Option<&ComplexMatrix>,
) -> Result<RecoveryResult> {
    check_problem(ensemble, y, options, truth)?;
    let (m, n, _) = ensemble.dims();
    if init.l.rows() != m || init.r.rows() != n || init.l.cols() != init.r.cols() {
        return Err(invalid("initial factors do not match the ensemble"));
    }
    check_rank(init.rank(), m, n)?;
    let y_norm = norm(y);
    let target = options.tol * y_norm;
    let FactorPair { mut l, r: mut rf } = init;
    let mut trace = Vec::new();

    let residual_of = |x: &ComplexMatrix| -> Result<f64> { Ok(norm(&residual_vector(ensemble, x, y)?)) };

    let mut x = l.matmul_adjoint(&rf);
    let mut residual = residual_of(&x)?;
    if residual <= target {
        return Ok(finish(x, residual, 0, true, trace, truth, None));
    }

    for it in 1..=options.max_iters {
        // L-step: B(L) = A(L R^H), B^*(z) = A^*(z) R
        let rhs = ensemble.apply_adjoint(y)?.matmul(&rf);
        let op = |lm: &ComplexMatrix| -> Result<ComplexMatrix> {
            let z = ensemble.apply(&lm.matmul_adjoint(&rf))?;
            let mut out = ensemble.apply_adjoint(&z)?.matmul(&rf);
            out.axpy(options.ridge.into(), lm);
            Ok(out)
        };
        match conjugate_gradient(op, &rhs, l.clone(), options.inner_cg_tol, options.inner_cg_iters) {
            Ok(out) => l = out.x,
            Err(e) => return Ok(finish(x, residual, it - 1, false, trace, truth, Some(failure_message("factor solve", it, &e)))),
        }

        // R-step on S = R^H: C(S) = A(L S), C^*(z) = L^H A^*(z)
        let rhs = l.adjoint_matmul(&ensemble.apply_adjoint(y)?);
        let op = |s: &ComplexMatrix| -> Result<ComplexMatrix> {
            let z = ensemble.apply(&l.matmul(s))?;
            let mut out = l.adjoint_matmul(&ensemble.apply_adjoint(&z)?);
            out.axpy(options.ridge.into(), s);
            Ok(out)
        };
        match conjugate_gradient(op, &rhs, rf.adjoint(), options.inner_cg_tol, options.inner_cg_iters) {
            Ok(out) => rf = out.x.adjoint(),
            Err(e) => return Ok(finish(x, residual, it - 1, false, trace, truth, Some(failure_message("factor solve", it, &e)))),
        }

        x = l.matmul_adjoint(&rf);
        residual = residual_of(&x)?;
        trace.push(trace_entry(&x, residual, truth));
        if !residual.is_finite() {
            let e = crate::error::numerical("residual is not finite");
            return Ok(finish(x, residual, it, false, trace, truth, Some(failure_message("alternating minimization", it, &e))));
        }
        if residual <= target {
            return Ok(finish(x, residual, it, true, trace, truth, None));
        }
    }
    Ok(finish(x, residual, options.max_iters, false, trace, truth, None))
}

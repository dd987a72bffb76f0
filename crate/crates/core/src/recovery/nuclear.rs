use alloc::vec::Vec;

use num_complex::Complex64;

use super::{check_problem, failure_message, finish, residual_vector, trace_entry, RecoveryResult, SolverOptions};
use crate::error::Result;
use crate::linalg::{norm, svd_thin, Cholesky, ComplexMatrix};
use crate::measurements::MeasurementEnsemble;

/// Singular-value soft thresholding: `U max(S - tau, 0) V^H`.
pub fn singular_value_threshold(x: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
    let svd = svd_thin(x)?;
    let keep = svd.s.iter().take_while(|&&s| s > tau).count();
    if keep == 0 {
        return Ok(ComplexMatrix::zeros(x.rows(), x.cols()));
    }
    let shrunk: Vec<f64> = svd.s[..keep].iter().map(|s| s - tau).collect();
    Ok(svd.u.leading_columns(keep).scale_columns(&shrunk).matmul_adjoint(&svd.v.leading_columns(keep)))
}

/// `min ||X||_* subject to A(X) = y` by operator splitting.
///
/// The `X` update projects `Z - U` onto the affine constraint set with one factorization
/// of `G + ridge I`; the `Z` update soft-thresholds singular values at `1 / rho`.
pub fn nuclear_norm_recover(
    ensemble: &MeasurementEnsemble,
    y: &[Complex64],
    options: &SolverOptions,
    truth: Option<&ComplexMatrix>,
) -> Result<RecoveryResult> {
    check_problem(ensemble, y, options, truth)?;
    let (m, n, _) = ensemble.dims();
    let y_norm = norm(y);
    if y_norm == 0.0 {
        return Ok(finish(ComplexMatrix::zeros(m, n), 0.0, 0, true, Vec::new(), truth, None));
    }
    let chol = Cholesky::factor(&ensemble.gram_matrix(), options.ridge)?;
    let tau = 1.0 / options.rho;
    let mut z = ComplexMatrix::zeros(m, n);
    let mut u = ComplexMatrix::zeros(m, n);
    let mut x = z.clone();
    let mut residual = y_norm;
    let mut trace = Vec::new();
    for it in 1..=options.max_iters {
        let w = z.sub(&u);
        let gap: Vec<Complex64> = residual_vector(ensemble, &w, y)?.iter().map(|r| -r).collect();
        x = w.add(&ensemble.apply_adjoint(&chol.solve(&gap))?);
        residual = norm(&residual_vector(ensemble, &x, y)?);
        let xu = x.add(&u);
        z = match singular_value_threshold(&xu, tau) {
            Ok(z) => z,
            Err(e) => return Ok(finish(x, residual, it - 1, false, trace, truth, Some(failure_message("thresholding", it, &e)))),
        };
        u = xu.sub(&z);
        trace.push(trace_entry(&x, residual, truth));
        let split = x.sub(&z).frobenius_norm() / x.frobenius_norm().max(1.0);
        if (residual / y_norm).max(split) <= options.tol {
            return Ok(finish(x, residual, it, true, trace, truth, None));
        }
    }
    Ok(finish(x, residual, options.max_iters, false, trace, truth, None))
}

use crate::error::{numerical, Result};
use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: ComplexMatrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Conjugate gradients for `op(x) = b` with `op` Hermitian positive definite under
/// `Re tr(A^H B)`. Stops when `||b - op(x)|| <= tol ||b||`.
pub fn conjugate_gradient<F>(op: F, b: &ComplexMatrix, x0: ComplexMatrix, tol: f64, max_iters: usize) -> Result<CgOutcome>
where
    F: Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
{
    let b_norm = b.frobenius_norm();
    if b_norm == 0.0 {
        return Ok(CgOutcome { x: ComplexMatrix::zeros(b.rows(), b.cols()), iterations: 0, converged: true });
    }
    let target = tol * b_norm;
    let mut x = x0;
    let mut r = b.sub(&op(&x)?);
    let mut rr = r.frobenius_norm_sqr();
    let mut p = r.clone();
    for it in 0..max_iters {
        if libm::sqrt(rr) <= target {
            return Ok(CgOutcome { x, iterations: it, converged: true });
        }
        let ap = op(&p)?;
        let curvature = p.inner(&ap).re;
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(numerical("conjugate gradient breakdown: operator is not positive definite"));
        }
        let alpha = rr / curvature;
        x.axpy(alpha.into(), &p);
        r.axpy((-alpha).into(), &ap);
        let rr_next = r.frobenius_norm_sqr();
        let beta = rr_next / rr;
        p = r.add(&p.scale_real(beta));
        rr = rr_next;
    }
    let converged = libm::sqrt(rr) <= target;
    Ok(CgOutcome { x, iterations: max_iters, converged })
}

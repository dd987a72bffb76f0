//! One-sided (Hestenes) Jacobi SVD for complex matrices.
//!
//! Columns of the working matrix are rotated pairwise until mutually orthogonal; the
//! accumulated rotations form `V`, column norms are the singular values and the
//! normalized columns form `U`.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::{dot_conj, norm_sqr, ComplexMatrix};
use crate::error::{invalid, numerical, Result};

const MAX_SWEEPS: usize = 80;
const DEFAULT_TOL: f64 = 1e-14;

/// Thin or truncated SVD `X ~ U diag(s) V^H`, singular values non-increasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U diag(s) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.u.scale_columns(&self.s).matmul_adjoint(&self.v)
    }

    /// Keep the leading `r` triples.
    pub fn truncate(mut self, r: usize) -> Self {
        let r = r.min(self.s.len());
        self.u = self.u.leading_columns(r);
        self.v = self.v.leading_columns(r);
        self.s.truncate(r);
        self
    }
}

/// Full thin SVD with `min(M, N)` triples.
pub fn svd_thin(x: &ComplexMatrix) -> Result<Svd> {
    jacobi_svd(x, DEFAULT_TOL)
}

/// Leading `r` singular triples of `x`; `tol` bounds the residual column
/// non-orthogonality accepted by the Jacobi sweeps.
pub fn truncated_svd(x: &ComplexMatrix, r: usize, tol: f64) -> Result<Svd> {
    let p = x.rows().min(x.cols());
    if r == 0 || r > p {
        return Err(invalid("truncation rank must satisfy 1 <= r <= min(M, N)"));
    }
    if !(tol > 0.0) {
        return Err(invalid("svd tolerance must be positive"));
    }
    Ok(jacobi_svd(x, tol.min(1e-8).max(DEFAULT_TOL))?.truncate(r))
}

fn jacobi_svd(x: &ComplexMatrix, tol: f64) -> Result<Svd> {
    if !x.is_finite() {
        return Err(numerical("svd input has non-finite entries"));
    }
    let (m, n) = x.shape();
    if m >= n {
        let (u, s, v) = orthogonalize_columns(x, tol)?;
        Ok(Svd { u, s, v })
    } else {
        let (u, s, v) = orthogonalize_columns(&x.adjoint(), tol)?;
        Ok(Svd { u: v, s, v: u })
    }
}

/// Requires `rows >= cols`.
fn orthogonalize_columns(x: &ComplexMatrix, tol: f64) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let (m, n) = x.shape();
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|j| x.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = alloc::vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    let mut norms: Vec<f64> = a.iter().map(|c| norm_sqr(c)).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let negligible = scale * 1e-300;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot_conj(&a[p], &a[q]);
                let g = gamma.norm();
                if !(g > tol * libm::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (libm::fabs(zeta) + libm::hypot(1.0, zeta));
                let c = 1.0 / libm::hypot(1.0, t);
                let s = c * t;
                let phase = (gamma / g).conj();
                rotate(&mut a, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
                norms[p] = norm_sqr(&a[p]);
                norms[q] = norm_sqr(&a[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(numerical("jacobi svd did not converge"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigma: Vec<f64> = norms.iter().map(|&z| libm::sqrt(z)).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(core::cmp::Ordering::Equal));

    let smax = order.first().map_or(0.0, |&i| sigma[i]);
    let cutoff = smax * (m as f64) * f64::EPSILON;
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut s_out = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &j in &order {
        let sj = sigma[j];
        let col = if sj > cutoff && sj > 0.0 {
            a[j].iter().map(|z| z / sj).collect()
        } else {
            complete_basis(m, &u_cols)
        };
        u_cols.push(col);
        s_out.push(sj);
        v_cols.push(v[j].clone());
    }
    Ok((ComplexMatrix::from_columns(m, &u_cols), s_out, ComplexMatrix::from_columns(n, &v_cols)))
}

fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (ap, aq) = (&mut lo[p], &mut hi[0]);
    for (xp, xq) in ap.iter_mut().zip(aq.iter_mut()) {
        let b = *xq * phase;
        let old = *xp;
        *xp = old * c - b * s;
        *xq = old * s + b * c;
    }
}

/// Unit vector orthogonal to `existing` (modified Gram-Schmidt on the standard basis).
fn complete_basis(m: usize, existing: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for e in 0..m {
        let mut w = alloc::vec![Complex64::new(0.0, 0.0); m];
        w[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for q in existing {
                let proj = dot_conj(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= proj * qi;
                }
            }
        }
        let nw = libm::sqrt(norm_sqr(&w));
        if nw > 0.5 {
            return w.into_iter().map(|z| z / nw).collect();
        }
        if best.as_ref().map_or(true, |(b, _)| nw > *b) {
            best = Some((nw, w));
        }
    }
    let (nw, w) = best.expect("matrix has at least one row");
    w.into_iter().map(|z| z / nw).collect()
}

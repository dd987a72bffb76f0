use alloc::vec::Vec;

use num_complex::Complex64;

use super::{dot_conj, ComplexMatrix};
use crate::error::{invalid, numerical, Result};

/// `A = L L^H` factorization of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    /// Row-major lower factor; row `i` holds `L[i, 0..=i]` in its prefix.
    l: Vec<Complex64>,
}

impl Cholesky {
    /// Factorizes `a + shift * I`. Only the lower triangle of `a` is read.
    pub fn factor(a: &ComplexMatrix, shift: f64) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(invalid("cholesky needs a square matrix"));
        }
        let mut l = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (i * n, j * n);
                // sum_k L[i,k] conj(L[j,k]) over k < j
                let s = dot_conj(&l[rj..rj + j], &l[ri..ri + j]);
                let aij = a[(i, j)] + if i == j { Complex64::new(shift, 0.0) } else { Complex64::new(0.0, 0.0) };
                if i == j {
                    let d = aij.re - s.re;
                    if !(d > 0.0) || !d.is_finite() {
                        return Err(numerical("matrix is not positive definite; increase the ridge"));
                    }
                    l[ri + i] = Complex64::new(libm::sqrt(d), 0.0);
                } else {
                    l[ri + j] = (aij - s) / l[rj + j].re;
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `(L L^H) x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut s = y[i];
            for (lik, yk) in row.iter().zip(&y[..i]) {
                s -= lik * yk;
            }
            y[i] = s / self.l[i * n + i].re;
        }
        // back substitution with L^H, column-oriented over the rows of L
        for i in (0..n).rev() {
            y[i] /= self.l[i * n + i].re;
            let yi = y[i];
            let row = &self.l[i * n..i * n + i];
            for (yk, lik) in y[..i].iter_mut().zip(row) {
                *yk -= lik.conj() * yi;
            }
        }
        y
    }
}

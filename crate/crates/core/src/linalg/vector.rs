use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Dense complex vector (measurements `y`, noise `z`, unit-modulus `u`, `v`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    /// Checked constructor: non-empty with finite entries.
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("vector length must be positive"));
        }
        if !super::all_finite(&entries) {
            return Err(invalid("vector has non-finite entries"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(alloc::vec![Complex64::new(0.0, 0.0); len])
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        super::norm(&self.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        super::norm_sqr(&self.0)
    }

    /// Hermitian inner product `self^H other`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        super::dot_conj(&self.0, &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self(self.0.iter().map(|a| a * alpha).collect())
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<ComplexVector> for Vec<Complex64> {
    fn from(v: ComplexVector) -> Self {
        v.0
    }
}

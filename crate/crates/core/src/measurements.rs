//! Rank-one unit-modulus and dense Gaussian measurement ensembles.
//!
//! The linear map is `[A(X)]_k = tr(A_k^H X) / sqrt(K)`. For the rank-one kind
//! `A_k = u_k v_k^H` with `u_k`, `v_k` unit-modulus, so `tr(A_k^H X) = u_k^H X v_k`
//! and only the `K (M + N)` phases are ever stored.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{axpy, axpy_conj, dot, dot_conj, ComplexMatrix, ComplexVector};
use crate::rng::RngStream;

/// Width in bytes of one serialized scalar (an `f64`).
pub const SCALAR_BYTES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    UnitModulus,
    Gaussian,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::UnitModulus => "unitmod",
            EnsembleKind::Gaussian => "gaussian",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "unitmod" => Some(EnsembleKind::UnitModulus),
            "gaussian" => Some(EnsembleKind::Gaussian),
            _ => None,
        }
    }

    /// Tag byte used by the binary ensemble format.
    pub fn tag(self) -> u8 {
        match self {
            EnsembleKind::UnitModulus => 0,
            EnsembleKind::Gaussian => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(EnsembleKind::UnitModulus),
            1 => Some(EnsembleKind::Gaussian),
            _ => None,
        }
    }
}

/// Uniform phase in `[0, 2pi)`.
pub fn sample_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let theta = TAU * rng.random::<f64>();
    if theta >= TAU {
        0.0
    } else {
        theta
    }
}

#[inline]
pub fn unit_phasor(theta: f64) -> Complex64 {
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

/// Complex normal with independent real and imaginary parts of variance 1/2.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Vector of independent `e^{j theta}` entries with uniform phases.
pub fn sample_unit_modulus_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexVector> {
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    Ok(ComplexVector::from_vec_unchecked((0..dim).map(|_| unit_phasor(sample_phase(rng))).collect()))
}

/// `rows x cols` matrix of iid unit-variance complex normals.
pub fn sample_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| sample_complex_gaussian(rng))
}

/// Gaussian matrix scaled to unit Frobenius norm.
pub fn sample_unit_frobenius_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let x = sample_gaussian_matrix(rows, cols, rng);
        let nrm = x.frobenius_norm();
        if nrm > 0.0 {
            return x.scale_real(1.0 / nrm);
        }
    }
}

/// `1 1^T / sqrt(M N)`, the unit-Frobenius all-ones matrix.
pub fn normalized_all_ones(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::filled(rows, cols, Complex64::new(1.0 / libm::sqrt((rows * cols) as f64), 0.0))
}

fn check_dims(m: usize, n: usize, k: usize) -> Result<()> {
    if m == 0 || n == 0 || k == 0 {
        return Err(invalid("M, N and K must all be positive"));
    }
    Ok(())
}

/// Phase-only rank-one ensemble `A_k = u_k v_k^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitModulusEnsemble {
    m: usize,
    n: usize,
    k: usize,
    /// `K x M`, row-major by measurement.
    theta: Vec<f64>,
    /// `K x N`, row-major by measurement.
    phi: Vec<f64>,
    // Derived from the phases; never serialized.
    u: Vec<Complex64>,
    v: Vec<Complex64>,
}

impl UnitModulusEnsemble {
    /// Rebuilds an ensemble from stored phases (all in `[0, 2pi)`).
    pub fn from_phases(m: usize, n: usize, k: usize, theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        check_dims(m, n, k)?;
        if theta.len() != k * m || phi.len() != k * n {
            return Err(invalid("phase arrays must have K*M and K*N entries"));
        }
        if !theta.iter().chain(&phi).all(|&p| (0.0..TAU).contains(&p)) {
            return Err(invalid("phases must lie in [0, 2pi)"));
        }
        let u = theta.iter().map(|&t| unit_phasor(t)).collect();
        let v = phi.iter().map(|&p| unit_phasor(p)).collect();
        Ok(Self { m, n, k, theta, phi, u, v })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `u_k`.
    pub fn u(&self, k: usize) -> &[Complex64] {
        &self.u[k * self.m..(k + 1) * self.m]
    }

    /// `v_k`.
    pub fn v(&self, k: usize) -> &[Complex64] {
        &self.v[k * self.n..(k + 1) * self.n]
    }
}

/// Dense ensemble with iid unit-variance complex Gaussian entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble {
    m: usize,
    n: usize,
    k: usize,
    /// `K` matrices, each `M x N` row-major, stored back to back.
    data: Vec<Complex64>,
}

impl GaussianEnsemble {
    pub fn from_matrices(m: usize, n: usize, k: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dims(m, n, k)?;
        if data.len() != k * m * n {
            return Err(invalid("Gaussian ensemble needs K*M*N entries"));
        }
        if !crate::linalg::all_finite(&data) {
            return Err(invalid("Gaussian ensemble has non-finite entries"));
        }
        Ok(Self { m, n, k, data })
    }

    /// Entries of `A_k`, row-major.
    pub fn matrix_entries(&self, k: usize) -> &[Complex64] {
        let len = self.m * self.n;
        &self.data[k * len..(k + 1) * len]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }
}

/// The linear map `A(.)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementEnsemble {
    UnitModulus(UnitModulusEnsemble),
    Gaussian(GaussianEnsemble),
}

/// Draws `K` independent `(u_k, v_k)` pairs; for each `k` the `M` row phases are drawn
/// before the `N` column phases.
pub fn sample_unit_modulus_ensemble(m: usize, n: usize, k: usize, stream: &RngStream) -> Result<MeasurementEnsemble> {
    check_dims(m, n, k)?;
    let mut rng = stream.rng();
    let mut theta = Vec::with_capacity(k * m);
    let mut phi = Vec::with_capacity(k * n);
    for _ in 0..k {
        theta.extend((0..m).map(|_| sample_phase(&mut rng)));
        phi.extend((0..n).map(|_| sample_phase(&mut rng)));
    }
    Ok(MeasurementEnsemble::UnitModulus(UnitModulusEnsemble::from_phases(m, n, k, theta, phi)?))
}

pub fn sample_gaussian_ensemble(m: usize, n: usize, k: usize, stream: &RngStream) -> Result<MeasurementEnsemble> {
    check_dims(m, n, k)?;
    let mut rng = stream.rng();
    let data = (0..k * m * n).map(|_| sample_complex_gaussian(&mut rng)).collect();
    Ok(MeasurementEnsemble::Gaussian(GaussianEnsemble { m, n, k, data }))
}

pub fn sample_ensemble(kind: EnsembleKind, m: usize, n: usize, k: usize, stream: &RngStream) -> Result<MeasurementEnsemble> {
    match kind {
        EnsembleKind::UnitModulus => sample_unit_modulus_ensemble(m, n, k, stream),
        EnsembleKind::Gaussian => sample_gaussian_ensemble(m, n, k, stream),
    }
}

impl MeasurementEnsemble {
    pub fn kind(&self) -> EnsembleKind {
        match self {
            MeasurementEnsemble::UnitModulus(_) => EnsembleKind::UnitModulus,
            MeasurementEnsemble::Gaussian(_) => EnsembleKind::Gaussian,
        }
    }

    /// `(M, N, K)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            MeasurementEnsemble::UnitModulus(e) => (e.m, e.n, e.k),
            MeasurementEnsemble::Gaussian(e) => (e.m, e.n, e.k),
        }
    }

    pub fn num_measurements(&self) -> usize {
        self.dims().2
    }

    fn inv_sqrt_k(&self) -> f64 {
        1.0 / libm::sqrt(self.num_measurements() as f64)
    }

    /// `A_k` as a dense matrix.
    pub fn measurement_matrix(&self, k: usize) -> ComplexMatrix {
        let (m, n, kk) = self.dims();
        assert!(k < kk, "measurement index out of range");
        match self {
            MeasurementEnsemble::UnitModulus(e) => {
                let (u, v) = (e.u(k), e.v(k));
                ComplexMatrix::from_fn(m, n, |i, j| u[i] * v[j].conj())
            }
            MeasurementEnsemble::Gaussian(e) => ComplexMatrix::from_vec_unchecked(m, n, e.matrix_entries(k).to_vec()),
        }
    }

    /// `y = A(X)`. The rank-one kind uses the factored form `u_k^H X v_k`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexVector> {
        let (m, n, k) = self.dims();
        if x.shape() != (m, n) {
            return Err(invalid("matrix shape does not match the ensemble"));
        }
        let scale = self.inv_sqrt_k();
        let y = match self {
            MeasurementEnsemble::UnitModulus(e) => (0..k)
                .map(|kk| {
                    let (u, v) = (e.u(kk), e.v(kk));
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, ui) in u.iter().enumerate() {
                        acc += ui.conj() * dot(x.row(i), v);
                    }
                    acc * scale
                })
                .collect(),
            MeasurementEnsemble::Gaussian(e) => {
                (0..k).map(|kk| dot_conj(e.matrix_entries(kk), x.as_slice()) * scale).collect()
            }
        };
        Ok(ComplexVector::from_vec_unchecked(y))
    }

    /// Same map evaluated as `tr(A_k^H X)` on materialized `A_k`.
    pub fn apply_materialized(&self, x: &ComplexMatrix) -> Result<ComplexVector> {
        let (m, n, k) = self.dims();
        if x.shape() != (m, n) {
            return Err(invalid("matrix shape does not match the ensemble"));
        }
        let scale = self.inv_sqrt_k();
        Ok(ComplexVector::from_vec_unchecked((0..k).map(|kk| self.measurement_matrix(kk).inner(x) * scale).collect()))
    }

    /// `A^*(y) = sum_k y_k A_k / sqrt(K)`.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<ComplexMatrix> {
        let (m, n, k) = self.dims();
        if y.len() != k {
            return Err(invalid("measurement vector length must equal K"));
        }
        let scale = self.inv_sqrt_k();
        let mut out = ComplexMatrix::zeros(m, n);
        match self {
            MeasurementEnsemble::UnitModulus(e) => {
                for (kk, &yk) in y.iter().enumerate() {
                    let yk = yk * scale;
                    let (u, v) = (e.u(kk), e.v(kk));
                    for (i, ui) in u.iter().enumerate() {
                        axpy_conj(yk * ui, v, out.row_mut(i));
                    }
                }
            }
            MeasurementEnsemble::Gaussian(e) => {
                for (kk, &yk) in y.iter().enumerate() {
                    axpy(yk * scale, e.matrix_entries(kk), out.as_mut_slice());
                }
            }
        }
        Ok(out)
    }

    /// `G[j, k] = <A_j, A_k> / K`, Hermitian positive semidefinite, so that
    /// `G y = A(A^*(y))`.
    pub fn gram_matrix(&self) -> ComplexMatrix {
        let (_, _, k) = self.dims();
        let inv_k = 1.0 / k as f64;
        let mut g = ComplexMatrix::zeros(k, k);
        match self {
            MeasurementEnsemble::UnitModulus(e) => {
                for j in 0..k {
                    for l in 0..=j {
                        let uu = dot_conj(e.u(j), e.u(l));
                        let vv = dot_conj(e.v(j), e.v(l)).conj();
                        g[(j, l)] = uu * vv * inv_k;
                    }
                }
            }
            MeasurementEnsemble::Gaussian(e) => {
                for j in 0..k {
                    let aj = e.matrix_entries(j);
                    for l in 0..=j {
                        g[(j, l)] = dot_conj(aj, e.matrix_entries(l)) * inv_k;
                    }
                }
            }
        }
        for j in 0..k {
            g[(j, j)].im = 0.0;
            for l in 0..j {
                g[(l, j)] = g[(j, l)].conj();
            }
        }
        g
    }

    /// Serialized payload size: `K (M + N)` phases or `2 K M N` real parts.
    pub fn storage_bytes(&self) -> usize {
        let (m, n, k) = self.dims();
        match self {
            MeasurementEnsemble::UnitModulus(_) => k * (m + n) * SCALAR_BYTES,
            MeasurementEnsemble::Gaussian(_) => 2 * k * m * n * SCALAR_BYTES,
        }
    }

    /// `y = A(X) + z` with `z` iid complex normal of standard deviation `noise_std`.
    pub fn measure<R: Rng + ?Sized>(&self, x: &ComplexMatrix, noise_std: f64, rng: &mut R) -> Result<ComplexVector> {
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(invalid("noise standard deviation must be finite and non-negative"));
        }
        let mut y = self.apply(x)?;
        if noise_std > 0.0 {
            for yk in y.iter_mut() {
                *yk += sample_complex_gaussian(rng) * noise_std;
            }
        }
        Ok(y)
    }
}

/// Storage ratio of a rank-one ensemble to a Gaussian one of equal shape: `(M + N) / (2 M N)`.
pub fn storage_ratio(m: usize, n: usize) -> f64 {
    (m + n) as f64 / (2 * m * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;
    use rand_chacha::ChaCha8Rng;
    use rand::SeedableRng;

    struct ZeroRng;

    impl RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0);
        }
    }

    fn zero_phase_ensemble(m: usize, n: usize, k: usize) -> MeasurementEnsemble {
        MeasurementEnsemble::UnitModulus(
            UnitModulusEnsemble::from_phases(m, n, k, alloc::vec![0.0; k * m], alloc::vec![0.0; k * n]).unwrap(),
        )
    }

    fn random_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        sample_gaussian_matrix(m, n, rng)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_modulus_vector_entries() {
        let v = sample_unit_modulus_vector(3, &mut RngStream::new(1, 2).rng()).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let one = sample_unit_modulus_vector(1, &mut ZeroRng).unwrap();
        assert_eq!(one[0], c(1.0, 0.0));
        assert!(sample_unit_modulus_vector(0, &mut ZeroRng).is_err());
    }

    #[test]
    fn unit_modulus_mean_is_zero() {
        let mut rng = RngStream::new(3, 0).rng();
        let n = 100_000;
        let mut acc = c(0.0, 0.0);
        for _ in 0..n {
            acc += sample_unit_modulus_vector(1, &mut rng).unwrap()[0];
        }
        let mean = acc / n as f64;
        let bound = 3.0 / libm::sqrt(n as f64);
        assert!(mean.re.abs() < bound && mean.im.abs() < bound, "{mean}");
    }

    #[test]
    fn ensemble_shapes_and_determinism() {
        let s = RngStream::new(5, 9);
        let a = sample_unit_modulus_ensemble(2, 2, 3, &s).unwrap();
        let b = sample_unit_modulus_ensemble(2, 2, 3, &s).unwrap();
        let MeasurementEnsemble::UnitModulus(ea) = &a else { panic!() };
        assert_eq!(ea.theta().len(), 6);
        assert_eq!(ea.phi().len(), 6);
        assert!(ea.theta().iter().chain(ea.phi()).all(|&p| (0.0..TAU).contains(&p)));
        assert_eq!(a, b);
        for k in 0..3 {
            assert!(a.measurement_matrix(k).as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
        assert!(sample_unit_modulus_ensemble(0, 2, 3, &s).is_err());
        assert!(sample_gaussian_ensemble(2, 2, 0, &s).is_err());
        let g = sample_gaussian_ensemble(1, 1, 1, &s).unwrap();
        assert_eq!(g.dims(), (1, 1, 1));
        assert_eq!(g, sample_gaussian_ensemble(1, 1, 1, &s).unwrap());
    }

    #[test]
    fn from_phases_validates_range() {
        assert!(UnitModulusEnsemble::from_phases(1, 1, 1, alloc::vec![TAU], alloc::vec![0.0]).is_err());
        assert!(UnitModulusEnsemble::from_phases(1, 1, 1, alloc::vec![-0.1], alloc::vec![0.0]).is_err());
        assert!(UnitModulusEnsemble::from_phases(1, 1, 2, alloc::vec![0.0], alloc::vec![0.0]).is_err());
    }

    #[test]
    fn gaussian_entries_have_unit_variance() {
        let e = sample_gaussian_ensemble(10, 10, 10_000, &RngStream::new(11, 0)).unwrap();
        let MeasurementEnsemble::Gaussian(g) = &e else { panic!() };
        let mean: f64 = g.entries().iter().map(|z| z.norm_sqr()).sum::<f64>() / g.entries().len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn apply_small_cases() {
        let e = zero_phase_ensemble(2, 2, 1);
        let mut x = ComplexMatrix::zeros(2, 2);
        x[(0, 0)] = c(1.0, 0.0);
        assert_eq!(e.apply(&x).unwrap()[0], c(1.0, 0.0));
        let y = e.apply(&ComplexMatrix::zeros(2, 2)).unwrap();
        assert!(y.iter().all(|z| *z == c(0.0, 0.0)));
        assert!(e.apply(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn adjoint_small_cases() {
        let e = zero_phase_ensemble(2, 3, 1);
        let ones = e.apply_adjoint(&[c(1.0, 0.0)]).unwrap();
        assert!(ones.as_slice().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        let zero = e.apply_adjoint(&[c(0.0, 0.0)]).unwrap();
        assert_eq!(zero, ComplexMatrix::zeros(2, 3));
        assert!(e.apply_adjoint(&[c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn expected_isometry_unit_modulus() {
        let mut rng = RngStream::new(21, 0).rng();
        let x = random_matrix(3, 4, &mut rng);
        let x = x.scale_real(1.0 / x.frobenius_norm());
        let base = RngStream::new(21, 1);
        let trials = 10_000;
        let vals: alloc::vec::Vec<f64> = (0..trials)
            .map(|t| sample_unit_modulus_ensemble(3, 4, 5, &base.substream(t)).unwrap().apply(&x).unwrap().norm_sqr())
            .collect();
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials as f64 - 1.0);
        let se = libm::sqrt(var / trials as f64);
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn storage_counts() {
        let e = MeasurementEnsemble::UnitModulus(
            UnitModulusEnsemble::from_phases(40, 80, 1000, alloc::vec![0.0; 40_000], alloc::vec![0.0; 80_000]).unwrap(),
        );
        assert_eq!(e.storage_bytes(), 960_000);
        let g = GaussianEnsemble { m: 40, n: 80, k: 1000, data: alloc::vec::Vec::new() };
        assert_eq!(MeasurementEnsemble::Gaussian(g).storage_bytes(), 51_200_000);
        assert_eq!(960_000.0 / 51_200_000.0, 3.0 / 160.0);
        assert_eq!(storage_ratio(40, 80), 3.0 / 160.0);
    }

    #[test]
    fn gram_diagonal_and_symmetry() {
        let e = sample_unit_modulus_ensemble(3, 5, 7, &RngStream::new(2, 2)).unwrap();
        let g = e.gram_matrix();
        for j in 0..7 {
            assert!((g[(j, j)] - c(15.0 / 7.0, 0.0)).norm() < 1e-12);
            for l in 0..7 {
                assert!((g[(j, l)] - g[(l, j)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_knob() {
        let e = zero_phase_ensemble(2, 2, 3);
        let x = ComplexMatrix::identity(2);
        let mut rng = RngStream::new(0, 0).rng();
        assert_eq!(e.measure(&x, 0.0, &mut rng).unwrap(), e.apply(&x).unwrap());
        assert_ne!(e.measure(&x, 0.1, &mut rng).unwrap(), e.apply(&x).unwrap());
        assert!(e.measure(&x, -1.0, &mut rng).is_err());
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn linear_adjoint_and_gram(seed in any::<u64>(), m in 1usize..6, n in 1usize..6, k in 1usize..9, gaussian in any::<bool>()) {
            let kind = if gaussian { EnsembleKind::Gaussian } else { EnsembleKind::UnitModulus };
            let e = sample_ensemble(kind, m, n, k, &RngStream::new(seed, 0)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x1 = random_matrix(m, n, &mut rng);
            let x2 = random_matrix(m, n, &mut rng);
            let (a, b) = (sample_complex_gaussian(&mut rng), sample_complex_gaussian(&mut rng));
            let combo = x1.scale(a).add(&x2.scale(b));
            let lhs = e.apply(&combo).unwrap();
            let rhs = e.apply(&x1).unwrap().scale(a).add(&e.apply(&x2).unwrap().scale(b));
            prop_assert!(lhs.sub(&rhs).norm() <= 1e-10 * rhs.norm().max(1.0));

            let y = ComplexVector::new((0..k).map(|_| sample_complex_gaussian(&mut rng)).collect()).unwrap();
            let left = e.apply(&x1).unwrap().inner(&y);
            let right = x1.inner(&e.apply_adjoint(&y).unwrap());
            prop_assert!(rel(left, right) <= 1e-10);

            let gy = e.gram_matrix().matvec(&y);
            let composed = e.apply(&e.apply_adjoint(&y).unwrap()).unwrap();
            for (p, q) in gy.iter().zip(composed.iter()) {
                prop_assert!((p - q).norm() <= 1e-10 * (1.0 + q.norm()));
            }
        }

        #[test]
        fn factored_matches_materialized(seed in any::<u64>(), m in 1usize..9, n in 1usize..9, k in 1usize..6) {
            let e = sample_unit_modulus_ensemble(m, n, k, &RngStream::new(seed, 1)).unwrap();
            let x = random_matrix(m, n, &mut ChaCha8Rng::seed_from_u64(seed));
            let a = e.apply(&x).unwrap();
            let b = e.apply_materialized(&x).unwrap();
            for (p, q) in a.iter().zip(b.iter()) {
                prop_assert!((p - q).norm() <= 1e-12 * (1.0 + q.norm()));
            }
        }
    }
}

//! Quick oracle suites for the `selftest` command.

use std::fmt::Write as _;

use rand::Rng;

use riplab_core::linalg::{svd_thin, truncated_svd};
use riplab_core::measurements::{normalized_all_ones, sample_ensemble, sample_gaussian_matrix, sample_unit_frobenius_matrix, EnsembleKind};
use riplab_core::moments::{
    abelian_square_count, estimate_moment, exact_all_ones_moment, legendre_sum, verify_moment_product_inequality,
    weighted_multinomial_sum, NonnegativeDistribution,
};
use riplab_core::recovery::{
    altmin_recover, factored_gd_recover, factored_gradient, factored_loss, nuclear_norm_recover, random_low_rank, FactorPair,
    Solver,
};
use riplab_core::tailbounds::{empirical_tail_probability, TailBoundCalculator, TailSide};
use riplab_core::{Complex64, ComplexMatrix, Executor, RngStream};

type Check = std::result::Result<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub suites: Vec<SuiteOutcome>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for suite in &self.suites {
            let _ = writeln!(s, "{} {}: {}", if suite.passed { "PASS" } else { "FAIL" }, suite.name, suite.detail);
        }
        let passed = self.suites.iter().filter(|s| s.passed).count();
        let _ = writeln!(s, "selftest: {passed}/{} suites passed", self.suites.len());
        s
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn combinatorics() -> Check {
    for t in 0..=6 {
        for m in 1..=5 {
            // g(t, M) / M^t two ways: recurrence and enumeration over compositions
            let recurrence = exact_all_ones_moment(t, m, 1).map_err(|e| e.to_string())?;
            let enumeration = weighted_multinomial_sum(t, &vec![1.0 / (m as f64).sqrt(); m]).map_err(|e| e.to_string())?;
            ensure((recurrence - enumeration).abs() <= 1e-9 * recurrence, || {
                format!("t={t} M={m}: recurrence {recurrence}, enumeration {enumeration}")
            })?;
        }
    }
    for m in 1..=100usize {
        let g = abelian_square_count(2, m).map_err(|e| e.to_string())?.to_string();
        ensure(g == (2 * m * m - m).to_string(), || format!("g(2,{m}) = {g}"))?;
    }
    Ok("recurrence agrees with enumeration and g(2,M) = 2M^2 - M".into())
}

fn moment_inequalities(seed: u64) -> Check {
    for n in 2..=12 {
        let values: Vec<f64> = (0..=20).map(|i| legendre_sum(n, i as f64 * 0.05).unwrap_or(f64::NAN)).collect();
        let argmax = (0..=20).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        ensure(argmax == 10, || format!("legendre sum n={n} peaks at grid index {argmax}"))?;
    }
    let mut rng = RngStream::for_experiment(seed, "selftest-weights").rng();
    for _ in 0..50 {
        let m = rng.random_range(1..=5usize);
        let t = rng.random_range(0..=6usize);
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let nrm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
        let c: Vec<f64> = raw.iter().map(|x| x / nrm).collect();
        let v = weighted_multinomial_sum(t, &c).map_err(|e| e.to_string())?;
        let bound = exact_all_ones_moment(t, m, 1).map_err(|e| e.to_string())?;
        ensure(v <= bound * (1.0 + 1e-12), || format!("weighted sum {v} exceeds {bound} (t={t}, M={m})"))?;
    }
    let sq = NonnegativeDistribution::SquaredGaussian { scale: 1.0 };
    let check = verify_moment_product_inequality(&[sq, sq], &[2, 1], 50_000, &RngStream::for_experiment(seed, "selftest-product"))
        .map_err(|e| e.to_string())?;
    ensure(check.holds, || format!("product moment {} exceeds the bound", check.product_mean))?;
    Ok("legendre argmax at 1/2, weighted sums below uniform, product moments bounded".into())
}

fn measurement_operators(seed: u64) -> Check {
    let base = RngStream::for_experiment(seed, "selftest-adjoint");
    let mut worst: f64 = 0.0;
    for i in 0..10u64 {
        for kind in [EnsembleKind::UnitModulus, EnsembleKind::Gaussian] {
            let ens = sample_ensemble(kind, 5, 7, 30, &base.substream_at(&[i, u64::from(kind.tag())])).map_err(|e| e.to_string())?;
            let mut rng = base.substream_at(&[i, 9]).rng();
            let x = sample_gaussian_matrix(5, 7, &mut rng);
            let y = sample_gaussian_matrix(30, 1, &mut rng).into_vec();
            let ax = ens.apply(&x).map_err(|e| e.to_string())?;
            let lhs: Complex64 = ax.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
            let rhs = x.inner(&ens.apply_adjoint(&y).map_err(|e| e.to_string())?);
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1e-300));
        }
    }
    ensure(worst <= 1e-10, || format!("adjoint identity off by {worst:e}"))?;
    Ok(format!("adjoint identity within {worst:.1e}"))
}

fn monte_carlo_moments(seed: u64) -> Check {
    let est = estimate_moment(&normalized_all_ones(4, 4), 2, 200_000, &RngStream::for_experiment(seed, "selftest-moment"))
        .map_err(|e| e.to_string())?;
    let exact = exact_all_ones_moment(2, 4, 4).map_err(|e| e.to_string())?;
    ensure((est.mean - exact).abs() <= 3.0 * est.stderr, || format!("estimate {} vs exact {exact}", est.mean))?;
    Ok(format!("all-ones fourth moment {:.4} vs exact {exact}", est.mean))
}

fn tail_bounds<E: Executor>(seed: u64, exec: &E) -> Check {
    let calc = TailBoundCalculator::new(4, 4).map_err(|e| e.to_string())?;
    for i in 1..=9 {
        let alpha = i as f64 / 10.0;
        for side in [TailSide::Upper, TailSide::Lower] {
            let r = calc.bound(side, alpha, 1).map_err(|e| e.to_string())?;
            ensure(r.per_measurement_log < 0.0, || format!("{} exponent at alpha={alpha} is not negative", side.name()))?;
        }
    }
    let x = sample_unit_frobenius_matrix(4, 4, &mut RngStream::for_experiment(seed, "selftest-x").rng());
    for side in [TailSide::Upper, TailSide::Lower] {
        let bound = calc.bound(side, 0.5, 20).map_err(|e| e.to_string())?;
        let est = empirical_tail_probability(side, &x, 0.5, 20, 4000, &RngStream::for_experiment(seed, "selftest-tail"), exec)
            .map_err(|e| e.to_string())?;
        ensure(est.estimate <= bound.total_bound + 3.0 * est.stderr, || {
            format!("{} tail {} above bound {}", side.name(), est.estimate, bound.total_bound)
        })?;
    }
    Ok("exponents negative, empirical tails below the bounds".into())
}

fn svd_checks(seed: u64) -> Check {
    let base = RngStream::for_experiment(seed, "selftest-svd");
    for i in 0..20u64 {
        let (m, n) = (3 + (i % 6) as usize, 8 - (i % 5) as usize);
        let x = sample_gaussian_matrix(m, n, &mut base.substream(i).rng());
        let svd = svd_thin(&x).map_err(|e| e.to_string())?;
        let p = m.min(n);
        let eye = ComplexMatrix::identity(p);
        ensure(svd.u.adjoint_matmul(&svd.u).sub(&eye).frobenius_norm() <= 1e-9, || "U not orthonormal".into())?;
        ensure(svd.v.adjoint_matmul(&svd.v).sub(&eye).frobenius_norm() <= 1e-9, || "V not orthonormal".into())?;
        ensure(x.sub(&svd.reconstruct()).frobenius_norm() <= 1e-10 * x.frobenius_norm(), || "reconstruction".into())?;
        let t = truncated_svd(&x, 1, 1e-12).map_err(|e| e.to_string())?;
        let tail: f64 = svd.s[1..].iter().map(|s| s * s).sum();
        let err = x.sub(&t.reconstruct()).frobenius_norm_sqr();
        ensure((err - tail).abs() <= 1e-9 * x.frobenius_norm_sqr(), || "rank-one truncation is not optimal".into())?;
    }
    Ok("orthonormal factors, exact reconstruction, optimal truncation".into())
}

fn gradient_checks(seed: u64) -> Check {
    let base = RngStream::for_experiment(seed, "selftest-gradient");
    let mut worst: f64 = 0.0;
    for i in 0..5u64 {
        let ens = sample_ensemble(EnsembleKind::UnitModulus, 4, 3, 10, &base.substream_at(&[i, 0])).map_err(|e| e.to_string())?;
        let mut rng = base.substream_at(&[i, 1]).rng();
        let y = sample_gaussian_matrix(10, 1, &mut rng).into_vec();
        let f = FactorPair::new(sample_gaussian_matrix(4, 2, &mut rng), sample_gaussian_matrix(3, 2, &mut rng).scale_real(0.5))
            .map_err(|e| e.to_string())?;
        let g = factored_gradient(&ens, &y, &f).map_err(|e| e.to_string())?;
        let eps = 1e-5;
        let (mut diff, mut scale) = (0.0, 0.0);
        for which in 0..2 {
            let len = if which == 0 { f.l.as_slice().len() } else { f.r.as_slice().len() };
            for idx in 0..len {
                for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                    let at = |sign: f64| {
                        let mut h = f.clone();
                        let target = if which == 0 { &mut h.l } else { &mut h.r };
                        target.as_mut_slice()[idx] += dir * (sign * eps);
                        factored_loss(&ens, &y, &h).unwrap_or(f64::NAN)
                    };
                    let numeric = (at(1.0) - at(-1.0)) / (2.0 * eps);
                    let grad = if which == 0 { &g.grad_l } else { &g.grad_r };
                    let analytic = (grad.as_slice()[idx].conj() * dir).re;
                    diff += (numeric - analytic).powi(2);
                    scale += analytic * analytic;
                }
            }
        }
        worst = worst.max((diff / scale).sqrt());
    }
    ensure(worst <= 1e-5, || format!("finite differences disagree by {worst:e}"))?;
    Ok(format!("finite differences agree within {worst:.1e}"))
}

fn recovery(seed: u64) -> Check {
    let stream = RngStream::for_experiment(seed, "selftest-recovery");
    let truth = random_low_rank(16, 24, 2, &mut stream.substream(0).rng()).map_err(|e| e.to_string())?;
    let ens = sample_ensemble(EnsembleKind::UnitModulus, 16, 24, 480, &stream.substream(1)).map_err(|e| e.to_string())?;
    let y = ens.apply(&truth).map_err(|e| e.to_string())?.into_inner();
    let results = [
        nuclear_norm_recover(&ens, &y, &Solver::Nuclear.default_options(), Some(&truth)),
        altmin_recover(&ens, &y, 2, &Solver::AltMin.default_options(), Some(&truth)),
        factored_gd_recover(&ens, &y, 2, &Solver::Gd.default_options(), Some(&truth)),
    ];
    let mut detail = Vec::new();
    for (solver, res) in [Solver::Nuclear, Solver::AltMin, Solver::Gd].into_iter().zip(results) {
        let err = res.map_err(|e| e.to_string())?.rel_error.unwrap_or(f64::INFINITY);
        ensure(err <= 1e-3, || format!("{} rel_error {err:e}", solver.name()))?;
        detail.push(format!("{} {err:.1e}", solver.name()));
    }
    Ok(format!("rel_error {}", detail.join(", ")))
}

/// Runs every suite; a failing suite does not stop the others.
pub fn run_selftest<E: Executor>(seed: u64, exec: &E) -> SelftestReport {
    let suites: Vec<(&'static str, Check)> = vec![
        ("combinatorics", combinatorics()),
        ("moment-inequalities", moment_inequalities(seed)),
        ("measurement-operators", measurement_operators(seed)),
        ("monte-carlo-moments", monte_carlo_moments(seed)),
        ("tail-bounds", tail_bounds(seed, exec)),
        ("svd", svd_checks(seed)),
        ("gradients", gradient_checks(seed)),
        ("recovery", recovery(seed)),
    ];
    SelftestReport {
        suites: suites
            .into_iter()
            .map(|(name, r)| match r {
                Ok(detail) => SuiteOutcome { name, passed: true, detail },
                Err(detail) => SuiteOutcome { name, passed: false, detail },
            })
            .collect(),
    }
}

use num_bigint::BigUint;
use riplab_core::measurements::{normalized_all_ones, sample_unit_frobenius_matrix};
use riplab_core::moments::{
    abelian_square_count, estimate_moment, estimate_moments, exact_all_ones_moment, legendre_sum, verify_all_ones_dominance,
    verify_moment_product_inequality, weighted_multinomial_sum, AllOnesMoments, NonnegativeDistribution,
};
use riplab_core::{RngStream, Sequential};

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k))
}

/// All compositions of `t` into `m` non-negative parts, by odometer.
fn compositions(t: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut parts = vec![0usize; m];
    loop {
        if parts.iter().sum::<usize>() == t {
            out.push(parts.clone());
        }
        let mut i = 0;
        loop {
            if i == m {
                return out;
            }
            parts[i] += 1;
            if parts[i] <= t {
                break;
            }
            parts[i] = 0;
            i += 1;
        }
    }
}

fn brute_force_count(t: usize, m: usize) -> BigUint {
    compositions(t, m)
        .into_iter()
        .map(|c| {
            let denom = c.iter().fold(BigUint::from(1u32), |acc, &k| acc * factorial(k));
            let multi = factorial(t) / denom;
            &multi * &multi
        })
        .sum()
}

fn binomial(n: usize, k: usize) -> BigUint {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[test]
fn recurrence_matches_enumeration_and_closed_forms() {
    for t in 0..=5 {
        for m in 1..=4 {
            assert_eq!(abelian_square_count(t, m).unwrap(), brute_force_count(t, m), "t={t} m={m}");
        }
    }
    for t in 0..=10 {
        assert_eq!(abelian_square_count(t, 2).unwrap(), binomial(2 * t, t));
    }
    for m in 1..=100usize {
        assert_eq!(abelian_square_count(2, m).unwrap(), BigUint::from(2 * m * m - m));
    }
    assert_eq!(abelian_square_count(1, 5).unwrap(), BigUint::from(5u32));
    assert!(abelian_square_count(1, 0).is_err());
}

#[test]
fn all_ones_moment_values() {
    assert_eq!(exact_all_ones_moment(1, 7, 3).unwrap(), 1.0);
    assert_eq!(exact_all_ones_moment(2, 2, 2).unwrap(), 2.25);
    let closed = (2.0 - 1.0 / 40.0) * (2.0 - 1.0 / 80.0);
    assert!((exact_all_ones_moment(2, 40, 80).unwrap() - closed).abs() < 1e-15);
    // the log-space table agrees with the exact one where both apply
    let exact = AllOnesMoments::new(16, 24, 40).unwrap();
    assert!(exact.is_exact());
    let big = AllOnesMoments::new(16, 24, 100).unwrap();
    assert!(!big.is_exact());
    for t in 0..=40 {
        let (a, b) = (exact.ln_value(t), big.ln_value(t));
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "t={t}");
    }
}

#[test]
fn legendre_sum_peaks_at_half() {
    assert_eq!(legendre_sum(1, 0.3).unwrap(), 1.0);
    assert!((legendre_sum(2, 0.5).unwrap() - 1.5).abs() < 1e-15);
    assert_eq!(legendre_sum(2, 0.0).unwrap(), 1.0);
    assert!(legendre_sum(2, 1.5).is_err());
    for n in 2..=12 {
        let values: Vec<f64> = (0..=20).map(|i| legendre_sum(n, i as f64 * 0.05).unwrap()).collect();
        let argmax = (0..=20).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        assert_eq!(argmax, 10, "n={n}");
    }
}

#[test]
fn weighted_sum_is_maximized_by_uniform_weights() {
    use rand::Rng;
    let mut rng = RngStream::new(5, 0).rng();
    for _ in 0..200 {
        let m = rng.random_range(1..=5usize);
        let t = rng.random_range(0..=6usize);
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let nrm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
        let c: Vec<f64> = raw.iter().map(|x| x / nrm).collect();
        let bound = exact_all_ones_moment(t, m, 1).unwrap();
        assert!(weighted_multinomial_sum(t, &c).unwrap() <= bound * (1.0 + 1e-12));
        let uniform = vec![1.0 / (m as f64).sqrt(); m];
        assert!((weighted_multinomial_sum(t, &uniform).unwrap() - bound).abs() <= 1e-9 * bound);
    }
    let mut e1 = vec![0.0; 4];
    e1[0] = 1.0;
    assert_eq!(weighted_multinomial_sum(5, &e1).unwrap(), 1.0);
    assert!(weighted_multinomial_sum(2, &[0.5, 0.5]).is_err());
}

#[test]
fn monte_carlo_matches_all_ones_moment() {
    let x = normalized_all_ones(4, 4);
    let est = estimate_moment(&x, 2, 1_000_000, &RngStream::new(1, 2)).unwrap();
    let exact = exact_all_ones_moment(2, 4, 4).unwrap();
    assert!((est.mean - exact).abs() <= 3.0 * est.stderr, "{est:?} vs {exact}");
    let zero = estimate_moment(&x, 0, 10, &RngStream::new(1, 2)).unwrap();
    assert_eq!((zero.mean, zero.stderr), (1.0, 0.0));
    assert!(estimate_moment(&x, 1, 1, &RngStream::new(1, 2)).is_err());
}

#[test]
fn moments_are_homogeneous() {
    let stream = RngStream::new(8, 1);
    let x = sample_unit_frobenius_matrix(3, 5, &mut stream.substream(0).rng());
    let c = 1.7f64;
    let a = estimate_moments(&x, 3, 5000, &stream.substream(1), &Sequential).unwrap();
    let b = estimate_moments(&x.scale_real(c), 3, 5000, &stream.substream(1), &Sequential).unwrap();
    for (ea, eb) in a.iter().zip(&b) {
        let f = c.powi(2 * ea.t as i32);
        assert!((eb.mean - f * ea.mean).abs() <= 1e-12 * eb.mean.abs().max(1.0));
    }
}

#[test]
fn dominance_holds_at_small_scale() {
    let report = verify_all_ones_dominance(4, 6, 5, 12, 20_000, &RngStream::new(3, 0), &Sequential).unwrap();
    assert_eq!(report.rows.len(), 60);
    assert!(report.all_dominated());
    for row in report.rows.iter().filter(|r| r.t == 1 || r.matrix_id == 0) {
        assert!((row.mc_mean - row.exact_all_ones).abs() <= 3.0 * row.mc_stderr + 1e-12, "{row:?}");
    }
}

#[test]
fn entrywise_modulus_does_not_decrease_moments() {
    let stream = RngStream::new(4, 0);
    for i in 0..5 {
        let x = sample_unit_frobenius_matrix(4, 5, &mut stream.substream_at(&[i, 0]).rng());
        let a = estimate_moments(&x, 4, 40_000, &stream.substream_at(&[i, 1]), &Sequential).unwrap();
        let b = estimate_moments(&x.abs(), 4, 40_000, &stream.substream_at(&[i, 2]), &Sequential).unwrap();
        for (ea, eb) in a.iter().zip(&b).skip(1) {
            let noise = 3.0 * (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
            assert!(eb.mean + noise >= ea.mean, "t={} {} vs {}", ea.t, eb.mean, ea.mean);
        }
    }
}

#[test]
fn product_moment_inequality() {
    let stream = RngStream::new(6, 0);
    let sq = NonnegativeDistribution::SquaredGaussian { scale: 1.0 };
    let check = verify_moment_product_inequality(&[sq, sq], &[2, 1], 100_000, &stream.substream(0)).unwrap();
    assert!(check.holds && check.t == 3);
    let single = verify_moment_product_inequality(&[sq], &[3], 1000, &stream.substream(1)).unwrap();
    assert!((single.product_mean - single.power_means[0].0).abs() <= 1e-12 * single.product_mean);
    let two = NonnegativeDistribution::Constant(2.0);
    let c = verify_moment_product_inequality(&[two, two, two], &[1, 2, 0], 10, &stream.substream(2)).unwrap();
    assert_eq!((c.product_mean, c.power_means[0].0), (8.0, 8.0));
    assert!(verify_moment_product_inequality(&[sq], &[-1], 10, &stream).is_err());
}

use riplab_core::tailbounds::{lower_tail_bound, upper_tail_bound, TailBoundCalculator, TailSide};

// Frozen from an independent evaluation (Python big integers for g(t, M), t <= 1000,
// bounded scalar minimization): argmin h and min ln f for alpha = 0.3, M = 40, N = 80.
const REF_H: f64 = 0.057_577_896_859_251_53;
const REF_LN_F: f64 = -0.011_368_043_187_998_361;

#[test]
fn upper_bound_matches_grid_and_reference_at_40_by_80() {
    let calc = TailBoundCalculator::new(40, 80).unwrap();
    let report = calc.upper(0.3, 1000).unwrap();
    let grid_min = (1..=20_000)
        .map(|i| calc.upper_log_factor(i as f64 * 1e-4, 0.3))
        .fold(f64::INFINITY, f64::min);
    let f_opt = report.per_measurement_log.exp();
    let f_grid = grid_min.exp();
    assert!(f_opt <= f_grid * (1.0 + 1e-15));
    assert!((f_grid - f_opt) / f_opt <= 1e-6, "grid {f_grid} opt {f_opt}");
    assert!((report.per_measurement_log - REF_LN_F).abs() <= 1e-9, "{report:?}");
    assert!((report.h_star - REF_H).abs() <= 1e-4);
    assert!(report.total_bound < 1.0);
}

#[test]
fn exponents_negative_and_monotone_in_alpha() {
    let calc = TailBoundCalculator::new(4, 4).unwrap();
    for side in [TailSide::Upper, TailSide::Lower] {
        let mut prev = f64::INFINITY;
        for i in 1..=9 {
            let alpha = i as f64 / 10.0;
            let r = calc.bound(side, alpha, 20).unwrap();
            assert!(r.per_measurement_log < 0.0, "{r:?}");
            assert!(r.total_bound <= prev + 1e-12);
            prev = r.total_bound;
            let r2 = r.with_measurements(40);
            assert!((r2.pre_clamp_bound() - r.pre_clamp_bound().powi(2)).abs() <= 1e-12);
        }
    }
}

#[test]
fn small_alpha_large_dims_is_still_decaying() {
    let up = upper_tail_bound(0.01, 1000, 40, 80).unwrap();
    let low = lower_tail_bound(0.01, 1000, 40, 80).unwrap();
    assert!(up.per_measurement_log < 0.0 && up.per_measurement_log > -1e-3);
    assert!(low.per_measurement_log < 0.0);
}

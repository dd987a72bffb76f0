//! Exact abelian-square counts and related sums.
//!
//! `g(t, M) = sum over compositions t_1 + ... + t_M = t of multinomial(t; t_1..t_M)^2`
//! counts abelian squares of length `2t` over an `M`-letter alphabet and equals
//! `E |u^H 1|^{2t}` for a unit-modulus `u` of length `M`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// Largest number of compositions enumerated by [`weighted_multinomial_sum`].
pub const MAX_COMPOSITIONS: u128 = 1_000_000;

/// Exact results above this many decimal digits switch to the log-space path.
pub const EXACT_DIGIT_LIMIT: f64 = 1.0e4;

/// Longest table [`AllOnesMoments`] builds with big integers; the DP is
/// `O(M t^2)` big-integer products.
pub const EXACT_TABLE_MAX_ORDER: usize = 64;

/// Row `n` of Pascal's triangle, squared.
fn squared_binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 1..=n {
        c = c * BigUint::from(n - k + 1) / BigUint::from(k);
        row.push(c.clone());
    }
    row.into_iter().map(|c| &c * &c).collect()
}

/// `g(s, M)` for every `s <= t_max`, via `g(s, M) = sum_k C(s,k)^2 g(s-k, M-1)`.
pub fn abelian_square_table(t_max: usize, m: usize) -> Result<Vec<BigUint>> {
    if m == 0 {
        return Err(invalid("alphabet size M must be positive"));
    }
    let rows: Vec<Vec<BigUint>> = (0..=t_max).map(squared_binomial_row).collect();
    // g(s, 1) = 1
    let mut prev: Vec<BigUint> = alloc::vec![BigUint::one(); t_max + 1];
    for _ in 1..m {
        let cur: Vec<BigUint> = (0..=t_max)
            .map(|s| {
                rows[s].iter().enumerate().fold(BigUint::zero(), |acc, (k, c2)| acc + c2 * &prev[s - k])
            })
            .collect();
        prev = cur;
    }
    Ok(prev)
}

/// `g(t, M)`, exactly.
pub fn abelian_square_count(t: usize, m: usize) -> Result<BigUint> {
    Ok(abelian_square_table(t, m)?.pop().expect("table is non-empty"))
}

/// `ln C(n, k)` via summed logs.
fn ln_binomial(ln_fact: &[f64], n: usize, k: usize) -> f64 {
    ln_fact[n] - ln_fact[k] - ln_fact[n - k]
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += libm::log(i as f64);
        out.push(acc);
    }
    out
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(terms.map(|x| libm::exp(x - max)).sum::<f64>())
}

/// `ln g(s, M)` for `s <= t_max` in floating point, for sizes whose exact integers are
/// impractically long.
///
/// Uses `g(., a + b)[s] = sum_k C(s,k)^2 g(k, a) g(s - k, b)` with binary splitting of
/// `M`, so the cost is `O(t_max^2 log M)`.
pub fn ln_abelian_square_table(t_max: usize, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid("alphabet size M must be positive"));
    }
    let lf = ln_factorials(t_max);
    let combine = |a: &[f64], b: &[f64]| -> Vec<f64> {
        (0..=t_max)
            .map(|s| log_sum_exp((0..=s).map(|k| 2.0 * ln_binomial(&lf, s, k) + a[k] + b[s - k])))
            .collect()
    };
    // g(., 1) = 1
    let mut power = alloc::vec![0.0; t_max + 1];
    let mut acc: Option<Vec<f64>> = None;
    let mut rest = m;
    loop {
        if rest & 1 == 1 {
            acc = Some(match acc {
                None => power.clone(),
                Some(a) => combine(&a, &power),
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        power = combine(&power, &power);
    }
    Ok(acc.expect("m >= 1"))
}

/// Natural log of a positive big integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return libm::log(x.to_f64().unwrap_or(f64::INFINITY));
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value fits f64");
    libm::log(top) + shift as f64 * core::f64::consts::LN_2
}

/// `num / den` rounded to the nearest `f64` neighbourhood (relative error ~1e-16),
/// without overflowing intermediate conversions. Returns `inf` when the quotient
/// exceeds `f64::MAX`.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "division by zero");
    if num.is_zero() {
        return 0.0;
    }
    // scale so that the integer quotient has ~64 significant bits
    let shift = num.bits() as i64 - den.bits() as i64 - 64;
    let q = if shift >= 0 { num / (den << shift as u64) } else { (num << (-shift) as u64) / den };
    libm::ldexp(q.to_f64().expect("quotient fits f64"), shift as i32)
}

/// `E |u^H (1 1^T / sqrt(MN)) v|^{2t} = g(t,M) g(t,N) / (M^t N^t)`.
///
/// Evaluated exactly, with one final division.
pub fn exact_all_ones_moment(t: usize, m: usize, n: usize) -> Result<f64> {
    let gm = abelian_square_count(t, m)?;
    let gn = abelian_square_count(t, n)?;
    let den = BigUint::from(m).pow(t as u32) * BigUint::from(n).pow(t as u32);
    Ok(ratio_to_f64(&(gm * gn), &den))
}

/// All-ones moment majorants `E_t = g(t,M) g(t,N) / (MN)^t` for `t <= t_max`, kept in
/// log space so large orders do not overflow.
#[derive(Debug, Clone)]
pub struct AllOnesMoments {
    m: usize,
    n: usize,
    ln_values: Vec<f64>,
    /// Correctly rounded on the exact path.
    values: Vec<f64>,
    exact: bool,
}

impl AllOnesMoments {
    pub fn new(m: usize, n: usize, t_max: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("M and N must be positive"));
        }
        let digits = 2.0 * t_max as f64 * libm::log10(m.max(n) as f64);
        let exact = digits <= EXACT_DIGIT_LIMIT && t_max <= EXACT_TABLE_MAX_ORDER;
        if exact {
            let gm = abelian_square_table(t_max, m)?;
            let gn = if n == m { gm.clone() } else { abelian_square_table(t_max, n)? };
            let mn = BigUint::from(m) * BigUint::from(n);
            let mut den = BigUint::one();
            let mut ln_values = Vec::with_capacity(t_max + 1);
            let mut values = Vec::with_capacity(t_max + 1);
            for t in 0..=t_max {
                let num = &gm[t] * &gn[t];
                let v = ratio_to_f64(&num, &den);
                ln_values.push(if v.is_finite() { libm::log(v) } else { ln_biguint(&num) - ln_biguint(&den) });
                values.push(v);
                den *= &mn;
            }
            return Ok(Self { m, n, ln_values, values, exact });
        }
        let ln_mn = libm::log(m as f64) + libm::log(n as f64);
        let gm = ln_abelian_square_table(t_max, m)?;
        let gn = if n == m { gm.clone() } else { ln_abelian_square_table(t_max, n)? };
        let ln_values: Vec<f64> = (0..=t_max).map(|t| gm[t] + gn[t] - t as f64 * ln_mn).collect();
        let values = ln_values.iter().map(|&l| libm::exp(l)).collect();
        Ok(Self { m, n, ln_values, values, exact })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn t_max(&self) -> usize {
        self.ln_values.len() - 1
    }

    /// Whether the table came from exact integer arithmetic.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn ln_value(&self, t: usize) -> f64 {
        self.ln_values[t]
    }

    pub fn value(&self, t: usize) -> f64 {
        match t {
            0 | 1 => 1.0,
            _ => self.values[t],
        }
    }
}

/// `s_n(p) = sum_k C(n,k)^2 p^k (1-p)^(n-k)`, maximized over `p` at `p = 1/2`.
pub fn legendre_sum(n: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p must lie in [0, 1]"));
    }
    let lf = ln_factorials(n);
    let q = 1.0 - p;
    let mut sum = 0.0;
    for k in 0..=n {
        let weight = libm::pow(p, k as f64) * libm::pow(q, (n - k) as f64);
        if weight == 0.0 {
            continue;
        }
        sum += libm::exp(2.0 * ln_binomial(&lf, n, k)) * weight;
    }
    Ok(sum)
}

/// `sum over k_1 + ... + k_M = t of multinomial(t; k)^2 prod_m c_m^{2 k_m}` for
/// non-negative weights with `sum c_m^2 = 1`; by exact enumeration of compositions.
pub fn weighted_multinomial_sum(t: usize, c: &[f64]) -> Result<f64> {
    if c.is_empty() {
        return Err(invalid("weight vector must be non-empty"));
    }
    if c.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(invalid("weights must be finite and non-negative"));
    }
    let norm: f64 = c.iter().map(|w| w * w).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid("weights must satisfy sum c_m^2 = 1"));
    }
    let count = composition_count(t, c.len());
    if count > MAX_COMPOSITIONS {
        return Err(Error::TooLarge(alloc::format!(
            "{count} compositions exceed the enumeration cap of {MAX_COMPOSITIONS}"
        )));
    }
    let lf = ln_factorials(t);
    let ln_w: Vec<f64> = c.iter().map(|&w| 2.0 * libm::log(w)).collect();
    let mut parts = alloc::vec![0usize; c.len()];
    let mut total = 0.0;
    enumerate_compositions(t, 0, &mut parts, &mut |k| {
        let mut ln_term = 2.0 * lf[t];
        for (km, lw) in k.iter().zip(&ln_w) {
            if *km > 0 {
                ln_term += *km as f64 * lw - 2.0 * lf[*km];
            }
        }
        total += libm::exp(ln_term);
    });
    Ok(total)
}

/// `C(t + M - 1, M - 1)`, saturating.
pub fn composition_count(t: usize, m: usize) -> u128 {
    let (n, k) = (t + m - 1, (m - 1).min(t));
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Calls `visit` with every composition of `remaining` into `parts[idx..]`.
pub(crate) fn enumerate_compositions(remaining: usize, idx: usize, parts: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    if idx + 1 == parts.len() {
        parts[idx] = remaining;
        visit(parts);
        return;
    }
    for k in 0..=remaining {
        parts[idx] = k;
        enumerate_compositions(remaining - k, idx + 1, parts, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn small_counts() {
        assert_eq!(abelian_square_count(1, 5).unwrap(), big(5));
        assert_eq!(abelian_square_count(3, 2).unwrap(), big(20));
        assert_eq!(abelian_square_count(2, 3).unwrap(), big(15));
        assert_eq!(abelian_square_count(0, 7).unwrap(), big(1));
        assert_eq!(abelian_square_count(9, 1).unwrap(), big(1));
        assert!(abelian_square_count(2, 0).is_err());
    }

    #[test]
    fn all_ones_moment_values() {
        assert_eq!(exact_all_ones_moment(1, 7, 3).unwrap(), 1.0);
        assert_eq!(exact_all_ones_moment(2, 2, 2).unwrap(), 2.25);
        let v = exact_all_ones_moment(2, 40, 80).unwrap();
        // (2 - 1/40)(2 - 1/80) with g(2,M) = 2M^2 - M
        assert!((v - 1.975 * 1.9875).abs() < 1e-14);
        assert!((v - 3.9253125).abs() < 1e-14);
        assert_eq!(exact_all_ones_moment(0, 4, 4).unwrap(), 1.0);
    }

    #[test]
    fn log_path_matches_exact() {
        for m in [1, 2, 5, 6, 13] {
            let exact = abelian_square_table(30, m).unwrap();
            let logs = ln_abelian_square_table(30, m).unwrap();
            for (e, l) in exact.iter().zip(&logs) {
                assert!((ln_biguint(e) - l).abs() < 1e-12 * l.abs().max(1.0), "m={m}");
            }
        }
    }

    #[test]
    fn ratio_handles_huge_operands() {
        let num = BigUint::from(3u32).pow(2000);
        let den = BigUint::from(3u32).pow(1999) * big(2);
        assert!((ratio_to_f64(&num, &den) - 1.5).abs() < 1e-15);
        assert!((ratio_to_f64(&big(1), &big(3)) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(ratio_to_f64(&BigUint::from(10u32).pow(400), &big(1)), f64::INFINITY);
    }

    #[test]
    fn all_ones_table_matches_direct_values() {
        let table = AllOnesMoments::new(4, 6, 12).unwrap();
        assert!(table.is_exact());
        for t in 0..=12 {
            let direct = exact_all_ones_moment(t, 4, 6).unwrap();
            assert!((table.value(t) - direct).abs() <= 1e-12 * direct, "t={t}");
        }
    }

    #[test]
    fn legendre_values() {
        for p in [0.0, 0.3, 1.0] {
            assert!((legendre_sum(1, p).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((legendre_sum(2, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(legendre_sum(2, 0.0).unwrap(), 1.0);
        assert!(legendre_sum(2, 1.5).is_err());
        assert!(legendre_sum(2, -0.1).is_err());
    }

    #[test]
    fn weighted_sum_edge_cases() {
        for t in 0..6 {
            assert!((weighted_multinomial_sum(t, &[1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        }
        let m = 4;
        let uniform = alloc::vec![0.5; m];
        let g = abelian_square_count(5, m).unwrap().to_f64().unwrap();
        let expect = g / 4f64.powi(5);
        assert!((weighted_multinomial_sum(5, &uniform).unwrap() - expect).abs() < 1e-9 * expect);
        assert!(weighted_multinomial_sum(2, &[0.5, 0.5]).is_err());
        assert!(weighted_multinomial_sum(2, &[-1.0, 0.0]).is_err());
        assert!(matches!(weighted_multinomial_sum(40, &[0.1; 100]), Err(Error::TooLarge(_))));
    }

    #[test]
    fn composition_counts() {
        assert_eq!(composition_count(2, 3), 6);
        assert_eq!(composition_count(0, 5), 1);
        assert_eq!(composition_count(7, 1), 1);
        let mut n = 0;
        enumerate_compositions(4, 0, &mut [0; 3], &mut |_| n += 1);
        assert_eq!(n as u128, composition_count(4, 3));
    }
}

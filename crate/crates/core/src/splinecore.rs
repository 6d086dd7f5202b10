//! The B-spline `B(t) = sum_k (x_k - t)_+^{n-2} / prod_{j != k} (x_k - x_j)`
//! on arbitrary normalized knots.
//!
//! Two evaluation routes are kept side by side:
//!
//! * [`bspline_naive`] sums the explicit truncated-power formula in
//!   double-double and escalates to exact rational arithmetic when the
//!   running error bound is not small enough. It is the oracle.
//! * [`bspline_stable`] and [`bspline_reduced`] run the Cox-de Boor triangle,
//!   which only ever forms convex combinations for `r = 0`.
//!
//! `r` is an exponent reduction: the sum with `(x_k - t)_+^{n-2-r}` equals
//! `(-1)^r (n-2-r)!/(n-2)! * d^r B / dt^r`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::knotset::KnotVector;
use crate::quad;
use crate::real::{DoubleDouble, Real};

/// Largest knot count the extended-precision oracle accepts.
pub const ORACLE_MAX_N: usize = 24;
/// Relative error bound the oracle must certify.
pub const ORACLE_REL_TOL: f64 = 1e-10;

/// `(x - t)_+^e`, with the value at `x == t` taken to be 0 for every `e`.
pub fn truncated_power(x: f64, t: f64, e: u32) -> f64 {
    if x > t {
        (x - t).powi(e as i32)
    } else {
        0.0
    }
}

fn check_reduction(kv: &KnotVector, r: usize) -> Result<u32> {
    let n = kv.n();
    if r > n - 2 {
        return Err(Error::OrderTooHigh {
            requested: r,
            max: n - 2,
        });
    }
    Ok((n - 2 - r) as u32)
}

/// `W'(x_k) = prod_{j != k} (x_k - x_j)` in the requested precision.
///
/// Every factor is formed exactly in double-double before the product.
pub fn wprime_generic<R: Real>(xs: &[f64], k: usize) -> R {
    let mut p = R::one();
    for (j, &xj) in xs.iter().enumerate() {
        if j != k {
            let d = DoubleDouble::add_f64_exact(xs[k], -xj);
            p *= R::from_f64(d.hi) + R::from_f64(d.lo);
        }
    }
    p
}

fn wprime_dd_all(xs: &[f64]) -> Vec<DoubleDouble> {
    (0..xs.len())
        .map(|k| wprime_generic::<DoubleDouble>(xs, k))
        .collect()
}

/// Double-double evaluation of the truncated-power sum with a running
/// absolute error bound.
fn naive_dd(xs: &[f64], t: f64, e: u32) -> (DoubleDouble, f64) {
    let n = xs.len();
    let wp = wprime_dd_all(xs);
    let mut sum = DoubleDouble::ZERO;
    let mut mag = 0.0;
    for k in 0..n {
        if xs[k] > t {
            let d = DoubleDouble::add_f64_exact(xs[k], -t);
            let term = d.powi(e) / wp[k];
            mag += term.to_f64().abs();
            sum += term;
        }
    }
    // each term carries ~(e + n + 2) dd roundings; summation adds n more
    let gamma = (2 * n + e as usize + 4) as f64 * DoubleDouble::EPSILON;
    let bound = gamma * mag + f64::EPSILON * sum.to_f64().abs();
    (sum, bound)
}

fn exact_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite knot")
}

fn naive_exact(xs: &[f64], t: f64, e: u32) -> f64 {
    let tq = exact_rational(t);
    let xq: Vec<BigRational> = xs.iter().map(|&x| exact_rational(x)).collect();
    let mut sum = BigRational::zero();
    for k in 0..xs.len() {
        if xs[k] > t {
            let mut den = BigRational::from_integer(BigInt::from(1));
            for j in 0..xs.len() {
                if j != k {
                    den *= &xq[k] - &xq[j];
                }
            }
            let base = &xq[k] - &tq;
            let num = num_traits::pow(base, e as usize);
            sum += num / den;
        }
    }
    sum.to_f64().unwrap_or(f64::NAN)
}

/// Oracle evaluation of `sum_k (x_k - t)_+^{n-2-r} / W'(x_k)`.
///
/// Runs in double-double; if the error bound exceeds
/// [`ORACLE_REL_TOL`] of the result the sum is redone in exact rational
/// arithmetic. Refuses with `PrecisionLoss` for `n > ORACLE_MAX_N`.
pub fn bspline_naive(kv: &KnotVector, t: f64, r: usize) -> Result<f64> {
    let e = check_reduction(kv, r)?;
    let xs = kv.xs();
    if kv.n() > ORACLE_MAX_N {
        let (s, bound) = naive_dd(xs, t, e);
        return Err(Error::PrecisionLoss {
            estimate: bound,
            value: s.to_f64(),
        });
    }
    if t >= kv.last() {
        return Ok(0.0);
    }
    let (s, bound) = naive_dd(xs, t, e);
    let v = s.to_f64();
    if bound <= ORACLE_REL_TOL * v.abs() {
        return Ok(v);
    }
    Ok(naive_exact(xs, t, e))
}

/// Same as [`bspline_naive`] but without the rational fallback; returns the
/// double-double value and its error bound.
pub fn bspline_naive_dd(kv: &KnotVector, t: f64, r: usize) -> Result<(DoubleDouble, f64)> {
    let e = check_reduction(kv, r)?;
    Ok(naive_dd(kv.xs(), t, e))
}

/// Index `i` with `x_i <= t < x_{i+1}`, or `None` outside `[x_1, x_n)`.
fn find_span(xs: &[f64], t: f64) -> Option<usize> {
    let n = xs.len();
    if !(t >= xs[0] && t < xs[n - 1]) {
        return None;
    }
    // partition_point gives the first index with xs[i] > t
    Some(xs.partition_point(|&x| x <= t) - 1)
}

/// Cox-de Boor triangle up to `degree`, with the degree-0 indicator placed
/// on `span`. Returns `N_{i,degree}(t)` for every window `i`.
fn cox_de_boor<R: Real>(xs: &[f64], tt: R, degree: usize, span: usize) -> Vec<R> {
    let n = xs.len();
    let mut level: Vec<R> = (0..n - 1)
        .map(|i| if i == span { R::one() } else { R::zero() })
        .collect();
    for d in 1..=degree {
        let lo = span.saturating_sub(d);
        let next_len = n - 1 - d;
        let mut next = vec![R::zero(); next_len];
        for i in lo..=span.min(next_len - 1) {
            let mut v = R::zero();
            let a = level[i];
            if a != R::zero() {
                v += (tt - R::from_f64(xs[i])) / (R::from_f64(xs[i + d]) - R::from_f64(xs[i])) * a;
            }
            let b = level[i + 1];
            if b != R::zero() {
                v += (R::from_f64(xs[i + d + 1]) - tt)
                    / (R::from_f64(xs[i + d + 1]) - R::from_f64(xs[i + 1]))
                    * b;
            }
            next[i] = v;
        }
        level = next;
    }
    level
}

/// Exponent-reduced sum on a fixed polynomial piece, via Cox-de Boor for the
/// degree `n-2-r` windows followed by `r` divided-difference steps.
pub(crate) fn reduced_on_span<R: Real>(xs: &[f64], t: R, r: usize, span: usize) -> R {
    let n = xs.len();
    let e = n - 2 - r;
    let basis = cox_de_boor::<R>(xs, t, e, span);
    // window i covers x_i..x_{i+e+1}; divided difference of (. - t)_+^e there
    let mut dd: Vec<R> = (0..=r)
        .map(|i| basis[i] / (R::from_f64(xs[i + e + 1]) - R::from_f64(xs[i])))
        .collect();
    let mut width = e + 1;
    while dd.len() > 1 {
        width += 1;
        dd = (0..dd.len() - 1)
            .map(|i| (dd[i + 1] - dd[i]) / (R::from_f64(xs[i + width]) - R::from_f64(xs[i])))
            .collect();
    }
    dd[0]
}

/// Stable double evaluation of `B(t)`; exactly zero outside `[x_1, x_n)`.
pub fn bspline_stable(kv: &KnotVector, t: f64) -> f64 {
    match find_span(kv.xs(), t) {
        Some(span) => reduced_on_span::<f64>(kv.xs(), t, 0, span),
        None => 0.0,
    }
}

/// Stable evaluation of `sum_k (x_k - t)_+^{n-2-r} / W'(x_k)`.
pub fn bspline_reduced(kv: &KnotVector, t: f64, r: usize) -> Result<f64> {
    check_reduction(kv, r)?;
    Ok(bspline_reduced_unchecked::<f64>(kv, t, r))
}

pub(crate) fn bspline_reduced_unchecked<R: Real>(kv: &KnotVector, t: f64, r: usize) -> R {
    match find_span(kv.xs(), t) {
        Some(span) => reduced_on_span::<R>(kv.xs(), R::from_f64(t), r, span),
        None => R::zero(),
    }
}

/// The polynomial piece of the reduced sum belonging to `span`, evaluated at
/// any `t` (used for one-sided limits at knots). Works in any [`Real`].
pub fn bspline_piece<R: Real>(kv: &KnotVector, t: R, r: usize, span: usize) -> Result<R> {
    check_reduction(kv, r)?;
    if span + 1 >= kv.n() {
        return Err(Error::InvalidArgument(format!("span {span} out of range")));
    }
    Ok(reduced_on_span::<R>(kv.xs(), t, r, span))
}

/// `(n-2)! / (n-2-q)!`, the falling factorial linking derivatives to reductions.
pub fn falling_factorial(top: usize, q: usize) -> f64 {
    (0..q).map(|i| (top - i) as f64).product()
}

/// `d^q B / dt^q`, exact up to rounding via exponent reduction.
pub fn bspline_derivative(kv: &KnotVector, t: f64, q: usize) -> Result<f64> {
    let s = bspline_reduced(kv, t, q)?;
    let sign = if q.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * falling_factorial(kv.n() - 2, q) * s)
}

/// `sum_k (x_k - t/n)_+^{n-2-r} / W'(x_k)`, the comparand of the Gaussian
/// local limit at scale `n`.
pub fn bspline_scaled(kv: &KnotVector, t: f64, r: usize) -> Result<f64> {
    bspline_reduced(kv, t / kv.n() as f64, r)
}

/// Oracle version of [`bspline_scaled`].
pub fn bspline_scaled_naive(kv: &KnotVector, t: f64, r: usize) -> Result<f64> {
    bspline_naive(kv, t / kv.n() as f64, r)
}

/// `(n-1) * integral of B`, by adaptive Simpson on every knot span.
pub fn bspline_mass(kv: &KnotVector, tol: f64) -> Result<f64> {
    let xs = kv.xs();
    let spans = xs.len() - 1;
    let mut total = 0.0;
    for span in 0..spans {
        let f = |t: f64| reduced_on_span::<f64>(xs, t, 0, span);
        total += quad::adaptive_simpson(&f, xs[span], xs[span + 1], tol / spans as f64)?;
    }
    Ok((kv.n() - 1) as f64 * total)
}

/// Integral of `B` over `[a, b]` with one Gauss-Legendre rule per knot
/// piece (exact for the polynomial pieces when the rule is large enough).
pub fn bspline_integral(kv: &KnotVector, a: f64, b: f64) -> f64 {
    let xs = kv.xs();
    let n = xs.len();
    let rule = quad::GaussLegendre::new(n.div_ceil(2) + 1);
    let mut total = 0.0;
    for span in 0..n - 1 {
        let lo = xs[span].max(a);
        let hi = xs[span + 1].min(b);
        if hi > lo {
            total += rule.integrate(|t| reduced_on_span::<f64>(xs, t, 0, span), lo, hi);
        }
    }
    total
}

fn newton_table<R: Real>(nodes: &[f64], vals: &[R]) -> Result<R> {
    let m = nodes.len();
    for i in 0..m {
        for j in i + 1..m {
            if nodes[i] == nodes[j] {
                return Err(Error::DuplicateKnots(nodes[i], nodes[j]));
            }
        }
    }
    let mut col: Vec<R> = vals.to_vec();
    for level in 1..m {
        col = (0..m - level)
            .map(|i| {
                (col[i + 1] - col[i]) / (R::from_f64(nodes[i + level]) - R::from_f64(nodes[i]))
            })
            .collect();
    }
    Ok(col[0])
}

/// Divided difference `f[x_0, ..., x_order]` of the first `order + 1`
/// `(node, value)` pairs, by the recursive table in double-double.
pub fn divided_difference(values: &[(f64, f64)], order: usize) -> Result<f64> {
    if values.len() < order + 1 {
        return Err(Error::InvalidArgument(format!(
            "order {order} needs {} values, got {}",
            order + 1,
            values.len()
        )));
    }
    let used = &values[..=order];
    let nodes: Vec<f64> = used.iter().map(|p| p.0).collect();
    let vals: Vec<DoubleDouble> = used.iter().map(|p| DoubleDouble::new(p.1)).collect();
    newton_table(&nodes, &vals).map(|v| v.to_f64())
}

/// Partial-fraction form `sum_k f(x_k) / prod_{j != k} (x_k - x_j)` in
/// double-double.
pub fn divided_difference_sum(values: &[(f64, f64)]) -> Result<f64> {
    let nodes: Vec<f64> = values.iter().map(|p| p.0).collect();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(Error::DuplicateKnots(nodes[i], nodes[j]));
            }
        }
    }
    let mut s = DoubleDouble::ZERO;
    for (k, &(_, fk)) in values.iter().enumerate() {
        s += DoubleDouble::new(fk) / wprime_generic::<DoubleDouble>(&nodes, k);
    }
    Ok(s.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knotset::{family, normalize, Family};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn truncated_power_examples() {
        assert_eq!(truncated_power(1.0, 0.0, 2), 1.0);
        assert_eq!(truncated_power(0.0, 1.0, 3), 0.0);
        assert_eq!(truncated_power(0.5, 0.5, 0), 0.0);
        assert_eq!(truncated_power(0.6, 0.5, 0), 1.0);
    }

    #[test]
    fn two_knot_spline_is_box() {
        let kv = family(Family::Equispaced, 2, 0).unwrap();
        let v = bspline_naive(&kv, 0.0, 0).unwrap();
        assert!((v - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((bspline_stable(&kv, 0.0) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn three_knot_peak() {
        let kv = family(Family::Equispaced, 3, 0).unwrap();
        let a = bspline_naive(&kv, 0.0, 0).unwrap();
        let b = bspline_stable(&kv, 0.0);
        assert!((a - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((bspline_scaled(&kv, 0.0, 0).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn outside_support_vanishes() {
        let kv = family(Family::UniformRandom, 9, 3).unwrap();
        for t in [kv.last() + 1e-9, 2.0, -2.0, kv.first() - 1e-12] {
            assert_eq!(bspline_naive(&kv, t, 0).unwrap(), 0.0);
            assert_eq!(bspline_stable(&kv, t), 0.0);
        }
        assert_eq!(bspline_scaled(&kv, 2.0 * kv.n() as f64, 0).unwrap(), 0.0);
    }

    #[test]
    fn stable_matches_oracle_random_20() {
        let kv = family(Family::UniformRandom, 20, 7).unwrap();
        let (a, b) = (kv.first(), kv.last());
        for i in 0..=100 {
            let t = a + (b - a) * i as f64 / 100.0;
            let o = bspline_naive(&kv, t, 0).unwrap();
            let s = bspline_stable(&kv, t);
            assert!(
                (o - s).abs() <= 1e-10 * o.abs(),
                "t={t} oracle={o} stable={s}"
            );
        }
    }

    #[test]
    fn reduced_matches_oracle() {
        let kv = family(Family::Chebyshev, 10, 0).unwrap();
        for r in 0..=5 {
            for i in 1..40 {
                let t = kv.first() + (kv.last() - kv.first()) * (i as f64 + 0.37) / 40.0;
                let o = bspline_naive(&kv, t, r).unwrap();
                let s = bspline_reduced(&kv, t, r).unwrap();
                let scale = o.abs().max(1e-300);
                assert!(
                    (o - s).abs() <= 1e-9 * scale.max(1.0),
                    "r={r} t={t} {o} {s}"
                );
            }
        }
    }

    #[test]
    fn oracle_refuses_large_n() {
        let kv = family(Family::Equispaced, 25, 0).unwrap();
        assert!(matches!(
            bspline_naive(&kv, 0.0, 0),
            Err(Error::PrecisionLoss { .. })
        ));
    }

    #[test]
    fn reduction_bounds() {
        let kv = family(Family::Equispaced, 5, 0).unwrap();
        assert!(bspline_naive(&kv, 0.0, 3).is_ok());
        assert!(matches!(
            bspline_naive(&kv, 0.0, 4),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn mass_is_one() {
        for n in [2usize, 3, 7, 12] {
            let kv = family(Family::UniformRandom, n, 11).unwrap();
            let m = bspline_mass(&kv, 1e-10).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "n={n} mass={m}");
            let g = bspline_integral(&kv, -2.0, 2.0) * (n - 1) as f64;
            assert!((g - 1.0).abs() < 1e-12, "n={n} gauss mass={g}");
        }
    }

    #[test]
    fn scaled_mass() {
        let kv = family(Family::Equispaced, 8, 0).unwrap();
        let n = kv.n() as f64;
        // integral of B(t/n) dt = n * integral of B
        let m = n * bspline_integral(&kv, -1.0, 1.0);
        assert!(((n - 1.0) / n * m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divided_difference_examples() {
        let sq = [(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)];
        assert!((divided_difference(&sq, 2).unwrap() - 1.0).abs() < 1e-15);
        let lin = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)];
        assert!(divided_difference(&lin, 2).unwrap().abs() < 1e-15);
        let e = [(0.0, 1.0), (1.0, std::f64::consts::E)];
        assert!((divided_difference(&e, 1).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!(matches!(
            divided_difference(&[(1.0, 0.0), (1.0, 2.0)], 1),
            Err(Error::DuplicateKnots(_, _))
        ));
    }

    #[test]
    fn recursive_and_partial_fraction_agree() {
        let kv = normalize(&[0.1, 0.4, 0.45, 1.3, 2.0, 2.2, 3.7]).unwrap();
        let vals: Vec<(f64, f64)> = kv.xs().iter().map(|&x| (x, (1.3 * x).exp())).collect();
        let a = divided_difference(&vals, vals.len() - 1).unwrap();
        let b = divided_difference_sum(&vals).unwrap();
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn wprime_sign_alternates() {
        let kv = family(Family::UniformRandom, 9, 1).unwrap();
        let n = kv.n();
        for k in 0..n {
            let w: f64 = wprime_generic::<f64>(kv.xs(), k);
            let expected = if (n - 1 - k).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            assert_eq!(w.signum(), expected);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let kv = family(Family::Equispaced, 9, 0).unwrap();
        let t = 0.123;
        let h = 1e-5;
        let fd = (bspline_stable(&kv, t + h) - bspline_stable(&kv, t - h)) / (2.0 * h);
        let d = bspline_derivative(&kv, t, 1).unwrap();
        assert!((fd - d).abs() < 1e-6);
    }
}

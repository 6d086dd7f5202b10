//! Probabilists' Hermite polynomials and functions, generalized Laguerre
//! polynomials for arbitrary real parameter, the terminating `2F0`, and the
//! oscillatory Laguerre sum over the knots.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::knotset::KnotVector;
use crate::real::{DoubleDouble, Real};
use crate::splinecore::{wprime_generic, ORACLE_MAX_N, ORACLE_REL_TOL};

pub type Complex64 = Complex<f64>;
pub type ComplexDD = Complex<DoubleDouble>;

/// Below this `|xi|` the oscillatory sum is evaluated from its power series.
pub const XI_MIN: f64 = 0.05;
/// Largest Hermite/Laguerre degree accepted by [`corollary3_sum`].
pub const MAX_DEGREE: usize = 8;

/// Error bounds below this are accepted even when the value itself is ~0.
pub const ABS_ERROR_FLOOR: f64 = 1e-18;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn hermite_generic<R: Real>(r: usize, t: R) -> R {
    let mut prev = R::one();
    if r == 0 {
        return prev;
    }
    let mut cur = t;
    for k in 1..r {
        let next = t * cur - R::from_usize(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `He_r(t)` via `He_{r+1} = t He_r - r He_{r-1}`.
pub fn hermite(r: usize, t: f64) -> f64 {
    hermite_generic(r, t)
}

/// `(2 pi)^{-1/2} He_r(t) e^{-t^2/2}`, which is `(-1)^r` times the r-th
/// derivative of the standard Gaussian density.
pub fn hermite_function(r: usize, t: f64) -> f64 {
    INV_SQRT_2PI * hermite(r, t) * (-0.5 * t * t).exp()
}

/// `L_r^{(alpha)}(x) = sum_j c_j (-x)^j / j!` with
/// `c_j = prod_{i=j+1}^{r} (alpha + i) / (i - j)` built as a running product.
pub fn laguerre_generic<R: Real>(r: usize, alpha: R, x: R) -> R {
    let coef = laguerre_coefficients(r, alpha);
    let mut acc = R::zero();
    for j in (0..=r).rev() {
        acc = acc * (-x) + coef[j];
    }
    acc
}

pub fn laguerre(r: usize, alpha: f64, x: f64) -> f64 {
    laguerre_generic(r, alpha, x)
}

/// Coefficients `(-r)^{(j)} (a)^{(j)} / j!` of the terminating `2F0(-r, a; z)`.
fn hyp2f0_coefficients<R: Real>(r: usize, a: R) -> Vec<R> {
    let mut c = Vec::with_capacity(r + 1);
    let mut cur = R::one();
    c.push(cur);
    for j in 0..r {
        let jr = R::from_usize(j);
        cur = cur * (jr - R::from_usize(r)) * (a + jr) / R::from_usize(j + 1);
        c.push(cur);
    }
    c
}

pub fn hyp2f0_generic<R: Real>(r: usize, a: R, z: R) -> R {
    let c = hyp2f0_coefficients(r, a);
    let mut acc = R::zero();
    for j in (0..=r).rev() {
        acc = acc * z + c[j];
    }
    acc
}

/// `2F0(-r, a; z) = sum_{j=0}^{r} (-r)^{(j)} (a)^{(j)} z^j / j!`.
pub fn hyp2f0(r: usize, a: f64, z: f64) -> f64 {
    hyp2f0_generic(r, a, z)
}

/// `W'(x_k) = prod_{j != k} (x_k - x_j)`, computed in double-double.
pub fn wprime(kv: &KnotVector, k: usize) -> f64 {
    wprime_generic::<DoubleDouble>(kv.xs(), k).to_f64()
}

fn i_pow<R: Real>(k: usize) -> Complex<R> {
    match k % 4 {
        0 => Complex::new(R::one(), R::zero()),
        1 => Complex::new(R::zero(), R::one()),
        2 => Complex::new(-R::one(), R::zero()),
        _ => Complex::new(R::zero(), -R::one()),
    }
}

fn factorial_dd(k: usize) -> DoubleDouble {
    (1..=k).fold(DoubleDouble::ONE, |acc, i| {
        acc * DoubleDouble::from_usize(i)
    })
}

fn cabs(z: ComplexDD) -> f64 {
    z.re.to_f64().hypot(z.im.to_f64())
}

fn to_c64(z: ComplexDD) -> Complex64 {
    Complex64::new(z.re.to_f64(), z.im.to_f64())
}

/// An extended-precision value with a certified absolute error bound.
#[derive(Debug, Clone, Copy)]
pub struct Certified {
    pub value: ComplexDD,
    pub bound: f64,
}

impl Certified {
    pub fn to_complex(self) -> Complex64 {
        to_c64(self.value)
    }

    fn ok(self) -> bool {
        self.bound <= ORACLE_REL_TOL * cabs(self.value) || self.bound <= ABS_ERROR_FLOOR
    }
}

/// `e^{-i n xi x_k}` and `W'(x_k)` for every knot, with `n xi x_k` in dd.
fn phases(xs: &[f64], xi: f64) -> (Vec<DoubleDouble>, Vec<ComplexDD>, f64) {
    let n = xs.len();
    let nxi = DoubleDouble::mul_f64_exact(n as f64, xi);
    let mut args = Vec::with_capacity(n);
    let mut ph = Vec::with_capacity(n);
    let mut max_arg: f64 = 0.0;
    for &x in xs {
        let a = nxi.mul_f64(x);
        max_arg = max_arg.max(a.to_f64().abs());
        let (s, c) = a.sin_cos();
        args.push(a);
        ph.push(Complex::new(c, -s));
    }
    (args, ph, max_arg)
}

/// Laguerre coefficients `c_j / j!` so that `L_r^{(alpha)}(x) = sum_j a_j (-x)^j`.
fn laguerre_coefficients<R: Real>(r: usize, alpha: R) -> Vec<R> {
    let mut coef = vec![R::zero(); r + 1];
    coef[r] = R::one();
    for j in (1..=r).rev() {
        coef[j - 1] = coef[j] * (alpha + R::from_usize(j)) / R::from_usize(r - j + 1);
    }
    let mut fact = R::one();
    for (j, c) in coef.iter_mut().enumerate() {
        if j > 0 {
            fact *= R::from_usize(j);
        }
        *c = *c / fact;
    }
    coef
}

/// `L_r^{(alpha)}(z)` for complex `z` in double-double.
pub fn laguerre_complex(r: usize, alpha: DoubleDouble, z: ComplexDD) -> ComplexDD {
    let coef = laguerre_coefficients(r, alpha);
    let mz = -z;
    let mut acc = ComplexDD::new(DoubleDouble::ZERO, DoubleDouble::ZERO);
    for j in (0..=r).rev() {
        acc = acc * mz + ComplexDD::new(coef[j], DoubleDouble::ZERO);
    }
    acc
}

/// Closed (Laguerre) form
/// `C_{r,n} xi^{-(n+r-1)} sum_k e^{-i n xi x_k} L_r^{(-n-r+1)}(i n xi x_k) / W'(x_k)`
/// with `C_{r,n} = (-1)^r (n-2)! r! i^{n-1} / n^{n-2}`.
///
/// This is `(-1)^r` times the r-th xi-derivative of the Fourier transform
/// of `B(t/n)`, so it tends to `He_r(xi) e^{-xi^2/2}`.
pub fn corollary3_closed_form(kv: &KnotVector, r: usize, xi: f64) -> Certified {
    let xs = kv.xs();
    let n = xs.len();
    let (args, ph, max_arg) = phases(xs, xi);
    let alpha = DoubleDouble::from_f64(-((n + r) as f64) + 1.0);
    let mut sum = ComplexDD::new(DoubleDouble::ZERO, DoubleDouble::ZERO);
    let mut mag = 0.0;
    for k in 0..n {
        let w = wprime_generic::<DoubleDouble>(xs, k);
        let l = laguerre_complex(r, alpha, ComplexDD::new(DoubleDouble::ZERO, args[k]));
        let coef = l / w;
        mag += cabs(coef);
        sum = sum + ph[k] * coef;
    }
    let pre = factorial_dd(n - 2) * factorial_dd(r)
        / DoubleDouble::from_usize(n).powi(n as u32 - 2)
        / DoubleDouble::new(xi).powi((n + r - 1) as u32);
    let sign = if r.is_multiple_of(2) {
        DoubleDouble::ONE
    } else {
        -DoubleDouble::ONE
    };
    let value = sum * i_pow::<DoubleDouble>(n - 1) * (pre * sign);
    let gamma = (4 * n + 4 * r + 40) as f64 + max_arg;
    let bound =
        gamma * DoubleDouble::EPSILON * mag * pre.to_f64().abs() + f64::EPSILON * cabs(value);
    Certified { value, bound }
}

/// `2F0` route: the r-fold xi-derivative of
/// `(n-2)! i^{n-1} n^{-(n-2)} xi^{-(n-1)} sum_k e^{-i n xi x_k}/W'(x_k)` by
/// Leibniz's rule, which collapses to `x_k^r 2F0(-r, n-1; i/(n xi x_k))`.
/// Scaled by `(-1)^r` to match [`corollary3_closed_form`].
pub fn corollary3_hypergeometric(kv: &KnotVector, r: usize, xi: f64) -> Certified {
    let xs = kv.xs();
    let n = xs.len();
    let (_, ph, max_arg) = phases(xs, xi);
    let coefs = hyp2f0_coefficients(r, DoubleDouble::from_usize(n - 1));
    // z_k = 1/(-i n xi x_k); x_k^r z_k^j = x_k^{r-j} (-i n xi)^{-j}
    let nxi = DoubleDouble::mul_f64_exact(n as f64, xi);
    let inv_m = ComplexDD::new(DoubleDouble::ZERO, DoubleDouble::ONE / nxi); // 1/(-i n xi)
    let mut sum = ComplexDD::new(DoubleDouble::ZERO, DoubleDouble::ZERO);
    let mut mag = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let w = wprime_generic::<DoubleDouble>(xs, k);
        let xd = DoubleDouble::new(x);
        let mut poly = ComplexDD::new(DoubleDouble::ZERO, DoubleDouble::ZERO);
        let mut zpow = ComplexDD::new(DoubleDouble::ONE, DoubleDouble::ZERO);
        for (j, &c) in coefs.iter().enumerate() {
            poly = poly + zpow * (c * xd.powi((r - j) as u32));
            zpow = zpow * inv_m;
        }
        let coef = poly / w;
        mag += cabs(coef);
        sum = sum + ph[k] * coef;
    }
    // (-1)^r (n-2)! i^{n-1} n^{-(n-2)} xi^{-(n-1)} (-i n)^r, and (-1)^r (-i)^r = i^r
    let n_dd = DoubleDouble::from_usize(n);
    let pre = factorial_dd(n - 2) * n_dd.powi(r as u32)
        / n_dd.powi(n as u32 - 2)
        / DoubleDouble::new(xi).powi(n as u32 - 1);
    let value = sum * i_pow::<DoubleDouble>(n - 1 + r) * pre;
    let gamma = (4 * n + 4 * r + 40) as f64 + max_arg;
    let bound =
        gamma * DoubleDouble::EPSILON * mag * pre.to_f64().abs() + f64::EPSILON * cabs(value);
    Certified { value, bound }
}

/// Complete homogeneous symmetric polynomials `h_0..=h_max` of `xs`, and of
/// `|xs|` (for error bounds).
fn complete_homogeneous(xs: &[f64], max: usize) -> (Vec<DoubleDouble>, Vec<f64>) {
    let mut h = vec![DoubleDouble::ZERO; max + 1];
    let mut ha = vec![0.0; max + 1];
    h[0] = DoubleDouble::ONE;
    ha[0] = 1.0;
    for &x in xs {
        let xd = DoubleDouble::new(x);
        for j in 1..=max {
            h[j] = h[j] + xd * h[j - 1];
            ha[j] += x.abs() * ha[j - 1];
        }
    }
    (h, ha)
}

/// Power-series route, valid for every `xi` and accurate for small `|xi|`:
/// `(-1)^r n (n-2)! sum_{j>=r} (-i n)^j j!/(j-r)! xi^{j-r} h_j(x) / (j+n-1)!`.
pub fn corollary3_series(kv: &KnotVector, r: usize, xi: f64) -> Certified {
    let xs = kv.xs();
    let n = xs.len();
    let max_terms = 400;
    let (h, ha) = complete_homogeneous(xs, max_terms);
    let n_dd = DoubleDouble::from_usize(n);
    let xi_dd = DoubleDouble::new(xi);
    let mut sum = ComplexDD::new(DoubleDouble::ZERO, DoubleDouble::ZERO);
    let mut mag = 0.0;
    // coefficient n^j j!/((j-r)! (j+n-1)!) xi^{j-r}, updated incrementally
    let mut coef = n_dd.powi(r as u32) * factorial_dd(r) / factorial_dd(r + n - 1);
    let mut tail_small = 0;
    for j in r..max_terms {
        if j > r {
            coef = coef * n_dd * DoubleDouble::from_usize(j) * xi_dd
                / (DoubleDouble::from_usize(j - r) * DoubleDouble::from_usize(j + n - 1));
        }
        let term = coef * h[j];
        let term_mag = coef.to_f64().abs() * ha[j];
        mag += term_mag;
        // (-i)^j
        let phase = i_pow::<DoubleDouble>((4 - j % 4) % 4);
        sum = sum + phase * term;
        if j > r + 4 && term_mag <= 1e-34 * mag {
            tail_small += 1;
            if tail_small >= 3 {
                break;
            }
        } else {
            tail_small = 0;
        }
    }
    let scale = n_dd * factorial_dd(n - 2);
    let sign = if r.is_multiple_of(2) {
        DoubleDouble::ONE
    } else {
        -DoubleDouble::ONE
    };
    let value = sum * (scale * sign);
    let bound =
        (n + 20) as f64 * DoubleDouble::EPSILON * mag * scale.to_f64() + f64::EPSILON * cabs(value);
    Certified { value, bound }
}

/// Extended-precision evaluation used by [`corollary3_sum`], returning the
/// certified dd value.
pub fn corollary3_certified(kv: &KnotVector, r: usize, xi: f64) -> Result<Certified> {
    if r > MAX_DEGREE {
        return Err(Error::OrderTooHigh {
            requested: r,
            max: MAX_DEGREE,
        });
    }
    let n = kv.n();
    if n > ORACLE_MAX_N {
        return Err(Error::PrecisionLoss {
            estimate: f64::INFINITY,
            value: f64::NAN,
        });
    }
    if !xi.is_finite() {
        return Err(Error::InvalidArgument("xi must be finite".into()));
    }
    if xi.abs() < XI_MIN {
        let s = corollary3_series(kv, r, xi);
        if s.ok() {
            return Ok(s);
        }
        return Err(Error::PrecisionLoss {
            estimate: s.bound,
            value: cabs(s.value),
        });
    }
    let c = corollary3_closed_form(kv, r, xi);
    if c.ok() {
        return Ok(c);
    }
    let s = corollary3_series(kv, r, xi);
    if s.ok() {
        return Ok(s);
    }
    let best = if c.bound < s.bound { c } else { s };
    Err(Error::PrecisionLoss {
        estimate: best.bound,
        value: cabs(best.value),
    })
}

/// `C_{r,n}/xi^{n+r-1} sum_k e^{-i n xi x_k} L_r^{(-n-r+1)}(i n xi x_k) / W'(x_k)`.
///
/// The removable singularity at `xi = 0` is handled by the power series for
/// `|xi| < XI_MIN`; the closed form is used elsewhere, falling back to the
/// series if its error bound is too large.
pub fn corollary3_sum(kv: &KnotVector, r: usize, xi: f64) -> Result<Complex64> {
    corollary3_certified(kv, r, xi).map(Certified::to_complex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knotset::{family, Family};

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(0, 3.3), 1.0);
        assert_eq!(hermite(1, 3.3), 3.3);
        assert_eq!(hermite(2, 1.0), 0.0);
        assert_eq!(hermite(3, 2.0), 2.0);
        assert_eq!(hermite(4, 1.0), 1.0 - 6.0 + 3.0);
    }

    #[test]
    fn hermite_function_examples() {
        assert!((hermite_function(0, 0.0) - INV_SQRT_2PI).abs() < 1e-16);
        assert_eq!(hermite_function(1, 0.0), 0.0);
        assert!((hermite_function(2, 0.0) + INV_SQRT_2PI).abs() < 1e-16);
    }

    #[test]
    fn laguerre_examples() {
        for &(a, x) in &[(0.3, 1.0), (-7.0, 2.5), (4.0, -1.0)] {
            assert_eq!(laguerre(0, a, x), 1.0);
        }
        assert!((laguerre(1, -3.0, 2.0) + 4.0).abs() < 1e-15);
        assert!((laguerre(2, 0.0, 0.0) - 1.0).abs() < 1e-15);
        // L_2^{(a)}(x) = (a+1)(a+2)/2 - (a+2) x + x^2/2
        let (a, x) = (-9.0, 1.7);
        let want = (a + 1.0) * (a + 2.0) / 2.0 - (a + 2.0) * x + x * x / 2.0;
        assert!((laguerre(2, a, x) - want).abs() < 1e-13);
    }

    #[test]
    fn laguerre_at_zero_is_binomial() {
        // L_r^{(a)}(0) = binom(r + a, r)
        let r = 4;
        let a = -11.0;
        let want: f64 = (1..=r).map(|i| (a + i as f64) / i as f64).product();
        assert!((laguerre(r, a, 0.0) - want).abs() < 1e-12);
    }

    #[test]
    fn hyp2f0_examples() {
        assert_eq!(hyp2f0(0, 5.0, 0.3), 1.0);
        let n = 8.0;
        let z = 0.37;
        assert!((hyp2f0(1, n - 1.0, z) - (1.0 - (n - 1.0) * z)).abs() < 1e-15);
    }

    #[test]
    fn hyp2f0_laguerre_identity_point() {
        let (r, n, w) = (2usize, 8usize, 1.5f64);
        let lhs = hyp2f0(r, (n - 1) as f64, 1.0 / w);
        let rhs = 2.0 * w.powi(-(r as i32)) * laguerre(r, -((n + r) as f64) + 1.0, -w);
        assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
    }

    #[test]
    fn wprime_examples() {
        let kv = family(Family::Equispaced, 2, 0).unwrap();
        assert!((wprime(&kv, 0) + std::f64::consts::SQRT_2).abs() < 1e-15);
        let kv = family(Family::Equispaced, 3, 0).unwrap();
        assert!((wprime(&kv, 1) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn corollary3_small_xi_limits() {
        let kv = family(Family::Equispaced, 8, 0).unwrap();
        let v = corollary3_sum(&kv, 1, 0.0).unwrap();
        assert!(v.norm() < 1e-14);
        let v = corollary3_sum(&kv, 0, 1e-3).unwrap();
        assert!((v.re - 8.0 / 7.0).abs() < 1e-5);
        let v0 = corollary3_sum(&kv, 0, 0.0).unwrap();
        assert!((v0.re - 8.0 / 7.0).abs() < 1e-15);
        // r = 2 at 0: -n^2/(n^2-1)
        let v2 = corollary3_sum(&kv, 2, 0.0).unwrap();
        assert!((v2.re + 64.0 / 63.0).abs() < 1e-14, "{v2}");
    }

    #[test]
    fn series_and_closed_form_agree_on_overlap() {
        let kv = family(Family::UniformRandom, 10, 4).unwrap();
        for r in 0..4 {
            for &xi in &[0.2, 0.6, 1.1] {
                let a = corollary3_closed_form(&kv, r, xi);
                let b = corollary3_series(&kv, r, xi);
                let d = (a.to_complex() - b.to_complex()).norm();
                assert!(d <= 1e-11 * a.to_complex().norm(), "r={r} xi={xi} {d}");
            }
        }
    }

    #[test]
    fn hypergeometric_route_agrees() {
        let kv = family(Family::Equispaced, 12, 0).unwrap();
        for r in 0..4 {
            for &xi in &[0.1, 0.5, 2.0, 5.0] {
                let a = corollary3_closed_form(&kv, r, xi);
                let b = corollary3_hypergeometric(&kv, r, xi);
                let diff = (a.to_complex() - b.to_complex()).norm();
                assert!(diff <= a.bound + b.bound + 1e-14, "r={r} xi={xi}");
            }
        }
    }

    #[test]
    fn oracle_range_enforced() {
        let kv = family(Family::Equispaced, 30, 0).unwrap();
        assert!(matches!(
            corollary3_sum(&kv, 0, 1.0),
            Err(Error::PrecisionLoss { .. })
        ));
    }
}

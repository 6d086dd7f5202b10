//! One-dimensional quadrature rules shared by the numerical modules.

use crate::error::{Error, Result};
use crate::real::{DoubleDouble, Real};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n`, started from the Chebyshev-like guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&z, &w)| (mid + half * z, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    if n == 0 {
        return (R::one(), R::zero());
    }
    for k in 2..=n {
        let kf = R::from_usize(k);
        let p2 = ((kf + kf - R::one()) * x * p1 - (kf - R::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = R::from_usize(n) * (x * p1 - p0) / (x * x - R::one());
    (p1, d)
}

/// Gauss-Legendre rule on `[-1, 1]` in double-double, refined from the
/// double rule by Newton steps.
#[derive(Debug, Clone)]
pub struct GaussLegendreDD {
    pub nodes: Vec<DoubleDouble>,
    pub weights: Vec<DoubleDouble>,
}

impl GaussLegendreDD {
    pub fn new(n: usize) -> Self {
        let base = GaussLegendre::new(n);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &z0 in &base.nodes {
            let mut z = DoubleDouble::new(z0);
            for _ in 0..3 {
                let (p, d) = legendre_with_derivative(n, z);
                z -= p / d;
            }
            let (_, d) = legendre_with_derivative(n, z);
            let two = DoubleDouble::new(2.0);
            weights.push(two / ((DoubleDouble::ONE - z * z) * d * d));
            nodes.push(z);
        }
        GaussLegendreDD { nodes, weights }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(
        &self,
        a: DoubleDouble,
        b: DoubleDouble,
    ) -> impl Iterator<Item = (DoubleDouble, DoubleDouble)> + '_ {
        let half = (b - a) * DoubleDouble::new(0.5);
        let mid = (a + b) * DoubleDouble::new(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&z, &w)| (mid + half * z, half * w))
    }
}

/// Adaptive Simpson with Richardson correction. `tol` is absolute.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(Error::QuadratureNotConverged {
            change: delta.abs(),
        });
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive bisection driven by a Gauss-Legendre pair (`rule` vs. the same
/// rule on both halves). `tol` is absolute.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    rule: &GaussLegendre,
) -> Result<f64> {
    let whole = rule.integrate(f, a, b);
    gauss_step(f, a, b, whole, tol, rule, 40)
}

fn gauss_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    rule: &GaussLegendre,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    let change = (left + right - whole).abs();
    if change <= tol {
        return Ok(left + right);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(Error::QuadratureNotConverged { change });
    }
    Ok(gauss_step(f, a, m, left, 0.5 * tol, rule, depth - 1)?
        + gauss_step(f, m, b, right, 0.5 * tol, rule, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the exactness limit for 8 nodes
        let v = rule.integrate(|x| x.powi(14), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-15);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_large_order() {
        let rule = GaussLegendre::new(48);
        let v = rule.integrate(f64::exp, 0.0, 1.0);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn double_double_rule_is_sharper() {
        let rule = GaussLegendreDD::new(20);
        let mut v = DoubleDouble::ZERO;
        for (x, w) in rule.mapped(DoubleDouble::ZERO, DoubleDouble::ONE) {
            v += w * x.powi(30);
        }
        let want = DoubleDouble::ONE / DoubleDouble::new(31.0);
        assert!((v - want).abs().to_f64() < 1e-28);
    }

    #[test]
    fn simpson_on_smooth_integrand() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_gauss_handles_kink() {
        let rule = GaussLegendre::new(10);
        let v = adaptive_gauss(&|x: f64| x.abs(), -1.0, 2.0, 1e-12, &rule).unwrap();
        assert!((v - 2.5).abs() < 1e-11);
    }
}

//! Characteristic function of the centered projections `Q = V^T (P - 1)` of
//! an i.i.d. Exp(1) vector, its log-modulus `F` and phase `G`, two-dimensional
//! Fourier inversion, and the quotient densities built from it.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knotset::KnotVector;
use crate::montecarlo::Grid2d;
use crate::quad::{self, GaussLegendre, GaussLegendreDD};
use crate::real::{DoubleDouble, Real};
use crate::specfun::{self, Complex64};
use crate::splinecore;

/// Largest polynomial weight accepted by [`char_diff_integral`].
pub const MAX_ELL: usize = 6;
/// Largest `n` accepted by the inversion routines.
pub const INVERSION_MAX_N: usize = 64;
/// Below this `|xi|` the Fourier transform of `B(t/n)` uses quadrature.
pub const FOURIER_CLOSED_MIN_XI: f64 = 1e-3;

const RADIAL_GL: usize = 16;
const MAX_REFINEMENTS: usize = 5;
// |G| has kinks in the angle where the cubic term changes sign, so the
// angular rule converges algebraically (about 100x per doubling); a change
// of 1e-6 between levels leaves roughly 1e-8 in the finer one.
const CHAR_DIFF_TOL: f64 = 1e-6;

/// Coordinate axis of the frequency plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::First => 0,
            Axis::Second => 1,
        }
    }
}

/// `t_k = <xi, v_k>` together with `F`, `G`, `H` and `Z = F + iG`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharState {
    pub xi: [f64; 2],
    pub t: Vec<f64>,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub z: Complex64,
}

/// `t - atan(t)`, with a short series where the subtraction cancels.
fn t_minus_atan(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        let t2 = t * t;
        t * t2 * (1.0 / 3.0 - t2 * (1.0 / 5.0 - t2 / 7.0))
    } else {
        t - t.atan()
    }
}

fn projections(kv: &KnotVector, xi: [f64; 2]) -> Vec<f64> {
    let c = (kv.n() as f64).sqrt().recip();
    kv.xs().iter().map(|&x| xi[0] * x + xi[1] * c).collect()
}

fn log_modulus(t: &[f64]) -> f64 {
    -0.5 * t.iter().map(|&tk| (tk * tk).ln_1p()).sum::<f64>()
}

/// `(F, G)` without allocating, for quadrature inner loops.
fn log_char(xs: &[f64], c: f64, xi: [f64; 2]) -> (f64, f64) {
    let mut f = 0.0;
    let mut g = 0.0;
    for &x in xs {
        let t = xi[0] * x + xi[1] * c;
        f -= 0.5 * (t * t).ln_1p();
        g -= t_minus_atan(t);
    }
    (f, g)
}

pub fn eval_char_state(kv: &KnotVector, xi: [f64; 2]) -> CharState {
    let t = projections(kv, xi);
    let f = log_modulus(&t);
    let g = -t.iter().map(|&tk| t_minus_atan(tk)).sum::<f64>();
    let h = -0.5 * (xi[0] * xi[0] + xi[1] * xi[1]);
    CharState {
        xi,
        t,
        f,
        g,
        h,
        z: Complex64::new(f, g),
    }
}

/// Characteristic function of `Exp(1) - 1`: `e^{-it} / (1 - it)`.
pub fn phi_exp_centered(t: f64) -> Complex64 {
    let (s, c) = t.sin_cos();
    Complex64::new(c, -s) / Complex64::new(1.0, -t)
}

/// `phi_Q(xi) = prod_k phi_exp_centered(t_k)`.
pub fn phi_q(kv: &KnotVector, xi: [f64; 2]) -> Complex64 {
    projections(kv, xi)
        .into_iter()
        .map(phi_exp_centered)
        .fold(Complex64::new(1.0, 0.0), |acc, z| acc * z)
}

/// Closed-form partial derivatives `(dF, dG)` along `axis`.
pub fn grad_fg(kv: &KnotVector, xi: [f64; 2], axis: Axis) -> (f64, f64) {
    let b = axis.index();
    let dirs = kv.directions();
    let t = projections(kv, xi);
    let mut df = 0.0;
    let mut dg = 0.0;
    for (v, &tk) in dirs.vs.iter().zip(&t) {
        let d = 1.0 + tk * tk;
        df -= v[b] * tk / d;
        dg -= v[b] * tk * tk / d;
    }
    (df, dg)
}

/// Weighted nodes of a polar rule on the disc of radius `radius`.
#[derive(Debug, Clone)]
struct PolarNodes {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

/// Radial breakpoints: unit-half panels up to 12, then geometric growth.
fn radial_breaks(radius: f64, level: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut r: f64 = 0.0;
    while r < radius {
        let step = if r < 12.0 { 0.5 } else { 0.25 * r };
        r = (r + step).min(radius);
        b.push(r);
    }
    for _ in 0..level {
        let mut fine = Vec::with_capacity(2 * b.len());
        for w in b.windows(2) {
            fine.push(w[0]);
            fine.push(0.5 * (w[0] + w[1]));
        }
        fine.push(*b.last().unwrap());
        b = fine;
    }
    b
}

/// With `half` the angles cover `[0, pi)` and the weights are doubled, which
/// is exact for integrands even under `xi -> -xi`.
fn polar_nodes(
    radius: f64,
    level: usize,
    angular: usize,
    half: bool,
    rule: &GaussLegendre,
) -> PolarNodes {
    let breaks = radial_breaks(radius, level);
    let m = angular << level;
    let span = if half {
        std::f64::consts::PI
    } else {
        std::f64::consts::TAU
    };
    let dtheta = span / m as f64;
    let wscale = if half { 2.0 * dtheta } else { dtheta };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        for (rho, wr) in rule.mapped(w[0], w[1]) {
            for j in 0..m {
                let (s, c) = (j as f64 * dtheta).sin_cos();
                points.push([rho * c, rho * s]);
                weights.push(wr * rho * wscale);
            }
        }
    }
    PolarNodes { points, weights }
}

/// Smallest radius `R >= 12` past which `|xi|^ell e^F < level` in every
/// sampled direction, including the directions orthogonal to each `v_k`
/// where the decay is slowest.
pub fn truncation_radius(kv: &KnotVector, ell: usize, level: f64) -> Result<f64> {
    let mut dirs: Vec<[f64; 2]> = (0..720)
        .map(|j| {
            let (s, c) = (j as f64 * std::f64::consts::PI / 360.0).sin_cos();
            [c, s]
        })
        .collect();
    for v in kv.directions().vs {
        let norm = v[0].hypot(v[1]);
        dirs.push([-v[1] / norm, v[0] / norm]);
        dirs.push([v[1] / norm, -v[0] / norm]);
    }
    let worst = |rho: f64| {
        dirs.iter()
            .map(|u| {
                let t = projections(kv, [rho * u[0], rho * u[1]]);
                rho.powi(ell as i32) * log_modulus(&t).exp()
            })
            .fold(0.0, f64::max)
    };
    let mut rho = 12.0;
    while worst(rho) >= level {
        rho *= 1.1;
        if rho > 1e4 {
            return Err(Error::QuadratureNotConverged { change: worst(rho) });
        }
    }
    Ok(rho)
}

fn refine<F>(mut eval_at: F, tol: f64) -> Result<f64>
where
    F: FnMut(usize) -> f64,
{
    let mut prev = eval_at(0);
    let mut change = f64::INFINITY;
    for level in 1..=MAX_REFINEMENTS {
        let next = eval_at(level);
        change = (next - prev).abs();
        if change < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged { change })
}

/// `integral over R^2 of |xi|^ell |e^{F+iG} - e^H|`, in polar coordinates.
///
/// Requires `n >= ell + 4`; below that the integral diverges because
/// `|phi_Q|` decays only like `|xi|^{-(n-1)}` along some directions.
pub fn char_diff_integral(kv: &KnotVector, ell: usize) -> Result<f64> {
    if ell > MAX_ELL {
        return Err(Error::OrderTooHigh {
            requested: ell,
            max: MAX_ELL,
        });
    }
    if kv.n() < ell + 4 {
        return Err(Error::InvalidArgument(format!(
            "integral diverges for n = {} and ell = {ell}; need n >= ell + 4",
            kv.n()
        )));
    }
    let radius = truncation_radius(kv, ell, 1e-14)?;
    char_diff_integral_with_radius(kv, ell, radius)
}

/// [`char_diff_integral`] on the disc of a caller-chosen radius.
pub fn char_diff_integral_with_radius(kv: &KnotVector, ell: usize, radius: f64) -> Result<f64> {
    let rule = GaussLegendre::new(RADIAL_GL);
    let c = (kv.n() as f64).sqrt().recip();
    refine(
        |level| {
            let nodes = polar_nodes(radius, level, 32, true, &rule);
            nodes
                .points
                .par_iter()
                .zip(&nodes.weights)
                .map(|(xi, w)| {
                    let (f, g) = log_char(kv.xs(), c, *xi);
                    let rho2 = xi[0] * xi[0] + xi[1] * xi[1];
                    let diff = Complex64::new(f, g).exp() - (-0.5 * rho2).exp();
                    w * rho2.sqrt().powi(ell as i32) * diff.norm()
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum()
        },
        CHAR_DIFF_TOL,
    )
}

/// Precomputed quadrature for `PDF_Q` by Fourier inversion. Nodes whose
/// contribution is below `1e-18` are dropped.
#[derive(Debug, Clone)]
pub struct InversionRule {
    points: Vec<[f64; 2]>,
    values: Vec<Complex64>,
    pub radius: f64,
    pub level: usize,
}

const PROBES: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, -0.5], [-2.0, 1.5], [3.0, 0.0]];

impl InversionRule {
    pub fn new(kv: &KnotVector) -> Result<Self> {
        if kv.n() > INVERSION_MAX_N {
            return Err(Error::InvalidArgument(format!(
                "inversion supports n <= {INVERSION_MAX_N}, got {}",
                kv.n()
            )));
        }
        if kv.n() < 4 {
            return Err(Error::InvalidArgument(
                "inversion needs n >= 4 for an integrable characteristic function".into(),
            ));
        }
        let radius = truncation_radius(kv, 0, 1e-14)?;
        let gl = GaussLegendre::new(RADIAL_GL);
        let build = |level: usize| {
            let nodes = polar_nodes(radius, level, 64, false, &gl);
            let scale = (std::f64::consts::TAU).powi(-2);
            let pairs: Vec<([f64; 2], Complex64)> = nodes
                .points
                .par_iter()
                .zip(&nodes.weights)
                .map(|(xi, w)| (*xi, phi_q(kv, *xi) * (w * scale)))
                .filter(|(_, v)| v.norm() > 1e-18)
                .collect();
            let (points, values) = pairs.into_iter().unzip();
            InversionRule {
                points,
                values,
                radius,
                level,
            }
        };
        let mut prev = build(0);
        let mut change = f64::INFINITY;
        for level in 1..=MAX_REFINEMENTS {
            let next = build(level);
            change = PROBES
                .iter()
                .map(|s| (next.eval(*s, [0.0, 0.0]).re - prev.eval(*s, [0.0, 0.0]).re).abs())
                .fold(0.0, f64::max);
            if change < 1e-9 {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::QuadratureNotConverged { change })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Density averaged over the box `s +- cell/2` (a zero `cell` gives the
    /// point value); the box average multiplies each node by two sinc factors.
    fn eval(&self, s: [f64; 2], cell: [f64; 2]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (xi, v) in self.points.iter().zip(&self.values) {
            let (sn, cs) = (s[0] * xi[0] + s[1] * xi[1]).sin_cos();
            let damp = sinc(0.5 * cell[0] * xi[0]) * sinc(0.5 * cell[1] * xi[1]);
            acc += v * Complex64::new(cs, -sn) * damp;
        }
        acc
    }

    /// `(2 pi)^{-2} integral e^{-i<s,xi>} phi_Q(xi) dxi`; the imaginary part
    /// is a diagnostic and should vanish.
    pub fn pdf(&self, s: [f64; 2]) -> Complex64 {
        self.eval(s, [0.0, 0.0])
    }

    /// Average of the density over the box with centre `s` and sides `cell`.
    pub fn cell_average(&self, s: [f64; 2], cell: [f64; 2]) -> Complex64 {
        self.eval(s, cell)
    }

    /// Cell averages over a whole tensor grid, indexed like [`Grid2d`].
    ///
    /// The kernel factorizes per axis, so each node needs only two short
    /// phase recurrences instead of one transcendental call per cell.
    pub fn grid_cell_averages(&self, grid: &Grid2d) -> Vec<Complex64> {
        let [b0, b1] = grid.bins;
        let h = grid.cell_size();
        let axis_factors = |xi: f64, lo: f64, h: f64, bins: usize, out: &mut Vec<Complex64>| {
            out.clear();
            let (s0, c0) = ((lo + 0.5 * h) * xi).sin_cos();
            let (sh, ch) = (h * xi).sin_cos();
            let step = Complex64::new(ch, -sh);
            let damp = sinc(0.5 * h * xi);
            let mut z = Complex64::new(c0, -s0) * damp;
            for _ in 0..bins {
                out.push(z);
                z *= step;
            }
        };
        let chunk = 4096;
        let parts: Vec<Vec<Complex64>> = self
            .points
            .par_chunks(chunk)
            .zip(self.values.par_chunks(chunk))
            .map(|(pts, vals)| {
                let mut acc = vec![Complex64::new(0.0, 0.0); b0 * b1];
                let mut a = Vec::with_capacity(b0);
                let mut b = Vec::with_capacity(b1);
                for (xi, v) in pts.iter().zip(vals) {
                    axis_factors(xi[0], grid.lo[0], h[0], b0, &mut a);
                    axis_factors(xi[1], grid.lo[1], h[1], b1, &mut b);
                    for (i, ai) in a.iter().enumerate() {
                        let va = v * ai;
                        let row = &mut acc[i * b1..(i + 1) * b1];
                        for (cell, bj) in row.iter_mut().zip(&b) {
                            *cell += va * bj;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![Complex64::new(0.0, 0.0); b0 * b1];
        for p in &parts {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Real part of the inverted density at one point.
pub fn pdf_q_inversion(kv: &KnotVector, s: [f64; 2]) -> Result<f64> {
    Ok(InversionRule::new(kv)?.pdf(s).re)
}

/// `PDF_{X1/X2}(s) = integral |y| joint(s y, y) dy` over `[y_lo, y_hi]`.
pub fn quotient_pdf<J: Fn(f64, f64) -> f64>(
    joint: &J,
    s: f64,
    y_lo: f64,
    y_hi: f64,
) -> Result<f64> {
    if y_lo >= y_hi {
        return Err(Error::InvalidArgument("empty y range".into()));
    }
    let rule = GaussLegendre::new(20);
    let f = |y: f64| y.abs() * joint(s * y, y);
    let mut pieces = vec![y_lo];
    if y_lo < 0.0 && y_hi > 0.0 {
        pieces.push(0.0);
    }
    pieces.push(y_hi);
    let mut total = 0.0;
    for w in pieces.windows(2) {
        total += quad::adaptive_gauss(&f, w[0], w[1], 1e-13, &rule)?;
    }
    Ok(total)
}

/// Density of `N1 / (1 + n^{-1/2} N2)` for independent standard normals.
pub fn pdf_gaussian_ratio(n: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    let sn = (n as f64).sqrt();
    let norm = (std::f64::consts::TAU).sqrt().recip();
    let joint = |a: f64, b: f64| {
        let z = sn * (b - 1.0);
        norm * (-0.5 * a * a).exp() * sn * norm * (-0.5 * z * z).exp()
    };
    quotient_pdf(&joint, t, 1.0 - 12.0 / sn, 1.0 + 12.0 / sn)
}

/// Standard normal density.
pub fn gaussian_density(t: f64) -> f64 {
    (-0.5 * t * t).exp() / std::f64::consts::TAU.sqrt()
}

/// Fourier transform `integral B(t/n) e^{-i t xi} dt`: the extended-precision
/// closed form for `|xi| >= 1e-3`, quadrature below.
pub fn fourier_of_b(kv: &KnotVector, xi: f64) -> Result<Complex64> {
    if xi.abs() >= FOURIER_CLOSED_MIN_XI {
        specfun::corollary3_sum(kv, 0, xi)
    } else {
        fourier_moment_quadrature(kv, xi, 0)
    }
}

/// `i^r integral t^r B(t/n) e^{-i t xi} dt`, i.e. `(-1)^r` times the r-th
/// xi-derivative of the transform, by Gauss-Legendre on every knot piece.
/// Everything runs in double-double: at large `xi` the transform is many
/// orders of magnitude below the integrand.
pub fn fourier_moment_quadrature(kv: &KnotVector, xi: f64, r: usize) -> Result<Complex64> {
    if !xi.is_finite() {
        return Err(Error::InvalidArgument("xi must be finite".into()));
    }
    let xs = kv.xs();
    let n = xs.len();
    let rule = GaussLegendreDD::new((n + r) / 2 + 12);
    let nxi = DoubleDouble::mul_f64_exact(n as f64, xi);
    let mut re = DoubleDouble::ZERO;
    let mut im = DoubleDouble::ZERO;
    for span in 0..n - 1 {
        let (a, b) = (DoubleDouble::new(xs[span]), DoubleDouble::new(xs[span + 1]));
        let pieces = ((n as f64 * xi.abs() * (xs[span + 1] - xs[span])) / 2.0)
            .ceil()
            .max(1.0) as usize;
        let width = (b - a) / DoubleDouble::from_usize(pieces);
        for p in 0..pieces {
            let lo = a + width * DoubleDouble::from_usize(p);
            let hi = if p + 1 == pieces { b } else { lo + width };
            for (s, w) in rule.mapped(lo, hi) {
                let bval = splinecore::reduced_on_span::<DoubleDouble>(xs, s, 0, span);
                let (sn, cs) = (nxi * s).sin_cos();
                let m = w * bval * s.powi(r as u32);
                re += m * cs;
                im -= m * sn;
            }
        }
    }
    // t = n s: the moment picks up n^{r+1}, then multiply by i^r
    let scale = (n as f64).powi(r as i32 + 1);
    let z = Complex::new(re.to_f64() * scale, im.to_f64() * scale);
    Ok(z * Complex64::i().powi(r as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knotset::{family, normalize, Family};

    #[test]
    fn n2_state_by_hand() {
        let kv = normalize(&[-1.0, 1.0]).unwrap();
        let s = eval_char_state(&kv, [1.0, 0.0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.t[0] + h).abs() < 1e-15 && (s.t[1] - h).abs() < 1e-15);
        assert!((s.f + 1.5f64.ln()).abs() < 1e-15);
        assert!(s.g.abs() < 1e-15);
        let p = phi_q(&kv, [1.0, 0.0]);
        assert!((p - s.z.exp()).norm() < 1e-15);
    }

    #[test]
    fn phi_exp_examples() {
        assert_eq!(phi_exp_centered(0.0), Complex64::new(1.0, 0.0));
        let v = phi_exp_centered(1.0);
        assert!((v.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let want = Complex64::new(1.0f64.cos(), -1.0f64.sin()) * Complex64::new(0.5, 0.5);
        assert!((v - want).norm() < 1e-15);
    }

    #[test]
    fn gradient_small_xi_bound() {
        let kv = family(Family::UniformRandom, 8, 2).unwrap();
        let (df, _) = grad_fg(&kv, [0.1, 0.0], Axis::First);
        assert!((df + 0.1).abs() <= crate::knotset::m3(&kv) * 1e-3);
        assert_eq!(grad_fg(&kv, [0.0, 0.0], Axis::Second), (0.0, 0.0));
    }

    #[test]
    fn quotient_of_gaussians_is_cauchy() {
        let joint = |a: f64, b: f64| (-(a * a + b * b) / 2.0).exp() / std::f64::consts::TAU;
        for &s in &[0.0, 0.5, -1.0, 2.0] {
            let v = quotient_pdf(&joint, s, -12.0, 12.0).unwrap();
            let want = 1.0 / (std::f64::consts::PI * (1.0 + s * s));
            assert!((v - want).abs() < 1e-10, "s={s}");
        }
    }

    #[test]
    fn fourier_at_zero_is_mass() {
        let kv = family(Family::Equispaced, 8, 0).unwrap();
        let v = fourier_of_b(&kv, 0.0).unwrap();
        assert!((v.re - 8.0 / 7.0).abs() < 1e-13 && v.im.abs() < 1e-14);
    }

    #[test]
    fn fourier_routes_agree() {
        let kv = family(Family::Equispaced, 8, 0).unwrap();
        let a = specfun::corollary3_sum(&kv, 0, 1.0).unwrap();
        let b = fourier_moment_quadrature(&kv, 1.0, 0).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }
}

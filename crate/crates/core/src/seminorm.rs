//! Weighted sup norms `sup_t |t^p d^q (limit - approximant)|` on finite grids.
//!
//! `B(t/n)` vanishes for `|t| > n`, so beyond the grid only the Gaussian side
//! remains; it is sampled on an extra tail window and reported separately.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::knotset::KnotVector;
use crate::montecarlo;
use crate::real::{DoubleDouble, Real};
use crate::specfun::{self, ComplexDD};
use crate::splinecore;

pub const MIN_T: f64 = 8.0;
pub const MAX_H: f64 = 0.05;
pub const MAX_PQ: usize = 8;
pub const COROLLARY3_MAX_R: usize = 4;
pub const COROLLARY3_MAX_Q: usize = 2;
const TAIL_WIDTH: f64 = 16.0;
const FD_STEP: f64 = 1e-3;

/// Symmetric grid `-T, -T + h, ..., T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub h: f64,
    /// Nudge points that hit a knot image `n x_k` by `h / 10`.
    pub avoid_knots: bool,
}

impl GridSpec {
    pub fn new(t_max: f64, h: f64) -> Result<Self> {
        if t_max.is_nan() || t_max < MIN_T {
            return Err(Error::InvalidArgument(format!(
                "grid T = {t_max} is below {MIN_T}"
            )));
        }
        if !(h > 0.0 && h <= MAX_H) {
            return Err(Error::InvalidArgument(format!(
                "grid step h = {h} must lie in (0, {MAX_H}]"
            )));
        }
        Ok(GridSpec {
            t_max,
            h,
            avoid_knots: true,
        })
    }

    /// `T = max(8, n)`, the support of `B(t/n)` plus margin.
    pub fn for_n(n: usize, h: f64) -> Result<Self> {
        Self::new(MIN_T.max(n as f64), h)
    }

    pub fn len(&self) -> usize {
        (2.0 * self.t_max / self.h).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self, knot_images: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let t = -self.t_max + i as f64 * self.h;
                if self.avoid_knots && knot_images.iter().any(|&k| (t - k).abs() < 1e-9) {
                    t + 0.1 * self.h
                } else {
                    t
                }
            })
            .collect()
    }

    fn tail(&self) -> Vec<f64> {
        let m = (TAIL_WIDTH / self.h).round() as usize;
        (1..=m)
            .flat_map(|i| {
                let t = self.t_max + i as f64 * self.h;
                [-t, t]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeminormResult {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub value: f64,
    pub argmax_t: f64,
    pub grid: GridSpec,
    /// Maximum over `|t| <= n`.
    pub inner_max: f64,
    /// Maximum over `|t| > n`, including the analytic tail window.
    pub outer_max: f64,
    /// Largest `4 SE |t|^p` for Monte Carlo quantities, zero otherwise.
    pub noise_floor: f64,
}

/// Sup with the fixed tie-break "smaller `|t|` wins".
fn sup(values: &[(f64, f64)], split: f64) -> Result<(f64, f64, f64, f64)> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut inner: f64 = 0.0;
    let mut outer: f64 = 0.0;
    for &(t, v) in values {
        if v.is_nan() {
            return Err(Error::PrecisionLoss {
                estimate: f64::NAN,
                value: t,
            });
        }
        if v > best.0 || (v == best.0 && t.abs() < best.1.abs()) {
            best = (v, t);
        }
        if t.abs() <= split {
            inner = inner.max(v);
        } else {
            outer = outer.max(v);
        }
    }
    Ok((best.0, best.1, inner, outer))
}

fn weighted(t: f64, p: usize) -> f64 {
    t.abs().powi(p as i32)
}

fn check_pq(p: usize, q: usize) -> Result<()> {
    if p + q > MAX_PQ {
        return Err(Error::OrderTooHigh {
            requested: p + q,
            max: MAX_PQ,
        });
    }
    Ok(())
}

fn knot_images(kv: &KnotVector) -> Vec<f64> {
    let n = kv.n() as f64;
    kv.xs().iter().map(|x| n * x).collect()
}

/// `sup |t^p d_t^q (He_r(t) phi(t) - sum_k (x_k - t/n)_+^{n-2-r} / W'(x_k))|`.
///
/// The t-derivative of the sum is exact: `d_t^q` turns exponent `n-2-r` into
/// `n-2-r-q` with factor `(-1)^q n^{-q} (n-2-r)! / (n-2-r-q)!`.
///
/// With `normalized` the sum is multiplied by `c_{n,r} = (n-2)!/((n-2-r)! n^r)`,
/// which makes it exactly `(-1)^r d_t^r B(t/n)`.
fn hermite_vs_spline(
    kv: &KnotVector,
    p: usize,
    q: usize,
    r: usize,
    grid: GridSpec,
    normalized: bool,
) -> Result<SeminormResult> {
    check_pq(p, q)?;
    let n = kv.n();
    if q + r + 4 > n {
        return Err(Error::OrderTooHigh {
            requested: q + r,
            max: n.saturating_sub(4),
        });
    }
    let mut scale = (n as f64).powi(-(q as i32)) * splinecore::falling_factorial(n - 2 - r, q);
    if normalized {
        scale *= splinecore::falling_factorial(n - 2, r) / (n as f64).powi(r as i32);
    }
    let mut pts = grid.points(&knot_images(kv));
    let inner_len = pts.len();
    pts.extend(grid.tail());
    let values: Vec<(f64, f64)> = pts
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let gauss = specfun::hermite_function(r + q, t);
            let spline = if i < inner_len {
                scale * splinecore::bspline_scaled(kv, t, r + q)?
            } else {
                0.0
            };
            Ok((t, weighted(t, p) * (gauss - spline).abs()))
        })
        .collect::<Result<_>>()?;
    let (value, argmax_t, inner_max, outer_max) = sup(&values, n as f64)?;
    Ok(SeminormResult {
        p,
        q,
        r,
        value,
        argmax_t,
        grid,
        inner_max,
        outer_max,
        noise_floor: 0.0,
    })
}

/// Left-hand side of the Gaussian local limit: `B(t/n)` against the
/// standard normal density.
pub fn theorem1_error(
    kv: &KnotVector,
    p: usize,
    q: usize,
    grid: GridSpec,
) -> Result<SeminormResult> {
    hermite_vs_spline(kv, p, q, 0, grid, false)
}

/// Reduced exponent `n-2-r` against the Hermite function `He_r phi`.
pub fn corollary2_error(
    kv: &KnotVector,
    p: usize,
    q: usize,
    r: usize,
    grid: GridSpec,
) -> Result<SeminormResult> {
    hermite_vs_spline(kv, p, q, r, grid, false)
}

/// [`corollary2_error`] with the sum scaled by `c_{n,r}`. The unscaled sum
/// carries an extra `(1 - c_{n,r}) He_r phi = O(r^2 / n)` term.
pub fn corollary2_error_normalized(
    kv: &KnotVector,
    p: usize,
    q: usize,
    r: usize,
    grid: GridSpec,
) -> Result<SeminormResult> {
    hermite_vs_spline(kv, p, q, r, grid, true)
}

/// `d^q/dxi^q` of the Laguerre sum, by Richardson-extrapolated central
/// differences on double-double values (step `1e-3` and half of it).
pub fn corollary3_derivative(kv: &KnotVector, r: usize, q: usize, xi: f64) -> Result<ComplexDD> {
    let f = |x: f64| specfun::corollary3_certified(kv, r, x).map(|c| c.value);
    let diff = |h: f64| -> Result<ComplexDD> {
        let hd = DoubleDouble::new(h);
        match q {
            0 => f(xi),
            1 => Ok((f(xi + h)? - f(xi - h)?) / (hd + hd)),
            2 => {
                let two = DoubleDouble::new(2.0);
                Ok((f(xi + h)? - f(xi)? * two + f(xi - h)?) / (hd * hd))
            }
            _ => Err(Error::OrderTooHigh {
                requested: q,
                max: COROLLARY3_MAX_Q,
            }),
        }
    };
    if q == 0 {
        return f(xi);
    }
    let coarse = diff(FD_STEP)?;
    let fine = diff(0.5 * FD_STEP)?;
    let three = DoubleDouble::new(3.0);
    Ok(fine + (fine - coarse) / three)
}

/// `sup |xi^p d_xi^q (Laguerre sum - He_r(xi) e^{-xi^2/2})|` over the grid.
pub fn corollary3_error(
    kv: &KnotVector,
    p: usize,
    q: usize,
    r: usize,
    grid: GridSpec,
) -> Result<SeminormResult> {
    check_pq(p, q)?;
    if r > COROLLARY3_MAX_R {
        return Err(Error::OrderTooHigh {
            requested: r,
            max: COROLLARY3_MAX_R,
        });
    }
    if q > COROLLARY3_MAX_Q {
        return Err(Error::OrderTooHigh {
            requested: q,
            max: COROLLARY3_MAX_Q,
        });
    }
    let pts = grid.points(&[]);
    let values: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&xi| {
            let d = corollary3_derivative(kv, r, q, xi)?;
            // d^q (He_r e^{-x^2/2}) = (-1)^q He_{r+q} e^{-x^2/2}
            let sign = if q.is_multiple_of(2) { 1.0 } else { -1.0 };
            let gauss = sign * specfun::hermite(r + q, xi) * (-0.5 * xi * xi).exp();
            let re = d.re.to_f64() - gauss;
            let im = d.im.to_f64();
            Ok((xi, weighted(xi, p) * re.hypot(im)))
        })
        .collect::<Result<_>>()?;
    let (value, argmax_t, inner_max, outer_max) = sup(&values, f64::INFINITY)?;
    Ok(SeminormResult {
        p,
        q,
        r,
        value,
        argmax_t,
        grid,
        inner_max,
        outer_max,
        noise_floor: 0.0,
    })
}

/// Monte Carlo version of the simplex characteristic-function limit:
/// `sup |xi^p (E cos(n xi <x, s>) - e^{-xi^2/2})|` and `sup |xi^p E sin|`.
pub fn corollary4_error(
    kv: &KnotVector,
    p: usize,
    q: usize,
    grid: GridSpec,
    n_samples: usize,
    seed: u64,
) -> Result<(SeminormResult, SeminormResult)> {
    if q != 0 {
        return Err(Error::OrderTooHigh {
            requested: q,
            max: 0,
        });
    }
    check_pq(p, q)?;
    if n_samples < 100_000 {
        return Err(Error::InvalidArgument(format!(
            "the simplex characteristic-function seminorm needs at least 1e5 samples, got {n_samples}"
        )));
    }
    let pts = grid.points(&[]);
    let est = montecarlo::mc_char_simplex_many(kv, &pts, n_samples, seed)?;
    let mut cos_vals = Vec::with_capacity(pts.len());
    let mut sin_vals = Vec::with_capacity(pts.len());
    let mut cos_floor: f64 = 0.0;
    let mut sin_floor: f64 = 0.0;
    for (&xi, (c, s)) in pts.iter().zip(&est) {
        let w = weighted(xi, p);
        cos_vals.push((xi, w * (c.mean - (-0.5 * xi * xi).exp()).abs()));
        sin_vals.push((xi, w * s.mean.abs()));
        cos_floor = cos_floor.max(4.0 * c.std_error * w);
        sin_floor = sin_floor.max(4.0 * s.std_error * w);
    }
    let build = |vals: &[(f64, f64)], floor: f64| -> Result<SeminormResult> {
        let (value, argmax_t, inner_max, outer_max) = sup(vals, f64::INFINITY)?;
        Ok(SeminormResult {
            p,
            q,
            r: 0,
            value,
            argmax_t,
            grid,
            inner_max,
            outer_max,
            noise_floor: floor,
        })
    };
    Ok((build(&cos_vals, cos_floor)?, build(&sin_vals, sin_floor)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knotset::{family, Family};

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(7.0, 0.01).is_err());
        assert!(GridSpec::new(8.0, 0.1).is_err());
        let g = GridSpec::new(8.0, 0.05).unwrap();
        assert_eq!(g.len(), 321);
    }

    #[test]
    fn knot_hits_are_nudged() {
        let g = GridSpec::new(8.0, 0.05).unwrap();
        let pts = g.points(&[1.0]);
        assert!(pts.iter().all(|&t| (t - 1.0).abs() > 1e-9));
    }

    #[test]
    fn corollary2_r0_is_theorem1() {
        let kv = family(Family::Chebyshev, 12, 0).unwrap();
        let g = GridSpec::for_n(12, 0.05).unwrap();
        let a = theorem1_error(&kv, 1, 1, g).unwrap();
        let b = corollary2_error(&kv, 1, 1, 0, g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fd_derivative_matches_shifted_order() {
        let kv = family(Family::Equispaced, 10, 0).unwrap();
        for &xi in &[0.3, 1.2] {
            let d = corollary3_derivative(&kv, 1, 1, xi).unwrap();
            // d/dxi of the r-sum equals minus the (r+1)-sum
            let e = specfun::corollary3_sum(&kv, 2, xi).unwrap();
            assert!((d.re.to_f64() + e.re).abs() < 1e-9);
            assert!((d.im.to_f64() + e.im).abs() < 1e-9);
        }
    }
}

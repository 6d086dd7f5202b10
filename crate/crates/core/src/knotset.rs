//! Knot vectors: construction, normalization to zero mean and unit sum of
//! squares, test families, and the cubic moments that control the error.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{DoubleDouble, Real};

/// Strictly increasing knots with `sum x = 0` and `sum x^2 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    xs: Vec<f64>,
    sum_x: f64,
    sum_x2: f64,
}

impl KnotVector {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn sum_x(&self) -> f64 {
        self.sum_x
    }

    pub fn sum_x2(&self) -> f64 {
        self.sum_x2
    }

    pub fn first(&self) -> f64 {
        self.xs[0]
    }

    pub fn last(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// `x_k = -x_{n+1-k}` for every k, up to `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n();
        (0..n).all(|k| (self.xs[k] + self.xs[n - 1 - k]).abs() <= tol)
    }

    pub fn directions(&self) -> DirectionVectors {
        DirectionVectors::new(self)
    }
}

/// `v_k = (x_k, n^{-1/2})`, the columns of a 2 x n matrix with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionVectors {
    pub vs: Vec<[f64; 2]>,
    pub norms: Vec<f64>,
}

impl DirectionVectors {
    pub fn new(kv: &KnotVector) -> Self {
        let c = (kv.n() as f64).sqrt().recip();
        let vs: Vec<[f64; 2]> = kv.xs.iter().map(|&x| [x, c]).collect();
        let norms = vs.iter().map(|v| v[0].hypot(v[1])).collect();
        DirectionVectors { vs, norms }
    }

    /// The 2 x 2 Gram matrix `V^T V`.
    pub fn gram(&self) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for v in &self.vs {
            for a in 0..2 {
                for b in 0..2 {
                    g[a][b] += v[a] * v[b];
                }
            }
        }
        g
    }
}

/// Affine-normalize raw knots: `x = a (raw - mean)` with `sum x^2 = 1`.
///
/// Raw values may come in any order; the result is sorted.
pub fn normalize(raw: &[f64]) -> Result<KnotVector> {
    if raw.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 knots, got {}",
            raw.len()
        )));
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("non-finite knot".into()));
    }
    let mut sorted = raw.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegenerateInput("all knots are equal".into()));
    }
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateKnots(w[0], w[1]));
    }

    let n = DoubleDouble::from_usize(sorted.len());
    let mut sum = DoubleDouble::ZERO;
    for &x in &sorted {
        sum += DoubleDouble::new(x);
    }
    let mean = sum / n;
    let centered: Vec<DoubleDouble> = sorted
        .iter()
        .map(|&x| DoubleDouble::new(x) - mean)
        .collect();
    let mut ss = DoubleDouble::ZERO;
    for &c in &centered {
        ss += c * c;
    }
    let scale = 1.0 / ss.to_f64().sqrt();
    let xs: Vec<f64> = centered.iter().map(|c| c.to_f64() * scale).collect();

    if let Some(w) = xs.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::DuplicateKnots(w[0], w[1]));
    }
    Ok(from_sorted_unchecked(xs))
}

fn from_sorted_unchecked(xs: Vec<f64>) -> KnotVector {
    let mut s = DoubleDouble::ZERO;
    let mut s2 = DoubleDouble::ZERO;
    for &x in &xs {
        s += DoubleDouble::new(x);
        s2 += DoubleDouble::mul_f64_exact(x, x);
    }
    KnotVector {
        xs,
        sum_x: s.to_f64(),
        sum_x2: s2.to_f64(),
    }
}

/// Knot generators used by experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Equispaced,
    Chebyshev,
    UniformRandom,
    Clustered,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Equispaced,
        Family::Chebyshev,
        Family::UniformRandom,
        Family::Clustered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Equispaced => "equispaced",
            Family::Chebyshev => "chebyshev",
            Family::UniformRandom => "uniform_random",
            Family::Clustered => "clustered",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "equispaced" => Ok(Family::Equispaced),
            "chebyshev" => Ok(Family::Chebyshev),
            "uniform_random" | "uniform-random" | "random" => Ok(Family::UniformRandom),
            "clustered" => Ok(Family::Clustered),
            other => Err(Error::InvalidArgument(format!(
                "unknown knot family '{other}'"
            ))),
        }
    }
}

/// Half-width of the cluster in the clustered family, before normalization.
pub const CLUSTER_HALF_WIDTH: f64 = 0.05;
/// Random knots are redrawn until every gap exceeds this fraction of the range.
pub const MIN_RELATIVE_GAP: f64 = 1e-6;

fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    match m {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..m)
            .map(|j| a + (b - a) * j as f64 / (m - 1) as f64)
            .collect(),
    }
}

/// Deterministic knot family of size `n`; `seed` only matters for random kinds.
pub fn family(kind: Family, n: usize, seed: u64) -> Result<KnotVector> {
    if n < 2 {
        return Err(Error::DegenerateInput(format!("need n >= 2, got {n}")));
    }
    let raw: Vec<f64> = match kind {
        Family::Equispaced => (0..n).map(|k| k as f64).collect(),
        Family::Chebyshev => (0..n)
            .map(|k| -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
            .collect(),
        Family::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loop {
                let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                v.sort_by(|a, b| a.total_cmp(b));
                let range = v[n - 1] - v[0];
                let min_gap = v
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min);
                if range > 0.0 && min_gap > MIN_RELATIVE_GAP * range {
                    break v;
                }
            }
        }
        Family::Clustered => {
            let eps = CLUSTER_HALF_WIDTH;
            let clustered = n / 2;
            let rest = n - clustered;
            let left = rest / 2;
            let right = rest - left;
            let mut v = linspace(-eps, eps, clustered);
            if left == 1 {
                v.push(-1.0);
            } else {
                v.extend(linspace(-1.0, -2.0 * eps, left));
            }
            if right == 1 {
                v.push(1.0);
            } else {
                v.extend(linspace(2.0 * eps, 1.0, right));
            }
            v
        }
    };
    normalize(&raw)
}

/// `m^3 = sum_k |v_k|^3 = sum_k (x_k^2 + 1/n)^{3/2}`.
pub fn m3(kv: &KnotVector) -> f64 {
    let inv_n = 1.0 / kv.n() as f64;
    kv.xs.iter().map(|&x| (x * x + inv_n).powf(1.5)).sum()
}

/// `sum_k |x_k|^3`.
pub fn x_l3_cubed(kv: &KnotVector) -> f64 {
    kv.xs.iter().map(|&x| x.abs().powi(3)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn normalize_two_points() {
        let kv = normalize(&[0.0, 1.0]).unwrap();
        assert!((kv.xs()[0] + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((kv.xs()[1] - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn normalize_is_idempotent_on_normalized_input() {
        let kv = normalize(&[-FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_eq!(kv.xs(), &[-FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    }

    #[test]
    fn normalize_three_points() {
        let kv = normalize(&[1.0, 2.0, 3.0]).unwrap();
        let want = [-FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (a, b) in kv.xs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(
            normalize(&[1.0, 1.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            normalize(&[0.0, 1.0, 1.0]),
            Err(Error::DuplicateKnots(_, _))
        ));
        assert!(matches!(normalize(&[3.0]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn family_examples() {
        let kv = family(Family::Equispaced, 3, 0).unwrap();
        assert!((kv.xs()[0] + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(kv.xs()[1].abs() < 1e-15);
        let kv = family(Family::Equispaced, 2, 0).unwrap();
        assert!((kv.xs()[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        let a = family(Family::UniformRandom, 8, 42).unwrap();
        let b = family(Family::UniformRandom, 8, 42).unwrap();
        assert_eq!(a, b);
        let c = family(Family::UniformRandom, 8, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn m3_examples() {
        let kv = family(Family::Equispaced, 3, 0).unwrap();
        let want = 2.0 * (5.0f64 / 6.0).powf(1.5) + (1.0f64 / 3.0).powf(1.5);
        assert!((m3(&kv) - want).abs() < 1e-14);
        assert!((m3(&kv) - 1.7139).abs() < 1e-4);
        let kv = family(Family::Equispaced, 2, 0).unwrap();
        assert!((m3(&kv) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn l3_examples() {
        let kv = family(Family::Equispaced, 3, 0).unwrap();
        assert!((x_l3_cubed(&kv) - FRAC_1_SQRT_2).abs() < 1e-15);
        let kv = family(Family::Equispaced, 2, 0).unwrap();
        assert!((x_l3_cubed(&kv) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn l3_decays_like_inverse_sqrt_n() {
        let ns = [4usize, 16, 64];
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let kv = family(Family::Equispaced, n, 0).unwrap();
                ((n as f64).ln(), x_l3_cubed(&kv).ln())
            })
            .collect();
        let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
        assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn directions_are_orthonormal() {
        for kind in Family::ALL {
            let kv = family(kind, 11, 5).unwrap();
            let g = kv.directions().gram();
            assert!((g[0][0] - 1.0).abs() < 1e-10);
            assert!((g[1][1] - 1.0).abs() < 1e-10);
            assert!(g[0][1].abs() < 1e-10);
        }
    }

    #[test]
    fn clustered_has_cluster() {
        let kv = family(Family::Clustered, 10, 0).unwrap();
        assert_eq!(kv.n(), 10);
        let eq = family(Family::Equispaced, 10, 0).unwrap();
        assert!(x_l3_cubed(&kv) > x_l3_cubed(&eq));
    }
}

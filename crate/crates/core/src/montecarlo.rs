//! Seeded Monte Carlo for the simplex and exponential identities.
//!
//! Work is cut into fixed chunks of [`CHUNK`] samples. Chunk `i` draws from
//! the ChaCha8 stream `i` of the master seed, and chunk results are merged in
//! index order, so estimates are bit-identical for any number of workers.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::knotset::KnotVector;

pub const CHUNK: usize = 16_384;
pub const SEED_ENV: &str = "SPLINE_LLT_SEED";

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Running mean and centred second moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self, seed: u64) -> McEstimate {
        McEstimate {
            mean: self.mean,
            std_error: (self.variance() / self.n as f64).sqrt(),
            n_samples: self.n as usize,
            seed,
        }
    }
}

/// Generator for chunk `stream` of the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `work(rng, count)` on every chunk in parallel; results come back in
/// chunk order.
pub fn chunked<T, F>(n_samples: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = n_samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let count = CHUNK.min(n_samples - i * CHUNK);
            let mut rng = stream_rng(seed, i as u64);
            work(&mut rng, count)
        })
        .collect()
}

/// Seed from the CLI flag, else from `SPLINE_LLT_SEED`, else `default`.
pub fn resolve_seed(flag: Option<u64>, default: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
        }),
        Err(_) => Ok(default),
    }
}

/// `n` independent Exp(1) draws, `-ln(1 - U)` with `U` in the open unit
/// interval.
pub fn sample_exp_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            -(-u).ln_1p()
        })
        .collect()
}

/// Uniform point of the standard simplex as normalized exponentials.
pub fn sample_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut p = sample_exp_vector(n, rng);
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

fn projection(xs: &[f64], s: &[f64]) -> f64 {
    xs.iter().zip(s).map(|(x, p)| x * p).sum()
}

fn check_samples(n_samples: usize, min: usize) -> Result<()> {
    if n_samples < min {
        return Err(Error::InvalidArgument(format!(
            "need at least {min} samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// `E cos(n xi <x, s>)` and `E sin(n xi <x, s>)` for uniform `s`.
pub fn mc_char_simplex(
    kv: &KnotVector,
    xi: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    Ok(mc_char_simplex_many(kv, &[xi], n_samples, seed)?[0])
}

/// [`mc_char_simplex`] at several frequencies from one set of samples.
pub fn mc_char_simplex_many(
    kv: &KnotVector,
    xis: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(McEstimate, McEstimate)>> {
    check_samples(n_samples, 1000)?;
    let xs = kv.xs();
    let n = xs.len() as f64;
    let parts = chunked(n_samples, seed, |rng, count| {
        let mut acc = vec![(Moments::default(), Moments::default()); xis.len()];
        for _ in 0..count {
            let y = projection(xs, &sample_simplex(xs.len(), rng));
            for (a, &xi) in acc.iter_mut().zip(xis) {
                let (s, c) = (n * xi * y).sin_cos();
                a.0.push(c);
                a.1.push(s);
            }
        }
        acc
    });
    let mut total = vec![(Moments::default(), Moments::default()); xis.len()];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.0.merge(&p.0);
            t.1.merge(&p.1);
        }
    }
    Ok(total
        .iter()
        .map(|(c, s)| (c.estimate(seed), s.estimate(seed)))
        .collect())
}

/// Rectangular grid of `bins[0] x bins[1]` equal cells on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2d {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub bins: [usize; 2],
}

impl Grid2d {
    pub fn new(lo: [f64; 2], hi: [f64; 2], bins: [usize; 2]) -> Result<Self> {
        if bins[0] == 0 || bins[1] == 0 || !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::InvalidArgument("empty 2-D grid".into()));
        }
        Ok(Grid2d { lo, hi, bins })
    }

    pub fn cell_size(&self) -> [f64; 2] {
        [
            (self.hi[0] - self.lo[0]) / self.bins[0] as f64,
            (self.hi[1] - self.lo[1]) / self.bins[1] as f64,
        ]
    }

    pub fn len(&self) -> usize {
        self.bins[0] * self.bins[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centre of cell `(i, j)`, stored at index `i * bins[1] + j`.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.cell_size();
        [
            self.lo[0] + (i as f64 + 0.5) * h[0],
            self.lo[1] + (j as f64 + 0.5) * h[1],
        ]
    }

    fn locate(&self, q: [f64; 2]) -> Option<usize> {
        let h = self.cell_size();
        let i = ((q[0] - self.lo[0]) / h[0]).floor();
        let j = ((q[1] - self.lo[1]) / h[1]).floor();
        if i < 0.0 || j < 0.0 || i >= self.bins[0] as f64 || j >= self.bins[1] as f64 {
            return None;
        }
        Some(i as usize * self.bins[1] + j as usize)
    }
}

/// Normalized 2-D histogram of `Q` with per-cell standard errors and the
/// first and second sample moments.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram2d {
    pub grid: Grid2d,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub std_error: Vec<f64>,
    pub outside: u64,
    pub n_samples: usize,
    /// `Q1, Q2, Q1^2, Q2^2, Q1 Q2`.
    pub moments: [McEstimate; 5],
}

impl Histogram2d {
    /// Fraction of the samples that landed on the grid.
    pub fn mass(&self) -> f64 {
        let h = self.grid.cell_size();
        self.density.iter().sum::<f64>() * h[0] * h[1]
    }
}

fn cell_stats(counts: &[u64], n_samples: usize, area: f64) -> (Vec<f64>, Vec<f64>) {
    let nf = n_samples as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / nf;
            (p / area, (p * (1.0 - p) / nf).sqrt() / area)
        })
        .unzip()
}

/// Samples `Q = (sum x_k (P_k - 1), n^{-1/2} sum (P_k - 1))`.
pub fn mc_pdf_q(kv: &KnotVector, n_samples: usize, grid: Grid2d, seed: u64) -> Result<Histogram2d> {
    check_samples(n_samples, 10_000)?;
    let xs = kv.xs();
    let c = (xs.len() as f64).sqrt().recip();
    let parts = chunked(n_samples, seed, |rng, count| {
        let mut counts = vec![0u64; grid.len()];
        let mut outside = 0u64;
        let mut mom = [Moments::default(); 5];
        for _ in 0..count {
            let p = sample_exp_vector(xs.len(), rng);
            let mut q1 = 0.0;
            let mut q2 = 0.0;
            for (x, pk) in xs.iter().zip(&p) {
                q1 += x * (pk - 1.0);
                q2 += pk - 1.0;
            }
            q2 *= c;
            for (m, v) in mom.iter_mut().zip([q1, q2, q1 * q1, q2 * q2, q1 * q2]) {
                m.push(v);
            }
            match grid.locate([q1, q2]) {
                Some(idx) => counts[idx] += 1,
                None => outside += 1,
            }
        }
        (counts, outside, mom)
    });
    let mut counts = vec![0u64; grid.len()];
    let mut outside = 0;
    let mut mom = [Moments::default(); 5];
    for (cs, o, m) in &parts {
        for (a, b) in counts.iter_mut().zip(cs) {
            *a += b;
        }
        outside += o;
        for (a, b) in mom.iter_mut().zip(m) {
            a.merge(b);
        }
    }
    let h = grid.cell_size();
    let (density, std_error) = cell_stats(&counts, n_samples, h[0] * h[1]);
    Ok(Histogram2d {
        grid,
        counts,
        density,
        std_error,
        outside,
        n_samples,
        moments: mom.map(|m| m.estimate(seed)),
    })
}

/// Hermite-Genocchi: `E[f^{(n-1)}(<s, x>)] / (n-1)!` for uniform `s`, which
/// equals the divided difference `f[x_1, ..., x_n]`. The caller passes the
/// derivative `f^{(n-1)}` itself.
pub fn mc_divided_difference<F>(
    kv: &KnotVector,
    deriv: F,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_samples(n_samples, 2)?;
    let xs = kv.xs();
    let fact: f64 = (1..xs.len()).map(|k| k as f64).product();
    let parts = chunked(n_samples, seed, |rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(deriv(projection(xs, &sample_simplex(xs.len(), rng))) / fact);
        }
        m
    });
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.estimate(seed))
}

/// Histogram of `<x, s>` for uniform `s` on `[lo, hi]`.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram1d {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
}

impl Histogram1d {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }
}

/// Standard deviation of `<x, s>`: `(n (n + 1))^{-1/2}` for normalized knots.
pub fn projection_sigma(n: usize) -> f64 {
    ((n * (n + 1)) as f64).sqrt().recip()
}

/// Histogram of `<x, s>` with `bins` equal cells over `+- 5 sigma`.
pub fn mc_projection_histogram(
    kv: &KnotVector,
    bins: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Histogram1d> {
    check_samples(n_samples, 2)?;
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let xs = kv.xs();
    let half = 5.0 * projection_sigma(xs.len());
    let (lo, hi) = (-half, half);
    let w = (hi - lo) / bins as f64;
    let parts = chunked(n_samples, seed, |rng, count| {
        let mut counts = vec![0u64; bins];
        for _ in 0..count {
            let y = projection(xs, &sample_simplex(xs.len(), rng));
            let b = ((y - lo) / w).floor();
            if b >= 0.0 && b < bins as f64 {
                counts[b as usize] += 1;
            }
        }
        counts
    });
    let mut counts = vec![0u64; bins];
    for p in &parts {
        for (a, b) in counts.iter_mut().zip(p) {
            *a += b;
        }
    }
    let (density, std_error) = cell_stats(&counts, n_samples, w);
    Ok(Histogram1d {
        lo,
        hi,
        counts,
        density,
        std_error,
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knotset::{family, Family};

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean() - all.mean()).abs() < 1e-12);
        assert!((a.variance() - all.variance()).abs() < 1e-10);
    }

    #[test]
    fn zero_frequency_is_exact() {
        let kv = family(Family::Equispaced, 6, 0).unwrap();
        let (c, s) = mc_char_simplex(&kv, 0.0, 5000, 9).unwrap();
        assert_eq!(c.mean, 1.0);
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn flag_seed_wins() {
        assert_eq!(resolve_seed(Some(5), 1).unwrap(), 5);
    }
}

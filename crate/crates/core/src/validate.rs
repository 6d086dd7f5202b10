//! The invariant suite run by `spline-llt validate`. Every property is a
//! named [`Check`]; nothing here panics on failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charprob::{self, Axis, InversionRule};
use crate::error::Result;
use crate::harness::Check;
use crate::knotset::{family, m3, x_l3_cubed, Family, KnotVector};
use crate::montecarlo;
use crate::real::{DoubleDouble, Real};
use crate::seminorm::{self, GridSpec};
use crate::specfun;
use crate::splinecore;

fn check(name: &str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((ok, detail)) => Check::new(name, ok, detail),
        Err(e) => Check::new(name, false, format!("error: {e}")),
    }
}

fn all_families(ns: &[usize], seed: u64) -> Result<Vec<KnotVector>> {
    let mut out = Vec::new();
    for kind in Family::ALL {
        for &n in ns {
            out.push(family(kind, n, seed)?);
        }
    }
    Ok(out)
}

fn knotset_checks(seed: u64, out: &mut Vec<Check>) {
    let fams = all_families(&[2, 3, 5, 8, 16, 33, 64], seed);
    out.push(check(
        "knotset/normalized",
        fams.as_ref().map_err(Clone::clone).map(|fs| {
            let worst = fs
                .iter()
                .map(|kv| kv.sum_x().abs().max((kv.sum_x2() - 1.0).abs()))
                .fold(0.0, f64::max);
            (worst <= 1e-12, format!("max deviation {worst:e}"))
        }),
    ));
    out.push(check(
        "knotset/l3-below-max-abs",
        fams.as_ref().map_err(Clone::clone).map(|fs| {
            let ok = fs.iter().all(|kv| {
                let mx = kv.first().abs().max(kv.last().abs());
                x_l3_cubed(kv) <= mx * (1.0 + 1e-12) && mx <= 1.0 + 1e-12
            });
            (ok, "sum |x|^3 <= max |x| <= 1".to_string())
        }),
    ));
    out.push(check(
        "knotset/m3-comparable",
        fams.as_ref().map_err(Clone::clone).map(|fs| {
            let ok = fs.iter().all(|kv| {
                let l3 = x_l3_cubed(kv);
                let root = (kv.n() as f64).sqrt().recip();
                let m = m3(kv);
                m >= l3.max(root) * (1.0 - 1e-12) && m <= 4.0 * (l3 + root)
            });
            (ok, "max(l3, n^-1/2) <= m3 <= 4 (l3 + n^-1/2)".to_string())
        }),
    ));
    out.push(check(
        "knotset/gram-identity",
        fams.as_ref().map_err(Clone::clone).map(|fs| {
            let worst = fs
                .iter()
                .map(|kv| {
                    let g = kv.directions().gram();
                    (g[0][0] - 1.0)
                        .abs()
                        .max((g[1][1] - 1.0).abs())
                        .max(g[0][1].abs())
                })
                .fold(0.0, f64::max);
            (worst <= 1e-12, format!("max |V^T V - I| {worst:e}"))
        }),
    ));
}

fn splinecore_checks(seed: u64, out: &mut Vec<Check>) {
    out.push(check(
        "splinecore/exactness-n3",
        (|| {
            let kv = family(Family::Equispaced, 3, 0)?;
            let a = splinecore::bspline_naive(&kv, 0.0, 0)?;
            let b = splinecore::bspline_stable(&kv, 0.0);
            let want = std::f64::consts::FRAC_1_SQRT_2;
            let dev = (a - want).abs().max((b - want).abs());
            Ok((
                dev <= 1e-12,
                format!("max deviation from 1/sqrt 2: {dev:e}"),
            ))
        })(),
    ));
    out.push(check(
        "splinecore/normalization",
        (|| {
            let mut worst: f64 = 0.0;
            for kind in Family::ALL {
                for n in 2..=20 {
                    let kv = family(kind, n, seed)?;
                    worst = worst.max((splinecore::bspline_mass(&kv, 1e-10)? - 1.0).abs());
                }
            }
            Ok((worst <= 1e-8, format!("max |(n-1) int B - 1| = {worst:e}")))
        })(),
    ));
    out.push(check(
        "splinecore/support-and-sign",
        (|| {
            let mut ok = true;
            for kv in all_families(&[4, 9, 16], seed)? {
                let (a, b) = (kv.first(), kv.last());
                ok &= splinecore::bspline_stable(&kv, a - 0.1) == 0.0;
                ok &= splinecore::bspline_stable(&kv, b + 0.1) == 0.0;
                for i in 1..100 {
                    let t = a + (b - a) * i as f64 / 100.0;
                    ok &= splinecore::bspline_stable(&kv, t) > 0.0;
                }
            }
            Ok((ok, "zero outside, positive inside".to_string()))
        })(),
    ));
    out.push(check(
        "splinecore/oracle-agreement",
        (|| {
            let mut worst: f64 = 0.0;
            for kv in all_families(&[4, 10, 24], seed)? {
                let (a, b) = (kv.first(), kv.last());
                for i in 0..101 {
                    let t = a + (b - a) * (i as f64 + 0.5) / 101.0;
                    let naive = splinecore::bspline_naive(&kv, t, 0)?;
                    let stable = splinecore::bspline_stable(&kv, t);
                    if naive != 0.0 {
                        worst = worst.max((stable - naive).abs() / naive.abs());
                    }
                }
            }
            Ok((
                worst <= splinecore::ORACLE_REL_TOL,
                format!("max relative gap {worst:e}"),
            ))
        })(),
    ));
    out.push(check(
        "splinecore/derivative-ladder",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kv = family(Family::UniformRandom, 10, seed)?;
            let n = kv.n();
            let mut worst: f64 = 0.0;
            let mut tested = 0;
            while tested < 20 {
                let t: f64 = rng.random_range(kv.first()..kv.last());
                if kv.xs().iter().any(|x| (x - t).abs() < 1e-3) {
                    continue;
                }
                tested += 1;
                let span = kv.xs().partition_point(|&x| x <= t) - 1;
                for r in 0..3 {
                    // Central differences on the fixed polynomial piece in double-double,
                    // Richardson-extrapolated over two power-of-two steps.
                    let piece = |u: DoubleDouble| splinecore::reduced_on_span(kv.xs(), u, r, span);
                    let tt = DoubleDouble::from_f64(t);
                    let fd = |h: f64| {
                        let h = DoubleDouble::from_f64(h);
                        (piece(tt + h) - piece(tt - h)) / (h + h)
                    };
                    let rich = ((fd(2f64.powi(-21)) * DoubleDouble::from_f64(4.0)
                        - fd(2f64.powi(-20)))
                        / DoubleDouble::from_f64(3.0))
                    .to_f64();
                    let exact = -((n - 2 - r) as f64) * splinecore::bspline_naive(&kv, t, r + 1)?;
                    worst = worst.max((rich - exact).abs());
                }
            }
            Ok((worst <= 1e-8, format!("max |FD - ladder| {worst:e}")))
        })(),
    ));
}

fn specfun_checks(out: &mut Vec<Check>) {
    out.push(check("specfun/hermite-vs-fd", {
        // He_{r+1} phi = -(He_r phi)' one step at a time keeps rounding small.
        let mut worst: f64 = 0.0;
        for r in 0..=5usize {
            for &t in &[-2.0, 0.0, 1.3] {
                let g = |t: f64| specfun::hermite_function(r, t);
                let fd = |h: f64| (g(t + h) - g(t - h)) / (2.0 * h);
                let rich = (4.0 * fd(5e-4) - fd(1e-3)) / 3.0;
                worst = worst.max((specfun::hermite_function(r + 1, t) + rich).abs());
            }
        }
        Ok((worst <= 1e-6, format!("max deviation {worst:e}")))
    }));
    out.push(check("specfun/hyp2f0-laguerre", {
        let mut worst: f64 = 0.0;
        for r in 0..=5usize {
            for &n in &[4usize, 8, 16] {
                for &w in &[0.3f64, 1.5, 10.0] {
                    let lhs = specfun::hyp2f0(r, (n - 1) as f64, 1.0 / w);
                    let fact: f64 = (1..=r).map(|k| k as f64).product();
                    let rhs = fact
                        * w.powi(-(r as i32))
                        * specfun::laguerre(r, -((n + r) as f64) + 1.0, -w);
                    worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1e-300));
                }
            }
        }
        Ok((worst <= 1e-11, format!("max relative deviation {worst:e}")))
    }));
    out.push(check(
        "specfun/partial-fraction-sums",
        (|| {
            let mut worst: f64 = 0.0;
            for kv in all_families(&[3, 8, 16], 5)? {
                let n = kv.n();
                let ones: Vec<(f64, f64)> = kv.xs().iter().map(|&x| (x, 1.0)).collect();
                let lead: Vec<(f64, f64)> =
                    kv.xs().iter().map(|&x| (x, x.powi(n as i32 - 1))).collect();
                worst = worst.max(splinecore::divided_difference_sum(&ones)?.abs());
                worst = worst.max((splinecore::divided_difference(&lead, n - 1)? - 1.0).abs());
            }
            Ok((worst <= 1e-9, format!("max deviation {worst:e}")))
        })(),
    ));
    out.push(check(
        "specfun/corollary3-routes",
        (|| {
            let mut worst: f64 = 0.0;
            for &n in &[8usize, 12] {
                let kv = family(Family::Equispaced, n, 0)?;
                for r in 0..=3 {
                    worst = worst.max(crate::harness::identity_discrepancy(&kv, r)?.0);
                }
            }
            Ok((worst <= 1e-8, format!("max relative discrepancy {worst:e}")))
        })(),
    ));
}

fn charprob_checks(seed: u64, out: &mut Vec<Check>) {
    out.push(check(
        "charprob/state-invariants",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let mut ok = true;
            let mut worst: f64 = 0.0;
            for i in 0..100 {
                let kv = family(Family::ALL[i % 4], rng.random_range(3..40), seed + i as u64)?;
                let xi = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
                let s = charprob::eval_char_state(&kv, xi);
                let norm2 = xi[0] * xi[0] + xi[1] * xi[1];
                worst = worst.max((s.t.iter().map(|t| t * t).sum::<f64>() - norm2).abs());
                ok &= s.f <= 0.0 && s.f >= s.h - 1e-12;
            }
            Ok((
                ok && worst <= 1e-10,
                format!("max |sum t^2 - |xi|^2| {worst:e}"),
            ))
        })(),
    ));
    out.push(check(
        "charprob/product-vs-exponent",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ffee);
            let mut worst: f64 = 0.0;
            for i in 0..100 {
                let kv = family(Family::ALL[i % 4], rng.random_range(2..40), seed + i as u64)?;
                let xi = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
                let s = charprob::eval_char_state(&kv, xi);
                let prod = charprob::phi_q(&kv, xi);
                let e = s.z.exp();
                worst = worst.max((prod - e).norm() / e.norm());
                worst = worst.max((prod.norm() - s.f.exp()).abs() / s.f.exp());
            }
            Ok((worst <= 1e-12, format!("max relative deviation {worst:e}")))
        })(),
    ));
    out.push(check(
        "charprob/gradient-fd",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9ad);
            let mut worst: f64 = 0.0;
            for i in 0..50 {
                let kv = family(Family::ALL[i % 4], rng.random_range(3..30), seed + i as u64)?;
                let xi = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                for (axis, b) in [(Axis::First, 0), (Axis::Second, 1)] {
                    let (df, dg) = charprob::grad_fg(&kv, xi, axis);
                    let h = 1e-5;
                    let mut lo = xi;
                    let mut hi = xi;
                    lo[b] -= h;
                    hi[b] += h;
                    let (sl, sh) = (
                        charprob::eval_char_state(&kv, lo),
                        charprob::eval_char_state(&kv, hi),
                    );
                    worst = worst.max((df - (sh.f - sl.f) / (2.0 * h)).abs());
                    worst = worst.max((dg - (sh.g - sl.g) / (2.0 * h)).abs());
                }
            }
            Ok((worst <= 1e-6, format!("max |closed form - FD| {worst:e}")))
        })(),
    ));
    out.push(check(
        "charprob/truncation-tail",
        (|| {
            let kv = family(Family::Equispaced, 16, 0)?;
            let r = charprob::truncation_radius(&kv, 0, 1e-14)?;
            let mut worst: f64 = 0.0;
            for j in 0..720 {
                let (s, c) = (j as f64 * std::f64::consts::PI / 360.0).sin_cos();
                worst = worst.max(charprob::eval_char_state(&kv, [r * c, r * s]).f.exp());
            }
            Ok((
                worst < 1e-12,
                format!("R = {r:.2}, max e^F on the circle {worst:e}"),
            ))
        })(),
    ));
    out.push(check(
        "charprob/quotient-cauchy",
        (|| {
            let joint = |a: f64, b: f64| (-(a * a + b * b) / 2.0).exp() / std::f64::consts::TAU;
            let mut worst: f64 = 0.0;
            for &s in &[0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0] {
                let v = charprob::quotient_pdf(&joint, s, -12.0, 12.0)?;
                worst = worst.max((v - 1.0 / (std::f64::consts::PI * (1.0 + s * s))).abs());
            }
            Ok((worst <= 1e-6, format!("max deviation {worst:e}")))
        })(),
    ));
    out.push(check(
        "charprob/inversion-symmetry",
        (|| {
            let kv = family(Family::Equispaced, 12, 0)?;
            let rule = InversionRule::new(&kv)?;
            let mut worst: f64 = 0.0;
            for s in [[0.4, 0.9], [1.3, -0.2], [-0.7, 1.1]] {
                let a = rule.pdf(s).re;
                let b = rule.pdf([-s[0], s[1]]).re;
                worst = worst.max((a - b).abs());
            }
            Ok((
                worst <= 1e-9,
                format!("max |pdf(s1,s2) - pdf(-s1,s2)| {worst:e}"),
            ))
        })(),
    ));
    out.push(check(
        "charprob/fourier-at-zero",
        (|| {
            let kv = family(Family::Equispaced, 8, 0)?;
            let v = charprob::fourier_of_b(&kv, 0.0)?;
            let dev = (v - num_complex::Complex64::new(8.0 / 7.0, 0.0)).norm();
            Ok((dev <= 1e-12, format!("deviation from n/(n-1): {dev:e}")))
        })(),
    ));
}

fn montecarlo_checks(seed: u64, n_mc: usize, out: &mut Vec<Check>) {
    out.push(check(
        "montecarlo/determinism",
        (|| {
            let kv = family(Family::UniformRandom, 8, seed)?;
            let a = montecarlo::mc_char_simplex(&kv, 1.0, 50_000, seed)?;
            let b = montecarlo::mc_char_simplex(&kv, 1.0, 50_000, seed)?;
            Ok((a == b, "repeat run is bit-identical".to_string()))
        })(),
    ));
    out.push(check(
        "montecarlo/projection-density",
        (|| {
            let kv = family(Family::UniformRandom, 8, seed)?;
            let hist = montecarlo::mc_projection_histogram(&kv, 40, n_mc, seed)?;
            let mut worst: f64 = 0.0;
            for i in 0..hist.counts.len() {
                let (a, b) = hist.edges(i);
                let exact = 7.0 * splinecore::bspline_integral(&kv, a, b) / hist.width();
                if exact * hist.width() * (n_mc as f64) < 20.0 {
                    continue;
                }
                worst = worst.max((hist.density[i] - exact).abs() / hist.std_error[i]);
            }
            Ok((worst <= 4.0, format!("max |z| {worst:.3}")))
        })(),
    ));
    out.push(check(
        "montecarlo/modulus",
        (|| {
            let kv = family(Family::Clustered, 12, seed)?;
            let xis = [0.3, 1.0, 2.5];
            let est = montecarlo::mc_char_simplex_many(&kv, &xis, n_mc, seed)?;
            let ok = est.iter().all(|(c, s)| {
                c.mean * c.mean + s.mean * s.mean <= 1.0 + 4.0 * c.std_error.max(s.std_error)
            });
            Ok((ok, "cos^2 + sin^2 <= 1 + 4 SE".to_string()))
        })(),
    ));
    out.push(check(
        "montecarlo/hermite-genocchi",
        (|| {
            let kv = family(Family::UniformRandom, 8, 3)?;
            let vals: Vec<(f64, f64)> = kv.xs().iter().map(|&x| (x, x.exp())).collect();
            let exact = splinecore::divided_difference(&vals, 7)?;
            let est = montecarlo::mc_divided_difference(&kv, f64::exp, n_mc, seed)?;
            let zero = montecarlo::mc_divided_difference(&kv, |_| 0.0, 10_000, seed)?;
            let z = (est.mean - exact).abs() / est.std_error;
            Ok((z <= 4.0 && zero.mean == 0.0, format!("z = {z:.3}")))
        })(),
    ));
}

fn seminorm_checks(seed: u64, out: &mut Vec<Check>) {
    out.push(check(
        "seminorm/grid-doubling",
        (|| {
            let kv = family(Family::Equispaced, 32, 0)?;
            let a = seminorm::theorem1_error(&kv, 0, 0, GridSpec::for_n(32, 0.05)?)?;
            let b = seminorm::theorem1_error(&kv, 0, 0, GridSpec::for_n(32, 0.025)?)?;
            let d = (a.value - b.value).abs();
            Ok((d < 1e-6, format!("change {d:e}")))
        })(),
    ));
    out.push(check(
        "seminorm/monotone-equispaced",
        (|| {
            let mut prev = f64::INFINITY;
            let mut ok = true;
            let mut vals = Vec::new();
            for &n in &[8usize, 16, 32, 64, 128] {
                let kv = family(Family::Equispaced, n, 0)?;
                let v = seminorm::theorem1_error(&kv, 0, 0, GridSpec::for_n(n, 0.05)?)?.value;
                ok &= v <= 1.05 * prev;
                prev = v;
                vals.push(format!("{v:.3e}"));
            }
            Ok((ok, vals.join(" ")))
        })(),
    ));
    out.push(check(
        "seminorm/ratio-bounded",
        (|| {
            let mut pts = Vec::new();
            for &n in &[16usize, 64] {
                let mut s = 0.0;
                for k in 0..20u64 {
                    let kv = family(Family::UniformRandom, n, seed.wrapping_add(k))?;
                    let v = seminorm::theorem1_error(&kv, 0, 0, GridSpec::for_n(n, 0.05)?)?.value;
                    s += (v / x_l3_cubed(&kv)).ln();
                }
                pts.push(((n as f64).ln(), s / 20.0));
            }
            let slope = (pts[1].1 - pts[0].1) / (pts[1].0 - pts[0].0);
            Ok((slope <= 0.1, format!("slope {slope:.4}")))
        })(),
    ));
}

/// Runs every check; Monte Carlo checks use `n_mc` samples.
pub fn run_suite(seed: u64, n_mc: usize) -> Vec<Check> {
    let mut out = Vec::new();
    knotset_checks(seed, &mut out);
    splinecore_checks(seed, &mut out);
    specfun_checks(&mut out);
    charprob_checks(seed, &mut out);
    montecarlo_checks(seed, n_mc.max(10_000), &mut out);
    seminorm_checks(seed, &mut out);
    out
}

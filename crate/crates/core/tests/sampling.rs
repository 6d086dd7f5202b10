use spline_llt::montecarlo::{self, Grid2d, Moments};
use spline_llt::{family, Family};

#[test]
fn exponential_draws_have_unit_mean_and_variance() {
    let mut rng = montecarlo::stream_rng(11, 0);
    let mut m = Moments::default();
    for _ in 0..40_000 {
        for x in montecarlo::sample_exp_vector(5, &mut rng) {
            assert!(x > 0.0 && x.is_finite());
            m.push(x);
        }
    }
    let n = m.count() as f64;
    assert!((m.mean() - 1.0).abs() < 4.0 / n.sqrt());
    assert!((m.variance() - 1.0).abs() < 0.03);
}

#[test]
fn simplex_points_sum_to_one_with_equal_means() {
    let mut rng = montecarlo::stream_rng(3, 7);
    let n = 6;
    let mut sums = vec![Moments::default(); n];
    for _ in 0..50_000 {
        let p = montecarlo::sample_simplex(n, &mut rng);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for (m, v) in sums.iter_mut().zip(p) {
            m.push(v);
        }
    }
    // Dirichlet(1,...,1): mean 1/n, variance (n-1)/(n^2 (n+1)).
    let var = (n - 1) as f64 / ((n * n * (n + 1)) as f64);
    for m in &sums {
        assert!((m.mean() - 1.0 / n as f64).abs() < 4.0 * (var / 50_000.0).sqrt());
        assert!((m.variance() / var - 1.0).abs() < 0.05);
    }
}

#[test]
fn estimates_are_deterministic_and_seed_dependent() {
    let kv = family(Family::Chebyshev, 12, 0).unwrap();
    let a = montecarlo::mc_char_simplex(&kv, 0.7, 50_000, 9).unwrap();
    let b = montecarlo::mc_char_simplex(&kv, 0.7, 50_000, 9).unwrap();
    let c = montecarlo::mc_char_simplex(&kv, 0.7, 50_000, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0.mean, c.0.mean);
    assert_eq!(a.0.seed, 9);
    assert_eq!(a.0.n_samples, 50_000);
}

#[test]
fn sample_count_not_a_multiple_of_the_chunk() {
    let kv = family(Family::Equispaced, 5, 0).unwrap();
    let n = montecarlo::CHUNK * 2 + 17;
    let (c, _) = montecarlo::mc_char_simplex(&kv, 0.3, n, 1).unwrap();
    assert_eq!(c.n_samples, n);
}

#[test]
fn too_few_samples_is_an_error() {
    let kv = family(Family::Equispaced, 5, 0).unwrap();
    assert!(montecarlo::mc_char_simplex(&kv, 0.3, 10, 1).is_err());
    let grid = Grid2d::new([-1.0, -1.0], [1.0, 1.0], [4, 4]).unwrap();
    assert!(montecarlo::mc_pdf_q(&kv, 100, grid, 1).is_err());
}

#[test]
fn q_has_zero_mean_and_identity_covariance() {
    let kv = family(Family::UniformRandom, 20, 4).unwrap();
    let grid = Grid2d::new([-5.0, -5.0], [5.0, 5.0], [20, 20]).unwrap();
    let h = montecarlo::mc_pdf_q(&kv, 200_000, grid, 2).unwrap();
    let target = [0.0, 0.0, 1.0, 1.0, 0.0];
    for (m, t) in h.moments.iter().zip(target) {
        assert!((m.mean - t).abs() < 5.0 * m.std_error, "{m:?} vs {t}");
    }
    let total = h.counts.iter().sum::<u64>() + h.outside;
    assert_eq!(total as usize, h.n_samples);
    assert!((h.mass() - (1.0 - h.outside as f64 / h.n_samples as f64)).abs() < 1e-12);
}

#[test]
fn projection_histogram_has_the_right_spread() {
    let kv = family(Family::Equispaced, 10, 0).unwrap();
    let h = montecarlo::mc_projection_histogram(&kv, 50, 100_000, 5).unwrap();
    let sigma = montecarlo::projection_sigma(10);
    let var: f64 = (0..50)
        .map(|i| {
            let (a, b) = h.edges(i);
            let c = 0.5 * (a + b);
            c * c * h.density[i] * h.width()
        })
        .sum();
    assert!((var.sqrt() / sigma - 1.0).abs() < 0.03);
}

#[test]
fn divided_difference_of_a_polynomial_is_exact() {
    let kv = family(Family::Clustered, 6, 0).unwrap();
    // f = x^5 / 5! has f^{(5)} = 1, so the divided difference is 1/5!.
    let est = montecarlo::mc_divided_difference(&kv, |_| 1.0, 5_000, 1).unwrap();
    assert!((est.mean - 1.0 / 120.0).abs() < 1e-15);
    assert_eq!(est.std_error, 0.0);
}

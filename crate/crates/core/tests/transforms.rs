use num_complex::Complex64;
use proptest::prelude::*;
use spline_llt::charprob::{self, InversionRule};
use spline_llt::montecarlo::Grid2d;
use spline_llt::specfun;
use spline_llt::{family, Error, Family};

#[test]
fn hermite_polynomials_by_hand() {
    for &t in &[-1.5, 0.0, 0.7, 3.0] {
        assert_eq!(specfun::hermite(0, t), 1.0);
        assert_eq!(specfun::hermite(1, t), t);
        assert!((specfun::hermite(2, t) - (t * t - 1.0)).abs() < 1e-14);
        assert!((specfun::hermite(3, t) - (t * t * t - 3.0 * t)).abs() < 1e-13);
    }
}

#[test]
fn laguerre_low_orders() {
    let (a, x) = (-7.0, 0.4);
    assert_eq!(specfun::laguerre(0, a, x), 1.0);
    assert!((specfun::laguerre(1, a, x) - (1.0 + a - x)).abs() < 1e-14);
    let l2 = 0.5 * (x * x - 2.0 * (a + 2.0) * x + (a + 1.0) * (a + 2.0));
    assert!((specfun::laguerre(2, a, x) - l2).abs() < 1e-13);
}

#[test]
fn fourier_transform_is_even_in_value_at_zero_and_decays() {
    let kv = family(Family::UniformRandom, 10, 5).unwrap();
    let at0 = charprob::fourier_of_b(&kv, 0.0).unwrap();
    assert!((at0 - Complex64::new(10.0 / 9.0, 0.0)).norm() < 1e-12);
    let near = charprob::fourier_of_b(&kv, 1e-4).unwrap();
    let far = charprob::fourier_of_b(&kv, 4.0).unwrap();
    assert!(far.norm() < near.norm());
}

#[test]
fn laguerre_sum_approaches_the_gaussian_for_large_n() {
    let kv = family(Family::Equispaced, 16, 0).unwrap();
    for &xi in &[0.5, 1.0, 2.0] {
        // Transform of B(t/n) is n/(n-1) times the characteristic function of a density.
        let v = specfun::corollary3_sum(&kv, 0, xi).unwrap() * (15.0 / 16.0);
        let g = (-xi * xi / 2.0f64).exp();
        assert!(
            (v - Complex64::new(g, 0.0)).norm() < 0.05,
            "xi {xi}: {v} vs {g}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phi_q_product_equals_exponent(seed in 0u64..1000, n in 2usize..30, a in -6.0f64..6.0, b in -6.0f64..6.0) {
        let kv = family(Family::UniformRandom, n, seed).unwrap();
        let st = charprob::eval_char_state(&kv, [a, b]);
        let p = charprob::phi_q(&kv, [a, b]);
        prop_assert!((p - st.z.exp()).norm() <= 1e-12 * p.norm().max(1e-300));
        prop_assert!(st.f <= 0.0);
        prop_assert!(st.h <= 0.0);
    }

    #[test]
    fn phi_q_is_hermitian(seed in 0u64..1000, a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let kv = family(Family::UniformRandom, 9, seed).unwrap();
        let p = charprob::phi_q(&kv, [a, b]);
        let m = charprob::phi_q(&kv, [-a, -b]);
        prop_assert!((p - m.conj()).norm() < 1e-14);
    }
}

#[test]
fn gaussian_ratio_tends_to_the_normal_density() {
    let d = charprob::pdf_gaussian_ratio(10_000, 0.0).unwrap();
    assert!((d - charprob::gaussian_density(0.0)).abs() < 2e-2);
    let sup = |n: usize| {
        (-40..=40)
            .map(|i| {
                let t = i as f64 / 10.0;
                (charprob::pdf_gaussian_ratio(n, t).unwrap() - charprob::gaussian_density(t)).abs()
            })
            .fold(0.0f64, f64::max)
    };
    assert!(sup(400) < sup(100));
    assert!(sup(100) < sup(25));
}

#[test]
fn inverted_density_has_unit_mass_on_a_coarse_grid() {
    let kv = family(Family::Equispaced, 12, 0).unwrap();
    let rule = InversionRule::new(&kv).unwrap();
    let grid = Grid2d::new([-7.0, -7.0], [9.0, 9.0], [32, 32]).unwrap();
    let avg = rule.grid_cell_averages(&grid);
    let h = grid.cell_size();
    let mass: f64 = avg.iter().map(|z| z.re).sum::<f64>() * h[0] * h[1];
    assert!((mass - 1.0).abs() < 2e-2, "mass {mass}");
    let point = charprob::pdf_q_inversion(&kv, [0.0, 0.0]).unwrap();
    assert!(point > 0.05 && point < 0.3);
}

#[test]
fn inversion_rejects_small_and_large_n() {
    assert!(InversionRule::new(&family(Family::Equispaced, 3, 0).unwrap()).is_err());
    assert!(InversionRule::new(
        &family(Family::Equispaced, charprob::INVERSION_MAX_N + 1, 0).unwrap()
    )
    .is_err());
}

#[test]
fn l1_integral_needs_enough_decay() {
    let kv = family(Family::Equispaced, 3, 0).unwrap();
    assert!(matches!(
        charprob::char_diff_integral(&kv, 0),
        Err(Error::InvalidArgument(_))
    ));
    let kv = family(Family::Equispaced, 12, 0).unwrap();
    let i0 = charprob::char_diff_integral(&kv, 0).unwrap();
    let i1 = charprob::char_diff_integral(&kv, 1).unwrap();
    assert!(i0 > 0.0 && i1 > 0.0 && i0.is_finite() && i1.is_finite());
}

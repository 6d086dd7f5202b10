use spline_llt::seminorm::{self, GridSpec};
use spline_llt::{family, Error, Family};

#[test]
fn grid_spec_validation() {
    assert!(GridSpec::new(4.0, 0.01).is_err());
    assert!(GridSpec::new(10.0, 0.2).is_err());
    assert!(GridSpec::new(10.0, 0.0).is_err());
    let g = GridSpec::for_n(32, 0.05).unwrap();
    assert_eq!(g.t_max, 32.0);
    assert_eq!(g.len(), 1281);
}

#[test]
fn theorem1_error_decreases_for_every_family() {
    let g = |n| GridSpec::for_n(n, 0.05).unwrap();
    for kind in [Family::Equispaced, Family::Chebyshev, Family::Clustered] {
        let a = seminorm::theorem1_error(&family(kind, 8, 0).unwrap(), 0, 0, g(8)).unwrap();
        let b = seminorm::theorem1_error(&family(kind, 64, 0).unwrap(), 0, 0, g(64)).unwrap();
        assert!(b.value < a.value, "{kind}: {} vs {}", a.value, b.value);
        assert!(a.value >= a.inner_max.max(a.outer_max) - 1e-300);
    }
}

#[test]
fn weighted_and_derivative_seminorms_are_finite() {
    let kv = family(Family::Equispaced, 24, 0).unwrap();
    let g = GridSpec::for_n(24, 0.05).unwrap();
    for (p, q) in [(1, 0), (2, 1), (0, 2)] {
        let s = seminorm::theorem1_error(&kv, p, q, g).unwrap();
        assert!(s.value.is_finite() && s.value > 0.0);
        assert_eq!((s.p, s.q, s.r), (p, q, 0));
    }
}

#[test]
fn order_limits_are_enforced() {
    let kv = family(Family::Equispaced, 6, 0).unwrap();
    let g = GridSpec::for_n(6, 0.05).unwrap();
    assert!(matches!(
        seminorm::corollary2_error(&kv, 0, 1, 2, g),
        Err(Error::OrderTooHigh { .. })
    ));
    assert!(seminorm::theorem1_error(&kv, 9, 0, g).is_err());
}

#[test]
fn normalized_reduction_beats_the_raw_sum() {
    let kv = family(Family::Equispaced, 32, 0).unwrap();
    let g = GridSpec::for_n(32, 0.05).unwrap();
    let raw = seminorm::corollary2_error(&kv, 0, 0, 2, g).unwrap();
    let scaled = seminorm::corollary2_error_normalized(&kv, 0, 0, 2, g).unwrap();
    assert!(scaled.value < raw.value);
}

#[test]
fn corollary3_error_shrinks_with_n() {
    let g = GridSpec::new(8.0, 0.05).unwrap();
    let a =
        seminorm::corollary3_error(&family(Family::Equispaced, 8, 0).unwrap(), 0, 0, 1, g).unwrap();
    let b = seminorm::corollary3_error(&family(Family::Equispaced, 16, 0).unwrap(), 0, 0, 1, g)
        .unwrap();
    assert!(b.value < a.value);
}

#[test]
fn corollary4_reports_a_noise_floor() {
    let kv = family(Family::Equispaced, 16, 0).unwrap();
    let g = GridSpec::new(8.0, 0.05).unwrap();
    let (c, s) = seminorm::corollary4_error(&kv, 0, 0, g, 100_000, 3).unwrap();
    assert!(c.noise_floor > 0.0 && s.noise_floor > 0.0);
    assert!(s.value < 3.0 * s.noise_floor);
    assert!(seminorm::corollary4_error(&kv, 0, 1, g, 100_000, 3).is_err());
}

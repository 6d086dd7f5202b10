"""Smoke test for the spline_llt extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import json
import math

import spline_llt as sl


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    kv = sl.KnotVector.family("equispaced", 3)
    close(sl.bspline(kv, 0.0), 1 / math.sqrt(2), 1e-12)
    close(sl.bspline_naive(kv, 0.0), 1 / math.sqrt(2), 1e-12)

    raw = sl.KnotVector([3.0, -1.0, 0.5, 7.0, 2.0])
    close(sum(raw.xs), 0.0, 1e-12)
    close(sum(x * x for x in raw.xs), 1.0, 1e-12)
    close(sl.bspline_mass(raw), 1.0, 1e-8)

    try:
        sl.KnotVector([1.0, 1.0, 2.0])
    except ValueError:
        pass
    else:
        raise AssertionError("duplicate knots accepted")

    kv8 = sl.KnotVector.family("uniform_random", 8, seed=4)
    for xi in (0.5, 2.0):
        a = sl.corollary3_sum(kv8, xi, r=1)
        b = sl.fourier_quadrature(kv8, xi, r=1)
        assert abs(a - b) <= 1e-8 * abs(a), (a, b)

    st = sl.char_state(kv8, 0.3, -1.2)
    z = sl.phi_q(kv8, 0.3, -1.2)
    close(abs(z), math.exp(st["f"]), 1e-12)

    errs = [sl.theorem1_error(sl.KnotVector.family("equispaced", n))["value"] for n in (8, 32, 128)]
    assert errs[0] > errs[1] > errs[2], errs

    (c, c_se), (s, s_se) = sl.mc_char_simplex(sl.KnotVector.family("equispaced", 32), 1.0, 200_000, seed=3)
    assert abs(c - math.exp(-0.5)) < 0.05 and abs(s) < 4 * s_se + 0.01

    csv_text, summary = sl.run_experiment("scaling", family="equispaced", n="8,16,32,64,128")
    summary = json.loads(summary)
    slope = summary["slopes"]["equispaced"]["slope"]
    assert -1.2 <= slope <= -0.45 and summary["passed"], summary
    assert len(csv_text.strip().splitlines()) == 6

    print("spline_llt smoke test passed; Gaussian-limit slope", round(slope, 4))


if __name__ == "__main__":
    main()

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvlab.examples import NAMES, analytic_tv, gaussian_bumps, make_example


def _pt(*c):
    return np.array([c], dtype=float)


def test_point_values():
    assert make_example("u2").value(_pt(0.25, 0.0), 0.0)[0] == pytest.approx(0.5)
    assert make_example("u2").value(_pt(-0.25, 0.3), 0.0)[0] == pytest.approx(-0.5)
    assert make_example("F").value(_pt(0.3, 0.4, 0.0), 0.5)[0] == pytest.approx(2.0)
    assert make_example("u1").value(_pt(math.exp(-2), 0.0), 0.0)[0] == pytest.approx(-0.5)
    assert make_example("u1").value(_pt(0.0, 0.1), 0.0)[0] == 0.0
    assert make_example("step").value(_pt(-0.1, 0.0), 0.0)[0] == -0.5


def test_analytic_tv_values():
    assert analytic_tv(make_example("step"), 0.25) == pytest.approx(0.5)
    assert analytic_tv(make_example("disc_solution"), 0.5) == pytest.approx(math.pi)
    assert analytic_tv(make_example("disc_solution"), 0.25) == 0.0
    assert analytic_tv(make_example("u2"), 0.25) == pytest.approx(0.437, abs=5e-4)
    assert analytic_tv(make_example("F"), 0.25) is None


def test_u2_constant_against_mpmath():
    # TV of sign(s) sqrt|s| on B_1 = int_{-1}^{1} |s|^(-1/2) sqrt(1 - s^2) ds
    with mpmath.workdps(30):
        ref = 2 * mpmath.quad(lambda s: mpmath.sqrt(1 - s**2) / mpmath.sqrt(s), [0, 1])
    assert analytic_tv(make_example("u2"), 1.0) == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("rho", [0.05, 0.2, 0.5])
def test_u1_tv_against_mpmath(rho):
    # chord 2 sqrt(rho^2 - s^2) against |u1'(s)| = d(-1/ln s)/ds on both half-lines, integrated by parts
    with mpmath.workdps(30):
        ref = 2 * mpmath.quad(lambda s: 2 * s / (mpmath.sqrt(rho**2 - s**2) * -mpmath.log(s)), [0, rho])
    assert analytic_tv(make_example("u1"), rho) == pytest.approx(float(ref), rel=1e-6)
    with pytest.raises(ValueError, match="rho < 1"):
        analytic_tv(make_example("u1"), 1.0)


def test_disc_solution_level_and_extinction():
    ex = make_example("disc_solution", radius=0.25, height=1.0)
    assert ex.params["extinction_time"] == pytest.approx(0.125)
    assert ex.value(_pt(0.0, 0.0), 0.0625)[0] == pytest.approx(0.5)
    assert ex.value(_pt(0.0, 0.0), 0.2)[0] == 0.0
    assert ex.value(_pt(0.3, 0.0), 0.0)[0] == 0.0
    assert analytic_tv(ex, 0.5, 0.0625) == pytest.approx(math.pi * 0.25)


@settings(max_examples=30, deadline=None)
@given(
    x=st.tuples(st.floats(0.1, 1), st.floats(-1, 1), st.floats(-1, 1)),
    t=st.floats(0.0, 0.9),
)
def test_unbounded_example_companions_match_finite_differences(x, t):
    F = make_example("F")
    p = _pt(*x)
    e = 1e-6
    ut = (F.value(p, t + e) - F.value(p, t - e)) / (2 * e)
    assert F.time_derivative(p, t)[0] == pytest.approx(ut[0], rel=1e-6)
    # div z by central differences equals u_t
    div = 0.0
    for k in range(3):
        d = np.zeros(3)
        d[k] = e
        div += (F.dual(p + d, t)[0, k] - F.dual(p - d, t)[0, k]) / (2 * e)
    assert div == pytest.approx(F.time_derivative(p, t)[0], rel=1e-5)
    assert np.linalg.norm(F.dual(p, t)[0]) == pytest.approx(1.0)


def test_disc_time_derivative_matches_finite_differences():
    ex = make_example("disc_solution", radius=0.25, height=1.0)
    p = _pt(0.1, 0.0)
    e = 1e-6
    assert ex.time_derivative(p, 0.05)[0] == pytest.approx((ex.value(p, 0.05 + e) - ex.value(p, 0.05 - e))[0] / (2 * e))
    assert ex.time_derivative(p, 0.2)[0] == 0.0


def test_factory_errors_and_names():
    assert set(NAMES) == {"F", "u1", "u2", "step", "disc_solution"}
    with pytest.raises(ValueError, match="unknown example 'u3'"):
        make_example("u3")
    with pytest.raises(ValueError, match="N >= 3"):
        make_example("F", dim=2)
    with pytest.raises(ValueError, match="N = 2"):
        analytic_tv(make_example("disc_solution", dim=3), 1.0)
    verdicts = {n: make_example(n).verdict for n in NAMES}
    assert verdicts == {"F": "unbounded", "u1": "continuous", "u2": "continuous", "step": "discontinuous",
                        "disc_solution": "continuous"}


def test_gaussian_bumps_are_seeded_and_time_independent():
    x = np.random.default_rng(0).uniform(-0.5, 0.5, size=(20, 2))
    a, b, c = gaussian_bumps(3), gaussian_bumps(3), gaussian_bumps(4)
    np.testing.assert_array_equal(a(x, 0.0), b(x, 0.7))
    assert not np.allclose(a(x, 0.0), c(x, 0.0))
    assert np.abs(gaussian_bumps(3, count=1, amplitude=2.0)(x, 0.0)).max() <= 2.0

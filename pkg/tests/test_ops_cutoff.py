import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tvlab.cutoff import Cutoff
from tvlab.grid import Ball, SpaceTimeField, sample_analytic
from tvlab.ops import divergence, forward_grad, grad_norm, project_unit_ball

shapes = st.sampled_from([(7,), (5, 6), (3, 4, 5)])


@settings(max_examples=50, deadline=None)
@given(data=st.data(), shape=shapes, h=st.floats(0.01, 2.0))
def test_divergence_is_negative_adjoint_of_gradient(data, shape, h):
    u = data.draw(hnp.arrays(np.float64, shape, elements=st.floats(-5, 5)))
    p = data.draw(hnp.arrays(np.float64, (len(shape),) + shape, elements=st.floats(-5, 5)))
    lhs = float((forward_grad(u, h) * p).sum())
    rhs = -float((u * divergence(p, h)).sum())
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-9)


def test_gradient_against_loop_oracle():
    r = np.random.default_rng(1)
    u = r.standard_normal((4, 5))
    h = 0.5
    g = forward_grad(u, h)
    for i in range(4):
        for j in range(5):
            gx = (u[i + 1, j] - u[i, j]) / h if i < 3 else 0.0
            gy = (u[i, j + 1] - u[i, j]) / h if j < 4 else 0.0
            assert g[0, i, j] == pytest.approx(gx)
            assert g[1, i, j] == pytest.approx(gy)


def test_gradient_of_constant_and_divergence_of_constant_interior():
    assert np.all(forward_grad(np.full((4, 4), 2.0), 0.1) == 0)
    d = divergence(np.ones((2, 5, 5)), 0.1)
    assert np.all(d[1:-1, 1:-1] == 0)


@settings(max_examples=50, deadline=None)
@given(p=hnp.arrays(np.float64, (2, 4, 4), elements=st.floats(-100, 100)))
def test_projection_is_admissible_and_idempotent(p):
    q = project_unit_ball(p)
    assert np.sqrt((q**2).sum(axis=0)).max() <= 1 + 1e-12
    np.testing.assert_allclose(project_unit_ball(q), q, rtol=0, atol=1e-15)
    small = np.sqrt((p**2).sum(axis=0)) <= 1
    np.testing.assert_array_equal(q[:, small], p[:, small])


def test_grad_norm_is_euclidean():
    u = np.add.outer(np.arange(4.0) * 3, np.arange(4.0) * 4)
    assert grad_norm(u, 1.0)[0, 0] == pytest.approx(5.0)


def _grid(h=1 / 32):
    return sample_analytic(lambda x, t: x[..., 0], [(-0.5, 0.5)] * 2, h, [0.0, 0.5, 1.0])


def test_radial_cutoff_values_and_support():
    f = _grid()
    ball = Ball((0.0, 0.0), 0.3)
    cut = Cutoff.radial(f, ball, 0.15, (0.0, 0.5))
    r = np.sqrt((f.coords() ** 2).sum(axis=-1))
    assert np.all(cut.spatial[r <= 0.15] == 1.0)
    assert np.all(cut.spatial[r >= 0.3] == 0.0)
    assert cut.lipschitz_space == pytest.approx(1 / 0.15)
    assert cut.lipschitz_time == pytest.approx(2.0)
    assert cut.spatial_grad_norm().max() <= math.sqrt(2) / 0.15


def test_temporal_profile():
    f = _grid()
    cut = Cutoff.radial(f, Ball((0.0, 0.0), 0.3), 0.1, (0.25, 0.75))
    np.testing.assert_allclose(cut.temporal([0.0, 0.25, 0.5, 0.75, 1.0]), [0, 0, 0.5, 1, 1])
    np.testing.assert_allclose(cut.temporal_rate([0.0, 0.25, 0.5, 0.75, 1.0]), [0, 1, 2, 1, 0])
    flat = Cutoff.radial(f, Ball((0.0, 0.0), 0.3), 0.1)
    assert np.all(flat.temporal([0.0, 1.0]) == 1) and flat.lipschitz_time == 0


def test_cutoff_rejects_bad_construction():
    f = _grid()
    ball = Ball((0.0, 0.0), 0.3)
    with pytest.raises(ValueError, match="inner radius"):
        Cutoff.radial(f, ball, 0.3)
    with pytest.raises(ValueError, match="ta < tb"):
        Cutoff.radial(f, ball, 0.1, (0.5, 0.5))
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        Cutoff(ball, f.h, np.full(f.shape, 1.5), 1.0)
    mask = f.ball_mask(ball).astype(float)
    with pytest.raises(ValueError, match="Lipschitz"):
        Cutoff(ball, f.h, mask, 1.0)


def test_cutoff_must_vanish_outside_its_ball():
    f = _grid()
    cut = Cutoff(Ball((0.0, 0.0), 0.1), f.h, np.zeros(f.shape) + 0.5, 1.0)
    with pytest.raises(ValueError, match="vanish"):
        cut.check_against(f)
    other = SpaceTimeField(f.h / 2, (0.0, 0.0), [0.0], np.zeros((1, 4, 4)))
    with pytest.raises(ValueError, match="grid"):
        Cutoff.radial(f, Ball((0.0, 0.0), 0.3), 0.1).check_against(other)

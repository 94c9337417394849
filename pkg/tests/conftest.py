"""Shared fixtures: cached solver runs and the acceptance summary printer."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from tvlab.examples import gaussian_bumps, make_example
from tvlab.flow import SolverConfig, evolve
from tvlab.grid import sample_analytic

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

BUMP_SEED = 3
T_END = 0.125


@functools.lru_cache(maxsize=None)
def bump_run(h: float, t_end: float = T_END, seed: int = BUMP_SEED, half_width: float = 0.5):
    """Implicit-Euler run from seeded Gaussian bumps on ``[-w, w]^2`` with ``dt = h/4``."""
    cfg = SolverConfig.for_grid(h, 2)
    f0 = sample_analytic(gaussian_bumps(seed), [(-half_width, half_width)] * 2, h, [0.0])
    return evolve(f0, int(round(t_end / cfg.dt)), cfg)


@functools.lru_cache(maxsize=None)
def stationary_example(name: str, h: float, half_width: float, times: tuple[float, ...]):
    ex = make_example(name)
    return sample_analytic(ex.value, [(-half_width, half_width)] * ex.dim, h, list(times))


@pytest.fixture(scope="session")
def small_run():
    return bump_run(1 / 32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

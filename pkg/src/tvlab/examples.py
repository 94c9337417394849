"""Closed-form example fields with analytic companions.

``F``, ``u1`` and ``u2`` are the classical examples of unbounded and of
stationary minimizers; ``step`` and ``disc_solution`` are test fixtures whose
minimizing property is checked numerically before they serve as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

Array = np.ndarray

# 2 * int_0^1 s^(-1/2) sqrt(1 - s^2) ds = B(1/4, 3/2)
U2_TV_CONSTANT = float(special.beta(0.25, 1.5))


@dataclass(frozen=True)
class AnalyticExample:
    name: str
    dim: int
    value: Callable[[Array, float], Array]
    time_derivative: Optional[Callable[[Array, float], Array]] = None
    dual: Optional[Callable[[Array, float], Array]] = None
    tv_ball: Optional[Callable[[float, float], float]] = None
    verdict: str = "continuous"
    params: dict = field(default_factory=dict)

    def __call__(self, x: Array, t: float) -> Array:
        return self.value(x, t)


def _norm(x: Array) -> Array:
    return np.sqrt((x**2).sum(axis=-1))


def _make_F(dim: int = 3) -> AnalyticExample:
    if dim < 3:
        raise ValueError("F is defined for N >= 3")
    c = dim - 1

    def value(x, t):
        return (1.0 - t) * c / _norm(x)

    def u_t(x, t):
        return np.broadcast_to(-c / _norm(x), x.shape[:-1])

    def z(x, t):
        return -x / _norm(x)[..., None]

    return AnalyticExample("F", dim, value, u_t, z, None, "unbounded", {"dim": dim})


def _u1_profile(s: Array) -> Array:
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    pos = s > 0
    neg = s < 0
    with np.errstate(divide="ignore"):
        out[pos] = 1.0 / np.log(s[pos])
        out[neg] = -1.0 / np.log(-s[neg])
    return out


def _u1_tv(rho: float, t: float = 0.0) -> float:
    # |u1'| = 1/(|s| ln^2|s|); with w = -1/ln s the integrand dx/(x ln^2 x) becomes dw
    if not 0 < rho < 1:
        raise ValueError("u1 total variation needs 0 < rho < 1")
    wmax = -1.0 / math.log(rho)
    val, _ = integrate.quad(lambda w: math.sqrt(max(rho**2 - math.exp(-2.0 / w), 0.0)), 0.0, wmax, limit=200)
    return 4.0 * val


def _make_u1() -> AnalyticExample:
    def value(x, t):
        return _u1_profile(x[..., 0])

    def u_t(x, t):
        return np.zeros(x.shape[:-1])

    return AnalyticExample("u1", 2, value, u_t, None, _u1_tv, "continuous")


def _make_u2() -> AnalyticExample:
    def value(x, t):
        s = x[..., 0]
        return np.sign(s) * np.sqrt(np.abs(s))

    def u_t(x, t):
        return np.zeros(x.shape[:-1])

    def tv(rho, t=0.0):
        return U2_TV_CONSTANT * rho**1.5

    return AnalyticExample("u2", 2, value, u_t, None, tv, "continuous")


def _make_step() -> AnalyticExample:
    def value(x, t):
        return 0.5 * np.sign(x[..., 0])

    def u_t(x, t):
        return np.zeros(x.shape[:-1])

    def tv(rho, t=0.0):
        return 2.0 * rho

    return AnalyticExample("step", 2, value, u_t, None, tv, "discontinuous")


def _make_disc(radius: float = 0.5, height: float = 1.0, dim: int = 2) -> AnalyticExample:
    rate = dim / radius

    def level(t):
        return max(height - rate * t, 0.0)

    def value(x, t):
        return np.where(_norm(x) <= radius, level(t), 0.0)

    def u_t(x, t):
        inside = _norm(x) <= radius
        return np.where(inside & (level(t) > 0), -rate, 0.0)

    def tv(rho, t=0.0):
        if dim != 2:
            raise ValueError("closed-form disc TV is implemented for N = 2")
        if rho < radius:
            return 0.0
        return 2.0 * math.pi * radius * level(t)

    params = {"radius": radius, "height": height, "dim": dim, "extinction_time": height / rate}
    return AnalyticExample("disc_solution", dim, value, u_t, None, tv, "continuous", params)


_FACTORIES = {
    "F": _make_F,
    "u1": _make_u1,
    "u2": _make_u2,
    "step": _make_step,
    "disc_solution": _make_disc,
}

NAMES = tuple(_FACTORIES)


def make_example(name: str, **params) -> AnalyticExample:
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(NAMES)}") from None
    return factory(**params)


def analytic_tv(example: AnalyticExample, rho: float, t: float = 0.0) -> Optional[float]:
    """``||Du(., t)||(B_rho(0))`` in closed form, or ``None`` when not provided."""
    if example.tv_ball is None:
        return None
    return example.tv_ball(rho, t)


def gaussian_bumps(
    seed: int,
    count: int = 6,
    amplitude: float = 4.0,
    spread: float = 0.3,
    widths: tuple[float, float] = (0.15, 0.35),
    dim: int = 2,
) -> Callable[[Array, float], Array]:
    """Seeded sum of Gaussians, ``sum a_j exp(-|x - c_j|^2 / w_j^2)``, as smooth initial data.

    Centers are uniform in ``[-spread, spread]^N`` and amplitudes uniform in
    ``[-amplitude, amplitude]``; the function ignores ``t``.
    """
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-spread, spread, size=(count, dim))
    ws = rng.uniform(*widths, size=count)
    amps = rng.uniform(-amplitude, amplitude, size=count)

    def value(x, t):
        out = np.zeros(x.shape[:-1])
        for c, w, a in zip(centers, ws, amps):
            out += a * np.exp(-((x - c) ** 2).sum(axis=-1) / w**2)
        return out

    return value

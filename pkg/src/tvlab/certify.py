"""Certifiers for the minimizer inequality, the DeGiorgi energy inequality and the
1-Laplacian truncation inequality.

All three return signed slacks (``>= -tol`` means the sampled instance passes).
Randomized suites draw each instance from its own spawned seed sequence, so the
results do not depend on execution order or thread count.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .cutoff import Cutoff
from .grid import Ball, Cylinder, DualField, SpaceTimeField, ess_osc
from .ops import forward_grad, grad_norm
from .tvmeasure import _window_indices, trapezoid, tv_of_values

__all__ = [
    "Cutoff",
    "TruncationSpec",
    "EnergyBudget",
    "Bump",
    "Smoothing",
    "minimizer_gap",
    "perturbation_corpus",
    "minimizer_suite",
    "calibrate_tolerance",
    "consistency_tolerance",
    "dg_energy_report",
    "random_energy_draw",
    "energy_suite",
    "fitted_gamma",
    "one_laplacian_certificate",
    "onelap_suite",
    "suite_report",
    "worker_count",
]


def worker_count() -> int:
    """Thread cap from ``TVLAB_THREADS`` (default: CPU count)."""
    raw = os.environ.get("TVLAB_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"TVLAB_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"TVLAB_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def _run_draws(fn: Callable[[int, np.random.Generator], object], n: int, seed: int) -> list:
    seqs = np.random.SeedSequence(seed).spawn(n)
    rngs = [np.random.default_rng(s) for s in seqs]
    workers = min(worker_count(), max(n, 1))
    if workers == 1:
        return [fn(i, r) for i, r in enumerate(rngs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n), rngs))


# ---------------------------------------------------------------------------
# truncations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationSpec:
    """Level ``k``, sign ``plus``/``minus`` and offset ``l`` (used by the 1-Laplacian test)."""

    level: float
    sign: str = "plus"
    offset: float = 0.0

    def __post_init__(self):
        if self.sign not in ("plus", "minus"):
            raise ValueError(f"sign must be 'plus' or 'minus', got {self.sign!r}")
        if not (math.isfinite(self.level) and math.isfinite(self.offset)):
            raise ValueError("truncation level and offset must be finite")

    def part(self, u: np.ndarray) -> np.ndarray:
        """``(u - k)_+`` or ``(u - k)_-``, both non-negative."""
        if self.sign == "plus":
            return np.maximum(u - self.level, 0.0)
        return np.maximum(self.level - u, 0.0)

    def p(self, s: np.ndarray) -> np.ndarray:
        """``p_+(s) = (s - k)_+`` or ``p_-(s) = -(s - k)_-``; non-decreasing in ``s``."""
        if self.sign == "plus":
            return np.maximum(s - self.level, 0.0)
        return -np.maximum(self.level - s, 0.0)

    def P(self, s: np.ndarray) -> np.ndarray:
        """``int_0^s p``."""
        k = self.level
        if self.sign == "plus":
            return 0.5 * (np.maximum(s - k, 0.0) ** 2 - max(-k, 0.0) ** 2)
        return 0.5 * (np.maximum(k - s, 0.0) ** 2 - max(k, 0.0) ** 2)


# ---------------------------------------------------------------------------
# minimizer inequality
# ---------------------------------------------------------------------------


def _c2_bump(r2: np.ndarray) -> np.ndarray:
    return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)


def _time_profile(t: float, lo: float, hi: float) -> float:
    if not lo < t < hi:
        return 0.0
    return math.sin(math.pi * (t - lo) / (hi - lo)) ** 2


@dataclass(frozen=True)
class Bump:
    """``a (1 - |x - c|^2/w^2)_+^3 * sin^2(pi (t - t_lo)/(t_hi - t_lo))`` (C^2 in space)."""

    center: tuple[float, ...]
    width: float
    amplitude: float
    t_lo: float
    t_hi: float

    def values(self, field_: SpaceTimeField) -> np.ndarray:
        x = field_.coords()
        r2 = ((x - np.asarray(self.center)) ** 2).sum(axis=-1) / self.width**2
        prof = _c2_bump(r2)
        return np.stack([self.amplitude * _time_profile(float(t), self.t_lo, self.t_hi) * prof for t in field_.times])

    def describe(self) -> dict:
        return {"kind": "bump", **asdict(self)}


@dataclass(frozen=True)
class Smoothing:
    """Local averaging candidate ``chi (G_s * u - u)`` with a C^2 window ``chi``."""

    center: tuple[float, ...]
    width: float
    sigma_cells: float
    strength: float
    t_lo: float
    t_hi: float

    def values(self, field_: SpaceTimeField) -> np.ndarray:
        x = field_.coords()
        r2 = ((x - np.asarray(self.center)) ** 2).sum(axis=-1) / self.width**2
        chi = _c2_bump(r2)
        out = np.empty(field_.data.shape)
        for m, t in enumerate(field_.times):
            u = field_.data[m]
            smooth = ndimage.gaussian_filter(u, self.sigma_cells, mode="nearest")
            out[m] = self.strength * _time_profile(float(t), self.t_lo, self.t_hi) * chi * (smooth - u)
        return out

    def describe(self) -> dict:
        return {"kind": "smoothing", **asdict(self)}


def _check_support(phi: np.ndarray, field_: SpaceTimeField, ball: Ball, window) -> None:
    inner = Ball(ball.center, ball.radius - 2 * field_.h) if ball.radius > 2 * field_.h else None
    inside = field_.ball_mask(inner) if inner is not None else np.zeros(field_.shape, dtype=bool)
    if np.any(phi[:, ~inside] != 0):
        raise ValueError("perturbation is not supported 2h inside the ball")
    lo, hi = window
    open_t = np.zeros(field_.times.size, dtype=bool)
    open_t[field_.time_indices(lo, hi)] = True
    last = field_.time_indices(hi, math.inf, closed_left=True)
    open_t[last] = False
    if np.any(phi[~open_t] != 0):
        raise ValueError("perturbation is not supported inside the open time window")


def minimizer_gap(
    field_: SpaceTimeField,
    u_t: np.ndarray,
    phi: np.ndarray,
    window: tuple[float, float],
    ball: Ball,
) -> float:
    """``int [ ||D(u + phi)||(B) - ||Du||(B) - int_B u_t phi ] dt`` by trapezoid over stamps in ``window``.

    ``u_t`` and ``phi`` have the field's data shape.  ``phi`` must vanish outside
    the ball shrunk by ``2h`` and at or beyond the window's endpoints.
    """
    u_t = np.asarray(u_t, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if u_t.shape != field_.data.shape or phi.shape != field_.data.shape:
        raise ValueError("u_t and phi must have the field's data shape")
    _check_support(phi, field_, ball, window)
    ms = field_.time_indices(window[0], window[1], closed_left=True)
    if ms.size == 0:
        raise ValueError(f"no time stamps in window {window}")
    mask = field_.ball_mask(ball)
    vals = []
    for m in ms:
        if not np.any(phi[m]):
            vals.append(0.0)
            continue
        u = field_.data[m]
        d_tv = tv_of_values(u + phi[m], field_, ball) - tv_of_values(u, field_, ball)
        vals.append(d_tv - field_.cell_volume * float((u_t[m] * phi[m])[mask].sum()))
    return trapezoid(vals, field_.times[ms])


def backward_time_derivative(field_: SpaceTimeField) -> np.ndarray:
    """``(u_m - u_{m-1}) / (t_m - t_{m-1})``; slice 0 copies slice 1."""
    d = field_.data
    if field_.times.size < 2:
        return np.zeros_like(d)
    out = np.empty_like(d)
    dt = np.diff(field_.times).reshape((-1,) + (1,) * field_.dim)
    out[1:] = (d[1:] - d[:-1]) / dt
    out[0] = out[1]
    return out


def perturbation_corpus(
    field_: SpaceTimeField,
    ball: Ball,
    window: tuple[float, float],
    n: int,
    seed: int,
    structured: int = 3,
) -> list:
    """``n`` perturbations: ``n - structured`` random bumps plus local-averaging candidates.

    Bump widths lie in ``[4h, rho/2]``; amplitudes are signed with magnitude in
    ``[0.05, 1]`` times the field's oscillation on the ball (1 for constants).
    """
    if n < 1:
        raise ValueError("corpus size must be >= 1")
    structured = min(structured, n)
    h = field_.h
    rho = ball.radius
    if rho <= 8 * h:
        raise ValueError("ball too small for the perturbation corpus (rho <= 8h)")
    mask = field_.ball_mask(ball)
    osc = float(np.ptp(field_.data[:, mask])) or 1.0
    lo, hi = window

    def draw(i: int, rng: np.random.Generator):
        if i < n - structured:
            width = rng.uniform(4 * h, rho / 2)
            reach = rho - 2 * h - width
            while True:
                c = rng.uniform(-reach, reach, size=field_.dim)
                if np.sqrt((c**2).sum()) <= reach:
                    break
            amp = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0) * osc
            return Bump(tuple(float(v) for v in np.asarray(ball.center) + c), float(width), float(amp), lo, hi)
        j = i - (n - structured)
        width = (rho - 2 * h) * (1.0 - 0.25 * ((j // 3) % 2))
        return Smoothing(ball.center, float(width), float(4 * 2 ** (j % 3)), 1.0, lo, hi)

    return _run_draws(draw, n, seed)


def consistency_tolerance(c: float, h: float, dt: float) -> float:
    return c * (h + dt)


@dataclass
class SuiteResult:
    slacks: list
    tol: float
    details: list = field(default_factory=list)

    @property
    def min_slack(self) -> float:
        return float(min(self.slacks)) if self.slacks else 0.0

    @property
    def violations(self) -> int:
        return int(sum(1 for s in self.slacks if s < -self.tol))

    @property
    def passed(self) -> bool:
        return self.violations == 0


def minimizer_suite(
    field_: SpaceTimeField,
    u_t: np.ndarray,
    ball: Ball,
    window: tuple[float, float],
    n: int,
    seed: int,
    tol: float,
    structured: int = 3,
) -> SuiteResult:
    corpus = perturbation_corpus(field_, ball, window, n, seed, structured)

    def run(i, _rng):
        return minimizer_gap(field_, u_t, corpus[i].values(field_), window, ball)

    gaps = _run_draws(run, len(corpus), seed)
    return SuiteResult(gaps, tol, [p.describe() for p in corpus])


def calibrate_tolerance(h: float, dt: float, n: int = 20, seed: int = 0, safety: float = 2.0, floor: float = 0.05) -> float:
    """Constant ``C`` in ``tol = C (h + dt)`` from the disc solution's worst random-bump gap.

    Only random bumps enter: smoothing candidates lower the discrete TV of the
    digitized edge itself and would mask genuine violations.  The disc of
    radius 1/4 and height 1 is sampled on ``[-1/2, 1/2]^2`` at the
    given ``h`` over the window ``[0, 1/16]`` with its closed-form ``u_t``.
    """
    from .examples import make_example
    from .grid import sample_analytic

    ex = make_example("disc_solution", radius=0.25, height=1.0)
    steps = max(2, int(round(0.0625 / dt)))
    times = np.linspace(0.0, 0.0625, steps + 1)
    fld = sample_analytic(ex.value, [(-0.5, 0.5)] * 2, h, times)
    u_t = np.stack([ex.time_derivative(fld.coords(), float(t)) for t in times])
    ball = Ball((0.0, 0.0), 0.4)
    res = minimizer_suite(fld, u_t, ball, (0.0, 0.0625), n, seed, tol=0.0, structured=0)
    worst = max(0.0, -res.min_slack)
    return max(floor, safety * worst / (h + dt))


# ---------------------------------------------------------------------------
# DeGiorgi energy inequality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBudget:
    lhs_sup_term: float
    lhs_tv_term: float
    rhs_gradient_term: float
    rhs_time_term: float
    rhs_initial_term: float
    gamma: float

    @property
    def lhs(self) -> float:
        return self.lhs_sup_term + self.lhs_tv_term

    @property
    def rhs(self) -> float:
        return self.rhs_gradient_term + self.rhs_time_term + self.rhs_initial_term

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def gamma_needed(self) -> float:
        """Smallest ``gamma`` making the slack non-negative for this instance."""
        excess = self.lhs - self.rhs_initial_term
        if excess <= 0:
            return 0.0
        base = (self.rhs_gradient_term + self.rhs_time_term) / self.gamma
        return math.inf if base == 0 else excess / base

    def as_dict(self) -> dict:
        return {
            "lhs_sup_term": self.lhs_sup_term,
            "lhs_tv_term": self.lhs_tv_term,
            "rhs_gradient_term": self.rhs_gradient_term,
            "rhs_time_term": self.rhs_time_term,
            "rhs_initial_term": self.rhs_initial_term,
            "gamma": self.gamma,
            "slack": self.slack,
            "gamma_needed": self.gamma_needed,
        }


def _ramp_integral(values, z2) -> float:
    """``int v zeta_2' dt`` with ``v`` linear in time between stamps and exact ramp increments."""
    v = np.asarray(values, dtype=np.float64)
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.abs(np.diff(z2))))


def dg_energy_report(
    field_: SpaceTimeField,
    cyl: Cylinder,
    trunc: TruncationSpec,
    cutoff: Cutoff,
    gamma: float = 2.0,
) -> EnergyBudget:
    """Evaluate the five terms of the truncated energy inequality on ``cyl``.

    Time integrals use the trapezoid rule over the stamps of the closed window;
    the ``zeta_t`` term integrates the ramp exactly between stamps.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if cyl.forward:
        raise ValueError("energy inequality uses a backward cylinder")
    if cutoff.ball.radius > cyl.radius * (1 + 1e-12) or np.hypot.reduce(
        np.subtract(cutoff.ball.center, cyl.center)
    ) > 1e-12 * max(1.0, cyl.radius):
        raise ValueError("cutoff must be supported in the cylinder's ball")
    ms = _window_indices(field_, cyl)
    cutoff.check_against(field_)
    sl, mask = field_.ball_window(cyl.ball, margin=1)
    h, vol = field_.h, field_.cell_volume
    z1 = cutoff.spatial[sl]
    dz1 = grad_norm(cutoff.spatial, h)[sl]
    t = field_.times[ms]
    z2 = cutoff.temporal(t)
    sup_vals, tv_vals, grad_vals, time_vals = [], [], [], []
    for m, s in zip(ms, z2):
        w = trunc.part(field_.data[m][sl])
        wz = w * z1 * s
        sup_vals.append(vol * float((w**2 * z1 * s)[mask].sum()))
        tv_vals.append(vol * float(np.sqrt((forward_grad(wz, h) ** 2).sum(axis=0))[mask].sum()))
        grad_vals.append(vol * float((w * dz1 * s)[mask].sum()))
        time_vals.append(vol * float((w**2 * z1)[mask].sum()))
    return EnergyBudget(
        lhs_sup_term=max(sup_vals),
        lhs_tv_term=trapezoid(tv_vals, t),
        rhs_gradient_term=gamma * trapezoid(grad_vals, t),
        rhs_time_term=gamma * _ramp_integral(time_vals, z2),
        rhs_initial_term=sup_vals[0],
        gamma=gamma,
    )


@dataclass(frozen=True)
class EnergyDraw:
    cylinder: Cylinder
    trunc: TruncationSpec
    inner_fraction: float
    ramp: tuple[float, float] | None

    def describe(self) -> dict:
        c = self.cylinder
        return {
            "center": list(c.center),
            "t0": c.t0,
            "radius": c.radius,
            "theta": c.theta,
            "level": self.trunc.level,
            "sign": self.trunc.sign,
            "inner_fraction": self.inner_fraction,
            "ramp": None if self.ramp is None else list(self.ramp),
        }


def _random_center(field_: SpaceTimeField, radius: float, rng: np.random.Generator, margin_cells: int) -> tuple:
    h = field_.h
    lo = [field_.origin[k] + (margin_cells + 1) * h + radius for k in range(field_.dim)]
    hi = [field_.origin[k] + (field_.shape[k] - 2 - margin_cells) * h - radius for k in range(field_.dim)]
    if any(a > b for a, b in zip(lo, hi)):
        raise ValueError(f"radius {radius} does not fit inside the grid with a {margin_cells}-cell margin")
    return tuple(float(rng.uniform(a, b)) for a, b in zip(lo, hi))


def random_energy_draw(
    field_: SpaceTimeField,
    rng: np.random.Generator,
    radius_range: tuple[float, float],
    margin_cells: int = 4,
    min_slices: int = 3,
) -> EnergyDraw:
    """Random interior cylinder whose window endpoints are stamps, with random ``k``, sign and cutoff."""
    if field_.times.size < min_slices:
        raise ValueError(f"field needs at least {min_slices} time slices")
    radius = float(rng.uniform(*radius_range))
    center = _random_center(field_, radius, rng, margin_cells)
    nt = field_.times.size
    m1 = int(rng.integers(min_slices - 1, nt))
    m0 = int(rng.integers(0, m1 - min_slices + 2))
    t0, ta = float(field_.times[m1]), float(field_.times[m0])
    cyl = Cylinder(center, t0, radius, (t0 - ta) / radius)
    osc = ess_osc(field_, Cylinder(center, t0, radius, (t0 - ta) / radius * (1 + 1e-9)))
    level = float(rng.uniform(osc.mu_minus, osc.mu_plus)) if osc.omega > 0 else osc.mu_minus
    sign = "plus" if rng.random() < 0.5 else "minus"
    inner = float(rng.uniform(0.0, 0.8))
    ramp = None
    if rng.random() < 0.5:
        tb = float(rng.uniform(ta + 0.25 * (t0 - ta), t0))
        ramp = (ta, tb)
    return EnergyDraw(cyl, TruncationSpec(level, sign), inner, ramp)


def energy_suite(
    field_: SpaceTimeField,
    n: int,
    seed: int,
    gamma: float = 2.0,
    tol: float = 0.0,
    radius_range: tuple[float, float] | None = None,
) -> SuiteResult:
    """``n`` seeded random draws of :func:`dg_energy_report`; ``details`` holds geometry and budgets."""
    if radius_range is None:
        span = min(field_.h * (s - 1) for s in field_.shape)
        radius_range = (8 * field_.h, max(8 * field_.h, 0.25 * span))

    def run(i, rng):
        d = random_energy_draw(field_, rng, radius_range)
        cut = Cutoff.radial(field_, d.cylinder.ball, d.inner_fraction * d.cylinder.radius, d.ramp)
        b = dg_energy_report(field_, d.cylinder, d.trunc, cut, gamma)
        return b, d

    out = _run_draws(run, n, seed)
    slacks = [b.slack for b, _ in out]
    details = [{**d.describe(), **b.as_dict()} for b, d in out]
    return SuiteResult(slacks, tol, details)


def fitted_gamma(result: SuiteResult, tol: float | None = None) -> float:
    """Smallest ``gamma`` for which every draw has ``slack >= -tol`` (``tol`` defaults to the suite's)."""
    tol = result.tol if tol is None else tol
    best = 0.0
    for d in result.details:
        excess = d["lhs_sup_term"] + d["lhs_tv_term"] - d["rhs_initial_term"] - tol
        if excess <= 0:
            continue
        base = (d["rhs_gradient_term"] + d["rhs_time_term"]) / d["gamma"]
        best = max(best, math.inf if base == 0 else excess / base)
    return best


# ---------------------------------------------------------------------------
# 1-Laplacian truncation inequality
# ---------------------------------------------------------------------------


def one_laplacian_certificate(
    field_: SpaceTimeField,
    z: DualField,
    trunc: TruncationSpec,
    cutoff: Cutoff,
    interval: tuple[float, float],
) -> float:
    """RHS minus LHS of the truncation inequality on ``[t1, t2]`` (both stamps).

    LHS: ``int P zeta(t2) + int int zeta d||D p||``.
    RHS: ``int P zeta(t1) + int int P zeta_t - int int (z . D zeta) p``.
    Time sums are implicit-Euler (right endpoint) except the ``zeta_t`` term,
    which pairs ``P(u_{m-1})`` with the increment of ``zeta_2``; the cross term
    uses the forward neighbour's ``p`` per component (discrete product rule).
    """
    if not z.matches(field_):
        raise ValueError("field and dual field do not share grid and time metadata")
    if z.sup_norm > 1 + 1e-6:
        raise ValueError(f"dual field is not admissible: sup |z| = {z.sup_norm:.9g} > 1 + 1e-6")
    t1, t2 = interval
    if not t2 > t1:
        raise ValueError("interval must satisfy t1 < t2")
    i1, i2 = field_.time_index(t1), field_.time_index(t2)
    cutoff.check_against(field_)
    h, vol, n = field_.h, field_.cell_volume, field_.dim
    l = trunc.offset
    z1 = cutoff.spatial
    dz1 = forward_grad(z1, h)
    z2 = cutoff.temporal(field_.times)

    def energy(m):
        return vol * float((trunc.P(field_.data[m] - l) * z1).sum()) * z2[m]

    lhs = energy(i2)
    rhs = energy(i1)
    for m in range(i1 + 1, i2 + 1):
        dt = field_.times[m] - field_.times[m - 1]
        p = trunc.p(field_.data[m] - l)
        gp = np.sqrt((forward_grad(p, h) ** 2).sum(axis=0))
        lhs += dt * vol * float((z1 * gp).sum()) * z2[m]
        rhs += vol * float((trunc.P(field_.data[m - 1] - l) * z1).sum()) * (z2[m] - z2[m - 1])
        cross = 0.0
        for k in range(n):
            p_next = np.roll(p, -1, axis=k)
            cross += float((z.data[m][..., k] * dz1[k] * p_next).sum())
        rhs -= dt * vol * cross * z2[m]
    return float(rhs - lhs)


@dataclass(frozen=True)
class OnelapDraw:
    ball: Ball
    interval: tuple[float, float]
    trunc: TruncationSpec
    inner_fraction: float
    ramp: tuple[float, float] | None

    def describe(self) -> dict:
        return {
            "center": list(self.ball.center),
            "radius": self.ball.radius,
            "interval": list(self.interval),
            "level": self.trunc.level,
            "sign": self.trunc.sign,
            "offset": self.trunc.offset,
            "inner_fraction": self.inner_fraction,
            "ramp": None if self.ramp is None else list(self.ramp),
        }


def onelap_suite(
    field_: SpaceTimeField,
    z: DualField,
    n: int,
    seed: int,
    tol: float = 0.0,
    radius_range: tuple[float, float] | None = None,
) -> SuiteResult:
    """``n`` seeded random (ball, interval, truncation, cutoff) draws of the 1-Laplacian certificate."""
    if radius_range is None:
        span = min(field_.h * (s - 1) for s in field_.shape)
        radius_range = (8 * field_.h, max(8 * field_.h, 0.25 * span))
    nt = field_.times.size
    if nt < 2:
        raise ValueError("field needs at least two time slices")

    def run(i, rng):
        radius = float(rng.uniform(*radius_range))
        center = _random_center(field_, radius, rng, 4)
        ball = Ball(center, radius)
        m1 = int(rng.integers(0, nt - 1))
        m2 = int(rng.integers(m1 + 1, nt))
        t1, t2 = float(field_.times[m1]), float(field_.times[m2])
        vals = field_.data[m1 : m2 + 1][:, field_.ball_mask(ball)]
        level = float(rng.uniform(vals.min(), vals.max())) if np.ptp(vals) > 0 else float(vals.min())
        trunc = TruncationSpec(level, "plus" if rng.random() < 0.5 else "minus")
        inner = float(rng.uniform(0.0, 0.8))
        ramp = (t1, float(rng.uniform(t1 + 0.25 * (t2 - t1), t2))) if rng.random() < 0.5 else None
        cut = Cutoff.radial(field_, ball, inner * radius, ramp)
        draw = OnelapDraw(ball, (t1, t2), trunc, inner, ramp)
        return one_laplacian_certificate(field_, z, trunc, cut, (t1, t2)), draw

    out = _run_draws(run, n, seed)
    return SuiteResult([s for s, _ in out], tol, [{**d.describe(), "slack": s} for s, d in out])


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def suite_report(kind: str, result: SuiteResult, inputs: dict, extra: dict | None = None) -> dict:
    """JSON-ready report: inputs (file hashes, seed), per-draw slacks, min slack and verdict."""
    return {
        "kind": kind,
        "inputs": inputs,
        "tolerance": result.tol,
        "draws": len(result.slacks),
        "slacks": [float(s) for s in result.slacks],
        "details": result.details,
        "min_slack": result.min_slack,
        "violations": result.violations,
        "verdict": "pass" if result.passed else "fail",
        **(extra or {}),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True)

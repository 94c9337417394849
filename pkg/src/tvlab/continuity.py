"""Continuity diagnostics: the scaled space-time TV indicator, the necessary-direction
estimate, DeGiorgi and expansion-of-positivity constants and checks, the
oscillation cascade and the sup-bound shape.

Constants come in two modes.  ``paper`` uses the closed-form constants, whose
cylinders are far below any feasible grid scale at desk resolution; ``empirical``
takes a configurable ``xi`` so that the geometry is exercised at observable scales.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cutoff import Cutoff
from .grid import Ball, Cylinder, OscillationData, SpaceTimeField, ball_volume, ess_osc
from .ops import forward_grad
from .tvmeasure import (
    _window_indices,
    discrete_ball_measure,
    level_set_measure,
    trapezoid,
    tv_time_integral,
)

# ---------------------------------------------------------------------------
# indicator
# ---------------------------------------------------------------------------


@dataclass
class IndicatorCurve:
    """``I(rho) = rho / |Q_rho| * int_{t0-rho}^{t0} ||Du(t)||(B_rho(x0)) dt`` on a radius ladder."""

    point: tuple[float, ...]
    rhos: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    fit_range: tuple[float, float]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "indicator", "log_rho", "log_indicator"])
        for r, v in zip(self.rhos, self.values):
            lv = math.log(v) if v > 0 else float("-inf")
            w.writerow([repr(float(r)), repr(float(v)), repr(math.log(r)), repr(lv)])
        return buf.getvalue()

    def is_decreasing(self) -> bool:
        """True if ``I`` strictly decreases as ``rho`` decreases along the ladder."""
        return bool(np.all(np.diff(self.values) < 0))


def rho_ladder(rho0: float, h: float, floor_cells: float = 8.0) -> list[float]:
    """``rho0 * 2^-j`` for ``j = 0, 1, ...`` while ``rho >= floor_cells * h``."""
    out = []
    r = rho0
    while r >= floor_cells * h * (1 - 1e-12):
        out.append(r)
        r /= 2
    if not out:
        raise ValueError(f"rho0={rho0} is below the grid floor {floor_cells}h")
    return out


def _split_point(field_: SpaceTimeField, point: Sequence[float]) -> tuple[tuple[float, ...], float]:
    if len(point) != field_.dim + 1:
        raise ValueError(f"point must have {field_.dim} space coordinates plus time")
    return tuple(float(c) for c in point[:-1]), float(point[-1])


def loglog_fit(rhos, values, fit_range=None) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log I`` on ``log rho``; zero values excluded."""
    r = np.asarray(rhos, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    sel = v > 0
    if fit_range is not None:
        lo, hi = fit_range
        sel &= (r >= lo * (1 - 1e-12)) & (r <= hi * (1 + 1e-12))
    if sel.sum() < 2:
        return math.nan, math.nan
    slope, intercept = np.polyfit(np.log(r[sel]), np.log(v[sel]), 1)
    return float(slope), float(intercept)


def indicator(
    field_: SpaceTimeField,
    point: Sequence[float],
    rho_list: Sequence[float],
    fit_range: tuple[float, float] | None = None,
) -> IndicatorCurve:
    """Indicator on ``rho_list`` (strictly decreasing) with ``|Q_rho| = |B_rho| rho``."""
    rhos = np.asarray(rho_list, dtype=np.float64)
    if rhos.size == 0 or np.any(np.diff(rhos) >= 0) or np.any(rhos <= 0):
        raise ValueError("rho list must be positive and strictly decreasing")
    x0, t0 = _split_point(field_, point)
    vals = []
    for rho in rhos:
        cyl = Cylinder(x0, t0, float(rho), 1.0)
        integral = tv_time_integral(field_, cyl)
        vals.append(rho * integral / (ball_volume(rho, field_.dim) * rho))
    vals = np.asarray(vals)
    if fit_range is None:
        fit_range = (float(rhos.min()), float(rhos.max()))
    slope, intercept = loglog_fit(rhos, vals, fit_range)
    return IndicatorCurve((*x0, t0), rhos, vals, slope, intercept, fit_range)


# ---------------------------------------------------------------------------
# necessary-direction estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NecessaryBound:
    lhs: float
    rhs: float
    shift: float
    note: str = "rhs integrand read as |u| + u^2 after normalizing u to 0 at the point"

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    def as_dict(self) -> dict:
        return {**asdict(self), "holds": self.holds}


def nearest_sample(field_: SpaceTimeField, point: Sequence[float]) -> float:
    x0, t0 = _split_point(field_, point)
    idx = tuple(
        int(np.clip(round((x0[k] - field_.origin[k]) / field_.h), 0, field_.shape[k] - 1)) for k in range(field_.dim)
    )
    m = int(np.argmin(np.abs(field_.times - t0)))
    return float(field_.data[(m, *idx)])


def necessary_bound_check(
    field_: SpaceTimeField,
    point: Sequence[float],
    rho: float,
    gamma: float = 2.0,
) -> NecessaryBound:
    """Both sides of the scaled-TV estimate on ``Q_{2 rho}`` for ``u`` shifted to vanish at the point.

    The cutoff is 1 on ``Q_{3 rho/2}`` with linear ramps to 0 at ``|x - x0| = 2 rho``
    and at ``t = t0 - 2 rho``.
    """
    x0, t0 = _split_point(field_, point)
    shift = nearest_sample(field_, point)
    u = field_.with_data(field_.data - shift)
    cyl = Cylinder(x0, t0, 2 * rho, 1.0)
    ms = _window_indices(u, cyl)
    ball = cyl.ball
    cut = Cutoff.radial(u, ball, 1.5 * rho, (t0 - 2 * rho, t0 - 1.5 * rho))
    sl, mask = u.ball_window(ball, margin=1)
    h, vol, n = u.h, u.cell_volume, u.dim
    z1 = cut.spatial[sl]
    t = u.times[ms]
    z2 = cut.temporal(t)
    tvs, means = [], []
    bmeas = float(mask.sum()) * vol
    for m, s in zip(ms, z2):
        w = u.data[m][sl]
        tvs.append(vol * float(np.sqrt((forward_grad(w * z1 * s, h) ** 2).sum(axis=0))[mask].sum()))
        means.append(vol * float((np.abs(w) + w**2)[mask].sum()) / bmeas)
    q_rho = ball_volume(rho, n) * rho
    lhs = rho / q_rho * trapezoid(tvs, t)
    rhs = 2 ** (n + 1) * gamma * trapezoid(means, t) / (t[-1] - t[0])
    return NecessaryBound(float(lhs), float(rhs), shift)


# ---------------------------------------------------------------------------
# DeGiorgi constants and the Y_n recursion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeGiorgiConstants:
    """``b = 2^((3N+4)/N)``, ``nu = gamma^-N b^-(N^2)``, ``alpha = 1/N``."""

    N: int
    gamma: float
    sign: str = "minus"

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise ValueError("N must be 1, 2 or 3")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.sign not in ("plus", "minus"):
            raise ValueError("sign must be 'plus' or 'minus'")

    @property
    def log2_b(self) -> Fraction:
        return Fraction(3 * self.N + 4, self.N)

    @property
    def b(self) -> float:
        return 2.0 ** float(self.log2_b)

    @property
    def nu(self) -> float:
        # gamma^-N * 2^(-(3N+4) N), exact for power-of-two gamma
        return self.gamma ** (-self.N) * 2.0 ** (-(3 * self.N + 4) * self.N)

    @property
    def alpha(self) -> float:
        return 1.0 / self.N

    def as_dict(self) -> dict:
        return {"N": self.N, "gamma": self.gamma, "sign": self.sign, "b": self.b, "nu": self.nu, "alpha": self.alpha}


def degiorgi_nu(N: int, gamma: float, sign: str = "minus") -> DeGiorgiConstants:
    """Critical-mass constants; ``nu_+ = nu_-``, the sign is kept for reporting."""
    return DeGiorgiConstants(N, float(gamma), sign)


@dataclass
class YnResult:
    sequence: list
    verdict: str
    step: int | None = None

    def ratios(self) -> list:
        s = self.sequence
        return [s[i + 1] / s[i] if s[i] != 0 else math.nan for i in range(len(s) - 1)]


def iterate_Yn(
    Y0: float,
    constants: DeGiorgiConstants,
    steps: int,
    lower: float = 1e-12,
    upper: float = 1e6,
) -> YnResult:
    """``Y_{n+1} = gamma b^n Y_n^(1 + 1/N)``; stops at ``Y < lower`` (converged) or ``Y > upper`` (diverged).

    The exact critical orbit ``Y_n = nu b^(-nN)`` satisfies the recursion with equality.
    """
    if not Y0 >= 0:
        raise ValueError("Y0 must be non-negative")
    g, b, q = constants.gamma, constants.b, 1.0 + 1.0 / constants.N
    seq = [float(Y0)]
    if Y0 == 0:
        return YnResult([0.0] * (steps + 1), "converged", 0)
    y = float(Y0)
    for n in range(steps):
        try:
            y = g * b**n * y**q
        except OverflowError:
            return YnResult(seq, "diverged", n + 1)
        if not math.isfinite(y):
            return YnResult(seq, "diverged", n + 1)
        seq.append(y)
        if y > upper:
            return YnResult(seq, "diverged", n + 1)
    verdict = "converged" if seq[-1] < lower else "undecided"
    return YnResult(seq, verdict, None)


def critical_sequence(constants: DeGiorgiConstants, steps: int) -> list:
    """``nu b^(-nN)`` for ``n = 0..steps``."""
    return [constants.nu * constants.b ** (-n * constants.N) for n in range(steps + 1)]


# ---------------------------------------------------------------------------
# expansion of positivity and cascade constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionConstants:
    N: int
    gamma: float
    sigma: float
    epsilon: float
    delta: float

    def relaxed(self, factor: float) -> "ExpansionConstants":
        """Same constants with ``delta`` multiplied by ``factor`` (sensitivity runs)."""
        return ExpansionConstants(self.N, self.gamma, self.sigma, self.epsilon, self.delta * factor)


def expansion_constants(N: int, gamma: float) -> ExpansionConstants:
    """``sigma = 1/(16N)``, ``epsilon = 1/32``, ``delta = 1/(2^8 gamma N)``."""
    if N not in (1, 2, 3) or not gamma > 0:
        raise ValueError("need N in {1, 2, 3} and gamma > 0")
    return ExpansionConstants(N, float(gamma), 1.0 / (16 * N), 1.0 / 32, 1.0 / (2**8 * gamma * N))


@dataclass(frozen=True)
class CascadeParameters:
    xi: float
    eta: float
    mode: str


def cascade_parameters(N: int = 2, gamma: float = 2.0, mode: str = "paper", xi: float = 0.125) -> CascadeParameters:
    """``paper``: ``2 xi = delta/64``; ``empirical``: the given ``xi``.  Always ``eta = 1 - xi/2``."""
    if mode == "paper":
        x = expansion_constants(N, gamma).delta / 128
    elif mode == "empirical":
        if not 0 < xi <= 0.5:
            raise ValueError("empirical xi must lie in (0, 1/2]")
        x = float(xi)
    else:
        raise ValueError(f"mode must be 'paper' or 'empirical', got {mode!r}")
    return CascadeParameters(x, 1.0 - x / 2, mode)


# ---------------------------------------------------------------------------
# DeGiorgi lemma check
# ---------------------------------------------------------------------------


@dataclass
class LemmaVerdict:
    applicable: bool
    holds: bool | None
    density: float | None
    nu: float
    violations: int = 0
    worst: float | None = None
    reason: str = ""
    geometry: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "not-applicable"
        return "pass" if self.holds else "fail"

    def as_dict(self) -> dict:
        return {**asdict(self), "verdict": self.verdict}


def _cyl_samples(field_: SpaceTimeField, cyl: Cylinder) -> np.ndarray:
    lo, hi = cyl.interval
    if not field_.contains_interval(lo, hi):
        raise ValueError(f"{cyl} leaves the time range of the field")
    field_.ball_window(cyl.ball, margin=0)
    for k in range(field_.dim):
        lo_x = field_.origin[k] - field_.h / 2
        hi_x = lo_x + field_.h * field_.shape[k]
        if cyl.center[k] - cyl.radius < lo_x - 1e-12 or cyl.center[k] + cyl.radius > hi_x + 1e-12:
            raise ValueError(f"{cyl} leaves the spatial box of the field")
    ms = field_.time_indices(lo, hi)
    if ms.size == 0:
        raise ValueError(f"{cyl} contains no time stamp of the field")
    return field_.data[ms][:, field_.ball_mask(cyl.ball)]


def degiorgi_lemma_check(
    field_: SpaceTimeField,
    point: Sequence[float],
    rho: float,
    xi: float,
    osc: OscillationData,
    sign: str = "minus",
    nu: float | None = None,
    gamma: float = 2.0,
) -> LemmaVerdict:
    """Measure-to-pointwise check on ``[point + Q_{2 rho}(theta)]`` with ``theta = 2 xi omega``.

    Hypothesis: the sample fraction of ``[u <= mu_- + xi omega]`` (or ``[u >= mu_+ - xi omega]``)
    in the double cylinder is ``<= nu``.  Conclusion checked on every sample of
    ``Q_rho(theta)``: ``u >= mu_- + xi omega / 2`` (or ``u <= mu_+ - xi omega / 2``).
    """
    if not 0 < xi <= 0.5:
        raise ValueError("xi must lie in (0, 1/2]")
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    y, s = _split_point(field_, point)
    if nu is None:
        nu = degiorgi_nu(field_.dim, gamma, sign).nu
    w = osc.omega
    geom = {"center": list(y), "s": s, "rho": rho, "xi": xi, "omega": w, "sign": sign}
    if w <= 0:
        return LemmaVerdict(False, None, None, nu, reason="omega = 0: no intrinsic cylinder", geometry=geom)
    theta = 2 * xi * w
    geom["theta"] = theta
    outer = _cyl_samples(field_, Cylinder(y, s, 2 * rho, theta))
    if sign == "minus":
        density = float(np.count_nonzero(outer <= osc.mu_minus + xi * w)) / outer.size
    else:
        density = float(np.count_nonzero(outer >= osc.mu_plus - xi * w)) / outer.size
    if density > nu:
        return LemmaVerdict(False, None, density, nu, reason="hypothesis not met", geometry=geom)
    inner = _cyl_samples(field_, Cylinder(y, s, rho, theta))
    if sign == "minus":
        bound = osc.mu_minus + 0.5 * xi * w
        bad = inner < bound
        worst = float(inner.min())
    else:
        bound = osc.mu_plus - 0.5 * xi * w
        bad = inner > bound
        worst = float(inner.max())
    count = int(np.count_nonzero(bad))
    geom["bound"] = bound
    return LemmaVerdict(True, count == 0, density, nu, count, worst, geometry=geom)


# ---------------------------------------------------------------------------
# expansion of positivity check
# ---------------------------------------------------------------------------


@dataclass
class ExpansionVerdict:
    applicable: bool
    holds: bool | None
    hypothesis_fraction: float
    first_failure: float | None = None
    checked_times: list = field(default_factory=list)
    fractions: list = field(default_factory=list)
    reason: str = ""

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "not-applicable"
        return "pass" if self.holds else "fail"

    def as_dict(self) -> dict:
        return {**asdict(self), "verdict": self.verdict}


def expansion_check(
    field_: SpaceTimeField,
    y: Sequence[float],
    s: float,
    rho: float,
    xi: float,
    osc: OscillationData,
    constants: ExpansionConstants,
) -> ExpansionVerdict:
    """Forward propagation of a measure lower bound from slice ``s``.

    Hypothesis: ``|[u(s) >= mu_- + xi omega] cap B_rho(y)| >= |B_rho|/2``.
    Conclusion at each stamp ``t`` in ``(s, s + delta xi omega rho]``:
    ``|[u(t) > mu_- + epsilon xi omega] cap B_rho(y)| >= |B_rho|/4``.
    Measures are cell counts; ``|B_rho|`` is the discrete ball measure.
    """
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    ball = Ball(tuple(float(c) for c in y), rho)
    m0 = field_.time_index(s)
    w = osc.omega
    bmeas = discrete_ball_measure(field_, ball)
    below = level_set_measure(field_, m0, ball, osc.mu_minus + xi * w, "below").measure
    frac0 = (bmeas - below) / bmeas
    if frac0 < 0.5:
        return ExpansionVerdict(False, None, frac0, reason="hypothesis not met")
    hi = s + constants.delta * xi * w * rho
    if not field_.contains_interval(s, hi):
        raise ValueError(f"forward window (s, {hi:g}] leaves the time range of the field")
    level = osc.mu_minus + constants.epsilon * xi * w
    times, fracs = [], []
    first = None
    for m in field_.time_indices(s, hi):
        f = level_set_measure(field_, int(m), ball, level, "above").measure / bmeas
        times.append(float(field_.times[m]))
        fracs.append(f)
        if f < 0.25 and first is None:
            first = float(field_.times[m])
    reason = "" if times else "no time stamp inside the forward window"
    return ExpansionVerdict(True, first is None, frac0, first, times, fracs, reason)


# ---------------------------------------------------------------------------
# oscillation cascade
# ---------------------------------------------------------------------------


@dataclass
class CascadeState:
    rhos: list
    omegas: list
    xi: float
    eta: float
    mode: str
    scale: float
    passed: list = field(default_factory=list)
    failed_stage: int | None = None
    floor: float = 0.0

    @property
    def stages(self) -> int:
        """Number of reduction stages carried out (``len(rhos) - 1``)."""
        return len(self.rhos) - 1

    @property
    def decay_stages(self) -> int:
        """Consecutive stages from 1 with ``omega_n <= eta^n omega_0``."""
        count = 0
        for ok in self.passed[1:]:
            if not ok:
                break
            count += 1
        return count

    @property
    def verdict(self) -> str:
        """``fail`` on any stalled stage, ``undecided`` when the grid floor allows no stage."""
        if self.failed_stage is not None:
            return "fail"
        return "pass" if self.stages > 0 else "undecided"

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "rhos": self.rhos,
            "omegas": self.omegas,
            "xi": self.xi,
            "eta": self.eta,
            "mode": self.mode,
            "scale": self.scale,
            "passed": self.passed,
            "failed_stage": self.failed_stage,
            "stages": self.stages,
            "decay_stages": self.decay_stages,
            "floor": self.floor,
        }


def oscillation_cascade(
    field_: SpaceTimeField,
    point: Sequence[float],
    rho0: float,
    mode: str = "empirical",
    xi: float = 0.125,
    gamma: float = 2.0,
    floor_cells: float = 4.0,
) -> CascadeState:
    """Shrink ``rho_{n+1} = xi omega_n rho_n / 2`` and measure ``omega_{n+1}`` on ``Q_{rho_{n+1}}``.

    ``u`` is divided by ``max(1, omega_0)`` first (recorded as ``scale``).  Stops
    once the next radius falls below ``floor_cells * h``.
    """
    x0, t0 = _split_point(field_, point)
    params = cascade_parameters(field_.dim, gamma, mode, xi)
    h = field_.h
    for k in range(field_.dim):
        lo_x = field_.origin[k] - h / 2
        hi_x = lo_x + h * field_.shape[k]
        if x0[k] - rho0 - h < lo_x or x0[k] + rho0 + h > hi_x:
            raise ValueError("point too close to the boundary for the initial cylinder")

    def osc(r):
        cyl = Cylinder(x0, t0, r, 1.0)
        lo, hi = cyl.interval
        if not field_.contains_interval(lo, hi):
            raise ValueError(f"{cyl} leaves the time range of the field")
        return ess_osc(field_, cyl).omega

    w0 = osc(rho0)
    scale = max(1.0, w0)
    rhos, omegas, passed = [rho0], [w0 / scale], [True]
    failed = None
    floor = floor_cells * h
    while True:
        n = len(rhos)
        r_next = 0.5 * params.xi * omegas[-1] * rhos[-1]
        if r_next < floor * (1 - 1e-12):
            break
        w = osc(r_next) / scale
        rhos.append(r_next)
        omegas.append(w)
        ok = w <= params.eta**n * omegas[0] * (1 + 1e-12)
        passed.append(ok)
        if not ok and failed is None:
            failed = n
    return CascadeState(rhos, omegas, params.xi, params.eta, params.mode, scale, passed, failed, floor)


# ---------------------------------------------------------------------------
# sup bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupBound:
    measured_sup: float
    first_term: float
    second_term: float
    sign: str = "plus"

    @property
    def bound_shape(self) -> float:
        return self.first_term + self.second_term

    @property
    def ratio(self) -> float:
        return self.measured_sup / self.bound_shape

    def as_dict(self) -> dict:
        return {**asdict(self), "bound_shape": self.bound_shape, "ratio": self.ratio}


def sup_bound_check(
    field_: SpaceTimeField,
    y: Sequence[float],
    s: float,
    t: float,
    rho: float,
    r: float,
    sign: str = "plus",
) -> SupBound:
    """``sup u_\\pm`` on ``B_rho(y) x [s, t]`` against

    ``(rho/(t-s))^(N/(r-N)) [ (rho^N (t-s))^-1 int_{2s-t}^{t} int_{B_4rho} u_\\pm^r ]^(1/(r-N)) + (t-s)/rho``.
    """
    n = field_.dim
    if not r > n:
        raise ValueError(f"r must exceed N={n}; the bound's constant blows up as r -> N")
    if not t > s:
        raise ValueError("need t > s")
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    y = tuple(float(c) for c in y)
    part = (lambda v: np.maximum(v, 0.0)) if sign == "plus" else (lambda v: np.maximum(-v, 0.0))
    big = Cylinder(y, t, 4 * rho, 2 * (t - s) / (4 * rho))
    ms_big = _window_indices(field_, big)
    sl, mask = field_.ball_window(big.ball, margin=0)
    vals = [field_.cell_volume * float((part(field_.data[m][sl]) ** r)[mask].sum()) for m in ms_big]
    integral = trapezoid(vals, field_.times[ms_big])
    small = field_.time_indices(s, t, closed_left=True)
    if field_.time_indices(s, s, closed_left=True).size == 0 or field_.time_indices(t, t, closed_left=True).size == 0:
        raise ValueError("s and t must be time stamps of the field")
    inner = field_.ball_mask(Ball(y, rho))
    measured = float(part(field_.data[small][:, inner]).max())
    d = t - s
    first = (rho / d) ** (n / (r - n)) * (integral / (rho**n * d)) ** (1.0 / (r - n))
    return SupBound(measured, first, d / rho, sign)


@dataclass(frozen=True)
class SupDraw:
    center: tuple[float, ...]
    s: float
    t: float
    rho: float


def sup_bound_corpus(
    field_: SpaceTimeField,
    n: int,
    seed: int,
    r: float | None = None,
    rho_range: tuple[float, float] | None = None,
    sign: str = "both",
) -> tuple[float, list]:
    """Max ratio over ``n`` seeded cylinders whose ``B_{4 rho}`` fits and whose ``2s - t, s, t`` are stamps.

    ``sign="both"`` keeps the larger of the two truncation ratios per cylinder.
    Radii, centers and time fractions are drawn in physical units, so a fixed
    ``rho_range`` makes corpora at different ``h`` comparable.
    """
    from .certify import _random_center, _run_draws

    dim = field_.dim
    r = dim + 1.0 if r is None else r
    span = min(field_.h * (k - 1) for k in field_.shape)
    if rho_range is None:
        rho_range = (2 * field_.h, span / 12)
    nt = field_.times.size
    if nt < 3:
        raise ValueError("field needs at least three time slices")

    def run(i, rng):
        rho = float(rng.uniform(*rho_range))
        c = _random_center(field_, 4 * rho, rng, 1)
        # physical draws snapped to stamps, so one seed gives comparable cylinders across h
        u_half, u_t = rng.uniform(size=2)
        half = min(max(1, int(round(u_half * (nt - 1) / 2))), (nt - 1) // 2)
        m_t = 2 * half + int(round(u_t * (nt - 1 - 2 * half)))
        s, t = float(field_.times[m_t - half]), float(field_.times[m_t])
        signs = ("plus", "minus") if sign == "both" else (sign,)
        res = max((sup_bound_check(field_, c, s, t, rho, r, sg) for sg in signs), key=lambda b: b.ratio)
        return res, SupDraw(c, s, t, rho)

    out = _run_draws(run, n, seed)
    details = [{**asdict(d), **b.as_dict()} for b, d in out]
    return max(b.ratio for b, _ in out), details

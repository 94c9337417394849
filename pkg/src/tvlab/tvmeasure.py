"""Discrete total-variation measures, level sets and embedding/isoperimetric ratios.

The primal TV of a slice over a ball is ``h^N * sum |grad+ u|`` over cells whose
center lies in the ball.  Forward differences look one cell ahead, so every ball
must keep a one-cell margin from the grid boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .grid import Ball, Cylinder, SpaceTimeField
from .ops import divergence, forward_grad

if TYPE_CHECKING:
    from .cutoff import Cutoff

DUAL_ITERS = 500


@dataclass(frozen=True)
class TVSlice:
    primal: float
    dual_lower: float

    @property
    def gap(self) -> float:
        return self.primal - self.dual_lower


@dataclass(frozen=True)
class LevelSet:
    level: float
    direction: str
    measure: float


def _slice_tv(values: np.ndarray, field: SpaceTimeField, ball: Ball, band=None) -> float:
    sl, mask = field.ball_window(ball, margin=1)
    u = values[sl]
    g = forward_grad(u, field.h)
    gn = np.sqrt((g**2).sum(axis=0))
    if band is not None:
        mask = mask & _band_cells(u, *band)
    return float(field.cell_volume * gn[mask].sum())


def _band_cells(u: np.ndarray, k: float, l: float) -> np.ndarray:
    # a cell belongs to the band if u there, or the segment to a forward neighbour, meets (k, l)
    lo = u.copy()
    hi = u.copy()
    for ax in range(u.ndim):
        nb = np.roll(u, -1, axis=ax)
        last = [slice(None)] * u.ndim
        last[ax] = slice(-1, None)
        nb[tuple(last)] = u[tuple(last)]
        lo = np.minimum(lo, nb)
        hi = np.maximum(hi, nb)
    return (hi > k) & (lo < l)


def tv_primal(field: SpaceTimeField, m: int, ball: Ball) -> float:
    """Primal forward-difference TV of slice ``m`` over ``ball`` (no dual certificate)."""
    return _slice_tv(field.data[m], field, ball)


def tv_of_values(values: np.ndarray, field: SpaceTimeField, ball: Ball) -> float:
    """Primal TV over ``ball`` of an arbitrary slice ``values`` living on ``field``'s grid."""
    return _slice_tv(values, field, ball)


def tv_slice(field: SpaceTimeField, m: int, ball: Ball, iters: int = DUAL_ITERS) -> TVSlice:
    """Primal TV of slice ``m`` on ``ball`` together with a certified dual lower bound.

    The lower bound is ``-h^N sum u div(phi)`` for an admissible ``|phi| <= 1``
    supported on the ball's cells, reached by ``iters`` projected-ascent steps of
    size ``0.9 h / (2 sqrt(N))`` started from ``phi = 0``.
    """
    sl, mask = field.ball_window(ball, margin=1)
    u = field.data[m][sl]
    h, n = field.h, field.dim
    g = forward_grad(u, h) * mask
    gn = np.sqrt((g**2).sum(axis=0))
    primal = float(field.cell_volume * gn[mask].sum())
    # ascent on a linear objective: the k-th projected iterate is min(1, k*step*|g|) g/|g|
    step = 0.9 * h / (2 * math.sqrt(n))
    scale = np.where(gn > 0, np.minimum(1.0, iters * step * gn) / np.where(gn > 0, gn, 1.0), 0.0)
    phi = g * scale
    dual = float(-field.cell_volume * (u * divergence(phi, h)).sum())
    return TVSlice(primal, dual)


def _window_indices(field: SpaceTimeField, cyl: Cylinder) -> np.ndarray:
    lo, hi = cyl.interval
    missing = []
    for t in (lo, hi):
        try:
            field.time_index(t)
        except KeyError:
            missing.append(t)
    if missing:
        raise ValueError(f"{cyl}: time slices missing from the field: {missing}")
    return field.time_indices(lo, hi, closed_left=True)


def trapezoid(values, times) -> float:
    values = np.asarray(values, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(times)))


def tv_time_integral(field: SpaceTimeField, cyl: Cylinder) -> float:
    """Trapezoidal ``int ||Du(t)||(B) dt`` over the cylinder's closed time window."""
    ms = _window_indices(field, cyl)
    vals = [tv_primal(field, m, cyl.ball) for m in ms]
    return trapezoid(vals, field.times[ms])


def level_set_measure(field: SpaceTimeField, m: int, ball: Ball, k: float, direction: str) -> LevelSet:
    """``h^N`` times the number of in-ball cells with ``u < k`` (below) or ``u > k`` (above)."""
    sl, mask = field.ball_window(ball, margin=1)
    u = field.data[m][sl][mask]
    if direction == "below":
        count = int(np.count_nonzero(u < k))
    elif direction == "above":
        count = int(np.count_nonzero(u > k))
    else:
        raise ValueError(f"direction must be 'below' or 'above', got {direction!r}")
    return LevelSet(float(k), direction, count * field.cell_volume)


def discrete_ball_measure(field: SpaceTimeField, ball: Ball) -> float:
    return int(np.count_nonzero(field.ball_mask(ball))) * field.cell_volume


def embedding_ratio(field: SpaceTimeField, cutoff: "Cutoff", cyl: Cylinder) -> float:
    """``iint (u z)^((N+2)/N)`` over ``int ||D(u z)|| dt * (sup_t int (u z)^2)^(1/N)``.

    ``field`` must be non-negative on the cylinder; 0/0 is reported as 0.
    """
    ms = _window_indices(field, cyl)
    cutoff.check_against(field)
    sl, mask = field.ball_window(cyl.ball, margin=1)
    n = field.dim
    q = (n + 2) / n
    z2 = cutoff.temporal(field.times[ms])
    z1 = cutoff.spatial[sl]
    power, tv, mass = [], [], []
    for m, s in zip(ms, z2):
        u = field.data[m][sl]
        if np.any(u[mask] < 0):
            raise ValueError("embedding_ratio needs a non-negative field; truncate first")
        w = u * z1 * s
        power.append(field.cell_volume * (w[mask] ** q).sum())
        tv.append(field.cell_volume * np.sqrt((forward_grad(w, field.h) ** 2).sum(axis=0))[mask].sum())
        mass.append(field.cell_volume * (w[mask] ** 2).sum())
    t = field.times[ms]
    num = trapezoid(power, t)
    den = trapezoid(tv, t) * max(mass) ** (1 / n)
    if num == 0 and den == 0:
        return 0.0
    return num / den


def isoperimetric_ratio(field: SpaceTimeField, m: int, ball: Ball, k: float, l: float) -> float:
    """``(l - k) |[u < k] cap B| / (rho * TV(u on the band k < u < l))``.

    The band TV counts each in-ball cell whose value, or whose segment to a forward
    neighbour, meets ``(k, l)``; jumps straddling the band are therefore included.
    """
    if not l > k:
        raise ValueError("isoperimetric_ratio needs l > k")
    upper = level_set_measure(field, m, ball, l, "above").measure
    if upper < 0.25 * discrete_ball_measure(field, ball) * (1 - 1e-12):
        raise ValueError("upper level set covers less than a quarter of the ball")
    lower = level_set_measure(field, m, ball, k, "below").measure
    if lower == 0:
        return 0.0
    band_tv = _slice_tv(field.data[m], field, ball, band=(k, l))
    if band_tv == 0:
        return math.inf
    return (l - k) * lower / (ball.radius * band_tv)

"""Uniform space-time grids, balls, intrinsic cylinders and the TVF1 field format.

A :class:`SpaceTimeField` stores one scalar per (cell, time) pair.  Cell
centers sit at ``origin + h * index``; :func:`sample_analytic` places them
``h/2`` inside the box corner so that no center lands on a coordinate origin.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SpaceTimeField",
    "DualField",
    "Ball",
    "Cylinder",
    "OscillationData",
    "FieldFormatError",
    "BadMagicError",
    "TruncatedFileError",
    "NonIncreasingTimesError",
    "sample_analytic",
    "ess_osc",
    "ball_volume",
    "read_field",
    "write_field",
    "read_dual",
    "write_dual",
]

TIME_RTOL = 1e-9


def ball_volume(radius: float, dim: int) -> float:
    """Lebesgue measure of a Euclidean ball in ``dim`` dimensions."""
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius**dim


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class Cylinder:
    """``B_rho(x0) x (t0 - theta*rho, t0]`` (backward) or ``(t0, t0 + theta*rho]`` (forward)."""

    center: tuple[float, ...]
    t0: float
    radius: float
    theta: float = 1.0
    forward: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"cylinder radius must be positive, got {self.radius}")
        if not self.theta > 0:
            raise ValueError(f"cylinder theta must be positive, got {self.theta}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def height(self) -> float:
        return self.theta * self.radius

    @property
    def interval(self) -> tuple[float, float]:
        if self.forward:
            return (self.t0, self.t0 + self.height)
        return (self.t0 - self.height, self.t0)

    @property
    def ball(self) -> Ball:
        return Ball(self.center, self.radius)

    def scaled(self, factor: float) -> "Cylinder":
        """Same vertex and theta, radius multiplied by ``factor``."""
        return Cylinder(self.center, self.t0, self.radius * factor, self.theta, self.forward)

    def __str__(self):
        lo, hi = self.interval
        return f"Cylinder(center={self.center}, radius={self.radius:g}, t in ({lo:g}, {hi:g}])"


@dataclass(frozen=True)
class OscillationData:
    mu_plus: float
    mu_minus: float
    omega: float

    def __post_init__(self):
        if self.mu_plus < self.mu_minus:
            raise ValueError("mu_plus must be >= mu_minus")
        if self.omega < self.mu_plus - self.mu_minus - 1e-12 * max(1.0, abs(self.mu_plus)):
            raise ValueError("omega must be >= mu_plus - mu_minus")


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Scalar samples ``data[m, i_1, ..., i_N]`` at cell ``i`` and time ``times[m]``."""

    spacing: float
    origin: tuple[float, ...]
    times: np.ndarray
    data: np.ndarray
    shape: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        times = _freeze(np.atleast_1d(np.asarray(self.times, dtype=np.float64)))
        data = _freeze(self.data)
        origin = tuple(float(o) for o in self.origin)
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if data.ndim < 2 or data.ndim - 1 > 3:
            raise ValueError("data must have shape (T, n_1, ..., n_N) with N in {1, 2, 3}")
        if len(origin) != data.ndim - 1:
            raise ValueError("origin length does not match spatial dimension")
        if data.shape[0] != times.size:
            raise ValueError("number of time slices does not match the time list")
        if any(n < 2 for n in data.shape[1:]):
            raise ValueError(f"every spatial extent must be >= 2, got {data.shape[1:]}")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise NonIncreasingTimesError("times must be strictly increasing")
        if not np.all(np.isfinite(data)):
            raise ValueError("field data must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "shape", tuple(data.shape[1:]))

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> float:
        return self.spacing

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.shape[axis])

    def coords(self) -> np.ndarray:
        """Cell-center coordinates, shape ``(*shape, N)``."""
        axes = [self.axis_centers(k) for k in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_data(self, data: np.ndarray, times: np.ndarray | None = None) -> "SpaceTimeField":
        return SpaceTimeField(self.spacing, self.origin, self.times if times is None else times, data)

    def time_index(self, t: float) -> int:
        """Index of the stamp equal to ``t`` (relative tolerance 1e-9), else ``KeyError``."""
        tol = TIME_RTOL * max(1.0, abs(t))
        m = int(np.searchsorted(self.times, t - tol))
        if m < self.times.size and abs(self.times[m] - t) <= tol:
            return m
        raise KeyError(f"time {t!r} is not a stamp of this field")

    def time_indices(self, lo: float, hi: float, closed_left: bool = False) -> np.ndarray:
        """Indices of stamps in ``(lo, hi]`` (or ``[lo, hi]``)."""
        tl = TIME_RTOL * max(1.0, abs(lo))
        th = TIME_RTOL * max(1.0, abs(hi))
        t = self.times
        left = t >= lo - tl if closed_left else t > lo + tl
        return np.nonzero(left & (t <= hi + th))[0]

    def ball_mask(self, ball: Ball) -> np.ndarray:
        """Boolean mask of cells whose center lies in the closed ball."""
        if len(ball.center) != self.dim:
            raise ValueError("ball dimension does not match field dimension")
        r2 = np.zeros(self.shape)
        for k in range(self.dim):
            d = self.axis_centers(k) - ball.center[k]
            r2 = r2 + (d**2).reshape([-1 if j == k else 1 for j in range(self.dim)])
        return r2 <= ball.radius**2 * (1 + 1e-12)

    def ball_window(self, ball: Ball, margin: int = 0) -> tuple[tuple[slice, ...], np.ndarray]:
        """Index box of the ball's cells grown by ``margin`` plus the in-ball mask on it.

        Raises ``ValueError`` if the grown box leaves the grid or the ball has no cell.
        """
        mask = self.ball_mask(ball)
        if not mask.any():
            raise ValueError(f"ball {ball} contains no cell center")
        sl = []
        for k in range(self.dim):
            other = tuple(j for j in range(self.dim) if j != k)
            idx = np.nonzero(mask.any(axis=other) if other else mask)[0]
            lo, hi = idx[0] - margin, idx[-1] + margin
            if lo < 0 or hi > self.shape[k] - 1:
                raise ValueError(f"ball {ball} is closer than {margin} cell(s) to the grid boundary")
            sl.append(slice(lo, hi + 1))
        sl = tuple(sl)
        return sl, mask[sl]

    def contains_interval(self, lo: float, hi: float) -> bool:
        tol = TIME_RTOL * max(1.0, abs(lo), abs(hi))
        return self.times[0] <= lo + tol and hi <= self.times[-1] + tol


@dataclass(frozen=True, eq=False)
class DualField:
    """Vector field ``z`` on the grid of a :class:`SpaceTimeField`, ``data[m, *cell, k]``."""

    spacing: float
    origin: tuple[float, ...]
    times: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        times = _freeze(np.atleast_1d(np.asarray(self.times, dtype=np.float64)))
        data = _freeze(self.data)
        if data.ndim < 3 or data.shape[-1] != data.ndim - 2:
            raise ValueError("dual data must have shape (T, n_1, ..., n_N, N)")
        if data.shape[0] != times.size:
            raise ValueError("number of dual slices does not match the time list")
        if not np.all(np.isfinite(data)):
            raise ValueError("dual data must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def dim(self) -> int:
        return self.data.shape[-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape[1:-1])

    @property
    def sup_norm(self) -> float:
        return float(np.sqrt((self.data**2).sum(axis=-1)).max()) if self.data.size else 0.0

    def matches(self, f: SpaceTimeField) -> bool:
        return (
            self.shape == f.shape
            and self.spacing == f.spacing
            and self.origin == f.origin
            and self.times.shape == f.times.shape
            and bool(np.all(self.times == f.times))
        )


def sample_analytic(
    f: Callable[[np.ndarray, float], np.ndarray],
    box: Sequence[tuple[float, float]],
    h: float,
    times: Sequence[float],
) -> SpaceTimeField:
    """Sample ``f(x, t)`` at cell centers of ``box``; ``x`` has shape ``(*shape, N)``.

    Each box side must be an integer multiple of ``h`` to within 1e-12 relative.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    shape, origin = [], []
    for lo, hi in box:
        n = (hi - lo) / h
        ni = int(round(n))
        if ni < 2 or abs(n - ni) > 1e-12 * max(1.0, abs(n)):
            raise ValueError(f"box side [{lo}, {hi}] is not a multiple of h={h} with >= 2 cells")
        shape.append(ni)
        origin.append(lo + h / 2)
    times = np.asarray(times, dtype=np.float64)
    axes = [origin[k] + h * np.arange(shape[k]) for k in range(len(shape))]
    x = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    data = np.empty((times.size, *shape))
    for m, t in enumerate(times):
        vals = np.broadcast_to(np.asarray(f(x, float(t)), dtype=np.float64), tuple(shape))
        bad = ~np.isfinite(vals)
        if bad.any():
            idx = tuple(int(i[0]) for i in np.nonzero(bad))
            raise ValueError(f"non-finite sample at x={tuple(x[idx])}, t={t}")
        data[m] = vals
    return SpaceTimeField(h, tuple(origin), times, data)


def ess_osc(field: SpaceTimeField, cyl: Cylinder) -> OscillationData:
    """Max/min over samples with center in the ball and stamp in the cylinder's interval."""
    mask = field.ball_mask(cyl.ball)
    lo, hi = cyl.interval
    ms = field.time_indices(lo, hi)
    if not mask.any() or ms.size == 0:
        raise ValueError(f"{cyl} contains no sample of the field")
    vals = field.data[ms][:, mask]
    mu_p, mu_m = float(vals.max()), float(vals.min())
    return OscillationData(mu_p, mu_m, mu_p - mu_m)


# ---------------------------------------------------------------------------
# TVF1 / TVZ1 binary format
# ---------------------------------------------------------------------------


class FieldFormatError(ValueError):
    code = "format"


class BadMagicError(FieldFormatError):
    code = "bad-magic"


class TruncatedFileError(FieldFormatError):
    code = "truncated"


class NonIncreasingTimesError(FieldFormatError):
    code = "non-increasing-times"


FIELD_MAGIC = b"TVF1"
DUAL_MAGIC = b"TVZ1"


def _pack(magic: bytes, spacing, origin, shape, times, payload: np.ndarray) -> bytes:
    dim = len(shape)
    head = [magic, struct.pack("<I", dim), struct.pack(f"<{dim}I", *shape)]
    head.append(struct.pack("<d", spacing))
    head.append(struct.pack(f"<{dim}d", *origin))
    head.append(struct.pack("<I", len(times)))
    head.append(np.asarray(times, dtype="<f8").tobytes())
    return b"".join(head) + np.ascontiguousarray(payload, dtype="<f8").tobytes()


def _unpack(buf: bytes, magic: bytes, components: Callable[[int], int]):
    if len(buf) < 4 or buf[:4] != magic:
        raise BadMagicError(f"bad magic: expected {magic.decode()}, got {buf[:4]!r}")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(buf):
            raise TruncatedFileError("truncated header")
        out = struct.unpack_from(fmt, buf, pos)
        pos += size
        return out

    (dim,) = take("<I")
    if dim not in (1, 2, 3):
        raise FieldFormatError(f"unsupported dimension {dim}")
    shape = take(f"<{dim}I")
    (spacing,) = take("<d")
    origin = take(f"<{dim}d")
    (nt,) = take("<I")
    times = np.array(take(f"<{nt}d")) if nt else np.empty(0)
    if nt > 1 and np.any(np.diff(times) <= 0):
        raise NonIncreasingTimesError("times in file are not strictly increasing")
    count = nt * int(np.prod(shape)) * components(dim)
    if len(buf) - pos < 8 * count:
        raise TruncatedFileError(f"truncated payload: need {8 * count} bytes, have {len(buf) - pos}")
    if len(buf) - pos > 8 * count:
        raise FieldFormatError("trailing bytes after payload")
    payload = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).astype(np.float64)
    return spacing, origin, tuple(shape), times, payload


def write_field(field: SpaceTimeField, path) -> None:
    Path(path).write_bytes(
        _pack(FIELD_MAGIC, field.spacing, field.origin, field.shape, field.times, field.data)
    )


def read_field(path) -> SpaceTimeField:
    spacing, origin, shape, times, payload = _unpack(Path(path).read_bytes(), FIELD_MAGIC, lambda d: 1)
    return SpaceTimeField(spacing, origin, times, payload.reshape((times.size, *shape)))


def write_dual(z: DualField, path) -> None:
    Path(path).write_bytes(_pack(DUAL_MAGIC, z.spacing, z.origin, z.shape, z.times, z.data))


def read_dual(path) -> DualField:
    spacing, origin, shape, times, payload = _unpack(Path(path).read_bytes(), DUAL_MAGIC, lambda d: d)
    return DualField(spacing, origin, times, payload.reshape((times.size, *shape, len(shape))))

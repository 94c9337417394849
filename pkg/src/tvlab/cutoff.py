"""Product cutoffs ``zeta(x, t) = zeta1(x) * zeta2(t)`` with recorded Lipschitz bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Ball, SpaceTimeField
from .ops import grad_norm


@dataclass(frozen=True, eq=False)
class Cutoff:
    """Spatial profile on the full grid and a piecewise-linear time ramp.

    ``ramp=(ta, tb)`` means ``zeta2 = 0`` for ``t <= ta``, ``1`` for ``t >= tb`` and
    linear in between; ``ramp=None`` means ``zeta2 == 1``.
    """

    ball: Ball
    spacing: float
    spatial: np.ndarray
    lipschitz_space: float
    ramp: tuple[float, float] | None = None

    def __post_init__(self):
        z1 = np.ascontiguousarray(self.spatial, dtype=np.float64)
        z1.setflags(write=False)
        object.__setattr__(self, "spatial", z1)
        if z1.min() < 0 or z1.max() > 1:
            raise ValueError("cutoff values must lie in [0, 1]")
        if self.ramp is not None and not self.ramp[1] > self.ramp[0]:
            raise ValueError("time ramp must satisfy ta < tb")
        # a Lipschitz-L function has every forward difference <= L, so |grad| <= sqrt(N) L
        bound = math.sqrt(z1.ndim) * self.lipschitz_space * (1 + 1e-9)
        if grad_norm(z1, self.spacing).max() > bound:
            raise ValueError("spatial cutoff violates its recorded Lipschitz bound")

    @property
    def lipschitz_time(self) -> float:
        return 0.0 if self.ramp is None else 1.0 / (self.ramp[1] - self.ramp[0])

    def temporal(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if self.ramp is None:
            return np.ones_like(t)
        ta, tb = self.ramp
        return np.clip((t - ta) / (tb - ta), 0.0, 1.0)

    def temporal_rate(self, t) -> np.ndarray:
        """``zeta2'(t)``; at the two kinks the mean of the one-sided slopes."""
        t = np.asarray(t, dtype=np.float64)
        if self.ramp is None:
            return np.zeros_like(t)
        ta, tb = self.ramp
        slope = 1.0 / (tb - ta)
        tol = 1e-9 * max(1.0, abs(ta), abs(tb))
        out = np.where((t > ta + tol) & (t < tb - tol), slope, 0.0)
        kink = (np.abs(t - ta) <= tol) | (np.abs(t - tb) <= tol)
        return np.where(kink, 0.5 * slope, out)

    def spatial_grad_norm(self) -> np.ndarray:
        return grad_norm(self.spatial, self.spacing)

    def check_against(self, field: SpaceTimeField) -> None:
        if self.spatial.shape != field.shape or self.spacing != field.spacing:
            raise ValueError("cutoff grid does not match the field grid")
        outside = ~field.ball_mask(self.ball)
        if np.any(self.spatial[outside] != 0):
            raise ValueError("spatial cutoff does not vanish outside its ball")
        if self.ramp is not None and field.times.size > 1:
            z2 = self.temporal(field.times)
            rates = np.diff(z2) / np.diff(field.times)
            if rates.min() < 0 or rates.max() > self.lipschitz_time * (1 + 1e-9):
                raise ValueError("temporal cutoff violates its recorded bounds")

    @classmethod
    def radial(
        cls,
        field: SpaceTimeField,
        ball: Ball,
        inner_radius: float,
        ramp: tuple[float, float] | None = None,
    ) -> "Cutoff":
        """``zeta1 = 1`` on ``B_inner``, linear in ``|x - c|`` down to ``0`` at the ball radius."""
        if not 0 <= inner_radius < ball.radius:
            raise ValueError("inner radius must lie in [0, radius)")
        x = field.coords()
        r = np.sqrt(((x - np.asarray(ball.center)) ** 2).sum(axis=-1))
        width = ball.radius - inner_radius
        z1 = np.clip((ball.radius - r) / width, 0.0, 1.0)
        z1[~field.ball_mask(ball)] = 0.0
        cut = cls(ball, field.spacing, z1, 1.0 / width, ramp)
        cut.check_against(field)
        return cut

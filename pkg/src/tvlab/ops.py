"""Forward-difference gradient and its negative adjoint on a uniform grid.

The gradient vanishes across the last cell of every axis (no-flux boundary),
and ``divergence`` is defined so that ``<grad u, p> = -<u, div p>`` holds
exactly for any ``u`` and ``p`` of matching shape.
"""

import numpy as np


def forward_grad(u: np.ndarray, h: float) -> np.ndarray:
    """Return ``g`` with ``g[k] = (u[i + e_k] - u[i]) / h`` and zero on the last layer."""
    g = np.zeros((u.ndim,) + u.shape)
    for k in range(u.ndim):
        lo = [slice(None)] * u.ndim
        lo[k] = slice(0, -1)
        g[k][tuple(lo)] = np.diff(u, axis=k) / h
    return g


def divergence(p: np.ndarray, h: float) -> np.ndarray:
    """Backward-difference divergence, ``-grad^T``; ``p[k]`` on the last layer is ignored."""
    ndim = p.shape[0]
    d = np.zeros(p.shape[1:])
    for k in range(ndim):
        pk = p[k]
        first = [slice(None)] * ndim
        first[k] = slice(0, 1)
        mid = [slice(None)] * ndim
        mid[k] = slice(1, -1)
        prev = [slice(None)] * ndim
        prev[k] = slice(0, -2)
        last = [slice(None)] * ndim
        last[k] = slice(-1, None)
        before_last = [slice(None)] * ndim
        before_last[k] = slice(-2, -1)
        d[tuple(first)] += pk[tuple(first)]
        d[tuple(mid)] += pk[tuple(mid)] - pk[tuple(prev)]
        d[tuple(last)] -= pk[tuple(before_last)]
    return d / h


def grad_norm(u: np.ndarray, h: float) -> np.ndarray:
    """Cellwise Euclidean norm of the forward-difference gradient."""
    return np.sqrt((forward_grad(u, h) ** 2).sum(axis=0))


def project_unit_ball(p: np.ndarray) -> np.ndarray:
    """Cellwise projection of a vector field (components on axis 0) onto ``|p| <= 1``."""
    nrm = np.sqrt((p**2).sum(axis=0))
    return p / np.maximum(1.0, nrm)

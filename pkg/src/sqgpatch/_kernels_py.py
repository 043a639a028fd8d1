"""Pure numpy implementations of the O(n^2) quadrature kernels.

Used when the compiled extension is unavailable; the two backends share one
signature per kernel and are cross-checked in the test suite.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import SingularityError


@lru_cache(maxsize=None)
def chord_weights(n):
    """1 / (2 |sin(eta_k / 2)|) for eta_k = 2 pi k / n, with the k = 0 slot zeroed."""
    k = np.arange(n)
    w = np.zeros(n)
    w[1:] = 0.5 / np.abs(np.sin(np.pi * k[1:] / n))
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def _offset_index(n):
    j = np.arange(n)
    idx = (j[:, None] - j[None, :]) % n
    idx.setflags(write=False)
    return idx


def _remainder_matrix(x, speed):
    n = x.shape[-1]
    d = np.hypot(x[0][:, None] - x[0][None, :], x[1][:, None] - x[1][None, :])
    np.fill_diagonal(d, 1.0)
    if not np.all(d[~np.eye(n, dtype=bool)] > 0.0):
        raise SingularityError("coincident curve nodes: arc-chord quantity overflows")
    k = 1.0 / d - chord_weights(n)[_offset_index(n)] / speed[:, None]
    np.fill_diagonal(k, 0.0)
    if not np.all(np.isfinite(k)):
        raise SingularityError("non-finite transport kernel")
    return k


def transport_remainder(x, speed, f):
    """h * sum_i (f_j - f_i) K_ji for each row of ``f`` (shape (m, n))."""
    x = np.asarray(x, dtype=float)
    f = np.atleast_2d(np.asarray(f, dtype=float))
    n = x.shape[-1]
    k = _remainder_matrix(x, np.asarray(speed, dtype=float))
    return (2.0 * np.pi / n) * (f * k.sum(axis=1) - f @ k.T)


def normal_remainder(x, speed, tangent, perp):
    """-h * sum_{i != j} perp_j . tangent_i K_ji."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    k = _remainder_matrix(x, np.asarray(speed, dtype=float))
    dots = perp[0][:, None] * tangent[0][None, :] + perp[1][:, None] * tangent[1][None, :]
    return -(2.0 * np.pi / n) * (dots * k).sum(axis=1)


def arc_chord_table(x, speed):
    """F[j, m] = |eta_m| / |x_j - x(gamma_j - eta_m)|, eta_m = -pi + 2 pi m / n."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    m = np.arange(n)
    shift = m - n // 2
    src = (np.arange(n)[:, None] - shift[None, :]) % n
    d = np.hypot(x[0][:, None] - x[0][src], x[1][:, None] - x[1][src])
    eta = np.abs(2.0 * np.pi * shift / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        table = eta[None, :] / d
    table[:, n // 2] = 1.0 / np.asarray(speed, dtype=float)
    return table


def arc_chord_sup(x, speed):
    return float(arc_chord_table(x, speed).max())


def offcurve_sum(points, x, tangent):
    """h * sum_i tangent_i / |p - x_i| for each row of ``points`` (shape (P, 2))."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = x.shape[-1]
    d = np.hypot(points[:, 0:1] - x[0][None, :], points[:, 1:2] - x[1][None, :])
    w = (2.0 * np.pi / n) / d
    return np.stack([w @ tangent[0], w @ tangent[1]], axis=1)

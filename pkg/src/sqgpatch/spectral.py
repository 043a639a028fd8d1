"""Periodic fields on a uniform grid of [-pi, pi) and exact Fourier multipliers.

Coefficients follow f_hat(k) = (1/2pi) int f(g) exp(-i k g) dg, computed from
the grid values by the trapezoidal rule.  Every operator here accepts either a
:class:`PeriodicField` / :class:`VectorField` (and returns the same kind) or a
raw ``ndarray`` whose last axis runs over the grid (and returns an ndarray).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import sici

__all__ = [
    "PeriodicGrid",
    "PeriodicField",
    "VectorField",
    "grid",
    "wavenumbers",
    "deriv",
    "d_log",
    "i_log",
    "op_L",
    "op_chord",
    "L_multiplier",
    "chord_multiplier",
    "antideriv_from",
    "interp",
    "upsample",
    "coefficients",
    "norm",
]

MAX_DERIV_ORDER = 4


@dataclass(frozen=True)
class PeriodicGrid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.n

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.n)


@lru_cache(maxsize=None)
def grid(n: int) -> PeriodicGrid:
    return PeriodicGrid(n)


def _readonly(a):
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def _nodes(n):
    return _readonly(-np.pi + 2.0 * np.pi * np.arange(n) / n)


@lru_cache(maxsize=None)
def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in numpy FFT order; index n/2 holds k = -n/2."""
    return _readonly(np.fft.fftfreq(n, 1.0 / n).round().astype(np.int64))


@lru_cache(maxsize=None)
def _phase(n):
    # (-1)^k: shifts the FFT origin from gamma = 0 to gamma = -pi
    return _readonly(np.where(wavenumbers(n) % 2 == 0, 1.0, -1.0))


class PeriodicField:
    """Real 2pi-periodic function sampled on ``grid(n)``."""

    __slots__ = ("values", "_coeffs")

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim != 1:
            raise ValueError("PeriodicField values must be one-dimensional")
        grid(values.size)
        values.setflags(write=False)
        self.values = values
        self._coeffs = None

    @classmethod
    def from_function(cls, func, n):
        return cls(func(grid(n).nodes))

    @property
    def grid(self) -> PeriodicGrid:
        return grid(self.values.size)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def coeffs(self) -> np.ndarray:
        """Coefficients ordered k = -n/2, ..., n/2 - 1."""
        if self._coeffs is None:
            c = np.fft.fftshift(coefficients(self.values))
            c.setflags(write=False)
            self._coeffs = c
        return self._coeffs

    @property
    def k(self) -> np.ndarray:
        return np.arange(-self.n // 2, self.n // 2)

    def mean(self) -> float:
        return float(self.values.mean())

    def __call__(self, points):
        return interp(self, points)

    def __add__(self, other):
        return PeriodicField(self.values + _vals(other))

    __radd__ = __add__

    def __sub__(self, other):
        return PeriodicField(self.values - _vals(other))

    def __rsub__(self, other):
        return PeriodicField(_vals(other) - self.values)

    def __mul__(self, other):
        return PeriodicField(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicField(-self.values)

    def __repr__(self):
        return f"PeriodicField(n={self.n})"


@dataclass(frozen=True)
class VectorField:
    """Planar vector field (two components) on a shared grid."""

    c1: PeriodicField
    c2: PeriodicField

    def __post_init__(self):
        if self.c1.n != self.c2.n:
            raise ValueError("VectorField components must share one grid")

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(PeriodicField(a[0]), PeriodicField(a[1]))

    @property
    def values(self) -> np.ndarray:
        return np.stack([self.c1.values, self.c2.values])

    @property
    def n(self) -> int:
        return self.c1.n

    @property
    def grid(self) -> PeriodicGrid:
        return self.c1.grid


def _vals(f):
    if isinstance(f, (PeriodicField, VectorField)):
        return f.values
    return f


def _wrap_like(f, out):
    if isinstance(f, PeriodicField):
        return PeriodicField(out)
    if isinstance(f, VectorField):
        return VectorField.from_array(out)
    return out


def coefficients(values) -> np.ndarray:
    """Fourier coefficients along the last axis, numpy FFT order."""
    values = np.asarray(values)
    n = values.shape[-1]
    return np.fft.fft(values, axis=-1) * (_phase(n) / n)


def _apply(f, multiplier):
    v = np.asarray(_vals(f), dtype=float)
    out = np.fft.ifft(np.fft.fft(v, axis=-1) * multiplier, axis=-1).real
    return _wrap_like(f, out)


@lru_cache(maxsize=None)
def _deriv_multiplier(n, order):
    k = wavenumbers(n)
    m = (1j * k) ** order
    if order % 2:
        m[n // 2] = 0.0
    return _readonly(m)


def deriv(f, order: int = 1):
    """Spectral derivative of the given order (1..4)."""
    if int(order) != order or order < 1:
        raise ValueError("derivative order must be a positive integer")
    if order > MAX_DERIV_ORDER:
        raise ValueError(f"derivative order {order} unsupported (max {MAX_DERIV_ORDER})")
    return _apply(f, _deriv_multiplier(np.shape(_vals(f))[-1], int(order)))


@lru_cache(maxsize=None)
def _log_weight(n):
    return _readonly(1.0 / np.log(np.abs(wavenumbers(n)) + np.e))


@lru_cache(maxsize=None)
def _dlog_multiplier(n):
    m = 1j * wavenumbers(n) * _log_weight(n)
    m[n // 2] = 0.0
    return _readonly(m)


def d_log(f):
    """Logarithmically damped derivative, symbol i k / log(|k| + e).

    Equal to ``deriv(i_log(f))``; the factor i keeps real inputs real.
    """
    return _apply(f, _dlog_multiplier(np.shape(_vals(f))[-1]))


def i_log(f):
    """Logarithmic potential, symbol 1 / log(|k| + e)."""
    return _apply(f, _log_weight(np.shape(_vals(f))[-1]))


def _cin(x):
    # Cin(x) = int_0^x (1 - cos t)/t dt = euler_gamma + log x - Ci(x)
    return np.euler_gamma + np.log(x) - sici(x)[1]


@lru_cache(maxsize=None)
def L_multiplier(n: int) -> np.ndarray:
    """Symbol of f -> int_{-pi}^{pi} (f(g) - f(g - e)) / |e| de, FFT order.

    m(k) = 2 int_0^pi (1 - cos k e)/e de = 2 Cin(|k| pi), m(0) = 0.
    """
    k = np.abs(wavenumbers(n)).astype(float)
    m = np.zeros(n)
    nz = k > 0
    m[nz] = 2.0 * _cin(np.pi * k[nz])
    return _readonly(m)


@lru_cache(maxsize=None)
def chord_multiplier(n: int) -> np.ndarray:
    """Symbol of f -> int (f(g) - f(g - e)) / (2 |sin(e/2)|) de, FFT order.

    Exactly 4 * sum_{j=1}^{|k|} 1/(2j - 1).
    """
    k = np.abs(wavenumbers(n))
    partial = np.concatenate([[0.0], np.cumsum(4.0 / (2.0 * np.arange(1, n // 2 + 1) - 1.0))])
    return _readonly(partial[k])


def op_L(f):
    return _apply(f, L_multiplier(np.shape(_vals(f))[-1]))


def op_chord(f):
    """Periodic-kernel analogue of :func:`op_L` (chord length of the unit circle)."""
    return _apply(f, chord_multiplier(np.shape(_vals(f))[-1]))


@lru_cache(maxsize=None)
def _antideriv_multiplier(n):
    k = wavenumbers(n)
    m = np.zeros(n, dtype=complex)
    nz = k != 0
    m[nz] = 1.0 / (1j * k[nz])
    m[n // 2] = 0.0
    return _readonly(m)


def antideriv_from(f):
    """G(g) = int_{-pi}^{g} f, with G(-pi) = 0 exactly.

    The mean-free part is integrated spectrally; the mean contributes
    mean * (g + pi), so G is periodic only when f has zero mean.
    """
    v = np.asarray(_vals(f), dtype=float)
    n = v.shape[-1]
    mean = v.mean(axis=-1, keepdims=True)
    prim = np.fft.ifft(np.fft.fft(v, axis=-1) * _antideriv_multiplier(n), axis=-1).real
    out = prim - prim[..., :1] + mean * (_nodes(n) + np.pi)
    out[..., 0] = 0.0
    return out


def interp(f, points, order: int = 0):
    """Evaluate the trigonometric interpolant (or its derivative) at points.

    Nyquist content is represented by f_hat(-n/2) cos(n p / 2), the real
    interpolant that reproduces the grid values.  ``order`` selects a
    derivative of the interpolant (0, 1 or 2); derivatives drop Nyquist.
    """
    v = np.asarray(_vals(f), dtype=float)
    pts = np.asarray(points, dtype=float)
    n = v.shape[-1]
    c = coefficients(v)
    k = np.arange(1, n // 2)
    arg = np.multiply.outer(pts, k)
    ck = c[..., 1 : n // 2]
    if order == 0:
        e = np.exp(1j * arg)
        out = c[..., :1].real + 2.0 * np.einsum("...k,pk->...p", ck, e).real
        out = out + c[..., n // 2 : n // 2 + 1].real * np.cos(0.5 * n * pts)
    elif order in (1, 2):
        e = np.exp(1j * arg) * (1j * k) ** order
        out = 2.0 * np.einsum("...k,pk->...p", ck, e).real
    else:
        raise ValueError("interp supports derivative orders 0, 1, 2")
    return out


def upsample(f, factor: int):
    """Values of the trigonometric interpolant on grid(factor * n)."""
    v = np.asarray(_vals(f), dtype=float)
    n = v.shape[-1]
    m = n * int(factor)
    c = coefficients(v)
    big = np.zeros(v.shape[:-1] + (m,), dtype=complex)
    big[..., : n // 2] = c[..., : n // 2]
    big[..., m - n // 2 + 1 :] = c[..., n // 2 + 1 :]
    # split Nyquist symmetrically so the result stays real
    big[..., n // 2] = 0.5 * c[..., n // 2]
    big[..., m - n // 2] = 0.5 * c[..., n // 2]
    big = big * _phase(m)
    return np.fft.ifft(big * m, axis=-1).real


def _coeff_sq(f):
    c = coefficients(np.asarray(_vals(f), dtype=float))
    sq = np.abs(c) ** 2
    if sq.ndim > 1:
        sq = sq.reshape(-1, sq.shape[-1]).sum(axis=0)
    return sq


def norm(f, kind: str = "L2", k: int = 0, delta: float = 0.5) -> float:
    """Diagnostic norms of a scalar or vector field.

    kind: ``"L2"`` (Parseval, 2pi sum |f_hat|^2), ``"Hk"`` (weights
    (1 + j^2)^k, times 2pi), ``"HkLog"`` (weights |j|^2k / log^2(|j| + e)),
    ``"Sup"``, or ``"HolderSemi"`` (grid maximum, a lower bound of the true
    seminorm).  Vector fields combine components in the Euclidean sense.
    """
    v = np.asarray(_vals(f), dtype=float)
    n = v.shape[-1]
    if kind in ("Hk", "HkLog") and not 0 <= k <= MAX_DERIV_ORDER:
        raise ValueError(f"Sobolev index {k} unsupported")
    if kind == "L2":
        return float(np.sqrt(2.0 * np.pi * _coeff_sq(v).sum()))
    if kind == "Hk":
        j = wavenumbers(n).astype(float)
        return float(np.sqrt(2.0 * np.pi * ((1.0 + j * j) ** k * _coeff_sq(v)).sum()))
    if kind == "HkLog":
        j = np.abs(wavenumbers(n)).astype(float)
        w = j ** (2 * k) * _log_weight(n) ** 2
        return float(np.sqrt((w * _coeff_sq(v)).sum()))
    if kind == "Sup":
        if v.ndim > 1:
            return float(np.sqrt((v.reshape(-1, n) ** 2).sum(axis=0)).max())
        return float(np.abs(v).max())
    if kind == "HolderSemi":
        vv = v.reshape(-1, n)
        diff = np.sqrt(((vv[:, :, None] - vv[:, None, :]) ** 2).sum(axis=0))
        idx = np.arange(n)
        sep = np.abs(idx[:, None] - idx[None, :])
        dist = (2.0 * np.pi / n) * np.minimum(sep, n - sep)
        np.fill_diagonal(dist, np.inf)
        return float((diff / dist**delta).max())
    raise ValueError(f"unknown norm kind {kind!r}")

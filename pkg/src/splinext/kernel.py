"""Centered cardinal B-splines, their samples and periodized translates.

The centered B-spline of degree ``p`` is the ``p``-fold convolution of the
indicator of ``[-1/2, 1/2)`` with itself; its support is
``[-(p+1)/2, (p+1)/2]``.  Evaluation uses the Cox-de Boor recursion on the
uniform knots ``-(p+1)/2, ..., (p+1)/2`` so values are exact piecewise
polynomials (no numerical convolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Normalization = Literal["l2", "sample"]


def _check_degree(p: int) -> int:
    p = int(p)
    if p < 0:
        raise ValueError(f"spline degree must be non-negative, got {p}")
    return p


def bspline(p: int, t):
    """Evaluate the centered B-spline of degree `p` at `t`.

    Parameters
    ----------
    p : int
        Polynomial degree (``p = 0`` is the indicator of ``[-1/2, 1/2)``).
    t : float or array_like
        Evaluation points.

    Returns
    -------
    float or ndarray
        ``beta^p(t)``, zero outside the support.  Knots are right-continuous,
        which only matters for ``p = 0``.
    """
    p = _check_degree(p)
    t_arr = np.asarray(t, dtype=float)
    # beta^p is even for p > 0; evaluating at |t| makes samples bit-symmetric
    u = t_arr.ravel() if p == 0 else np.abs(t_arr.ravel())
    x = u + 0.5 * (p + 1)
    # degree-0 pieces on [j, j+1), j = 0..p
    basis = np.empty((p + 1, x.size))
    for j in range(p + 1):
        basis[j] = (x >= j) & (x < j + 1)
    for k in range(1, p + 1):
        for j in range(p + 1 - k):
            basis[j] = ((x - j) * basis[j] + (j + k + 1 - x) * basis[j + 1]) / k
    out = basis[0].reshape(t_arr.shape)
    if out.ndim == 0:
        return float(out)
    return out


def support_radius(p: int, q: int) -> int:
    """Largest ``|k|`` with ``beta^p(k/q) != 0``.

    For ``p > 0`` this is ``ceil(q(p+1)/2 - 1)``.  For ``p = 0`` the sampled
    indicator lives on ``ceil(-q/2) .. ceil(q/2) - 1`` and the radius is the
    larger of the two end-point magnitudes.
    """
    p = _check_degree(p)
    q = int(q)
    if q < 1:
        raise ValueError(f"oversampling factor must be >= 1, got {q}")
    if p == 0:
        lo, hi = _degree0_window(q)
        return max(-lo, hi)
    # q(p+1)/2 - 1 is a multiple of 1/2, so ceil on the doubled integer is exact
    return -((-(q * (p + 1) - 2)) // 2)


def _degree0_window(q: int) -> tuple[int, int]:
    lo = -(q // 2)
    hi = -(-q // 2) - 1
    return lo, hi


@dataclass(frozen=True)
class SampledSpline:
    """Samples ``b_q(k) = beta^p(k/q)`` on the symmetric window ``[-Q, Q]``."""

    p: int
    q: int
    values: np.ndarray

    @property
    def radius(self) -> int:
        return (self.values.size - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1)

    def __call__(self, k):
        """Look up ``b_q`` at integer offsets, zero outside the window."""
        k = np.asarray(k)
        r = self.radius
        inside = np.abs(k) <= r
        out = np.zeros(k.shape)
        out[inside] = self.values[k[inside] + r]
        return out

    def support(self) -> np.ndarray:
        """Integer offsets where the sample is nonzero."""
        return self.indices[self.values != 0]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def sample_spline(p: int, q: int) -> SampledSpline:
    """Sample the degree-`p` B-spline on the lattice ``k/q``."""
    Q = support_radius(p, q)
    k = np.arange(-Q, Q + 1)
    values = np.atleast_1d(bspline(p, k / int(q)))
    values.setflags(write=False)
    return SampledSpline(int(p), int(q), values)


@dataclass(frozen=True)
class PeriodizedBasis:
    """``N`` one-periodic translates of the scaled, periodized B-spline.

    With ``normalization="l2"`` the mother function carries the factor
    ``sqrt(N)`` so its L2(0,1) norm matches that of ``beta^p``; with
    ``"sample"`` the factor is 1 and point samples do not depend on ``N``.
    """

    p: int
    N: int
    normalization: Normalization = "l2"

    def __post_init__(self):
        _check_degree(self.p)
        if self.N < 1:
            raise ValueError("basis size must be positive")
        if self.normalization not in ("l2", "sample"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def scale(self) -> float:
        return math.sqrt(self.N) if self.normalization == "l2" else 1.0

    def check_grid(self, q: int) -> None:
        """Raise if a translate would overlap itself on the ``qN`` grid."""
        Q = support_radius(self.p, q)
        if q * self.N < 2 * Q + 1:
            raise ValueError(
                f"grid of {q * self.N} points is too coarse for degree {self.p} "
                f"(needs at least {2 * Q + 1})"
            )

    def __call__(self, k, t):
        """Evaluate translate ``k`` at ``t``."""
        N = self.N
        t = np.asarray(t, dtype=float)
        u = np.mod(N * t - np.asarray(k), N)
        halfwidth = 0.5 * (self.p + 1)
        m = math.ceil(halfwidth / N)
        out = np.zeros(np.broadcast(u, t).shape)
        for s in range(-m, m + 2):
            out = out + bspline(self.p, u - s * N)
        out = self.scale * out
        if out.ndim == 0:
            return float(out)
        return out


def characteristic_function(p: int, omega):
    """Fourier symbol of the integer samples of ``beta^p``.

    ``u(w) = sum_k beta^p(k) exp(-i w k)``.  The B-spline is even, so this is
    the real cosine polynomial ``beta(0) + 2 sum_{k>=1} beta(k) cos(k w)``.
    """
    p = _check_degree(p)
    omega = np.asarray(omega, dtype=float)
    b = sample_spline(p, 1)
    out = b.values[b.radius] * np.ones_like(omega)
    for k in range(1, b.radius + 1):
        out = out + 2.0 * b.values[b.radius + k] * np.cos(k * omega)
    if out.ndim == 0:
        return float(out)
    return out


def sampled_symbol(p: int, q: int, omega):
    """Discrete-time Fourier transform of ``b_q``; complex in general."""
    b = sample_spline(p, q)
    omega = np.asarray(omega, dtype=float)
    k = b.indices
    return np.exp(-1j * np.multiply.outer(omega, k)) @ b.values

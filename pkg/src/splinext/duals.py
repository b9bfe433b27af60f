"""Dual generators of the periodized B-spline basis.

Four families are available:

* continuous duals, biorthogonal in L2(0,1), from the inverse Gram circulant;
* discrete duals, biorthogonal for the pairing ``sum_j f(j/qN) g(j/qN)``,
  from the inverse of the downsampled autocorrelation ``[b_q * b_q]_{down q}``;
* truncated versions of either, keeping a symmetric band of coefficients;
* compactly supported discrete duals ``w`` on ``[-K, K]`` solving
  ``sum_k w(k) b_q(k - q l) = delta_l``.

Every family can be turned into a :class:`GridStencil`, the periodic sequence
of dual-function samples on the ``qN`` lattice, which is what the ``Z``
matrix is assembled from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import NoCompactDual, NormCapUnreachable, SingularCirculant
from .kernel import bspline, sample_spline
from .spectral import DEFAULT_SINGULAR_TOL, Circulant, periodic_upsample_convolve

BIORTHOGONALITY_TOL = 1e-10


def periodize_sequence(values, n: int, offset: int | None = None) -> np.ndarray:
    """Fold a finitely supported sequence onto ``Z_n`` by wrap-around sums.

    ``values[i]`` sits at integer position ``offset + i``; by default the
    sequence is taken to be centered, i.e. ``offset = -(len(values) - 1) // 2``.
    """
    values = np.asarray(values, dtype=float)
    if n < 1:
        raise ValueError("period must be positive")
    if offset is None:
        offset = -((values.size - 1) // 2)
    out = np.zeros(n)
    np.add.at(out, (offset + np.arange(values.size)) % n, values)
    return out


@dataclass(frozen=True)
class GridStencil:
    """Periodic sequence on the ``qN`` lattice.

    ``values[j]`` holds the sample at offset ``j`` (mod ``qN``) from the
    center ``q*l`` of translate ``l``.  If ``radius`` is set, every offset with
    circular magnitude above it is exactly zero.
    """

    values: np.ndarray
    q: int
    N: int
    radius: int | None

    @property
    def period(self) -> int:
        return self.q * self.N

    @property
    def is_dense(self) -> bool:
        return self.radius is None or 2 * self.radius + 1 >= self.period

    def window(self) -> tuple[np.ndarray, np.ndarray]:
        """Offsets in ``[-radius, radius]`` and the matching values."""
        if self.is_dense:
            offsets = np.arange(self.period) - self.period // 2
        else:
            offsets = np.arange(-self.radius, self.radius + 1)
        return offsets, self.values[offsets % self.period]


def primal_stencil(p: int, q: int, N: int) -> GridStencil:
    """Samples of the sample-scaled periodized B-spline on the ``qN`` grid."""
    b = sample_spline(p, q)
    if q * N < 2 * b.radius + 1:
        raise ValueError(f"qN = {q * N} is too small for degree {p} (needs >= {2 * b.radius + 1})")
    return GridStencil(periodize_sequence(b.values, q * N), q, N, b.radius)


def discrete_pairing(primal: GridStencil, dual: GridStencil) -> np.ndarray:
    """``P[n] = sum_j primal(j) dual(j + q n)`` for ``n = 0..N-1``.

    By shift invariance this is the full pairing matrix
    ``<phi_k, dual_l> = P[(k - l) mod N]``; biorthogonality means ``P = e_0``.
    """
    q, N = primal.q, primal.N
    L = q * N
    out = np.empty(N)
    for n in range(N):
        out[n] = primal.values @ np.roll(dual.values, -q * n)[:L]
    return out


# --------------------------------------------------------------------------
# Gram-based duals


@dataclass(frozen=True)
class DualCoefficients:
    """Periodic expansion coefficients of a dual mother function.

    For ``kind="continuous"`` the dual is ``sum_k c(k) phi_{N,k}`` with the
    L2-scaled basis; for ``kind="discrete"`` the sample-scaled basis is used.
    """

    kind: Literal["continuous", "discrete"]
    p: int
    q: int | None
    N: int
    coeffs: np.ndarray

    def grid_stencil(self) -> GridStencil:
        """Dual-function samples ``sum_k c(k) b_q(j - q k)`` on the ``qN`` grid."""
        if self.kind != "discrete":
            raise ValueError("grid samples are defined for discrete duals only")
        return _coeff_stencil(self.coeffs, self.p, self.q, self.N, None)


def _coeff_stencil(coeffs, p, q, N, band):
    b = primal_stencil(p, q, N)
    values = periodic_upsample_convolve(coeffs, b.values, q)
    radius = None if band is None else q * band + b.radius
    if radius is not None and 2 * radius + 1 >= q * N:
        radius = None
    if radius is not None:
        # kill round-off outside the exact band
        offsets = np.arange(q * N)
        dist = np.minimum(offsets, q * N - offsets)
        values = np.where(dist <= radius, values, 0.0)
    return GridStencil(values, q, N, radius)


def continuous_gram_column(p: int, N: int) -> np.ndarray:
    """First column of the L2(0,1) Gram matrix of the periodized basis.

    Uses ``(beta^p * beta^p)(k) = beta^{2p+1}(k)``: the entries are periodized
    integer samples of the degree ``2p+1`` B-spline.
    """
    r = p + 1
    k = np.arange(-r, r + 1)
    return periodize_sequence(bspline(2 * p + 1, k), N, offset=-r)


def continuous_dual_coeffs(p: int, N: int) -> DualCoefficients:
    """Coefficients ``c`` with ``G_N c = e_0`` for the L2 Gram circulant."""
    e0 = np.zeros(N)
    e0[0] = 1.0
    c = Circulant(continuous_gram_column(p, N)).solve(e0)
    return DualCoefficients("continuous", int(p), None, int(N), c)


def discrete_gram_sequence(p: int, q: int) -> tuple[int, np.ndarray]:
    """The downsampled self-convolution ``[b_q * b_q]_{down q}``.

    Returns ``(offset, values)`` where ``values[i]`` sits at integer position
    ``offset + i``.  For symmetric samples (``p > 0`` or odd ``q``) the
    convolution equals the discrete Gram sequence.
    """
    b = sample_spline(p, q)
    conv = np.convolve(b.values, b.values)
    start = -2 * b.radius
    positions = start + np.arange(conv.size)
    keep = positions % q == 0
    down = conv[keep]
    first = positions[keep][0] // q
    nz = np.flatnonzero(down)
    return int(first + nz[0]), down[nz[0] : nz[-1] + 1]


def discrete_symbol(p: int, q: int, omega) -> np.ndarray:
    offset, values = discrete_gram_sequence(p, q)
    k = offset + np.arange(values.size)
    return np.exp(-1j * np.multiply.outer(np.asarray(omega, dtype=float), k)) @ values


def discrete_dual_coeffs(
    p: int, q: int, N: int, tol_singular: float = DEFAULT_SINGULAR_TOL
) -> DualCoefficients:
    """Periodized inverse of the downsampled self-convolution of ``b_q``.

    Raises
    ------
    SingularCirculant
        When the symbol of ``[b_q * b_q]_{down q}`` vanishes on the unit
        circle (the case ``p = 0, q = 2``), even if no DFT frequency of
        length ``N`` hits the zero.
    """
    omega = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
    sym = np.abs(discrete_symbol(p, q, omega))
    if sym.min() <= tol_singular * sym.max():
        raise SingularCirculant(
            f"symbol of the discrete Gram sequence vanishes on the unit circle (p={p}, q={q})"
        )
    offset, values = discrete_gram_sequence(p, q)
    col = periodize_sequence(values, N, offset=offset)
    e0 = np.zeros(N)
    e0[0] = 1.0
    c = Circulant(col).solve(e0, tol_singular=tol_singular)
    return DualCoefficients("discrete", int(p), int(q), int(N), c)


# --------------------------------------------------------------------------
# truncation


@dataclass(frozen=True)
class TruncatedDual:
    """A Gram-based dual restricted to the band ``|k| <= band_radius``."""

    base: DualCoefficients
    eps: float
    band_radius: int
    coeffs: np.ndarray

    @property
    def grid_radius(self) -> int:
        """Support half-width of the truncated dual samples, in grid steps."""
        if self.base.q is None:
            raise ValueError("grid radius is defined for discrete duals only")
        return self.base.q * self.band_radius + sample_spline(self.base.p, self.base.q).radius

    def grid_stencil(self) -> GridStencil:
        b = self.base
        if b.kind != "discrete":
            raise ValueError("grid samples are defined for discrete duals only")
        return _coeff_stencil(self.coeffs, b.p, b.q, b.N, self.band_radius)


def truncate_dual(base: DualCoefficients, eps: float) -> TruncatedDual:
    """Keep the smallest symmetric band outside which all ``|c(k)| < eps``."""
    if not eps > 0:
        raise ValueError("truncation threshold must be positive")
    c = base.coeffs
    N = c.size
    k = np.arange(N)
    dist = np.minimum(k, N - k)
    big = np.abs(c) >= eps
    radius = int(dist[big].max()) if big.any() else 0
    kept = np.where(dist <= radius, c, 0.0)
    return TruncatedDual(base, float(eps), radius, kept)


# --------------------------------------------------------------------------
# compact duals


@dataclass(frozen=True)
class CompactDualSequence:
    """Finitely supported ``w`` on ``[-K, K]`` dual to ``b_q`` under ``q``-shifts."""

    p: int
    q: int
    K: int
    values: np.ndarray
    norm_cap: float | None = None

    @property
    def L(self) -> int:
        return (self.K + sample_spline(self.p, self.q).radius) // self.q

    def residual(self) -> float:
        """Max violation of ``sum_k w(k) b_q(k - q l) = delta_l`` over ``|l| <= L``."""
        A = compact_system(self.p, self.q, self.K)
        rhs = np.zeros(A.shape[0])
        rhs[A.shape[0] // 2] = 1.0
        return float(np.max(np.abs(A @ self.values - rhs)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def grid_stencil(self, N: int) -> GridStencil:
        period = self.q * N
        radius = self.K if 2 * self.K + 1 < period else None
        return GridStencil(periodize_sequence(self.values, period, offset=-self.K), self.q, N, radius)


def compact_dual_min_support(p: int, q: int) -> int:
    """Smallest half-width ``K`` for which a compact dual is guaranteed."""
    if q <= 1:
        raise ValueError("compact duals need oversampling q > 1")
    bound = (p + 1) / 2 * q / (q - 1) - (q + 1) / (q - 1)
    if p % 2 == 0:
        bound = math.ceil(bound - 1e-12)
    # strict inequality K > bound
    K = math.floor(bound + 1e-12) + 1
    return max(K, 0)


def compact_system(p: int, q: int, K: int) -> np.ndarray:
    """Matrix ``S[l, k] = b_q(k - q l)`` for ``|l| <= L``, ``|k| <= K``."""
    b = sample_spline(p, q)
    L = (K + b.radius) // q
    l = np.arange(-L, L + 1)
    k = np.arange(-K, K + 1)
    return b(k[None, :] - q * l[:, None])


def _solve_compact(p, q, K):
    A = compact_system(p, q, K)
    rhs = np.zeros(A.shape[0])
    rhs[A.shape[0] // 2] = 1.0
    w, *_ = np.linalg.lstsq(A, rhs, rcond=1e-12)
    res = np.max(np.abs(A @ w - rhs))
    return w, res


def compact_dual(
    p: int, q: int, K: int | None = None, norm_cap: float | None = None
) -> CompactDualSequence:
    """Minimum-norm compactly supported discrete dual.

    Parameters
    ----------
    p, q : int
        Spline degree and oversampling factor (``q > 1``).
    K : int, optional
        Support half-width; defaults to :func:`compact_dual_min_support`.
    norm_cap : float, optional
        Absolute bound ``M_abs``.  ``K`` is grown one step at a time until
        ``max|w| <= M_abs / max|b_q|``.

    Raises
    ------
    NoCompactDual
        If the linear system has no exact solution at the given ``K``.
    NormCapUnreachable
        If the cap is still violated at ``K = max(10 K_min, 10)``.
    """
    if q <= 1:
        raise ValueError("compact duals need oversampling q > 1")
    k_min = compact_dual_min_support(p, q)
    K = k_min if K is None else int(K)
    if K < 0:
        raise ValueError("support half-width must be non-negative")
    limit = max(10 * k_min, 10, K)
    cap_rel = None
    if norm_cap is not None and math.isfinite(norm_cap):
        cap_rel = norm_cap / sample_spline(p, q).sup_norm()
    while True:
        w, res = _solve_compact(p, q, K)
        if res > BIORTHOGONALITY_TOL:
            if cap_rel is None or K >= limit:
                raise NoCompactDual(f"no dual of support [-{K}, {K}] for p={p}, q={q} (residual {res:.2e})")
        elif cap_rel is None or np.max(np.abs(w)) <= cap_rel:
            return CompactDualSequence(int(p), int(q), K, w, norm_cap)
        if K >= limit:
            raise NormCapUnreachable(
                f"sup norm {np.max(np.abs(w)):.3g} still exceeds {cap_rel:.3g} at K={K}"
            )
        K += 1

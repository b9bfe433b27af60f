"""DFT helpers and circulant matrix algebra.

Transforms are delegated to :mod:`numpy.fft` (pocketfft), which handles any
length in ``O(n log n)`` by mixed-radix or Bluestein factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularCirculant

DEFAULT_SINGULAR_TOL = 1e-13


def dft(x) -> np.ndarray:
    """Unnormalized forward DFT, ``X_j = sum_k x_k exp(-2 pi i jk/n)``."""
    return np.fft.fft(np.asarray(x))


def idft(X) -> np.ndarray:
    """Inverse of :func:`dft` (carries the ``1/n`` factor)."""
    return np.fft.ifft(np.asarray(X))


def _maybe_real(y, *inputs):
    if all(np.isrealobj(a) for a in inputs):
        return y.real
    return y


@dataclass(frozen=True)
class Circulant:
    """Circulant matrix with ``C[i, j] = first_column[(i - j) mod n]``."""

    first_column: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        col = np.array(self.first_column)
        if col.ndim != 1 or col.size == 0:
            raise ValueError("first column must be a non-empty 1-D sequence")
        col.setflags(write=False)
        eig = dft(col)
        eig.setflags(write=False)
        object.__setattr__(self, "first_column", col)
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def n(self) -> int:
        return self.first_column.size

    def dense(self) -> np.ndarray:
        i = np.arange(self.n)
        return self.first_column[(i[:, None] - i[None, :]) % self.n]

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        y = idft(self.eigenvalues * dft(x))
        return _maybe_real(y, self.first_column, x)

    def apply_transpose(self, x) -> np.ndarray:
        x = np.asarray(x)
        y = idft(np.conj(self.eigenvalues) * dft(x))
        return _maybe_real(y, self.first_column, x)

    def solve(self, b, tol_singular: float = DEFAULT_SINGULAR_TOL) -> np.ndarray:
        """Solve ``C x = b`` through the eigen-decomposition.

        Raises
        ------
        SingularCirculant
            If some eigenvalue has modulus at most ``tol_singular`` times the
            largest modulus.
        """
        mod = np.abs(self.eigenvalues)
        bound = tol_singular * mod.max()
        if mod.max() == 0 or np.any(mod <= bound):
            j = int(np.argmin(mod))
            raise SingularCirculant(
                f"circulant eigenvalue {self.eigenvalues[j]:.3e} at frequency index {j} "
                f"is below {bound:.3e}"
            )
        b = np.asarray(b)
        x = idft(dft(b) / self.eigenvalues)
        return _maybe_real(x, self.first_column, b)


def circulant_apply(C: Circulant, x) -> np.ndarray:
    return C.apply(x)


def circulant_solve(C: Circulant, b, tol_singular: float = DEFAULT_SINGULAR_TOL) -> np.ndarray:
    return C.solve(b, tol_singular=tol_singular)


def periodic_correlate(x, h, step: int = 1) -> np.ndarray:
    """``y[l] = sum_j x[j] h[(j - step*l) mod n]`` for ``l = 0..n/step-1``.

    Cyclic cross-correlation followed by downsampling; ``x`` and ``h`` share
    the period ``n`` along the last axis.
    """
    x = np.asarray(x)
    h = np.asarray(h)
    full = np.fft.ifft(np.fft.fft(x, axis=-1) * np.conj(np.fft.fft(h)), axis=-1)
    full = _maybe_real(full, x, h)
    return full[..., ::step]


def periodic_upsample_convolve(c, h, step: int = 1) -> np.ndarray:
    """``y[j] = sum_l c[l] h[(j - step*l) mod n]`` with ``n = step*len(c)``."""
    c = np.asarray(c)
    h = np.asarray(h)
    n = h.size
    up = np.zeros(c.shape[:-1] + (n,), dtype=np.result_type(c, float))
    up[..., ::step] = c
    full = np.fft.ifft(np.fft.fft(up, axis=-1) * np.fft.fft(h), axis=-1)
    return _maybe_real(full, c, h)

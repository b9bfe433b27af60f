"""Collocation matrix ``A``, dual matrix ``Z`` and the structure of ``A - A Z^* A``.

All matrices act on grid points ``t_m`` (rows, in :class:`MaskedGrid` order)
and on tensor-product basis indices ``l`` in row-major order (columns).  Both
``A`` and ``Z`` are built from per-dimension :class:`~splinext.duals.GridStencil`
tables indexed by lattice offsets ``k_i - q_i l_i (mod q_i N_i)``; no
floating-point coordinate wrapping is involved, so the sparsity pattern is
exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .duals import GridStencil, compact_dual, discrete_dual_coeffs, primal_stencil, truncate_dual
from .errors import UnsupportedZspec
from .geometry import Domain, MaskedGrid, _as_tuple, boundary_index_set, build_masked_grid

STRUCT_TOL = 1e-12


# --------------------------------------------------------------------------
# dual selection


@dataclass(frozen=True)
class DualSpec:
    """Which dual generates ``Z``.

    ``kind`` is ``"gram"`` (exact discrete dual, dense circulant action),
    ``"truncated"`` (banded, threshold ``eps``) or ``"compact"`` (finite
    support ``K``, optional absolute norm cap).
    """

    kind: str = "compact"
    eps: float | None = None
    K: int | None = None
    norm_cap: float | None = None

    def __post_init__(self):
        if self.kind not in ("gram", "truncated", "compact"):
            raise ValueError(f"unknown dual kind {self.kind!r}")
        if self.kind == "truncated" and not (self.eps and self.eps > 0):
            raise ValueError("truncated duals need a positive threshold")

    @classmethod
    def parse(cls, text: str) -> "DualSpec":
        """Parse ``gram``, ``truncated:EPS`` or ``compact[:K][:MABS]``."""
        parts = text.strip().split(":")
        kind = parts[0].lower()
        if kind == "gram" and len(parts) == 1:
            return cls("gram")
        if kind == "truncated" and len(parts) == 2:
            return cls("truncated", eps=float(parts[1]))
        if kind == "compact" and len(parts) <= 3:
            K = int(parts[1]) if len(parts) > 1 and parts[1] else None
            cap = float(parts[2]) if len(parts) > 2 and parts[2] else None
            return cls("compact", K=K, norm_cap=cap)
        raise ValueError(f"cannot parse dual specification {text!r}")

    def __str__(self) -> str:
        if self.kind == "truncated":
            return f"truncated:{self.eps:g}"
        if self.kind == "compact":
            s = "compact"
            if self.K is not None or self.norm_cap is not None:
                s += f":{'' if self.K is None else self.K}"
            if self.norm_cap is not None:
                s += f":{self.norm_cap:g}"
            return s
        return "gram"

    @property
    def is_sparse(self) -> bool:
        return self.kind != "gram"

    def stencil(self, p: int, q: int, N: int) -> GridStencil:
        return _dual_stencil(self, int(p), int(q), int(N))


@lru_cache(maxsize=128)
def _dual_stencil(spec: DualSpec, p: int, q: int, N: int) -> GridStencil:
    if spec.kind == "compact":
        w = compact_dual(p, q, K=spec.K, norm_cap=spec.norm_cap)
        return w.grid_stencil(N)
    base = discrete_dual_coeffs(p, q, N)
    if spec.kind == "truncated":
        return truncate_dual(base, spec.eps).grid_stencil()
    return base.grid_stencil()


# --------------------------------------------------------------------------
# tensor-product assembly


def _stencil_table(stencil: GridStencil) -> tuple[np.ndarray, np.ndarray]:
    """For every lattice coordinate ``j``, the basis indices and values it touches."""
    q, N, L = stencil.q, stencil.N, stencil.period
    offsets, values = stencil.window()
    j = np.arange(L)
    # offsets o with (j - o) divisible by q contribute l = (j - o)/q mod N
    width = -(-offsets.size // q)
    cols = np.zeros((L, width), dtype=np.int64)
    vals = np.zeros((L, width))
    for r in range(q):
        sel = offsets[(offsets - r) % q == 0] if offsets.size else offsets
        sel_vals = values[(offsets - r) % q == 0]
        rows = j[j % q == r]
        n = sel.size
        cols[rows, :n] = ((rows[:, None] - sel[None, :]) // q) % N
        vals[rows, :n] = sel_vals[None, :]
    return cols, vals


def tensor_matrix(grid: MaskedGrid, stencils: Sequence[GridStencil]) -> sp.csc_matrix:
    """Sparse ``M x N`` matrix with entries ``prod_i s_i(k_{m,i} - q_i l_i)``."""
    M = grid.M
    cols = np.zeros((M, 1), dtype=np.int64)
    vals = np.ones((M, 1))
    for axis, st in enumerate(stencils):
        tc, tv = _stencil_table(st)
        k = grid.points[:, axis]
        c_ax, v_ax = tc[k], tv[k]
        cols = (cols[:, :, None] * grid.N[axis] + c_ax[:, None, :]).reshape(M, -1)
        vals = (vals[:, :, None] * v_ax[:, None, :]).reshape(M, -1)
    rows = np.repeat(np.arange(M), cols.shape[1])
    keep = vals.ravel() != 0
    mat = sp.csc_matrix(
        (vals.ravel()[keep], (rows[keep], cols.ravel()[keep])), shape=(M, grid.n_basis)
    )
    mat.sum_duplicates()
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def _lattice_scatter(grid: MaskedGrid, y: np.ndarray) -> np.ndarray:
    """Embed point values (``M`` or ``M x r``) into the full lattice, zeros elsewhere."""
    y = np.asarray(y)
    extra = y.shape[1:]
    full = np.zeros((int(np.prod(grid.shape)),) + extra, dtype=y.dtype)
    full[grid.linear] = y
    return full.reshape(grid.shape + extra)


def _axis_correlate(x, h, step, axis):
    x = np.moveaxis(x, axis, -1)
    X = np.fft.fft(x, axis=-1) * np.conj(np.fft.fft(h))
    out = np.fft.ifft(X, axis=-1).real[..., ::step]
    return np.moveaxis(out, -1, axis)


def _axis_upconvolve(c, h, step, axis):
    c = np.moveaxis(c, axis, -1)
    up = np.zeros(c.shape[:-1] + (h.size,))
    up[..., ::step] = c
    out = np.fft.ifft(np.fft.fft(up, axis=-1) * np.fft.fft(h), axis=-1).real
    return np.moveaxis(out, -1, axis)


# --------------------------------------------------------------------------
# the system


@dataclass(frozen=True, eq=False)
class ExtensionSystem:
    """Discrete least-squares system of a spline extension frame.

    Attributes
    ----------
    A : scipy.sparse.csc_matrix
        Collocation matrix ``A[m, l] = phi_l(t_m)`` (sample-scaled basis).
    Z : scipy.sparse.csc_matrix or None
        Dual matrix for sparse dual specs; ``None`` for ``gram``, whose action
        goes through per-dimension FFTs on the full lattice.
    """

    grid: MaskedGrid
    p: tuple[int, ...]
    dual: DualSpec
    primal: tuple[GridStencil, ...] = field(repr=False)
    dual_stencils: tuple[GridStencil, ...] = field(repr=False)
    A: sp.csc_matrix = field(repr=False)
    Z: sp.csc_matrix | None = field(repr=False)
    A_csr: sp.csr_matrix = field(repr=False)
    Z_csr: sp.csr_matrix | None = field(repr=False)

    @property
    def N(self) -> tuple[int, ...]:
        return self.grid.N

    @property
    def q(self) -> tuple[int, ...]:
        return self.grid.q

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def dim(self) -> int:
        return self.grid.dim

    def apply_A(self, x):
        return self.A @ x

    def apply_Astar(self, y):
        return self.A_csr.T @ y

    def apply_Z(self, x):
        if self.Z is not None:
            return self.Z @ x
        x = np.asarray(x, dtype=float)
        extra = x.shape[1:]
        X = x.reshape(self.N + extra)
        for axis, st in enumerate(self.dual_stencils):
            X = _axis_upconvolve(X, st.values, st.q, axis)
        flat = X.reshape((-1,) + extra)
        return flat[self.grid.linear]

    def apply_Zstar(self, y):
        """``Z^* y``; for the gram dual: scatter, circulant along each axis, restrict."""
        if self.Z_csr is not None:
            return self.Z_csr.T @ y
        y = np.asarray(y, dtype=float)
        extra = y.shape[1:]
        Y = _lattice_scatter(self.grid, y)
        for axis, st in enumerate(self.dual_stencils):
            Y = _axis_correlate(Y, st.values, st.q, axis)
        return Y.reshape((-1,) + extra)

    def Z_dense(self) -> np.ndarray:
        """Dense ``Z`` (desk-scale only)."""
        if self.Z is not None:
            return self.Z.toarray()
        return tensor_matrix(self.grid, [_dense(st) for st in self.dual_stencils]).toarray()

    @cached_property
    def boundary_set(self):
        return boundary_index_set(self.grid, self.p)

    def boundary(self):
        return self.boundary_set


def _dense(st: GridStencil) -> GridStencil:
    return GridStencil(st.values, st.q, st.N, None)


def build_system(domain_or_grid, p, N=None, q=2, dual: DualSpec | str = "compact") -> ExtensionSystem:
    """Assemble ``A`` and ``Z`` for a domain (or a prebuilt grid).

    Parameters
    ----------
    domain_or_grid : Domain or MaskedGrid
    p : int or sequence of int
        Spline degree per dimension.
    N, q : int or sequence of int
        Basis size and oversampling; ignored when a grid is passed.
    dual : DualSpec or str
    """
    if isinstance(dual, str):
        dual = DualSpec.parse(dual)
    if isinstance(domain_or_grid, MaskedGrid):
        grid = domain_or_grid
    elif isinstance(domain_or_grid, Domain):
        if N is None:
            raise ValueError("N is required when building from a domain")
        grid = build_masked_grid(domain_or_grid, N, q, p=p)
    else:
        raise TypeError("expected a Domain or a MaskedGrid")
    p = _as_tuple(p, grid.dim, "p")
    primal = tuple(primal_stencil(pi, qi, ni) for pi, qi, ni in zip(p, grid.q, grid.N))
    duals = tuple(dual.stencil(pi, qi, ni) for pi, qi, ni in zip(p, grid.q, grid.N))
    A = tensor_matrix(grid, primal)
    Z = tensor_matrix(grid, duals) if dual.is_sparse else None
    return ExtensionSystem(
        grid, p, dual, primal, duals, A, Z, A.tocsr(), None if Z is None else Z.tocsr()
    )


def assemble_A(grid: MaskedGrid, p) -> sp.csc_matrix:
    p = _as_tuple(p, grid.dim, "p")
    return tensor_matrix(grid, [primal_stencil(pi, qi, ni) for pi, qi, ni in zip(p, grid.q, grid.N)])


def assemble_Z(grid: MaskedGrid, p, dual: DualSpec | str) -> sp.csc_matrix:
    """Sparse ``Z`` for compact or truncated duals."""
    if isinstance(dual, str):
        dual = DualSpec.parse(dual)
    if not dual.is_sparse:
        raise UnsupportedZspec("the gram dual yields a dense Z; use ExtensionSystem.apply_Z")
    p = _as_tuple(p, grid.dim, "p")
    return tensor_matrix(grid, [dual.stencil(pi, qi, ni) for pi, qi, ni in zip(p, grid.q, grid.N)])


# --------------------------------------------------------------------------
# structure of A - A Z^* A


@dataclass(frozen=True)
class SparseResidualOperator:
    """``A - A Z^* A`` as a sparse matrix plus the index sets that built it."""

    matrix: sp.csc_matrix
    columns: np.ndarray
    rows: np.ndarray
    block: sp.csr_matrix = field(repr=False)

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)


def _selection(src: np.ndarray, dst: np.ndarray) -> sp.csr_matrix:
    """``S[a, b] = 1`` iff ``src[a] == dst[b]`` (both sorted, unique)."""
    common, ia, ib = np.intersect1d(src, dst, assume_unique=True, return_indices=True)
    return sp.csr_matrix((np.ones(common.size), (ia, ib)), shape=(src.size, dst.size))


def build_AmAZtA(system: ExtensionSystem, columns: np.ndarray | None = None) -> SparseResidualOperator:
    """Sparse ``A - A Z^* A`` from its boundary columns only.

    Steps: boundary set ``K``; rows ``Khat`` touched by ``A[:, K]``; the block
    ``R A E``; dual columns ``Ktil`` touched by ``Z[Khat, :]``; then
    ``Et^T (I - Z^* A) E = Et^T E - (R Z Et)^T R A E`` and
    ``A (I - Z^* A) E = A Et [Et^T (I - Z^* A) E]``, scattered to ``M x N``.
    Each product involves matrices whose dimensions are ``O(#K)``.
    """
    if system.Z is None:
        raise UnsupportedZspec("sparse construction needs a compact or truncated dual")
    A, A_csr, Z_csr = system.A, system.A_csr, system.Z_csr
    M, N = A.shape
    K = system.boundary().linear if columns is None else np.asarray(columns)
    if K.size == 0:
        empty = sp.csc_matrix((M, N))
        return SparseResidualOperator(empty, K, np.zeros(0, dtype=np.int64), sp.csr_matrix((0, 0)))
    AE = A[:, K]
    khat = np.unique(AE.indices)
    RAE = AE[khat, :]
    RZ = Z_csr[khat, :]
    ktil = np.union1d(np.unique(RZ.indices), K)
    RZEt = RZ[:, ktil]
    T = (_selection(ktil, K) - (RZEt.T @ RAE)).tocsc()
    AEt = A[:, ktil]
    rows2 = np.unique(AEt.indices)
    W = (A_csr[rows2][:, ktil] @ T).tocsr()
    W.eliminate_zeros()
    nonzero_rows = np.diff(W.indptr) > 0
    block = W[nonzero_rows]
    rows = rows2[nonzero_rows]
    coo = block.tocoo()
    full = sp.csc_matrix((coo.data, (rows[coo.row], K[coo.col])), shape=(M, N))
    full.sort_indices()
    return SparseResidualOperator(full, K, rows, block)


def dense_AmAZtA(system: ExtensionSystem) -> np.ndarray:
    """Brute-force dense ``A - A Z^* A`` (small systems only)."""
    A = system.A.toarray()
    Z = system.Z_dense()
    return A - A @ (Z.T @ A)


def residual_columns(system: ExtensionSystem, columns: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Dense ``(A - A Z^* A) E`` for the given columns via operator actions."""
    columns = np.asarray(columns)
    out = np.empty((system.A.shape[0], columns.size))
    for start in range(0, columns.size, chunk):
        AE = system.A[:, columns[start : start + chunk]].toarray()
        out[:, start : start + chunk] = AE - system.apply_A(system.apply_Zstar(AE))
    return out


@dataclass(frozen=True)
class CompressedBlock:
    """``R (A - A Z^* A) E``: rows ``rows`` and columns ``columns`` of the residual operator."""

    block: np.ndarray
    rows: np.ndarray
    columns: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.block.shape


def reduce_system(system: ExtensionSystem, columns: np.ndarray | None = None) -> CompressedBlock:
    """Compress ``A - A Z^* A`` to its nonzero rows and boundary columns.

    Sparse duals form ``A E - A (Z^* (A E))`` with whole-matrix sparse
    products and keep the rows holding stored entries; the truncated dual also
    drops rows below ``STRUCT_TOL * max|entry|``.  The gram dual forms the
    dense boundary columns through the FFT operator and thresholds them.
    """
    K = system.boundary().linear if columns is None else np.asarray(columns)
    if K.size == 0:
        return CompressedBlock(np.zeros((0, 0)), np.zeros(0, dtype=np.int64), K)
    if system.Z is not None:
        AE = system.A[:, K]
        D = (AE - system.A @ (system.Z.T @ AE)).tocsr()
        D.eliminate_zeros()
        rows = np.flatnonzero(np.diff(D.indptr) > 0)
        block = D[rows].toarray()
        if system.dual.kind == "truncated" and block.size:
            keep = np.max(np.abs(block), axis=1) > STRUCT_TOL * np.max(np.abs(block))
            rows, block = rows[keep], block[keep]
        return CompressedBlock(block, rows, K)
    D = residual_columns(system, K)
    mags = np.max(np.abs(D), axis=1)
    scale = mags.max() if mags.size else 0.0
    rows = np.flatnonzero(mags > STRUCT_TOL * scale) if scale > 0 else np.zeros(0, dtype=np.int64)
    return CompressedBlock(D[rows], rows, K)


def export_matrix_market(path, matrix, comment: str = "") -> None:
    """Write a sparse or dense matrix as MatrixMarket text."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)

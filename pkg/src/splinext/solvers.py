"""Least-squares solvers for spline extension systems.

``solve_svd`` is the regularized reference.  ``solve_reduced_az`` and
``solve_sparse_az`` split ``x = E x1 + Z^*(b - A E x1)`` where ``x1`` solves the
small problem on the boundary block; they differ only in how the block is
obtained.  ``solve_iterative`` is a Krylov baseline.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .assembly import ExtensionSystem, build_AmAZtA, reduce_system
from .errors import MaxIterationsReached


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances shared by the solvers.

    Attributes
    ----------
    svd_cutoff : float
        Singular values below ``svd_cutoff * sigma_max`` are discarded.
    qr_pivot_tol : float
        Pivoted-QR columns with ``|R_ii| <= qr_pivot_tol * |R_00|`` are dropped.
    max_iterations : int or None
        Iteration cap of the iterative path; ``None`` means ``4 N``.
    iterative_tol : float
        Relative stopping tolerance of the iterative path.
    """

    svd_cutoff: float = 1e-12
    qr_pivot_tol: float = 1e-12
    max_iterations: int | None = None
    iterative_tol: float = 1e-14

    def __post_init__(self):
        for name in ("svd_cutoff", "qr_pivot_tol", "iterative_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class FitResult:
    """Coefficients of a least-squares fit and what it cost."""

    x: np.ndarray
    residual_norm: float
    coefficient_norm: float
    rhs_norm: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def relative_residual(self) -> float:
        return self.residual_norm / self.rhs_norm if self.rhs_norm > 0 else self.residual_norm


def _result(A, x, b, **diag) -> FitResult:
    r = A @ x - b
    return FitResult(
        x=x,
        residual_norm=float(np.linalg.norm(r)),
        coefficient_norm=float(np.linalg.norm(x)),
        rhs_norm=float(np.linalg.norm(b)),
        diagnostics=diag,
    )


def truncated_svd_solve(A, b, cutoff: float = 1e-12) -> tuple[np.ndarray, int]:
    """``V S^+ U^* b`` keeping singular values above ``cutoff * sigma_max``."""
    # all-zero columns only add zero singular values; dropping them first is exact
    if hasattr(A, "tocsc"):
        Ac = A.tocsc()
        live = np.flatnonzero(np.diff(Ac.indptr) > 0)
        dense = Ac[:, live].toarray()
    else:
        dense = np.asarray(A, dtype=float)
        live = np.flatnonzero(np.any(dense != 0, axis=0))
        dense = dense[:, live]
    b = np.asarray(b, dtype=float)
    x = np.zeros(A.shape[1])
    if dense.size == 0:
        return x, 0
    U, s, Vt = np.linalg.svd(dense, full_matrices=False)
    keep = s > cutoff * s[0] if s[0] > 0 else np.zeros(s.size, bool)
    coef = (U[:, keep].T @ b) / s[keep]
    x[live] = Vt[keep].T @ coef
    return x, int(keep.sum())


def pivoted_qr_solve(B, c, pivot_tol: float = 1e-12) -> tuple[np.ndarray, int]:
    """Basic least-squares solution of ``B z = c`` by column-pivoted QR.

    Columns whose diagonal entry drops below ``pivot_tol * |R_00|`` are set
    to zero, which regularizes rank-deficient blocks.
    """
    B = np.asarray(B, dtype=float)
    c = np.asarray(c, dtype=float)
    z = np.zeros(B.shape[1])
    if B.size == 0:
        return z, 0
    Q, R, piv = scipy.linalg.qr(B, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0:
        return z, 0
    r = int(np.sum(d > pivot_tol * d[0]))
    y = scipy.linalg.solve_triangular(R[:r, :r], Q[:, :r].T @ c)
    z[piv[:r]] = y
    return z, r


def solve_svd(A, b, eps: float = 1e-12) -> FitResult:
    """Truncated-SVD least squares on a dense (or densified) matrix."""
    t0 = time.perf_counter()
    x, rank = truncated_svd_solve(A, b, eps)
    t1 = time.perf_counter()
    return _result(A, x, np.asarray(b, dtype=float), numerical_rank=rank, block_dims=tuple(np.shape(A)),
                   timings={"svd": t1 - t0})


def _az_combine(system: ExtensionSystem, b, columns, x1_block):
    """``x = E x1 + Z^*(b - A E x1)``."""
    AEx1 = system.A[:, columns] @ x1_block if columns.size else np.zeros_like(b)
    x = np.asarray(system.apply_Zstar(b - AEx1), dtype=float).copy()
    x[columns] += x1_block
    return x


def solve_reduced_az(system: ExtensionSystem, b, config: SolverConfig | None = None) -> FitResult:
    """Reduced AZ: solve the compressed boundary block, then apply the dual.

    The block ``R (A - A Z^* A) E`` is paired with ``R (I - A Z^*) b``; rows
    dropped by ``R`` are zero on the left and do not move the minimizer.
    """
    config = config or SolverConfig()
    b = np.asarray(b, dtype=float)
    t0 = time.perf_counter()
    blk = reduce_system(system)
    t1 = time.perf_counter()
    if blk.block.size:
        rhs = b - system.apply_A(system.apply_Zstar(b))
        x1, rank = pivoted_qr_solve(blk.block, rhs[blk.rows], config.qr_pivot_tol)
    else:
        x1, rank = np.zeros(blk.columns.size), 0
    t2 = time.perf_counter()
    x = _az_combine(system, b, blk.columns, x1)
    t3 = time.perf_counter()
    return _result(
        system.A, x, b,
        numerical_rank=rank,
        block_dims=blk.shape,
        nonzero_count=int(np.count_nonzero(blk.block)),
        timings={"reduce": t1 - t0, "block_solve": t2 - t1, "combine": t3 - t2},
    )


def solve_sparse_az(system: ExtensionSystem, b, config: SolverConfig | None = None) -> FitResult:
    """AZ with the sparse ``A - A Z^* A`` from the restricted-block construction.

    The sparse operator is trimmed to its stored rows and columns and the
    trimmed block goes through pivoted QR.
    """
    config = config or SolverConfig()
    b = np.asarray(b, dtype=float)
    t0 = time.perf_counter()
    op = build_AmAZtA(system)
    t1 = time.perf_counter()
    S = op.matrix.tocsc()
    cols = np.flatnonzero(np.diff(S.indptr) > 0)
    rows = np.unique(S.indices)
    if cols.size:
        block = S[rows][:, cols].toarray()
        rhs = b - system.apply_A(system.apply_Zstar(b))
        x1, rank = pivoted_qr_solve(block, rhs[rows], config.qr_pivot_tol)
    else:
        x1, rank, block = np.zeros(0), 0, np.zeros((0, 0))
    t2 = time.perf_counter()
    x = _az_combine(system, b, cols, x1)
    t3 = time.perf_counter()
    return _result(
        system.A, x, b,
        numerical_rank=rank,
        block_dims=block.shape,
        nonzero_count=op.nnz,
        timings={"sparse_build": t1 - t0, "block_solve": t2 - t1, "combine": t3 - t2},
    )


def solve_iterative(system_or_matrix, b, config: SolverConfig | None = None) -> FitResult:
    """LSQR on ``A x = b``; warns with :class:`MaxIterationsReached` at the cap."""
    config = config or SolverConfig()
    A = system_or_matrix.A if isinstance(system_or_matrix, ExtensionSystem) else system_or_matrix
    b = np.asarray(b, dtype=float)
    cap = config.max_iterations or 4 * A.shape[1]
    t0 = time.perf_counter()
    out = spla.lsqr(A, b, atol=config.iterative_tol, btol=config.iterative_tol, iter_lim=cap)
    t1 = time.perf_counter()
    x, istop, itn = out[0], out[1], out[2]
    capped = istop == 7
    if capped:
        warnings.warn(f"LSQR stopped at the iteration cap ({cap})", MaxIterationsReached, stacklevel=2)
    return _result(A, x, b, iterations=int(itn), capped=bool(capped), timings={"lsqr": t1 - t0})


SOLVERS = {
    "svd": lambda system, b, config: solve_svd(system.A, b, config.svd_cutoff),
    "reduced-az": solve_reduced_az,
    "sparse-az": solve_sparse_az,
    "iterative": solve_iterative,
}


def solve(system: ExtensionSystem, b, method: str = "reduced-az", config: SolverConfig | None = None) -> FitResult:
    """Dispatch to one of ``svd``, ``reduced-az``, ``sparse-az``, ``iterative``."""
    try:
        fn = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown solver {method!r}; choose from {sorted(SOLVERS)}") from None
    return fn(system, b, config or SolverConfig())

"""Gridded data: ESRI ASCII rasters, masks and spline fits on them.

Arrays handed to the fitting code are indexed ``[x, y]`` with ``y`` pointing
north, while ESRI files store rows north-first; :func:`RasterDataset.lattice`
does the flip.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import DualSpec, build_system
from .errors import EmptyDomain, GridMismatch, RasterParseError
from .geometry import MaskedGrid, ball, lattice_coordinates, polar_flower
from .solvers import FitResult, SolverConfig, solve

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")
DEFAULT_NODATA = -9999.0


@dataclass(frozen=True)
class RasterDataset:
    """Header plus samples; ``samples`` is ``nrows x ncols``, north row first."""

    header: dict
    samples: np.ndarray

    @property
    def nodata(self) -> float:
        return float(self.header.get("nodata_value", DEFAULT_NODATA))

    @property
    def mask(self) -> np.ndarray:
        return self.samples != self.nodata

    def lattice(self) -> tuple[np.ndarray, np.ndarray]:
        """``(values, mask)`` indexed ``[x, y]``, ``y`` increasing northwards."""
        vals = self.samples[::-1, :].T
        return vals, vals != self.nodata


def _parse_header(lines: list[str]) -> tuple[dict, int]:
    header: dict = {}
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        key = parts[0].lower()
        if key in ("xllcenter", "yllcenter"):
            key = key.replace("center", "corner")
        if key not in _HEADER_KEYS:
            break
        if len(parts) != 2:
            raise RasterParseError(f"malformed header line {lines[i]!r}")
        try:
            header[key] = float(parts[1])
        except ValueError as exc:
            raise RasterParseError(f"non-numeric header value in {lines[i]!r}") from exc
        i += 1
    for key in ("ncols", "nrows"):
        if key not in header:
            raise RasterParseError(f"missing {key} in header")
        if header[key] != int(header[key]) or header[key] < 1:
            raise RasterParseError(f"{key} must be a positive integer")
        header[key] = int(header[key])
    header.setdefault("nodata_value", DEFAULT_NODATA)
    return header, i


def read_esri_ascii(path) -> RasterDataset:
    """Parse an ESRI ASCII grid file.

    Raises
    ------
    RasterParseError
        On missing header fields, non-numeric samples or a sample count that
        disagrees with ``ncols * nrows``.
    """
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise RasterParseError(f"cannot read raster {path}: {exc}") from exc
    lines = text.splitlines()
    header, start = _parse_header(lines)
    try:
        values = np.array(" ".join(lines[start:]).split(), dtype=float)
    except ValueError as exc:
        raise RasterParseError("non-numeric sample in raster body") from exc
    nr, nc = header["nrows"], header["ncols"]
    if values.size != nr * nc:
        raise RasterParseError(f"expected {nr * nc} samples, found {values.size}")
    return RasterDataset(header, values.reshape(nr, nc))


def write_esri_ascii(path, dataset: RasterDataset) -> None:
    h = dataset.header
    nr, nc = dataset.samples.shape
    out = [
        f"ncols {nc}",
        f"nrows {nr}",
        f"xllcorner {h.get('xllcorner', 0.0):g}",
        f"yllcorner {h.get('yllcorner', 0.0):g}",
        f"cellsize {h.get('cellsize', 1.0):g}",
        f"NODATA_value {dataset.nodata:g}",
    ]
    out += [" ".join(f"{v:.17g}" for v in row) for row in dataset.samples]
    Path(path).write_text("\n".join(out) + "\n")


def from_lattice(values: np.ndarray, mask: np.ndarray, nodata: float = DEFAULT_NODATA,
                 cellsize: float = 1.0) -> RasterDataset:
    """Build a dataset from ``[x, y]`` arrays (inverse of :meth:`RasterDataset.lattice`)."""
    vals = np.where(mask, values, nodata)
    samples = vals.T[::-1, :].copy()
    nr, nc = samples.shape
    header = {"ncols": nc, "nrows": nr, "xllcorner": 0.0, "yllcorner": 0.0,
              "cellsize": cellsize, "nodata_value": float(nodata)}
    return RasterDataset(header, samples)


def read_mask_csv(path) -> np.ndarray:
    """0/1 mask in CSV form, rows north-first like the raster body; returns ``[x, y]``."""
    try:
        raw = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise RasterParseError(f"cannot parse mask {path}: {exc}") from exc
    if not np.all(np.isin(raw, (0, 1))):
        raise RasterParseError("mask entries must be 0 or 1")
    return raw[::-1, :].T.astype(bool)


def synthetic_raster(shape=(336, 448), function=None) -> RasterDataset:
    """``e^{xy}`` (or `function`) on an ``nx x ny`` lattice with a two-piece mask.

    The mask is the flower domain plus a disjoint disk near the corner
    ``(0.9, 0.1)``.
    """
    coords = lattice_coordinates(shape)
    mask = (polar_flower()(coords) | ball((0.9, 0.1), 0.07)(coords)).reshape(shape)
    f = function or (lambda X: np.exp(X[:, 0] * X[:, 1]))
    values = f(coords).reshape(shape)
    return from_lattice(values, mask)


@dataclass(frozen=True)
class RasterFit:
    result: FitResult
    grid: MaskedGrid
    values: np.ndarray
    fitted: np.ndarray

    @property
    def relative_residual(self) -> float:
        return self.result.relative_residual

    def error_table(self) -> np.ndarray:
        """Columns ``ix, iy, value, fitted, abs_error, rel_error`` per data point."""
        ab = np.abs(self.fitted - self.values)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(self.values != 0, ab / np.abs(self.values), np.nan)
        return np.column_stack([self.grid.points, self.values, self.fitted, ab, rel])


def fit_raster(dataset: RasterDataset, p=(1, 1), q=(2, 2), N=None, solver: str = "reduced-az",
               dual: DualSpec | str = "compact", config: SolverConfig | None = None) -> RasterFit:
    """Fit a tensor spline to the unmasked samples of a raster.

    The lattice of shape ``q * N`` is the raster itself, so ``N`` defaults to
    the raster size divided by ``q``.

    Raises
    ------
    GridMismatch
        If a raster dimension is not ``q_i N_i``.
    EmptyDomain
        If every sample is nodata.
    """
    values, mask = dataset.lattice()
    shape = mask.shape
    q = tuple(int(v) for v in np.broadcast_to(q, (2,)))
    if N is None:
        if any(s % qi for s, qi in zip(shape, q)):
            raise GridMismatch(f"raster shape {shape} is not divisible by q = {q}")
        N = tuple(s // qi for s, qi in zip(shape, q))
    N = tuple(int(v) for v in np.broadcast_to(N, (2,)))
    if tuple(a * b for a, b in zip(q, N)) != shape:
        raise GridMismatch(f"q*N = {tuple(a * b for a, b in zip(q, N))} does not match raster {shape}")
    if not mask.any():
        raise EmptyDomain("raster holds nodata only")
    linear = np.flatnonzero(mask)
    points = np.stack(np.unravel_index(linear, shape), axis=1)
    grid = MaskedGrid(N, q, mask, points, linear)
    system = build_system(grid, p, dual=dual)
    b = values.ravel()[linear]
    result = solve(system, b, solver, config)
    return RasterFit(result, grid, b, system.apply_A(result.x))

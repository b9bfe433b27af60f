"""Domains in the unit cube, masked oversampled grids and boundary index sets."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyDomain, UnknownDomain, LowOversampling
from .kernel import sample_spline

# closed-set slack for points that sit on the boundary up to round-off
BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True)
class Domain:
    """A subset of ``[0, 1]^d`` given by a vectorized membership predicate.

    ``contains`` takes an ``(M, d)`` array of points and returns a boolean
    array of length ``M``.  ``descriptor`` records how the domain was built.
    """

    dim: int
    contains: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    descriptor: dict

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim and self.dim == 1:
            pts = pts.reshape(-1, 1)
        return np.asarray(self.contains(pts), dtype=bool)

    def __sub__(self, other: "Domain") -> "Domain":
        return difference(self, other)


def interval(a: float, b: float) -> Domain:
    if not a <= b:
        raise ValueError("interval needs a <= b")

    def contains(x):
        return (x[:, 0] >= a - BOUNDARY_SLACK) & (x[:, 0] <= b + BOUNDARY_SLACK)

    return Domain(1, contains, {"kind": "interval", "a": a, "b": b})


def box(lower: Sequence[float], upper: Sequence[float]) -> Domain:
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)

    def contains(x):
        return np.all((x >= lo - BOUNDARY_SLACK) & (x <= hi + BOUNDARY_SLACK), axis=1)

    return Domain(lo.size, contains, {"kind": "box", "lower": lo.tolist(), "upper": hi.tolist()})


def ball(center: Sequence[float], radius: float) -> Domain:
    c = np.asarray(center, dtype=float)

    def contains(x):
        return np.sum((x - c) ** 2, axis=1) <= (radius + BOUNDARY_SLACK) ** 2

    kind = "disk" if c.size == 2 else "ball"
    return Domain(c.size, contains, {"kind": kind, "center": c.tolist(), "radius": radius})


def disk(center=(0.5, 0.5), radius: float = 1 / 3) -> Domain:
    return ball(center, radius)


def difference(a: Domain, b: Domain) -> Domain:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch in set difference")

    def contains(x):
        return a.contains(x) & ~b.contains(x)

    return Domain(a.dim, contains, {"kind": "difference", "a": a.descriptor, "b": b.descriptor})


def polar_flower() -> Domain:
    """Five-petal polar domain minus a small disk, mapped from [-1,1]^2 to [0,1]^2.

    In the reference square the set is
    ``|x| <= 0.35 (2 + 0.5 |cos(5 atan2(x2, x1))|)`` without the disk of radius
    0.15 around ``(0.5, 0)``.
    """

    def petals(x):
        y = 2.0 * x - 1.0
        r = np.hypot(y[:, 0], y[:, 1])
        theta = np.arctan2(y[:, 1], y[:, 0])
        return r <= 0.35 * (2.0 + 0.5 * np.abs(np.cos(5.0 * theta))) + BOUNDARY_SLACK

    outer = Domain(2, petals, {"kind": "petals"})
    hole = ball((0.75, 0.5), 0.075)
    d = difference(outer, hole)
    return Domain(2, d.contains, {"kind": "flower"})


def raster_mask(mask) -> Domain:
    """Domain defined by a boolean lattice on ``[0, 1)^d``.

    Cell ``i`` along axis ``a`` sits at ``i / mask.shape[a]``; a point belongs
    to the domain when its nearest (periodic) lattice cell is set.
    """
    mask = np.array(mask, dtype=bool)
    mask.setflags(write=False)
    shape = np.array(mask.shape)

    def contains(x):
        idx = np.rint(x * shape).astype(np.int64) % shape
        return mask[tuple(idx.T)]

    return Domain(mask.ndim, contains, {"kind": "raster", "shape": list(mask.shape)})


def builtin_domain(name: str, **params) -> Domain:
    """Construct one of the named domains.

    Names: ``interval``, ``box``, ``square`` (``[0, 1/2]^2``), ``cube``
    (``[0,1/2]^3``), ``disk``, ``ball``, ``flower``, ``full`` (``[0, 1]^d``,
    needs ``dim``).
    """
    name = name.lower()
    if name == "interval":
        return interval(params.get("a", 0.0), params.get("b", 0.5))
    if name == "box":
        return box(params["lower"], params["upper"])
    if name == "square":
        return box((0.0, 0.0), (0.5, 0.5))
    if name == "cube":
        return box((0.0,) * 3, (0.5,) * 3)
    if name == "disk":
        return ball(params.get("center", (0.5, 0.5)), params.get("radius", 1 / 3))
    if name == "ball":
        return ball(params.get("center", (0.5, 0.5, 0.5)), params.get("radius", 0.4))
    if name == "flower":
        return polar_flower()
    if name == "full":
        d = int(params.get("dim", 1))
        return box((0.0,) * d, (1.0,) * d)
    raise UnknownDomain(f"unknown domain {name!r}")


def parse_domain(text: str) -> Domain:
    """Parse ``name[:v1,v2,...]`` descriptors used on the command line.

    ``interval:a,b``; ``box:lo1,..,lod,hi1,..,hid``; ``disk:cx,cy,r``;
    ``ball:cx,cy,cz,r``; ``full:d``; ``square``; ``cube``; ``flower``.
    """
    name, _, rest = text.partition(":")
    vals = [float(v) for v in rest.split(",")] if rest else []
    name = name.lower()
    try:
        if name == "interval" and vals:
            return interval(*vals)
        if name == "box" and vals:
            h = len(vals) // 2
            return box(vals[:h], vals[h:])
        if name in ("disk", "ball") and vals:
            return ball(vals[:-1], vals[-1])
        if name == "full" and vals:
            return builtin_domain("full", dim=int(vals[0]))
    except TypeError as exc:
        raise UnknownDomain(f"bad parameters for {name!r}: {rest}") from exc
    return builtin_domain(name)


# --------------------------------------------------------------------------
# grids


def _as_tuple(v, d: int, what: str) -> tuple[int, ...]:
    if np.ndim(v) == 0:
        return (int(v),) * d
    t = tuple(int(x) for x in v)
    if len(t) != d:
        raise ValueError(f"{what} has {len(t)} entries for a {d}-dimensional domain")
    return t


@dataclass(frozen=True)
class MaskedGrid:
    """The lattice ``k / (qN)`` restricted to a domain.

    ``mask`` covers the full periodic lattice of shape ``q*N``; ``points``
    lists the lattice multi-indices inside, in row-major order, and
    ``linear`` their flat indices into ``mask``.
    """

    N: tuple[int, ...]
    q: tuple[int, ...]
    mask: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    linear: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.N)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(q * n for q, n in zip(self.q, self.N))

    @property
    def M(self) -> int:
        return int(self.linear.size)

    @property
    def n_basis(self) -> int:
        return int(np.prod(self.N))

    def coordinates(self) -> np.ndarray:
        """Point coordinates ``k_i / (q_i N_i)``, shape ``(M, d)``."""
        return self.points / np.asarray(self.shape, dtype=float)


def lattice_coordinates(shape: Sequence[int]) -> np.ndarray:
    axes = [np.arange(s) / s for s in shape]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_masked_grid(domain: Domain, N, q=2, p=None) -> MaskedGrid:
    """Restrict the oversampled lattice of shape ``q*N`` to `domain`.

    Parameters
    ----------
    domain : Domain
    N, q : int or sequence of int
        Basis size and oversampling factor per dimension.
    p : int or sequence of int, optional
        Spline degree, used only to validate ``N`` and ``q``.

    Raises
    ------
    EmptyDomain
        If no lattice point lies in the domain.
    """
    d = domain.dim
    N = _as_tuple(N, d, "N")
    q = _as_tuple(q, d, "q")
    if any(v < 1 for v in q):
        raise ValueError("oversampling factors must be >= 1")
    if any(v < 1 for v in N):
        raise ValueError("basis sizes must be >= 1")
    if p is not None:
        p = _as_tuple(p, d, "p")
        for pi, ni, qi in zip(p, N, q):
            if ni < pi + 2:
                raise ValueError(f"N = {ni} is too small for degree {pi} (needs >= {pi + 2})")
            Q = sample_spline(pi, qi).radius
            if qi * ni < 2 * Q + 1:
                raise ValueError(f"q*N = {qi * ni} is too small for degree {pi}")
    shape = tuple(a * b for a, b in zip(q, N))
    mask = domain(lattice_coordinates(shape)).reshape(shape)
    linear = np.flatnonzero(mask)
    if linear.size == 0:
        raise EmptyDomain("no grid point lies inside the domain")
    points = np.stack(np.unravel_index(linear, shape), axis=1)
    for arr in (mask, points, linear):
        arr.setflags(write=False)
    n_basis = int(np.prod(N))
    if linear.size < 1.2 * n_basis:
        warnings.warn(
            f"only {linear.size} points for {n_basis} basis functions; "
            "oversampling constant is below 1.2",
            LowOversampling,
            stacklevel=2,
        )
    return MaskedGrid(N, q, mask, points, linear)


# --------------------------------------------------------------------------
# boundary index sets


@dataclass(frozen=True)
class BoundaryIndexSet:
    """Basis multi-indices whose support straddles the domain boundary."""

    indices: np.ndarray
    linear: np.ndarray
    variant: str

    def __len__(self) -> int:
        return int(self.linear.size)


def _window_sums(mask: np.ndarray, offsets: Sequence[np.ndarray], steps: Sequence[int]) -> np.ndarray:
    """``S[l] = sum_{o in box} mask[(step*l + o) mod n]`` along every axis."""
    out = mask.astype(np.int64)
    for axis, (off, step) in enumerate(zip(offsets, steps)):
        n = out.shape[axis]
        count = n // step
        idx = (step * np.arange(count)[:, None] + off[None, :]) % n
        taken = np.take(out, idx.ravel(), axis=axis)
        new_shape = out.shape[:axis] + (count, off.size) + out.shape[axis + 1 :]
        out = taken.reshape(new_shape).sum(axis=axis + 1)
    return out


def boundary_index_set(
    grid: MaskedGrid,
    p,
    variant: str = "discrete",
    domain: Domain | None = None,
    refine: int = 8,
) -> BoundaryIndexSet:
    """Basis functions whose support meets both the domain and its complement.

    With ``variant="discrete"`` supports are intersected with the grid, so the
    test only uses ``grid.mask``.  ``variant="continuous"`` tests the closed
    support ``[(l - (p+1)/2)/N, (l + (p+1)/2)/N]`` on a lattice refined by
    `refine` points per knot interval, and needs `domain`.
    """
    d = grid.dim
    p = _as_tuple(p, d, "p")
    if variant == "discrete":
        offsets = [sample_spline(pi, qi).support() for pi, qi in zip(p, grid.q)]
        mask, steps = grid.mask, grid.q
    elif variant == "continuous":
        if domain is None:
            raise ValueError("the continuous variant needs the domain")
        shape = tuple(refine * n for n in grid.N)
        mask = domain(lattice_coordinates(shape)).reshape(shape)
        offsets = [np.arange(-(refine * (pi + 1)) // 2, (refine * (pi + 1)) // 2 + 1) for pi in p]
        steps = (refine,) * d
    else:
        raise ValueError(f"unknown variant {variant!r}")
    inside = _window_sums(mask, offsets, steps)
    total = math.prod(o.size for o in offsets)
    hit = (inside > 0) & (inside < total)
    linear = np.flatnonzero(hit)
    indices = np.stack(np.unravel_index(linear, grid.N), axis=1)
    return BoundaryIndexSet(indices, linear, variant)

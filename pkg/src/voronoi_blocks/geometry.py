"""Voronoi tessellation of bounded 1D and 2D point sets.

Every data point owns the region of the bounding box closer to it than to
any other point. In 1D those regions are the intervals between midpoints of
consecutive points; in 2D they are convex polygons obtained by clipping the
box against perpendicular bisectors. Cell measures are reported in quanta,
so that a cell's volume is directly comparable with its point count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from .exceptions import DuplicatePoints, EmptyInput, InputError, OutOfBounds, QuantizationError

__all__ = [
    "PointSet",
    "Cell",
    "CellComplex",
    "ValidationReport",
    "make_point_set",
    "build_tessellation",
    "build_tessellation_1d",
    "build_tessellation_2d",
    "validate_quantization",
    "polygon_area",
    "clip_polygon",
    "GEOMETRIC_TOL",
]

# vertex comparisons use GEOMETRIC_TOL * box diagonal
GEOMETRIC_TOL = 1e-9
QUANTUM_SLACK = 1e-9

ADJACENCY_MODES = ("vertex", "edge")


@dataclass(frozen=True)
class PointSet:
    """Event locations with their observation window.

    Parameters
    ----------
    points : ndarray of shape (n_points, dim)
    bounds : ndarray of shape (dim, 2)
        Per-dimension ``(lo, hi)`` limits of the window.
    quantum : tuple of float or None
        Coordinate resolution per dimension. ``None`` defers the choice to
        the tessellation, which then sizes the quantum so that the smallest
        cell holds exactly one quantum.
    """

    points: np.ndarray
    bounds: np.ndarray
    quantum: Optional[tuple] = None

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def box_measure(self) -> float:
        return float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))


def auto_bounds(points, expand=0.05):
    """Bounding box of ``points`` padded by ``expand`` times the extent per side.

    A dimension with zero extent is padded by ``expand * max(1, |center|)``.
    """
    points = np.asarray(points, dtype=float)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    extent = hi - lo
    center = 0.5 * (lo + hi)
    pad = np.where(extent > 0, expand * extent, expand * np.maximum(1.0, np.abs(center)))
    return np.column_stack([lo - pad, hi + pad])


def _as_quantum(quantum, dim):
    if quantum is None:
        return None
    q = np.atleast_1d(np.asarray(quantum, dtype=float))
    if q.size == 1 and dim > 1:
        q = np.repeat(q, dim)
    if q.shape != (dim,):
        raise InputError(f"quantum needs {dim} values, got {q.size}")
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        raise InputError(f"quantum must be positive and finite, got {q.tolist()}")
    return tuple(float(x) for x in q)


def _duplicate_groups(points):
    order = np.lexsort(points.T[::-1])
    srt = points[order]
    same = np.all(srt[1:] == srt[:-1], axis=1)
    return order, same


def make_point_set(points, bounds=None, quantum=None, expand=0.05,
                   duplicates="error", random_state=None) -> PointSet:
    """Validate raw coordinates and assemble a :class:`PointSet`.

    Parameters
    ----------
    points : array-like of shape (n_points,) or (n_points, dim)
    bounds : array-like of shape (dim, 2), optional
        Explicit window. Defaults to :func:`auto_bounds` with ``expand``.
    quantum : float or sequence of float, optional
    expand : float, default=0.05
    duplicates : {"error", "jitter"}, default="error"
        ``"jitter"`` displaces repeated points by at most 0.1 quantum (or
        1e-6 of the window extent when the quantum is automatic) using a
        seeded generator.
    random_state : int or None
        Seed for the jitter.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise EmptyInput("no data points")
    dim = pts.shape[1]
    if dim not in (1, 2):
        raise InputError(f"only 1D and 2D data are supported, got dim={dim}")
    if not np.all(np.isfinite(pts)):
        raise InputError("coordinates must be finite")

    if bounds is None:
        bnds = auto_bounds(pts, expand)
    else:
        bnds = np.asarray(bounds, dtype=float).reshape(dim, 2)
        if not np.all(np.isfinite(bnds)) or np.any(bnds[:, 1] <= bnds[:, 0]):
            raise InputError(f"bounds must satisfy lo < hi, got {bnds.tolist()}")
        outside = np.any((pts < bnds[:, 0]) | (pts > bnds[:, 1]), axis=1)
        if outside.any():
            idx = np.flatnonzero(outside)
            raise OutOfBounds(f"{idx.size} point(s) outside bounds, first index {idx[0]}")
    q = _as_quantum(quantum, dim)

    order, same = _duplicate_groups(pts)
    if same.any():
        if duplicates == "error":
            dup = sorted({int(order[i]) for i in np.flatnonzero(same)}
                         | {int(order[i + 1]) for i in np.flatnonzero(same)})
            raise DuplicatePoints(f"{len(dup)} points share coordinates", dup)
        if duplicates != "jitter":
            raise ValueError(f"unknown duplicates policy {duplicates!r}")
        pts = _jitter_duplicates(pts, bnds, q, random_state)
    return PointSet(points=pts, bounds=bnds, quantum=q)


def _jitter_duplicates(pts, bnds, quantum, random_state):
    rng = np.random.default_rng(random_state)
    if quantum is None:
        scale = 1e-6 * (bnds[:, 1] - bnds[:, 0])
    else:
        scale = 0.1 * np.asarray(quantum)
    pts = pts.copy()
    for _ in range(100):
        order, same = _duplicate_groups(pts)
        if not same.any():
            return pts
        movers = order[np.flatnonzero(same) + 1]
        pts[movers] += rng.uniform(-1.0, 1.0, size=(movers.size, pts.shape[1])) * scale
        pts = np.clip(pts, bnds[:, 0], bnds[:, 1])
    raise DuplicatePoints("could not separate duplicate points by jittering")


@dataclass(frozen=True)
class Cell:
    """One Voronoi cell.

    ``vertices`` holds ``[lo, hi]`` in 1D and a counterclockwise polygon of
    shape ``(k, 2)`` in 2D.
    """

    point_index: int
    volume_quanta: float
    neighbors: frozenset
    vertices: np.ndarray

    @property
    def density(self) -> float:
        """Reciprocal volume, the single-cell density estimate in quanta."""
        return 1.0 / self.volume_quanta


@dataclass(frozen=True)
class CellComplex:
    """Cells of a bounded Voronoi tessellation, index-aligned with the points."""

    points: np.ndarray
    bounds: np.ndarray
    quantum: tuple
    quantum_volume: float
    cells: tuple
    total_volume_quanta: float
    adjacency: str = "vertex"
    measures: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.array([c.volume_quanta for c in self.cells])

    @cached_property
    def edges(self) -> list:
        """Sorted list of neighbor pairs ``(i, j)`` with ``i < j``."""
        return sorted((i, j) for i, c in enumerate(self.cells) for j in c.neighbors if i < j)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.bounds[:, 1] - self.bounds[:, 0]))

    def locate(self, queries) -> np.ndarray:
        """Index of the cell containing each query point (nearest data point)."""
        q = np.asarray(queries, dtype=float).reshape(-1, self.dim)
        outside = np.any((q < self.bounds[:, 0]) | (q > self.bounds[:, 1]), axis=1)
        if outside.any():
            raise OutOfBounds(f"{int(outside.sum())} query point(s) outside bounds")
        _, idx = self.tree.query(q)
        return np.asarray(idx, dtype=np.intp)

    def contains(self, index, queries, tol=None) -> np.ndarray:
        """Whether each query lies in cell ``index`` by interval/polygon test."""
        if tol is None:
            tol = GEOMETRIC_TOL * self.diagonal
        q = np.asarray(queries, dtype=float).reshape(-1, self.dim)
        verts = self.cells[index].vertices
        if self.dim == 1:
            return (q[:, 0] >= verts[0] - tol) & (q[:, 0] <= verts[1] + tol)
        a = verts
        b = np.roll(verts, -1, axis=0)
        edge = b - a
        rel = q[:, None, :] - a[None, :, :]
        cross = edge[None, :, 0] * rel[:, :, 1] - edge[None, :, 1] * rel[:, :, 0]
        lengths = np.hypot(edge[:, 0], edge[:, 1])
        return np.all(cross >= -tol * lengths[None, :], axis=1)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "bounds": self.bounds.tolist(),
            "quantum": list(self.quantum),
            "quantum_volume": self.quantum_volume,
            "total_volume_quanta": self.total_volume_quanta,
            "adjacency": self.adjacency,
            "cells": [
                {
                    "index": c.point_index,
                    "vertices": np.asarray(c.vertices).tolist(),
                    "volume_quanta": c.volume_quanta,
                    "neighbors": sorted(c.neighbors),
                }
                for c in self.cells
            ],
        }


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    failing: tuple
    min_volume_quanta: float
    suggested_quantum: tuple
    suggested_quantum_volume: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failing": [{"index": i, "volume_quanta": v} for i, v in self.failing],
            "min_volume_quanta": self.min_volume_quanta,
            "suggested_quantum": list(self.suggested_quantum),
            "suggested_quantum_volume": self.suggested_quantum_volume,
        }


def _resolve_quantum(ps: PointSet, measures):
    """Quantum per dimension and its product for the given cell measures."""
    if ps.quantum is not None:
        return ps.quantum, float(np.prod(ps.quantum))
    # smallest cell becomes exactly one quantum; aspect follows the box
    qvol = float(np.min(measures))
    if not qvol > 0:
        raise QuantizationError(
            f"cell {int(np.argmin(measures))} has zero volume; points closer than the geometric tolerance"
        )
    extent = ps.bounds[:, 1] - ps.bounds[:, 0]
    scale = (qvol / ps.box_measure) ** (1.0 / ps.dim)
    return tuple(float(x) for x in extent * scale), qvol


def _assemble(ps, measures, vertices, neighbors, adjacency):
    quantum, qvol = _resolve_quantum(ps, measures)
    vols = np.asarray(measures, dtype=float) / qvol
    cells = tuple(
        Cell(point_index=i, volume_quanta=float(vols[i]),
             neighbors=frozenset(neighbors[i]), vertices=vertices[i])
        for i in range(len(vols))
    )
    return CellComplex(
        points=ps.points, bounds=ps.bounds, quantum=quantum, quantum_volume=qvol,
        cells=cells, total_volume_quanta=ps.box_measure / qvol, adjacency=adjacency,
        measures=np.asarray(measures, dtype=float),
    )


def _check_unique(ps):
    _, same = _duplicate_groups(ps.points)
    if same.any():
        raise DuplicatePoints("duplicate points make the tessellation ill-defined")


def build_tessellation_1d(ps: PointSet, adjacency="vertex") -> CellComplex:
    """Midpoint intervals of a 1D point set, clipped to the window."""
    if ps.n_points == 0:
        raise EmptyInput("no data points")
    if ps.dim != 1:
        raise InputError("build_tessellation_1d needs 1D points")
    _check_unique(ps)
    if adjacency not in ADJACENCY_MODES:
        raise ValueError(f"unknown adjacency mode {adjacency!r}")
    x = ps.points[:, 0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    lo, hi = ps.bounds[0]
    cuts = np.concatenate([[lo], 0.5 * (xs[:-1] + xs[1:]), [hi]])
    n = xs.size
    measures = np.empty(n)
    vertices = [None] * n
    neighbors = [set() for _ in range(n)]
    for rank, i in enumerate(order):
        vertices[i] = np.array([cuts[rank], cuts[rank + 1]])
        measures[i] = cuts[rank + 1] - cuts[rank]
        if rank > 0:
            neighbors[i].add(int(order[rank - 1]))
        if rank < n - 1:
            neighbors[i].add(int(order[rank + 1]))
    return _assemble(ps, measures, vertices, neighbors, adjacency)


def polygon_area(vertices) -> float:
    """Signed shoelace area; positive for counterclockwise vertex order."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def clip_polygon(poly, normal, offset, tol=0.0):
    """Clip a convex polygon to the half-plane ``normal . x <= offset``.

    ``poly`` is a list of ``(x, y)`` tuples; the result is a list in the same
    orientation with near-coincident consecutive vertices collapsed.
    """
    nx, ny = normal
    out = []
    k = len(poly)
    if k == 0:
        return out
    dists = [nx * x + ny * y - offset for x, y in poly]
    for idx in range(k):
        cur, d_cur = poly[idx], dists[idx]
        nxt, d_nxt = poly[(idx + 1) % k], dists[(idx + 1) % k]
        if d_cur <= 0:
            out.append(cur)
        if (d_cur < 0 < d_nxt) or (d_nxt < 0 < d_cur):
            t = d_cur / (d_cur - d_nxt)
            out.append((cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])))
    if tol > 0 and len(out) > 1:
        dedup = []
        for p in out:
            if not dedup or abs(p[0] - dedup[-1][0]) > tol or abs(p[1] - dedup[-1][1]) > tol:
                dedup.append(p)
        while (len(dedup) > 1 and abs(dedup[0][0] - dedup[-1][0]) <= tol
               and abs(dedup[0][1] - dedup[-1][1]) <= tol):
            dedup.pop()
        out = dedup
    return out


def _bisector(p, q):
    # half-plane of points at least as close to p as to q
    nx, ny = q[0] - p[0], q[1] - p[1]
    mx, my = 0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])
    return (nx, ny), nx * mx + ny * my


def _box_polygon(bounds):
    (x0, x1), (y0, y1) = bounds
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def _cells_from_candidates(points, bounds, candidates, tol):
    box = _box_polygon(bounds)
    pts = [tuple(p) for p in points.tolist()]
    polys = []
    for i, cand in enumerate(candidates):
        poly = box
        p = pts[i]
        for j in cand:
            normal, offset = _bisector(p, pts[j])
            poly = clip_polygon(poly, normal, offset, tol)
        polys.append(poly)
    return polys


def _cells_halfplane(points, bounds, tol):
    """Reference construction: clip by bisectors in order of distance.

    A site farther than twice the current cell radius cannot cut the cell,
    which ends the scan early without changing the result.
    """
    box = _box_polygon(bounds)
    pts = [tuple(p) for p in points.tolist()]
    polys = []
    for i in range(len(pts)):
        d = np.hypot(points[:, 0] - points[i, 0], points[:, 1] - points[i, 1])
        order = np.argsort(d, kind="stable")
        poly = box
        p = pts[i]
        radius = max(np.hypot(x - p[0], y - p[1]) for x, y in poly)
        for j in order:
            if j == i:
                continue
            if d[j] > 2.0 * radius + tol:
                break
            normal, offset = _bisector(p, pts[j])
            poly = clip_polygon(poly, normal, offset, tol)
            radius = max(np.hypot(x - p[0], y - p[1]) for x, y in poly)
        polys.append(poly)
    return polys


def _delaunay_candidates(points):
    tri = Delaunay(points)
    indptr, indices = tri.vertex_neighbor_vertices
    return [indices[indptr[i]:indptr[i + 1]] for i in range(len(points))]


def _vertex_adjacency(polys, tol, mode):
    """Neighbor sets from vertices shared within ``tol``."""
    owners, coords = [], []
    for i, poly in enumerate(polys):
        owners.extend([i] * len(poly))
        coords.extend(poly)
    owners = np.asarray(owners)
    neighbors = [set() for _ in polys]
    if len(coords) == 0:
        return neighbors
    tree = cKDTree(np.asarray(coords))
    shared = {}
    for u, v in tree.query_pairs(r=tol, output_type="ndarray"):
        a, b = int(owners[u]), int(owners[v])
        if a == b:
            continue
        key = (a, b) if a < b else (b, a)
        shared.setdefault(key, []).append(coords[u])
    for (a, b), locs in shared.items():
        if mode == "edge" and not _two_distinct(locs, tol):
            continue
        neighbors[a].add(b)
        neighbors[b].add(a)
    return neighbors


def _two_distinct(locs, tol):
    first = locs[0]
    return any(abs(p[0] - first[0]) > tol or abs(p[1] - first[1]) > tol for p in locs[1:])


def build_tessellation_2d(ps: PointSet, adjacency="vertex", method="auto") -> CellComplex:
    """Clipped Voronoi polygons of a 2D point set.

    Parameters
    ----------
    ps : PointSet
    adjacency : {"vertex", "edge"}, default="vertex"
        ``"vertex"`` makes cells neighbors when they share any vertex;
        ``"edge"`` requires a shared edge of positive length.
    method : {"auto", "delaunay", "halfplane"}, default="auto"
        ``"delaunay"`` clips each cell only against its Delaunay neighbors.
        ``"halfplane"`` scans all other points by distance. ``"auto"`` uses
        Delaunay and falls back to half-planes on degenerate input (fewer
        than three points, all points collinear).
    """
    if ps.n_points == 0:
        raise EmptyInput("no data points")
    if ps.dim != 2:
        raise InputError("build_tessellation_2d needs 2D points")
    if adjacency not in ADJACENCY_MODES:
        raise ValueError(f"unknown adjacency mode {adjacency!r}")
    _check_unique(ps)
    diag = float(np.linalg.norm(ps.bounds[:, 1] - ps.bounds[:, 0]))
    tol = GEOMETRIC_TOL * diag

    polys = None
    if method in ("auto", "delaunay") and ps.n_points >= 3:
        try:
            cand = _delaunay_candidates(ps.points)
        except QhullError:
            if method == "delaunay":
                raise
        else:
            polys = _cells_from_candidates(ps.points, ps.bounds, cand, tol)
    elif method not in ("auto", "delaunay", "halfplane"):
        raise ValueError(f"unknown method {method!r}")
    if polys is None:
        polys = _cells_halfplane(ps.points, ps.bounds, tol)

    vertices = [np.asarray(poly, dtype=float).reshape(-1, 2) for poly in polys]
    measures = np.array([polygon_area(v) for v in vertices])
    neighbors = _vertex_adjacency(polys, tol, adjacency)
    return _assemble(ps, measures, vertices, neighbors, adjacency)


def build_tessellation(ps: PointSet, adjacency="vertex", method="auto") -> CellComplex:
    """Dispatch on dimension."""
    if ps.dim == 1:
        return build_tessellation_1d(ps, adjacency=adjacency)
    return build_tessellation_2d(ps, adjacency=adjacency, method=method)


def validate_quantization(cc: CellComplex) -> ValidationReport:
    """Report cells smaller than one quantum and the largest passing quantum.

    The suggestion scales every per-dimension quantum by the same factor so
    that the smallest cell holds exactly one quantum.
    """
    vols = cc.volumes
    vmin = float(vols.min())
    # slack absorbs rounding in measure / quantum for cells of exactly one quantum
    failing = tuple((int(i), float(vols[i])) for i in np.flatnonzero(vols < 1.0 - QUANTUM_SLACK))
    factor = vmin ** (1.0 / cc.dim)
    return ValidationReport(
        passed=not failing,
        failing=failing,
        min_volume_quanta=vmin,
        suggested_quantum=tuple(float(q * factor) for q in cc.quantum),
        suggested_quantum_volume=cc.quantum_volume * vmin,
    )

"""Background level, clusters of dense blocks, and density profiles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .exceptions import EmptyInput

__all__ = [
    "Cluster",
    "ClusterReport",
    "DensityGrid",
    "block_densities",
    "estimate_background",
    "extract_clusters",
    "density_at",
    "density_grid",
]


def block_densities(p) -> Dict[int, float]:
    """Points per unit coordinate volume of every live block."""
    qvol = p.cc.quantum_volume
    return {b: float(p.N[b] / (p.V[b] * qvol)) for b in p.block_ids}


def estimate_background(p) -> float:
    """Density of the volume-weighted median block.

    Blocks are sorted by increasing density and the first one at which the
    cumulative volume reaches half the total is returned.
    """
    if len(p) == 0:
        raise EmptyInput("partition has no blocks")
    dens = block_densities(p)
    order = sorted(dens, key=lambda b: (dens[b], b))
    half = 0.5 * float(sum(p.V[b] for b in p.block_ids))
    acc = 0.0
    for b in order:
        acc += float(p.V[b])
        if acc >= half:
            return dens[b]
    return dens[order[-1]]


@dataclass(frozen=True)
class Cluster:
    id: int
    blocks: tuple
    n_points: int
    volume_quanta: float
    volume_units: float
    mean_density: float
    peak_density: float
    centroid: tuple
    bbox: tuple

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "blocks": list(self.blocks),
            "n_points": self.n_points,
            "volume_quanta": self.volume_quanta,
            "volume_units": self.volume_units,
            "mean_density": self.mean_density,
            "peak_density": self.peak_density,
            "centroid": list(self.centroid),
            "bbox": [list(r) for r in self.bbox],
        }


@dataclass(frozen=True)
class ClusterReport:
    background_density: float
    threshold_ratio: float
    clusters: List[Cluster]
    block_to_cluster: Dict[int, Optional[int]] = field(repr=False)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def marked_blocks(self) -> set:
        return {b for b, c in self.block_to_cluster.items() if c is not None}

    def to_dict(self) -> dict:
        return {
            "background_density": self.background_density,
            "threshold_ratio": self.threshold_ratio,
            "n_clusters": self.n_clusters,
            "clusters": [c.to_dict() for c in self.clusters],
            "block_to_cluster": [
                {"block": b, "cluster": c} for b, c in sorted(self.block_to_cluster.items())
            ],
        }


def _components(marked, neighbors):
    seen = set()
    comps = []
    for start in sorted(marked):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in neighbors[u]:
                if w in marked and w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _cell_extent(cc, cells):
    verts = np.concatenate([np.asarray(cc.cells[c].vertices).reshape(-1, cc.dim) for c in cells])
    return tuple((float(lo), float(hi)) for lo, hi in zip(verts.min(axis=0), verts.max(axis=0)))


def extract_clusters(p, threshold_ratio: float = 2.0, background: Optional[float] = None) -> ClusterReport:
    """Group adjacent blocks denser than ``threshold_ratio`` times background.

    Clusters are the connected components of the marked blocks in the block
    adjacency graph, numbered by decreasing point count and then by
    smallest member block id.
    """
    if not threshold_ratio > 1:
        raise ValueError(f"threshold_ratio must exceed 1, got {threshold_ratio}")
    if background is None:
        background = estimate_background(p)
    dens = block_densities(p)
    cut = threshold_ratio * background
    marked = {b for b, d in dens.items() if d > cut}
    comps = _components(marked, p.neighbors)
    comps.sort(key=lambda c: (-sum(p.n_points(b) for b in c), c[0]))

    qvol = p.cc.quantum_volume
    pts = p.cc.points
    clusters = []
    mapping = {b: None for b in p.block_ids}
    for cid, comp in enumerate(comps):
        n = sum(p.n_points(b) for b in comp)
        vq = float(sum(p.V[b] for b in comp))
        cells = [c for b in comp for c in p.members[b]]
        clusters.append(Cluster(
            id=cid,
            blocks=tuple(comp),
            n_points=n,
            volume_quanta=vq,
            volume_units=vq * qvol,
            mean_density=n / (vq * qvol),
            peak_density=max(dens[b] for b in comp),
            centroid=tuple(float(x) for x in pts[sorted(cells)].mean(axis=0)),
            bbox=_cell_extent(p.cc, cells),
        ))
        for b in comp:
            mapping[b] = cid
    return ClusterReport(background, threshold_ratio, clusters, mapping)


def density_at(p, cc, q) -> np.ndarray:
    """Piecewise-constant density at query point(s).

    Each query takes the density of the block owning the Voronoi cell it
    falls in. Raises :class:`OutOfBounds` for queries outside the window.
    """
    q = np.asarray(q, dtype=float)
    scalar = q.ndim == 0 or (q.ndim == 1 and cc.dim > 1 and q.shape[0] == cc.dim)
    cells = cc.locate(q.reshape(-1, cc.dim))
    owner = np.asarray(p.labels())
    dens = block_densities(p)
    lookup = np.zeros(cc.n_cells)
    for b, d in dens.items():
        lookup[b] = d
    out = lookup[owner[cells]]
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class DensityGrid:
    """Density sampled at cell centers of a regular grid.

    ``values`` has shape ``(ny, nx)`` in 2D (rows follow the second
    coordinate) and ``(nx,)`` in 1D.
    """

    values: np.ndarray
    bounds: np.ndarray
    resolution: tuple

    @property
    def centers(self) -> list:
        return [_centers(lo, hi, k) for (lo, hi), k in zip(self.bounds, self.resolution)]

    @property
    def cell_measure(self) -> float:
        return float(np.prod([(hi - lo) / k for (lo, hi), k in zip(self.bounds, self.resolution)]))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_measure)

    def metadata(self) -> dict:
        return {
            "dim": len(self.resolution),
            "bounds": self.bounds.tolist(),
            "resolution": list(self.resolution),
            "shape": list(self.values.shape),
            "order": "row-major, first axis is the last coordinate",
            "dtype": "float64",
        }


def _centers(lo, hi, k):
    return lo + (np.arange(k) + 0.5) * (hi - lo) / k


def density_grid(p, cc, resolution) -> DensityGrid:
    """Evaluate :func:`density_at` on the centers of a regular grid."""
    res = tuple(int(r) for r in np.atleast_1d(resolution))
    if len(res) == 1 and cc.dim == 2:
        res = res * 2
    if len(res) != cc.dim or min(res) < 1:
        raise ValueError(f"resolution needs {cc.dim} positive integers, got {resolution}")
    axes = [_centers(lo, hi, k) for (lo, hi), k in zip(cc.bounds, res)]
    if cc.dim == 1:
        values = density_at(p, cc, axes[0][:, None])
    else:
        xx, yy = np.meshgrid(axes[0], axes[1])
        values = density_at(p, cc, np.column_stack([xx.ravel(), yy.ravel()])).reshape(res[1], res[0])
    return DensityGrid(values=np.asarray(values, dtype=float), bounds=cc.bounds.copy(), resolution=res)

"""Scikit-learn style front end for the full segmentation pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .clusters import density_at, density_grid, extract_clusters
from .coalesce import CoalesceConfig, best_model, init_partition, run_coalescence
from .geometry import build_tessellation, make_point_set

__all__ = ["VoronoiBlocks"]


class VoronoiBlocks(ClusterMixin, BaseEstimator):
    """Segment 1D or 2D points into constant-rate blocks and dense clusters.

    The points are tessellated into bounded Voronoi cells, adjacent cells
    are merged greedily while the block posterior improves, and adjacent
    blocks denser than ``threshold_ratio`` times the background are grouped
    into clusters.

    Parameters
    ----------
    bounds : array-like of shape (n_features, 2), optional
        Observation window. Defaults to the data extent padded by
        ``expand`` per side.
    expand : float, default=0.05
    quantum : float, sequence of float or None, default=None
        Coordinate resolution. ``None`` sizes it so the smallest cell holds
        one quantum.
    penalty : float, default=0.0
        Constant log-prior per block.
    threshold_ratio : float, default=2.0
    adjacency : {"vertex", "edge"}, default="vertex"
    duplicates : {"error", "jitter"}, default="error"
    random_state : int or None, default=None
        Seed for duplicate jitter.
    max_steps : int or None, default=None
    engine : {"heap", "rescan"}, default="heap"
    adopt : {"at_stop", "max_over_history"}, default="at_stop"

    Attributes
    ----------
    cells_ : CellComplex
    partition_ : Partition
    history_ : IterationHistory
    block_labels_ : ndarray of shape (n_samples,)
        Block id of every training point.
    labels_ : ndarray of shape (n_samples,)
        Cluster id of every training point, ``-1`` for background.
    clusters_ : ClusterReport
    background_ : float
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> from voronoi_blocks import VoronoiBlocks
    >>> X = np.array([[1.0], [2.0], [3.0], [9.0]])
    >>> vb = VoronoiBlocks(bounds=[(0, 10)], quantum=0.5).fit(X)
    >>> vb.block_labels_.tolist()
    [0, 0, 2, 2]
    """

    def __init__(self, bounds=None, expand=0.05, quantum=None, penalty=0.0,
                 threshold_ratio=2.0, adjacency="vertex", duplicates="error",
                 random_state=None, max_steps=None, engine="heap", adopt="at_stop"):
        self.bounds = bounds
        self.expand = expand
        self.quantum = quantum
        self.penalty = penalty
        self.threshold_ratio = threshold_ratio
        self.adjacency = adjacency
        self.duplicates = duplicates
        self.random_state = random_state
        self.max_steps = max_steps
        self.engine = engine
        self.adopt = adopt

    def fit(self, X, y=None):
        """Tessellate, coalesce and extract clusters from ``X``."""
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        if X.shape[1] not in (1, 2):
            raise ValueError(f"X must have 1 or 2 columns, got {X.shape[1]}")
        if self.adjacency not in ("vertex", "edge"):
            raise ValueError(f"adjacency must be 'vertex' or 'edge', got {self.adjacency!r}")
        self.n_features_in_ = X.shape[1]

        ps = make_point_set(X, bounds=self.bounds, quantum=self.quantum, expand=self.expand,
                            duplicates=self.duplicates, random_state=self.random_state)
        cc = build_tessellation(ps, adjacency=self.adjacency)
        p0 = init_partition(cc, self.penalty)
        final, history = run_coalescence(p0, CoalesceConfig(max_steps=self.max_steps, engine=self.engine))
        part = best_model(history, final, self.adopt)
        report = extract_clusters(part, self.threshold_ratio)

        self.cells_ = cc
        self.partition_ = part
        self.history_ = history
        self.clusters_ = report
        self.background_ = report.background_density
        self.block_labels_ = part.labels()
        lookup = {b: (-1 if c is None else c) for b, c in report.block_to_cluster.items()}
        self.labels_ = np.array([lookup[b] for b in self.block_labels_], dtype=np.intp)
        return self

    def _check_queries(self, X):
        check_is_fitted(self, "partition_")
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def predict(self, X):
        """Cluster id at each query location, ``-1`` for background."""
        X = self._check_queries(X)
        cells = self.cells_.locate(X)
        return self.labels_[cells]

    def predict_blocks(self, X):
        """Block id at each query location."""
        X = self._check_queries(X)
        return self.block_labels_[self.cells_.locate(X)]

    def score_samples(self, X):
        """Piecewise-constant density (points per unit volume) at ``X``."""
        X = self._check_queries(X)
        return np.asarray(density_at(self.partition_, self.cells_, X), dtype=float)

    def density_grid(self, resolution):
        """Density on the cell centers of a regular grid over the window."""
        check_is_fitted(self, "partition_")
        return density_grid(self.partition_, self.cells_, resolution)

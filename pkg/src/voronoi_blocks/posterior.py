"""Marginal Poisson block posterior, merge factor and partition posterior.

All quantities are natural logarithms. The event rate of a block is
integrated out under a flat prior, leaving a function of the point count
``n`` and the volume ``v`` (in quanta) only::

    phi(n, v) = n! (v - n)! / (v + 1)!

written with gamma functions so that non-integer volumes are allowed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import DomainError

__all__ = [
    "BlockStats",
    "log_phi",
    "log_phi_array",
    "block_term",
    "log_merge_factor",
    "total_log_posterior",
]

# slack on the gamma-function domain v > n - 1
DOMAIN_EPS = 1e-12


@dataclass(frozen=True)
class BlockStats:
    """Sufficient statistics of one block.

    Parameters
    ----------
    n_points : int
        Number of data points in the block.
    volume_quanta : float
        Block volume measured in quanta.
    log_prior_penalty : float, default=0.0
        Constant log-prior contributed by the block to the partition
        posterior. Positive values favour more blocks, negative values
        favour fewer.
    """

    n_points: int
    volume_quanta: float
    log_prior_penalty: float = 0.0

    def __post_init__(self):
        _check_domain(self.n_points, self.volume_quanta)


def _check_domain(n, v):
    if n < 0 or int(n) != n:
        raise DomainError(f"point count must be a non-negative integer, got {n!r}")
    if not v - n + 1 >= DOMAIN_EPS:
        raise DomainError(f"volume {v!r} too small for {n} points (need v > n - 1)")


def log_phi(n, v):
    """Log posterior of a single constant-rate block.

    Parameters
    ----------
    n : int
        Number of points in the block.
    v : float
        Volume in quanta; must satisfy ``v > n - 1``.

    Returns
    -------
    float
        ``lgamma(n + 1) + lgamma(v - n + 1) - lgamma(v + 2)``.
    """
    _check_domain(n, v)
    return float(gammaln(n + 1.0) + gammaln(v - n + 1.0) - gammaln(v + 2.0))


def log_phi_array(n, v):
    """Elementwise :func:`log_phi`, bitwise equal to the scalar version.

    No domain check; callers pass statistics of valid blocks.
    """
    n = np.asarray(n, dtype=float)
    v = np.asarray(v, dtype=float)
    return gammaln(n + 1.0) + gammaln(v - n + 1.0) - gammaln(v + 2.0)


def block_term(stats: BlockStats) -> float:
    """Contribution of one block to the partition log posterior."""
    return log_phi(stats.n_points, stats.volume_quanta) + stats.log_prior_penalty


def log_merge_factor(a: BlockStats, b: BlockStats) -> float:
    """Log of the ratio of posteriors for merging ``a`` and ``b`` versus not.

    Merging removes one block, so the per-block log-prior is paid once.
    The expression is arranged so that the result equals
    ``total_log_posterior([merged]) - total_log_posterior([a, b])`` bit for
    bit, and is symmetric in its arguments.
    """
    if a.log_prior_penalty != b.log_prior_penalty:
        raise ValueError("blocks carry different log-prior penalties")
    merged = log_phi(a.n_points + b.n_points, a.volume_quanta + b.volume_quanta)
    merged += a.log_prior_penalty
    return merged - (block_term(a) + block_term(b))


def total_log_posterior(blocks) -> float:
    """Sum of block terms; 0.0 for an empty partition."""
    total = 0.0
    for stats in blocks:
        total += block_term(stats)
    return total

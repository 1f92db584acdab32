"""Exact reference computations for small problems.

``exact_phi`` evaluates the block posterior as a reduced fraction of big
integers. ``exhaustive_optimum`` enumerates every partition of a small cell
complex into connected blocks and returns the best one, which bounds what
greedy coalescence can reach.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

import mpmath

from .exceptions import DomainError, TooLarge

__all__ = [
    "exact_phi",
    "exact_log_phi",
    "connected_subsets",
    "connected_partitions",
    "exhaustive_optimum",
    "MAX_EXACT_V",
    "MAX_CELLS",
]

MAX_EXACT_V = 500
MAX_CELLS = 10

_MP_DPS = 50


def exact_phi(n: int, v: int) -> Fraction:
    """``n! (v - n)! / (v + 1)!`` as a reduced :class:`~fractions.Fraction`."""
    if int(n) != n or int(v) != v:
        raise DomainError("exact_phi needs integer arguments")
    n, v = int(n), int(v)
    if not 0 <= n <= v <= MAX_EXACT_V:
        raise DomainError(f"need 0 <= n <= v <= {MAX_EXACT_V}, got n={n}, v={v}")
    return Fraction(factorial(n) * factorial(v - n), factorial(v + 1))


def exact_log_phi(n, v):
    """High-precision log posterior as an ``mpmath.mpf``.

    Integer volumes go through :func:`exact_phi`; others use ``loggamma``
    at 50 significant digits.
    """
    with mpmath.workdps(_MP_DPS):
        if int(v) == v and 0 <= n <= v <= MAX_EXACT_V:
            f = exact_phi(n, int(v))
            return mpmath.log(f.numerator) - mpmath.log(f.denominator)
        if not v > n - 1:
            raise DomainError(f"volume {v!r} too small for {n} points")
        v = mpmath.mpf(v)
        return mpmath.loggamma(n + 1) + mpmath.loggamma(v - n + 1) - mpmath.loggamma(v + 2)


def connected_subsets(start, allowed, adjacency):
    """Yield every connected subset of ``allowed`` containing ``start`` once.

    Grows the set one neighbor at a time; a vertex that has been branched on
    is excluded from later siblings, so no subset is produced twice.
    """
    allowed = frozenset(allowed)

    def grow(current, extension, excluded):
        yield current
        extension = sorted(extension)
        excluded = set(excluded)
        while extension:
            w = extension.pop(0)
            new_ext = set(extension)
            for u in adjacency[w]:
                if u in allowed and u not in current and u not in excluded and u != w:
                    new_ext.add(u)
            yield from grow(current | {w}, new_ext, excluded | set(extension))
            excluded.add(w)

    first_ext = {u for u in adjacency[start] if u in allowed and u != start}
    yield from grow(frozenset([start]), first_ext, set())


def connected_partitions(n_cells, adjacency):
    """Yield partitions of ``range(n_cells)`` into connected blocks.

    Blocks are frozensets; the block holding the smallest unassigned cell is
    always chosen next, which makes every partition appear exactly once.
    """
    def rec(remaining, blocks):
        if not remaining:
            yield list(blocks)
            return
        s = min(remaining)
        for sub in connected_subsets(s, remaining, adjacency):
            blocks.append(sub)
            yield from rec(remaining - sub, blocks)
            blocks.pop()

    yield from rec(frozenset(range(n_cells)), [])


def exhaustive_optimum(cc, penalty: float = 0.0):
    """Best connected partition of a small cell complex.

    Parameters
    ----------
    cc : CellComplex
        At most ``MAX_CELLS`` cells. Integer volumes are scored exactly;
        other volumes use 50-digit log-gamma.
    penalty : float
        Constant log-prior per block.

    Returns
    -------
    blocks : list of tuple
        Sorted cell indices of each block, ordered by smallest cell.
    total : float
        Total log posterior of that partition.
    """
    n = cc.n_cells
    if n > MAX_CELLS:
        raise TooLarge(f"exhaustive search limited to {MAX_CELLS} cells, got {n}")
    adjacency = [set(c.neighbors) for c in cc.cells]
    vols = [c.volume_quanta for c in cc.cells]
    cache = {}

    def score(block):
        if block not in cache:
            v = sum(vols[i] for i in block)
            if all(float(vols[i]).is_integer() for i in block):
                v = int(round(v))
            cache[block] = exact_log_phi(len(block), v)
        return cache[block]

    best = None
    with mpmath.workdps(_MP_DPS):
        for blocks in connected_partitions(n, adjacency):
            total = mpmath.fsum(score(b) for b in blocks) + len(blocks) * mpmath.mpf(penalty)
            key = sorted(tuple(sorted(b)) for b in blocks)
            if best is None:
                best = (total, key)
                continue
            gap = total - best[0]
            if gap > 1e-12 or (abs(gap) <= 1e-12 and (len(key), key) < (len(best[1]), best[1])):
                best = (total, key)
    return best[1], float(best[0])

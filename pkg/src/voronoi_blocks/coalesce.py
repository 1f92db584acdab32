"""Greedy cell coalescence.

Starting from one block per Voronoi cell, the adjacent pair of blocks with
the largest positive log merge factor is merged until no adjacent pair
would raise the partition posterior. Each block caches its best merge
partner; a max-heap over those candidates is invalidated lazily through
per-block stamps.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import gammaln

from .exceptions import InvalidMerge, QuantizationError
from .geometry import CellComplex, validate_quantization
from .posterior import BlockStats, log_phi, log_phi_array, total_log_posterior

__all__ = [
    "Block",
    "Partition",
    "CoalesceConfig",
    "MergeStep",
    "IterationHistory",
    "init_partition",
    "run_coalescence",
    "merge_blocks",
    "best_model",
    "TIE_TOL",
]

# candidates whose factors differ by less than this are tied
TIE_TOL = 1e-12


@dataclass(frozen=True)
class Block:
    """Read-only view of one live block."""

    id: int
    cells: tuple
    n_points: int
    volume_quanta: float
    log_phi: float

    @property
    def stats(self) -> BlockStats:
        return BlockStats(self.n_points, self.volume_quanta)


class Partition:
    """Live blocks of a cell complex with their adjacency graph.

    Block ids are the smallest cell index they contain, since the lower id
    survives every merge. Point counts, volumes and block terms are stored
    in arrays indexed by block id; entries of dead blocks are stale.
    """

    def __init__(self, cc: CellComplex, penalty: float = 0.0):
        self.cc = cc
        self.penalty = float(penalty)
        size = cc.n_cells
        self.N = np.zeros(size)
        self.V = np.zeros(size)
        self.T = np.zeros(size)
        # lgamma(k + 1) for every possible point count k
        self._lgamma_count = gammaln(np.arange(size + 1) + 1.0)
        self.members = {}
        self.neighbors = {}
        self.versions = {}
        self.total_log_posterior = 0.0
        self.version = 0

    # --- construction -------------------------------------------------
    @classmethod
    def from_cells(cls, cc: CellComplex, penalty: float = 0.0) -> "Partition":
        p = cls(cc, penalty)
        p.N[:] = 1.0
        p.V[:] = cc.volumes
        for i, cell in enumerate(cc.cells):
            p.T[i] = log_phi(1, cell.volume_quanta) + p.penalty
            p.members[i] = [i]
            p.neighbors[i] = set(cell.neighbors)
            p.versions[i] = 0
        total = 0.0
        for i in range(cc.n_cells):
            total += float(p.T[i])
        p.total_log_posterior = total
        return p

    def copy(self) -> "Partition":
        p = Partition.__new__(Partition)
        p.cc = self.cc
        p.penalty = self.penalty
        p._lgamma_count = self._lgamma_count
        p.N = self.N.copy()
        p.V = self.V.copy()
        p.T = self.T.copy()
        p.members = {k: list(m) for k, m in self.members.items()}
        p.neighbors = {k: set(s) for k, s in self.neighbors.items()}
        p.versions = dict(self.versions)
        p.total_log_posterior = self.total_log_posterior
        p.version = self.version
        return p

    # --- queries ------------------------------------------------------
    def __len__(self):
        return len(self.members)

    def __contains__(self, bid):
        return bid in self.members

    @property
    def block_ids(self) -> list:
        return sorted(self.members)

    def n_points(self, bid) -> int:
        return int(self.N[bid])

    def volume(self, bid) -> float:
        return float(self.V[bid])

    def block(self, bid) -> Block:
        return Block(
            id=bid,
            cells=tuple(sorted(self.members[bid])),
            n_points=int(self.N[bid]),
            volume_quanta=float(self.V[bid]),
            log_phi=log_phi(self.N[bid], self.V[bid]),
        )

    @property
    def blocks(self) -> List[Block]:
        return [self.block(b) for b in self.block_ids]

    def stats(self, bid) -> BlockStats:
        return BlockStats(int(self.N[bid]), float(self.V[bid]), self.penalty)

    def adjacent_pairs(self) -> list:
        return sorted((a, b) for a, nbrs in self.neighbors.items() for b in nbrs if a < b)

    def merge_factor(self, a, b) -> float:
        """Log merge factor of live blocks ``a`` and ``b``.

        Same floating-point expression as
        :func:`voronoi_blocks.posterior.log_merge_factor` and, elementwise,
        as :meth:`merge_factors`.
        """
        N, V, T = self.N, self.V, self.T
        merged = log_phi(N[a] + N[b], V[a] + V[b]) + self.penalty
        return float(merged - (T[a] + T[b]))

    def merge_factors(self, xs, ys) -> np.ndarray:
        """Vectorized :meth:`merge_factor` over paired id arrays."""
        N, V, T = self.N, self.V, self.T
        merged = log_phi_array(N[xs] + N[ys], V[xs] + V[ys]) + self.penalty
        return merged - (T[xs] + T[ys])

    def merge_factors_with(self, x, ys) -> np.ndarray:
        """Factors of block ``x`` with each block in ``ys``.

        Bitwise equal to :meth:`merge_factor`; the count term comes from a
        table of the same ``gammaln`` values.
        """
        N, V, T = self.N, self.V, self.T
        n = N[x] + N[ys]
        v = V[x] + V[ys]
        lp = self._lgamma_count[n.astype(np.intp)] + gammaln(v - n + 1.0) - gammaln(v + 2.0)
        return (lp + self.penalty) - (T[x] + T[ys])

    def labels(self):
        """Block id of every cell, index-aligned with the points."""
        out = np.empty(self.cc.n_cells, dtype=np.intp)
        for bid, cells in self.members.items():
            out[cells] = bid
        return out

    def recompute_total(self) -> float:
        return total_log_posterior(self.stats(b) for b in self.block_ids)

    def check_invariants(self, rtol=1e-12, atol_total=1e-8):
        """Raise AssertionError if any structural invariant is violated."""
        cc = self.cc
        seen = []
        for bid, cells in self.members.items():
            seen.extend(cells)
            assert bid == min(cells), f"block {bid} id is not its smallest cell"
            assert self.N[bid] == len(cells)
            vsum = math.fsum(cc.cells[c].volume_quanta for c in cells)
            assert abs(self.V[bid] - vsum) <= rtol * vsum, f"block {bid} volume drift"
        assert sorted(seen) == list(range(cc.n_cells)), "blocks do not partition the cells"
        vtot = math.fsum(self.V[b] for b in self.members)
        assert abs(vtot - cc.total_volume_quanta) <= 1e-9 * cc.total_volume_quanta
        owner = self.labels()
        expected = {b: set() for b in self.members}
        for i, j in cc.edges:
            bi, bj = int(owner[i]), int(owner[j])
            if bi != bj:
                expected[bi].add(bj)
                expected[bj].add(bi)
        assert expected == self.neighbors, "block adjacency inconsistent with cells"
        assert abs(self.recompute_total() - self.total_log_posterior) <= atol_total

    def to_dict(self) -> dict:
        qvol = self.cc.quantum_volume
        blocks = []
        for b in self.blocks:
            v_units = b.volume_quanta * qvol
            blocks.append({
                "id": b.id,
                "points": list(b.cells),
                "n_points": b.n_points,
                "volume_quanta": b.volume_quanta,
                "volume_units": v_units,
                "density": b.n_points / v_units,
                "log_phi": b.log_phi,
                "neighbors": sorted(self.neighbors[b.id]),
            })
        return {
            "n_points": self.cc.n_cells,
            "n_blocks": len(blocks),
            "penalty": self.penalty,
            "quantum": list(self.cc.quantum),
            "quantum_volume": qvol,
            "total_log_posterior": self.total_log_posterior,
            "blocks": blocks,
        }


def init_partition(cc: CellComplex, penalty: float = 0.0) -> Partition:
    """One block per cell; refuses complexes with sub-quantum cells."""
    report = validate_quantization(cc)
    if not report.passed:
        raise QuantizationError(
            f"{len(report.failing)} cell(s) smaller than one quantum; "
            f"largest passing quantum is {list(report.suggested_quantum)}",
            report,
        )
    return Partition.from_cells(cc, penalty)


def merge_blocks(p: Partition, a, b) -> float:
    """Merge live adjacent blocks ``a`` and ``b`` in place.

    The lower id absorbs the other block. Returns the log merge factor that
    was added to the partition posterior.
    """
    if a not in p.members or b not in p.members or a == b:
        raise InvalidMerge(f"blocks {a} and {b} are not two live blocks")
    if b not in p.neighbors[a]:
        raise InvalidMerge(f"blocks {a} and {b} are not adjacent")
    keep, gone = (a, b) if a < b else (b, a)
    factor = p.merge_factor(keep, gone)

    p.N[keep] += p.N[gone]
    p.V[keep] += p.V[gone]
    p.T[keep] = log_phi(p.N[keep], p.V[keep]) + p.penalty

    kept, moved = p.members[keep], p.members.pop(gone)
    if len(moved) > len(kept):
        kept, moved = moved, kept
    kept.extend(moved)
    p.members[keep] = kept

    gone_nbrs = p.neighbors.pop(gone)
    keep_nbrs = p.neighbors[keep]
    for c in gone_nbrs:
        nb = p.neighbors[c]
        nb.discard(gone)
        if c != keep:
            nb.add(keep)
    if len(gone_nbrs) > len(keep_nbrs):
        keep_nbrs, gone_nbrs = gone_nbrs, keep_nbrs
    keep_nbrs |= gone_nbrs
    keep_nbrs.discard(keep)
    keep_nbrs.discard(gone)
    p.neighbors[keep] = keep_nbrs

    del p.versions[gone]
    p.versions[keep] += 1
    p.version += 1
    p.total_log_posterior += factor
    return factor


@dataclass
class CoalesceConfig:
    """Run options.

    Parameters
    ----------
    max_steps : int or None
        Merge budget; ``None`` means ``n_blocks - 1``.
    engine : {"heap", "rescan"}
        ``"rescan"`` evaluates every adjacent pair at every step; it exists
        to check the heap engine and is far slower.
    tie_tol : float
        Factors within this distance of the best are tied; the smallest
        ``(a, b)`` pair wins. A factor within it of zero counts as zero and
        does not merge, so rounding cannot merge pairs whose exact ratio
        is one.
    """

    max_steps: Optional[int] = None
    engine: str = "heap"
    tie_tol: float = TIE_TOL


@dataclass(frozen=True)
class MergeStep:
    step: int
    pair: tuple
    log_merge_factor: float
    total_log_posterior: float


@dataclass
class IterationHistory:
    initial_total: float
    steps: List[MergeStep] = field(default_factory=list)
    truncated: bool = False

    def __len__(self):
        return len(self.steps)

    @property
    def totals(self) -> list:
        return [self.initial_total] + [s.total_log_posterior for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "initial_total_log_posterior": self.initial_total,
            "truncated": self.truncated,
            "steps": [
                {
                    "step": s.step,
                    "pair": list(s.pair),
                    "log_merge_factor": s.log_merge_factor,
                    "total_log_posterior": s.total_log_posterior,
                }
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _record(p, history, a, b):
    f = merge_blocks(p, a, b)
    history.steps.append(MergeStep(len(history.steps) + 1, (a, b), f, p.total_log_posterior))


def _choose(fs, los, his, tie_tol):
    """Index of the winning candidate, or None if nothing is positive.

    Among candidates within ``tie_tol`` of the largest factor, the smallest
    ``(lo, hi)`` pair wins.
    """
    if fs.size == 0:
        return None
    fmax = fs.max()
    if not fmax > tie_tol:
        return None
    tied = np.flatnonzero((fs >= fmax - tie_tol) & (fs > tie_tol))
    if tied.size == 1:
        return int(tied[0])
    order = np.lexsort((his[tied], los[tied]))
    return int(tied[order[0]])


def _run_rescan(p, history, max_steps, tie_tol):
    while True:
        pairs = p.adjacent_pairs()
        if not pairs:
            return
        arr = np.asarray(pairs, dtype=np.intp)
        fs = p.merge_factors(arr[:, 0], arr[:, 1])
        k = _choose(fs, arr[:, 0], arr[:, 1], tie_tol)
        if k is None:
            return
        if len(history.steps) >= max_steps:
            history.truncated = True
            return
        _record(p, history, int(arr[k, 0]), int(arr[k, 1]))


def _owned_best(p, x, nbrs, tie_tol):
    """Best positive merge among the pairs owned by block ``x``.

    A pair is owned by the endpoint with more points, the lower id on a
    draw. ``nbrs`` holds the current neighbors of ``x`` (duplicates are
    harmless). Returns ``(factor, lo, hi)`` or None; ties within
    ``tie_tol`` go to the smallest ``(lo, hi)``, as in the global choice.
    """
    N = p.N
    nx = N[x]
    ny = N[nbrs]
    ys = nbrs[(nx > ny) | ((nx == ny) & (x < nbrs))]
    if ys.size == 0:
        return None
    fs = p.merge_factors_with(x, ys)
    fmax = fs.max()
    if not fmax > tie_tol:
        return None
    tied = np.flatnonzero((fs >= fmax - tie_tol) & (fs > tie_tol))
    if tied.size == 1:
        k = int(tied[0])
    else:
        others = ys[tied]
        # partners below x give pairs (y, x); the smallest such y wins
        below = others[others < x]
        y = int(below.min()) if below.size else int(others.min())
        k = int(tied[np.flatnonzero(others == y)[0]])
    y = int(ys[k])
    return (float(fs[k]), min(x, y), max(x, y))


class _NeighborArrays:
    """Array copies of block adjacency for vectorized candidate scans.

    Merging concatenates the two arrays; ids of absorbed blocks are mapped
    to their survivor on read through a compressed parent table.
    """

    def __init__(self, p):
        self.p = p
        self.parent = np.arange(p.cc.n_cells, dtype=np.intp)
        self.arrays = {
            x: np.fromiter(nb, dtype=np.intp, count=len(nb)) for x, nb in p.neighbors.items()
        }

    def merge(self, keep, gone):
        self.parent[gone] = keep
        self.arrays[keep] = np.concatenate([self.arrays[keep], self.arrays.pop(gone)])

    def _find(self, ids):
        parent = self.parent
        r = parent[ids]
        while True:
            rr = parent[r]
            if np.array_equal(rr, r):
                break
            r = rr
        parent[ids] = r
        return r

    def get(self, x):
        arr = self._find(self.arrays[x])
        arr = arr[arr != x]
        if arr.size > 2 * len(self.p.neighbors[x]) + 16:
            arr = np.unique(arr)
        self.arrays[x] = arr
        return arr


def _run_heap(p, history, max_steps, tie_tol):
    # Every adjacent pair is owned by one endpoint, and each block keeps its
    # best owned pair in the heap. After a merge only the survivor and the
    # neighbors owning a pair with it are refreshed. Other entries whose
    # partner changed still bound their owner's remaining pairs from above
    # and are recomputed when they reach the top.
    members = p.members
    versions = p.versions
    N = p.N
    nbrs = _NeighborArrays(p)
    stamp = dict.fromkeys(members, 0)
    heap = []

    def refresh(x, arr=None):
        stamp[x] += 1
        if arr is None:
            arr = nbrs.get(x)
        cand = _owned_best(p, x, arr, tie_tol) if arr.size else None
        if cand is not None:
            f, lo, hi = cand
            partner = hi if x == lo else lo
            heapq.heappush(heap, (-f, lo, hi, x, stamp[x], versions[partner]))

    for x in list(members):
        refresh(x)

    def status(e):
        x = e[3]
        if x not in members or stamp[x] != e[4]:
            return "dead"
        partner = e[2] if x == e[1] else e[1]
        if versions.get(partner) != e[5]:
            return "dirty"
        return "ok"

    while heap:
        top = heapq.heappop(heap)
        st = status(top)
        if st == "dead":
            continue
        if st == "dirty":
            refresh(top[3])
            continue
        tied = [top]
        cutoff = -top[0] - tie_tol
        while heap and -heap[0][0] >= cutoff:
            e = heapq.heappop(heap)
            st = status(e)
            if st == "ok":
                tied.append(e)
            elif st == "dirty":
                refresh(e[3])
        chosen = min(tied, key=lambda e: (e[1], e[2]))
        for e in tied:
            if e is not chosen:
                heapq.heappush(heap, e)
        if len(history.steps) >= max_steps:
            history.truncated = True
            return
        a, b = chosen[1], chosen[2]
        _record(p, history, a, b)
        nbrs.merge(a, b)

        arr = nbrs.get(a)
        refresh(a, arr)
        na = N[a]
        na_arr = N[arr]
        owners = arr[(na_arr > na) | ((na_arr == na) & (arr < a))]
        for c in np.unique(owners).tolist():
            refresh(c)


def run_coalescence(p: Partition, config: Optional[CoalesceConfig] = None):
    """Greedily merge adjacent blocks while some merge raises the posterior.

    The input partition is left untouched.

    Returns
    -------
    partition : Partition
        The halted partition, a local optimum unless the run was truncated.
    history : IterationHistory
        Every accepted merge in order; ``history.truncated`` is set when
        ``max_steps`` stopped the run while a positive merge remained.
    """
    config = config or CoalesceConfig()
    p = p.copy()
    history = IterationHistory(initial_total=p.total_log_posterior)
    max_steps = len(p) - 1 if config.max_steps is None else int(config.max_steps)
    if config.engine == "heap":
        _run_heap(p, history, max_steps, config.tie_tol)
    elif config.engine == "rescan":
        _run_rescan(p, history, max_steps, config.tie_tol)
    else:
        raise ValueError(f"unknown engine {config.engine!r}")
    return p, history


def best_model(history: IterationHistory, p_final: Partition, mode="at_stop") -> Partition:
    """Adopt a model from a completed run.

    ``"at_stop"`` returns the halted partition. ``"max_over_history"``
    returns the recorded state with the largest total posterior, rebuilt by
    replaying the merges; with a monotone history it is the halted state.
    """
    if mode == "at_stop":
        return p_final
    if mode != "max_over_history":
        raise ValueError(f"unknown mode {mode!r}")
    totals = history.totals
    k = max(range(len(totals)), key=lambda i: (totals[i], i))
    if k == len(history.steps):
        chosen = p_final
    else:
        chosen = Partition.from_cells(p_final.cc, p_final.penalty)
        for s in history.steps[:k]:
            merge_blocks(chosen, *s.pair)
    monotone = all(b > a for a, b in zip(totals, totals[1:]))
    if monotone and chosen.total_log_posterior != p_final.total_log_posterior:
        raise AssertionError("monotone history but best state differs from final state")
    return chosen

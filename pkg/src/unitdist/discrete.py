"""Discrete unit-distance counting.

Ordered-pair convention throughout: the count is over ordered pairs
(p1, p2), p1 != p2, with | |p1 - p2| - 1 | <= eps. The literature often
reports unordered edges; ordered counts here are exactly twice those.

The grid counter buckets points into a uniform grid of cell side 1/sqrt(d)
and compares squared distances with the *same* vectorized expression as the
brute-force counter, so the two agree bit-for-bit, not just approximately.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .geom import general_position_check

__all__ = [
    "PointSet",
    "count_unit_pairs_bruteforce",
    "count_unit_pairs_grid",
    "two_circles_r4",
    "random_general_position",
    "UnitPairReport",
    "unit_step_census",
    "normalized_pair_count",
]

_CHUNK = 256  # rows per block in pairwise-distance passes


@dataclass(frozen=True)
class PointSet:
    """Finite point configuration with an explicit unit-distance tolerance.

    eps is always an explicit field: exact-1 distances exist only in
    constructed examples, while random experiments need a band.
    """

    points: np.ndarray
    eps: float = 1e-9
    label: str = ""

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 1)
        if pts.ndim != 2:
            raise ValueError(f"points must be (n, d), got shape {pts.shape}")
        if not 1 <= pts.shape[1] <= 8:
            raise ValueError(f"dimension {pts.shape[1]} outside 1..8")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def validate_distinct(self) -> None:
        """Pairwise-distinctness invariant (distance > eps). O(n^2)."""
        pts = self.points
        for i0 in range(0, self.n, _CHUNK):
            blk = pts[i0 : i0 + _CHUNK]
            d2 = ((blk[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
            rows, cols = np.nonzero(d2 <= self.eps * self.eps)
            for r, c in zip(rows, cols):
                if i0 + r != c:
                    raise ValueError(
                        f"points {i0 + r} and {c} coincide within eps={self.eps:g}"
                    )

    # -- plain-text serialization (bit-exact round-trip) --------------------

    def to_text(self) -> str:
        lines = [f"{self.d} {self.n} {self.eps:.17g}"]
        for row in self.points:
            lines.append(" ".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, label: str = "") -> "PointSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty point-set file")
        head = lines[0].split()
        if len(head) != 3:
            raise ValueError("header must be 'd n eps'")
        d, n, eps = int(head[0]), int(head[1]), float(head[2])
        if len(lines) - 1 != n:
            raise ValueError(f"header promises {n} points, file has {len(lines) - 1}")
        pts = np.array(
            [[float(tok) for tok in ln.split()] for ln in lines[1:]], dtype=np.float64
        ).reshape(n, d)
        return cls(points=pts, eps=eps, label=label)


def _band_count(A: np.ndarray, B: np.ndarray, lo2: float, hi2: float) -> int:
    """Ordered pairs (a, b) with squared distance in [lo2, hi2].

    Shared by both counters: identical arithmetic means identical rounding.
    """
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    return int(((d2 >= lo2) & (d2 <= hi2)).sum())


def _band_limits(eps: float) -> tuple[float, float]:
    lo = max(0.0, 1.0 - eps)
    hi = 1.0 + eps
    return lo * lo, hi * hi


def count_unit_pairs_bruteforce(P: PointSet) -> int:
    """O(n^2) reference count of ordered unit pairs."""
    pts = P.points
    lo2, hi2 = _band_limits(P.eps)
    total = 0
    for i0 in range(0, P.n, _CHUNK):
        blk = pts[i0 : i0 + _CHUNK]
        d2 = ((blk[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        inband = (d2 >= lo2) & (d2 <= hi2)
        # the diagonal has distance 0; it is in-band only if eps >= 1
        if lo2 == 0.0:
            idx = np.arange(blk.shape[0])
            inband[idx, i0 + idx] = False
        total += int(inband.sum())
    return total


def _grid_cells(pts: np.ndarray, side: float) -> dict[tuple[int, ...], np.ndarray]:
    keys = np.floor(pts / side).astype(np.int64)
    cells: dict[tuple[int, ...], list[int]] = {}
    for i, key in enumerate(map(tuple, keys)):
        cells.setdefault(key, []).append(i)
    return {k: np.array(v, dtype=np.intp) for k, v in cells.items()}


def _compatible_offsets(d: int, side: float, eps: float) -> list[tuple[int, ...]]:
    """Nonzero integer cell offsets that can realize a distance in 1 +- eps.

    For offset Delta the distance between points of cells k and k + Delta
    lies in [side*sqrt(sum max(0,|Di|-1)^2), side*sqrt(sum (|Di|+1)^2)];
    keep offsets whose range meets the band. Only the lexicographically
    positive half is kept (each unordered cell pair is visited once).
    """
    reach = int(math.ceil((1.0 + eps) / side)) + 1
    lo, hi = 1.0 - eps, 1.0 + eps
    out = []
    for delta in itertools.product(range(-reach, reach + 1), repeat=d):
        if delta <= (0,) * d:
            continue
        near = side * math.sqrt(sum(max(0, abs(t) - 1) ** 2 for t in delta))
        far = side * math.sqrt(sum((abs(t) + 1) ** 2 for t in delta))
        if near <= hi and far >= lo:
            out.append(delta)
    return out


def count_unit_pairs_grid(P: PointSet) -> int:
    """Grid-bucketed count, exactly equal to the brute-force count.

    Requires eps < 0.1: the offset pruning certifies cell pairs only for
    bands well inside the cell geometry.
    """
    if P.eps >= 0.1:
        raise ValueError("grid counter requires eps < 0.1")
    if P.n == 0:
        return 0
    pts = P.points
    d = P.d
    side = 1.0 / math.sqrt(d)
    lo2, hi2 = _band_limits(P.eps)
    cells = _grid_cells(pts, side)
    offsets = _compatible_offsets(d, side, P.eps)

    total = 0
    for key, idx in cells.items():
        blk = pts[idx]
        # within-cell: full ordered matrix minus the diagonal, same
        # expression as brute force (diagonal excluded since eps < 1)
        d2 = ((blk[:, None, :] - blk[None, :, :]) ** 2).sum(-1)
        total += int(((d2 >= lo2) & (d2 <= hi2)).sum())
        for delta in offsets:
            other = cells.get(tuple(k + t for k, t in zip(key, delta)))
            if other is None:
                continue
            total += 2 * _band_count(blk, pts[other], lo2, hi2)
    return total


def two_circles_r4(N: int, seed: int = 0) -> PointSet:
    """2N points in R^4: one seeded angular sample of N points of norm
    2^-1/2 placed on each of two orthogonal coordinate 2-planes.

    Every cross pair has squared distance 1/2 + 1/2 = 1 exactly, so the
    ordered unit-pair count is at least N^2 (actually 2 N^2, plus any
    within-circle chords that happen to land in the eps band).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * math.pi, N)
    r = 1.0 / math.sqrt(2.0)
    xy = np.stack([r * np.cos(angles), r * np.sin(angles)], axis=1)
    pts = np.zeros((2 * N, 4))
    pts[:N, 0:2] = xy
    pts[N:, 2:4] = xy
    return PointSet(points=pts, eps=1e-9, label=f"two-circles-r4(N={N},seed={seed})")


def random_general_position(
    n: int, d: int, seed: int, tol: float = 1e-9, sample_count: int = 10_000
) -> PointSet:
    """Uniform points in [0, n^(1/d)]^d, resampled until the general-position
    check passes (exhaustive when C(n, d) <= sample_count, else sampled).

    The box scales with n^(1/d) so density stays constant and unit pairs
    remain abundant. The retry sequence is deterministic in the seed; the
    check mode used is recorded in the label.
    """
    if d < 2 or d > 8:
        raise ValueError("d must be in 2..8")
    if n < d:
        raise ValueError("need n >= d")
    exhaustive = math.comb(n, d) <= sample_count
    mode = "exhaustive" if exhaustive else "sampled"
    box = n ** (1.0 / d)
    for attempt in range(100):
        rng = np.random.default_rng([seed, attempt])
        pts = rng.uniform(0.0, box, (n, d))
        report = general_position_check(
            pts, tol=tol, mode=mode, sample_count=sample_count, seed=seed + attempt
        )
        if report.ok:
            return PointSet(
                points=pts,
                eps=1e-9,
                label=f"general-position(n={n},d={d},seed={seed},check={mode})",
            )
    raise RuntimeError(f"no general-position sample in 100 rounds (n={n}, d={d})")


@dataclass(frozen=True)
class UnitPairReport:
    """Census of unit steps: pairs, d-tuples of steps, and the endpoint map.

    edge_count is the number of ordered pairs (p, p+b) at unit distance,
    i.e. of unit steps (p, b); it always equals ordered_pair_count (the two
    countings are a bijection). tuple_count counts tuples (p, b_1..b_d) with
    every (p, b_j) a unit step and repetitions allowed;
    distinct_tuple_count restricts to pairwise-distinct b_j.
    holder_lhs = edge_count^d / n^(d-1), which power-mean arithmetic forces
    to be <= tuple_count. max_endpoint_fiber is the largest number of
    distinct-step tuples sharing one endpoint image (p+b_1, ..., p+b_d).
    """

    n_points: int
    d: int
    ordered_pair_count: int
    edge_count: int
    tuple_count: int
    distinct_tuple_count: int
    holder_lhs: float
    max_endpoint_fiber: int
    normalized_count: float


def _unit_neighbor_lists(P: PointSet) -> list[np.ndarray]:
    """neighbors[i] = indices j != i with |p_i - p_j| within eps of 1."""
    pts = P.points
    lo2, hi2 = _band_limits(P.eps)
    neighbors: list[np.ndarray] = []
    for i0 in range(0, P.n, _CHUNK):
        blk = pts[i0 : i0 + _CHUNK]
        d2 = ((blk[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        inband = (d2 >= lo2) & (d2 <= hi2)
        if lo2 == 0.0:
            idx = np.arange(blk.shape[0])
            inband[idx, i0 + idx] = False
        for r in range(blk.shape[0]):
            neighbors.append(np.nonzero(inband[r])[0])
    return neighbors


_TUPLE_CAP = 10**7


def unit_step_census(P: PointSet) -> UnitPairReport:
    """Count unit steps, step d-tuples, and endpoint-map collisions."""
    if P.d >= 3 and P.n > 2000:
        raise ValueError("census capped at 2000 points for d >= 3")
    if P.n == 0:
        return UnitPairReport(0, P.d, 0, 0, 0, 0, 0.0, 0, 0.0)
    neighbors = _unit_neighbor_lists(P)
    degs = np.array([len(nb) for nb in neighbors], dtype=np.int64)
    d = P.d
    edge_count = int(degs.sum())
    tuple_count = int((degs.astype(object) ** d).sum())
    falling = np.ones(len(degs), dtype=object)
    for k in range(d):
        falling *= np.maximum(degs - k, 0).astype(object)
    distinct_tuple_count = int(falling.sum())
    if distinct_tuple_count > _TUPLE_CAP:
        raise ValueError(
            f"distinct-tuple enumeration {distinct_tuple_count} exceeds cap {_TUPLE_CAP}"
        )

    fibers: dict[tuple[int, ...], int] = {}
    for i, nb in enumerate(neighbors):
        if len(nb) < d:
            continue
        for combo in itertools.permutations(nb.tolist(), d):
            fibers[combo] = fibers.get(combo, 0) + 1
    max_fiber = max(fibers.values()) if fibers else 0

    holder_lhs = edge_count**d / P.n ** (d - 1)
    return UnitPairReport(
        n_points=P.n,
        d=d,
        ordered_pair_count=edge_count,
        edge_count=edge_count,
        tuple_count=tuple_count,
        distinct_tuple_count=distinct_tuple_count,
        holder_lhs=holder_lhs,
        max_endpoint_fiber=max_fiber,
        normalized_count=normalized_pair_count_value(edge_count, P.n, d),
    )


def normalized_pair_count_value(count: int, n: int, d: int) -> float:
    return count / n ** ((2 * d - 1) / d)


def normalized_pair_count(P: PointSet) -> float:
    """Ordered unit-pair count over n^((2d-1)/d), the scale at which the
    count of a general-position set is conjectured to stay bounded."""
    if P.n < 2:
        raise ValueError("need at least 2 points")
    return normalized_pair_count_value(count_unit_pairs_bruteforce(P), P.n, P.d)

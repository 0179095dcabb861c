"""Annulus-overlap geometry and discrete incidence counts.

The continuous objects here are the two-annulus intersection (how much can
two unit annuli with delta-fattened boundaries overlap, as a function of
the center separation) and the section measure
lambda(k) = |{y : 1 - 2 delta <= |y| <= 1 + 2 delta, k + y in K_delta}|.
The discrete objects are delta-separated nets of the rasterized set, the
dyadic ladder of section sizes, and the census of well-separated tuples
sitting on a common unit annulus -- the counting skeleton behind the
pair-measure lower bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import GridIndicator

__all__ = [
    "AnnulusOverlap",
    "annulus_intersection_area",
    "separated_subset",
    "SectionHistogram",
    "section_histogram",
    "section_measures",
    "IncidenceCensus",
    "incidence_census",
]

TUPLE_CAP = 10**9


# ---------------------------------------------------------------------------
# exact two-annulus overlap
# ---------------------------------------------------------------------------

def _lens_area(r1: float, r2: float, s: float) -> float:
    """Area of the intersection of discs of radii r1, r2 at center distance s."""
    if s >= r1 + r2:
        return 0.0
    if s <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    a1 = math.acos(max(-1.0, min(1.0, (s * s + r1 * r1 - r2 * r2) / (2 * s * r1))))
    a2 = math.acos(max(-1.0, min(1.0, (s * s + r2 * r2 - r1 * r1) / (2 * s * r2))))
    sq = (-s + r1 + r2) * (s + r1 - r2) * (s - r1 + r2) * (s + r1 + r2)
    return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * math.sqrt(max(0.0, sq))


@dataclass(frozen=True)
class AnnulusOverlap:
    area: float
    separation: float
    scaled_constant: float  # area * (delta + separation) / delta^2


def annulus_intersection_area(
    separation: float, delta: float, width_multiplier: float = 2.0
) -> AnnulusOverlap:
    """Exact area of the overlap of two fattened unit circles.

    Each annulus is {x : 1 - w delta <= |x - c_i| <= 1 + w delta}; inclusion-
    exclusion over the four disc pairs gives the overlap in closed form. The
    scaled constant area * (delta + s) / delta^2 is the quantity that stays
    bounded uniformly in s and delta.
    """
    if delta <= 0 or width_multiplier * delta >= 1:
        raise ValueError("need 0 < width_multiplier * delta < 1")
    if separation < 0:
        raise ValueError("separation must be nonnegative")
    w = width_multiplier * delta
    hi, lo = 1.0 + w, 1.0 - w
    s = separation
    if s == 0.0:
        area = math.pi * (hi * hi - lo * lo)
    else:
        area = (
            _lens_area(hi, hi, s)
            - _lens_area(hi, lo, s)
            - _lens_area(lo, hi, s)
            + _lens_area(lo, lo, s)
        )
        area = max(area, 0.0)
    return AnnulusOverlap(
        area=area,
        separation=s,
        scaled_constant=area * (delta + s) / (delta * delta),
    )


# ---------------------------------------------------------------------------
# separated nets
# ---------------------------------------------------------------------------

def separated_subset(points: np.ndarray, r: float) -> np.ndarray:
    """Indices of a maximal r-separated subset, greedy in row order.

    Every selected pair is at distance >= r and every rejected point is
    within r of some selected one (so the selection is also an r-net).
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    if not (r > 0):
        raise ValueError("r must be positive")
    n, d = pts.shape
    buckets: dict[tuple[int, ...], list[int]] = {}
    offsets = [
        np.array(off)
        for off in np.ndindex(*([3] * d))
    ]
    kept: list[int] = []
    r2 = r * r
    keys = np.floor(pts / r).astype(np.int64)
    for i in range(n):
        key = keys[i]
        ok = True
        for off in offsets:
            cand = buckets.get(tuple(key + off - 1))
            if not cand:
                continue
            diff = pts[cand] - pts[i]
            if (np.einsum("ij,ij->i", diff, diff) < r2).any():
                ok = False
                break
        if ok:
            kept.append(i)
            buckets.setdefault(tuple(key), []).append(i)
    return np.array(kept, dtype=np.int64)


# ---------------------------------------------------------------------------
# section measures and their dyadic histogram
# ---------------------------------------------------------------------------

def _fft_convolve_same(mask: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve with a centered kernel, same output shape as mask."""
    pads = [(k - 1) // 2 for k in kernel.shape]
    shape = [
        1 << (n + k - 1).bit_length() for n, k in zip(mask.shape, kernel.shape)
    ]
    axes = tuple(range(mask.ndim))
    fa = np.fft.rfftn(mask, shape, axes=axes)
    fk = np.fft.rfftn(kernel, shape, axes=axes)
    conv = np.fft.irfftn(fa * fk, shape, axes=axes)
    sl = tuple(slice(p, p + n) for p, n in zip(pads, mask.shape))
    return conv[sl]


def section_measures(G: GridIndicator) -> np.ndarray:
    """lambda at every cell: occupied-cell count of the annular shell
    1 +- 2 delta around each center, times cell^d (zero off the support)."""
    if G.d not in (2, 3):
        raise ValueError("section measures need a 2-D or 3-D grid")
    mask = G.dense_mask("outer").astype(np.float64)
    cell = float(G.cell)
    delta = float(G.delta)
    R = int(math.ceil((1.0 + 2 * delta) / cell)) + 1
    axes = np.meshgrid(*([np.arange(-R, R + 1)] * G.d), indexing="ij")
    dist = np.sqrt(sum((a * cell) ** 2 for a in axes))
    kernel = ((dist >= 1.0 - 2 * delta) & (dist <= 1.0 + 2 * delta)).astype(np.float64)
    counts = np.rint(_fft_convolve_same(mask, kernel))
    counts[mask == 0] = 0.0
    return counts * cell**G.d


@dataclass(frozen=True)
class SectionHistogram:
    edges: np.ndarray  # dyadic ladder e_0 < ... < e_M, e_0 = delta^d
    counts: np.ndarray  # occupied cells with lambda in [e_m, e_{m+1})
    underflow_count: int  # occupied cells with lambda < e_0
    representatives: tuple  # first (row-major) cell center per bin, or None
    delta: float
    cell: float
    d: int

    def top_threshold(self) -> float:
        """Lower edge of the highest populated bin (the lambda ladder rung)."""
        nz = np.flatnonzero(self.counts)
        if nz.size == 0:
            raise ValueError("histogram has no populated bins")
        return float(self.edges[nz[-1]])


def section_histogram(G: GridIndicator) -> SectionHistogram:
    """Dyadic histogram of the section measures over occupied cells.

    Bins double from the floor delta^d upward; cells below the floor land in
    the underflow count. The bin count is at most 4 log2(1/delta).
    """
    lam_map = section_measures(G)
    mask = G.dense_mask("outer")
    vals = lam_map[mask]
    delta = float(G.delta)
    floor = delta**G.d
    top = float(vals.max()) if vals.size else 0.0
    if top <= floor:
        M = 1
    else:
        M = int(math.ceil(math.log2(top / floor) + 1e-12))
        M = max(M, 1)
    cap = 4 * math.log2(1.0 / delta)
    if M > cap:
        raise AssertionError(f"bin count {M} exceeds the 4*log2(1/delta) cap {cap:.1f}")
    edges = floor * np.exp2(np.arange(M + 1))
    above = vals >= floor
    underflow = int(vals.size - above.sum())
    idx = np.floor(np.log2(np.where(above, vals, floor) / floor)).astype(np.int64)
    idx = np.minimum(idx, M - 1)
    counts = np.bincount(idx[above], minlength=M)

    centers = _occupied_centers(G)
    reps: list[tuple[float, ...] | None] = [None] * M
    first = np.full(M, vals.size, dtype=np.int64)
    if above.any():
        np.minimum.at(first, idx[above], np.flatnonzero(above))
    for m in range(M):
        if counts[m]:
            reps[m] = tuple(float(x) for x in centers[first[m]])
    counts.setflags(write=False)
    edges.setflags(write=False)
    return SectionHistogram(
        edges=edges,
        counts=counts,
        underflow_count=underflow,
        representatives=tuple(reps),
        delta=delta,
        cell=float(G.cell),
        d=G.d,
    )


def _occupied_centers(G: GridIndicator) -> np.ndarray:
    """Centers of occupied cells in row-major (C) order, shape (n, d)."""
    mask = G.dense_mask("outer")
    idx = np.argwhere(mask)
    cols = [G.axis_centers(a)[idx[:, a]] for a in range(G.d)]
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# incidence census
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IncidenceCensus:
    j_points: np.ndarray  # delta-separated net of the occupied centers
    centers: np.ndarray  # 2 delta-separated heavy cells (lambda >= lam)
    section_sizes: np.ndarray  # |S_c| per center
    tuple_count: int  # ordered well-separated tuples on some S_c
    separation_threshold: float
    max_projection_fiber: int
    lam: float
    c: float
    delta: float


def incidence_census(G: GridIndicator, lam: float, c: float = 0.1) -> IncidenceCensus:
    """Count well-separated pairs (d=2) or triples (d=3) of net points on a
    common annular section.

    J is a maximal delta-separated subset of the occupied cell centers.
    Centers are heavy cells (section measure >= lam) thinned to mutual
    distance 2 delta. For each center c, S_c = J intersected with the shell
    1 +- 3 delta around c, and the census counts ordered tuples from S_c
    with all pairwise distances >= c * (lam / delta^(d - alpha))^(1/alpha).
    The projection fiber of a tuple is the number of centers it serves.
    """
    d = G.d
    if d not in (2, 3):
        raise ValueError("incidence census needs a 2-D or 3-D grid")
    if not math.isfinite(G.alpha):
        raise ValueError("grid carries no alpha (needed for the threshold)")
    if lam <= 0 or c <= 0:
        raise ValueError("lam and c must be positive")
    delta = float(G.delta)

    centers_all = _occupied_centers(G)
    j_idx = separated_subset(centers_all, delta)
    j_points = centers_all[j_idx]

    lam_map = section_measures(G)
    heavy_vals = lam_map[G.dense_mask("outer")]
    heavy = centers_all[heavy_vals >= lam]
    centers = heavy[separated_subset(heavy, 2 * delta)]

    threshold = c * (lam / delta ** (d - G.alpha)) ** (1.0 / G.alpha)

    sizes = np.zeros(centers.shape[0], dtype=np.int64)
    sections: list[np.ndarray] = []
    for i, ctr in enumerate(centers):
        dist = np.linalg.norm(j_points - ctr, axis=1)
        sel = np.flatnonzero((dist >= 1.0 - 3 * delta) & (dist <= 1.0 + 3 * delta))
        sizes[i] = sel.size
        sections.append(sel)

    arity = 2 if d == 2 else 3
    if float((sizes.astype(np.float64) ** arity).sum()) > TUPLE_CAP:
        raise RuntimeError(
            f"tuple enumeration would exceed the cap of {TUPLE_CAP}; "
            "coarsen the grid or raise lam"
        )

    total = 0
    fibers: dict[tuple[int, ...], int] = {}
    thr2 = threshold * threshold
    for sel in sections:
        if sel.size < arity:
            continue
        pts = j_points[sel]
        diff = pts[:, None, :] - pts[None, :, :]
        far = np.einsum("ijk,ijk->ij", diff, diff) >= thr2
        np.fill_diagonal(far, False)
        if arity == 2:
            total += int(far.sum())
            ii, jj = np.nonzero(np.triu(far, 1))
            for a, b in zip(sel[ii], sel[jj]):
                key = (int(a), int(b))
                fibers[key] = fibers.get(key, 0) + 1
        else:
            m = sel.size
            for i in range(m):
                row_i = far[i]
                for j in range(i + 1, m):
                    if not row_i[j]:
                        continue
                    ks = np.flatnonzero(row_i & far[j])
                    ks = ks[ks > j]
                    total += 6 * ks.size
                    for k in ks:
                        key = (int(sel[i]), int(sel[j]), int(sel[k]))
                        fibers[key] = fibers.get(key, 0) + 1

    max_fiber = max(fibers.values(), default=0)
    for arr in (j_points, centers, sizes):
        arr.setflags(write=False)
    return IncidenceCensus(
        j_points=j_points,
        centers=centers,
        section_sizes=sizes,
        tuple_count=total,
        separation_threshold=threshold,
        max_projection_fiber=max_fiber,
        lam=lam,
        c=c,
        delta=delta,
    )

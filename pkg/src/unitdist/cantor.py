"""Self-similar Cantor-type subsets of [0, 1] with prescribed box dimension.

A construction `CantorSpec(p, q)` (integers, 0 < p < q) keeps, at each
refinement step, 2**p evenly spaced children of relative length 2**-q inside
every interval of the previous stage: the first child flush left, the last
flush right, equal gaps between. Stage j therefore has 2**(j*p) intervals of
length 2**(-j*q), and the limit set has box (and Hausdorff) dimension p/q.

Endpoints are exact rationals. For p = 1 every endpoint is dyadic; for p >= 2
the equal gaps introduce denominators divisible by 2**p - 1 (e.g. gap 1/6 for
p=2, q=3), which is why the exactness layer works over general Fractions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .intervals import IntervalUnion

__all__ = [
    "CantorSpec",
    "cantor_stage",
    "stage_for_scale",
    "shift_union",
    "BandMassRow",
    "BandMassTable",
    "band_mass_table",
]

# Refinement depth guard: stage * q <= MAX_DEPTH keeps interval lengths at or
# above 2**-40, so exact numerators stay small and interval counts bounded.
MAX_DEPTH = 40


@dataclass(frozen=True)
class CantorSpec:
    """Parameters of the construction; dimension() == p/q < 1."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise TypeError("p and q must be integers")
        if not 0 < self.p < self.q:
            raise ValueError(f"need 0 < p < q, got p={self.p}, q={self.q}")

    def dimension(self) -> float:
        return self.p / self.q

    def dimension_exact(self) -> Fraction:
        return Fraction(self.p, self.q)


def cantor_stage(spec: CantorSpec, stage: int) -> IntervalUnion:
    """The stage-j approximation: 2**(j*p) intervals of length 2**(-j*q)."""
    if stage < 0:
        raise ValueError("stage must be nonnegative")
    if stage * spec.q > MAX_DEPTH:
        raise ValueError(
            f"stage {stage} at q={spec.q} exceeds depth limit {MAX_DEPTH}"
        )
    children = 1 << spec.p
    lows = [Fraction(0)]
    length = Fraction(1)
    for j in range(1, stage + 1):
        child_len = Fraction(1, 1 << (j * spec.q))
        # first child flush left, last flush right, equal spacing
        step = (length - child_len) / (children - 1) if children > 1 else Fraction(0)
        lows = [lo + m * step for lo in lows for m in range(children)]
        length = child_len
    out = IntervalUnion(tuple((lo, lo + length) for lo in sorted(lows)))
    assert out.n_intervals == children**stage, "children must not overlap"
    return out


def stage_for_scale(spec: CantorSpec, delta) -> int:
    """Smallest stage whose interval length 2**(-j*q) is <= delta.

    At that stage the delta-neighborhood of the approximation carries the
    same coarse geometry as the limit set: each stage interval is entirely
    within delta of the set, so neighborhoods at scale >= delta agree up to
    a bounded dilate.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    j = 0
    length = Fraction(1)
    ratio = Fraction(1, 1 << spec.q)
    while length > delta:
        j += 1
        length *= ratio
        if j * spec.q > MAX_DEPTH:
            raise ValueError(f"delta={float(delta):g} needs depth beyond {MAX_DEPTH}")
    return j


def shift_union(A: IntervalUnion, s) -> IntervalUnion:
    """A together with its translate A + s, in normalized form.

    The doubled set has strictly larger pair-distance structure than A
    itself: differences near s appear with the mass of A's autocorrelation
    at 0. The canonical use is s = 1, which plants unit distances.
    """
    return A.union(A.shift(Fraction(s)))


@dataclass(frozen=True)
class BandMassRow:
    n: int
    delta: float
    near_mass: float  # |{(x1,x2) in A_d^2 : 2 delta <= |x1-x2| <= 5 delta/2}|
    near_reference: float  # delta^(2-beta)
    far_mass: float  # |{(t1,t2) in B_d^2 : sqrt(7 delta/2) <= |t1-t2| <= 2 sqrt(delta)}|
    far_reference: float  # delta^(2-3 gamma/2)

    @property
    def near_ratio(self) -> float:
        return self.near_mass / self.near_reference

    @property
    def far_ratio(self) -> float:
        return self.far_mass / self.far_reference


@dataclass(frozen=True)
class BandMassTable:
    """Measured band masses of fattened Cantor pairs against their
    power-law references, along the scale ladder
    delta_n = 2^(-2 q1 q2 n - 2)."""

    rows: tuple[BandMassRow, ...]
    beta: float
    gamma: float

    @property
    def near_constant(self) -> float:
        """Largest c with near_mass >= c * delta^(2-beta) on every row."""
        return min(r.near_ratio for r in self.rows)

    @property
    def far_constant(self) -> float:
        return min(r.far_ratio for r in self.rows)


def band_mass_table(
    a: CantorSpec | None,
    b: CantorSpec,
    n_range,
) -> BandMassTable:
    """Pair-mass table behind the planted-distance lower bound.

    For each n, both factors are realized at the stage whose interval length
    is at most delta_n and fattened by delta_n. The horizontal factor A (or
    [0,1] when `a` is None) is tested in the near band [2 delta, 5 delta/2];
    the vertical factor B in the far band [sqrt(7 delta/2), 2 sqrt(delta)].
    A positive returned constant for all n is the measured content of the
    estimates; the references carry exponents 2 - beta and 2 - 3 gamma / 2.
    """
    from .measure import pair_band_mass

    q1 = a.q if a is not None else 1
    beta = a.dimension() if a is not None else 1.0
    gamma = b.dimension()
    ns = sorted(set(int(n) for n in n_range))
    if not ns or ns[0] < 1:
        raise ValueError("n_range must contain integers >= 1")
    rows = []
    for n in ns:
        delta = Fraction(1, 1 << (2 * q1 * b.q * n + 2))
        if a is None:
            A = IntervalUnion.single(0, 1)
        else:
            A = cantor_stage(a, stage_for_scale(a, delta))
        B = cantor_stage(b, stage_for_scale(b, delta))
        A_d = A.neighborhood(delta)
        B_d = B.neighborhood(delta)
        df = float(delta)
        near = pair_band_mass(A_d, A_d, 2 * df, 2.5 * df)
        far = pair_band_mass(B_d, B_d, math.sqrt(3.5 * df), 2 * math.sqrt(df))
        rows.append(
            BandMassRow(
                n=n,
                delta=df,
                near_mass=near,
                near_reference=df ** (2 - beta),
                far_mass=far,
                far_reference=df ** (2 - 1.5 * gamma),
            )
        )
    return BandMassTable(rows=tuple(rows), beta=beta, gamma=gamma)

"""Exact arithmetic on finite unions of closed intervals.

Every one-dimensional set in this package is a finite union of closed
intervals with rational endpoints, held as `fractions.Fraction` so that deep
refinement stages and tiny neighborhood radii never accumulate float drift.
Floats only appear when a union is exported to numpy for quadrature.

The text serialization is restricted to dyadic endpoints (numerator and a
power-of-two denominator per line), which covers every set the command-line
experiments produce; unions with non-dyadic endpoints can be built and used
in memory but refuse to serialize rather than round.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = ["IntervalUnion", "dyadic"]


def dyadic(num: int, exp: int) -> Fraction:
    """The rational num / 2**exp."""
    if exp < 0:
        return Fraction(num * (1 << -exp))
    return Fraction(num, 1 << exp)


def _as_rational(x) -> Fraction:
    # Fraction(float) is exact (binary expansion), so floats are safe inputs
    # as long as the caller meant the float they passed.
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        if not np.isfinite(x):
            raise ValueError(f"endpoint {x!r} is not finite")
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact endpoint")


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted union of pairwise disjoint closed intervals [lo, hi], lo <= hi.

    Degenerate intervals (lo == hi) are allowed and represent points; they
    carry zero length but participate in neighborhoods and distance bands.
    """

    intervals: tuple[tuple[Fraction, Fraction], ...]

    # -- construction ------------------------------------------------------

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "IntervalUnion":
        """Normalize arbitrary (lo, hi) pairs: sort and merge overlaps.

        Touching closed intervals merge, since their union is one interval.
        """
        exact = sorted((_as_rational(lo), _as_rational(hi)) for lo, hi in pairs)
        merged: list[tuple[Fraction, Fraction]] = []
        for lo, hi in exact:
            if hi < lo:
                raise ValueError(f"interval [{lo}, {hi}] is reversed")
            if merged and lo <= merged[-1][1]:
                prev_lo, prev_hi = merged[-1]
                merged[-1] = (prev_lo, max(prev_hi, hi))
            else:
                merged.append((lo, hi))
        return cls(tuple(merged))

    @classmethod
    def single(cls, lo, hi) -> "IntervalUnion":
        return cls.from_pairs([(lo, hi)])

    @classmethod
    def points(cls, xs: Iterable) -> "IntervalUnion":
        return cls.from_pairs([(x, x) for x in xs])

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    # -- basic queries -----------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    @property
    def total_length(self) -> Fraction:
        return sum((hi - lo for lo, hi in self.intervals), Fraction(0))

    @property
    def span(self) -> tuple[Fraction, Fraction]:
        if self.is_empty:
            raise ValueError("empty union has no span")
        return self.intervals[0][0], self.intervals[-1][1]

    def contains_point(self, x) -> bool:
        x = _as_rational(x)
        # bisect over interval starts
        lo_idx, hi_idx = 0, len(self.intervals)
        while lo_idx < hi_idx:
            mid = (lo_idx + hi_idx) // 2
            if self.intervals[mid][0] <= x:
                lo_idx = mid + 1
            else:
                hi_idx = mid
        if lo_idx == 0:
            return False
        lo, hi = self.intervals[lo_idx - 1]
        return lo <= x <= hi

    def contains_union(self, other: "IntervalUnion") -> bool:
        """True if every interval of `other` sits inside one of ours."""
        i = 0
        for lo, hi in other.intervals:
            while i < len(self.intervals) and self.intervals[i][1] < lo:
                i += 1
            if i == len(self.intervals):
                return False
            mylo, myhi = self.intervals[i]
            if not (mylo <= lo and hi <= myhi):
                return False
        return True

    # -- set operations ----------------------------------------------------

    def shift(self, s) -> "IntervalUnion":
        s = _as_rational(s)
        return IntervalUnion(tuple((lo + s, hi + s) for lo, hi in self.intervals))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.from_pairs(list(self.intervals) + list(other.intervals))

    def neighborhood(self, delta) -> "IntervalUnion":
        """Closed delta-neighborhood: every interval grows by delta each side."""
        delta = _as_rational(delta)
        if delta < 0:
            raise ValueError("neighborhood radius must be nonnegative")
        return IntervalUnion.from_pairs(
            (lo - delta, hi + delta) for lo, hi in self.intervals
        )

    def intersection(self, other: "IntervalUnion") -> "IntervalUnion":
        out: list[tuple[Fraction, Fraction]] = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalUnion(tuple(out))

    # -- export ------------------------------------------------------------

    def as_float_array(self) -> np.ndarray:
        """(n, 2) float64 array of endpoints (rounded to nearest float)."""
        if self.is_empty:
            return np.empty((0, 2), dtype=np.float64)
        return np.array([[float(lo), float(hi)] for lo, hi in self.intervals])

    def to_text(self) -> str:
        """Serialize as one line per interval: `num_lo exp_lo num_hi exp_hi`.

        Endpoint value = num / 2**exp. Raises if any endpoint is not dyadic.
        """
        lines = [f"intervals {len(self.intervals)}"]
        for lo, hi in self.intervals:
            lines.append(f"{_dyadic_repr(lo)} {_dyadic_repr(hi)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "IntervalUnion":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("intervals "):
            raise ValueError("missing 'intervals <count>' header")
        count = int(lines[0].split()[1])
        if len(lines) - 1 != count:
            raise ValueError(f"header promises {count} intervals, file has {len(lines) - 1}")
        pairs = []
        for ln in lines[1:]:
            num_lo, exp_lo, num_hi, exp_hi = (int(tok) for tok in ln.split())
            pairs.append((dyadic(num_lo, exp_lo), dyadic(num_hi, exp_hi)))
        out = cls.from_pairs(pairs)
        if len(out.intervals) != count:
            raise ValueError("serialized intervals were not disjoint")
        return out


def _dyadic_repr(x: Fraction) -> str:
    den = x.denominator
    if den & (den - 1):
        raise ValueError(f"endpoint {x} is not dyadic; cannot serialize exactly")
    exp = den.bit_length() - 1
    return f"{x.numerator} {exp}"

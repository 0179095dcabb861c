"""Band-measure engine: three independent routes that must agree.

The 1-D pair mass has closed forms for tiny unions; the 2-D product measure
is triangulated between the dense quadrature, the sparse atoms path, the
grid-count bracket, and a Monte-Carlo referee that shares no code with any
of them.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from unitdist.cantor import CantorSpec, cantor_stage, shift_union, stage_for_scale
from unitdist.intervals import IntervalUnion, dyadic
from unitdist.measure import (
    Correlogram,
    autocorrelation,
    pair_band_mass,
    pair_band_measure_grid,
    pair_band_measure_product,
)
from unitdist.grids import rasterize


# ---- 1-D pair band mass ----------------------------------------------------

@pytest.mark.parametrize("k", [4, 6, 8])
def test_two_point_neighborhoods_have_exact_band_mass(k):
    # A = [-d, d] u [1-d, 1+d]: pairs at distance ~1 fill two 2d x 2d squares,
    # and the band [1-2d, 1+2d] captures them entirely: mass 2 * (2d)^2 = 8 d^2
    delta = Fraction(1, 2**k)
    A = IntervalUnion.points([0, 1]).neighborhood(delta)
    d = float(delta)
    got = pair_band_mass(A, A, 1 - 2 * d, 1 + 2 * d)
    assert got == pytest.approx(8 * d * d, rel=0, abs=0)


def test_pair_band_mass_monte_carlo_referee():
    rng = np.random.default_rng(42)
    U1 = IntervalUnion.from_pairs([(0, Fraction(1, 4)), (Fraction(3, 8), Fraction(5, 8))])
    U2 = IntervalUnion.from_pairs([(Fraction(1, 8), Fraction(1, 2)), (Fraction(3, 4), 1)])
    lo, hi = 0.2, 0.45
    exact = pair_band_mass(U1, U2, lo, hi)

    def draw(U, n):
        arr = U.as_float_array()
        lens = arr[:, 1] - arr[:, 0]
        rows = rng.choice(len(lens), size=n, p=lens / lens.sum())
        return arr[rows, 0] + rng.random(n) * lens[rows], lens.sum()

    n = 2_000_000
    x, m1 = draw(U1, n)
    y, m2 = draw(U2, n)
    sep = np.abs(x - y)
    frac = ((sep >= lo) & (sep <= hi)).mean()
    est = frac * m1 * m2
    se = m1 * m2 * math.sqrt(frac * (1 - frac) / n)
    assert abs(exact - est) < 5 * se


def test_pair_band_mass_empty_and_degenerate():
    U = IntervalUnion.single(0, 1)
    assert pair_band_mass(IntervalUnion.empty(), U, 0.1, 0.2) == 0.0
    assert pair_band_mass(U, U, 5.0, 6.0) == 0.0  # band beyond the span
    with pytest.raises(ValueError):
        pair_band_mass(U, U, 0.5, 0.4)


def test_pair_band_mass_symmetry():
    U1 = IntervalUnion.from_pairs([(0, Fraction(1, 3))])
    U2 = IntervalUnion.from_pairs([(Fraction(1, 2), Fraction(7, 8))])
    a = pair_band_mass(U1, U2, 0.1, 0.6)
    b = pair_band_mass(U2, U1, 0.1, 0.6)
    assert a == pytest.approx(b, rel=1e-14)


# ---- correlograms ----------------------------------------------------------

def test_autocorrelation_exact_vs_fft():
    A = cantor_stage(CantorSpec(1, 2), 3)
    h = Fraction(1, 512)
    exact = autocorrelation(A, h, method="exact")
    fft = autocorrelation(A, h, method="fft")
    n = min(exact.values.size, fft.values.size)
    np.testing.assert_allclose(exact.values[:n], fft.values[:n], atol=1e-12)
    # lag-zero value is the measure of A
    assert exact.values[0] == pytest.approx(float(A.total_length), abs=1e-12)


def test_autocorrelation_integral_identity():
    # integral of the correlogram over all lags equals |A|^2; the trapezoid
    # sum is exact because every block endpoint sits on the sample lattice
    A = IntervalUnion.from_pairs([(0, Fraction(1, 8)), (Fraction(1, 2), Fraction(3, 4))])
    c = autocorrelation(A, Fraction(1, 2048), method="fft")
    assert c.integral() == pytest.approx(float(A.total_length) ** 2, rel=1e-12)


def test_autocorrelation_spacing_guard():
    A = IntervalUnion.from_pairs([(0, Fraction(1, 64))])
    with pytest.raises(ValueError):
        autocorrelation(A, Fraction(1, 64))  # spacing must resolve the blocks


def test_correlogram_round_trip():
    A = cantor_stage(CantorSpec(1, 3), 2)
    c = autocorrelation(A, Fraction(1, 1024), method="fft")
    again = Correlogram.from_bytes(c.to_bytes())
    assert again.sample_spacing == c.sample_spacing
    assert again.total_mass == c.total_mass
    np.testing.assert_array_equal(again.values, c.values)


def test_correlogram_rejects_negative_values():
    with pytest.raises(ValueError):
        Correlogram(0.5, np.array([1.0, -0.2]), 1.0)


# ---- 2-D product band measure ----------------------------------------------

def _mc_band_measure(F, B, lo, hi, n, seed):
    """Monte-Carlo referee for the planar band measure of (F x B)^2 pairs."""
    rng = np.random.default_rng(seed)

    def draw(U, k):
        arr = U.as_float_array()
        lens = arr[:, 1] - arr[:, 0]
        rows = rng.choice(len(lens), size=k, p=lens / lens.sum())
        return arr[rows, 0] + rng.random(k) * lens[rows], lens.sum()

    x1, mf = draw(F, n)
    x2, _ = draw(F, n)
    y1, mb = draw(B, n)
    y2, _ = draw(B, n)
    dist = np.hypot(x1 - x2, y1 - y2)
    frac = ((dist >= lo) & (dist <= hi)).mean()
    area = (mf * mb) ** 2
    return frac * area, area * math.sqrt(frac * (1 - frac) / n)


def test_product_routes_agree_at_coarse_scale():
    delta = Fraction(1, 64)
    spec = CantorSpec(1, 2)
    A = cantor_stage(spec, stage_for_scale(spec, delta))
    F = shift_union(A, 1).neighborhood(delta)
    B = A.neighborhood(delta)

    dense = pair_band_measure_product(F, B, delta, method="dense")
    atoms = pair_band_measure_product(F, B, delta, method="atoms")
    assert dense.method == "dense"
    assert atoms.method == "atoms"
    # the two quadratures are independent; they must agree within their own
    # reported error budgets
    tol = dense.quadrature_error + atoms.quadrature_error
    assert abs(dense.value - atoms.value) <= tol

    mc, se = _mc_band_measure(
        F, B, 1 - 2 * float(delta), 1 + 2 * float(delta), 4_000_000, seed=9
    )
    assert abs(dense.value - mc) < 5 * se + dense.quadrature_error


def test_product_value_bracketed_by_grid_route():
    delta = Fraction(1, 256)
    spec = CantorSpec(1, 2)
    A = cantor_stage(spec, stage_for_scale(spec, delta))
    F = shift_union(A, 1)
    G = rasterize([F, A], delta, delta / 4, alpha=1.0)
    bracket = pair_band_measure_grid(G)
    product = pair_band_measure_product(
        F.neighborhood(delta), A.neighborhood(delta), delta
    )
    assert bracket.inner <= product.value <= bracket.outer


def test_product_two_point_axes_analytic():
    # F = [-d,d] u [1-d,1+d], B = [-d,d]: distances pool near 0 and 1, and the
    # band [1-2d, 1+2d] collects mass 2 * (2d)^2 * (2d)^2 = 32 d^4 exactly
    # (up to O(d) corrections from the circular band edges)
    delta = Fraction(1, 1024)
    d = float(delta)
    F = IntervalUnion.points([0, 1]).neighborhood(delta)
    B = IntervalUnion.points([0]).neighborhood(delta)
    r = pair_band_measure_product(F, B, delta)
    assert r.value == pytest.approx(32 * d**4, rel=0.02)


def test_product_empty_factor():
    r = pair_band_measure_product(
        IntervalUnion.empty(), IntervalUnion.single(0, 1), Fraction(1, 64)
    )
    assert r.value == 0.0
    assert r.method == "empty"


def test_product_deep_scale_uses_atoms():
    delta = Fraction(1, 1 << 18)
    spec = CantorSpec(1, 2)
    A = cantor_stage(spec, stage_for_scale(spec, delta))
    F = shift_union(A, 1).neighborhood(delta)
    B = A.neighborhood(delta)
    r = pair_band_measure_product(F, B, delta)
    assert r.method == "atoms"
    assert r.value > 0
    assert r.quadrature_error < 0.05 * r.value


def test_product_dense_spacing_override_converges():
    delta = Fraction(1, 64)
    F = IntervalUnion.points([0, 1]).neighborhood(delta)
    B = IntervalUnion.points([0]).neighborhood(delta)
    coarse = pair_band_measure_product(F, B, delta, spacing=Fraction(1, 512))
    fine = pair_band_measure_product(F, B, delta, spacing=Fraction(1, 4096))
    assert fine.quadrature_error < coarse.quadrature_error
    assert abs(fine.value - coarse.value) <= coarse.quadrature_error + fine.quadrature_error

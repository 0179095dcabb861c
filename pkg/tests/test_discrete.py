"""Discrete unit-distance counting: two independent counters and the census."""

import numpy as np
import pytest

from unitdist.discrete import (
    PointSet,
    count_unit_pairs_bruteforce,
    count_unit_pairs_grid,
    normalized_pair_count,
    normalized_pair_count_value,
    random_general_position,
    two_circles_r4,
    unit_step_census,
)

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_triangle_has_six_ordered_unit_pairs():
    P = PointSet(TRIANGLE)
    assert count_unit_pairs_bruteforce(P) == 6
    assert count_unit_pairs_grid(P) == 6


def test_square_has_eight_ordered_unit_pairs():
    # the two diagonals have length sqrt(2) and do not count
    P = PointSet(SQUARE)
    assert count_unit_pairs_bruteforce(P) == 8
    assert count_unit_pairs_grid(P) == 8


def test_pointset_validation():
    with pytest.raises(ValueError):
        PointSet(np.zeros((3,)))  # needs an (n, d) array
    with pytest.raises(ValueError):
        PointSet(TRIANGLE, eps=-1.0)
    # the empty set is legal and counts zero
    assert count_unit_pairs_bruteforce(PointSet(np.zeros((0, 2)))) == 0


def test_grid_counter_rejects_wide_tolerance():
    with pytest.raises(ValueError):
        count_unit_pairs_grid(PointSet(TRIANGLE, eps=0.25))


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("eps", [1e-9, 1e-3])
def test_grid_counter_matches_bruteforce(d, eps):
    rng = np.random.default_rng(100 + d)
    for trial in range(12):
        n = int(rng.integers(2, 300))
        # cluster points at unit-ish mutual distances so matches actually occur
        pts = rng.uniform(0, 2.0, size=(n, d))
        P = PointSet(pts, eps=eps)
        assert count_unit_pairs_grid(P) == count_unit_pairs_bruteforce(P)


def test_grid_counter_matches_on_lattice_points():
    # integer lattice: horizontal/vertical neighbors at exactly distance 1
    xs, ys = np.meshgrid(np.arange(7.0), np.arange(5.0))
    P = PointSet(np.column_stack([xs.ravel(), ys.ravel()]))
    brute = count_unit_pairs_bruteforce(P)
    assert brute == 2 * (6 * 5 + 7 * 4)  # ordered count of grid edges
    assert count_unit_pairs_grid(P) == brute


def test_two_circles_quadratic_configuration():
    N = 40
    P = two_circles_r4(N, seed=0)
    assert P.points.shape == (2 * N, 4)
    count = count_unit_pairs_bruteforce(P)
    # every cross pair is a unit pair by construction (ordered: 2 N^2)
    assert count >= 2 * N * N


def test_normalized_count_matches_direct_formula():
    P = PointSet(TRIANGLE)
    got = normalized_pair_count(P)
    assert got == pytest.approx(normalized_pair_count_value(6, 3, 2))
    assert normalized_pair_count_value(6, 3, 2) == pytest.approx(
        6 / 3 ** (1 + 1 / 2)
    )


def test_census_on_triangle():
    rep = unit_step_census(PointSet(TRIANGLE))
    assert rep.n_points == 3
    assert rep.d == 2
    assert rep.edge_count == 6  # ordered unit steps
    assert rep.ordered_pair_count == 6
    # per vertex: 2 neighbors -> 2^2 step pairs, 2*1 with distinct endpoints
    assert rep.tuple_count == 12
    assert rep.distinct_tuple_count == 6
    assert rep.max_endpoint_fiber == 1
    # all degrees equal, so the mean-power bound is tight here
    assert rep.holder_lhs == pytest.approx(rep.tuple_count)


def test_census_on_square():
    rep = unit_step_census(PointSet(SQUARE))
    assert rep.edge_count == 8
    assert rep.tuple_count == 16
    # opposite corners see the same unordered neighbor pair
    assert rep.max_endpoint_fiber == 2


@pytest.mark.parametrize("seed", range(5))
def test_census_inequalities_on_random_sets(seed):
    P = random_general_position(60, 3, seed=seed, tol=1e-6, sample_count=300)
    rep = unit_step_census(P)
    # endpoint map is at most two-to-one in general position
    assert rep.max_endpoint_fiber <= 2
    # |G|^d / n^{d-1} never exceeds the number of realized d-tuples
    assert rep.holder_lhs <= rep.tuple_count + 1e-9
    assert rep.distinct_tuple_count <= rep.tuple_count


def test_random_general_position_is_reproducible():
    A = random_general_position(25, 2, seed=7)
    B = random_general_position(25, 2, seed=7)
    np.testing.assert_array_equal(A.points, B.points)
    C = random_general_position(25, 2, seed=8)
    assert not np.array_equal(A.points, C.points)

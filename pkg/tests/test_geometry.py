import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import brute_hausdorff, union_find_components
from surfridge import (Circle, PointSet, Segments, dilation_components,
                       distance_to_manifold, distance_to_set, hausdorff,
                       hausdorff_to_manifold)
from surfridge.geometry import check_points, manifold_from_dict


def clouds(min_n=1, max_n=12, dim=2):
    coords = st.floats(-10, 10, allow_nan=False, width=64)
    return st.integers(min_n, max_n).flatmap(
        lambda n: arrays(np.float64, (n, dim), elements=coords))


def test_distance_to_set_basic():
    assert distance_to_set([0, 0], [[3, 4]]) == 5.0
    assert distance_to_set([1, 1], [[1, 1], [9, 9]]) == 0.0


def test_distance_to_set_matches_scan():
    rng = np.random.default_rng(0)
    A = rng.uniform(-1, 1, (100, 2))
    expected = min(np.hypot(*a) for a in A)
    assert distance_to_set([0.0, 0.0], A) == pytest.approx(expected, abs=1e-15)


def test_distance_to_set_errors():
    with pytest.raises(ValueError):
        distance_to_set([0, 0], np.empty((0, 2)))
    with pytest.raises(ValueError):
        distance_to_set([0, 0, 0], [[1, 2]])


def test_hausdorff_small_cases():
    assert hausdorff([[0, 0], [1, 0]], [[0.5, 0]]) == 0.5
    A = np.random.default_rng(1).normal(size=(20, 3))
    assert hausdorff(A, A) == 0.0


def test_hausdorff_matches_brute_force():
    rng = np.random.default_rng(2)
    A = rng.uniform(0, 1, (50, 3))
    B = rng.uniform(0, 1, (70, 3))
    assert abs(hausdorff(A, B) - brute_hausdorff(A, B)) <= 1e-12


def test_hausdorff_errors():
    with pytest.raises(ValueError):
        hausdorff(np.empty((0, 2)), [[0, 0]])
    with pytest.raises(ValueError):
        hausdorff([[0, 0]], [[0, 0, 0]])
    with pytest.raises(ValueError):
        hausdorff([[np.nan, 0]], [[0, 0]])


@settings(max_examples=150, deadline=None)
@given(clouds(), clouds())
def test_hausdorff_symmetric(A, B):
    assert hausdorff(A, B) == hausdorff(B, A)


@settings(max_examples=100, deadline=None)
@given(clouds(), clouds(), clouds())
def test_hausdorff_triangle(A, B, C):
    assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-9


@settings(max_examples=100, deadline=None)
@given(clouds(), st.data())
def test_hausdorff_zero_iff_same_set(A, data):
    perm = data.draw(st.permutations(range(len(A))))
    dup = np.vstack([A[list(perm)], A[:1]])
    assert hausdorff(A, dup) == 0.0
    shifted = A.copy()
    shifted[0] += 1.0
    same = {tuple(r) for r in A} == {tuple(r) for r in shifted}
    assert (hausdorff(A, shifted) == 0.0) == same


@settings(max_examples=50, deadline=None)
@given(clouds(min_n=1, max_n=8), arrays(np.float64, 2, elements=st.floats(-10, 10)))
def test_distance_to_union_with_self(A, x):
    assert distance_to_set(x, np.vstack([A, x])) == 0.0


def test_dilation_components_examples():
    theta = 2 * np.pi * np.arange(64) / 64
    ring = 3 * np.column_stack([np.cos(theta), np.sin(theta)])
    assert dilation_components(ring, 0.5) == 1
    assert dilation_components([[0, 0], [10, 0]], 1.0) == 2
    assert dilation_components([[0, 0]], 0.1) == 1
    with pytest.raises(ValueError):
        dilation_components(ring, 0.0)


def test_dilation_components_match_union_find():
    rng = np.random.default_rng(3)
    centers = rng.uniform(0, 20, (6, 2))
    A = np.vstack([c + 0.3 * rng.normal(size=(15, 2)) for c in centers])
    for eps in (0.05, 0.2, 0.5, 1.0, 3.0):
        assert dilation_components(A, eps) == union_find_components(A, eps)


@settings(max_examples=60, deadline=None)
@given(clouds(min_n=1, max_n=25))
def test_dilation_components_nonincreasing_in_eps(A):
    counts = [dilation_components(A, eps) for eps in (0.01, 0.1, 0.5, 1, 2, 5, 20)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_distance_to_manifold_examples():
    C = Circle((0, 0), 3)
    assert distance_to_manifold([3, 0], C) == 0.0
    assert distance_to_manifold([0, 0], C) == 3.0
    assert distance_to_manifold([1, 1], Segments([[[0, 0], [2, 0]]])) == 1.0
    assert distance_to_manifold([2, 0], PointSet([[0, 0], [5, 0]])) == 2.0


def test_circle_in_three_dimensions():
    C = Circle((0, 0, 1), 2)
    assert distance_to_manifold([2, 0, 1], C) == 0.0
    assert distance_to_manifold([2, 0, 4], C) == pytest.approx(3.0)
    assert distance_to_manifold([0, 0, 1], C) == pytest.approx(2.0)


def test_segment_distance_endpoints():
    S = Segments([[[0, 0], [2, 0]], [[2, 0], [2, 2]]])
    assert distance_to_manifold([-1, 0], S) == 1.0
    assert distance_to_manifold([3, 3], S) == pytest.approx(np.sqrt(2))
    assert S.length == 4.0
    probes = S.probes(5)
    np.testing.assert_allclose(probes, [[0, 0], [1, 0], [2, 0], [2, 1], [2, 2]])


def test_manifold_validation():
    with pytest.raises(ValueError):
        Circle((0, 0), 0)
    with pytest.raises(ValueError):
        Segments([[[1, 1], [1, 1]]])
    with pytest.raises(ValueError):
        manifold_from_dict({"kind": "torus"})
    for M in (Circle((1, 2), 3), Segments([[[0, 0], [1, 1]]]), PointSet([[1, 2]])):
        back = manifold_from_dict(M.to_dict())
        assert back.to_dict() == M.to_dict()


def test_hausdorff_to_manifold_concentric_circles():
    C = Circle((0, 0), 3)
    theta = 2 * np.pi * np.arange(360) / 360
    A = 2.9 * np.column_stack([np.cos(theta), np.sin(theta)])
    value = hausdorff_to_manifold(A, C, 1000)
    # the probe side is limited by angular misalignment of the two grids
    phi = 2 * np.pi * np.arange(1000) / 1000
    gap = np.abs((phi[:, None] - theta[None, :] + np.pi) % (2 * np.pi) - np.pi).min(axis=1).max()
    exact = np.sqrt(2.9 ** 2 + 9 - 2 * 2.9 * 3 * np.cos(gap))
    assert value == pytest.approx(exact, abs=1e-12)
    assert 0.1 <= value <= 0.1 + 5e-3


def test_hausdorff_to_manifold_identity_and_errors():
    C = Circle((0, 0), 3)
    assert hausdorff_to_manifold(C.probes(1000), C, 1000) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        hausdorff_to_manifold(C.probes(10), C, 1)


def test_hausdorff_to_manifold_dense_probe_oracle():
    S = Segments([[[0, 0], [4, 0]], [[4, 0], [4, 3]], [[1, -2], [1, 2]]])
    rng = np.random.default_rng(4)
    base = S.points_at(rng.uniform(0, S.length, 200))
    A = base + 0.05 * rng.normal(size=base.shape)
    coarse = hausdorff_to_manifold(A, S, 1000)
    probe_side = max(np.min(np.linalg.norm(A - p, axis=1)) for p in S.probes(10000))
    dense = max(S.distances(A).max(), probe_side)
    assert abs(coarse - dense) <= 1e-2


def test_check_points():
    assert check_points([1.0, 2.0]).shape == (1, 2)
    assert check_points(np.empty((0, 3)), allow_empty=True).shape == (0, 3)
    with pytest.raises(ValueError):
        check_points([[1.0, np.inf]])
    with pytest.raises(ValueError):
        check_points(np.zeros((2, 2, 2)))

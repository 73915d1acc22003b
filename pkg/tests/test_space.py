import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainrec.space import CellSet, GridSpace


def brute_circle_dist(i, j, n):
    ti = 2 * np.pi * (i + 0.5) / n
    tj = 2 * np.pi * (j + 0.5) / n
    d = abs(ti - tj)
    return min(d, 2 * np.pi - d)


@given(st.integers(3, 40), st.data())
@settings(max_examples=50, deadline=None)
def test_cellset_algebra_matches_python_sets(n, data):
    a = set(data.draw(st.lists(st.integers(0, n - 1), max_size=n)))
    b = set(data.draw(st.lists(st.integers(0, n - 1), max_size=n)))
    A = CellSet.from_indices(n, sorted(a))
    B = CellSet.from_indices(n, sorted(b))
    assert set((A | B).indices()) == a | b
    assert set((A & B).indices()) == a & b
    assert set((A - B).indices()) == a - b
    assert set(A.complement().indices()) == set(range(n)) - a
    assert A.issubset(B) == (a <= b)
    assert bool(A) == bool(a)
    assert len(A) == len(a)


def test_circle_metric_against_brute_force():
    n = 37
    sp = GridSpace.circle(n)
    for i in range(n):
        for j in range(n):
            assert sp.metric(i, j) == pytest.approx(brute_circle_dist(i, j, n))


def test_torus_max_metric():
    sp = GridSpace.torus2(10)
    c = sp.centers()
    # max metric with wraparound on both axes
    d = sp.point_dist(c[:1], c)
    dx = np.abs(c - c[0])
    dx = np.minimum(dx, 1.0 - dx)
    assert np.allclose(d, dx.max(axis=1))
    assert sp.diameter() == pytest.approx(0.5)


def test_closed_neighborhood_matches_distance_predicate():
    sp = GridSpace.circle(60)
    rng = np.random.default_rng(0)
    for _ in range(20):
        S = CellSet.from_indices(60, rng.choice(60, size=5, replace=False))
        r = float(rng.uniform(0, 1.0))
        got = sp.closed_neighborhood(S, r)
        # outer enclosure: covers every point within r of the cells of S
        D = sp.pairwise_dist(np.arange(60), S.indices()).min(axis=1)
        assert np.array_equal(got.mask, D <= r + sp.cell_radius + 1e-9)


def test_interior_closure_boundary_on_arc():
    sp = GridSpace.circle(40)
    S = CellSet.from_indices(40, range(10, 20))
    assert set(sp.interior(S).indices()) == set(range(11, 19))
    assert set(sp.closure(S).indices()) == set(range(9, 21))
    assert set(sp.boundary(S).indices()) == {9, 10, 19, 20}
    # interior/closure duality
    assert sp.interior(S) == sp.closure(S.complement()).complement()


def test_interval_endpoints_have_one_sided_neighbors():
    sp = GridSpace.interval(10)
    S = CellSet.from_indices(10, range(0, 5))
    assert set(sp.interior(S).indices()) == set(range(0, 4))
    assert set(sp.closure(S).indices()) == set(range(0, 6))


def test_connected_components_wraparound():
    sp = GridSpace.circle(12)
    S = CellSet.from_indices(12, [0, 1, 11, 5, 6])
    comps = sp.connected_components(S)
    assert sorted(sorted(c.indices().tolist()) for c in comps) == \
        [[0, 1, 11], [5, 6]]


def test_hausdorff_distance_brute_force():
    sp = GridSpace.circle(50)
    rng = np.random.default_rng(1)
    for _ in range(10):
        S = CellSet.from_indices(50, rng.choice(50, size=4, replace=False))
        T = CellSet.from_indices(50, rng.choice(50, size=6, replace=False))
        D = sp.pairwise_dist(S.indices(), T.indices())
        expect = max(D.min(axis=1).max(), D.min(axis=0).max())
        assert sp.hausdorff_distance(S, T) == pytest.approx(expect)


def test_clopen_sets():
    sp = GridSpace.circle(20)
    assert sp.is_clopen(CellSet.full(20))
    assert sp.is_clopen(CellSet.empty(20))
    assert not sp.is_clopen(CellSet.from_indices(20, range(5)))
    # discrete space: every subset is clopen
    dsp = GridSpace.discrete(5)
    assert dsp.is_clopen(CellSet.from_indices(5, [1, 3]))


def test_cell_of_and_wrap_roundtrip():
    sp = GridSpace.torus2(16)
    rng = np.random.default_rng(2)
    pts = rng.uniform(-2, 3, size=(100, 2))
    w = sp.wrap(pts)
    assert (w >= 0).all() and (w < 1).all()
    cells = sp.cell_of(pts)
    centers = sp.centers()[cells]
    assert (sp.point_dist(w, centers) <= sp.cell_radius + 1e-12).all()

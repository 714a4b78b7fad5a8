import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeasure.events import (
    ContinuumEvent,
    FiniteEvent,
    FiniteSampleSpace,
    HomogeneousEvent,
    Region,
    disjoint_decomposition,
    homogeneous_complement,
    homogeneous_intersection,
    ring_add,
    ring_mul,
)
from qmeasure.exceptions import UsageError, ValidationError

SPACE = FiniteSampleSpace(3, 3)


def events_on(space):
    return st.integers(0, (1 << space.size) - 1).map(lambda m: FiniteEvent(space, m))


# --- finite sample space ------------------------------------------------


def test_histories_enumerate_lexicographically():
    space = FiniteSampleSpace(2, 3)
    hs = list(space.histories())
    assert hs[0] == (0, 0, 0) and hs[1] == (0, 0, 1) and hs[-1] == (1, 1, 1)
    assert len(hs) == space.size == 8
    for i, h in enumerate(hs):
        assert space.index(h) == i
        assert tuple(space.history(i)) == h


def test_invalid_history_rejected():
    with pytest.raises(UsageError):
        SPACE.index((0, 3, 0))
    with pytest.raises(UsageError):
        SPACE.index((0, 1))


def test_event_views_agree():
    e = FiniteEvent.from_histories(SPACE, [(0, 1, 2), (2, 2, 2)])
    assert len(e) == 2
    assert (0, 1, 2) in e and (1, 1, 1) not in e
    assert sorted(map(tuple, e.histories())) == [(0, 1, 2), (2, 2, 2)]
    assert np.flatnonzero(e.members()).tolist() == e.indices().tolist()


def test_cylinder_matches_brute_force():
    e = FiniteEvent.cylinder(SPACE, {0: [1], 2: [0, 2]})
    expected = {h for h in itertools.product(range(3), repeat=3) if h[0] == 1 and h[2] in (0, 2)}
    assert {tuple(h) for h in e.histories()} == expected


def test_mismatched_spaces_rejected():
    a = FiniteEvent.full(FiniteSampleSpace(2, 2))
    b = FiniteEvent.full(FiniteSampleSpace(2, 3))
    with pytest.raises(UsageError):
        ring_add(a, b)
    with pytest.raises(UsageError):
        ring_mul(a, b)


# --- Boolean ring axioms ------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(events_on(SPACE), events_on(SPACE), events_on(SPACE))
def test_ring_axioms(a, b, c):
    zero, one = FiniteEvent.empty(SPACE), FiniteEvent.full(SPACE)
    assert a + b == b + a and a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + zero == a and a * one == a
    assert a + a == zero
    assert a * a == a


@settings(max_examples=200, deadline=None)
@given(events_on(SPACE), events_on(SPACE))
def test_set_operations_from_ring(a, b):
    sa, sb = set(a.indices().tolist()), set(b.indices().tolist())
    assert set((a | b).indices().tolist()) == sa | sb
    assert set((a & b).indices().tolist()) == sa & sb
    assert set((a - b).indices().tolist()) == sa - sb
    assert set((~a).indices().tolist()) == set(range(SPACE.size)) - sa
    # union from the ring: a + b + ab
    assert a + b + a * b == a | b


# --- regions -----------------------------------------------------------


def test_region_canonical_merges_touching_intervals():
    r = Region.union([(0, 1), (1, 2), (3, 4)])
    assert r.intervals() == [(0.0, 2.0), (3.0, 4.0)]
    assert r.measure() == 3.0


def test_region_complement_of_empty_is_full():
    assert Region.empty().complement().is_full()
    assert Region.full().complement().is_empty()


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-5, 5), st.floats(0.1, 3)), min_size=1, max_size=3),
    st.lists(st.tuples(st.floats(-5, 5), st.floats(0.1, 3)), min_size=1, max_size=3),
    st.booleans(),
    st.booleans(),
)
def test_region_intersection_matches_pointwise(ra, rb, ca, cb):
    a = Region.union([(x, x + w) for x, w in ra])
    b = Region.union([(x, x + w) for x, w in rb])
    a = a.complement() if ca else a
    b = b.complement() if cb else b
    x = np.random.default_rng(0).uniform(-10, 10, 2000)
    got = a.intersect(b).contains(x)
    want = a.contains(x) & b.contains(x)
    # disagreements only on the measure-zero boundaries
    edges = np.array(sorted(set(a.breakpoints()) | set(b.breakpoints())))
    near = np.min(np.abs(x[:, None] - edges[None, :]), axis=1) < 1e-9 if edges.size else np.zeros(x.size, bool)
    assert np.all((got == want) | near)


# --- homogeneous and continuum events ---------------------------------


def _random_trajectories(times, k=4000, seed=0):
    return np.random.default_rng(seed).uniform(-4, 4, (k, len(times)))


def _hom(times, intervals):
    return HomogeneousEvent(times, tuple(Region.full() if iv is None else Region.union(iv) for iv in intervals))


def test_homogeneous_validation():
    with pytest.raises(ValidationError):
        HomogeneousEvent((0.5, 1.0), (Region.full(), Region.full()))
    with pytest.raises(ValidationError):
        HomogeneousEvent((0.0, 1.0, 0.5), (Region.full(),) * 3)
    with pytest.raises(ValidationError):
        HomogeneousEvent((0.0,), (Region.full(),))


def test_padding_preserves_the_set():
    a = _hom((0, 1), [[(-1, 1)], [(0, 2)]])
    p = a.pad((0, 0.3, 1))
    assert p.times == (0.0, 0.3, 1.0)
    assert p.regions[1].is_full()
    assert a.same_set(p)
    with pytest.raises(UsageError):
        a.pad((0, 0.5, 2))


def test_intersection_and_complement_monte_carlo():
    times = (0.0, 0.5, 1.0)
    a = _hom((0, 0.5, 1), [[(-2, 1)], None, [(0, 3)]])
    b = _hom((0, 1), [[(-1, 2)], [(-3, 1)]])
    traj = _random_trajectories(times)
    inter = homogeneous_intersection(a, b)
    assert np.array_equal(inter.contains(times, traj), a.contains(times, traj) & b.contains(times, traj))
    pieces = homogeneous_complement(a)
    assert len(pieces) <= 2 ** a.N - 1
    hits = np.array([p.contains(times, traj) for p in pieces])
    assert np.all(hits.sum(axis=0) == ~a.contains(times, traj))


def test_disjoint_decomposition_monte_carlo():
    times = (0.0, 0.5, 1.0)
    a = _hom((0, 1), [[(-2, 1)], [(0, 3)]])
    b = _hom((0, 0.5, 1), [[(-1, 2)], [(-1, 1)], None])
    c = _hom((0, 1), [None, [(-0.5, 0.5)]])
    dec = disjoint_decomposition([a, b, c])
    assert dec.is_disjoint_family()
    traj = _random_trajectories(times, seed=1)
    counts = np.sum([p.contains(times, traj) for p in dec.parts], axis=0)
    union = a.contains(times, traj) | b.contains(times, traj) | c.contains(times, traj)
    assert np.all(counts <= 1)
    assert np.array_equal(counts == 1, union)


def test_disjoint_decomposition_empty_input():
    with pytest.raises(UsageError):
        disjoint_decomposition([])


def test_continuum_ring_operations_monte_carlo():
    times = (0.0, 0.5, 1.0)
    a = ContinuumEvent.of(_hom((0, 1), [[(-2, 1)], [(0, 3)]]))
    b = ContinuumEvent.of(_hom((0, 0.5, 1), [None, [(-1, 1)], [(-1, 2)]]))
    traj = _random_trajectories(times, seed=2)
    ia, ib = a.contains(times, traj), b.contains(times, traj)
    assert np.array_equal((a + b).contains(times, traj), ia ^ ib)
    assert np.array_equal((a * b).contains(times, traj), ia & ib)
    assert np.array_equal((a | b).contains(times, traj), ia | ib)
    assert np.array_equal((a - b).contains(times, traj), ia & ~ib)
    assert np.array_equal(a.complement().contains(times, traj), ~ia)
    assert (a + a).is_empty()


def test_different_truncation_times_rejected():
    with pytest.raises(UsageError):
        ContinuumEvent.of(HomogeneousEvent.unrestricted(1.0), HomogeneousEvent.unrestricted(2.0))

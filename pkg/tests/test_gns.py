import numpy as np
import pytest
from sklearn.base import clone

from qmeasure.dynamics import (
    DecoherenceFunctional,
    EvolutionSchedule,
    basis_state,
    random_schedule,
    random_state,
    trivial_schedule,
)
from qmeasure.events import FiniteEvent
from qmeasure.exceptions import AxiomViolationError, InvalidWitnessError, ValidationError
from qmeasure.gns import (
    FreeVector,
    HistoryHilbertSpace,
    NotOnto,
    build_history_hilbert_space,
    expand_to_singletons,
    f0_map,
    inner_product_h1,
    invert_via_witness,
    null_vector,
    onto_witness_search,
    singleton_hilbert_space,
)


@pytest.fixture
def system():
    s = random_schedule(3, 3, seed=21)
    psi = random_state(3, seed=22)
    return s, psi, DecoherenceFunctional(psi, s)


def test_free_vector_arithmetic():
    space = random_schedule(2, 2, seed=0).space
    a = FiniteEvent.cylinder(space, {0: [0]})
    b = FiniteEvent.cylinder(space, {0: [1]})
    u = FreeVector.delta(a, 2.0) + FreeVector.delta(b)
    assert u[a] == 2.0 and u[b] == 1.0
    assert (u - u) == FreeVector()
    assert len(u * 0) == 0
    assert (u * 3)[a] == 6.0
    assert u[FiniteEvent.full(space)] == 0


def test_null_vector_has_zero_norm(system):
    s, psi, D = system
    rng = np.random.default_rng(0)
    for _ in range(10):
        a = FiniteEvent.from_bools(s.space, rng.random(s.space.size) < 0.4)
        b = FiniteEvent.from_bools(s.space, rng.random(s.space.size) < 0.4) - a
        v = null_vector(a, b)
        assert abs(inner_product_h1(v, v, D)) < 1e-12
        assert np.linalg.norm(f0_map(v, D)) < 1e-12


def test_f0_is_isometry(system):
    s, psi, D = system
    rng = np.random.default_rng(1)
    events = [FiniteEvent.from_bools(s.space, rng.random(s.space.size) < 0.5) for _ in range(4)]
    u = FreeVector({e: complex(*rng.standard_normal(2)) for e in events[:2]})
    v = FreeVector({e: complex(*rng.standard_normal(2)) for e in events[2:]})
    assert abs(inner_product_h1(u, v, D) - np.vdot(f0_map(u, D), f0_map(v, D))) < 1e-12


def test_quotient_dimension_and_injectivity(system):
    s, psi, D = system
    hs = singleton_hilbert_space(psi, s)
    assert hs.rank_ == 3
    # vectors with equal image are identified in the quotient
    rng = np.random.default_rng(2)
    a = FiniteEvent.from_bools(s.space, rng.random(s.space.size) < 0.5)
    u = FreeVector.delta(a)
    w = FreeVector({FiniteEvent.from_indices(s.space, [i]): 1.0 for i in a.indices()})
    cu, cw = hs.coefficients(u), hs.coefficients(w)
    assert np.linalg.norm(hs.transform(cu) - hs.transform(cw)) < 1e-12
    assert np.allclose(expand_to_singletons(u, s.space), cw)
    # norm in the quotient equals the norm of the image
    assert abs(np.linalg.norm(hs.transform(cu)) - np.linalg.norm(f0_map(u, D))) < 1e-12


def test_precomputed_and_linear_kernels_agree(system):
    s, psi, D = system
    events = [FiniteEvent.cylinder(s.space, {2: [j]}) for j in range(3)] + [FiniteEvent.full(s.space)]
    hs = build_history_hilbert_space(events, D)
    assert hs.rank_ == 3
    feats = np.array([D.restricted(e).ravel() for e in events])
    lin = HistoryHilbertSpace(kernel="linear").fit(feats)
    assert lin.rank_ == 3
    assert np.allclose(np.sort(lin.eigenvalues_), np.sort(hs.eigenvalues_))
    c = np.array([1, -2j, 0.5, 1])
    assert abs(hs.inner(c, c) - lin.inner(c, c)) < 1e-12


def test_estimator_protocol():
    est = HistoryHilbertSpace(rank_tol=1e-8)
    assert est.get_params() == {"kernel": "precomputed", "psd_slack": 1e-10, "rank_tol": 1e-8}
    assert clone(est).rank_tol == 1e-8
    out = est.fit(np.diag([1.0, 0.0])).transform(np.eye(2))
    assert out.shape == (2, 1)
    assert np.allclose(np.abs(out[:, 0]), [1, 0])


def test_rejects_bad_gram_matrices():
    with pytest.raises(AxiomViolationError):
        HistoryHilbertSpace().fit(np.array([[1, 1j], [0, 1]]))
    with pytest.raises(AxiomViolationError):
        HistoryHilbertSpace().fit(np.diag([1.0, -0.5]))
    with pytest.raises(ValidationError):
        HistoryHilbertSpace(kernel="rbf").fit(np.eye(2))


def test_trivial_dynamics_from_basis_state_is_one_dimensional():
    s = trivial_schedule(3, 3)
    assert singleton_hilbert_space(basis_state(3, 1), s).rank_ == 1
    w = onto_witness_search(basis_state(3, 1), s)
    assert isinstance(w, NotOnto)
    assert w.unreachable == [0, 2]
    with pytest.raises(InvalidWitnessError):
        invert_via_witness(np.ones(3), w)


def test_witness_inverts_targets(system):
    s, psi, D = system
    w = onto_witness_search(psi, s)
    assert w.is_onto
    rng = np.random.default_rng(3)
    for _ in range(5):
        phi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert np.linalg.norm(f0_map(invert_via_witness(phi, w), D) - phi) < 1e-12


def test_max_product_fallback_finds_hidden_path():
    # greedy reaches 0 through the empty initial site 1; the exact search goes round via 2
    u0 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)
    c, s_ = np.cos(0.3), np.sin(0.3)
    u1 = np.array([[c, 0, s_], [0, 1, 0], [-s_, 0, c]], dtype=complex)
    sched = EvolutionSchedule((0, 1, 2), (u0, u1))
    psi = np.array([0.9, 0, np.sqrt(1 - 0.81)], dtype=complex)
    w = onto_witness_search(psi, sched)
    assert w.is_onto
    assert all(abs(a) > 0 for a in w.amplitudes)
    assert w.methods[0] == "max-product"

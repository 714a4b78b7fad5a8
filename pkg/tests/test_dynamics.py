import itertools

import numpy as np
import pytest

from qmeasure.dynamics import (
    DecoherenceFunctional,
    EvolutionSchedule,
    amplitude_table,
    basis_state,
    decoherence,
    decoherence_gram,
    decoherence_mixed,
    nearest_neighbor_schedule,
    quantal_measure,
    random_density_matrix,
    random_schedule,
    random_state,
    restricted_evolution_event,
    restricted_evolution_history,
    singleton_decoherence,
    sum_rule_residual,
    trivial_schedule,
    verify_axioms,
)
from qmeasure.events import FiniteEvent
from qmeasure.exceptions import UsageError, ValidationError


def random_event(space, rng, p=0.5):
    return FiniteEvent.from_bools(space, rng.random(space.size) < p)


def loop_decoherence(a, b, psi, sched):
    """Double sum over history pairs, one history at a time."""
    total = 0j
    for g in a.histories():
        for h in b.histories():
            total += singleton_decoherence(tuple(g), tuple(h), psi, sched)
    return total


def test_schedule_validation():
    with pytest.raises(ValidationError):
        EvolutionSchedule((0, 1), (np.eye(2) * 1.01,))
    with pytest.raises(ValidationError):
        EvolutionSchedule((0, 2, 1), (np.eye(2), np.eye(2)))
    with pytest.raises(ValidationError):
        EvolutionSchedule((0, 1, 2), (np.eye(2),))
    s = EvolutionSchedule.unchecked((0, 1), (np.eye(2) * 1.01,))
    assert s.max_unitarity_residual() > 1e-3


def test_composite_is_ordered_product():
    s = random_schedule(3, 4, seed=1)
    assert np.allclose(s.composite(), s.steps[2] @ s.steps[1] @ s.steps[0])
    assert np.allclose(s.composite(1, 2), s.steps[1])


def test_amplitude_table_matches_single_histories():
    s = random_schedule(3, 3, seed=2)
    psi = random_state(3, seed=3)
    table = amplitude_table(psi, s)
    for h in itertools.product(range(3), repeat=3):
        assert np.isclose(table[h], restricted_evolution_history(psi, h, s)[h[-1]])


def test_sum_over_all_histories_is_unitary_evolution():
    s = random_schedule(4, 4, seed=4)
    psi = random_state(4, seed=5)
    full = FiniteEvent.full(s.space)
    assert np.allclose(restricted_evolution_event(psi, full, s), s.composite() @ psi, atol=1e-13)


@pytest.mark.parametrize("n,N", [(2, 2), (2, 4), (3, 3), (4, 2)])
def test_decoherence_matches_double_sum(n, N):
    rng = np.random.default_rng(n * 10 + N)
    s = random_schedule(n, N, seed=rng)
    psi = random_state(n, seed=rng)
    for _ in range(10):
        a, b = random_event(s.space, rng), random_event(s.space, rng)
        assert abs(decoherence(a, b, psi, s) - loop_decoherence(a, b, psi, s)) < 1e-12


def test_mixed_state_is_weighted_sum():
    rng = np.random.default_rng(7)
    s = random_schedule(3, 3, seed=rng)
    vecs = [random_state(3, seed=rng) for _ in range(2)]
    p = [0.3, 0.7]
    rho = sum(pk * np.outer(v, v.conj()) for pk, v in zip(p, vecs))
    a, b = random_event(s.space, rng), random_event(s.space, rng)
    expected = sum(pk * decoherence(a, b, v, s) for pk, v in zip(p, vecs))
    assert abs(decoherence_mixed(a, b, rho, s) - expected) < 1e-12
    assert DecoherenceFunctional(rho, s).rank == 2


def test_normalization_and_measure():
    s = random_schedule(3, 4, seed=8)
    psi = random_state(3, seed=9)
    full = FiniteEvent.full(s.space)
    assert abs(quantal_measure(full, psi, s) - 1) < 1e-12
    assert quantal_measure(FiniteEvent.empty(s.space), psi, s) == 0


def test_sum_rule_and_interference():
    s = random_schedule(2, 3, seed=10)
    psi = random_state(2, seed=11)
    D = DecoherenceFunctional(psi, s)
    a = FiniteEvent.cylinder(s.space, {1: [0], 2: [0]})
    b = FiniteEvent.cylinder(s.space, {1: [1], 2: [0]})
    c = FiniteEvent.cylinder(s.space, {2: [1]})
    assert abs(sum_rule_residual(D.measure, a, b, c)) < 1e-12
    # two paths to the same endpoint interfere: the measure is not additive
    assert abs(D.measure(a | b) - D.measure(a) - D.measure(b)) > 1e-6


def test_gram_is_psd_and_hermitian():
    rng = np.random.default_rng(12)
    s = random_schedule(3, 3, seed=rng)
    events = [random_event(s.space, rng) for _ in range(8)]
    g = decoherence_gram(events, random_state(3, seed=rng), s)
    assert g.hermiticity_residual < 1e-14
    assert g.min_eigenvalue > -1e-12


def test_verify_axioms_passes_for_unitary_dynamics():
    rng = np.random.default_rng(13)
    s = random_schedule(3, 3, seed=rng)
    events = [random_event(s.space, rng) for _ in range(5)]
    report = verify_axioms(events, random_state(3, seed=rng), s, tol=1e-12)
    assert report.passed
    assert [r[0] for r in report.as_records()] == [
        "hermiticity",
        "bi_additivity",
        "sum_rule",
        "normalization",
        "min_eigenvalue",
    ]


def test_verify_axioms_detects_non_unitary_step():
    u = np.array([[1, 1], [1, -1]]) / np.sqrt(2) * 1.001
    s = EvolutionSchedule.unchecked((0, 1), (u,))
    events = [FiniteEvent.full(s.space), FiniteEvent.cylinder(s.space, {1: [0]})]
    report = verify_axioms(events, basis_state(2, 0), s, tol=1e-10)
    assert not report.passed
    assert report.normalization > 1e-4


def test_trivial_and_nearest_neighbour_schedules():
    t = trivial_schedule(3, 4)
    assert np.allclose(t.composite(), np.eye(3))
    s = nearest_neighbor_schedule(5, 4, seed=0)
    for u in s.steps:
        band = np.abs(np.subtract.outer(np.arange(5), np.arange(5))) > 1
        assert np.all(u[band] == 0)
    assert s.max_unitarity_residual() < 1e-12


def test_density_matrix_factory():
    rho = random_density_matrix(4, 2, seed=0)
    assert np.isclose(np.trace(rho).real, 1)
    assert np.linalg.matrix_rank(rho, tol=1e-10) == 2
    with pytest.raises(ValidationError):
        random_density_matrix(3, 4)


def test_event_from_other_space_rejected():
    s = random_schedule(2, 3, seed=0)
    other = FiniteEvent.full(random_schedule(2, 2, seed=0).space)
    with pytest.raises(UsageError):
        DecoherenceFunctional(basis_state(2, 0), s).restricted(other)

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary.
"""

import itertools
import logging
import time

import numpy as np
import pytest

from qmeasure.continuum import (
    ContinuumSystem,
    Grid,
    PropagatorSpec,
    check_esck,
    evolve_back_to_initial,
    gaussian_packet,
    halfline_packet,
    initial_inner,
    inner,
    l2_distance,
    lemma4_reconstruct,
    restricted_evolution_homogeneous,
)
from qmeasure.dynamics import (
    DecoherenceFunctional,
    basis_state,
    decoherence,
    nearest_neighbor_schedule,
    random_density_matrix,
    random_schedule,
    random_state,
    trivial_schedule,
    verify_axioms,
)
from qmeasure.events import FiniteEvent, HomogeneousEvent, Region
from qmeasure.exceptions import HypothesisFailure
from qmeasure.gns import f0_map, inner_product_h1, invert_via_witness, null_vector, onto_witness_search, singleton_hilbert_space

log = logging.getLogger(__name__)

RESULTS = {}


def report(number, title, ok, detail):
    line = f"criterion {str(number):<3} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[str(number)] = line
    print(line)
    assert ok, line


def random_event(space, rng, p=0.5):
    return FiniteEvent.from_bools(space, rng.random(space.size) < p)


def random_system(rng):
    n, N = int(rng.integers(2, 7)), int(rng.integers(2, 6))
    return random_schedule(n, N, seed=rng), random_state(n, seed=rng)


# --- 1 ------------------------------------------------------------------


def test_criterion_01_axiom_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = dict(hermiticity=0.0, bi_additivity=0.0, sum_rule=0.0, normalization=0.0, min_eigenvalue=np.inf)
    for _ in range(50):
        sched, psi = random_system(rng)
        events = [random_event(sched.space, rng) for _ in range(6)]
        r = verify_axioms(events, psi, sched, tol=1e-12, max_pairs=60, seed=int(rng.integers(1 << 30)))
        for k in ("hermiticity", "bi_additivity", "sum_rule", "normalization"):
            worst[k] = max(worst[k], getattr(r, k))
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], r.min_eigenvalue)
    elapsed = time.perf_counter() - start
    ok = (
        max(worst["hermiticity"], worst["bi_additivity"], worst["sum_rule"]) <= 1e-12
        and worst["normalization"] <= 1e-10
        and worst["min_eigenvalue"] >= -1e-10
        and elapsed < 10
    )
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {elapsed:.1f}s"
    report(1, "axiom suite on 50 random systems", ok, detail)


# --- 2 ------------------------------------------------------------------


def test_criterion_02_null_vectors():
    # the H1 norm is computed through f0, which is an isometry; the square
    # root of the Gram quadratic form would only resolve about 1e-8
    rng = np.random.default_rng(102)
    worst_norm = worst_form = 0.0
    for _ in range(100):
        sched, psi = random_system(rng)
        D = DecoherenceFunctional(psi, sched)
        a = random_event(sched.space, rng, 0.4)
        b = random_event(sched.space, rng, 0.4) - a
        v = null_vector(a, b)
        worst_norm = max(worst_norm, float(np.linalg.norm(f0_map(v, D))))
        worst_form = max(worst_form, abs(inner_product_h1(v, v, D)))
    ok = worst_norm <= 1e-12 and worst_form <= 1e-12
    report(2, "null vectors of 100 disjoint pairs", ok, f"max norm {worst_norm:.1e}, max <v,v> {worst_form:.1e}")


# --- 3 ------------------------------------------------------------------


def test_criterion_03_theorem_one_pipeline():
    rng = np.random.default_rng(103)
    dims, worst = [], 0.0
    for n in (2, 3, 4):
        sched, psi = random_schedule(n, 3, seed=rng), random_state(n, seed=rng)
        dims.append(singleton_hilbert_space(psi, sched, rank_tol=1e-10).rank_)
        D = DecoherenceFunctional(psi, sched)
        witness = onto_witness_search(psi, sched)
        for _ in range(20):
            phi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            phi /= np.linalg.norm(phi)
            worst = max(worst, float(np.linalg.norm(f0_map(invert_via_witness(phi, witness), D) - phi)))
    ok = dims == [2, 3, 4] and worst <= 1e-12
    report(3, "dim H2 = n and witness inversion", ok, f"dims {dims}, max residual {worst:.1e}")


# --- 4 ------------------------------------------------------------------


def test_criterion_04_counterexamples():
    trivial = singleton_hilbert_space(basis_state(4, 2), trivial_schedule(4, 4)).rank_
    seq = [singleton_hilbert_space(basis_state(5, 0), nearest_neighbor_schedule(5, N, seed=104)).rank_ for N in range(2, 9)]
    monotone = all(b >= a for a, b in zip(seq, seq[1:]))
    ok = trivial == 1 and monotone and seq[-1] == 5
    report(4, "trivial and nearest-neighbour dynamics", ok, f"trivial dim {trivial}, hopping dims over N=2..8 {seq}")


# --- 5 ------------------------------------------------------------------


def test_criterion_05_mixed_states():
    rng = np.random.default_rng(105)
    bad = []
    for trial in range(20):
        r = 2 + trial % 2
        sched = random_schedule(3, 3, seed=rng)
        rho = random_density_matrix(3, r, seed=rng)
        dim = singleton_hilbert_space(rho, sched).rank_
        if dim != 3 * r:
            bad.append((trial, r, dim))
    # engineered non-generic case: logged only
    rho = np.diag([0.5, 0.5, 0.0]).astype(complex)
    dim = singleton_hilbert_space(rho, trivial_schedule(3, 3)).rank_
    log.info("trivial dynamics with diagonal rank-2 state gives dim H2 = %d (generic value 6)", dim)
    report(5, "mixed states of rank r give dim H2 = r n", not bad, f"20 generic trials, mismatches {bad}")


# --- 6 ------------------------------------------------------------------


def history_amplitudes(psi, sched):
    """Amplitude of each history by an explicit product, lexicographic order."""
    amps = []
    for h in itertools.product(range(sched.n), repeat=sched.N):
        a = psi[h[0]]
        for k, u in enumerate(sched.steps):
            a = a * u[h[k + 1], h[k]]
        amps.append(a)
    return np.array(amps)


def small_systems():
    for n in range(2, 17):
        for N in range(2, 9):
            if n**N <= 256:
                yield n, N


def test_criterion_06_brute_force():
    rng = np.random.default_rng(106)
    worst, systems = 0.0, 0
    for n, N in small_systems():
        systems += 1
        sched, psi = random_schedule(n, N, seed=rng), random_state(n, seed=rng)
        amps = history_amplitudes(psi, sched)
        ends = sched.space.configs[:, -1]
        same_end = ends[:, None] == ends[None, :]
        for _ in range(100):
            a, b = random_event(sched.space, rng), random_event(sched.space, rng)
            ia, ib = a.indices(), b.indices()
            oracle = np.sum(np.conj(amps[ia])[:, None] * amps[ib][None, :] * same_end[np.ix_(ia, ib)])
            worst = max(worst, abs(decoherence(a, b, psi, sched) - oracle))
    report(6, "decoherence against the double sum", worst <= 1e-12, f"{systems} systems x 100 pairs, max error {worst:.1e}")


# --- 7 ------------------------------------------------------------------


def test_criterion_07_esck():
    start = time.perf_counter()
    pts = (-2.0, -1.0, 0.0, 1.0, 2.0)
    free = max(check_esck(PropagatorSpec("free"), x3, 1.0, x1, 0.0, 0.5).residual for x3 in pts for x1 in pts)
    sho = PropagatorSpec("sho", omega=1.0)
    sho_res = max(check_esck(sho, x3, 1.3, x1, 0.0, 0.7).residual for x3 in pts for x1 in pts)
    elapsed = time.perf_counter() - start
    ok = free < 1e-3 and sho_res < 1e-2 and elapsed < 60
    report(7, "composition law on 5x5 point grids", ok, f"free {free:.1e}, SHO {sho_res:.1e}, {elapsed:.1f}s")


# --- 8 ------------------------------------------------------------------


def test_criterion_08_lemma4():
    spec, psi, grid = PropagatorSpec("free"), gaussian_packet(0.0, 1.0, 1.0), Grid()
    rows, ok = [], True
    for eps in (0.2, 0.1, 0.05):
        start = time.perf_counter()
        r = lemma4_reconstruct((0.0, 1.0), eps, psi, spec, grid=grid)
        elapsed = time.perf_counter() - start
        ok &= r.error < eps and elapsed < 300
        rows.append((eps, r.error, r.cells, elapsed))
    cells = [c for _, _, c, _ in rows]
    ok &= all(b >= a for a, b in zip(cells, cells[1:]))
    detail = "; ".join(f"eps {e}: error {err:.4f}, {c} cells, {t:.1f}s" for e, err, c, t in rows)
    report(8, "reconstruction of chi_[0,1]", bool(ok), detail)


# --- 9 ------------------------------------------------------------------


def test_criterion_09_half_line():
    spec, psi, grid = PropagatorSpec("halfline"), halfline_packet(), Grid()
    sys = ContinuumSystem(psi, spec, grid)
    rng = np.random.default_rng(109)
    x = np.concatenate([np.linspace(-12, 0, 241), -rng.random(200)])
    events = [HomogeneousEvent.unrestricted(1.0)]
    for _ in range(6):
        t = float(rng.uniform(0.2, 0.8))
        lo = rng.uniform(-2, 3, 3)
        events.append(
            HomogeneousEvent((0.0, t, 1.0), tuple(Region.interval(a, a + rng.uniform(0.5, 3)) for a in lo))
        )
    vanish = all(np.all(sys.restricted(e)(x) == 0) for e in events)
    positive = lemma4_reconstruct((0.5, 1.5), 0.1, psi, spec, grid=grid, system=sys)
    try:
        lemma4_reconstruct((-1.5, -0.5), 0.1, psi, spec, grid=grid, system=sys)
        failure = None
    except HypothesisFailure as exc:
        failure = exc.point
    ok = vanish and positive.passed and failure is not None
    detail = f"zero on x<=0 for {len(events)} events: {vanish}; I=[0.5,1.5] error {positive.error:.4f}; I=[-1.5,-0.5] fails at x={failure}"
    report(9, "half-line", ok, detail)


# --- 10 -----------------------------------------------------------------


def test_criterion_10_sho_caustic():
    grid = Grid()
    psi = gaussian_packet(1.0, 0.5, 0.7)
    errors = []
    for omega in (1.0, 2.0):
        spec = PropagatorSpec("sho", omega=omega)
        T = np.pi / omega
        out = restricted_evolution_homogeneous(psi, HomogeneousEvent((0.0, 0.4 * T, T), (Region.full(),) * 3), spec, grid=grid)
        x, w = grid.rule(wavenumber=out.wavenumber(grid.span))
        errors.append(float(np.sqrt(np.sum(w * np.abs(out(x) + 1j * psi(-x)) ** 2))))
    report(10, "SHO half period is parity times -i", max(errors) < 1e-3, f"L2 errors for omega=1,2: {errors[0]:.1e}, {errors[1]:.1e}")


# --- 11 -----------------------------------------------------------------


def random_continuum_event(rng, T=1.0):
    k = int(rng.integers(1, 3))
    times = (0.0, *sorted(rng.uniform(0.15, 0.85, k - 1)), T) if k > 1 else (0.0, T)
    regions = [Region.full()]
    for _ in times[1:]:
        a = rng.uniform(-3, 2)
        regions.append(Region.interval(a, a + rng.uniform(1, 4)))
    return HomogeneousEvent(tuple(times), tuple(regions))


@pytest.mark.parametrize("kind", ["free", "sho", "vector_potential"])
def test_criterion_11_back_to_initial_time(kind):
    grid = Grid()
    spec = PropagatorSpec(kind, A=0.7)
    psi = gaussian_packet(0.0, 1.0, 1.0)
    sys = ContinuumSystem(psi, spec, grid)
    trip = l2_distance(evolve_back_to_initial(sys.restricted(HomogeneousEvent.unrestricted(1.0)), spec, grid), psi, grid)
    rng = np.random.default_rng(111)
    worst = 0.0
    for _ in range(10):
        a, b = sys.restricted(random_continuum_event(rng)), sys.restricted(random_continuum_event(rng))
        at_T = inner(a, b, grid)
        at_0 = initial_inner(evolve_back_to_initial(a, spec, grid), evolve_back_to_initial(b, spec, grid), grid)
        worst = max(worst, abs(at_T - at_0))
    ok = trip < 1e-4 and worst < 1e-4
    detail = f"round trip {trip:.1e}, max |D_T - D_0| over 10 pairs {worst:.1e}"
    report(f"11{'abc'[['free', 'sho', 'vector_potential'].index(kind)]}", f"infinite-time consistency ({kind})", ok, detail)

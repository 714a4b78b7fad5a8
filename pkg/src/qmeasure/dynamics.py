"""Finite-configuration quantum measure systems.

A system is an initial state (vector or density matrix) plus an
:class:`EvolutionSchedule` of unitaries between ``N`` fixed times. The
decoherence functional is the inner product of restricted evolutions,
``D(a, b) = <psi_a, psi_b>``.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from ._validation import (
    PSD_SLACK,
    as_complex_matrix,
    check_density_matrix,
    check_state,
    check_unitary,
    unitarity_residual,
)
from .events import FiniteEvent, FiniteSampleSpace
from .exceptions import UsageError, ValidationError

RANK_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class EvolutionSchedule:
    """Unitaries ``steps[k] = U(times[k+1], times[k])``."""

    times: tuple
    steps: tuple
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) < 2 or times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(f"times must start at 0 and increase strictly: {times}")
        if len(self.steps) != len(times) - 1:
            raise ValidationError(f"{len(times)} times need {len(times) - 1} steps, got {len(self.steps)}")
        check = check_unitary if self.validate else (lambda u, name: as_complex_matrix(u, name))
        steps = tuple(check(u, name=f"step {k}") for k, u in enumerate(self.steps))
        if len({u.shape for u in steps}) != 1:
            raise ValidationError("all steps must have the same dimension")
        for u in steps:
            u.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "steps", steps)

    @classmethod
    def unchecked(cls, times, steps):
        """Build a schedule without the unitarity check (for negative tests)."""
        return cls(times, steps, validate=False)

    @property
    def n(self):
        return self.steps[0].shape[0]

    @property
    def N(self):
        return len(self.times)

    @property
    def space(self):
        return FiniteSampleSpace(self.n, self.N)

    def composite(self, start=0, stop=None):
        """``U(times[stop], times[start])`` as the ordered product of steps."""
        stop = self.N - 1 if stop is None else stop
        if not 0 <= start <= stop < self.N:
            raise UsageError(f"bad slot range {start}..{stop}")
        out = np.eye(self.n, dtype=complex)
        for u in self.steps[start:stop]:
            out = u @ out
        return out

    def max_unitarity_residual(self):
        return max(unitarity_residual(u) for u in self.steps)


# ---------------------------------------------------------------------------
# schedule and state factories


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(n, seed=None):
    """Haar-random ``n x n`` unitary."""
    if n == 1:
        return np.exp(2j * np.pi * _rng(seed).random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=_rng(seed))


def random_schedule(n, N, seed=None, times=None):
    rng = _rng(seed)
    times = tuple(range(N)) if times is None else times
    return EvolutionSchedule(times, tuple(random_unitary(n, rng) for _ in range(N - 1)))


def trivial_schedule(n, N):
    return EvolutionSchedule(tuple(range(N)), tuple(np.eye(n) for _ in range(N - 1)))


def nearest_neighbor_schedule(n, N, seed=None):
    """Lattice evolution that only moves amplitude to adjacent sites per step.

    Steps alternate between Haar 2x2 blocks on pairs ``(0,1), (2,3), ...``
    and on ``(1,2), (3,4), ...``, so each step widens the support by at
    most one site on either side.
    """
    rng = _rng(seed)
    steps = []
    for k in range(N - 1):
        u = np.eye(n, dtype=complex)
        for a in range(k % 2, n - 1, 2):
            u[a : a + 2, a : a + 2] = random_unitary(2, rng)
        steps.append(u)
    return EvolutionSchedule(tuple(range(N)), tuple(steps))


def random_state(n, seed=None):
    rng = _rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def basis_state(n, k):
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


def random_density_matrix(n, rank, seed=None):
    """Generic rank-``rank`` density matrix with random spectrum."""
    rng = _rng(seed)
    if not 1 <= rank <= n:
        raise ValidationError(f"rank must lie in 1..{n}")
    vecs = random_unitary(n, rng)[:, :rank]
    p = rng.random(rank) + 0.1
    p /= p.sum()
    return (vecs * p) @ vecs.conj().T


# ---------------------------------------------------------------------------
# restricted evolution and the decoherence functional


def _check_event(event, sched):
    if event.space != sched.space:
        raise UsageError(f"event lives on n={event.space.n}, N={event.space.N}; schedule has n={sched.n}, N={sched.N}")


def restricted_evolution_history(psi, history, sched):
    """``P^{g_N} U P^{g_{N-1}} ... U P^{g_1} psi`` for a single history."""
    psi = check_state(psi, sched.n)
    history = sched.space.check_history(history)
    out = np.zeros(sched.n, dtype=complex)
    out[history[0]] = psi[history[0]]
    for u, c in zip(sched.steps, history[1:]):
        out = u @ out
        keep = out[c]
        out = np.zeros_like(out)
        out[c] = keep
    return out


def amplitude_table(psi, sched):
    """Amplitudes of every history, shape ``(n,) * N`` in lexicographic layout."""
    table = np.asarray(psi, dtype=complex)
    for u in sched.steps:
        # new[..., a, b] = old[..., a] * U[b, a]
        table = table[..., None] * u.T
    return table


class DecoherenceFunctional:
    """Decoherence functional of a finite system, with cached amplitudes.

    A density matrix is handled through its spectral decomposition
    ``rho = sum_k p_k |psi_k><psi_k|``; restricted evolutions then carry one
    row per retained eigenvector, scaled by ``sqrt(p_k)``, so that
    ``D = sum_k p_k D_k`` is still a plain inner product.
    """

    def __init__(self, state, sched, rank_cutoff=RANK_CUTOFF):
        self.sched = sched
        self.space = sched.space
        state = np.asarray(state, dtype=complex)
        if state.ndim == 1:
            self.weights = np.ones(1)
            self.states = check_state(state, sched.n)[None, :]
        else:
            rho = check_density_matrix(state, sched.n)
            p, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
            keep = p > rank_cutoff
            self.weights = p[keep][::-1]
            self.states = vecs[:, keep].T[::-1]
        flat = [amplitude_table(s, sched).ravel() for s in self.states]
        self._amps = np.sqrt(self.weights)[:, None] * np.array(flat)
        self._final = self.space.configs[:, -1]

    @property
    def rank(self):
        return len(self.weights)

    def restricted(self, event):
        """``(rank, n)`` array of weighted restricted evolutions of ``event``."""
        _check_event(event, self.sched)
        idx = event.indices()
        out = np.zeros((self.rank, self.space.n), dtype=complex)
        for k in range(self.rank):
            a = self._amps[k, idx]
            out[k] = np.bincount(self._final[idx], weights=a.real, minlength=self.space.n) + 1j * np.bincount(
                self._final[idx], weights=a.imag, minlength=self.space.n
            )
        return out

    def zero(self):
        return np.zeros((self.rank, self.space.n), dtype=complex)

    def __call__(self, a, b):
        return complex(np.vdot(self.restricted(a), self.restricted(b)))

    def measure(self, event):
        return float(np.linalg.norm(self.restricted(event)) ** 2)

    def gram(self, events):
        vecs = np.array([self.restricted(e).ravel() for e in events])
        return vecs.conj() @ vecs.T

    def singleton_features(self):
        """``(n**N, rank * n)`` matrix whose row ``i`` is ``psi_{{history i}}``.

        The singleton Gram matrix is ``conj(F) @ F.T``; working with ``F``
        avoids forming that ``n**N x n**N`` matrix.
        """
        size, n = self.space.size, self.space.n
        feats = np.zeros((size, self.rank * n), dtype=complex)
        rows = np.arange(size)
        for k in range(self.rank):
            feats[rows, k * n + self._final] = self._amps[k]
        return feats


def restricted_evolution_event(psi, event, sched):
    """``psi_a = sum over histories in a of psi_gamma``."""
    return DecoherenceFunctional(psi, sched).restricted(event)[0]


def decoherence(a, b, psi, sched):
    return DecoherenceFunctional(check_state(psi, sched.n), sched)(a, b)


def decoherence_mixed(a, b, rho, sched):
    return DecoherenceFunctional(check_density_matrix(rho, sched.n), sched)(a, b)


def quantal_measure(event, state, sched):
    return DecoherenceFunctional(state, sched).measure(event)


def singleton_decoherence(g, gbar, psi, sched):
    """``D({g}, {gbar})`` from the Schwinger-Keldysh product formula.

    Conjugated amplitude of ``g`` times the amplitude of ``gbar`` when both
    end on the same configuration, zero otherwise.
    """
    if g[-1] != gbar[-1]:
        return 0j
    amp = psi[g[0]]
    amp_bar = psi[gbar[0]]
    for k, u in enumerate(sched.steps):
        amp *= u[g[k + 1], g[k]]
        amp_bar *= u[gbar[k + 1], gbar[k]]
    return complex(np.conj(amp) * amp_bar)


@dataclass
class DecoherenceGram:
    events: list
    gram: np.ndarray

    @property
    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh((self.gram + self.gram.conj().T) / 2)[0])

    @property
    def hermiticity_residual(self):
        return float(np.max(np.abs(self.gram - self.gram.conj().T)))


def decoherence_gram(events, state, sched):
    events = list(events)
    return DecoherenceGram(events, DecoherenceFunctional(state, sched).gram(events))


# ---------------------------------------------------------------------------
# axiom verification


@dataclass
class AxiomReport:
    hermiticity: float
    bi_additivity: float
    sum_rule: float
    normalization: float
    min_eigenvalue: float
    unitarity: float
    tol: float

    @property
    def passed(self):
        return (
            max(self.hermiticity, self.bi_additivity, self.sum_rule, self.normalization) <= self.tol
            and self.min_eigenvalue >= -self.tol
        )

    def as_records(self):
        """``(name, value, tolerance, passed)`` tuples, one per axiom."""
        t = self.tol
        return [
            ("hermiticity", self.hermiticity, t, self.hermiticity <= t),
            ("bi_additivity", self.bi_additivity, t, self.bi_additivity <= t),
            ("sum_rule", self.sum_rule, t, self.sum_rule <= t),
            ("normalization", self.normalization, t, self.normalization <= t),
            ("min_eigenvalue", self.min_eigenvalue, -t, self.min_eigenvalue >= -t),
        ]


def sum_rule_residual(mu, a, b, c):
    """Left-hand side of the quantal sum rule for disjoint ``a, b, c``."""
    return mu(a | b | c) - mu(a | b) - mu(b | c) - mu(a | c) + mu(a) + mu(b) + mu(c)


def verify_axioms(events, state, sched, tol=PSD_SLACK, max_pairs=200, seed=0):
    """Check hermiticity, bi-additivity, the sum rule, normalisation and
    strong positivity of the decoherence functional on ``events``.

    Disjoint pairs and triples are derived from the given events
    (``a - b, b`` and ``a, b - a, c - a - b``); at most ``max_pairs`` of
    each are sampled.
    """
    events = list(events)
    if not events:
        raise UsageError("verify_axioms needs at least one event")
    D = DecoherenceFunctional(state, sched)
    rng = np.random.default_rng(seed)
    gram = D.gram(events)
    herm = float(np.max(np.abs(gram - gram.conj().T)))
    min_eig = float(np.linalg.eigvalsh((gram + gram.conj().T) / 2)[0])

    pairs = list(itertools.permutations(range(len(events)), 2)) or [(0, 0)]
    if len(pairs) > max_pairs:
        pairs = [pairs[i] for i in rng.choice(len(pairs), max_pairs, replace=False)]
    rest = [D.restricted(e) for e in events]
    bi = 0.0
    for i, j in pairs:
        x, y = events[i] - events[j], events[j]
        vx, vy, vxy = D.restricted(x), D.restricted(y), D.restricted(x | y)
        for r in rest:
            bi = max(bi, abs(np.vdot(vxy, r) - np.vdot(vx, r) - np.vdot(vy, r)))

    triples = list(itertools.permutations(range(len(events)), 3)) or [(0, 0, 0)]
    if len(triples) > max_pairs:
        triples = [triples[i] for i in rng.choice(len(triples), max_pairs, replace=False)]
    sr = 0.0
    for i, j, k in triples:
        a = events[i]
        b = events[j] - a
        c = events[k] - a - b
        sr = max(sr, abs(sum_rule_residual(D.measure, a, b, c)))

    omega = FiniteEvent.full(sched.space)
    return AxiomReport(
        hermiticity=herm,
        bi_additivity=float(bi),
        sum_rule=float(sr),
        normalization=abs(D(omega, omega) - 1.0),
        min_eigenvalue=min_eig,
        unitarity=sched.max_unitarity_residual(),
        tol=tol,
    )

"""History Hilbert space: free vectors on events, the degenerate inner
product built from a decoherence functional, and its quotient.

:class:`HistoryHilbertSpace` follows the scikit-learn estimator protocol:
``fit`` takes a precomputed Gram matrix ``G[i, j] = D(e_i, e_j)`` over a
list of generating events, and ``transform`` maps coefficient vectors on
those generators to orthonormal coordinates of their equivalence classes.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import PSD_SLACK, as_complex_matrix, check_state
from .dynamics import DecoherenceFunctional, restricted_evolution_history
from .events import FiniteEvent
from .exceptions import AxiomViolationError, InvalidWitnessError, ValidationError

WITNESS_TOL = 1e-8
RANK_TOL = 1e-10


class FreeVector(Mapping):
    """Finitely supported complex function on an event algebra.

    Zero coefficients are never stored. Vector-space operations are
    pointwise, so ``FreeVector.delta(a) + FreeVector.delta(b)`` has two
    entries even when ``a`` and ``b`` overlap.
    """

    def __init__(self, coeffs=None):
        self._c = {e: complex(c) for e, c in dict(coeffs or {}).items() if c != 0}

    @classmethod
    def delta(cls, event, coeff=1.0):
        return cls({event: coeff})

    def __getitem__(self, event):
        return self._c.get(event, 0j)

    def __iter__(self):
        return iter(self._c)

    def __len__(self):
        return len(self._c)

    def __contains__(self, event):
        return event in self._c

    @property
    def support(self):
        return list(self._c)

    def __add__(self, other):
        out = dict(self._c)
        for e, c in other.items():
            out[e] = out.get(e, 0j) + c
        return FreeVector(out)

    def __neg__(self):
        return FreeVector({e: -c for e, c in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return FreeVector({e: scalar * c for e, c in self._c.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, FreeVector) and self._c == other._c

    def __repr__(self):
        return f"FreeVector({len(self)} events)"


def null_vector(a, b):
    """``delta_a + delta_b - delta_{a | b}``; has zero norm for disjoint ``a, b``."""
    return FreeVector({a: 1.0}) + FreeVector({b: 1.0}) + FreeVector({a | b: -1.0})


def inner_product_h1(u, v, D):
    """``sum_{a,b} conj(u(a)) D(a, b) v(b)``."""
    if not u or not v:
        return 0j
    left, right = u.support, v.support
    gram = np.array([[D(a, b) for b in right] for a in left], dtype=complex)
    cu = np.array([u[a] for a in left])
    cv = np.array([v[b] for b in right])
    return complex(cu.conj() @ gram @ cv)


def f0_map(u, system):
    """``sum_a u(a) psi_a``, with ``psi_a = system.restricted(a)``.

    For a pure-state finite system the result is a vector in C^n; for a
    mixed state it has one row per retained eigenvector of the density
    matrix.
    """
    out = None
    for event, coeff in u.items():
        term = coeff * system.restricted(event)
        out = term if out is None else out + term
    if out is None:
        out = system.zero()
    if isinstance(out, np.ndarray) and out.ndim == 2 and out.shape[0] == 1:
        return out[0]
    return out


def expand_to_singletons(u, space):
    """Coefficients on singleton events of the same equivalence class as ``u``.

    Bi-additivity makes ``delta_a`` and ``sum_{g in a} delta_{g}`` differ by
    a null vector, so the expansion does not change ``[u]``.
    """
    out = np.zeros(space.size, dtype=complex)
    for event, coeff in u.items():
        if not isinstance(event, FiniteEvent) or event.space != space:
            raise ValidationError("expand_to_singletons needs finite events of the given space")
        out[event.indices()] += coeff
    return out


class HistoryHilbertSpace(TransformerMixin, BaseEstimator):
    """Quotient of the free vector space by null vectors.

    Parameters
    ----------
    kernel : {"precomputed", "linear"}
        With ``"precomputed"`` (default) ``fit`` receives the Gram matrix.
        With ``"linear"`` it receives a feature matrix ``F`` whose row ``i``
        represents generator ``i`` (for instance its restricted evolution),
        and the Gram matrix is ``conj(F) @ F.T``; this avoids forming a
        large Gram matrix when the feature dimension is small.
    rank_tol : float
        Eigenvalues of the Gram matrix below ``rank_tol * max eigenvalue``
        are treated as zero; the rest span the quotient.
    psd_slack : float
        Tolerated negative eigenvalue (relative to the largest) before the
        Gram matrix is rejected as violating strong positivity.

    Attributes
    ----------
    rank_ : int
        Dimension of the History Hilbert space.
    eigenvalues_ : ndarray
        Retained eigenvalues, descending.
    factor_ : ndarray of shape (rank_, n_generators)
        ``sqrt(eigenvalue) * eigenvector^dagger``; ``factor_ @ c`` gives the
        quotient coordinates of coefficient vector ``c``.
    """

    def __init__(self, kernel="precomputed", rank_tol=RANK_TOL, psd_slack=PSD_SLACK):
        self.kernel = kernel
        self.rank_tol = rank_tol
        self.psd_slack = psd_slack

    def fit(self, X, y=None):
        if self.kernel == "linear":
            return self._fit_features(as_complex_matrix(X, "features", square=False))
        if self.kernel != "precomputed":
            raise ValidationError(f"unknown kernel {self.kernel!r}")
        gram = as_complex_matrix(X, "gram")
        scale = max(1.0, float(np.max(np.abs(gram))))
        if np.max(np.abs(gram - gram.conj().T)) > 1e-10 * scale:
            raise AxiomViolationError("decoherence Gram matrix is not Hermitian")
        gram = (gram + gram.conj().T) / 2
        evals, evecs = np.linalg.eigh(gram)
        top = max(float(evals[-1]), 0.0)
        if evals[0] < -self.psd_slack * max(top, 1.0):
            raise AxiomViolationError(f"strong positivity violated: eigenvalue {evals[0]:.3e}")
        keep = evals > self.rank_tol * top if top > 0 else np.zeros_like(evals, dtype=bool)
        order = np.argsort(evals[keep])[::-1]
        lam = evals[keep][order]
        vecs = evecs[:, keep][:, order]
        self.gram_ = gram
        self.n_features_in_ = gram.shape[0]
        self.eigenvalues_ = lam
        self.rank_ = int(lam.size)
        self.factor_ = np.sqrt(lam)[:, None] * vecs.conj().T
        return self

    def _fit_features(self, feats):
        # conj(F) F^T = V S^2 V^H with F^T = W S V^H
        _, s, vh = np.linalg.svd(feats.T, full_matrices=False)
        lam = s**2
        top = float(lam[0]) if lam.size else 0.0
        keep = lam > self.rank_tol * top if top > 0 else np.zeros_like(lam, dtype=bool)
        self.gram_ = None
        self.n_features_in_ = feats.shape[0]
        self.eigenvalues_ = lam[keep]
        self.rank_ = int(keep.sum())
        self.factor_ = s[keep][:, None] * vh[keep]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = np.asarray(X, dtype=complex)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected {self.n_features_in_} coefficients, got {X.shape[1]}")
        out = X @ self.factor_.T
        return out[0] if single else out

    def inner(self, u, v):
        """``<[u], [v]>`` for coefficient vectors on the generators."""
        return complex(np.vdot(self.transform(u), self.transform(v)))

    def coefficients(self, u):
        """Coefficient vector on ``generators_`` for a :class:`FreeVector`.

        With singleton generators, non-singleton events are spread over
        their histories, which leaves the class ``[u]`` unchanged.
        """
        check_is_fitted(self, "generators_")
        gens = self.generators_
        out = np.zeros(len(gens), dtype=complex)
        if isinstance(gens, SingletonEvents):
            # any finite event is a sum of singletons up to a null vector
            return expand_to_singletons(u, gens.space)
        index = {e: i for i, e in enumerate(gens)}
        for e, c in u.items():
            if e not in index:
                raise ValidationError(f"{e!r} is not one of the generators")
            out[index[e]] += c
        return out


class SingletonEvents(Sequence):
    """The singleton events of a finite sample space, built on demand."""

    def __init__(self, space):
        self.space = space

    def __len__(self):
        return self.space.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        return FiniteEvent.from_indices(self.space, [i])

    def index(self, event, *args):
        if not isinstance(event, FiniteEvent) or event.space != self.space or len(event) != 1:
            raise ValidationError(f"{event!r} is not a singleton of this space")
        return event.mask.bit_length() - 1


def build_history_hilbert_space(generators, D, rank_tol=RANK_TOL, psd_slack=PSD_SLACK):
    """Fit a :class:`HistoryHilbertSpace` on ``D`` evaluated over ``generators``.

    ``D`` is a callable ``D(a, b)``; if it exposes ``gram(events)`` that is
    used instead of pairwise calls.
    """
    generators = list(generators)
    if not generators:
        raise ValidationError("need at least one generating event")
    if hasattr(D, "gram"):
        gram = D.gram(generators)
    else:
        gram = np.array([[D(a, b) for b in generators] for a in generators], dtype=complex)
    hs = HistoryHilbertSpace(rank_tol=rank_tol, psd_slack=psd_slack).fit(gram)
    hs.generators_ = generators
    return hs


def singleton_hilbert_space(state, sched, rank_tol=RANK_TOL):
    """History Hilbert space of a finite system, generated by singleton events."""
    D = DecoherenceFunctional(state, sched)
    hs = HistoryHilbertSpace(kernel="linear", rank_tol=rank_tol).fit(D.singleton_features())
    hs.generators_ = SingletonEvents(sched.space)
    return hs


# ---------------------------------------------------------------------------
# onto witnesses


@dataclass
class OntoWitness:
    """One history per final configuration, each with nonzero amplitude."""

    space: object
    histories: list
    amplitudes: np.ndarray
    methods: list = field(default_factory=list)

    is_onto = True


@dataclass
class NotOnto:
    """Final configurations that no history reaches with nonzero amplitude."""

    unreachable: list
    found: dict

    is_onto = False


def _greedy_path(psi, sched, j):
    """Walk backwards from ``j`` picking the largest one-step amplitude."""
    path = [j]
    for k in range(sched.N - 2, 0, -1):
        path.append(int(np.argmax(np.abs(sched.steps[k][path[-1], :]))))
    path.append(int(np.argmax(np.abs(sched.steps[0][path[-1], :] * psi))))
    return tuple(reversed(path))


def _max_product_path(psi, sched, j):
    """Exact argmax of ``|amplitude|`` over histories ending at ``j``."""
    best = np.abs(psi)
    back = []
    for u in sched.steps:
        cand = np.abs(u) * best[None, :]  # cand[b, a]
        back.append(np.argmax(cand, axis=1))
        best = cand[np.arange(len(best)), back[-1]]
    path = [j]
    for ptr in reversed(back):
        path.append(int(ptr[path[-1]]))
    return tuple(reversed(path)), float(best[j])


def _amplitude(psi, sched, history):
    return restricted_evolution_history(psi, history, sched)[history[-1]]


def onto_witness_search(psi, sched, witness_tol=WITNESS_TOL):
    """Find, for every final configuration ``j``, a history ending at ``j``
    with amplitude above ``witness_tol`` times the largest amplitude found.

    Greedy backward search is tried first; configurations it misses are
    searched exactly with a max-product dynamic programme, so a
    :class:`NotOnto` result means no history at all reaches them.
    """
    psi = check_state(psi, sched.n)
    found, methods = {}, {}
    for j in range(sched.n):
        h = _greedy_path(psi, sched, j)
        found[j] = (h, _amplitude(psi, sched, h))
        methods[j] = "greedy"
    ref = max(abs(a) for _, a in found.values())
    for j in range(sched.n):
        if abs(found[j][1]) <= witness_tol * ref:
            h, _ = _max_product_path(psi, sched, j)
            found[j] = (h, _amplitude(psi, sched, h))
            methods[j] = "max-product"
    ref = max(ref, max(abs(a) for _, a in found.values()))
    bad = [j for j in range(sched.n) if abs(found[j][1]) <= witness_tol * ref]
    if bad:
        return NotOnto(unreachable=bad, found={j: found[j] for j in found if j not in bad})
    return OntoWitness(
        space=sched.space,
        histories=[found[j][0] for j in range(sched.n)],
        amplitudes=np.array([found[j][1] for j in range(sched.n)]),
        methods=[methods[j] for j in range(sched.n)],
    )


def invert_via_witness(phi, witness):
    """Free vector ``u`` with ``f0(u) = phi``: coefficient ``phi_j / amp_j``
    on the singleton of the witness history ending at ``j``."""
    if not getattr(witness, "is_onto", False):
        raise InvalidWitnessError(f"no witness for configurations {witness.unreachable}")
    amps = np.asarray(witness.amplitudes)
    if np.any(amps == 0) or not np.all(np.isfinite(amps)):
        raise InvalidWitnessError("witness contains a zero amplitude")
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != amps.shape:
        raise ValidationError(f"target has shape {phi.shape}, expected {amps.shape}")
    return FreeVector(
        {
            FiniteEvent.from_histories(witness.space, [h]): phi[j] / amps[j]
            for j, h in enumerate(witness.histories)
            if phi[j] != 0
        }
    )

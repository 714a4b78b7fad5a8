"""Restricted evolution through homogeneous events, the continuum
decoherence functional, and evolution back to ``t = 0``."""

import numpy as np
from scipy.special import sici

from ..events import ContinuumEvent, HomogeneousEvent, Region
from ..exceptions import NumericalError, UsageError, ValidationError
from .propagators import HALFLINE
from .quadrature import ConvergenceLadder, Grid, extrapolation_weights
from .states import (
    EvolvedWaveFunction,
    LinearCombination,
    ReflectedWaveFunction,
    WaveFunction,
    ZeroWaveFunction,
    inner,
    mass_inside,
)


def _span(region, grid):
    pieces = grid.clip(region)
    if not pieces:
        return (0.0, 0.0)
    return (pieces[0][0], pieces[-1][1])


def _collapse(state, ladder):
    """Combine the regulator columns of ``state`` into their ``eps -> 0`` limit."""
    if isinstance(state, ReflectedWaveFunction):
        base = _collapse(state.base, ladder)
        return ReflectedWaveFunction(base, state.phase, state.sign, state.pre, state.region, state.time)
    if not isinstance(state, EvolvedWaveFunction) or state.coeffs.ndim == 1:
        return state
    c = state.coeffs
    full = c @ ladder.weights()
    reduced = c[:, 1:] @ extrapolation_weights(ladder.used[1:])
    scale = np.sum(np.abs(full))
    residual = float(np.sum(np.abs(full - reduced)) / scale) if scale > 0 else 0.0
    if residual > ladder.tol:
        raise NumericalError(
            f"regulator extrapolation did not converge (residual {residual:.2e} > {ladder.tol:.1e})",
            {"residual": residual, "epsilons": ladder.used.tolist()},
        )
    return state.with_coeffs(full)


def _prefix_key(event):
    return (event.times, event.regions[:-1])


def restricted_evolution_homogeneous(psi, alpha, spec, ladder=None, grid=None, cache=None):
    """Evolve ``psi`` from 0 to ``alpha.T``, projecting onto ``alpha``'s regions.

    Parameters
    ----------
    psi : WaveFunction
        State at time 0.
    alpha : HomogeneousEvent
    spec : PropagatorSpec
    ladder : ConvergenceLadder, optional
        Regulator values for unbounded slots. Defaults to a ladder scaled to
        the grid box.
    grid : Grid, optional
    cache : dict, optional
        Reused across calls; events sharing all but their final region share
        the expensive part of the computation.

    Returns
    -------
    WaveFunction
        The restricted evolution at time ``alpha.T``, zero outside the final
        region.
    """
    if not isinstance(alpha, HomogeneousEvent):
        raise UsageError("restricted_evolution_homogeneous expects a HomogeneousEvent")
    if psi.time != 0.0:
        raise UsageError(f"initial state must be given at t=0, got t={psi.time}")
    if spec.d != 1:
        raise UsageError("restricted evolution is implemented for d=1")
    grid = grid or Grid()
    alpha = alpha.canonical()
    if alpha.is_empty():
        return ZeroWaveFunction(alpha.T)
    key = _prefix_key(alpha)
    if cache is not None and key in cache:
        return _final(cache[key], alpha.regions[-1])
    if ladder is None:
        ladder = ConvergenceLadder.for_box(max(abs(grid.lo), abs(grid.hi)))
    times, regions = alpha.times, alpha.regions
    regulated = any(not r.is_bounded for r in regions[:-1])
    eps = ladder.used if regulated else None
    current = psi
    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        here = regions[k]
        # the next region is applied lazily, so intermediate states stay unmasked
        nxt = regions[k + 1] if k + 1 < len(times) - 1 else Region.full()
        tag = spec.caustic(dt)
        if tag is not None:
            current = ReflectedWaveFunction(current, tag.phase, tag.sign, here, nxt, times[k + 1])
            continue
        source_span = _span(here, grid)
        k_src = current.wavenumber(source_span) + spec.max_wavenumber(_span(nxt, grid), source_span, dt)
        x, w = grid.rule(here, current.edges(), k_src)
        vals = current(x)
        c = (w[:, None] * vals) if vals.ndim == 2 else w * vals
        if eps is not None and not here.is_bounded:
            factor = np.exp(-np.outer(x**2, eps))
            c = c[:, None] * factor if c.ndim == 1 else c * factor
        current = EvolvedWaveFunction(spec, dt, x, c, nxt, times[k + 1])
    if eps is not None:
        current = _collapse(current, ladder)
    if cache is not None:
        cache[key] = current
    return _final(current, regions[-1])


def _final(state, region):
    if region.kind == "full":
        return state
    if isinstance(state, EvolvedWaveFunction):
        return state.with_region(state.region.intersect(region))
    if isinstance(state, ReflectedWaveFunction):
        return ReflectedWaveFunction(state.base, state.phase, state.sign, state.pre, state.region.intersect(region), state.time)
    # a bare initial state: only possible for trivial events, which canonical() rules out
    raise UsageError("cannot restrict a state that was never evolved")


def _as_parts(event):
    if isinstance(event, HomogeneousEvent):
        return [event]
    if isinstance(event, ContinuumEvent):
        return list(event.parts)
    raise UsageError(f"expected a HomogeneousEvent or ContinuumEvent, got {type(event).__name__}")


class ContinuumSystem:
    """A particle with a given initial state and propagator.

    Plays the same role as :class:`~qmeasure.dynamics.DecoherenceFunctional`
    for the finite case: ``restricted(event)`` gives ``psi_event`` and
    calling the system on two events gives ``D``.

    Parameters
    ----------
    psi : WaveFunction
        Initial state at ``t = 0``.
    spec : PropagatorSpec
    grid : Grid, optional
    ladder : ConvergenceLadder, optional
    """

    def __init__(self, psi, spec, grid=None, ladder=None):
        if not isinstance(psi, WaveFunction):
            raise ValidationError("initial state must be a WaveFunction")
        self.psi = psi
        self.spec = spec
        self.grid = grid or Grid()
        self.ladder = ladder
        self._cache = {}

    def restricted(self, event):
        out = None
        for part in _as_parts(event):
            term = restricted_evolution_homogeneous(self.psi, part, self.spec, self.ladder, self.grid, self._cache)
            out = term if out is None else out + term
        return out

    def zero(self):
        return ZeroWaveFunction()

    def __call__(self, a, b):
        return inner(self.restricted(a), self.restricted(b), self.grid)

    def measure(self, a):
        return self(a, a).real

    def gram(self, events):
        states = [self.restricted(e) for e in events]
        n = len(states)
        G = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(i, n):
                G[i, j] = inner(states[i], states[j], self.grid)
                G[j, i] = np.conj(G[i, j])
        return G

    def provenance(self):
        return {
            "box": [self.grid.lo, self.grid.hi],
            "order": self.grid.order,
            "initial_mass_inside": mass_inside(self.psi, self.grid),
        }


def decoherence_continuum(alpha, beta, psi, spec, ladder=None, grid=None):
    """``D(alpha, beta) = <psi_alpha, psi_beta>`` at the common final time."""
    a_parts, b_parts = _as_parts(alpha), _as_parts(beta)
    if a_parts[0].T != b_parts[0].T:
        raise UsageError(f"events end at different times {a_parts[0].T} and {b_parts[0].T}")
    return ContinuumSystem(psi, spec, grid, ladder)(alpha, beta)


# ---------------------------------------------------------------------------
# Back to t = 0


def evolve_back_to_initial(state, spec, grid=None):
    """``psi(x0, 0) = int K(x0, 0 | x, T) psi(x, T) dx``."""
    grid = grid or Grid()
    if isinstance(state, LinearCombination):
        return LinearCombination([(c, evolve_back_to_initial(f, spec, grid)) for c, f in state.terms])
    if isinstance(state, ZeroWaveFunction):
        return ZeroWaveFunction(0.0)
    T = state.time
    if T <= 0:
        raise UsageError(f"state must be at a positive time, got t={T}")
    tag = spec.caustic(T)
    if tag is not None:
        return ReflectedWaveFunction(state, np.conj(tag.phase), tag.sign, Region.full(), Region.full(), 0.0)
    span = _span(state.support, grid)
    k = state.wavenumber(span) + spec.max_wavenumber(grid.span, span, T)
    x, w = grid.rule(state.support, state.edges(), k)
    return EvolvedWaveFunction(spec, T, x, w * state(x), Region.full(), 0.0, reverse=True, origin=state)


def _components(state):
    if isinstance(state, LinearCombination):
        return state.terms
    if isinstance(state, ZeroWaveFunction):
        return []
    return [(1.0, state)]


def _far_field(state, grid, h=1e-4):
    """Jumps of ``g`` and ``g'`` where ``g = exp(-i(a x^2 + q x)) * f * chi_box``.

    ``f`` is the time-T origin of ``state``; derivatives are one-sided
    second-order differences.
    """
    f = state.origin
    C, a, b, c, q = state.spec.coefficients(state.dt)
    edges = np.array(sorted({e for e in f.edges() if grid.lo < e < grid.hi} | {grid.lo, grid.hi}))
    eta = 1e-9 * np.maximum(1.0, np.abs(edges))

    def g(x):
        inside = (x >= grid.lo) & (x <= grid.hi)
        return np.exp(-1j * (a * x**2 + q[0] * x)) * f(x) * inside

    left, right = edges - eta, edges + eta
    gl = [g(left - k * h) for k in range(3)]
    gr = [g(right + k * h) for k in range(3)]
    dl = (3 * gl[0] - 4 * gl[1] + gl[2]) / (2 * h)
    dr = -(3 * gr[0] - 4 * gr[1] + gr[2]) / (2 * h)
    return b, edges, gl[0] - gr[0], dl - dr


def _tail_integral(K, delta):
    """``int_K^inf exp(i k delta) / k^2 dk`` for ``K > 0``."""
    delta = np.asarray(delta, dtype=float)
    out = np.empty(delta.shape, dtype=complex)
    zero = delta == 0
    out[zero] = 1.0 / K
    d = delta[~zero]
    si, ci = sici(K * np.abs(d))
    re = np.cos(K * d) / K - np.abs(d) * (np.pi / 2 - si)
    im = np.sin(K * d) / K - d * ci
    out[~zero] = re + 1j * im
    return out


def _tail_integral3(K, delta):
    """``int_K^inf exp(i k delta) / k^3 dk``, by parts from the ``1/k^2`` case."""
    return np.exp(1j * K * delta) / (2 * K**2) + 0.5j * delta * _tail_integral(K, delta)


def tail_correction(phi0, psi0, grid, window=None):
    """Contribution to ``<phi0, psi0>`` from outside ``window``.

    Both arguments are results of :func:`evolve_back_to_initial`, computed
    on ``grid``. Far from the box each is dominated by the jumps of its
    time-T origin, which give a ``1/x0`` tail; the overlap of two such
    tails has a closed form in terms of sine and cosine integrals. Terms
    up to ``1/k^3`` in the asymptotic expansion of the Fourier transform
    are kept. Pairs evolved over different times, and the half-line
    kernel, contribute nothing here.

    Parameters
    ----------
    window : tuple of float, optional
        ``(lo, hi)`` span already covered by quadrature; defaults to the
        grid box. Must contain the origin.
    """
    total = 0j
    lo, hi = (grid.lo, grid.hi) if window is None else window
    if lo >= 0 or hi <= 0:
        raise UsageError("the tail correction needs a window containing the origin")
    for cp, fp in _components(phi0):
        for cq, fq in _components(psi0):
            if not (isinstance(fp, EvolvedWaveFunction) and isinstance(fq, EvolvedWaveFunction)):
                continue
            if fp.origin is None or fq.origin is None or fp.dt != fq.dt or fp.spec != fq.spec:
                continue
            if fp.spec.kind == HALFLINE:
                continue
            b, ep, jp, dp = _far_field(fp, grid)
            _, eq, jq, dq = _far_field(fq, grid)
            k_hi = max(b * lo, b * hi)
            k_lo = -min(b * lo, b * hi)
            delta = eq[None, :] - ep[:, None]
            # g^(k) ~ sum_e exp(i k x_e) (J_e / (ik) - J'_e / (ik)^2), multiplied out to 1/k^3
            k2 = _tail_integral(k_hi, delta) + _tail_integral(k_lo, -delta)
            k3 = _tail_integral3(k_hi, delta) - _tail_integral3(k_lo, -delta)
            cross = 1j * (np.conj(jp)[:, None] * dq[None, :] - np.conj(dp)[:, None] * jq[None, :])
            val = np.conj(jp) @ k2 @ jq + np.sum(cross * k3)
            total += np.conj(cp) * cq * val / (2 * np.pi)
    return complex(total)


def initial_inner(phi0, psi0, grid=None, correct_tails=True, reach=4.0):
    """``<phi0, psi0>`` at ``t = 0``.

    Back-evolved states decay only like ``1/x0``, so the overlap is taken
    by quadrature over ``reach`` times the grid box and the far-field tail
    beyond it is added in closed form.
    """
    grid = grid or Grid()
    if reach < 1:
        raise ValidationError("reach must be at least 1")
    window = Grid(reach * grid.lo, reach * grid.hi, grid.order, grid.max_panel, grid.oversample)
    val = inner(phi0, psi0, window)
    if correct_tails:
        val += tail_correction(phi0, psi0, grid, (window.lo, window.hi))
    return val

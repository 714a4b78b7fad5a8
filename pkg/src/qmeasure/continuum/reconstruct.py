"""Approximating indicator and step functions by images of free vectors.

For a compact interval ``I`` and a target accuracy ``eps`` we build a free
vector ``u`` on two-time events ``(A_i, D_ij)`` whose image
``f0(u) = sum u(a) psi_a`` is within ``eps`` of ``chi_I`` in L^2:

1. cover ``I`` by cells, each with a source box ``A_i`` such that
   ``|psi_{(A_i, R)}|`` stays above a common bound ``P`` on the cell;
2. split every cell into pieces ``D_ij`` short enough that ``psi_{(A_i, R)}``
   varies by less than ``eps P / sqrt(|I|)`` on each piece;
3. weight each event by ``1 / psi_{(A_i, R)}(x_ij)`` at the piece midpoint.

Step 3 makes ``f0(u)`` close to 1 on every piece, and the error is then
measured by quadrature rather than trusted.
"""

from dataclasses import dataclass, field

import numpy as np

from ..events import HomogeneousEvent, Region
from ..exceptions import HypothesisFailure, NumericalError, ValidationError
from ..gns import FreeVector, f0_map
from .evolution import ContinuumSystem
from .quadrature import Grid

WIDTHS = (0.5, 1.0, 2.0, 4.0)
OFFSETS = (-1.0, -0.5, 0.0, 0.5, 1.0)


@dataclass
class Reconstruction:
    """Result of :func:`lemma4_reconstruct` or :func:`reconstruct_step_function`."""

    vector: FreeVector
    error: float
    epsilon: float
    cells: int = 0
    P: float = np.nan
    delta: float = np.nan
    sources: list = field(default_factory=list)

    @property
    def passed(self):
        return self.error < self.epsilon


def _events(t_source, T, source, piece):
    if t_source == 0.0:
        return HomogeneousEvent((0.0, T), (source, piece))
    return HomogeneousEvent((0.0, t_source, T), (Region.full(), source, piece))


def _check_reachable(system, lo, hi, T, samples, tol):
    """Every final point must be reachable: ``K(y | x) psi(x)`` nonzero for some ``x``."""
    grid = system.grid
    x = np.linspace(grid.lo, grid.hi, 801)
    amp = np.abs(system.psi(x))
    x = x[amp > 1e-6 * amp.max()]
    ys = np.linspace(lo, hi, samples)
    if system.spec.caustic(T) is not None:
        return
    k = np.abs(system.spec.kernel(ys, x, T))
    reach = k.max(axis=1)
    bad = np.flatnonzero(reach <= tol * max(reach.max(), 1e-300))
    if bad.size:
        y = float(ys[bad[0]])
        raise HypothesisFailure(f"no initial point propagates to x={y:g} at t={T:g}", point=y)


def lemma4_reconstruct(interval, eps, psi, spec, T=1.0, grid=None, ladder=None, *, t_source=0.0,
                       widths=WIDTHS, offsets=OFFSETS, samples=9, max_halvings=16, system=None):
    """Free vector ``u`` with ``||chi_I - f0(u)|| < eps``.

    Parameters
    ----------
    interval : tuple of float
        ``(lo, hi)`` with ``lo < hi``.
    eps : float
        Target L^2 accuracy.
    psi : WaveFunction
        Initial state.
    spec : PropagatorSpec
    T : float
        Final time.
    t_source : float
        Time at which the source boxes are imposed. Use a value strictly
        between 0 and ``T`` when ``T`` is an SHO caustic.
    widths, offsets : sequence of float
        Candidate source boxes have width ``w`` and centre
        ``c + o * w`` for ``w`` in ``widths`` and ``o`` in ``offsets``,
        where ``c`` maximizes ``|psi|`` at ``t_source``.
    samples : int
        Points per cell used to estimate minima and oscillations.
    max_halvings : int
        Cap on cover refinement and on halvings of the cell length.

    Returns
    -------
    Reconstruction
        ``error`` is the quadrature value of ``||chi_I - f0(u)||``.

    Raises
    ------
    HypothesisFailure
        If the evolved state vanishes somewhere in ``I``; ``point`` names it.
    NumericalError
        If no cell length meets the oscillation bound.
    """
    lo, hi = map(float, interval)
    if not hi > lo:
        raise ValidationError(f"empty interval [{lo}, {hi}]")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if not 0.0 <= t_source < T:
        raise ValidationError("t_source must lie in [0, T)")
    system = system or ContinuumSystem(psi, spec, grid, ladder)
    grid = system.grid
    length = hi - lo
    _check_reachable(system, lo, hi, T - t_source if t_source else T, 33, 1e-12)

    # classical source point
    xs = np.linspace(grid.lo, grid.hi, 2001)
    if t_source == 0.0:
        at_source = psi(xs)
    else:
        at_source = system.restricted(HomogeneousEvent((0.0, t_source), (Region.full(), Region.full())))(xs)
    centre = float(xs[np.argmax(np.abs(at_source))])
    boxes = []
    for w in widths:
        for o in offsets:
            a, b = max(centre + o * w - w / 2, grid.lo), min(centre + o * w + w / 2, grid.hi)
            if b > a and Region.interval(a, b) not in boxes:
                boxes.append(Region.interval(a, b))
    states = [system.restricted(_events(t_source, T, A, Region.full())) for A in boxes]

    # 1. cover
    def best_source(a, b):
        y = np.linspace(a, b, samples)
        mins = [np.min(np.abs(s(y))) for s in states]
        i = int(np.argmax(mins))
        return i, mins[i], float(y[np.argmin(np.abs(states[i](y)))])

    scale = max(np.max(np.abs(s(np.linspace(lo, hi, 64)))) for s in states)
    floor = 1e-6 * scale
    cover, pending = [], [(lo, hi, 0)]
    while pending:
        a, b, depth = pending.pop()
        i, m, worst = best_source(a, b)
        if m > floor:
            cover.append((a, b, i, m))
        elif depth >= max_halvings:
            raise HypothesisFailure(f"restricted evolution vanishes near x={worst:g} for every source box", point=worst)
        else:
            mid = (a + b) / 2
            pending += [(mid, b, depth + 1), (a, mid, depth + 1)]
    cover.sort()
    P = min(m for *_, m in cover)
    tau = eps * P / np.sqrt(length)

    # 2. cells short enough for the oscillation bound
    delta = max(b - a for a, b, *_ in cover)
    for _ in range(max_halvings + 1):
        pieces = []
        ok = True
        for a, b, i, _m in cover:
            k = max(1, int(np.ceil((b - a) / delta - 1e-9)))
            edges = np.linspace(a, b, k + 1)
            for c0, c1 in zip(edges[:-1], edges[1:]):
                y = np.linspace(c0, c1, samples)
                mid = (c0 + c1) / 2
                v = states[i](np.append(y, mid))
                if np.max(np.abs(v[:-1] - v[-1])) >= tau:
                    ok = False
                    break
                pieces.append((c0, c1, i, v[-1]))
            if not ok:
                break
        if ok:
            break
        delta /= 2
    else:
        raise NumericalError("cell refinement did not meet the oscillation bound", {"delta": delta, "tau": tau})

    # 3. the free vector
    u = FreeVector({_events(t_source, T, boxes[i], Region.interval(c0, c1)): 1.0 / val for c0, c1, i, val in pieces})
    error = _verify(u, [(lo, hi, 1.0)], system, [p[0] for p in pieces] + [hi])
    return Reconstruction(u, error, eps, len(pieces), float(P), float(delta), [boxes[c[2]] for c in cover])


def _verify(u, steps, system, breaks):
    """``||S - f0(u)||`` by quadrature over the step intervals.

    Every event in ``u`` ends in a piece of some step interval, so
    ``f0(u)`` vanishes outside them.
    """
    if not steps:
        return 0.0
    image = f0_map(u, system)
    region = Region.union([(a, b) for a, b, _ in steps])
    grid = system.grid
    wide = Grid(min(grid.lo, region.breakpoints()[0]), max(grid.hi, region.breakpoints()[-1]),
                grid.order, grid.max_panel, grid.oversample)
    x, w = wide.rule(region, sorted(set(breaks)), image.wavenumber(wide.span))
    target = np.zeros(x.size)
    for a, b, s in steps:
        target[(x >= a) & (x <= b)] = s
    return float(np.sqrt(np.sum(w * np.abs(target - image(x)) ** 2)))


def reconstruct_step_function(steps, eps, psi, spec, T=1.0, grid=None, ladder=None, **kw):
    """Free vector ``u`` with ``||S - f0(u)|| < eps`` for ``S = sum s_i chi_{I_i}``.

    Parameters
    ----------
    steps : list of (lo, hi, s)
        Disjoint intervals with nonzero weights. An empty list is ``S = 0``.
    eps : float
    psi, spec, T, grid, ladder
        As for :func:`lemma4_reconstruct`; remaining keywords are passed on.

    Each interval is reconstructed to ``eps / (N M)`` with ``N`` intervals
    and ``M = max |s_i|``, so the errors add up to less than ``eps``.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    steps = [(float(a), float(b), float(s)) for a, b, s in steps]
    if any(s == 0 for *_, s in steps):
        raise ValidationError("step weights must be nonzero")
    ordered = sorted(steps)
    if any(b1 > a2 for (_, b1, _), (a2, _, _) in zip(ordered, ordered[1:])):
        raise ValidationError("step intervals must be disjoint")
    if not steps:
        return Reconstruction(FreeVector(), 0.0, eps)
    system = ContinuumSystem(psi, spec, grid, ladder)
    budget = eps / (len(steps) * max(abs(s) for *_, s in steps))
    u = FreeVector()
    cells, breaks = 0, []
    for a, b, s in steps:
        part = lemma4_reconstruct((a, b), budget, psi, spec, T, system=system, **kw)
        u = u + s * part.vector
        cells += part.cells
        breaks += [a, b] + [e.regions[-1].intervals()[0][0] for e in part.vector]
    error = _verify(u, steps, system, breaks)
    return Reconstruction(u, error, eps, cells)

"""Panel quadrature on a truncated box and extrapolation in the regulator."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .._validation import check_positive
from ..events import Region
from ..exceptions import ValidationError

MASS_TOL = 1e-8


@lru_cache(maxsize=32)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


def panel_rule(breaks, order):
    """Gauss-Legendre rule with ``order`` nodes on each panel ``[breaks[i], breaks[i+1]]``."""
    breaks = np.asarray(breaks, dtype=float)
    if breaks.size < 2:
        return np.empty(0), np.empty(0)
    t, w = _legendre(order)
    lo, hi = breaks[:-1], breaks[1:]
    half = (hi - lo)[:, None] / 2
    nodes = (lo + hi)[:, None] / 2 + half * t[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def subdivide(lo, hi, h):
    """Uniform breakpoints of ``[lo, hi]`` with spacing at most ``h``."""
    k = max(1, int(np.ceil((hi - lo) / h - 1e-12)))
    return np.linspace(lo, hi, k + 1)


@dataclass(frozen=True)
class Grid:
    """Truncation box ``[lo, hi]`` together with the panel parameters.

    Parameters
    ----------
    lo, hi : float
        Box edges. Unbounded regions are cut to the box.
    order : int
        Gauss-Legendre nodes per panel.
    max_panel : float
        Panel width used when the integrand does not oscillate.
    oversample : float
        Panels are narrowed until ``wavenumber * width <= order / oversample``.
    """

    lo: float = -12.0
    hi: float = 12.0
    order: int = 20
    max_panel: float = 0.5
    oversample: float = 2.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValidationError(f"empty grid box [{self.lo}, {self.hi}]")
        if self.order < 2:
            raise ValidationError("quadrature order must be at least 2")
        check_positive(self.max_panel, "max_panel")
        check_positive(self.oversample, "oversample")

    @property
    def span(self):
        return (self.lo, self.hi)

    def panel_width(self, wavenumber=0.0):
        if wavenumber <= 0:
            return self.max_panel
        return min(self.max_panel, self.order / (self.oversample * wavenumber))

    def clip(self, region):
        """Intervals of ``region`` inside the box, as a list of ``(lo, hi)``."""
        inside = region.intersect(Region.interval(self.lo, self.hi))
        return [(a, b) for a, b in inside.intervals() if b > a]

    def rule(self, region=None, breaks=(), wavenumber=0.0):
        """Nodes and weights covering ``region`` (default: the whole box).

        Panels are aligned with the region edges and with ``breaks``.
        """
        spans = [(self.lo, self.hi)] if region is None else self.clip(region)
        h = self.panel_width(wavenumber)
        extra = np.asarray(sorted(breaks), dtype=float)
        nodes, weights = [], []
        for a, b in spans:
            inner = extra[(extra > a) & (extra < b)]
            edges = np.concatenate(([a], inner, [b]))
            pieces = [subdivide(edges[i], edges[i + 1], h) for i in range(len(edges) - 1)]
            full = np.unique(np.concatenate(pieces))
            x, w = panel_rule(full, self.order)
            nodes.append(x)
            weights.append(w)
        if not nodes:
            return np.empty(0), np.empty(0)
        return np.concatenate(nodes), np.concatenate(weights)


def extrapolation_weights(eps):
    """Weights ``w`` with ``sum(w * f(eps)) = p(0)`` for the interpolating polynomial ``p``."""
    eps = np.asarray(eps, dtype=float)
    w = np.ones(eps.size)
    for i in range(eps.size):
        for j in range(eps.size):
            if i != j:
                w[i] *= eps[j] / (eps[j] - eps[i])
    return w


def extrapolate_to_zero(eps, values):
    """Polynomial extrapolation of ``values[i] = f(eps[i])`` to ``eps = 0``.

    Returns
    -------
    limit : complex or ndarray
    error : float
        Difference between the full extrapolant and the one that drops the
        largest ``eps``.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values)
    full = np.tensordot(extrapolation_weights(eps), values, axes=(0, 0))
    reduced = np.tensordot(extrapolation_weights(eps[1:]), values[1:], axes=(0, 0))
    return full, float(np.max(np.abs(full - reduced)))


@dataclass(frozen=True)
class ConvergenceLadder:
    """Regulator values for the ``exp(-eps x^2)`` convergence factor.

    Attributes
    ----------
    epsilons : tuple of float
        Strictly decreasing, positive.
    order : int
        Number of ladder points used by the extrapolant, counted from the
        small end. ``None`` uses them all.
    tol : float
        Largest acceptable extrapolation residual, relative to the result.
    """

    epsilons: tuple = (1e-1, 10**-1.5, 1e-2, 10**-2.5, 1e-3)
    order: int = None
    tol: float = 1e-6

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) < 3:
            raise ValidationError("convergence ladder needs at least 3 entries")
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValidationError(f"ladder must be positive and strictly decreasing, got {eps}")
        object.__setattr__(self, "epsilons", eps)
        order = len(eps) if self.order is None else int(self.order)
        if not 3 <= order <= len(eps):
            raise ValidationError(f"extrapolation order must lie in [3, {len(eps)}], got {order}")
        object.__setattr__(self, "order", order)

    @classmethod
    def geometric(cls, start, stop, count, **kw):
        return cls(tuple(np.geomspace(start, stop, count)), **kw)

    @classmethod
    def for_box(cls, halfwidth, count=5, **kw):
        """Ladder with ``eps * halfwidth**2`` running from 0.1 to 1e-3."""
        return cls.geometric(0.1 / halfwidth**2, 1e-3 / halfwidth**2, count, **kw)

    @property
    def used(self):
        return np.asarray(self.epsilons[-self.order :])

    def weights(self):
        return extrapolation_weights(self.used)

    def extrapolate(self, values):
        return extrapolate_to_zero(self.used, np.asarray(values)[-self.order :])

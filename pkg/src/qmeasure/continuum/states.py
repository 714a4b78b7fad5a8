"""Wave functions on the line.

A wave function here is a callable ``x -> psi(x)`` at a fixed time, plus
what the quadrature needs to integrate it well: its support, the points
where it jumps, and a bound on its local wavenumber.
"""

import numpy as np

from ..events import Region
from ..exceptions import UsageError, ValidationError
from .quadrature import Grid

ROW_CHUNK = 512


def _support_union(regions):
    regions = [r for r in regions if not r.is_empty()]
    if not regions:
        return Region.empty()
    if any(not r.is_bounded for r in regions):
        return Region.full()
    return Region.union([iv for r in regions for iv in r.intervals()])


def _reflect(region):
    if region.kind == "full":
        return region
    boxes = tuple(((-hi, -lo),) for lo, hi in region.intervals())
    return Region(region.kind, boxes, 1).canonical()


def _masked(values, mask):
    return values * (mask[:, None] if values.ndim == 2 else mask)


class WaveFunction:
    """Base class; subclasses define ``__call__``."""

    time = 0.0
    support = Region.full()

    def __call__(self, x):
        raise NotImplementedError

    def edges(self):
        """Points where the function may be discontinuous."""
        if self.support.kind == "full":
            return []
        return list(self.support.breakpoints())

    def wavenumber(self, span):
        """Upper bound on the local wavenumber for ``x`` in ``span``."""
        return 0.0

    # -- linear structure ---------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float, complex)) and other == 0:
            return self
        return LinearCombination([(1.0, self), (1.0, other)])

    __radd__ = __add__

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return LinearCombination([(complex(scalar), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-1.0) * other

    # -- quadrature ---------------------------------------------------
    def norm(self, grid=None):
        return float(np.sqrt(max(inner(self, self, grid).real, 0.0)))

    def sample(self, grid=None):
        grid = grid or Grid()
        x, w = grid.rule(self.support, self.edges(), self.wavenumber(grid.span))
        return SampledWaveFunction(x, w, self(x), self.time)


class SampledWaveFunction:
    """Values on the nodes of a quadrature rule."""

    def __init__(self, nodes, weights, values, time=0.0):
        self.nodes = np.asarray(nodes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.values = np.asarray(values, dtype=complex)
        if not self.nodes.shape == self.weights.shape == self.values.shape:
            raise ValidationError("nodes, weights and values must have the same shape")
        self.time = float(time)

    def norm(self):
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))

    def inner(self, other):
        if not np.array_equal(self.nodes, other.nodes):
            raise UsageError("sampled wave functions live on different rules")
        return complex(np.sum(self.weights * self.values.conj() * other.values))


class AnalyticWaveFunction(WaveFunction):
    def __init__(self, func, support=None, time=0.0, k=0.0, breaks=(), name="analytic"):
        self.func = func
        self.breaks = tuple(breaks)
        self.support = support if support is not None else Region.full()
        self.time = float(time)
        self.k = float(k)
        self.name = name

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(self.support.contains(x), self.func(x), 0.0).astype(complex)

    def edges(self):
        return sorted(set(super().edges()) | set(self.breaks))

    def wavenumber(self, span):
        return self.k

    def __repr__(self):
        return f"AnalyticWaveFunction({self.name})"


def gaussian_packet(x0=0.0, p0=0.0, sigma=1.0, hbar=1.0):
    """Unit-norm Gaussian with position spread ``sigma`` and mean momentum ``p0``."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    amp = (2 * np.pi * sigma**2) ** -0.25

    def func(x):
        return amp * np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / hbar)

    # the envelope varies on the scale sigma; count that as wavenumber
    return AnalyticWaveFunction(func, k=abs(p0) / hbar + 3.0 / sigma, name=f"gaussian(x0={x0}, p0={p0}, sigma={sigma})")


def free_gaussian(t, x0=0.0, p0=0.0, sigma=1.0, mass=1.0, hbar=1.0):
    """Closed-form free evolution of :func:`gaussian_packet` to time ``t``."""
    s = 1 + 1j * hbar * t / (2 * mass * sigma**2)
    amp = (2 * np.pi * sigma**2) ** -0.25 / np.sqrt(s)

    def func(x):
        shift = x - x0 - p0 * t / mass
        return amp * np.exp(-(shift**2) / (4 * sigma**2 * s) + 1j * p0 * (x - p0 * t / (2 * mass)) / hbar)

    return AnalyticWaveFunction(func, time=t, k=abs(p0) / hbar + 3.0 / sigma, name="free gaussian")


def halfline_packet(x0=2.0, sigma=0.5, hbar=1.0, p0=0.0):
    """Unit-norm ``x exp(-(x-x0)^2/(4 sigma^2))`` on ``x > 0``, zero elsewhere."""
    grid = np.linspace(0, x0 + 20 * sigma, 20001)
    vals = (grid * np.exp(-((grid - x0) ** 2) / (4 * sigma**2))) ** 2
    norm = np.sqrt(np.sum((vals[1:] + vals[:-1]) / 2) * (grid[1] - grid[0]))

    def func(x):
        return np.where(x > 0, x * np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / hbar) / norm, 0.0)

    return AnalyticWaveFunction(func, k=abs(p0) / hbar + 3.0 / sigma, breaks=(0.0,), name=f"halfline(x0={x0}, sigma={sigma})")


class ZeroWaveFunction(WaveFunction):
    def __init__(self, time=0.0):
        self.time = float(time)
        self.support = Region.empty()

    def __call__(self, x):
        return np.zeros(np.shape(x), dtype=complex)

    def __repr__(self):
        return f"ZeroWaveFunction(t={self.time})"


class EvolvedWaveFunction(WaveFunction):
    """``chi_region(x) * sum_j K(x | sources[j]) coeffs[j]``.

    The kernel is the propagator over ``dt`` (or its reverse). ``coeffs`` may
    carry a trailing axis, one column per regulator value.
    """

    def __init__(self, spec, dt, sources, coeffs, region, time, reverse=False, origin=None):
        self.spec = spec
        self.dt = float(dt)
        self.sources = np.asarray(sources, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.region = region
        self.support = region
        self.time = float(time)
        self.reverse = reverse
        self.origin = origin

    def with_region(self, region):
        return EvolvedWaveFunction(self.spec, self.dt, self.sources, self.coeffs, region, self.time, self.reverse, self.origin)

    def with_coeffs(self, coeffs):
        return EvolvedWaveFunction(self.spec, self.dt, self.sources, coeffs, self.region, self.time, self.reverse, self.origin)

    def _kernel(self, x):
        if self.reverse:
            return self.spec.reverse_kernel(x, self.sources, self.dt)
        return self.spec.kernel(x, self.sources, self.dt)

    def raw(self, x):
        """The sum without the region mask."""
        x = np.asarray(x, dtype=float).reshape(-1)
        out = np.zeros((x.size,) + self.coeffs.shape[1:], dtype=complex)
        for start in range(0, x.size, ROW_CHUNK):
            sl = slice(start, start + ROW_CHUNK)
            out[sl] = self._kernel(x[sl]) @ self.coeffs
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        inside = self.region.contains(x)
        out = np.zeros((x.size,) + self.coeffs.shape[1:], dtype=complex)
        if inside.any():
            out[inside] = self.raw(x[inside])
        return out

    def wavenumber(self, span):
        if self.sources.size == 0:
            return 0.0
        C, a, b, c, q = self.spec.coefficients(self.dt)
        xm = max(abs(span[0]), abs(span[1]))
        sm = float(np.max(np.abs(self.sources)))
        quad = c if self.reverse else a
        return 2 * abs(quad) * xm + abs(b) * sm + float(np.linalg.norm(q))

    def __repr__(self):
        return f"EvolvedWaveFunction(t={self.time}, {self.sources.size} sources, {self.region})"


class ReflectedWaveFunction(WaveFunction):
    """``phase * chi_region(x) * chi_pre(sign x) * base(sign x)``.

    This is the result of one step with a delta-function propagator.
    """

    def __init__(self, base, phase, sign, pre, region, time):
        self.base = base
        self.phase = complex(phase)
        self.sign = int(sign)
        self.pre = pre
        self.region = region
        src = pre.intersect(base.support)
        self.support = region.intersect(src if sign > 0 else _reflect(src))
        self.time = float(time)

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        y = self.sign * x
        vals = self.base(y)
        return self.phase * _masked(vals, self.region.contains(x) & self.pre.contains(y))

    def edges(self):
        own = [] if self.region.kind == "full" else list(self.region.breakpoints())
        inner_edges = list(self.base.edges()) + ([] if self.pre.kind == "full" else list(self.pre.breakpoints()))
        return sorted(set(own) | {self.sign * e for e in inner_edges})

    def wavenumber(self, span):
        return self.base.wavenumber((-span[1], -span[0]) if self.sign < 0 else span)


class LinearCombination(WaveFunction):
    def __init__(self, terms):
        flat = []
        for c, f in terms:
            if isinstance(f, LinearCombination):
                flat.extend((c * c2, f2) for c2, f2 in f.terms)
            elif not isinstance(f, ZeroWaveFunction) and c != 0:
                flat.append((complex(c), f))
        times = {f.time for _, f in flat} | {f.time for _, f in terms}
        if len(times) > 1:
            raise UsageError(f"cannot add wave functions at different times {sorted(times)}")
        self.terms = flat
        self.time = times.pop() if times else 0.0
        self.support = _support_union([f.support for _, f in flat])

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        out = np.zeros(x.size, dtype=complex)
        for c, f in self.terms:
            out = out + c * f(x)
        return out

    def edges(self):
        return sorted({e for _, f in self.terms for e in f.edges()})

    def wavenumber(self, span):
        return max([f.wavenumber(span) for _, f in self.terms], default=0.0)

    def __repr__(self):
        return f"LinearCombination({len(self.terms)} terms, t={self.time})"


def inner(phi, psi, grid=None, support=None):
    """``<phi, psi>`` by panel quadrature over the box of ``grid``."""
    grid = grid or Grid()
    region = phi.support.intersect(psi.support) if support is None else support
    if region.is_empty():
        return 0j
    breaks = sorted(set(phi.edges()) | set(psi.edges()))
    k = phi.wavenumber(grid.span) + psi.wavenumber(grid.span)
    x, w = grid.rule(region, breaks, k)
    if x.size == 0:
        return 0j
    return complex(np.sum(w * np.conj(phi(x)) * psi(x)))


def l2_distance(phi, psi, grid=None):
    return (phi - psi).norm(grid)


def mass_inside(psi, grid):
    """Fraction of ``psi``'s quadrature mass inside the box, using a box twice as wide."""
    width = grid.hi - grid.lo
    wide = Grid(grid.lo - width / 2, grid.hi + width / 2, grid.order, grid.max_panel, grid.oversample)
    total = inner(psi, psi, wide).real
    inside = inner(psi, psi, grid).real
    return inside / total if total > 0 else 1.0

"""Closed-form propagators ``K(x', t' | x, t)``.

All four kernels handled here have the quadratic-phase form

    K = C * exp(i * (a x'^2 - b x x' + c x^2 + q (x' - x)))

(the half-line kernel is a difference of two such terms), which the
quadrature and tail corrections exploit. Units default to ``m = hbar = 1``.
"""

from dataclasses import dataclass

import numpy as np

from .._validation import check_positive
from ..exceptions import CausticError, UsageError, ValidationError

FREE = "free"
VECTOR_POTENTIAL = "vector_potential"
SHO = "sho"
HALFLINE = "halfline"
KINDS = (FREE, VECTOR_POTENTIAL, SHO, HALFLINE)

CAUSTIC_TOL = 1e-8
NEAR_CAUSTIC_TOL = 1e-3


@dataclass(frozen=True)
class DeltaTag:
    """Distributional SHO propagator ``phase * delta(x' - sign * x)``."""

    M: int
    phase: complex

    @property
    def sign(self):
        return -1 if self.M % 2 else 1


@dataclass(frozen=True)
class PropagatorSpec:
    kind: str = FREE
    mass: float = 1.0
    hbar: float = 1.0
    charge: float = 1.0
    A: tuple = (0.0,)
    omega: float = 1.0
    d: int = 1
    caustic_tol: float = CAUSTIC_TOL
    near_caustic_tol: float = NEAR_CAUSTIC_TOL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown propagator kind {self.kind!r}; expected one of {KINDS}")
        check_positive(self.mass, "mass")
        check_positive(self.hbar, "hbar")
        if self.kind == SHO:
            check_positive(self.omega, "omega")
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"dimension must be a positive integer, got {self.d!r}")
        A = tuple(float(a) for a in np.atleast_1d(self.A))
        if len(A) == 1 and self.d > 1:
            A = A * self.d
        if len(A) != self.d:
            raise ValidationError(f"vector potential has {len(A)} components, expected {self.d}")
        object.__setattr__(self, "A", A)
        if self.kind in (HALFLINE, SHO) and self.d != 1:
            raise ValidationError(f"{self.kind} propagator is implemented for d=1 only")

    # ------------------------------------------------------------------
    def caustic(self, dt):
        """``DeltaTag`` if ``dt`` is a caustic, ``None`` otherwise.

        Raises :class:`CausticError` in the near-caustic band where the
        closed form loses accuracy.
        """
        if self.kind != SHO:
            return None
        s = np.sin(self.omega * dt)
        if abs(s) < self.caustic_tol:
            M = int(round(self.omega * dt / np.pi))
            return DeltaTag(M, complex(np.exp(-1j * M * np.pi / 2)))
        if abs(s) < self.near_caustic_tol:
            raise CausticError(
                f"time step {dt} is within {self.near_caustic_tol} of an SHO caustic",
                {"sin(omega dt)": float(s)},
            )
        return None

    def coefficients(self, dt):
        """``(C, a, b, c, q)`` of the quadratic-phase form for step ``dt``."""
        m, hb = self.mass, self.hbar
        if self.kind == SHO:
            w = self.omega
            s, co = np.sin(w * dt), np.cos(w * dt)
            # Maslov index: one extra -i^(1/2) per caustic crossed
            M = int(np.floor(w * dt / np.pi))
            C = np.sqrt(m * w / (2 * np.pi * hb * abs(s))) * np.exp(-1j * np.pi / 4 - 1j * M * np.pi / 2)
            a = m * w * co / (2 * hb * s)
            return C, a, m * w / (hb * s), a, np.zeros(self.d)
        C = (m / (2 * np.pi * hb * dt)) ** (self.d / 2) * np.exp(-1j * np.pi * self.d / 4)
        a = m / (2 * hb * dt)
        q = np.zeros(self.d)
        if self.kind == VECTOR_POTENTIAL:
            q = self.charge * np.asarray(self.A) / hb
        return C, a, 2 * a, a, q

    def kernel(self, xp, x, dt):
        """Kernel matrix ``K[i, j] = K(xp[i], t + dt | x[j], t)``.

        ``xp`` and ``x`` have shape ``(k,)`` in one dimension or ``(k, d)``.
        """
        if dt <= 0:
            raise UsageError(f"propagator needs t' > t, got dt={dt}")
        xp = np.asarray(xp, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.d == 1:
            xp = xp.reshape(-1)
            x = x.reshape(-1)
        tag = self.caustic(dt)
        if tag is not None:
            raise CausticError("kernel matrix requested at a caustic; use the delta branch", {"M": tag.M})
        C, a, b, c, q = self.coefficients(dt)
        if self.d == 1:
            X, XP = x[None, :], xp[:, None]
            if self.kind == HALFLINE:
                inside = (XP > 0) & (X > 0)
                phase_minus = a * (XP - X) ** 2
                phase_plus = a * (XP + X) ** 2
                return np.where(inside, C * (np.exp(1j * phase_minus) - np.exp(1j * phase_plus)), 0.0)
            phase = a * XP**2 - b * XP * X + c * X**2 + q[0] * (XP - X)
            return C * np.exp(1j * phase)
        diff = xp[:, None, :] - x[None, :, :]
        phase = a * np.sum(diff**2, axis=-1) + diff @ q
        return C * np.exp(1j * phase)

    def reverse_kernel(self, x0, x, dt):
        """``K(x0, t | x, t + dt)``: evolution backwards by ``dt``."""
        return self.kernel(x, x0, dt).conj().T

    def max_wavenumber(self, target, source, dt):
        """Bound on ``|d phase / d x|`` for ``x`` in ``source``, ``x'`` in ``target``.

        ``target`` and ``source`` are ``(lo, hi)`` spans.
        """
        C, a, b, c, q = self.coefficients(dt)
        tmax = max(abs(target[0]), abs(target[1]))
        smax = max(abs(source[0]), abs(source[1]))
        qn = float(np.linalg.norm(q))
        if self.kind == HALFLINE:
            return abs(b) * (tmax + smax) + qn
        return abs(b) * tmax + 2 * abs(c) * smax + qn

    def __call__(self, xp, tp, x, t):
        return propagator_value(self, xp, tp, x, t)


def propagator_value(spec, xp, tp, x, t):
    """``K(xp, tp | x, t)``, or a :class:`DeltaTag` at an SHO caustic."""
    dt = float(tp) - float(t)
    if dt <= 0:
        raise UsageError(f"propagator needs t' > t, got t'={tp}, t={t}")
    tag = spec.caustic(dt)
    if tag is not None:
        return tag
    scalar = np.ndim(xp) == 0 and np.ndim(x) == 0
    if spec.d == 1:
        xp_a = np.atleast_1d(np.asarray(xp, dtype=float))
        x_a = np.atleast_1d(np.asarray(x, dtype=float))
        xp_b, x_b = np.broadcast_arrays(xp_a, x_a)
        flat = np.array([spec.kernel([p], [q], dt)[0, 0] for p, q in zip(xp_b.ravel(), x_b.ravel())])
        out = flat.reshape(xp_b.shape)
        return complex(out[0]) if scalar else out
    xp_a = np.atleast_2d(np.asarray(xp, dtype=float))
    x_a = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.array([spec.kernel(p[None], q[None], dt)[0, 0] for p, q in zip(xp_a, x_a)])
    return complex(out[0]) if out.size == 1 else out

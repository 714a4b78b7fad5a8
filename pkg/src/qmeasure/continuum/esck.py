"""Numerical check of the composition law for propagators."""

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import CausticError, UsageError
from .quadrature import ConvergenceLadder, Grid

# exp(-ESCK_RANGE) is where the regulated integrand is cut off
ESCK_RANGE = 40.0


@dataclass
class EsckResult:
    residual: float
    applicable: bool = True
    numeric: complex = np.nan
    exact: complex = np.nan
    extrapolation_error: float = np.nan
    reason: str = ""
    values: list = field(default_factory=list)


def check_esck(spec, x3, t3, x1, t1, t2, ladder=None, grid=None):
    """Relative residual of ``int K(x3,t3|x,t2) K(x,t2|x1,t1) dx`` against ``K(x3,t3|x1,t1)``.

    The integral is regulated by ``exp(-eps x^2)``, computed on a window
    where the regulator exceeds ``exp(-40)``, and extrapolated to
    ``eps = 0`` over ``ladder``.

    Returns
    -------
    EsckResult
        ``applicable`` is False (and ``residual`` NaN) if any of the three
        time steps is at or near an SHO caustic.
    """
    if not t1 < t2 < t3:
        raise UsageError(f"need t1 < t2 < t3, got {t1}, {t2}, {t3}")
    if spec.d != 1:
        raise UsageError("check_esck is implemented for d=1")
    ladder = ladder or ConvergenceLadder()
    grid = grid or Grid()
    d21, d32, d31 = t2 - t1, t3 - t2, t3 - t1
    try:
        if any(spec.caustic(dt) is not None for dt in (d21, d32, d31)):
            return EsckResult(np.nan, False, reason="caustic time step")
    except CausticError as exc:
        return EsckResult(np.nan, False, reason=str(exc))
    exact = complex(spec.kernel([x3], [x1], d31)[0, 0])
    values = []
    for eps in ladder.used:
        R = np.sqrt(ESCK_RANGE / eps)
        k = spec.max_wavenumber((x3, x3), (-R, R), d32) + spec.max_wavenumber((-R, R), (x1, x1), d21)
        window = Grid(-R, R, grid.order, grid.max_panel, grid.oversample)
        x, w = window.rule(wavenumber=k)
        left = spec.kernel([x3], x, d32)[0]
        right = spec.kernel(x, [x1], d21)[:, 0]
        values.append(complex(np.sum(w * left * right * np.exp(-eps * x**2))))
    limit, err = ladder.extrapolate(values)
    limit = complex(limit)
    residual = abs(limit - exact) / abs(exact)
    return EsckResult(float(residual), True, limit, exact, err, values=values)

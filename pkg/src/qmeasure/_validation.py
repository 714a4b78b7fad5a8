"""Input validation helpers.

scikit-learn's ``check_array`` refuses complex input, so the complex
counterparts needed here live in this module.
"""

import numpy as np

from .exceptions import ValidationError

UNITARY_TOL = 1e-10
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_SLACK = 1e-10


def as_complex_vector(x, name="vector"):
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def as_complex_matrix(x, name="matrix", square=True):
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-d, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_state(psi, n=None, tol=NORM_TOL):
    """Return ``psi`` as a complex vector of unit norm (within ``tol``)."""
    psi = as_complex_vector(psi, "state")
    if n is not None and psi.shape[0] != n:
        raise ValidationError(f"state has {psi.shape[0]} components, expected {n}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"state norm is {norm!r}, expected 1 within {tol}")
    return psi


def unitarity_residual(u):
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_unitary(u, name="step", tol=UNITARY_TOL):
    u = as_complex_matrix(u, name)
    res = unitarity_residual(u)
    if res > tol:
        raise ValidationError(f"{name} is not unitary: max|U^dag U - I| = {res:.3e} > {tol}")
    return u


def check_hermitian(a, name="matrix", tol=HERMITIAN_TOL):
    a = as_complex_matrix(a, name)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > tol * scale:
        raise ValidationError(f"{name} is not Hermitian")
    return a


def check_density_matrix(rho, n=None, tol=HERMITIAN_TOL):
    """Validate a density matrix: Hermitian, PSD and unit trace."""
    rho = check_hermitian(rho, "density matrix", tol)
    if n is not None and rho.shape[0] != n:
        raise ValidationError(f"density matrix is {rho.shape[0]}x{rho.shape[0]}, expected {n}")
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if evals[0] < -tol:
        raise ValidationError(f"density matrix has negative eigenvalue {evals[0]:.3e}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
    return rho


def check_positive(value, name):
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return value

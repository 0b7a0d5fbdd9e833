"""Error hierarchy and validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class ConfigError(ValidationError):
    """A run configuration failed validation; carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConvergenceError(RuntimeError):
    """An iterative numerical procedure failed (no convergence, bad fit, ...)."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d complex128 array with finite entries."""
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_square(m: np.ndarray, name: str = "matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")


def check_unitary(m: np.ndarray, tol: float = 1e-10, name: str = "matrix") -> None:
    """Element-wise max deviation of m @ m^dagger from the identity."""
    check_square(m, name)
    dev = np.abs(m @ m.conj().T - np.eye(m.shape[0])).max()
    if dev > tol:
        raise ValidationError(f"{name} is not unitary: max |U U^dag - I| = {dev:.3e} > {tol:.0e}")


def check_state_vector(v: np.ndarray, tol: float = 1e-12, name: str = "state") -> None:
    if v.ndim != 1:
        raise ValidationError(f"{name} must be a 1-d amplitude vector")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"{name} is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10, name: str = "rho") -> None:
    """Hermitian, unit trace and positive semidefinite within tol."""
    check_square(rho, name)
    herm = np.abs(rho - rho.conj().T).max()
    if herm > tol:
        raise ValidationError(f"{name} is not Hermitian: max |rho - rho^dag| = {herm:.3e}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"{name} trace deviates from 1 by {abs(tr - 1.0):.3e}")
    lo = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    if lo < -tol:
        raise ValidationError(f"{name} is not positive semidefinite: min eigenvalue = {lo:.3e}")


def check_gram(g: np.ndarray, tol: float = 1e-9, name: str = "gram") -> None:
    """Hermitian, unit diagonal, positive semidefinite within tol."""
    check_square(g, name)
    if np.abs(g - g.conj().T).max() > tol:
        raise ValidationError(f"{name} must be Hermitian")
    if np.abs(np.diagonal(g) - 1.0).max() > tol:
        raise ValidationError(f"{name} must have unit diagonal")
    lo = float(np.linalg.eigvalsh((g + g.conj().T) / 2).min())
    if lo < -tol:
        raise ValidationError(f"{name} is not positive semidefinite: min eigenvalue = {lo:.3e}")

"""Projective Pauli-basis tomography: simulation, likelihood reconstruction, errors.

Counts are simulated per measurement setting with multinomial statistics,
density matrices are reconstructed by an iterative likelihood fixed point
(the R-rho-R update with a diluted fallback step, which keeps the estimate
positive semidefinite and the log-likelihood non-decreasing), and
uncertainties are propagated by Poisson resampling of the observed counts.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .validation import ConvergenceError, ValidationError, as_complex_matrix

MLE_TOL = 1e-9
MLE_MAX_ITER = 10_000

_SQ2 = np.sqrt(2.0)
#: columns are the (+1, -1) eigenvectors of each Pauli basis
_BASIS = {
    "X": np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / _SQ2,
    "Y": np.array([[1.0, 1.0], [1.0j, -1.0j]], dtype=complex) / _SQ2,
    "Z": np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex),
}

Setting = tuple[str, ...]


def measurement_settings(n: int) -> list[Setting]:
    """All 3^n Pauli basis-label tuples in lexicographic order (XX..X first)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"qubit count must be a positive integer, got {n!r}")
    return list(itertools.product("XYZ", repeat=int(n)))


def _setting_vectors(setting: Setting) -> np.ndarray:
    """Rows: projection vector of each outcome bitstring (bit 0 = +1 eigenstate)."""
    mat = _BASIS[setting[0]]
    for label in setting[1:]:
        mat = np.kron(mat, _BASIS[label])
    return mat.T  # row o is column o of the basis-change matrix


def born_probabilities(rho: np.ndarray, setting: Setting) -> np.ndarray:
    """Outcome probabilities for one measurement setting; sums to 1 within 1e-10."""
    rho = as_complex_matrix(rho, "rho")
    setting = tuple(setting)
    if any(label not in _BASIS for label in setting):
        raise ValidationError(f"unknown basis labels in setting {setting}")
    dim = 2 ** len(setting)
    if rho.shape != (dim, dim):
        raise ValidationError(f"dimension mismatch: setting implies {dim}, rho is {rho.shape}")
    vecs = _setting_vectors(setting)
    return np.einsum("ka,ab,kb->k", vecs.conj(), rho, vecs).real


@dataclass(frozen=True)
class CountsTable:
    """Outcome counts per measurement setting with a fixed per-setting shot budget."""

    settings: tuple[Setting, ...]
    counts: np.ndarray
    shots: int

    def __post_init__(self):
        settings = tuple(tuple(s) for s in self.settings)
        if not settings:
            raise ValidationError("counts table has no settings")
        n = len(settings[0])
        if any(len(s) != n for s in settings):
            raise ValidationError("all settings must address the same qubit count")
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (len(settings), 2**n):
            raise ValidationError(
                f"counts must have shape ({len(settings)}, {2 ** n}), got {counts.shape}"
            )
        if (counts < 0).any():
            raise ValidationError("counts must be non-negative")
        if int(self.shots) < 1:
            raise ValidationError("shots must be positive")
        if (counts.sum(axis=1) > int(self.shots)).any():
            raise ValidationError("per-setting counts exceed the shot budget")
        counts.setflags(write=False)
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "shots", int(self.shots))

    @property
    def n_qubits(self) -> int:
        return len(self.settings[0])

    def to_csv(self, path) -> None:
        n = self.n_qubits
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["setting", "outcome", "count"])
            for setting, row in zip(self.settings, self.counts):
                for outcome, value in enumerate(row):
                    writer.writerow(["".join(setting), format(outcome, f"0{n}b"), int(value)])

    @classmethod
    def from_csv(cls, path) -> "CountsTable":
        path = Path(path)
        per_setting: dict[Setting, dict[int, int]] = {}
        n: int | None = None
        with path.open(newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                cells = [c.strip() for c in row if c.strip() != ""]
                if not cells:
                    continue
                if lineno == 1 and cells[0].lower() == "setting":
                    continue
                if len(cells) != 3:
                    raise ValidationError(f"{path.name}: line {lineno}: expected 3 columns")
                label, outcome, value = cells
                setting = tuple(label.upper())
                if any(ch not in _BASIS for ch in setting):
                    raise ValidationError(f"{path.name}: line {lineno}: bad setting '{label}'")
                if n is None:
                    n = len(setting)
                elif len(setting) != n:
                    raise ValidationError(f"{path.name}: line {lineno}: inconsistent qubit count")
                try:
                    idx = int(outcome, 2)
                    count = int(value)
                except ValueError:
                    raise ValidationError(f"{path.name}: line {lineno}: bad outcome or count")
                if len(outcome) != n or not 0 <= idx < 2**n:
                    raise ValidationError(f"{path.name}: line {lineno}: outcome '{outcome}' invalid")
                per_setting.setdefault(setting, {})[idx] = count
        if not per_setting or n is None:
            raise ValidationError(f"{path.name}: no count rows found")
        settings = sorted(per_setting)
        counts = np.zeros((len(settings), 2**n), dtype=np.int64)
        for i, setting in enumerate(settings):
            for idx, count in per_setting[setting].items():
                counts[i, idx] = count
        shots = int(counts.sum(axis=1).max())
        return cls(tuple(settings), counts, shots)


def simulate_counts(
    rho: np.ndarray, settings: Sequence[Setting], shots: int, seed
) -> CountsTable:
    """Multinomial outcome counts per setting; reproducible for a given seed."""
    if int(shots) < 1:
        raise ValidationError("shots must be positive")
    settings = [tuple(s) for s in settings]
    if not settings:
        raise ValidationError("no measurement settings supplied")
    rng = np.random.default_rng(seed)
    counts = np.empty((len(settings), 2 ** len(settings[0])), dtype=np.int64)
    for i, setting in enumerate(settings):
        p = np.clip(born_probabilities(rho, setting), 0.0, None)
        counts[i] = rng.multinomial(int(shots), p / p.sum())
    return CountsTable(tuple(settings), counts, int(shots))


@dataclass(frozen=True)
class ReconstructionResult:
    """Likelihood-reconstructed density matrix with convergence diagnostics."""

    rho: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    log_likelihood_history: tuple[float, ...] = field(repr=False, default=())

    def to_json_dict(self) -> dict:
        from .interference import matrix_to_pairs

        return {
            "rho": matrix_to_pairs(self.rho),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return 0.5 * float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


def reconstruct_mle(
    counts: CountsTable, tol: float = MLE_TOL, max_iter: int = MLE_MAX_ITER
) -> ReconstructionResult:
    """Maximum-likelihood density matrix from a complete Pauli counts table.

    Iterates the likelihood fixed-point update from the maximally mixed state,
    falling back to a diluted step whenever a full step would lower the
    log-likelihood; stops once the trace-distance step drops below ``tol``.
    The estimate is positive semidefinite with unit trace by construction.
    """
    n = counts.n_qubits
    expected = measurement_settings(n)
    if list(counts.settings) != expected:
        if sorted(set(counts.settings)) == expected and len(counts.settings) == len(expected):
            order = {s: i for i, s in enumerate(counts.settings)}
            counts = CountsTable(
                tuple(expected), counts.counts[[order[s] for s in expected]], counts.shots
            )
        else:
            missing = sorted(set(expected) - set(counts.settings))
            raise ValidationError(
                f"counts must cover all {len(expected)} settings; missing "
                f"{[''.join(s) for s in missing[:5]]}{'...' if len(missing) > 5 else ''}"
            )
    dim = 2**n
    n_settings = len(counts.settings)
    totals = counts.counts.sum(axis=1).astype(float)
    if (totals == 0).any():
        raise ValidationError("every setting needs at least one recorded count")

    vecs = np.vstack([_setting_vectors(s) for s in counts.settings])  # (S * dim, dim)
    flat_counts = counts.counts.reshape(-1).astype(float)
    weights = (counts.counts / totals[:, None]).reshape(-1)  # frequencies per setting

    def probabilities(rho: np.ndarray) -> np.ndarray:
        return np.einsum("ka,ab,kb->k", vecs.conj(), rho, vecs).real

    def log_likelihood(p: np.ndarray) -> float:
        mask = flat_counts > 0
        return float(np.dot(flat_counts[mask], np.log(np.clip(p[mask], 1e-300, None))))

    rho = np.eye(dim, dtype=complex) / dim
    p = probabilities(rho)
    logl = log_likelihood(p)
    history = [logl]
    converged = False
    iterations = 0
    for iterations in range(1, int(max_iter) + 1):
        coeff = weights / np.clip(p, 1e-12, None)
        r_op = ((coeff[:, None] * vecs).T @ vecs.conj()) / n_settings
        candidate = r_op @ rho @ r_op
        candidate = (candidate + candidate.conj().T) / 2
        candidate /= np.real(np.trace(candidate))
        p_new = probabilities(candidate)
        logl_new = log_likelihood(p_new)

        if logl_new < logl - 1e-10 * (1.0 + abs(logl)):
            # Diluted step: shrink towards the identity until likelihood ascends.
            alpha = 0.5
            eye = np.eye(dim, dtype=complex)
            while alpha > 1e-8:
                mixed = (1.0 - alpha) * eye + alpha * r_op
                candidate = mixed @ rho @ mixed
                candidate = (candidate + candidate.conj().T) / 2
                candidate /= np.real(np.trace(candidate))
                p_new = probabilities(candidate)
                logl_new = log_likelihood(p_new)
                if logl_new >= logl - 1e-10 * (1.0 + abs(logl)):
                    break
                alpha /= 2.0
            else:
                candidate, p_new, logl_new = rho, p, logl  # stationary
        assert logl_new >= logl - 1e-9 * (1.0 + abs(logl)), "likelihood decreased"

        step = _trace_distance(candidate, rho)
        rho, p, logl = candidate, p_new, logl_new
        history.append(logl)
        if step < tol:
            converged = True
            break

    rho = (rho + rho.conj().T) / 2
    rho /= np.real(np.trace(rho))
    rho.setflags(write=False)
    return ReconstructionResult(
        rho=rho,
        log_likelihood=logl,
        iterations=iterations,
        converged=converged,
        log_likelihood_history=tuple(history),
    )


@dataclass(frozen=True)
class MonteCarloResult:
    """Sample statistics of a state functional under Poisson count resampling."""

    mean: float
    std: float
    failures: int
    values: tuple[float, ...] = field(repr=False, default=())


def monte_carlo_uncertainty(
    counts: CountsTable,
    resamples: int,
    functional: Callable[[np.ndarray], float],
    seed,
    tol: float = MLE_TOL,
    max_iter: int = MLE_MAX_ITER,
) -> MonteCarloResult:
    """Poisson-resample counts, re-reconstruct, and evaluate a functional.

    Each resample draws every outcome count Poissonian around the observed
    value, re-runs the likelihood reconstruction and applies ``functional``
    to the estimate; reconstruction failures are counted and excluded.
    """
    if int(resamples) < 2:
        raise ValidationError("resamples must be at least 2")
    if isinstance(seed, np.random.SeedSequence):
        seed_seq = seed
    else:
        seed_seq = np.random.SeedSequence(seed)
    children = seed_seq.spawn(int(resamples))
    values: list[float] = []
    failures = 0
    for child in children:
        rng = np.random.default_rng(child)
        drawn = rng.poisson(counts.counts)
        shots = max(int(drawn.sum(axis=1).max()), 1)
        try:
            table = CountsTable(counts.settings, drawn, shots)
            result = reconstruct_mle(table, tol=tol, max_iter=max_iter)
            values.append(float(functional(result.rho)))
        except (ValidationError, ConvergenceError, np.linalg.LinAlgError):
            failures += 1
    if len(values) < 2:
        raise ConvergenceError(
            f"only {len(values)} of {resamples} resamples reconstructed successfully"
        )
    arr = np.array(values)
    return MonteCarloResult(
        mean=float(arr.mean()),
        std=float(arr.std(ddof=1)),
        failures=failures,
        values=tuple(values),
    )

"""Multi-photon interference through spatial-mode unitaries.

Each photon occupies one input port and carries an internal state: a
polarisation qubit tensored with a spectral-mode vector in an orthonormal
auxiliary basis. The interferometer mixes the spatial ports and leaves the
internal modes untouched, so a combined output mode is a triple
(port, polarisation, spectral label). Occupation probabilities and
post-selected polarisation states are computed from permanents of the
photon-to-mode transition submatrices; tracing over the unobserved spectral
labels is what turns partial distinguishability into decoherence.

Conventions: ports are 1-based; ``matrix[k-1, j-1]`` is the amplitude from
input port k to output port j; polarisation index 0 is H and 1 is V.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .validation import (
    ValidationError,
    as_complex_matrix,
    check_gram,
    check_unitary,
)

UNITARITY_TOL = 1e-10
STATE_NORM_TOL = 1e-12
DISTRIBUTION_NORM_TOL = 1e-9

#: permutation enumeration up to this dimension, inclusion-exclusion above
_PERMANENT_ENUM_MAX = 6
#: hard size bound so desk-scale runs stay sub-second
PERMANENT_MAX_DIM = 12

#: squared-amplitude totals below this are reported as zero-probability events
_ZERO_PROBABILITY = 1e-24


def permanent(m) -> complex:
    """Permanent of a square complex matrix.

    Exact permutation enumeration is used for dimension <= 6 and a Ryser-type
    inclusion-exclusion above that; both are exact up to floating rounding.
    Dimensions above ``PERMANENT_MAX_DIM`` are rejected.
    """
    m = as_complex_matrix(m, "permanent argument")
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"permanent requires a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n > PERMANENT_MAX_DIM:
        raise ValidationError(f"permanent dimension {n} exceeds bound {PERMANENT_MAX_DIM}")
    if n == 0:
        return complex(1.0)
    if n == 1:
        return complex(m[0, 0])
    if n == 2:
        return complex(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0])
    if n == 3:
        return complex(
            m[0, 0] * (m[1, 1] * m[2, 2] + m[1, 2] * m[2, 1])
            + m[0, 1] * (m[1, 0] * m[2, 2] + m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] + m[1, 1] * m[2, 0])
        )
    if n <= _PERMANENT_ENUM_MAX:
        total = 0.0 + 0.0j
        rows = range(n)
        for cols in itertools.permutations(rows):
            term = 1.0 + 0.0j
            for i in rows:
                term *= m[i, cols[i]]
            total += term
        return complex(total)
    return _permanent_ryser(m)


def _permanent_ryser(m: np.ndarray) -> complex:
    """Inclusion-exclusion over column subsets, Gray-code ordered."""
    n = m.shape[0]
    row_sums = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    gray_prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = gray ^ gray_prev
        j = changed.bit_length() - 1
        if gray & changed:
            row_sums += m[:, j]
        else:
            row_sums -= m[:, j]
        gray_prev = gray
        sign = -1.0 if (gray.bit_count() % 2) else 1.0
        total += sign * np.prod(row_sums)
    return complex(total if n % 2 == 0 else -total)


@dataclass(frozen=True)
class Interferometer:
    """Spatial-mode unitary; row = input port, column = output port."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, "interferometer matrix")
        check_unitary(m, UNITARITY_TOL, "interferometer matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def fourier_unitary(n: int) -> Interferometer:
    """Balanced n-port splitter: entry (k, j) = exp(2 pi i (k-1)(j-1) / n) / sqrt(n)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"invalid dimension {n!r}: port count must be a positive integer")
    k = np.arange(n)
    phases = np.exp(2j * np.pi * np.outer(k, k) / n)
    return Interferometer(phases / np.sqrt(n))


@dataclass(frozen=True)
class InternalState:
    """Single-photon internal state: polarisation qubit (x) spectral vector.

    Both factors must be normalized to within 1e-12. The spectral vector
    lives in an orthonormal auxiliary basis of dimension D >= 1 and carries
    any partial distinguishability between photons.
    """

    pol: np.ndarray
    spectral: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pol = np.array(self.pol, dtype=complex).reshape(-1)
        if pol.size != 2:
            raise ValidationError(f"polarisation must have 2 amplitudes, got {pol.size}")
        spectral = self.spectral
        spectral = np.array([1.0] if spectral is None else spectral, dtype=complex).reshape(-1)
        if spectral.size < 1:
            raise ValidationError("spectral vector must have dimension >= 1")
        for name, v in (("polarisation", pol), ("spectral vector", spectral)):
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > STATE_NORM_TOL:
                raise ValidationError(f"{name} is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
        pol.setflags(write=False)
        spectral.setflags(write=False)
        object.__setattr__(self, "pol", pol)
        object.__setattr__(self, "spectral", spectral)

    @property
    def spectral_dim(self) -> int:
        return self.spectral.size


@dataclass(frozen=True)
class InputConfiguration:
    """One photon per listed input port; ports are distinct and 1-based."""

    photons: tuple

    def __init__(self, photons: Sequence[tuple[int, InternalState]]):
        entries = []
        if not photons:
            raise ValidationError("need at least one photon")
        for port, state in photons:
            port = int(port)
            if port < 1:
                raise ValidationError(f"input port {port} out of range: ports are 1-based")
            if not isinstance(state, InternalState):
                raise ValidationError("each photon needs an InternalState")
            entries.append((port, state))
        ports = [p for p, _ in entries]
        if len(set(ports)) != len(ports):
            raise ValidationError(f"duplicate input ports {ports}: at most one photon per port")
        dims = {s.spectral_dim for _, s in entries}
        if len(dims) > 1:
            raise ValidationError(f"photons have mismatched spectral dimensions {sorted(dims)}")
        object.__setattr__(self, "photons", tuple(entries))

    @property
    def ports(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.photons)

    @property
    def states(self) -> tuple[InternalState, ...]:
        return tuple(s for _, s in self.photons)

    @property
    def spectral_dim(self) -> int:
        return self.photons[0][1].spectral_dim

    def __len__(self) -> int:
        return len(self.photons)


@dataclass(frozen=True)
class PostSelectionResult:
    """Polarisation density matrix of coincident photons plus the event probability.

    ``rho`` is None when the selected pattern has zero probability, in which
    case the post-selected state is undefined (flagged rather than raised, so
    parameter scans can cross zeros).
    """

    rho: np.ndarray | None
    probability: float
    ports: tuple[int, ...]

    @property
    def state_defined(self) -> bool:
        return self.rho is not None

    @property
    def n_qubits(self) -> int:
        return len(self.ports)


def _check_ports_in_range(config: InputConfiguration, n: int) -> None:
    bad = [p for p in config.ports if p > n]
    if bad:
        raise ValidationError(f"input ports {bad} exceed interferometer dimension {n}")


def _mode_amplitude_rows(u: Interferometer, config: InputConfiguration) -> np.ndarray:
    """Photon-by-combined-output-mode amplitude matrix.

    Combined mode index m = (port-1) * 2D + pol * D + spec; entry (i, m) is
    the amplitude for photon i to arrive in that mode.
    """
    n = u.dim
    d = config.spectral_dim
    rows = np.empty((len(config), n * 2 * d), dtype=complex)
    for i, (port, state) in enumerate(config.photons):
        rows[i] = np.einsum("j,p,s->jps", u.matrix[port - 1], state.pol, state.spectral).reshape(-1)
    return rows


def output_distribution(
    u: Interferometer, config: InputConfiguration
) -> dict[tuple[int, ...], float]:
    """Probability of every output-port occupation pattern.

    Expands each photon over combined (port, polarisation, spectral) modes,
    computes |permanent|^2 / prod(n_m!) for every combined occupation, and
    marginalizes over the internal modes. The returned map covers every
    port pattern of the right photon number and sums to 1 within 1e-9.
    """
    n = u.dim
    _check_ports_in_range(config, n)
    p = len(config)
    d = config.spectral_dim
    rows = _mode_amplitude_rows(u, config)
    mode_port = np.repeat(np.arange(n), 2 * d)

    # Complete support up front so impossible patterns report an exact 0.
    result: dict[tuple[int, ...], float] = {}
    for combo in itertools.combinations_with_replacement(range(n), p):
        counts = [0] * n
        for c in combo:
            counts[c] += 1
        result[tuple(counts)] = 0.0

    active = np.flatnonzero(np.abs(rows).max(axis=0) > 0.0)
    for combo in itertools.combinations_with_replacement(active.tolist(), p):
        amp = permanent(rows[:, combo])
        weight = abs(amp) ** 2
        if weight == 0.0:
            continue
        mult = 1.0
        for _, group in itertools.groupby(combo):
            mult *= math.factorial(sum(1 for _ in group))
        counts = [0] * n
        for c in combo:
            counts[mode_port[c]] += 1
        result[tuple(counts)] += weight / mult
    return result


def postselect_coincidence(
    u: Interferometer, config: InputConfiguration, pattern: Sequence[int]
) -> PostSelectionResult:
    """Polarisation state conditioned on a collision-free coincidence pattern.

    ``pattern`` gives the photon count per output port and must place exactly
    one photon in as many ports as there are input photons (bunched patterns
    are not supported here; their probabilities are available through
    ``output_distribution``). Qubits are ordered by increasing output port.
    """
    n = u.dim
    _check_ports_in_range(config, n)
    pattern = tuple(int(c) for c in pattern)
    if len(pattern) != n:
        raise ValidationError(f"pattern length {len(pattern)} != port count {n}")
    if any(c < 0 for c in pattern):
        raise ValidationError("pattern counts must be non-negative")
    if any(c > 1 for c in pattern):
        raise ValidationError(f"unsupported pattern {pattern}: bunched outputs (count > 1)")
    p = len(config)
    if sum(pattern) != p:
        raise ValidationError(
            f"pattern {pattern} marks {sum(pattern)} ports for {p} photons; need exactly one each"
        )
    outs = tuple(j + 1 for j, c in enumerate(pattern) if c == 1)

    d = config.spectral_dim
    base = np.empty((p, p), dtype=complex)
    for j, (port, _) in enumerate(config.photons):
        for k, out in enumerate(outs):
            base[j, k] = u.matrix[port - 1, out - 1]
    pols = np.stack([s.pol for s in config.states])  # (p, 2)
    specs = np.stack([s.spectral for s in config.states])  # (p, d)

    pol_patterns = list(itertools.product((0, 1), repeat=p))
    spec_patterns = list(itertools.product(range(d), repeat=p))
    amps = np.empty((len(pol_patterns), len(spec_patterns)), dtype=complex)
    for ip, pp in enumerate(pol_patterns):
        pol_cols = pols[:, pp]  # (p, p): photon j projected on pol pp[k]
        for isp, sp in enumerate(spec_patterns):
            amps[ip, isp] = permanent(base * pol_cols * specs[:, sp])

    rho = amps @ amps.conj().T
    prob = float(np.real(np.trace(rho)))
    if prob < _ZERO_PROBABILITY:
        return PostSelectionResult(rho=None, probability=0.0, ports=outs)
    rho = (rho + rho.conj().T) / (2.0 * prob)
    rho.setflags(write=False)
    return PostSelectionResult(rho=rho, probability=prob, ports=outs)


def pair_coincidence_probability(
    u: Interferometer,
    ports: tuple[int, int],
    outs: tuple[int, int],
    overlap: complex,
) -> float:
    """Two-photon coincidence probability for a given spectral overlap.

    The photons share the same polarisation and have spectral vectors with
    inner product ``overlap``; for the balanced 3-port splitter the result is
    (2 - |overlap|^2) / 9 for any input pair and any output pair.
    """
    overlap = complex(overlap)
    if abs(overlap) > 1.0 + 1e-12:
        raise ValidationError(f"invalid overlap: magnitude {abs(overlap):.6f} exceeds 1")
    j, k = int(ports[0]), int(ports[1])
    x, y = int(outs[0]), int(outs[1])
    if j == k:
        raise ValidationError("input ports must be distinct")
    if x == y:
        raise ValidationError("output ports must be distinct")
    if not (1 <= x <= u.dim and 1 <= y <= u.dim):
        raise ValidationError(f"output ports {(x, y)} exceed interferometer dimension {u.dim}")
    residual = math.sqrt(max(0.0, 1.0 - abs(overlap) ** 2))
    pol = np.array([1.0, 0.0])
    config = InputConfiguration(
        [
            (j, InternalState(pol, np.array([1.0, 0.0]))),
            (k, InternalState(pol, np.array([overlap, residual]))),
        ]
    )
    dist = output_distribution(u, config)
    pattern = [0] * u.dim
    pattern[x - 1] = 1
    pattern[y - 1] = 1
    return dist[tuple(pattern)]


def spectral_vectors_from_gram(gram, tol: float = 1e-9) -> list[np.ndarray]:
    """Unit spectral vectors realizing a given pairwise-overlap Gram matrix.

    The Gram matrix must be Hermitian, positive semidefinite and have a unit
    diagonal; vector i reproduces <v_i|v_j> = gram[i, j] up to the validation
    tolerance. The vectors live in a basis of dimension = number of photons.
    """
    g = as_complex_matrix(gram, "gram")
    check_gram(g, tol, "gram")
    w, v = np.linalg.eigh((g + g.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    factors = np.sqrt(w)[None, :] * v.conj()  # row i is photon i's vector
    out = []
    for row in factors:
        out.append(row / np.linalg.norm(row))
    return out


def matrix_to_pairs(m: np.ndarray) -> list:
    """Serialize a complex matrix as nested JSON-ready [re, im] pairs."""
    arr = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def matrix_from_pairs(data) -> np.ndarray:
    """Inverse of :func:`matrix_to_pairs`."""
    try:
        rows = [[complex(entry[0], entry[1]) for entry in row] for row in data]
    except (TypeError, IndexError) as exc:
        raise ValidationError(f"malformed complex-matrix payload: {exc}") from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValidationError("malformed complex-matrix payload: ragged rows")
    return np.array(rows, dtype=complex)

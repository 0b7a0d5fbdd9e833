"""Shared fixtures and independent brute-force oracles.

The oracles below recompute interference amplitudes by direct enumeration of
photon-to-output assignments (and permanents by exact rational arithmetic),
deliberately avoiding the package's own permanent/post-selection code paths.
"""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from tritterlab import Interferometer, fourier_unitary


@pytest.fixture(scope="session")
def tritter() -> Interferometer:
    return fourier_unitary(3)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_internal(rng: np.random.Generator, spectral_dim: int = 1):
    from tritterlab import InternalState

    pol = rng.normal(size=2) + 1j * rng.normal(size=2)
    pol /= np.linalg.norm(pol)
    spec = rng.normal(size=spectral_dim) + 1j * rng.normal(size=spectral_dim)
    spec /= np.linalg.norm(spec)
    return InternalState(pol, spec)


def exact_integer_permanent(re_im):
    """Permutation-sum permanent of a complex integer matrix in exact rationals.

    ``re_im`` is a nested list of (re, im) integer pairs; returns a
    (Fraction, Fraction) pair.
    """
    n = len(re_im)
    total_re, total_im = Fraction(0), Fraction(0)
    for sigma in itertools.permutations(range(n)):
        re, im = Fraction(1), Fraction(0)
        for i in range(n):
            a, b = re_im[i][sigma[i]]
            re, im = re * a - im * b, re * b + im * a
        total_re += re
        total_im += im
    return total_re, total_im


def oracle_coincidence(u, ports, pols, specs, outs):
    """Post-selected polarisation state by direct assignment enumeration.

    For every polarisation pattern P and spectral pattern S over the selected
    output ports, the amplitude is the sum over all photon-to-port
    assignments of the product of single-photon transition amplitudes. The
    spectral label is traced out of the returned density matrix.

    Returns (amplitudes dict keyed by (P, S), rho, probability).
    """
    p = len(pols)
    d = len(specs[0])
    amps = {}
    for pat_p in itertools.product((0, 1), repeat=p):
        for pat_s in itertools.product(range(d), repeat=p):
            total = 0.0 + 0.0j
            for sigma in itertools.permutations(range(p)):
                term = 1.0 + 0.0j
                for j in range(p):
                    k = sigma[j]  # photon j lands in selected output slot k
                    term *= (
                        u[ports[j] - 1, outs[k] - 1]
                        * pols[j][pat_p[k]]
                        * specs[j][pat_s[k]]
                    )
                total += term
            amps[(pat_p, pat_s)] = total

    dim = 2**p
    rho = np.zeros((dim, dim), dtype=complex)
    prob = 0.0
    for (pa, sa), va in amps.items():
        ia = int("".join(map(str, pa)), 2)
        prob += abs(va) ** 2
        for (pb, sb), vb in amps.items():
            if sa != sb:
                continue
            ib = int("".join(map(str, pb)), 2)
            rho[ia, ib] += va * np.conj(vb)
    if prob > 0:
        rho /= prob
    return amps, rho, prob

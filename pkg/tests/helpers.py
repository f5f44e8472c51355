"""
Random objects for property tests.
Every helper takes an explicit numpy Generator so tests stay reproducible.
"""

from typing import List

import numpy as np

from src.core.channels import DensityMatrix, KrausChannel
from src.core.lindblad import CanonicalGenerator


def haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_density(rng: np.random.Generator, d: int, rank: int = None) -> DensityMatrix:
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.real(np.trace(rho)))


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.5 * (m + m.conj().T)
    return scale * h / np.linalg.norm(h)


def random_traceless(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = m - np.trace(m) / d * np.eye(d)
    return scale * m / np.linalg.norm(m)


def random_kraus(rng: np.random.Generator, d: int, k: int) -> List[np.ndarray]:
    """k operators cut from a Haar isometry C^d -> C^(kd)."""
    v = haar_unitary(rng, k * d)[:, :d]
    return [v[i * d:(i + 1) * d, :] for i in range(k)]


def random_channel(rng: np.random.Generator, d: int, k: int) -> KrausChannel:
    return KrausChannel(tuple(random_kraus(rng, d, k)))


def random_unit_trace_psd(rng: np.random.Generator, d: int) -> np.ndarray:
    return np.array(random_density(rng, d).matrix)


def random_generator(rng: np.random.Generator, d: int, n_ops: int, scale: float = 0.5) -> CanonicalGenerator:
    return CanonicalGenerator(
        H=random_hermitian(rng, d, scale),
        lindblad_ops=tuple(random_traceless(rng, d, scale) for _ in range(n_ops)),
    )


def sigma_minus() -> np.ndarray:
    """|0><1|: takes the excited state |1> to |0>."""
    return np.array([[0, 1], [0, 0]], dtype=np.complex128)

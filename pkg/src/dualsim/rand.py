"""Seeded randomness utilities: derived per-trial streams and random objects."""
from __future__ import annotations

import numpy as np

from .statevec import StateVector


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for trial ``index`` derived from (master_seed, index).

    Built on SeedSequence spawn keys: distinct indices give statistically
    independent streams, and every (seed, index) pair is reproducible, so
    trials can run in any order or in parallel with identical results.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Normalized state with complex-Gaussian amplitudes (Haar on the sphere)."""
    dim = 1 << num_qubits
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(num_qubits, z / np.linalg.norm(z))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))

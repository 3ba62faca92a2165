"""Common quantum encodings, for comparison against optimized ones."""
from __future__ import annotations

import logging
from functools import reduce
from typing import Any, Dict, Optional

import numpy as np

from ..config import SolverConfig
from .encoder import basis_encoding, wrapped_basis_encoding
from .errors import InvalidArgumentError
from .leakage import compute_leakage
from .operators import Ensemble, PureState
from .stochastic import STREAM_ENSEMBLE, derive_rng, random_pure_ensemble

logger = logging.getLogger(__name__)


def angle_encoding(alphabet_size: int, qubits: int) -> Ensemble:
    """x -> (cos t_x |0> + sin t_x |1>)^{(x) n} with t_x = pi x / (2|X|)."""
    if alphabet_size < 1:
        raise InvalidArgumentError("alphabet size must be positive")
    if qubits < 1:
        raise InvalidArgumentError("angle encoding needs at least one qubit")
    states = []
    for x in range(alphabet_size):
        theta = np.pi * x / (2 * alphabet_size)
        one = np.array([np.cos(theta), np.sin(theta)], dtype=complex)
        states.append(PureState.normalized(reduce(np.kron, [one] * qubits)))
    return Ensemble.from_pure_states(states)


def amplitude_encoding(features: Any) -> Ensemble:
    """Each feature row, zero-padded to a power-of-two length and normalized."""
    rows = np.atleast_2d(np.asarray(features, dtype=complex))
    if rows.shape[0] < 1 or rows.shape[1] < 1:
        raise InvalidArgumentError("feature matrix is empty")
    dim = 1 << max(0, (rows.shape[1] - 1).bit_length())
    padded = np.zeros((rows.shape[0], dim), dtype=complex)
    padded[:, : rows.shape[1]] = rows
    if np.any(np.linalg.norm(padded, axis=1) == 0):
        raise InvalidArgumentError("an all-zero feature row has no amplitude encoding")
    return Ensemble.from_pure_states([PureState.normalized(r) for r in padded])


def compare_encodings(alphabet_size: int, qubits: int, solver: Optional[SolverConfig] = None,
                      *, seed: int = 0) -> Dict[str, float]:
    """Leakage in bits of basis, angle and Haar-random encodings on n qubits.

    Basis encoding wraps labels modulo 2^n when the alphabet does not fit.
    """
    solver = solver or SolverConfig()
    dim = 2 ** qubits
    candidates = {
        "basis": basis_encoding(alphabet_size, dim) if dim >= alphabet_size
        else wrapped_basis_encoding(alphabet_size, dim),
        "angle": angle_encoding(alphabet_size, qubits),
        "random": random_pure_ensemble(alphabet_size, dim, derive_rng(seed, STREAM_ENSEMBLE, 0)),
    }
    out = {name: compute_leakage(ensemble, solver).leakage_bits for name, ensemble in candidates.items()}
    logger.info("encoding comparison |X|=%d n=%d: %s", alphabet_size, qubits, out)
    return out

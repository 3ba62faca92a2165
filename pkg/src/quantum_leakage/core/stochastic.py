"""Seeded random objects for experiments and property tests.

All randomness flows through an explicit ``numpy.random.Generator``. Concurrent
tasks derive their own generator from (master seed, task index) with
``derive_rng`` so results do not depend on scheduling.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .operators import Ensemble, Povm, random_pure_state, random_unitary, sqrt_pinv

# Stream tags keep draws made for different purposes under one seed independent.
STREAM_SOLVER = 1
STREAM_ENSEMBLE = 2
STREAM_CASE = 3


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream named by ``keys`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


def random_pure_ensemble(alphabet_size: int, dim: int, rng: np.random.Generator,
                         alphabet: Optional[Sequence] = None) -> Ensemble:
    """|X| independent Haar-random pure states."""
    if alphabet_size < 1:
        raise InvalidArgumentError("alphabet size must be positive")
    states = [random_pure_state(dim, rng) for _ in range(alphabet_size)]
    return Ensemble.from_pure_states(states, alphabet=alphabet)


def random_isometry(dim_out: int, dim_in: int, rng: np.random.Generator) -> np.ndarray:
    """First ``dim_in`` columns of a Haar unitary on C^dim_out."""
    if dim_out < dim_in:
        raise InvalidArgumentError(f"isometry needs dim_out >= dim_in, got {dim_out} < {dim_in}")
    return random_unitary(dim_out, rng)[:, :dim_in]


def random_psd(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """G G^dagger for a complex Gaussian dim x rank matrix."""
    rank = dim if rank is None else rank
    g = (rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))) / np.sqrt(2)
    return g @ g.conj().T


def normalize_to_povm(elements: np.ndarray) -> np.ndarray:
    """G_y -> S^{-1/2} G_y S^{-1/2} with S = sum_y G_y."""
    s_inv = sqrt_pinv(elements.sum(axis=0))
    return np.einsum("ij,yjk,kl->yil", s_inv, elements, s_inv)


def random_povm(dim: int, outcomes: int, rng: np.random.Generator) -> Povm:
    if outcomes < 1:
        raise InvalidArgumentError("a POVM needs at least one outcome")
    raw = np.stack([random_psd(dim, rng) for _ in range(outcomes)])
    return Povm(normalize_to_povm(raw))


def random_stochastic_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Column-stochastic rows x cols matrix with strictly positive entries."""
    raw = rng.uniform(0.05, 1.0, size=(rows, cols))
    return raw / raw.sum(axis=0, keepdims=True)


def random_pmf(shape, rng: np.random.Generator) -> np.ndarray:
    """Flat Dirichlet(1) distribution reshaped to ``shape``."""
    size = int(np.prod(shape))
    return rng.dirichlet(np.ones(size)).reshape(shape)

"""Finite-dimensional Hermitian operator algebra.

Holds the immutable domain types (HermitianOperator, DensityOperator, PureState,
Povm, Ensemble) and the pure functions every other module builds on. Arrays held
by the types are made read-only, so instances can be shared across workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, InvalidArgumentError, NumericError, ValidationError
from .validators import (
    PSD_TOL,
    POVM_TOL,
    as_matrix,
    describe,
    povm_stack,
    validate_density,
    validate_hermitian,
    validate_povm,
)

NORM_TOL = 1e-12
RANK_CUTOFF = 1e-12
IMAG_TOL = 1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    matrix: np.ndarray

    def __post_init__(self):
        arr = as_matrix(self.matrix)
        check = validate_hermitian(arr)
        if check.is_err():
            raise ValidationError(describe(check.err_value), check.err_value)
        object.__setattr__(self, "matrix", _frozen((arr + arr.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def diag(cls, values: Iterable[float]):
        return cls(np.diag(np.asarray(list(values), dtype=complex)))


@dataclass(frozen=True, eq=False)
class DensityOperator(HermitianOperator):
    """Positive semi-definite, unit-trace operator."""

    def __post_init__(self):
        super().__post_init__()
        check = validate_density(self.matrix)
        if check.is_err():
            raise ValidationError(describe(check.err_value), check.err_value)

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues with rounding noise in [-PSD_TOL, 0) clamped to 0."""
        w = np.linalg.eigvalsh(self.matrix)
        return np.where((w < 0) & (w >= -PSD_TOL), 0.0, w)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if vec.size == 0:
            raise InvalidArgumentError("a pure state needs at least one amplitude")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm {norm:.15g} is not 1")
        object.__setattr__(self, "amplitudes", _frozen(vec))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def normalized(cls, vec: Sequence[complex]) -> "PureState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise InvalidArgumentError("cannot normalize the zero vector")
        return cls(vec / norm)

    @classmethod
    def basis(cls, dim: int, index: int) -> "PureState":
        if not 0 <= index < dim:
            raise InvalidArgumentError(f"basis index {index} outside 0..{dim - 1}")
        vec = np.zeros(dim, dtype=complex)
        vec[index] = 1.0
        return cls(vec)

    def density(self) -> DensityOperator:
        return density_from_state(self)


@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement {F_y}; ``elements`` is a (|Y|, d, d) stack."""

    elements: np.ndarray

    def __post_init__(self):
        stack = povm_stack(self.elements)
        check = validate_povm(stack, POVM_TOL, psd_tol=PSD_TOL)
        if check.is_err():
            raise ValidationError(describe(check.err_value), check.err_value)
        sym = (stack + np.conj(np.swapaxes(stack, 1, 2))) / 2
        object.__setattr__(self, "elements", _frozen(sym))

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def outcome_count(self) -> int:
        return self.elements.shape[0]

    def __len__(self) -> int:
        return self.outcome_count

    def element(self, y: int) -> HermitianOperator:
        return HermitianOperator(self.elements[y])

    @classmethod
    def computational(cls, dim: int) -> "Povm":
        return cls(np.stack([np.outer(np.eye(dim)[i], np.eye(dim)[i]) for i in range(dim)]))

    @classmethod
    def trivial(cls, dim: int) -> "Povm":
        return cls(np.eye(dim, dtype=complex)[None, :, :])


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Encoding x -> rho^x over an ordered alphabet.

    ``prior`` is optional; labels with zero prior probability are outside the
    support and never take part in leakage computations.
    """

    alphabet: Tuple[Hashable, ...]
    states: Tuple[DensityOperator, ...]
    prior: Optional[Tuple[float, ...]] = None
    _stack: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        states = tuple(s if isinstance(s, DensityOperator) else DensityOperator(as_matrix(s)) for s in self.states)
        if len(alphabet) < 1:
            raise InvalidArgumentError("an ensemble needs a non-empty alphabet")
        if len(set(alphabet)) != len(alphabet):
            raise InvalidArgumentError("alphabet labels must be distinct")
        if len(states) != len(alphabet):
            raise InvalidArgumentError(f"{len(alphabet)} labels but {len(states)} states")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimensionMismatchError(f"states have mixed dimensions {sorted(dims)}")
        prior = self.prior
        if prior is not None:
            prior = tuple(float(p) for p in prior)
            if len(prior) != len(alphabet):
                raise InvalidArgumentError("prior length does not match the alphabet")
            if any(p < 0 for p in prior) or sum(prior) <= 0:
                raise InvalidArgumentError("prior must be non-negative with positive mass")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "_stack", _frozen(np.stack([s.matrix for s in states])))

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def stack(self) -> np.ndarray:
        """States as an (|X|, d, d) array."""
        return self._stack

    @property
    def support(self) -> Tuple[int, ...]:
        if self.prior is None:
            return tuple(range(self.size))
        return tuple(i for i, p in enumerate(self.prior) if p > 0)

    @classmethod
    def from_matrices(cls, matrices: Sequence[Any], alphabet: Optional[Sequence[Hashable]] = None,
                      prior: Optional[Sequence[float]] = None) -> "Ensemble":
        alphabet = tuple(alphabet) if alphabet is not None else tuple(range(len(matrices)))
        return cls(alphabet, tuple(DensityOperator(as_matrix(m)) for m in matrices), prior)

    @classmethod
    def from_pure_states(cls, states: Sequence[PureState], alphabet: Optional[Sequence[Hashable]] = None,
                         prior: Optional[Sequence[float]] = None) -> "Ensemble":
        alphabet = tuple(alphabet) if alphabet is not None else tuple(range(len(states)))
        return cls(alphabet, tuple(density_from_state(s) for s in states), prior)

    def with_prior(self, prior: Optional[Sequence[float]]) -> "Ensemble":
        return Ensemble(self.alphabet, self.states, None if prior is None else tuple(prior))

    def with_states(self, matrices: Sequence[Any]) -> "Ensemble":
        return Ensemble(self.alphabet, tuple(DensityOperator(as_matrix(m)) for m in matrices), self.prior)

    def conjugated(self, unitary: np.ndarray) -> "Ensemble":
        """Ensemble {U rho^x U^dagger}."""
        u = np.asarray(unitary, dtype=complex)
        return self.with_states([u @ s.matrix @ u.conj().T for s in self.states])

    def permuted(self, order: Sequence[int]) -> "Ensemble":
        order = list(order)
        prior = None if self.prior is None else [self.prior[i] for i in order]
        return Ensemble(tuple(self.alphabet[i] for i in order), tuple(self.states[i] for i in order),
                        None if prior is None else tuple(prior))


class Eigensystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray  # columns


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    # Rotate each column so its largest-magnitude entry is real and positive.
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col) > np.max(np.abs(col)) - 1e-12))
        if abs(col[k]) > 0:
            out[:, j] = col * (abs(col[k]) / col[k])
    return out


def eig_hermitian(h: Any) -> Eigensystem:
    """Eigen-decomposition ordered by descending |eigenvalue|.

    The base order is descending signed eigenvalue; ties in magnitude (to 12
    decimals) keep that order, so diag(0.5, -0.5) lists +0.5 first.
    """
    arr = as_matrix(h)
    check = validate_hermitian(arr)
    if check.is_err():
        raise ValidationError(describe(check.err_value), check.err_value)
    w, v = scipy.linalg.eigh((arr + arr.conj().T) / 2)
    w, v = w[::-1], v[:, ::-1]
    order = np.argsort(-np.round(np.abs(w), 12), kind="stable")
    return Eigensystem(values=np.ascontiguousarray(w[order]),
                       vectors=_canonical_phase(np.ascontiguousarray(v[:, order])))


def trace_inner(a: Any, b: Any) -> float:
    """tr(AB) for Hermitian A, B; the imaginary residue is checked then dropped."""
    x, y = as_matrix(a), as_matrix(b)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"shapes {x.shape} and {y.shape} differ")
    val = complex(np.einsum("ij,ji->", x, y))
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise NumericError(f"tr(AB) has imaginary part {val.imag:.3g}")
    return val.real


def density_from_state(psi: PureState) -> DensityOperator:
    a = psi.amplitudes
    return DensityOperator(np.outer(a, a.conj()))


def projector(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def random_pure_state(dim: int, rng: np.random.Generator) -> PureState:
    """Haar-random state: normalized vector of i.i.d. standard complex Gaussians."""
    if dim < 1:
        raise InvalidArgumentError(f"dimension must be positive, got {dim}")
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(vec / np.linalg.norm(vec))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    if dim < 1:
        raise InvalidArgumentError(f"dimension must be positive, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def trace_distance(rho: Any, sigma: Any) -> float:
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"cannot compare states of shapes {a.shape} and {b.shape}")
    diff = a - b
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(min(1.0, 0.5 * np.sum(np.abs(w))))


def _psd_eigh(p: Any) -> Tuple[np.ndarray, np.ndarray, float]:
    arr = as_matrix(p)
    w, v = np.linalg.eigh((arr + arr.conj().T) / 2)
    lam_max = float(w[-1]) if w.size else 0.0
    if w.size and w[0] < -PSD_TOL * max(1.0, lam_max):
        raise NumericError(f"matrix has negative eigenvalue {w[0]:.3g}")
    return w, v, lam_max


def sqrt_pinv(p: Any) -> np.ndarray:
    """P^{-1/2} on the support of P, zero on its kernel."""
    w, v, lam_max = _psd_eigh(p)
    if lam_max <= 0:
        return np.zeros_like(v)
    keep = w > RANK_CUTOFF * lam_max
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (v * inv) @ v.conj().T


def support_projector(p: Any) -> np.ndarray:
    w, v, lam_max = _psd_eigh(p)
    if lam_max <= 0:
        return np.zeros_like(v)
    keep = (w > RANK_CUTOFF * lam_max).astype(float)
    return (v * keep) @ v.conj().T


def purity(rho: Any) -> float:
    arr = as_matrix(rho)
    return float(np.einsum("ij,ji->", arr, arr).real)


def is_pure(rho: Any, tol: float = 1e-10) -> bool:
    return abs(purity(rho) - 1.0) <= tol

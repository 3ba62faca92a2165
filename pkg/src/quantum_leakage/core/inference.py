"""Exact simulation of encode -> channel -> measure -> post-process pipelines.

Accuracy P{Z_hat = Z} is evaluated in closed form from Born's rule, and audited
against the leakage bound 2^Q max_z P(z). The bound printed with a plain Q
multiplier is reported next to it; the perfect-discrimination pipeline from
``counterexample_pipeline`` violates that form.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from cytoolz import curry

from ..config import SolverConfig
from .encoder import basis_encoding
from .errors import DimensionMismatchError, InvalidArgumentError, InvalidChannelError, ValidationError
from .leakage import compute_leakage
from .operators import DensityOperator, Ensemble, Povm
from .parallel import run_tasks
from .stochastic import (
    STREAM_CASE,
    derive_rng,
    random_isometry,
    random_pmf,
    random_povm,
    random_pure_ensemble,
    random_stochastic_matrix,
)
from .validators import Violation, as_matrix, validate_density

logger = logging.getLogger(__name__)

PMF_TOL = 1e-12
KRAUS_TOL = 1e-10
STOCHASTIC_TOL = 1e-12
BOUND_TOL = 1e-9

AUDIT_COLUMNS = [
    "case_id", "seed", "dim", "alphabet_in", "alphabet_out", "accuracy", "leakage_bits",
    "corrected_bound", "literal_bound", "corrected_holds", "literal_holds", "capacity_corrected_holds",
    "channel_valid",
]


@dataclass(frozen=True, eq=False)
class JointPmf:
    """P(x, z) as an |X| x |Z| array."""

    probs: np.ndarray
    input_alphabet: Optional[Tuple[Hashable, ...]] = None
    output_alphabet: Optional[Tuple[Hashable, ...]] = None

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True)
        if p.ndim != 2 or p.size == 0:
            raise InvalidArgumentError(f"joint pmf must be a non-empty 2-D array, got shape {p.shape}")
        violations: List[Violation] = []
        if np.any(p < 0):
            violations.append(Violation(kind="NEGATIVE_PROBABILITY", where="pmf", value=float(p.min()),
                                        msg=f"negative probability {p.min():.6g}"))
        total = float(p.sum())
        if abs(total - 1.0) > PMF_TOL:
            violations.append(Violation(kind="TOTAL", where="pmf", value=total,
                                        msg=f"probabilities sum to {total:.15g}"))
        if violations:
            raise ValidationError("; ".join(v.msg for v in violations), violations)
        xs = tuple(range(p.shape[0])) if self.input_alphabet is None else tuple(self.input_alphabet)
        zs = tuple(range(p.shape[1])) if self.output_alphabet is None else tuple(self.output_alphabet)
        if len(xs) != p.shape[0] or len(zs) != p.shape[1]:
            raise InvalidArgumentError("alphabet lengths do not match the pmf shape")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "input_alphabet", xs)
        object.__setattr__(self, "output_alphabet", zs)

    @property
    def marginal_x(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    @property
    def marginal_z(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def max_prior(self) -> Tuple[float, int]:
        """(max_z P(z), smallest z attaining it)."""
        pz = self.marginal_z
        z = int(np.argmax(pz))
        return float(pz[z]), z

    @classmethod
    def uniform_identity(cls, n: int) -> "JointPmf":
        """Z = X, uniform over n labels."""
        return cls(np.eye(n) / n)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map given by a (K, d_out, d_in) Kraus stack."""

    kraus: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None, :, :]
        if k.ndim != 3 or k.shape[0] == 0:
            raise InvalidArgumentError(f"Kraus stack must be (K, d_out, d_in), got shape {k.shape}")
        residual = float(np.max(np.abs(np.einsum("kji,kjl->il", k.conj(), k) - np.eye(k.shape[2]))))
        if residual > KRAUS_TOL:
            v = Violation(kind="COMPLETENESS", where="kraus", value=residual,
                          msg=f"sum K^dagger K differs from I by {residual:.3g}")
            raise InvalidChannelError(v.msg, [v])
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]


@dataclass(frozen=True, eq=False)
class PostProcessor:
    """gamma[z, y] = P{Z_hat = z | Y = y}."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float, copy=True)
        if g.ndim != 2 or g.size == 0:
            raise InvalidArgumentError(f"gamma must be a non-empty |Z| x |Y| array, got shape {g.shape}")
        violations: List[Violation] = []
        if np.any(g < 0) or np.any(g > 1):
            worst = float(g.min() if g.min() < 0 else g.max())
            violations.append(Violation(kind="RANGE", where="gamma", value=worst,
                                        msg=f"gamma entry {worst:.6g} outside [0, 1]"))
        cols = g.sum(axis=0)
        bad = int(np.argmax(np.abs(cols - 1.0)))
        if abs(cols[bad] - 1.0) > STOCHASTIC_TOL:
            violations.append(Violation(kind="COLUMN_SUM", where=f"column {bad}", value=float(cols[bad]),
                                        msg=f"column {bad} sums to {cols[bad]:.15g}"))
        if violations:
            raise ValidationError("; ".join(v.msg for v in violations), violations)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def outputs(self) -> int:
        return self.gamma.shape[0]

    @property
    def inputs(self) -> int:
        return self.gamma.shape[1]

    @classmethod
    def identity(cls, n: int) -> "PostProcessor":
        return cls(np.eye(n))

    @classmethod
    def constant(cls, z: int, outputs: int, inputs: int) -> "PostProcessor":
        """Ignore y and always answer z."""
        if not 0 <= z < outputs:
            raise InvalidArgumentError(f"label {z} outside 0..{outputs - 1}")
        g = np.zeros((outputs, inputs))
        g[z, :] = 1.0
        return cls(g)

    @classmethod
    def random(cls, outputs: int, inputs: int, rng: np.random.Generator) -> "PostProcessor":
        return cls(random_stochastic_matrix(outputs, inputs, rng))


@dataclass(frozen=True, eq=False)
class Pipeline:
    encoding: Ensemble
    channel: QuantumChannel
    measurement: Povm
    post: PostProcessor

    def __post_init__(self):
        if self.encoding.dim != self.channel.dim_in:
            raise DimensionMismatchError(
                f"encoding dim {self.encoding.dim} does not feed channel input dim {self.channel.dim_in}")
        if self.channel.dim_out != self.measurement.dim:
            raise DimensionMismatchError(
                f"channel output dim {self.channel.dim_out} does not match POVM dim {self.measurement.dim}")
        if self.measurement.outcome_count != self.post.inputs:
            raise DimensionMismatchError(
                f"POVM has {self.measurement.outcome_count} outcomes, gamma has {self.post.inputs} columns")


@dataclass(frozen=True)
class BoundReport:
    accuracy: float
    leakage_bits: float
    max_prior: float
    corrected_bound: float
    literal_bound: float
    capacity_corrected: float
    capacity_literal: float
    certified_bound: float
    corrected_holds: bool
    literal_holds: bool
    capacity_corrected_holds: bool
    capacity_literal_holds: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _apply_kraus(kraus: np.ndarray, rho: np.ndarray) -> np.ndarray:
    out = np.einsum("kij,...jl,kml->...im", kraus, rho, kraus.conj())
    return (out + np.conj(np.swapaxes(out, -1, -2))) / 2


@curry
def apply_channel(channel: QuantumChannel, rho: Any) -> DensityOperator:
    """sum_k K_k rho K_k^dagger."""
    arr = as_matrix(rho)
    if arr.shape[0] != channel.dim_in:
        raise DimensionMismatchError(f"state dim {arr.shape[0]} but channel input dim {channel.dim_in}")
    return DensityOperator(_apply_kraus(channel.kraus, arr))


def apply_to_ensemble(channel: QuantumChannel, ensemble: Ensemble) -> Ensemble:
    return ensemble.with_states([m.matrix for m in map(apply_channel(channel), ensemble.states)])


def _check_alphabets(pipeline: Pipeline, joint: JointPmf) -> None:
    nx, nz = joint.probs.shape
    if nx != pipeline.encoding.size:
        raise InvalidArgumentError(f"pmf has |X|={nx} but the encoding has {pipeline.encoding.size} labels")
    if nz != pipeline.post.outputs:
        raise InvalidArgumentError(f"pmf has |Z|={nz} but gamma has {pipeline.post.outputs} rows")


def pipeline_accuracy(pipeline: Pipeline, joint: JointPmf) -> float:
    """P{Z_hat = Z} = sum_{x,z} P(x,z) sum_y tr(F_y N(rho^x)) gamma[z, y]."""
    _check_alphabets(pipeline, joint)
    outputs = _apply_kraus(pipeline.channel.kraus, pipeline.encoding.stack)
    born = np.einsum("yij,xji->xy", pipeline.measurement.elements, outputs).real
    return float(np.sum(joint.probs * (born @ pipeline.post.gamma.T)))


def _holds(value: float, bound: float) -> bool:
    return value <= bound + BOUND_TOL


def audit_bounds(pipeline: Pipeline, joint: JointPmf, solver: Optional[SolverConfig] = None,
                 *, workers: Optional[int] = None) -> BoundReport:
    """Accuracy next to every variant of the leakage bound on it.

    Leakage is taken over the labels X actually uses (positive marginal).
    """
    _check_alphabets(pipeline, joint)
    accuracy = pipeline_accuracy(pipeline, joint)
    res = compute_leakage(pipeline.encoding.with_prior(joint.marginal_x), solver, workers=workers)
    q = res.leakage_bits
    p_max, _ = joint.max_prior()
    n = int(np.count_nonzero(joint.marginal_x > 0))
    d = pipeline.encoding.dim
    corrected = 2.0 ** q * p_max
    literal = q * p_max
    cap_corrected = min(n, d * d) * p_max
    cap_literal = min(math.log2(n), 2 * math.log2(d)) * p_max
    report = BoundReport(
        accuracy=accuracy,
        leakage_bits=q,
        max_prior=p_max,
        corrected_bound=corrected,
        literal_bound=literal,
        capacity_corrected=cap_corrected,
        capacity_literal=cap_literal,
        certified_bound=2.0 ** res.dual_upper_bound_bits * p_max,
        corrected_holds=_holds(accuracy, corrected),
        literal_holds=_holds(accuracy, literal),
        capacity_corrected_holds=_holds(accuracy, cap_corrected),
        capacity_literal_holds=_holds(accuracy, cap_literal),
    )
    if not report.corrected_holds:
        logger.warning("accuracy %.9g exceeds 2^Q max P(z) = %.9g", accuracy, corrected)
    return report


def data_processing_check(ensemble: Ensemble, channel: QuantumChannel,
                          solver: Optional[SolverConfig] = None) -> Tuple[float, float]:
    """(leakage of {rho^x}, leakage of {N(rho^x)}) in bits."""
    before = compute_leakage(ensemble, solver).leakage_bits
    after = compute_leakage(apply_to_ensemble(channel, ensemble), solver).leakage_bits
    return before, after


# ---- Channels ----

def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel(np.eye(dim, dtype=complex)[None, :, :])


def weyl_operators(dim: int) -> np.ndarray:
    """X^a Z^b for a, b in 0..d-1, as a (d^2, d, d) stack; (0, 0) first."""
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    ops = [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
           for a in range(dim) for b in range(dim)]
    return np.stack(ops).astype(complex)


def depolarizing_channel(dim: int, p: float) -> QuantumChannel:
    """rho -> (1 - p) rho + p I/d; p = 1 is the fully depolarizing channel."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"depolarizing probability must lie in [0, 1], got {p}")
    w = weyl_operators(dim)
    weights = np.full(dim * dim, p / (dim * dim))
    weights[0] += 1.0 - p
    return QuantumChannel(np.sqrt(weights)[:, None, None] * w)


def dephasing_channel(dim: int) -> QuantumChannel:
    """Measure in the computational basis and forget the outcome."""
    return QuantumChannel(np.stack([np.diag(np.eye(dim)[i]) for i in range(dim)]).astype(complex))


def unitary_channel(unitary: Any) -> QuantumChannel:
    return QuantumChannel(as_matrix(unitary)[None, :, :])


def amplitude_damping_channel(gamma: float) -> QuantumChannel:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgumentError(f"damping rate must lie in [0, 1], got {gamma}")
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return QuantumChannel(np.stack([k0, k1]))


def random_channel(dim_in: int, dim_out: int, rng: np.random.Generator,
                   env_dim: Optional[int] = None) -> QuantumChannel:
    """Stinespring: Haar isometry into C^{d_out} (x) C^{e}, then trace out the environment."""
    env = dim_in * dim_out if env_dim is None else env_dim
    v = random_isometry(dim_out * env, dim_in, rng).reshape(dim_out, env, dim_in)
    return QuantumChannel(np.transpose(v, (1, 0, 2)))


def compose_channels(first: QuantumChannel, second: QuantumChannel) -> QuantumChannel:
    """``second`` after ``first``."""
    if first.dim_out != second.dim_in:
        raise DimensionMismatchError(f"cannot feed dim {first.dim_out} into dim {second.dim_in}")
    kraus = np.einsum("jab,ibc->jiac", second.kraus, first.kraus)
    return QuantumChannel(kraus.reshape(-1, second.dim_out, first.dim_in))


# ---- Pipelines ----

def random_pipeline(dim: int, alphabet_in: int, alphabet_out: int,
                    rng: np.random.Generator) -> Tuple[Pipeline, JointPmf]:
    """Haar encoding, Stinespring channel, random POVM and gamma, Dirichlet P(x, z)."""
    encoding = random_pure_ensemble(alphabet_in, dim, rng)
    channel = random_channel(dim, dim, rng)
    outcomes = int(rng.integers(1, dim * dim + 1))
    measurement = random_povm(dim, outcomes, rng)
    post = PostProcessor.random(alphabet_out, outcomes, rng)
    joint = JointPmf(_renormalized(random_pmf((alphabet_in, alphabet_out), rng)))
    return Pipeline(encoding, channel, measurement, post), joint


def _renormalized(p: np.ndarray) -> np.ndarray:
    return p / p.sum()


def counterexample_pipeline(dim: int = 8) -> Tuple[Pipeline, JointPmf]:
    """Basis encoding read out perfectly: accuracy 1 against a uniform Z = X."""
    pipeline = Pipeline(
        encoding=basis_encoding(dim, dim),
        channel=identity_channel(dim),
        measurement=Povm.computational(dim),
        post=PostProcessor.identity(dim),
    )
    return pipeline, JointPmf.uniform_identity(dim)


def _audit_case(task: Tuple[int, int, int, int, Optional[SolverConfig]]) -> Dict[str, Any]:
    case_id, seed, dim_max, alphabet_max, solver = task
    rng = derive_rng(seed, STREAM_CASE, case_id)
    dim = int(rng.integers(min(2, dim_max), dim_max + 1))
    nx = int(rng.integers(1, alphabet_max + 1))
    nz = int(rng.integers(1, alphabet_max + 1))
    pipeline, joint = random_pipeline(dim, nx, nz, rng)
    report = audit_bounds(pipeline, joint, solver, workers=1)
    return {
        "case_id": case_id,
        "seed": seed,
        "dim": dim,
        "alphabet_in": nx,
        "alphabet_out": nz,
        "accuracy": report.accuracy,
        "leakage_bits": report.leakage_bits,
        "corrected_bound": report.corrected_bound,
        "literal_bound": report.literal_bound,
        "corrected_holds": report.corrected_holds,
        "literal_holds": report.literal_holds,
        "capacity_corrected_holds": report.capacity_corrected_holds,
        "channel_valid": channel_outputs_valid(pipeline.channel, pipeline.encoding, 1e-8),
    }


def audit_sweep(trials: int, dim_max: int = 4, alphabet_max: int = 4, seed: int = 0,
                solver: Optional[SolverConfig] = None, *, workers: Optional[int] = None) -> pd.DataFrame:
    """Audit ``trials`` seeded random pipelines; one row per case in case order."""
    if trials < 0:
        raise InvalidArgumentError("trial count must be non-negative")
    if dim_max < 1 or alphabet_max < 1:
        raise InvalidArgumentError("dimension and alphabet caps must be positive")
    rows = run_tasks(_audit_case, [(i, seed, dim_max, alphabet_max, solver) for i in range(trials)], workers)
    frame = pd.DataFrame(rows, columns=AUDIT_COLUMNS)
    failed = int((~frame["corrected_holds"].astype(bool)).sum()) if len(frame) else 0
    logger.info("audited %d pipelines, %d corrected-bound violations", trials, failed)
    return frame


def channel_outputs_valid(channel: QuantumChannel, ensemble: Ensemble, tol: float = 1e-8) -> bool:
    """True when every N(rho^x) passes validate_density at ``tol``."""
    outputs = _apply_kraus(channel.kraus, ensemble.stack)
    return all(validate_density(o, tol).is_ok() for o in outputs)

"""Optimal universal encoders by projected subgradient ascent.

Each outer iteration solves the inner POVM problem for the current pure-state
ensemble, collects the subgradient G^x = sum of the POVM elements assigned to x,
and moves every state to Pi[rho^x + mu G^x], where Pi projects onto rank-one
unit-trace matrices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import EncodingProblem, OptimizerConfig
from .errors import InvalidArgumentError
from .leakage import LeakageResult, compute_leakage
from .operators import DensityOperator, Ensemble, HermitianOperator, PureState, eig_hermitian, projector
from .parallel import run_tasks
from .stochastic import STREAM_ENSEMBLE, derive_rng, random_pure_ensemble

logger = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class OptimizationRun:
    """Leakage traces (bits per outer iteration) of every restart and the best final ensemble."""

    traces: Tuple[Tuple[float, ...], ...]
    best_ensemble: Ensemble
    best_leakage_bits: float
    best_restart: int = 0
    non_converged: Tuple[Tuple[int, int], ...] = ()

    def _matrix(self) -> np.ndarray:
        return np.asarray(self.traces, dtype=float)

    @property
    def median(self) -> np.ndarray:
        return np.median(self._matrix(), axis=0)

    @property
    def minimum(self) -> np.ndarray:
        return self._matrix().min(axis=0)

    @property
    def maximum(self) -> np.ndarray:
        return self._matrix().max(axis=0)


@dataclass(frozen=True)
class SweepPoint:
    qubits: int
    dim: int
    leakage_bits: float
    cold_bits: float
    warm_bits: float


def subgradient(ensemble: Ensemble, res: LeakageResult) -> Dict[int, HermitianOperator]:
    """G^x = sum over y with x*(y) = x of F_y, keyed by alphabet index."""
    f = res.povm.elements
    if f.shape[1] != ensemble.dim:
        raise InvalidArgumentError("leakage result does not belong to this ensemble")
    g = np.zeros((ensemble.size, ensemble.dim, ensemble.dim), dtype=complex)
    for y, x in enumerate(res.assignment):
        g[x] += f[y]
    return {x: HermitianOperator(g[x]) for x in range(ensemble.size)}


def project_rank_one(h) -> DensityOperator:
    """|i*><i*| for the eigenvector with the largest |eigenvalue|; |e_0><e_0| if h is ~0."""
    eig = eig_hermitian(h)
    if float(np.max(np.abs(eig.values))) < DEGENERATE_TOL:
        return DensityOperator(projector(np.eye(eig.vectors.shape[0])[0]))
    return DensityOperator(projector(eig.vectors[:, 0]))


def ascent_step(ensemble: Ensemble, res: LeakageResult, mu: float) -> Ensemble:
    g = subgradient(ensemble, res)
    moved = [project_rank_one(s.matrix + mu * g[x].matrix) for x, s in enumerate(ensemble.states)]
    return Ensemble(ensemble.alphabet, tuple(moved), ensemble.prior)


def _run_restart(task: Tuple[EncodingProblem, OptimizerConfig, int, Optional[Ensemble]]):
    problem, cfg, restart, initial = task
    if initial is None:
        rng = derive_rng(cfg.seed, STREAM_ENSEMBLE, restart)
        ensemble = random_pure_ensemble(problem.alphabet_size, problem.dim, rng)
    else:
        ensemble = initial
    res = compute_leakage(ensemble, cfg.solver, workers=1)
    trace = [res.leakage_bits]
    stalled: List[Tuple[int, int]] = [] if res.converged else [(restart, 0)]
    for k in range(1, cfg.iterations + 1):
        ensemble = ascent_step(ensemble, res, cfg.step_size)
        res = compute_leakage(ensemble, cfg.solver, initial_povm=res.povm, workers=1)
        trace.append(res.leakage_bits)
        if not res.converged:
            stalled.append((restart, k))
    logger.info("restart %d finished at %.6f bits", restart, trace[-1])
    return tuple(trace), ensemble, tuple(stalled)


def optimize_encoding(
    problem: EncodingProblem,
    cfg: Optional[OptimizerConfig] = None,
    *,
    initial: Optional[Ensemble] = None,
    workers: Optional[int] = None,
) -> OptimizationRun:
    """Run ``cfg.restarts`` ascents from Haar-random encodings and keep the best.

    With ``initial`` a single deterministic ascent starts from that ensemble.
    Trace k holds the leakage after k ascent steps, so traces have
    ``cfg.iterations + 1`` entries.
    """
    cfg = cfg or OptimizerConfig()
    if initial is not None:
        if initial.size != problem.alphabet_size or initial.dim != problem.dim:
            raise InvalidArgumentError(
                f"initial ensemble is |X|={initial.size}, d={initial.dim}; "
                f"problem is |X|={problem.alphabet_size}, d={problem.dim}")
        tasks = [(problem, cfg, 0, initial)]
    else:
        tasks = [(problem, cfg, r, None) for r in range(cfg.restarts)]

    runs = run_tasks(_run_restart, tasks, workers)
    best = 0
    for r, (trace, _, _) in enumerate(runs):
        if trace[-1] > runs[best][0][-1]:
            best = r
    non_converged = tuple(p for _, _, stalled in runs for p in stalled)
    if non_converged:
        logger.warning("inner solver hit max_iter at %d (restart, iteration) points", len(non_converged))
    return OptimizationRun(
        traces=tuple(trace for trace, _, _ in runs),
        best_ensemble=runs[best][1],
        best_leakage_bits=runs[best][0][-1],
        best_restart=best,
        non_converged=non_converged,
    )


LabelMap = Union[Callable[[int], int], Sequence[int]]


def basis_encoding(alphabet_size: int, dim: int, tau: Optional[LabelMap] = None) -> Ensemble:
    """rho^x = |tau(x)><tau(x)| for an injective tau into the computational basis."""
    if alphabet_size < 1:
        raise InvalidArgumentError("alphabet size must be positive")
    if dim < alphabet_size:
        raise InvalidArgumentError(f"no injective map from {alphabet_size} labels into {dim} basis states")
    if tau is None:
        targets = list(range(alphabet_size))
    elif callable(tau):
        targets = [int(tau(x)) for x in range(alphabet_size)]
    else:
        targets = [int(t) for t in tau]
        if len(targets) != alphabet_size:
            raise InvalidArgumentError(f"label map has {len(targets)} entries for {alphabet_size} labels")
    if len(set(targets)) != len(targets):
        raise InvalidArgumentError("label map is not injective")
    if any(t < 0 or t >= dim for t in targets):
        raise InvalidArgumentError(f"label map leaves the basis range [0, {dim})")
    return Ensemble.from_pure_states([PureState.basis(dim, t) for t in targets])


def wrapped_basis_encoding(alphabet_size: int, dim: int) -> Ensemble:
    """x -> |x mod d>; reaches log2 min(|X|, d) bits."""
    if alphabet_size < 1:
        raise InvalidArgumentError("alphabet size must be positive")
    return Ensemble.from_pure_states([PureState.basis(dim, x % dim) for x in range(alphabet_size)])


def qubit_requirements(alphabet_size: int) -> Tuple[int, int]:
    """(qubits needed by the leakage cap, qubits that basis encoding uses).

    Leakage log2|X| needs 2n >= log2|X|; basis encoding needs n >= log2|X|.
    """
    if alphabet_size < 1:
        raise InvalidArgumentError("alphabet size must be positive")
    necessary = 0
    while 4 ** necessary < alphabet_size:
        necessary += 1
    sufficient = (alphabet_size - 1).bit_length()
    return necessary, sufficient


def _sweep_point(task: Tuple[int, int, OptimizerConfig]) -> SweepPoint:
    alphabet_size, qubits, cfg = task
    dim = 2 ** qubits
    problem = EncodingProblem(alphabet_size=alphabet_size, dim=dim)
    cold = optimize_encoding(problem, cfg, workers=1).best_leakage_bits
    if dim >= alphabet_size:
        start = basis_encoding(alphabet_size, dim)
    else:
        start = wrapped_basis_encoding(alphabet_size, dim)
    warm = optimize_encoding(problem, cfg, initial=start, workers=1).best_leakage_bits
    best = max(cold, warm)
    logger.info("sweep |X|=%d qubits=%d: %.6f bits", alphabet_size, qubits, best)
    return SweepPoint(qubits=qubits, dim=dim, leakage_bits=best, cold_bits=cold, warm_bits=warm)


def sweep_qubits(alphabet_size: int, qubit_range: Iterable[int], cfg: Optional[OptimizerConfig] = None,
                 *, workers: Optional[int] = None) -> List[SweepPoint]:
    """Best leakage for d = 2^n over the qubit range, one point per n in order.

    Each point runs a cold search from Haar-random encodings next to a warm
    start from basis encoding (wrapped modulo d when d < |X|) and keeps the larger.
    """
    cfg = cfg or OptimizerConfig()
    qubits = [int(n) for n in qubit_range]
    if any(n < 0 for n in qubits):
        raise InvalidArgumentError("qubit counts must be non-negative")
    if alphabet_size < 1:
        raise InvalidArgumentError("alphabet size must be positive")
    return run_tasks(_sweep_point, [(alphabet_size, n, cfg) for n in qubits], workers)

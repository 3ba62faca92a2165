"""Maximal quantum leakage of an ensemble.

2^Q = sup_F sum_y max_x tr(rho^x F_y) is computed by alternating two updates:
each outcome y is assigned its best label x*(y), then the POVM takes one
discrimination fixed-point step F_y <- L^{-1/2} s_y F_y s_y L^{-1/2} with
s_y = rho^{x*(y)} and L = sum_y s_y F_y s_y. Several starts are run and the best
one is kept; a dual certificate bounds how far it can be from the optimum.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import SolverConfig, get_runtime_config
from .errors import DegenerateEnsembleError, DimensionMismatchError, InvalidArgumentError
from .operators import Ensemble, Povm, PureState, sqrt_pinv, support_projector
from .parallel import run_tasks
from .stochastic import STREAM_SOLVER, derive_rng, normalize_to_povm
from .validators import povm_stack

try:
    from icecream import ic
except ImportError:  # pragma: no cover
    def ic(*args, **kwargs):  # type: ignore
        return args if len(args) != 1 else args[0]

logger = logging.getLogger(__name__)

DECREASE_TOL = 1e-12
AUDIT_MAX_DIM = 3
# Iterations between dual-gap checks inside a trajectory.
DUAL_CHECK_EVERY = 10
AUDIT_MAX_ALPHABET = 3


@dataclass(frozen=True, eq=False)
class LeakageResult:
    leakage_bits: float
    objective: float
    povm: Povm
    assignment: Tuple[int, ...]
    dual_upper_bound_bits: float
    iterations: int
    objective_trace: Tuple[float, ...]
    converged: bool
    start: str = "random:0"
    rejected_steps: int = 0

    def to_dict(self) -> Dict[str, Any]:
        from .serialize import matrix_to_json

        return {
            "leakage_bits": self.leakage_bits,
            "dual_upper_bound_bits": self.dual_upper_bound_bits,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": list(self.objective_trace),
            "povm": [matrix_to_json(f) for f in self.povm.elements],
            "assignment": list(self.assignment),
        }


def _check_dims(stack: np.ndarray, ensemble: Ensemble) -> None:
    if stack.shape[1] != ensemble.dim:
        raise DimensionMismatchError(f"POVM acts on dim {stack.shape[1]}, ensemble on dim {ensemble.dim}")


def _overlaps(f_stack: np.ndarray, r_stack: np.ndarray) -> np.ndarray:
    # P[x, y] = tr(rho^x F_y)
    return np.einsum("xij,yji->xy", r_stack, f_stack).real


def _support_stack(ensemble: Ensemble) -> Tuple[np.ndarray, np.ndarray]:
    support = np.asarray(ensemble.support, dtype=int)
    if support.size == 0:
        raise InvalidArgumentError("the ensemble has an empty support")
    return support, ensemble.stack[support]


def assignment_update(povm: Any, ensemble: Ensemble) -> Tuple[int, ...]:
    """x*(y) = argmax over supported labels of tr(rho^x F_y); smallest index wins ties."""
    f = povm_stack(povm)
    _check_dims(f, ensemble)
    support, rs = _support_stack(ensemble)
    return tuple(int(support[i]) for i in _overlaps(f, rs).argmax(axis=0))


def objective(povm: Any, ensemble: Ensemble) -> float:
    """sum_y max_x tr(rho^x F_y) over the support of the ensemble."""
    f = povm_stack(povm)
    _check_dims(f, ensemble)
    _, rs = _support_stack(ensemble)
    return float(_overlaps(f, rs).max(axis=0).sum())


def _fixed_point(f: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    m = sigma @ f @ sigma
    lam = m.sum(axis=0)
    if float(np.max(np.abs(lam))) <= 1e-15:
        raise DegenerateEnsembleError("sum_y s_y F_y s_y vanishes; the update is undefined")
    a = sqrt_pinv(lam)
    kernel = np.eye(lam.shape[0]) - support_projector(lam)
    out = a @ m @ a + kernel / f.shape[0]
    return (out + np.conj(np.swapaxes(out, 1, 2))) / 2


def povm_fixed_point_step(povm: Any, sigma: Sequence[Any]) -> Povm:
    """One discrimination fixed-point update with sigma_y indexed by outcome.

    The kernel projector of L is shared uniformly by the outcomes so the result
    sums to the identity exactly.
    """
    f = povm_stack(povm)
    s = povm_stack(sigma)
    if s.shape != f.shape:
        raise DimensionMismatchError(f"sigma stack {s.shape} does not match POVM {f.shape}")
    return Povm(_fixed_point(f, s))


def perturbed_uniform_start(dim: int, outcomes: int, rng: np.random.Generator,
                            magnitude: float = 1e-3) -> np.ndarray:
    """I/|Y| plus a random rank-one kick per outcome, renormalized to a POVM."""
    vecs = rng.standard_normal((outcomes, dim)) + 1j * rng.standard_normal((outcomes, dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    kicks = np.einsum("yi,yj->yij", vecs, vecs.conj())
    raw = np.eye(dim)[None, :, :] / outcomes + magnitude * kicks
    return normalize_to_povm(raw)


def pretty_good_start(ensemble: Ensemble, outcomes: int) -> Optional[np.ndarray]:
    """Pretty-good measurement S^{-1/2} rho^x S^{-1/2}, padded with empty outcomes."""
    support, rs = _support_stack(ensemble)
    if support.size > outcomes:
        return None
    dim = ensemble.dim
    s = rs.sum(axis=0)
    a = sqrt_pinv(s)
    f = np.zeros((outcomes, dim, dim), dtype=complex)
    f[: support.size] = a @ rs @ a
    f += (np.eye(dim) - support_projector(s))[None, :, :] / outcomes
    return f


@dataclass
class _Trajectory:
    start: str
    povm: np.ndarray
    objective: float
    trace: List[float]
    converged: bool
    rejected: int


def _dual_gap_closed(f: np.ndarray, sigma: np.ndarray, rs: np.ndarray, value: float, tol: float) -> bool:
    y0 = _hermitian_part(np.einsum("yij,yjk->ik", sigma, f))
    return _dual_value(y0, rs) - value < tol * value


def _iterate(ensemble: Ensemble, cfg: SolverConfig, f0: np.ndarray, start: str) -> _Trajectory:
    debug = get_runtime_config().debug
    _, rs = _support_stack(ensemble)
    f = f0
    p = _overlaps(f, rs)
    value = float(p.max(axis=0).sum())
    trace = [value]
    converged, rejected = False, 0
    if _dual_gap_closed(f, rs[p.argmax(axis=0)], rs, value, cfg.tol):
        return _Trajectory(start=start, povm=f, objective=value, trace=trace, converged=True, rejected=0)
    for it in range(1, cfg.max_iter + 1):
        sigma = rs[p.argmax(axis=0)]
        f_new = _fixed_point(f, sigma)
        p_new = _overlaps(f_new, rs)
        value_new = float(p_new.max(axis=0).sum())
        change = (value_new - value) / max(value, 1e-300)
        if value_new < value - DECREASE_TOL * max(1.0, value):
            rejected += 1
            converged = abs(change) < cfg.tol
            logger.warning("start %s: fixed-point step %d lowered the objective by %.3g; stopping",
                           start, it, value - value_new)
            break
        f, p, value = f_new, p_new, value_new
        trace.append(value)
        if debug:
            ic(start, it, value)
        if abs(change) < cfg.tol:
            converged = True
            break
        if it % DUAL_CHECK_EVERY == 0 and _dual_gap_closed(f, rs[p.argmax(axis=0)], rs, value, cfg.tol):
            converged = True
            break
    return _Trajectory(start=start, povm=f, objective=value, trace=trace, converged=converged, rejected=rejected)


def _run_start(task: Tuple[Ensemble, SolverConfig, str, Optional[np.ndarray]]) -> _Trajectory:
    ensemble, cfg, start, f0 = task
    if f0 is None:
        index = int(start.split(":")[1])
        f0 = perturbed_uniform_start(ensemble.dim, cfg.outcomes_for(ensemble.dim),
                                     derive_rng(cfg.seed, STREAM_SOLVER, index), cfg.perturbation)
    return _iterate(ensemble, cfg, f0, start)


def compute_leakage(
    ensemble: Ensemble,
    cfg: Optional[SolverConfig] = None,
    *,
    initial_povm: Optional[Any] = None,
    workers: Optional[int] = None,
) -> LeakageResult:
    """Maximal quantum leakage Q(X->A) in bits.

    With ``initial_povm`` the solver runs one warm-started trajectory; otherwise it
    runs the pretty-good-measurement start (if enabled) plus ``cfg.restarts``
    perturbed uniform starts and keeps the best.
    """
    cfg = cfg or SolverConfig()
    tasks: List[Tuple[Ensemble, SolverConfig, str, Optional[np.ndarray]]] = []
    if initial_povm is not None:
        f0 = povm_stack(initial_povm)
        _check_dims(f0, ensemble)
        tasks.append((ensemble, cfg, "warm", f0))
    else:
        if cfg.pretty_good_start:
            pgm = pretty_good_start(ensemble, cfg.outcomes_for(ensemble.dim))
            if pgm is not None:
                tasks.append((ensemble, cfg, "pgm", pgm))
        tasks.extend((ensemble, cfg, f"random:{r}", None) for r in range(cfg.restarts))

    runs = run_tasks(_run_start, tasks, workers)
    best = runs[0]
    for run in runs[1:]:
        if run.objective > best.objective + DECREASE_TOL * max(1.0, best.objective):
            best = run

    povm = Povm(best.povm)
    value = best.objective
    bound = global_dual_bound(povm, ensemble)
    result = LeakageResult(
        leakage_bits=max(0.0, math.log2(value)),
        objective=max(1.0, value),
        povm=povm,
        assignment=assignment_update(povm, ensemble),
        dual_upper_bound_bits=math.log2(max(bound, 1.0)),
        iterations=len(best.trace) - 1,
        objective_trace=tuple(best.trace),
        converged=best.converged,
        start=best.start,
        rejected_steps=sum(r.rejected for r in runs),
    )
    if not result.converged:
        logger.warning("leakage solver did not converge within %d iterations (start %s)", cfg.max_iter, best.start)
    logger.info("leakage %.9f bits (dual bound %.9f) from start %s after %d iterations",
                result.leakage_bits, result.dual_upper_bound_bits, best.start, result.iterations)
    return result


def _dual_value(y0: np.ndarray, candidates: np.ndarray) -> float:
    # tr(Y0) + d * max(0, -lambda_min(Y0 - s)) over the candidate states s
    gaps = np.linalg.eigvalsh(y0[None, :, :] - candidates)[:, 0]
    delta = max(0.0, float(-gaps.min()))
    return float(np.trace(y0).real) + y0.shape[0] * delta


def _hermitian_part(w: np.ndarray) -> np.ndarray:
    return (w + w.conj().T) / 2


def dual_certificate(povm: Any, ensemble: Ensemble, assignment: Sequence[int]) -> float:
    """Upper bound on sup_F sum_y tr(rho^{x(y)} F_y) for the fixed assignment.

    Y0 = Herm(sum_y s_y F_y) is shifted by the smallest multiple of I making it
    dominate every assigned state, which gives a dual-feasible point.
    """
    f = povm_stack(povm)
    _check_dims(f, ensemble)
    assignment = np.asarray(list(assignment), dtype=int)
    if assignment.shape[0] != f.shape[0]:
        raise InvalidArgumentError(f"assignment covers {assignment.shape[0]} outcomes, POVM has {f.shape[0]}")
    sigma = ensemble.stack[assignment]
    y0 = _hermitian_part(np.einsum("yij,yjk->ik", sigma, f))
    return _dual_value(y0, ensemble.stack[np.unique(assignment)])


def global_dual_bound(povm: Any, ensemble: Ensemble) -> float:
    """Upper bound on 2^Q: Y0 from the current assignment, shifted to dominate every supported state."""
    f = povm_stack(povm)
    _check_dims(f, ensemble)
    _, rs = _support_stack(ensemble)
    sigma = rs[_overlaps(f, rs).argmax(axis=0)]
    y0 = _hermitian_part(np.einsum("yij,yjk->ik", sigma, f))
    return _dual_value(y0, rs)


def audit_dual_bound(povm: Any, ensemble: Ensemble) -> float:
    """Brute-force audit: max of dual_certificate over every assignment y -> x.

    Only for d <= 3 and at most 3 supported labels, where |X|^|Y| stays small.
    """
    f = povm_stack(povm)
    support = ensemble.support
    if ensemble.dim > AUDIT_MAX_DIM or len(support) > AUDIT_MAX_ALPHABET:
        raise InvalidArgumentError(
            f"audit mode needs d <= {AUDIT_MAX_DIM} and |X| <= {AUDIT_MAX_ALPHABET}, "
            f"got d={ensemble.dim}, |X|={len(support)}")
    return max(dual_certificate(f, ensemble, a) for a in itertools.product(support, repeat=f.shape[0]))


def two_state_oracle(psi0: PureState, psi1: PureState) -> float:
    """log2(1 + sqrt(1 - |<psi0|psi1>|^2)), the leakage of a pure-state pair."""
    if psi0.dim != psi1.dim:
        raise DimensionMismatchError(f"states have dims {psi0.dim} and {psi1.dim}")
    overlap = abs(np.vdot(psi0.amplitudes, psi1.amplitudes)) ** 2
    return math.log2(1.0 + math.sqrt(max(0.0, 1.0 - overlap)))


def leakage_bounds(ensemble: Ensemble) -> Tuple[float, float]:
    """(min(log2|X|, 2 log2 d), min(log2|X|, log2 d)) with |X| the support size."""
    n = len(ensemble.support)
    d = ensemble.dim
    return min(math.log2(n), 2 * math.log2(d)), min(math.log2(n), math.log2(d))

"""Invariant checks for density operators and POVMs.

Both validators return ``Ok(True)`` or ``Err(violations)`` so callers can report
every problem at once instead of stopping at the first exception.
"""
from __future__ import annotations

from typing import Any, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel
from result import Err, Ok, Result

from .errors import DimensionMismatchError, InvalidArgumentError

PSD_TOL = 1e-10
TRACE_TOL = 1e-10
POVM_TOL = 1e-9
HERMITIAN_TOL = 1e-12


class Violation(BaseModel):
    kind: str
    where: str
    value: float
    msg: str


def as_matrix(op: Any) -> np.ndarray:
    """Return the complex ndarray behind an operator-like object."""
    arr = getattr(op, "matrix", op)
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def hermitian_residual(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0


def validate_hermitian(op: Any, tol: float = HERMITIAN_TOL) -> Result[bool, List[Violation]]:
    arr = as_matrix(op)
    if not np.all(np.isfinite(arr)):
        return Err([Violation(kind="NON_FINITE", where="matrix", value=float("nan"),
                              msg="matrix has non-finite entries")])
    resid = hermitian_residual(arr)
    scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0)
    if resid > tol * scale:
        return Err([Violation(kind="NOT_HERMITIAN", where="matrix", value=resid,
                              msg=f"max |H - H^dagger| = {resid:.3g}")])
    return Ok(True)


def validate_density(rho: Any, tol: float = PSD_TOL) -> Result[bool, List[Violation]]:
    """Check positivity and unit trace of a Hermitian matrix."""
    arr = as_matrix(rho)
    herm = validate_hermitian(arr)
    if herm.is_err():
        return herm
    h = (arr + arr.conj().T) / 2
    violations: List[Violation] = []
    lam_min = float(np.linalg.eigvalsh(h)[0])
    if lam_min < -tol:
        violations.append(Violation(kind="NEGATIVE_EIGENVALUE", where="state", value=lam_min,
                                    msg=f"negative eigenvalue {lam_min:.6g}"))
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > tol:
        violations.append(Violation(kind="TRACE", where="state", value=tr,
                                    msg=f"trace {tr:.6g} differs from 1"))
    return Err(violations) if violations else Ok(True)


def validate_povm(
    povm: Union[Any, Sequence[Any]],
    tol: float = POVM_TOL,
    *,
    psd_tol: Optional[float] = None,
) -> Result[bool, List[Violation]]:
    """Check each element for negativity and the family for completeness.

    ``psd_tol`` defaults to ``tol``; the completeness residual is the max-entry
    norm of sum_y F_y - I.
    """
    stack = povm_stack(povm)
    psd_tol = tol if psd_tol is None else psd_tol
    violations: List[Violation] = []
    herm = np.max(np.abs(stack - np.conj(np.swapaxes(stack, 1, 2))), axis=(1, 2))
    for y in np.nonzero(herm > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(stack)))))[0]:
        violations.append(Violation(kind="NOT_HERMITIAN", where=f"element {int(y)}", value=float(herm[y]),
                                    msg=f"element {int(y)} is not Hermitian"))
    sym = (stack + np.conj(np.swapaxes(stack, 1, 2))) / 2
    mins = np.linalg.eigvalsh(sym)[:, 0]
    for y in np.nonzero(mins < -psd_tol)[0]:
        violations.append(Violation(kind="NEGATIVE_ELEMENT", where=f"element {int(y)}", value=float(mins[y]),
                                    msg=f"element {int(y)} has eigenvalue {mins[y]:.6g}"))
    dim = stack.shape[1]
    residual = float(np.max(np.abs(sym.sum(axis=0) - np.eye(dim))))
    if residual > tol:
        violations.append(Violation(kind="COMPLETENESS", where="sum", value=residual,
                                    msg=f"completeness residual {residual:.6g}"))
    return Err(violations) if violations else Ok(True)


def povm_stack(povm: Union[Any, Sequence[Any]]) -> np.ndarray:
    """Return POVM elements as a (|Y|, d, d) complex array."""
    elements = getattr(povm, "elements", povm)
    if isinstance(elements, np.ndarray) and elements.ndim == 3:
        stack = elements.astype(complex, copy=False)
    else:
        mats = [as_matrix(e) for e in elements]
        if not mats:
            raise InvalidArgumentError("a POVM needs at least one element")
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise DimensionMismatchError(f"POVM elements have mixed dimensions {sorted(dims)}")
        stack = np.stack(mats)
    if stack.shape[0] == 0 or stack.shape[1] != stack.shape[2]:
        raise InvalidArgumentError(f"bad POVM element stack shape {stack.shape}")
    return stack


def describe(violations: List[Violation]) -> str:
    return "; ".join(v.msg for v in violations)

"""JSON matrices/ensembles and CSV tables.

Matrices are written as {"dim", "re", "im"} with Python's shortest round-trip
float repr, so reading back gives the same bits. CSV floats use 9 significant
digits.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from .errors import InvalidArgumentError
from .operators import DensityOperator, Ensemble, PureState
from .validators import as_matrix

CSV_FLOAT_FORMAT = "%.9g"

PathLike = Union[str, Path]


def matrix_to_json(m: Any) -> Dict[str, Any]:
    arr = as_matrix(m)
    return {"dim": int(arr.shape[0]), "re": arr.real.tolist(), "im": arr.imag.tolist()}


def _complex_array(obj: Mapping[str, Any]) -> np.ndarray:
    if not isinstance(obj, Mapping) or "re" not in obj:
        raise InvalidArgumentError("matrix object needs 're' (and optionally 'im') entries")
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"matrix entries must be real numbers: {exc}") from exc
    if re.shape != im.shape:
        raise InvalidArgumentError(f"'re' shape {re.shape} and 'im' shape {im.shape} differ")
    if re.ndim == 0:
        raise InvalidArgumentError("matrix entries must be a list, not a scalar")
    arr = re + 1j * im
    dim = obj.get("dim")
    if dim is not None and arr.shape[0] != int(dim):
        raise InvalidArgumentError(f"declared dim {dim} but got {arr.shape[0]} rows")
    return arr


def matrix_from_json(obj: Mapping[str, Any]) -> np.ndarray:
    arr = _complex_array(obj)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def ensemble_to_json(ensemble: Ensemble) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "alphabet": list(ensemble.alphabet),
        "dim": ensemble.dim,
        "states": [matrix_to_json(s) for s in ensemble.states],
    }
    if ensemble.prior is not None:
        out["prior"] = list(ensemble.prior)
    return out


def ensemble_from_json(obj: Mapping[str, Any]) -> Ensemble:
    """Read {"alphabet", "dim", "states", "prior"?}; a state may be a matrix or a unit vector."""
    try:
        states_obj = obj["states"]
    except (KeyError, TypeError):
        raise InvalidArgumentError("ensemble object needs a 'states' list")
    if not isinstance(states_obj, list):
        raise InvalidArgumentError(f"'states' must be a list, got {type(states_obj).__name__}")
    states: List[DensityOperator] = []
    for s in states_obj:
        arr = _complex_array(s)
        if arr.ndim == 1:
            states.append(PureState(arr).density())
        else:
            states.append(DensityOperator(matrix_from_json(s)))
    alphabet = obj.get("alphabet")
    if alphabet is None:
        alphabet = list(range(len(states)))
    dim = obj.get("dim")
    if dim is not None and states and states[0].dim != int(dim):
        raise InvalidArgumentError(f"declared dim {dim} but states have dim {states[0].dim}")
    try:
        return Ensemble(tuple(alphabet), tuple(states), obj.get("prior"))
    except TypeError as exc:
        raise InvalidArgumentError(f"malformed ensemble object: {exc}") from exc


def load_ensemble(path: PathLike) -> Ensemble:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read ensemble file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"ensemble file {path} is not valid JSON: {exc}") from exc
    return ensemble_from_json(obj)


def write_json(obj: Any, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def write_csv(frame: pd.DataFrame, path: PathLike) -> None:
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)


def trace_frame(objective_trace: Sequence[float]) -> pd.DataFrame:
    values = np.asarray(objective_trace, dtype=float)
    return pd.DataFrame({
        "iteration": np.arange(values.size),
        "objective": values,
        "leakage_bits": np.log2(np.maximum(values, 1.0)),
    })


def runs_frame(traces: Sequence[Sequence[float]]) -> pd.DataFrame:
    """Long format: run_id, iteration, leakage_bits."""
    rows = [(r, k, float(v)) for r, trace in enumerate(traces) for k, v in enumerate(trace)]
    return pd.DataFrame(rows, columns=["run_id", "iteration", "leakage_bits"])


def sweep_frame(points: Iterable[Any]) -> pd.DataFrame:
    rows = [(p.qubits, p.leakage_bits) for p in points]
    return pd.DataFrame(rows, columns=["qubits", "leakage_bits"])

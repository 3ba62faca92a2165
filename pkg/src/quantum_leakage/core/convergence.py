"""Trace statistics for restart studies."""
from __future__ import annotations

from typing import List, Sequence

import numpy as np
import pandas as pd


def summarize_traces(traces: Sequence[Sequence[float]]) -> pd.DataFrame:
    """Per-iteration median/min/max across restarts.

    Columns: iteration, median_bits, min_bits, max_bits. All traces must have
    the same length.
    """
    if not traces:
        return pd.DataFrame(columns=["iteration", "median_bits", "min_bits", "max_bits"])
    lengths = {len(t) for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have different lengths {sorted(lengths)}")
    m = np.asarray(traces, dtype=float)
    return pd.DataFrame({
        "iteration": np.arange(m.shape[1]),
        "median_bits": np.median(m, axis=0),
        "min_bits": m.min(axis=0),
        "max_bits": m.max(axis=0),
    })


def _moving_avg(x: Sequence[float], window: int) -> List[float]:
    if not len(x):
        return []
    window = max(1, min(window, len(x)))
    if window == 1:
        return list(x)
    out: List[float] = []
    s = sum(x[:window])
    out.extend([s / window] * (window - 1))
    for i in range(window, len(x) + 1):
        out.append(s / window)
        if i < len(x):
            s += x[i] - x[i - window]
    return out


def detect_convergence_index(series: Sequence[float], *, window: int = 5, eps: float = 0.01) -> int:
    """First index after which the moving average stays within ``eps`` of its final level."""
    series = [float(v) for v in series]
    if not series:
        return 0
    ma = _moving_avg(series, window)
    final_level = ma[-1]
    idx = len(ma) - 1
    while idx > 0 and abs(ma[idx - 1] - final_level) <= eps:
        idx -= 1
    return idx

"""Shared test helpers: independent oracles and small builders."""
from __future__ import annotations

import numpy as np

from quantum_leakage.core.operators import PureState


def pure_pair_with_overlap(overlap: float, dim: int = 2):
    """|0> and cos t|0> + sin t|1> with |<psi0|psi1>| = overlap."""
    theta = np.arccos(overlap)
    a = np.zeros(dim, dtype=complex)
    a[0] = 1.0
    b = np.zeros(dim, dtype=complex)
    b[0], b[1] = np.cos(theta), np.sin(theta)
    return PureState(a), PureState.normalized(b)


def brute_force_accuracy(pipeline, joint) -> float:
    """sum_{x,y,z} P(x,z) tr(F_y N(rho^x)) gamma[z,y] with plain loops."""
    kraus = pipeline.channel.kraus
    total = 0.0
    for x, rho in enumerate(pipeline.encoding.stack):
        out = sum(k @ rho @ k.conj().T for k in kraus)
        for y, f in enumerate(pipeline.measurement.elements):
            p_y = np.trace(f @ out).real
            for z in range(joint.probs.shape[1]):
                total += joint.probs[x, z] * p_y * pipeline.post.gamma[z, y]
    return float(total)


def completeness_residual(elements) -> float:
    stack = np.asarray(elements)
    return float(np.max(np.abs(stack.sum(axis=0) - np.eye(stack.shape[1]))))


def min_eigenvalue(elements) -> float:
    return float(min(np.linalg.eigvalsh(e)[0] for e in np.asarray(elements)))

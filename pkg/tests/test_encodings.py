import math

import numpy as np
import pytest

from quantum_leakage.config import SolverConfig
from quantum_leakage.core.encodings import amplitude_encoding, angle_encoding, compare_encodings
from quantum_leakage.core.errors import InvalidArgumentError


def test_angle_encoding_single_qubit():
    ens = angle_encoding(2, 1)
    assert np.allclose(ens.stack[0], np.diag([1.0, 0.0]))
    c = math.cos(math.pi / 4)
    assert np.allclose(ens.stack[1], np.full((2, 2), c * c))


def test_angle_encoding_tensor_power():
    ens = angle_encoding(3, 2)
    assert ens.dim == 4
    assert ens.size == 3
    with pytest.raises(InvalidArgumentError):
        angle_encoding(3, 0)


def test_amplitude_encoding_pads_and_normalizes():
    ens = amplitude_encoding([[1.0, 1.0, 1.0], [0.0, 0.0, 2.0]])
    assert ens.dim == 4
    assert np.allclose(np.diag(ens.stack[0]).real, [1 / 3, 1 / 3, 1 / 3, 0.0])
    assert np.allclose(np.diag(ens.stack[1]).real, [0.0, 0.0, 1.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        amplitude_encoding([[0.0, 0.0]])


def test_compare_encodings_basis_wins_when_it_fits():
    out = compare_encodings(4, 2, SolverConfig(restarts=2))
    assert set(out) == {"basis", "angle", "random"}
    assert out["basis"] == pytest.approx(2.0, abs=1e-9)
    assert out["angle"] <= 2.0 + 1e-9
    assert out["random"] <= 2.0 + 1e-9

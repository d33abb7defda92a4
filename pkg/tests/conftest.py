"""Pytest fixtures for qpt-gap."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from qpt_gap.ising_core import IsingProblem
from qpt_gap.wmis import Fig2Params, fig2_problem

FIG2 = Fig2Params(w_g=1.0, w_l=1.8, j=2.0)


@pytest.fixture
def fig2_params() -> Fig2Params:
    return FIG2


@pytest.fixture
def fig2() -> IsingProblem:
    """The 15-qubit two-cluster instance at (w_G, w_L, J) = (1, 1.8, 2), Δ = 1."""
    return fig2_problem(FIG2, 1.0)


def make_random_problem(
    n_qubits: int, seed: int, *, density: float = 0.5, delta: float = 1.0
) -> IsingProblem:
    rng = np.random.default_rng(seed)
    h = rng.uniform(-1.0, 1.0, size=n_qubits)
    couplings = [
        (i, j, float(rng.uniform(-1.0, 1.0)))
        for i in range(n_qubits)
        for j in range(i + 1, n_qubits)
        if rng.random() < density
    ]
    return IsingProblem(n_qubits=n_qubits, h=tuple(h), couplings=tuple(couplings), delta=delta)


@pytest.fixture
def random_problem() -> Callable[..., IsingProblem]:
    """Factory for random dense-ish instances with fields and couplings in [-1, 1]."""
    return make_random_problem


@pytest.fixture
def double_well() -> IsingProblem:
    """Two ferromagnetically coupled spins with no fields."""
    return IsingProblem(n_qubits=2, h=(0.0, 0.0), couplings=((0, 1, -1.0),), delta=1.0)

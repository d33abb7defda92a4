"""
qpt-gap - first-order quantum phase transitions in adiabatic optimization.

Exact diagonalization of interpolated transverse-field Ising Hamiltonians next
to a perturbative prediction of where the anticrossing sits and how small the
gap gets.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = [
    "IsingProblem",
    "SpinConfiguration",
    "enumerate_minima",
    "lowest_eigenpairs",
    "sweep",
    "predict_crossing",
    "fig2_problem",
    "main",
    "__version__",
]

_EXPORTS = {
    "IsingProblem": "ising_core",
    "SpinConfiguration": "ising_core",
    "enumerate_minima": "ising_core",
    "lowest_eigenpairs": "spectral",
    "sweep": "spectral",
    "predict_crossing": "perturbation",
    "fig2_problem": "wmis",
    "main": "cli",
}


def __getattr__(name: str):
    """Lazy imports so ``import qpt_gap`` does not pull in scipy or networkx."""

    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    from importlib import import_module

    return getattr(import_module(f"{__name__}.{module}"), name)

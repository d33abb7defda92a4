"""
Quantum side: H(λ) = (1-λ) Δ Σ σ^x_i + λ H_P, its lowest eigenpairs, λ sweeps,
minimum-gap refinement and the ground-state order parameters S and M.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, Literal

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator

from qpt_gap.errors import CapacityError, InputError, SolverError
from qpt_gap.ising_core import IsingProblem, classical_energies, flip_axis, problem_hash
from qpt_gap.lanczos import BlockLanczos, Preconditioner, SolverOptions

logger = logging.getLogger(__name__)

MAX_K = 8
DENSE_MAX_QUBITS = 12
GOLDEN_INTERVAL = 1e-10

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI_SQUARE = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class InterpolatedHamiltonian:
    problem: IsingProblem
    lam: float

    def __post_init__(self) -> None:
        lam = float(self.lam)
        if not (math.isfinite(lam) and 0.0 <= lam <= 1.0):
            raise InputError(f"λ must lie in [0, 1], got {self.lam}")
        object.__setattr__(self, "lam", lam)

    @property
    def dimension(self) -> int:
        return self.problem.dimension

    @property
    def transverse(self) -> float:
        return (1.0 - self.lam) * self.problem.delta

    def diagonal(self) -> np.ndarray:
        return self.lam * classical_energies(self.problem)

    def spectral_scale(self) -> float:
        """Row-sum bound on ||H||: max |diagonal| + N (1-λ) Δ."""
        diag = self.diagonal()
        return float(np.abs(diag).max()) + self.problem.n_qubits * self.transverse


@dataclass(frozen=True, eq=False)
class EigenResult:
    lam: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norms: np.ndarray
    matvecs: int = 0

    @property
    def gap(self) -> float:
        if self.eigenvalues.size < 2:
            return math.nan
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    @property
    def ground_vector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


@dataclass(frozen=True)
class SweepRow:
    lam: float
    energies: tuple[float, ...]
    gap: float
    S: float
    M: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    parameters: dict[str, Any] = field(default_factory=dict)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([row.lam for row in self.rows])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([row.gap for row in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])

    def level(self, index: int) -> np.ndarray:
        return np.array([row.energies[index] for row in self.rows])


@dataclass(frozen=True)
class AnticrossingReport:
    lambda_star_exact: float
    g_min: float
    bracket: tuple[float, float]
    evaluations: int


class ScaleRule(StrEnum):
    USER_SUPPLIED = "user_supplied"
    MAX_LOCAL_SCALE = "max_local_scale"


@dataclass(frozen=True)
class ScaleEstimate:
    calE: float
    rule: ScaleRule
    lambda_c: float

    def __post_init__(self) -> None:
        if not 0.0 < self.lambda_c < 1.0:
            raise InputError(f"λ_c must lie in (0, 1), got {self.lambda_c}")


def apply_hamiltonian(H: InterpolatedHamiltonian, v: np.ndarray) -> np.ndarray:
    """Matrix-free H·v for a vector or a block of column vectors."""
    v = np.asarray(v, dtype=np.float64)
    n = H.problem.n_qubits
    if v.ndim not in (1, 2) or v.shape[0] != H.dimension:
        raise InputError(f"vector of shape {v.shape} does not match dimension {H.dimension}")
    diag = H.diagonal()
    out = diag[:, None] * v if v.ndim == 2 else diag * v
    coefficient = H.transverse
    if coefficient != 0.0:
        for k in range(n):
            out += coefficient * flip_axis(v, n, k)
    return out


def as_linear_operator(H: InterpolatedHamiltonian) -> LinearOperator:
    dim = H.dimension
    return LinearOperator(
        (dim, dim),
        matvec=lambda x: apply_hamiltonian(H, np.ravel(x)),
        matmat=lambda x: apply_hamiltonian(H, x),
        rmatvec=lambda x: apply_hamiltonian(H, np.ravel(x)),
        dtype=np.float64,
    )


def dense_matrix(H: InterpolatedHamiltonian) -> np.ndarray:
    if H.problem.n_qubits > DENSE_MAX_QUBITS:
        raise CapacityError(f"dense construction supports at most {DENSE_MAX_QUBITS} qubits")
    dim = H.dimension
    matrix = np.diag(H.diagonal())
    states = np.arange(dim)
    for k in range(H.problem.n_qubits):
        matrix[states, states ^ (1 << k)] += H.transverse
    return matrix


def dense_spectrum(H: InterpolatedHamiltonian) -> np.ndarray:
    return scipy.linalg.eigh(dense_matrix(H), eigvals_only=True)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    vectors = np.array(vectors, dtype=np.float64, copy=True)
    for j in range(vectors.shape[1]):
        column = vectors[:, j]
        threshold = 1e-8 * np.abs(column).max()
        first = int(np.argmax(np.abs(column) > threshold))
        if column[first] < 0:
            vectors[:, j] = -column
    return vectors


def walsh_hadamard(values: np.ndarray, n_qubits: int) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the basis axis.

    Index ``m`` of the result holds the overlap with the σ^x product state whose
    qubits set in ``m`` point along -x. Applying the transform twice multiplies
    by ``2**n_qubits``.
    """
    out = np.array(values, dtype=np.float64, copy=True)
    dim = out.shape[0]
    if dim != 1 << n_qubits:
        raise InputError(f"array of length {dim} does not match {n_qubits} qubits")
    flat = out.reshape(dim, -1)
    for k in range(n_qubits):
        view = flat.reshape(dim >> (k + 1), 2, 1 << k, flat.shape[1])
        upper = view[:, 1].copy()
        view[:, 1] = view[:, 0] - upper
        view[:, 0] += upper
    return out


def _floored(denominator: np.ndarray, floor: float) -> np.ndarray:
    return np.where(np.abs(denominator) < floor, np.copysign(floor, denominator), denominator)


def diagonal_preconditioner(H: InterpolatedHamiltonian) -> Preconditioner:
    """Correction ``r / (λ E_P - θ)``, for the regime where H_P dominates."""
    diag = H.diagonal()
    floor = 1e-8 * H.spectral_scale()

    def apply(residual: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return residual / _floored(diag[:, None] - theta[None, :], floor)

    return apply


def hadamard_preconditioner(H: InterpolatedHamiltonian) -> Preconditioner:
    """Inverse of the driver plus the mean diagonal, applied in the σ^x basis."""
    n = H.problem.n_qubits
    dim = H.dimension
    down = np.bitwise_count(np.arange(dim, dtype=np.int64)).astype(np.float64)
    driver = H.transverse * (n - 2.0 * down) + float(H.diagonal().mean())
    floor = 1e-8 * H.spectral_scale()

    def apply(residual: np.ndarray, theta: np.ndarray) -> np.ndarray:
        rotated = walsh_hadamard(residual, n)
        rotated /= _floored(driver[:, None] - theta[None, :], floor)
        return walsh_hadamard(rotated, n) / dim

    return apply


def choose_preconditioner(H: InterpolatedHamiltonian) -> Preconditioner:
    """Pick the part of H with the wider spread: the driver or the diagonal."""
    driver_spread = 2.0 * H.problem.n_qubits * H.transverse
    diagonal_spread = float(np.ptp(H.diagonal()))
    if driver_spread >= diagonal_spread:
        return hadamard_preconditioner(H)
    return diagonal_preconditioner(H)


def lowest_eigenpairs(
    H: InterpolatedHamiltonian,
    k: int,
    *,
    options: SolverOptions | None = None,
    start: np.ndarray | None = None,
) -> EigenResult:
    """The ``k`` lowest eigenpairs of H, ``k`` clamped to the Hilbert-space size."""
    if not 1 <= k <= MAX_K:
        raise InputError(f"k must be in 1..{MAX_K}, got {k}")
    options = options or SolverOptions()
    k = min(k, H.dimension)

    if H.lam == 1.0:
        diag = H.diagonal()
        order = np.argsort(diag, kind="stable")[:k]
        vectors = np.zeros((H.dimension, k))
        vectors[order, np.arange(k)] = 1.0
        return EigenResult(
            lam=H.lam,
            eigenvalues=diag[order].copy(),
            eigenvectors=vectors,
            residual_norms=np.zeros(k),
        )

    solver = BlockLanczos(
        lambda x: apply_hamiltonian(H, x),
        H.dimension,
        options=options,
        preconditioner=choose_preconditioner(H) if options.precondition else None,
    )
    try:
        result = solver.solve(k, tol=options.rtol * H.spectral_scale(), start=start)
    except SolverError as exc:
        raise exc.at(H.lam) from exc
    return EigenResult(
        lam=H.lam,
        eigenvalues=result.eigenvalues,
        eigenvectors=_fix_signs(result.eigenvectors),
        residual_norms=result.residual_norms,
        matvecs=result.matvecs,
    )


def order_parameters(vector: np.ndarray) -> tuple[float, float]:
    """Spread S = (Σ|v_n|)² / 2^N and magnetization M = Σ|v_n|² m(n) / N."""
    v = np.asarray(vector, dtype=np.float64)
    dim = v.shape[0] if v.ndim == 1 else 0
    if dim < 2 or dim & (dim - 1):
        raise InputError(f"vector length must be a power of two >= 2, got shape {v.shape}")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise InputError("ground vector is not normalized")
    n = dim.bit_length() - 1
    spread = float(np.abs(v).sum() ** 2 / dim)
    magnetization = 2.0 * np.bitwise_count(np.arange(dim, dtype=np.int64)) - n
    return spread, float((v * v) @ magnetization / n)


def estimate_scale(
    problem: IsingProblem,
    rule: ScaleRule = ScaleRule.MAX_LOCAL_SCALE,
    calE: float | None = None,
) -> ScaleEstimate:
    rule = ScaleRule(rule)
    if rule is ScaleRule.USER_SUPPLIED:
        if calE is None or not (math.isfinite(calE) and calE > 0):
            raise InputError("a positive ℰ is required for the user_supplied rule")
        value = float(calE)
    else:
        local = [abs(h) for h in problem.h]
        for i, j, J in problem.couplings:
            local[i] += abs(J)
            local[j] += abs(J)
        value = max(local)
        if value <= 0:
            raise InputError("ℰ is zero: the problem has no fields or couplings")
    return ScaleEstimate(
        calE=value, rule=rule, lambda_c=problem.delta / (problem.delta + value)
    )


def scale_and_zeta(
    problem: IsingProblem,
    lam: float,
    rule: ScaleRule = ScaleRule.MAX_LOCAL_SCALE,
    calE: float | None = None,
) -> tuple[ScaleEstimate, float]:
    """Scale estimate and ζ = (1-λ)Δ / (λℰ); ζ is +inf at λ=0."""
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"λ must lie in [0, 1], got {lam}")
    scale = estimate_scale(problem, rule, calE)
    if lam == 0.0:
        return scale, math.inf
    return scale, (1.0 - lam) * problem.delta / (lam * scale.calE)


def uniform_grid(points: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    if points < 2:
        raise InputError(f"a grid needs at least 2 points, got {points}")
    return np.linspace(lo, hi, points)


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    values = np.asarray(grid, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise InputError("grid must be a non-empty sequence of λ values")
    if values.min() < 0.0 or values.max() > 1.0:
        raise InputError("grid values must lie in [0, 1]")
    if np.any(np.diff(values) <= 0):
        raise InputError("grid must be strictly increasing")
    return values


def sweep(
    problem: IsingProblem,
    grid: Sequence[float],
    k: int = 3,
    *,
    options: SolverOptions | None = None,
    warm_start: bool = True,
    progress: Callable[[int, int], None] | None = None,
) -> SweepResult:
    """Lowest ``k`` levels, gap and order parameters at every grid point."""
    values = _check_grid(grid)
    rows: list[SweepRow] = []
    previous: np.ndarray | None = None
    for index, lam in enumerate(values.tolist()):
        H = InterpolatedHamiltonian(problem, lam)
        result = lowest_eigenpairs(H, k, options=options, start=previous)
        if warm_start:
            previous = result.eigenvectors
        spread, magnetization = order_parameters(result.ground_vector)
        rows.append(
            SweepRow(
                lam=lam,
                energies=tuple(float(e) for e in result.eigenvalues),
                gap=result.gap,
                S=spread,
                M=magnetization,
            )
        )
        if progress is not None:
            progress(index + 1, values.size)
        if (index + 1) % 50 == 0:
            logger.info("sweep %d/%d λ=%.4f gap=%.6e", index + 1, values.size, lam, result.gap)
    return SweepResult(
        rows=tuple(rows),
        parameters={
            "problem_hash": problem_hash(problem),
            "k": min(k, problem.dimension),
            "grid": f"{values.size} points in [{values[0]:.17g}, {values[-1]:.17g}]",
        },
    )


def find_gap_minima(result: SweepResult) -> list[tuple[int, tuple[float, float]]]:
    """Interior local minima of the sampled gap with their neighbor brackets.

    A plateau counts once, at its left end.
    """
    gaps = result.gaps
    lambdas = result.lambdas
    minima: list[tuple[int, tuple[float, float]]] = []
    for i in range(1, gaps.size - 1):
        if gaps[i] < gaps[i - 1] and gaps[i] <= gaps[i + 1]:
            minima.append((i, (float(lambdas[i - 1]), float(lambdas[i + 1]))))
    return minima


def select_anticrossing(
    result: SweepResult, mode: Literal["last", "deepest"] = "last"
) -> tuple[float, float]:
    """Bracket of the first-order anticrossing candidate.

    ``last`` takes the rightmost interior minimum (the first-order transition
    sits closest to the problem Hamiltonian); ``deepest`` the smallest gap.
    """
    minima = find_gap_minima(result)
    if not minima:
        raise InputError("the sampled gap has no interior local minimum")
    if mode == "last":
        return minima[-1][1]
    if mode == "deepest":
        gaps = result.gaps
        return min(minima, key=lambda item: gaps[item[0]])[1]
    raise InputError(f"unknown selection mode {mode!r}")


class _GapFunction:
    """λ ↦ E_1(λ) - E_0(λ), warm-started from the last evaluation."""

    def __init__(self, problem: IsingProblem, options: SolverOptions | None) -> None:
        self.problem = problem
        self.options = options
        self.vectors: np.ndarray | None = None
        self.evaluations = 0

    def __call__(self, lam: float) -> float:
        H = InterpolatedHamiltonian(self.problem, lam)
        result = lowest_eigenpairs(H, 2, options=self.options, start=self.vectors)
        self.vectors = result.eigenvectors
        self.evaluations += 1
        return result.gap


def refine_minimum_gap(
    problem: IsingProblem,
    bracket: tuple[float, float],
    *,
    options: SolverOptions | None = None,
    tol: float = GOLDEN_INTERVAL,
) -> AnticrossingReport:
    """Golden-section search for the minimum gap inside ``bracket``."""
    lo, hi = (float(x) for x in bracket)
    if not 0.0 <= lo < hi <= 1.0:
        raise InputError(f"invalid bracket ({lo}, {hi})")
    gap = _GapFunction(problem, options)
    g_lo, g_hi = gap(lo), gap(hi)

    samples = np.linspace(lo, hi, 11)[1:-1]
    sample_gaps = [gap(float(x)) for x in samples]
    best = int(np.argmin(sample_gaps))
    if not (sample_gaps[best] < g_lo and sample_gaps[best] < g_hi):
        raise InputError(f"no interior gap minimum in ({lo}, {hi})")
    evaluated = [(lo, g_lo), (hi, g_hi)] + list(zip(samples.tolist(), sample_gaps))

    a = float(samples[best - 1]) if best > 0 else lo
    b = float(samples[best + 1]) if best + 1 < samples.size else hi
    h = b - a
    c = a + _INV_PHI_SQUARE * h
    d = a + _INV_PHI * h
    yc, yd = gap(c), gap(d)
    evaluated += [(c, yc), (d, yd)]
    while h > tol:
        if yc < yd:
            b, d, yd = d, c, yc
            h *= _INV_PHI
            c = a + _INV_PHI_SQUARE * h
            yc = gap(c)
            evaluated.append((c, yc))
        else:
            a, c, yc = c, d, yd
            h *= _INV_PHI
            d = a + _INV_PHI * h
            yd = gap(d)
            evaluated.append((d, yd))

    lam_star, g_min = min(evaluated, key=lambda item: item[1])
    logger.debug(
        "refined gap minimum λ*=%.12f g_min=%.6e after %d evaluations",
        lam_star,
        g_min,
        gap.evaluations,
    )
    return AnticrossingReport(
        lambda_star_exact=lam_star,
        g_min=g_min,
        bracket=(lo, hi),
        evaluations=gap.evaluations,
    )

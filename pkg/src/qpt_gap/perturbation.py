"""
Perturbative prediction of a first-order anticrossing.

Each cluster of degenerate classical minima is treated as the uniform
superposition of its members. Second-order perturbation in the transverse
field gives its energy ``λ E^P - χ (1-λ)^2 / λ``; the crossing of the global
and local levels gives λ*, and the lowest-order tunneling amplitude between
the clusters (order f = their Hamming distance) gives the minimum gap.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, replace
from enum import StrEnum

from qpt_gap.errors import CapacityError, DegeneracyError, DomainError, InputError
from qpt_gap.ising_core import (
    IsingProblem,
    MinimaCluster,
    SpinConfiguration,
    classical_energy,
    cluster_distance,
    energy_tolerance,
    hamming_distance,
    single_flip_delta,
)
from qpt_gap.spectral import ScaleEstimate

logger = logging.getLogger(__name__)

MAX_PATH_ORDER = 20


class Reason(StrEnum):
    NONE = "none"
    NO_REAL_SOLUTION = "no_real_solution"
    BELOW_LAMBDA_C = "below_lambda_c"


@dataclass(frozen=True)
class PerturbativeLevel:
    cluster: MinimaCluster
    chi: float
    superposition_norm: int
    min_excitation: float

    @property
    def energy(self) -> float:
        return self.cluster.energy


@dataclass(frozen=True)
class EffectiveCoupling:
    coupling_lg: float
    coupling_gl: float
    f: int
    pair_count: int
    sequence_count: int
    min_denominator: float
    lam: float


@dataclass(frozen=True)
class CrossingPrediction:
    global_level: PerturbativeLevel
    local_level: PerturbativeLevel
    energy_gap: float
    f: int
    lambda_c: float
    lambda_star: float | None = None
    coupling_lg: float | None = None
    coupling_gl: float | None = None
    g_min_predicted: float | None = None
    prefactor_lambda: float | None = None
    validity_margin: float | None = None
    reason: Reason = Reason.NONE

    @property
    def valid(self) -> bool:
        return self.reason is Reason.NONE and self.lambda_star is not None


def chi(problem: IsingProblem, cluster: MinimaCluster) -> PerturbativeLevel:
    """Second-order coefficient χ of the cluster's uniform superposition.

    χ = Σ_n (Δ c_n)^2 / N_α / (E_n - E_α) over every state n outside the
    cluster one flip away from c_n of its members.
    """
    if cluster.n_qubits != problem.n_qubits:
        raise InputError("cluster and problem disagree on the number of qubits")
    parents: Counter[int] = Counter()
    excitation: dict[int, float] = {}
    for member in cluster.members:
        offset = classical_energy(problem, member) - cluster.energy
        for k in range(problem.n_qubits):
            neighbor = member.bits ^ (1 << k)
            if neighbor in cluster.member_bits:
                continue
            parents[neighbor] += 1
            if neighbor not in excitation:
                excitation[neighbor] = offset + single_flip_delta(problem, member, k)

    size = cluster.size
    tolerance = energy_tolerance(cluster.energy)
    total = 0.0
    lowest = math.inf
    for state in sorted(parents):
        denominator = excitation[state]
        if abs(denominator) <= tolerance:
            raise DegeneracyError(
                f"state {state} is degenerate with the cluster at {cluster.energy:.12g}",
                state=state,
            )
        lowest = min(lowest, abs(denominator))
        total += (problem.delta * parents[state]) ** 2 / size / denominator
    return PerturbativeLevel(
        cluster=cluster, chi=total, superposition_norm=size, min_excitation=lowest
    )


def perturbed_energy(level: PerturbativeLevel, lam: float) -> float:
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"perturbed energy needs λ in (0, 1], got {lam}")
    return lam * level.energy - level.chi * (1.0 - lam) ** 2 / lam


def validity_margin(level: PerturbativeLevel, delta: float, lam: float) -> float:
    """Smallest excitation in units of the perturbation strength (1-λ)Δ/λ."""
    if not 0.0 < lam < 1.0:
        raise DomainError(f"validity margin needs λ in (0, 1), got {lam}")
    return level.min_excitation / ((1.0 - lam) * delta / lam)


def _path_energies(
    problem: IsingProblem, start: SpinConfiguration, flips: list[int]
) -> tuple[list[float], list[int]]:
    size = 1 << len(flips)
    energies = [0.0] * size
    states = [0] * size
    energies[0] = classical_energy(problem, start)
    states[0] = start.bits
    for mask in range(1, size):
        low = mask & -mask
        previous = mask ^ low
        qubit = flips[low.bit_length() - 1]
        config = SpinConfiguration(states[previous], problem.n_qubits)
        energies[mask] = energies[previous] + single_flip_delta(problem, config, qubit)
        states[mask] = states[previous] ^ (1 << qubit)
    return energies, states


def path_sum_dp(
    problem: IsingProblem,
    start: SpinConfiguration,
    end: SpinConfiguration,
    reference_energy: float,
    excluded: Iterable[int] = (),
) -> tuple[float, float]:
    """Σ over shortest flip orders of Π 1/(E_ref - E_intermediate).

    Subset dynamic programming over the differing bits; orderings that pass
    through an ``excluded`` state contribute nothing. Returns the sum and the
    smallest |denominator| met on a contributing intermediate.
    """
    flips = [k for k in range(problem.n_qubits) if (start.bits ^ end.bits) >> k & 1]
    if not flips:
        raise InputError("start and end coincide: f = 0")
    if len(flips) > MAX_PATH_ORDER:
        raise CapacityError(f"path order {len(flips)} exceeds {MAX_PATH_ORDER}")
    energies, states = _path_energies(problem, start, flips)
    blocked = set(excluded)
    full = (1 << len(flips)) - 1
    tolerance = energy_tolerance(reference_energy)
    weights = [0.0] * (full + 1)
    weights[0] = 1.0
    lowest = math.inf
    for mask in range(1, full + 1):
        incoming = 0.0
        rest = mask
        while rest:
            low = rest & -rest
            incoming += weights[mask ^ low]
            rest ^= low
        if mask == full:
            weights[mask] = incoming
            break
        if incoming == 0.0 or states[mask] in blocked:
            continue
        denominator = reference_energy - energies[mask]
        if abs(denominator) <= tolerance:
            raise DegeneracyError(
                f"intermediate state {states[mask]} is degenerate with the reference energy",
                state=states[mask],
            )
        lowest = min(lowest, abs(denominator))
        weights[mask] = incoming / denominator
    return weights[full], lowest


def path_sum_permutations(
    problem: IsingProblem,
    start: SpinConfiguration,
    end: SpinConfiguration,
    reference_energy: float,
    excluded: Iterable[int] = (),
) -> float:
    """Same sum as :func:`path_sum_dp`, by walking every flip order explicitly."""
    flips = [k for k in range(problem.n_qubits) if (start.bits ^ end.bits) >> k & 1]
    if not flips:
        raise InputError("start and end coincide: f = 0")
    blocked = set(excluded)
    total = 0.0
    for order in itertools.permutations(flips):
        term = 1.0
        state = start
        for qubit in order[:-1]:
            state = state.flip(qubit)
            if state.bits in blocked:
                term = 0.0
                break
            term /= reference_energy - classical_energy(problem, state)
        total += term
    return total


def effective_coupling(
    problem: IsingProblem,
    global_cluster: MinimaCluster,
    local_cluster: MinimaCluster,
    lam: float,
) -> EffectiveCoupling:
    """Lowest-order tunneling amplitudes H̃_LG and H̃_GL at ``lam``.

    Sums over every (local, global) member pair at the minimal distance f,
    normalized by the two superposition norms. H̃_LG uses E_G as reference
    energy and H̃_GL uses E_L.
    """
    if not 0.0 < lam < 1.0:
        raise DomainError(f"effective coupling needs λ in (0, 1), got {lam}")
    if global_cluster.member_bits & local_cluster.member_bits:
        raise InputError("clusters overlap: f = 0")
    f = cluster_distance(local_cluster, global_cluster)
    excluded = global_cluster.member_bits | local_cluster.member_bits
    sum_lg = sum_gl = 0.0
    lowest = math.inf
    pairs = 0
    for local in local_cluster.members:
        for target in global_cluster.members:
            if hamming_distance(local, target) != f:
                continue
            pairs += 1
            value, bound = path_sum_dp(problem, local, target, global_cluster.energy, excluded)
            sum_lg += value
            lowest = min(lowest, bound)
            value, bound = path_sum_dp(problem, local, target, local_cluster.energy, excluded)
            sum_gl += value
            lowest = min(lowest, bound)

    delta = problem.delta
    prefactor = (1.0 - lam) ** f / lam ** (f - 1) * delta**f
    norm = 1.0 / math.sqrt(global_cluster.size * local_cluster.size)
    logger.debug("f=%d over %d member pairs at λ=%.6f", f, pairs, lam)
    return EffectiveCoupling(
        coupling_lg=prefactor * norm * sum_lg,
        coupling_gl=prefactor * norm * sum_gl,
        f=f,
        pair_count=pairs,
        sequence_count=pairs * math.factorial(f),
        min_denominator=lowest,
        lam=lam,
    )


def predicted_min_gap(coupling_lg: float, coupling_gl: float) -> float:
    return 2.0 * math.sqrt(abs(coupling_lg) * abs(coupling_gl))


def crossing_point(global_level: PerturbativeLevel, local_level: PerturbativeLevel) -> float | None:
    """Root of perturbed_energy(G, λ) = perturbed_energy(L, λ), if it exists."""
    energy_gap = local_level.energy - global_level.energy
    chi_gap = local_level.chi - global_level.chi
    if chi_gap <= 0:
        return None
    return 1.0 / (1.0 + math.sqrt(energy_gap / chi_gap))


def predict_crossing(
    problem: IsingProblem,
    global_level: PerturbativeLevel,
    local_level: PerturbativeLevel,
    scale: ScaleEstimate,
    *,
    lambda_override: float | None = None,
) -> CrossingPrediction:
    """λ*, couplings and predicted g_min for one local/global pair.

    ``lambda_override`` replaces λ* in the coupling prefactor (for example
    with the λ* found by exact diagonalization); λ* itself is still reported.
    """
    energy_gap = local_level.energy - global_level.energy
    tolerance = energy_tolerance(global_level.energy)
    if abs(energy_gap) <= tolerance:
        raise InputError("local and global clusters have equal energy")
    if energy_gap < 0:
        raise InputError("the local cluster lies below the global cluster")
    f = cluster_distance(local_level.cluster, global_level.cluster)
    base = CrossingPrediction(
        global_level=global_level,
        local_level=local_level,
        energy_gap=energy_gap,
        f=f,
        lambda_c=scale.lambda_c,
    )

    lam_star = crossing_point(global_level, local_level)
    if lam_star is None:
        return replace(base, reason=Reason.NO_REAL_SOLUTION)
    if lam_star <= scale.lambda_c:
        return replace(base, lambda_star=lam_star, reason=Reason.BELOW_LAMBDA_C)

    prefactor_lambda = lam_star if lambda_override is None else lambda_override
    coupling = effective_coupling(
        problem, global_level.cluster, local_level.cluster, prefactor_lambda
    )
    margin = min(
        validity_margin(global_level, problem.delta, lam_star),
        validity_margin(local_level, problem.delta, lam_star),
    )
    return replace(
        base,
        lambda_star=lam_star,
        coupling_lg=coupling.coupling_lg,
        coupling_gl=coupling.coupling_gl,
        g_min_predicted=predicted_min_gap(coupling.coupling_lg, coupling.coupling_gl),
        prefactor_lambda=prefactor_lambda,
        validity_margin=margin,
    )


def predict_candidates(
    problem: IsingProblem,
    clusters: list[MinimaCluster],
    scale: ScaleEstimate,
    *,
    max_candidates: int | None = 1,
    lambda_override: float | None = None,
) -> list[CrossingPrediction]:
    """Predictions for the lowest local clusters against the global one."""
    if not clusters or not clusters[0].is_global:
        raise InputError("clusters must start with the global cluster")
    candidates = clusters[1:] if max_candidates is None else clusters[1 : 1 + max_candidates]
    if not candidates:
        return []
    global_level = chi(problem, clusters[0])
    return [
        predict_crossing(
            problem, global_level, chi(problem, cluster), scale, lambda_override=lambda_override
        )
        for cluster in candidates
    ]

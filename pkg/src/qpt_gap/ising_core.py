"""
Classical side of the transverse-field Ising problem.

Spin convention, shared by every module: bit i of a basis index is 1 when
spin i is up, so ``s_i = 2 * bit_i - 1``. Basis index n of the 2^N-dimensional
Hilbert space is the integer whose bits are the spin configuration.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from qpt_gap.errors import CapacityError, DiagnosticError, InputError, ParseError

logger = logging.getLogger(__name__)

MAX_QUBITS = 24
DEGENERACY_RTOL = 1e-9


def energy_tolerance(energy: float) -> float:
    """Absolute tolerance under which two classical energies count as equal."""
    return DEGENERACY_RTOL * max(1.0, abs(energy))


def energies_equal(a: float, b: float) -> bool:
    return abs(a - b) <= energy_tolerance(a)


@dataclass(frozen=True, order=True)
class SpinConfiguration:
    """One computational basis state of ``n_qubits`` spins."""

    bits: int
    n_qubits: int

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise InputError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        if not 0 <= self.bits < (1 << self.n_qubits):
            raise InputError(f"bits={self.bits} does not fit in {self.n_qubits} qubits")

    @classmethod
    def from_spins(cls, spins: Sequence[int]) -> SpinConfiguration:
        bits = 0
        for i, s in enumerate(spins):
            if s not in (-1, 1):
                raise InputError(f"spin {i} must be +1 or -1, got {s}")
            if s == 1:
                bits |= 1 << i
        return cls(bits, len(spins))

    def spin(self, i: int) -> int:
        return 2 * ((self.bits >> i) & 1) - 1

    def spins(self) -> tuple[int, ...]:
        return tuple(self.spin(i) for i in range(self.n_qubits))

    def flip(self, k: int) -> SpinConfiguration:
        _check_qubit(k, self.n_qubits)
        return SpinConfiguration(self.bits ^ (1 << k), self.n_qubits)

    def magnetization(self) -> float:
        return (2 * self.bits.bit_count() - self.n_qubits) / self.n_qubits


@dataclass(frozen=True)
class IsingProblem:
    """Local fields, couplings and transverse amplitude of an Ising instance.

    ``couplings`` is normalized to ``(i, j, J_ij)`` with ``i < j``, kept in the
    order given; that order is the summation order of every energy routine.
    """

    n_qubits: int
    h: tuple[float, ...]
    couplings: tuple[tuple[int, int, float], ...] = ()
    delta: float = 1.0

    def __post_init__(self) -> None:
        n = self.n_qubits
        if n < 1:
            raise InputError(f"n_qubits must be at least 1, got {n}")
        if n > MAX_QUBITS:
            raise CapacityError(f"at most {MAX_QUBITS} qubits are supported, got {n}")
        h = tuple(float(x) for x in self.h)
        if len(h) != n:
            raise InputError(f"expected {n} local fields, got {len(h)}")
        if not all(math.isfinite(x) for x in h):
            raise InputError("local fields must be finite")
        seen: set[tuple[int, int]] = set()
        normalized: list[tuple[int, int, float]] = []
        for i, j, value in self.couplings:
            i, j, value = int(i), int(j), float(value)
            if i == j:
                raise InputError(f"self-coupling on qubit {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"coupling ({i}, {j}) out of range for {n} qubits")
            if not math.isfinite(value):
                raise InputError(f"coupling ({i}, {j}) must be finite")
            pair = (min(i, j), max(i, j))
            if pair in seen:
                raise InputError(f"duplicate coupling {pair}")
            seen.add(pair)
            normalized.append((pair[0], pair[1], value))
        delta = float(self.delta)
        if not (math.isfinite(delta) and delta > 0):
            raise InputError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "couplings", tuple(normalized))
        object.__setattr__(self, "delta", delta)

    @property
    def dimension(self) -> int:
        return 1 << self.n_qubits

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        neighbors: list[list[tuple[int, float]]] = [[] for _ in range(self.n_qubits)]
        for i, j, value in self.couplings:
            neighbors[i].append((j, value))
            neighbors[j].append((i, value))
        return tuple(tuple(row) for row in neighbors)


@dataclass(frozen=True)
class MinimaCluster:
    """Degenerate strict local minima of the classical energy."""

    members: tuple[SpinConfiguration, ...]
    energy: float
    is_global: bool
    distance_to_global: int = 0
    member_bits: frozenset[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.members:
            raise InputError("a minima cluster needs at least one member")
        bits = frozenset(m.bits for m in self.members)
        if len(bits) != len(self.members):
            raise InputError("cluster members must be pairwise distinct")
        if len({m.n_qubits for m in self.members}) != 1:
            raise InputError("cluster members must share n_qubits")
        object.__setattr__(self, "member_bits", bits)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def n_qubits(self) -> int:
        return self.members[0].n_qubits


def _check_qubit(k: int, n_qubits: int) -> None:
    if not 0 <= k < n_qubits:
        raise InputError(f"qubit index {k} out of range for {n_qubits} qubits")


def _check_dimensions(problem: IsingProblem, config: SpinConfiguration) -> None:
    if config.n_qubits != problem.n_qubits:
        raise InputError(
            f"configuration has {config.n_qubits} qubits, problem has {problem.n_qubits}"
        )


def classical_energy(problem: IsingProblem, config: SpinConfiguration) -> float:
    """Diagonal of H_P: sum_i h_i s_i + sum_(i<j) J_ij s_i s_j."""
    _check_dimensions(problem, config)
    total = 0.0
    for i, hi in enumerate(problem.h):
        total += hi * config.spin(i)
    for i, j, value in problem.couplings:
        total += value * config.spin(i) * config.spin(j)
    return total


@lru_cache(maxsize=8)
def classical_energies(problem: IsingProblem) -> np.ndarray:
    """Classical energy of every basis state, indexed by basis index.

    Same term order as :func:`classical_energy`, so entries agree bit for bit.
    The returned array is read-only and cached per problem.
    """
    states = np.arange(problem.dimension, dtype=np.int64)
    spins = [((states >> i) & 1).astype(np.float64) * 2.0 - 1.0 for i in range(problem.n_qubits)]
    energies = np.zeros(problem.dimension, dtype=np.float64)
    for i, hi in enumerate(problem.h):
        energies += hi * spins[i]
    for i, j, value in problem.couplings:
        energies += value * spins[i] * spins[j]
    energies.flags.writeable = False
    return energies


def flip_axis(values: np.ndarray, n_qubits: int, k: int) -> np.ndarray:
    """Permute a basis-indexed array by flipping qubit ``k`` of every index.

    Works on 1-D arrays and on 2-D arrays whose first axis is the basis index.
    """
    dim = values.shape[0]
    tail = values.shape[1:]
    view = values.reshape((dim >> (k + 1), 2, 1 << k) + tail)
    return view[:, ::-1].reshape(values.shape)


def single_flip_delta(problem: IsingProblem, config: SpinConfiguration, k: int) -> float:
    """Energy change of flipping qubit ``k``: -2 s_k (h_k + sum_j J_kj s_j)."""
    _check_dimensions(problem, config)
    _check_qubit(k, problem.n_qubits)
    local = problem.h[k]
    for j, value in problem.adjacency[k]:
        local += value * config.spin(j)
    return -2.0 * config.spin(k) * local


def hamming_distance(a: SpinConfiguration, b: SpinConfiguration) -> int:
    if a.n_qubits != b.n_qubits:
        raise InputError(f"cannot compare {a.n_qubits}-qubit and {b.n_qubits}-qubit states")
    return (a.bits ^ b.bits).bit_count()


def cluster_distance(a: MinimaCluster, b: MinimaCluster) -> int:
    """Minimum Hamming distance between any member of ``a`` and any member of ``b``."""
    left = np.fromiter(a.member_bits, dtype=np.int64)
    right = np.fromiter(b.member_bits, dtype=np.int64)
    best = a.n_qubits
    # Row blocks keep the XOR table small for large clusters.
    for start in range(0, left.size, 4096):
        xor = left[start : start + 4096, None] ^ right[None, :]
        best = min(best, int(np.bitwise_count(xor).min()))
    return best


def lowest_escape_cost(problem: IsingProblem, cluster: MinimaCluster) -> float:
    """Smallest single-flip energy increase out of any cluster member."""
    return min(
        single_flip_delta(problem, member, k)
        for member in cluster.members
        for k in range(problem.n_qubits)
    )


def enumerate_minima(problem: IsingProblem) -> list[MinimaCluster]:
    """Group every strict classical local minimum into degenerate clusters.

    A state is a strict minimum when each single-flip neighbor is higher by
    more than the degeneracy tolerance. Clusters are ordered by ascending
    energy; the first one is the global minimum.
    """
    n = problem.n_qubits
    energies = classical_energies(problem)
    tolerance = DEGENERACY_RTOL * np.maximum(1.0, np.abs(energies))
    strict = np.ones(problem.dimension, dtype=bool)
    for k in range(n):
        strict &= flip_axis(energies, n, k) - energies > tolerance

    candidates = np.flatnonzero(strict)
    if candidates.size == 0:
        raise DiagnosticError("no strict local minima: the classical landscape is fully degenerate")
    order = np.lexsort((candidates, energies[candidates]))
    candidates = candidates[order]

    groups: list[list[int]] = []
    anchors: list[float] = []
    for index in candidates.tolist():
        energy = float(energies[index])
        if anchors and energies_equal(anchors[-1], energy):
            groups[-1].append(index)
        else:
            groups.append([index])
            anchors.append(energy)

    clusters: list[MinimaCluster] = []
    for position, (indices, energy) in enumerate(zip(groups, anchors)):
        members = tuple(SpinConfiguration(i, n) for i in sorted(indices))
        clusters.append(MinimaCluster(members=members, energy=energy, is_global=position == 0))
    global_cluster = clusters[0]
    clusters = [global_cluster] + [
        MinimaCluster(
            members=c.members,
            energy=c.energy,
            is_global=False,
            distance_to_global=cluster_distance(c, global_cluster),
        )
        for c in clusters[1:]
    ]
    logger.debug(
        "found %d strict minima in %d clusters (global energy %.12g)",
        candidates.size,
        len(clusters),
        global_cluster.energy,
    )
    return clusters


def _parse_float(token: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise ParseError(f"not a number: {token!r}", line_number=line_number) from exc
    if not math.isfinite(value):
        raise ParseError(f"value must be finite: {token!r}", line_number=line_number)
    return value


def _parse_index(token: str, n_qubits: int, line_number: int) -> int:
    try:
        value = int(token)
    except ValueError as exc:
        raise ParseError(f"not an integer index: {token!r}", line_number=line_number) from exc
    if not 0 <= value < n_qubits:
        raise ParseError(
            f"index {value} out of range for {n_qubits} qubits", line_number=line_number
        )
    return value


def iter_directives(text: str) -> Iterable[tuple[int, list[str]]]:
    for line_number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if tokens:
            yield line_number, tokens


def load_instance(text: str) -> IsingProblem:
    """Parse an instance file (``n``, ``delta``, ``h``, ``J`` directives).

    Missing ``h`` entries default to 0 and a missing ``delta`` line to 1.0.
    """
    n_qubits: int | None = None
    delta: float | None = None
    fields: dict[int, float] = {}
    couplings: dict[tuple[int, int], float] = {}

    for line_number, tokens in iter_directives(text):
        keyword, args = tokens[0], tokens[1:]
        if n_qubits is None:
            if keyword != "n" or len(args) != 1:
                raise ParseError("first directive must be 'n <N>'", line_number=line_number)
            try:
                n_qubits = int(args[0])
            except ValueError as exc:
                raise ParseError(f"bad qubit count {args[0]!r}", line_number=line_number) from exc
            if not 1 <= n_qubits <= MAX_QUBITS:
                raise ParseError(
                    f"qubit count must be in 1..{MAX_QUBITS}", line_number=line_number
                )
            continue
        if keyword == "n":
            raise ParseError("duplicate 'n' directive", line_number=line_number)
        if keyword == "delta":
            if len(args) != 1:
                raise ParseError("expected 'delta <float>'", line_number=line_number)
            if delta is not None:
                raise ParseError("duplicate 'delta' directive", line_number=line_number)
            delta = _parse_float(args[0], line_number)
            if delta <= 0:
                raise ParseError("delta must be positive", line_number=line_number)
        elif keyword == "h":
            if len(args) != 2:
                raise ParseError("expected 'h <i> <float>'", line_number=line_number)
            i = _parse_index(args[0], n_qubits, line_number)
            if i in fields:
                raise ParseError(f"duplicate field for qubit {i}", line_number=line_number)
            fields[i] = _parse_float(args[1], line_number)
        elif keyword == "J":
            if len(args) != 3:
                raise ParseError("expected 'J <i> <j> <float>'", line_number=line_number)
            i = _parse_index(args[0], n_qubits, line_number)
            j = _parse_index(args[1], n_qubits, line_number)
            if i == j:
                raise ParseError(f"self-coupling on qubit {i}", line_number=line_number)
            pair = (min(i, j), max(i, j))
            if pair in couplings:
                raise ParseError(f"duplicate coupling {pair}", line_number=line_number)
            couplings[pair] = _parse_float(args[2], line_number)
        else:
            raise ParseError(f"unknown directive {keyword!r}", line_number=line_number)

    if n_qubits is None:
        raise ParseError("instance file is empty")
    return IsingProblem(
        n_qubits=n_qubits,
        h=tuple(fields.get(i, 0.0) for i in range(n_qubits)),
        couplings=tuple((i, j, value) for (i, j), value in couplings.items()),
        delta=1.0 if delta is None else delta,
    )


def dump_instance(problem: IsingProblem) -> str:
    """Canonical instance text; ``load_instance`` reads it back unchanged."""
    lines = [f"n {problem.n_qubits}", f"delta {problem.delta!r}"]
    lines += [f"h {i} {value!r}" for i, value in enumerate(problem.h) if value != 0.0]
    lines += [f"J {i} {j} {value!r}" for i, j, value in problem.couplings]
    return "\n".join(lines) + "\n"


def problem_hash(problem: IsingProblem) -> str:
    return hashlib.sha256(dump_instance(problem).encode("utf-8")).hexdigest()

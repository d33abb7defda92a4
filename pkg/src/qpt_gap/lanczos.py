"""
Thick-restart block solver for the lowest eigenpairs of a symmetric operator.

The operator is only touched through a block matvec. The basis ``V`` is kept
orthonormal by two passes of Gram-Schmidt, its image ``W = H V`` always holds
fresh matvec products, and the projected matrix ``V^T W`` grows one block at a
time. Each step extends the basis with the residuals of the unconverged Ritz
pairs, optionally passed through a preconditioner first (a block Davidson
step); without one the iteration spans the same space as block Lanczos.
Convergence is checked on explicit residual norms ``||H x - theta x||``. When
the basis hits its size limit the lowest Ritz vectors are kept, their image is
recomputed and the iteration restarts from them.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from qpt_gap.errors import InputError, SolverError

logger = logging.getLogger(__name__)

BlockMatvec = Callable[[np.ndarray], np.ndarray]
Preconditioner = Callable[[np.ndarray, np.ndarray], np.ndarray]
"""``(residual_block, ritz_values) -> correction_block``, one column per Ritz pair."""

_DEFLATION_RTOL = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for :class:`BlockLanczos`.

    ``rtol`` is relative to the spectral scale supplied by the caller.
    ``block_size`` of ``None`` means ``max(k, 2)``; ``max_basis`` of ``None``
    sizes the basis from the block size and ``memory_budget_bytes``.
    ``precondition`` is read by callers that can build a preconditioner for
    their operator, such as :func:`qpt_gap.spectral.lowest_eigenpairs`.
    """

    rtol: float = 1e-12
    block_size: int | None = None
    max_basis: int | None = None
    max_restarts: int = 400
    seed: int = 0
    memory_budget_bytes: int = 1 << 30
    precondition: bool = True

    def __post_init__(self) -> None:
        if not self.rtol > 0:
            raise InputError(f"rtol must be positive, got {self.rtol}")
        if self.block_size is not None and self.block_size < 1:
            raise InputError(f"block_size must be at least 1, got {self.block_size}")
        if self.max_basis is not None and self.max_basis < 1:
            raise InputError(f"max_basis must be at least 1, got {self.max_basis}")
        if self.max_restarts < 0:
            raise InputError("max_restarts must be non-negative")


@dataclass(frozen=True, eq=False)
class LanczosResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_norms: np.ndarray
    matvecs: int
    restarts: int


class BlockLanczos:
    """Lowest-eigenpair solver over a ``dim``-dimensional real symmetric operator.

    Each call to :meth:`solve` allocates its own basis, so one instance may be
    reused sequentially but holds no state between calls.
    """

    def __init__(
        self,
        matvec: BlockMatvec,
        dim: int,
        *,
        options: SolverOptions | None = None,
        preconditioner: Preconditioner | None = None,
    ) -> None:
        if dim < 1:
            raise InputError(f"dimension must be positive, got {dim}")
        self.matvec = matvec
        self.dim = dim
        self.options = options or SolverOptions()
        self.preconditioner = preconditioner

    def _basis_limit(self, k: int, block: int) -> int:
        if self.options.max_basis is not None:
            limit = max(self.options.max_basis, k + 2 * block)
        else:
            limit = max(12 * block, 48, k + 4 * block)
            # V and W are both dim x limit
            affordable = self.options.memory_budget_bytes // (16 * self.dim)
            limit = min(limit, max(affordable, k + 4 * block))
        return min(self.dim, limit)

    def _apply(self, block: np.ndarray) -> np.ndarray:
        out = np.asarray(self.matvec(block), dtype=np.float64)
        if out.shape != block.shape:
            raise InputError(f"matvec returned shape {out.shape}, expected {block.shape}")
        return out

    def _orthogonalize(self, basis: np.ndarray, column: np.ndarray) -> tuple[np.ndarray, bool]:
        reference = np.linalg.norm(column)
        if reference == 0.0 or not np.isfinite(reference):
            return column, False
        for _ in range(2):
            column = column - basis @ (basis.T @ column)
        norm = np.linalg.norm(column)
        if norm <= _DEFLATION_RTOL * reference:
            return column, False
        return column / norm, True

    def _extend(
        self,
        basis: np.ndarray,
        image: np.ndarray,
        projected: np.ndarray,
        m: int,
        block: np.ndarray,
        rng: np.random.Generator,
    ) -> int:
        """Orthonormalize ``block`` against ``basis[:, :m]`` and append it.

        Columns that vanish after projection are dropped; a random direction
        stands in only when nothing survives. ``image`` and ``projected``
        receive the new columns. Returns the new basis size.
        """
        start = m
        capacity = basis.shape[1]
        for j in range(block.shape[1]):
            if m >= capacity:
                break
            column, kept = self._orthogonalize(basis[:, :m], block[:, j])
            if kept:
                basis[:, m] = column
                m += 1
        if m == start and m < min(capacity, self.dim):
            column, kept = self._orthogonalize(basis[:, :m], rng.standard_normal(self.dim))
            if kept:
                basis[:, m] = column
                m += 1
        if m > start:
            image[:, start:m] = self._apply(basis[:, start:m])
            new = basis[:, :m].T @ image[:, start:m]
            projected[:m, start:m] = new
            projected[start:m, :start] = new[:start].T
            diagonal = projected[start:m, start:m]
            projected[start:m, start:m] = 0.5 * (diagonal + diagonal.T)
        return m

    def _restart(
        self,
        basis: np.ndarray,
        image: np.ndarray,
        projected: np.ndarray,
        m: int,
        coeffs: np.ndarray,
        keep: int,
    ) -> None:
        kept, _ = np.linalg.qr(basis[:, :m] @ coeffs[:, :keep])
        basis[:, :keep] = kept
        image[:, :keep] = self._apply(basis[:, :keep])
        projected[:, :] = 0.0
        small = basis[:, :keep].T @ image[:, :keep]
        projected[:keep, :keep] = 0.5 * (small + small.T)

    def solve(self, k: int, *, tol: float, start: np.ndarray | None = None) -> LanczosResult:
        """Return the ``k`` lowest eigenpairs with residual norms at most ``tol``.

        ``start`` optionally seeds the first block (for example the eigenvectors
        of a nearby operator); missing columns are filled with seeded noise.
        """
        if k < 1:
            raise InputError(f"k must be at least 1, got {k}")
        if not tol > 0:
            raise InputError(f"tolerance must be positive, got {tol}")
        dim = self.dim
        k = min(k, dim)
        block_size = min(dim, max(self.options.block_size or 0, k, 2))
        limit = self._basis_limit(k, block_size)
        rng = np.random.default_rng(self.options.seed)

        seed_block = rng.standard_normal((dim, block_size))
        if start is not None:
            start = np.asarray(start, dtype=np.float64).reshape(dim, -1)
            used = min(start.shape[1], block_size)
            seed_block[:, :used] = start[:, :used]

        basis = np.zeros((dim, limit))
        image = np.zeros((dim, limit))
        projected = np.zeros((limit, limit))
        m = self._extend(basis, image, projected, 0, seed_block, rng)
        matvecs = m
        restarts = 0
        residuals = np.full(k, np.inf)

        while True:
            theta, coeffs = scipy.linalg.eigh(projected[:m, :m])
            wanted = min(k, m)
            ritz = basis[:, :m] @ coeffs[:, :wanted]
            residual = image[:, :m] @ coeffs[:, :wanted] - ritz * theta[:wanted]
            residuals = np.linalg.norm(residual, axis=0)
            if wanted == k and (np.all(residuals <= tol) or m == dim):
                logger.debug(
                    "converged k=%d basis=%d matvecs=%d restarts=%d max residual %.3e",
                    k,
                    m,
                    matvecs,
                    restarts,
                    residuals.max(),
                )
                return LanczosResult(
                    eigenvalues=theta[:k].copy(),
                    eigenvectors=ritz,
                    residual_norms=residuals,
                    matvecs=matvecs,
                    restarts=restarts,
                )

            active = np.flatnonzero(residuals > tol)[:block_size]
            block = residual[:, active]
            if self.preconditioner is not None and active.size:
                corrected = np.asarray(
                    self.preconditioner(block, theta[active]), dtype=np.float64
                )
                block = np.hstack([corrected, block])

            if m + block.shape[1] > limit:
                if limit == dim:
                    block = block[:, : dim - m]
                else:
                    if restarts >= self.options.max_restarts:
                        break
                    restarts += 1
                    keep = min(m, max(k + block_size, limit // 2), limit - block.shape[1])
                    self._restart(basis, image, projected, m, coeffs, keep)
                    matvecs += keep
                    m = keep

            previous = m
            m = self._extend(basis, image, projected, m, block, rng)
            matvecs += m - previous
            if m == previous:
                # Nothing orthogonal left to add: the basis spans an invariant subspace.
                if wanted == k:
                    return LanczosResult(
                        eigenvalues=theta[:k].copy(),
                        eigenvectors=ritz,
                        residual_norms=residuals,
                        matvecs=matvecs,
                        restarts=restarts,
                    )
                break

        raise SolverError(
            f"block Lanczos did not reach residual {tol:.3e} after {restarts} restarts",
            residuals=residuals,
        )

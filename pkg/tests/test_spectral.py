"""Tests for the interpolated Hamiltonian, the block Lanczos solver and sweeps."""

from __future__ import annotations

import math

import numpy as np
import pytest

from qpt_gap.errors import CapacityError, InputError, SolverError
from qpt_gap.ising_core import IsingProblem, classical_energies
from qpt_gap.lanczos import BlockLanczos, SolverOptions
from qpt_gap.spectral import (
    InterpolatedHamiltonian,
    ScaleRule,
    SweepResult,
    SweepRow,
    apply_hamiltonian,
    as_linear_operator,
    choose_preconditioner,
    dense_matrix,
    dense_spectrum,
    diagonal_preconditioner,
    estimate_scale,
    find_gap_minima,
    hadamard_preconditioner,
    lowest_eigenpairs,
    order_parameters,
    refine_minimum_gap,
    scale_and_zeta,
    select_anticrossing,
    sweep,
    uniform_grid,
    walsh_hadamard,
)


@pytest.fixture
def qubit() -> IsingProblem:
    """One spin with h = 1: gap 2 sqrt((1-λ)^2 + λ^2), smallest at λ = 1/2."""
    return IsingProblem(n_qubits=1, h=(1.0,))


def _rows(gaps: list[float]) -> SweepResult:
    grid = np.linspace(0.0, 1.0, len(gaps))
    return SweepResult(
        rows=tuple(
            SweepRow(lam=float(lam), energies=(0.0, g), gap=g, S=1.0, M=0.0)
            for lam, g in zip(grid, gaps)
        )
    )


def test_hamiltonian_rejects_lambda_outside_unit_interval(qubit):
    with pytest.raises(InputError):
        InterpolatedHamiltonian(qubit, 1.5)


def test_matvec_matches_dense_matrix(random_problem):
    H = InterpolatedHamiltonian(random_problem(5, seed=1, delta=0.7), 0.37)
    rng = np.random.default_rng(4)
    vector = rng.standard_normal(H.dimension)
    block = rng.standard_normal((H.dimension, 3))
    matrix = dense_matrix(H)

    np.testing.assert_allclose(apply_hamiltonian(H, vector), matrix @ vector, atol=1e-12)
    np.testing.assert_allclose(apply_hamiltonian(H, block), matrix @ block, atol=1e-12)
    np.testing.assert_allclose(as_linear_operator(H) @ vector, matrix @ vector, atol=1e-12)
    np.testing.assert_allclose(matrix, matrix.T)


def test_dense_path_is_capped():
    problem = IsingProblem(n_qubits=13, h=(1.0,) * 13)

    with pytest.raises(CapacityError):
        dense_matrix(InterpolatedHamiltonian(problem, 0.5))


@pytest.mark.parametrize("lam", [0.1, 0.45, 0.8, 0.97])
def test_lowest_eigenpairs_match_dense_spectrum(random_problem, lam):
    H = InterpolatedHamiltonian(random_problem(7, seed=9), lam)

    result = lowest_eigenpairs(H, 4)

    np.testing.assert_allclose(result.eigenvalues, dense_spectrum(H)[:4], atol=1e-8)
    matrix = dense_matrix(H)
    for i in range(4):
        vector = result.eigenvectors[:, i]
        assert np.linalg.norm(vector) == pytest.approx(1.0)
        assert np.linalg.norm(matrix @ vector - result.eigenvalues[i] * vector) < 1e-8


@pytest.mark.parametrize("seed", range(100))
def test_random_instances_against_dense_oracle(random_problem, seed):
    rng = np.random.default_rng(1000 + seed)
    problem = random_problem(int(rng.integers(2, 11)), seed=seed, delta=float(rng.uniform(0.5, 2)))
    lam = float(rng.uniform(0.01, 0.99))

    result = lowest_eigenpairs(InterpolatedHamiltonian(problem, lam), 4)
    ends = [lowest_eigenpairs(InterpolatedHamiltonian(problem, x), 3) for x in (0.0, 1.0)]

    dense = dense_spectrum(InterpolatedHamiltonian(problem, lam))
    np.testing.assert_allclose(result.eigenvalues, dense[:4], rtol=0, atol=1e-10)
    vectors = result.eigenvectors
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(vectors.shape[1]), atol=1e-10)
    assert ends[0].gap == pytest.approx(2 * problem.delta)
    assert ends[1].eigenvalues[0] == classical_energies(problem).min()


def test_gap_at_lambda_zero_is_twice_delta(random_problem):
    problem = random_problem(4, seed=7, delta=0.6)

    result = lowest_eigenpairs(InterpolatedHamiltonian(problem, 0.0), 3)

    assert result.eigenvalues[0] == pytest.approx(-4 * 0.6)
    assert result.gap == pytest.approx(1.2)


def test_lambda_one_returns_classical_ground_state(fig2):
    result = lowest_eigenpairs(InterpolatedHamiltonian(fig2, 1.0), 2)

    assert result.eigenvalues[0] == pytest.approx(-69.6)
    assert int(np.argmax(result.ground_vector)) == 0b111111
    assert result.ground_vector.max() == 1.0


def test_k_is_clamped_to_dimension(qubit):
    result = lowest_eigenpairs(InterpolatedHamiltonian(qubit, 0.3), 3)

    assert result.eigenvalues.size == 2


def test_k_outside_range_is_rejected(qubit):
    with pytest.raises(InputError):
        lowest_eigenpairs(InterpolatedHamiltonian(qubit, 0.3), 9)


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.9])
def test_single_qubit_closed_form(qubit, lam):
    expected = math.sqrt((1 - lam) ** 2 + lam**2)

    result = lowest_eigenpairs(InterpolatedHamiltonian(qubit, lam), 2)

    np.testing.assert_allclose(result.eigenvalues, [-expected, expected], atol=1e-12)


def test_block_lanczos_on_diagonal_operator():
    diagonal = np.linspace(-3.0, 5.0, 200)
    solver = BlockLanczos(lambda x: diagonal[:, None] * x, 200, options=SolverOptions(seed=3))

    result = solver.solve(3, tol=1e-10)

    np.testing.assert_allclose(result.eigenvalues, diagonal[:3], atol=1e-9)
    assert result.matvecs > 0


def test_block_lanczos_reports_unconverged_residuals():
    diagonal = np.linspace(0.0, 1.0, 400)
    options = SolverOptions(max_basis=8, max_restarts=0)
    solver = BlockLanczos(lambda x: diagonal[:, None] * x, 400, options=options)

    with pytest.raises(SolverError) as excinfo:
        solver.solve(2, tol=1e-14)

    assert len(excinfo.value.residuals) == 2
    tagged = excinfo.value.at(0.25)
    assert tagged.lam == 0.25
    assert str(tagged).startswith("λ=0.25: ")


def test_walsh_hadamard_squares_to_scaled_identity():
    block = np.random.default_rng(2).standard_normal((16, 3))

    twice = walsh_hadamard(walsh_hadamard(block, 4), 4)

    np.testing.assert_allclose(twice, 16 * block, atol=1e-12)
    np.testing.assert_allclose(walsh_hadamard(np.eye(16)[:, 0], 4), np.ones(16))


def test_hadamard_preconditioner_solves_the_driver(random_problem):
    H = InterpolatedHamiltonian(random_problem(4, seed=3), 0.0)
    residual = np.random.default_rng(5).standard_normal((16, 2))
    theta = np.array([-10.0, -7.5])

    correction = hadamard_preconditioner(H)(residual, theta)

    for j in range(2):
        shifted = dense_matrix(H) - theta[j] * np.eye(16)
        np.testing.assert_allclose(shifted @ correction[:, j], residual[:, j], atol=1e-10)


def test_diagonal_preconditioner_solves_the_problem_hamiltonian(random_problem):
    H = InterpolatedHamiltonian(random_problem(4, seed=3), 1.0)
    residual = np.random.default_rng(6).standard_normal((16, 1))
    theta = np.array([-100.0])

    correction = diagonal_preconditioner(H)(residual, theta)

    np.testing.assert_allclose((H.diagonal() + 100.0) * correction[:, 0], residual[:, 0])


def test_preconditioner_follows_the_dominant_term(fig2):
    residual = np.random.default_rng(8).standard_normal((fig2.dimension, 1))
    theta = np.array([-80.0])
    for lam, expected in ((0.05, hadamard_preconditioner), (0.3, diagonal_preconditioner)):
        H = InterpolatedHamiltonian(fig2, lam)

        chosen = choose_preconditioner(H)(residual, theta)

        np.testing.assert_allclose(chosen, expected(H)(residual, theta))


@pytest.mark.parametrize("lam", [0.05, 0.5, 0.95])
def test_preconditioned_and_plain_solves_agree(random_problem, lam):
    H = InterpolatedHamiltonian(random_problem(8, seed=21), lam)

    plain = lowest_eigenpairs(H, 4, options=SolverOptions(precondition=False))
    preconditioned = lowest_eigenpairs(H, 4)

    np.testing.assert_allclose(preconditioned.eigenvalues, plain.eigenvalues, atol=1e-10)
    np.testing.assert_allclose(preconditioned.eigenvalues, dense_spectrum(H)[:4], atol=1e-10)


@pytest.mark.parametrize("lam", [0.3, 0.7])
def test_fig2_interior_point_meets_residual_tolerance(fig2, lam):
    H = InterpolatedHamiltonian(fig2, lam)
    options = SolverOptions()

    result = lowest_eigenpairs(H, 3, options=options)

    vectors = result.eigenvectors
    explicit = np.linalg.norm(
        apply_hamiltonian(H, vectors) - vectors * result.eigenvalues, axis=0
    )
    assert np.all(explicit <= 2 * options.rtol * H.spectral_scale())
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(3), atol=1e-10)
    assert np.all(np.diff(result.eigenvalues) > 0)


def test_fig2_local_band_near_the_problem_hamiltonian(fig2):
    lam = 0.99
    H = InterpolatedHamiltonian(fig2, lam)

    result = lowest_eigenpairs(H, 8)

    band = result.eigenvalues[1:]
    assert result.eigenvalues[0] == pytest.approx(lam * -69.6, abs=1e-2)
    assert np.all(band < lam * -67.2)
    assert np.all(band > lam * -67.2 - 1e-2)
    # one symmetric state below a six-fold level
    assert band[1] - band[0] > 1e-5
    np.testing.assert_allclose(band[1:], band[1], atol=1e-8)


def test_fig2_lambda_one_exposes_the_local_cluster(fig2):
    result = lowest_eigenpairs(InterpolatedHamiltonian(fig2, 1.0), 8)

    assert result.eigenvalues[0] == pytest.approx(-69.6)
    np.testing.assert_allclose(result.eigenvalues[1:], -67.2)


def test_sweep_direction_does_not_change_levels(random_problem):
    problem = random_problem(6, seed=17)
    grid = uniform_grid(11)

    forward = sweep(problem, grid, 3)
    backward = []
    previous = None
    for lam in grid[::-1].tolist():
        result = lowest_eigenpairs(InterpolatedHamiltonian(problem, lam), 3, start=previous)
        previous = result.eigenvectors
        backward.append(result.eigenvalues)

    np.testing.assert_allclose(np.array(backward[::-1]), forward.column("energies"), atol=1e-9)


def test_sweep_reports_progress(qubit):
    calls: list[tuple[int, int]] = []

    sweep(qubit, uniform_grid(5), 2, progress=lambda done, total: calls.append((done, total)))

    assert calls == [(i, 5) for i in range(1, 6)]


def test_order_parameters_limits():
    uniform = np.full(8, 1 / math.sqrt(8))
    basis_state = np.zeros(8)
    basis_state[7] = 1.0

    assert order_parameters(uniform) == pytest.approx((1.0, 0.0))
    assert order_parameters(basis_state) == pytest.approx((1 / 8, 1.0))


def test_order_parameters_reject_unnormalized_vector():
    with pytest.raises(InputError):
        order_parameters(np.ones(4))


def test_sweep_rows_and_parameters(random_problem):
    problem = random_problem(4, seed=12)

    result = sweep(problem, uniform_grid(11), 3)

    assert len(result.rows) == 11
    assert result.rows[0].S == pytest.approx(1.0)
    assert all(row.gap >= 0 for row in result.rows)
    assert result.parameters["k"] == 3
    np.testing.assert_allclose(result.level(0), result.column("energies")[:, 0])


def test_sweep_rejects_unsorted_grid(qubit):
    with pytest.raises(InputError):
        sweep(qubit, [0.5, 0.2])


def test_find_and_select_gap_minima():
    result = _rows([3.0, 2.0, 2.5, 2.0, 1.0, 1.5, 2.0])

    minima = find_gap_minima(result)

    assert [index for index, _ in minima] == [1, 4]
    assert select_anticrossing(result, "last") == minima[-1][1]
    assert select_anticrossing(_rows([3.0, 1.0, 2.0, 1.5, 2.0]), "deepest")[0] == 0.0


def test_select_anticrossing_without_minimum():
    with pytest.raises(InputError):
        select_anticrossing(_rows([3.0, 2.0, 1.0]))


def test_refine_finds_single_qubit_minimum(qubit):
    report = refine_minimum_gap(qubit, (0.3, 0.7))

    assert report.lambda_star_exact == pytest.approx(0.5, abs=1e-6)
    assert report.g_min == pytest.approx(math.sqrt(2.0), rel=1e-9)
    assert report.bracket == (0.3, 0.7)
    assert report.evaluations > 11


def test_refine_rejects_monotone_bracket(qubit):
    with pytest.raises(InputError):
        refine_minimum_gap(qubit, (0.6, 0.9))


def test_scale_for_fig2(fig2):
    scale = estimate_scale(fig2)

    assert scale.rule is ScaleRule.MAX_LOCAL_SCALE
    assert scale.calE == pytest.approx(22.0)
    assert scale.lambda_c == pytest.approx(1 / 23)


def test_user_supplied_scale_and_zeta(fig2):
    scale, zeta = scale_and_zeta(fig2, 0.5, ScaleRule.USER_SUPPLIED, calE=4.0)

    assert scale.lambda_c == pytest.approx(0.2)
    assert zeta == pytest.approx(0.25)
    assert scale_and_zeta(fig2, 0.0)[1] == math.inf
    with pytest.raises(InputError):
        estimate_scale(fig2, ScaleRule.USER_SUPPLIED)

"""Full-size runs on the 15-qubit two-cluster instance.

Deselected by default; run with ``pytest -m slow``.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from qpt_gap.ising_core import enumerate_minima
from qpt_gap.lanczos import SolverOptions
from qpt_gap.perturbation import predict_candidates
from qpt_gap.spectral import estimate_scale, find_gap_minima
from qpt_gap.wmis import Fig2Params, fig2_problem
from qpt_gap.workflows import evaluate_compare, parse_range, run_compare, run_sweep

pytestmark = pytest.mark.slow

BASE = Fig2Params(1.0, 1.8, 2.0)


@pytest.fixture(scope="module")
def fig2_sweep():
    problem = fig2_problem(BASE, 1.0)
    return problem, run_sweep(problem, grid_points=401, k=3, options=SolverOptions(), refine=True)


def test_gap_has_two_interior_minima(fig2_sweep):
    _, outcome = fig2_sweep
    result = outcome.result

    minima = find_gap_minima(result)

    assert len(minima) == 2
    first, second = (float(result.lambdas[index]) for index, _ in minima)
    assert 0.05 <= first <= 0.15
    assert 0.55 <= second <= 0.65


def test_gap_stays_open_on_every_sample(fig2_sweep):
    _, outcome = fig2_sweep

    assert np.all(outcome.result.gaps > 0)


def test_order_parameters_show_first_order_jump(fig2_sweep):
    _, outcome = fig2_sweep
    result = outcome.result
    (first, _), (second, bracket) = find_gap_minima(result)
    spread = result.column("S")
    magnetization = np.abs(result.column("M"))

    assert spread[0] > 10 * spread[(first + second) // 2]
    jump = int(np.argmax(np.abs(np.diff(magnetization))))
    assert bracket[0] <= result.lambdas[jump] and result.lambdas[jump + 1] <= bracket[1]
    # 6 of 15 spins up in the global state
    assert result.rows[-1].M == pytest.approx(-0.2)


def test_refined_anticrossing_sits_below_prediction(fig2_sweep):
    problem, outcome = fig2_sweep
    (prediction,) = predict_candidates(problem, enumerate_minima(problem), estimate_scale(problem))

    anticrossing = outcome.anticrossing
    assert anticrossing is not None
    assert 0.55 <= anticrossing.lambda_star_exact <= prediction.lambda_star
    (_, _), (second, _) = find_gap_minima(outcome.result)
    assert anticrossing.g_min <= outcome.result.gaps[second] * (1 + 1e-6)


def test_compare_scan_trends():
    points = run_compare(BASE, parse_range("1.5:1.98:0.02"), grid_points=401, k=3, jobs=4)
    checks = {item["id"]: item for item in evaluate_compare(points)["results"]}

    for check in (
        "no_failed_points",
        "gmin_decreasing",
        "gmin_decades",
        "lambda_star_increasing",
        "lambda_star_near_one",
        "perturbative_above_exact",
    ):
        assert checks[check]["passed"], checks[check]


@pytest.mark.parametrize("w_l", [1.7, 1.8, 1.9, 1.95])
def test_predicted_gap_within_a_decade(w_l):
    (point,) = run_compare(BASE, [w_l], grid_points=401, k=3)

    assert point.error is None
    ratio = point.g_min_pert_exact_lambda / point.g_min_exact
    assert math.isfinite(ratio)
    assert 0.1 <= ratio <= 10.0

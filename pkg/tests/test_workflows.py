"""Tests for the command pipelines."""

from __future__ import annotations

import math

import pytest

from qpt_gap import workflows
from qpt_gap.errors import InputError
from qpt_gap.spectral import AnticrossingReport, SweepResult, SweepRow
from qpt_gap.wmis import Fig2Params
from qpt_gap.workflows import (
    ComparePoint,
    Fig2ScanTask,
    SweepOutcome,
    deepest_gap,
    evaluate_compare,
    fig2_scan_point,
    parse_range,
    run_fig2_scan,
    run_minima,
    run_predict,
)


def test_parse_range_is_inclusive():
    assert parse_range("1.5:1.98:0.02")[-1] == 1.98
    assert len(parse_range("1.5:1.98:0.02")) == 25
    assert parse_range("1.8:1.8:0.1") == [1.8]


@pytest.mark.parametrize("text", ["1:2", "2:1:0.1", "1:2:0", "a:b:c"])
def test_parse_range_rejects_bad_ranges(text):
    with pytest.raises(InputError):
        parse_range(text)


def test_run_minima_reports_escape_costs(fig2):
    rows = run_minima(fig2)

    assert rows[0].cluster.is_global
    assert rows[0].escape_cost == pytest.approx(4.0)
    assert rows[1].escape_cost == pytest.approx(0.8)


def test_run_predict_with_user_scale(fig2):
    outcome = run_predict(fig2, scale_rule="user_supplied", calE=3.0)

    (prediction,) = outcome.predictions
    assert prediction.lambda_c == pytest.approx(0.25)
    assert prediction.valid
    assert outcome.anticrossing is None


def test_run_predict_exact_prefactor_uses_refined_lambda(fig2, monkeypatch):
    refined = AnticrossingReport(
        lambda_star_exact=0.8, g_min=1e-3, bracket=(0.7, 0.9), evaluations=20
    )
    monkeypatch.setattr(
        workflows,
        "run_sweep",
        lambda *args, **kwargs: SweepOutcome(SweepResult(rows=()), refined),
    )

    outcome = workflows.run_predict(fig2, prefactor="exact")

    (prediction,) = outcome.predictions
    assert outcome.anticrossing is refined
    assert prediction.prefactor_lambda == 0.8
    assert prediction.lambda_star == pytest.approx(0.71351, abs=1e-5)


def test_fig2_scan_point_failure_becomes_error_row():
    row = fig2_scan_point(Fig2ScanTask(Fig2Params(1.0, 1.8, 2.0), 2.5, 1.0))

    assert row.error is not None
    assert math.isnan(row.chi_l_closed)


def test_run_fig2_scan_in_order():
    rows = run_fig2_scan(Fig2Params(1.0, 1.8, 2.0), [1.6, 1.7])

    assert [row.w_l for row in rows] == [1.6, 1.7]
    assert all(row.valid for row in rows)
    assert rows[0].lambda_star < rows[1].lambda_star


def test_fig2_scan_flags_the_local_resonance():
    (row,) = run_fig2_scan(Fig2Params(1.0, 1.8, 2.0), [5 / 3])

    assert row.error is not None
    assert "degenerate" in row.error
    assert not row.valid


def test_evaluate_compare_on_clean_scan():
    points = [
        ComparePoint(
            w_l=1.9 + 0.01 * i,
            lambda_star_exact=0.85 + 0.02 * i,
            g_min_exact=10.0 ** (-2 - 2 * i),
            lambda_star_pert=0.86 + 0.02 * i,
            g_min_pert=10.0 ** (-2 - 2 * i),
        )
        for i in range(6)
    ]

    report = evaluate_compare(points)

    assert report["all_passed"], report["results"]
    assert report["suite_version"] == "1"


def test_deepest_gap():
    result = SweepResult(
        rows=tuple(
            SweepRow(lam=lam, energies=(0.0, gap), gap=gap, S=1.0, M=0.0)
            for lam, gap in [(0.0, 2.0), (0.5, 0.1), (1.0, 0.3)]
        )
    )

    assert deepest_gap(result) == (0.5, 0.1)

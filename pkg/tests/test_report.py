"""Tests for artifact writers and SVG charts."""

from __future__ import annotations

import json
import math

import pytest

from qpt_gap import __version__
from qpt_gap.report import (
    COMPARE_HEADER,
    PREDICTION_HEADER,
    build_machine_report,
    compare_row,
    format_value,
    render_compare_markdown,
    render_key_values,
    sweep_header,
    sweep_rows,
    write_csv,
    write_json_artifact,
)
from qpt_gap.spectral import SweepResult, SweepRow
from qpt_gap.svg import PALETTE, LineChart
from qpt_gap.workflows import ComparePoint, evaluate_compare


@pytest.mark.parametrize(
    ("value", "text"),
    [
        (0.1, "0.10000000000000001"),
        (-69.6, "-69.599999999999994"),
        (math.nan, "nan"),
        (True, "true"),
        (None, ""),
        (9, "9"),
    ],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_write_csv_bytes(tmp_path):
    path = write_csv(
        tmp_path / "nested" / "out.csv", ("a", "b"), [(1, 0.5), (2, None)], comments=["note"]
    )

    assert path.read_bytes() == b"a,b\n1,0.5\n2,\n# note\n"


def test_key_values():
    assert render_key_values({"lambda_star": 0.5, "valid": False}) == (
        "lambda_star=0.5\nvalid=false\n"
    )


def test_sweep_table_layout():
    result = SweepResult(rows=(SweepRow(lam=0.0, energies=(-2.0, 0.0), gap=2.0, S=1.0, M=0.0),))

    assert sweep_header(result) == ("lambda", "E0", "E1", "gap", "S", "M")
    assert sweep_rows(result) == [(0.0, -2.0, 0.0, 2.0, 1.0, 0.0)]


def test_prediction_header_columns():
    assert PREDICTION_HEADER[:10] == (
        "E_gap_classical",
        "chi_G",
        "chi_L",
        "lambda_star",
        "f",
        "HLG",
        "HGL",
        "gmin_pred",
        "valid",
        "reason",
    )


def test_failed_compare_point_row():
    row = compare_row(ComparePoint(w_l=1.9, error="boom"))

    assert len(row) == len(COMPARE_HEADER)
    assert row[0] == 1.9
    assert math.isnan(row[2])
    assert row[-1] == "error"


def test_machine_report_replaces_nan(tmp_path):
    report = build_machine_report(
        "sweep",
        parameters={"grid": 11},
        outputs=[tmp_path / "sweep.csv", tmp_path / "levels.svg"],
        summary={"smallest_gap": math.nan},
    )

    assert report["schema_version"] == "1"
    assert report["tool_version"] == __version__
    assert report["summary"]["smallest_gap"] is None
    assert report["outputs"] == ["levels.svg", "sweep.csv"]
    path = write_json_artifact(tmp_path / "summary.json", report)
    assert json.loads(path.read_text(encoding="utf-8")) == report


def test_compare_markdown():
    points = [
        ComparePoint(w_l=1.9, lambda_star_exact=0.8, g_min_exact=1e-3, lambda_star_pert=0.85),
        ComparePoint(w_l=1.95, error="solver failed"),
    ]

    checks = evaluate_compare(points)
    markdown = render_compare_markdown(checks)

    assert not checks["all_passed"]
    assert checks["total_checks"] == len(checks["results"])
    assert "| no_failed_points |" in markdown
    assert "❌ FAIL" in markdown


def test_chart_render_is_deterministic(tmp_path):
    def build() -> LineChart:
        chart = LineChart(title="Gap <min>", x_label="λ", y_label="gap")
        chart.add("E0", [0.0, 0.5, 1.0], [1.0, 0.2, 0.7])
        chart.add("E1", [0.0, 0.5, 1.0], [2.0, 1.2, 1.7])
        return chart

    first = build().write(tmp_path / "a.svg").read_bytes()
    second = build().write(tmp_path / "b.svg").read_bytes()

    assert first == second
    text = first.decode("utf-8")
    assert text.startswith("<?xml")
    assert "Gap &lt;min&gt;" in text
    assert text.count("<polyline") == 2
    assert PALETTE[1] in text


def test_log_chart_breaks_lines_at_unplottable_points():
    chart = LineChart(title="g", x_label="w", y_label="g", log_y=True)
    chart.add("exact", [1.0, 2.0, 3.0, 4.0, 5.0], [1e-2, 1e-4, 0.0, 1e-6, math.nan])

    text = chart.render()

    assert text.count("<polyline") == 2
    assert "1e-6" in text
    assert "1e-2" in text


def test_chart_rejects_mismatched_series():
    with pytest.raises(ValueError):
        LineChart(title="t", x_label="x", y_label="y").add("s", [1.0], [1.0, 2.0])

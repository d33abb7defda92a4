"""CSV, key-value, JSON, markdown and chart artifacts for every command."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from enum import Enum
from pathlib import Path
from typing import Any

from qpt_gap import __version__
from qpt_gap.perturbation import CrossingPrediction
from qpt_gap.spectral import AnticrossingReport, SweepResult
from qpt_gap.svg import LineChart
from qpt_gap.workflows import ComparePoint, Fig2ScanRow, MinimaRow

ANTICROSSING_HEADER = ("lambda_star", "g_min", "evals")
MINIMA_HEADER = ("energy", "size", "hamming_to_global", "escape_cost")
PREDICTION_HEADER = (
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
    "validity_margin",
)
COMPARE_HEADER = (
    "w_L",
    "lambda_star_exact",
    "gmin_exact",
    "lambda_star_pert",
    "gmin_pert",
    "gmin_pert_exact_lambda",
    "lambda_c",
    "valid",
    "reason",
)
FIG2_SCAN_HEADER = (
    "w_L",
    "E_gap_closed",
    "E_gap_pipeline",
    "chi_G_closed",
    "chi_G_pipeline",
    "chi_L_closed",
    "chi_L_pipeline",
    "deltaU",
    "lambda_c",
    "lambda_star",
    "f",
    "gmin_pred",
    "valid",
    "reason",
)
CLUSTER_NOTE = "clusters are grouped by energy only; symmetry between members is not verified"


def format_value(value: Any) -> str:
    """17 significant digits for floats, lowercase booleans, empty for missing."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def write_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    *,
    comments: Sequence[str] = (),
) -> Path:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with output_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
        for comment in comments:
            handle.write(f"# {comment}\n")
    return output_path


def write_json_artifact(path: str | Path, payload: dict[str, Any]) -> Path:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return output_path


def render_key_values(values: Mapping[str, Any]) -> str:
    return "".join(f"{key}={format_value(value)}\n" for key, value in values.items())


def write_key_values(path: str | Path, values: Mapping[str, Any]) -> Path:
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(render_key_values(values), encoding="utf-8", newline="\n")
    return output_path


def sweep_header(result: SweepResult) -> tuple[str, ...]:
    levels = len(result.rows[0].energies) if result.rows else 0
    return ("lambda", *(f"E{i}" for i in range(levels)), "gap", "S", "M")


def sweep_rows(result: SweepResult) -> list[tuple[Any, ...]]:
    return [(row.lam, *row.energies, row.gap, row.S, row.M) for row in result.rows]


def anticrossing_values(report: AnticrossingReport) -> dict[str, Any]:
    return {
        "lambda_star": report.lambda_star_exact,
        "g_min": report.g_min,
        "evals": report.evaluations,
        "bracket_lo": report.bracket[0],
        "bracket_hi": report.bracket[1],
    }


def anticrossing_row(report: AnticrossingReport) -> tuple[Any, ...]:
    return (report.lambda_star_exact, report.g_min, report.evaluations)


def minima_rows(rows: Sequence[MinimaRow]) -> list[tuple[Any, ...]]:
    return [
        (row.cluster.energy, row.cluster.size, row.cluster.distance_to_global, row.escape_cost)
        for row in rows
    ]


def prediction_row(prediction: CrossingPrediction) -> tuple[Any, ...]:
    return (
        prediction.energy_gap,
        prediction.global_level.chi,
        prediction.local_level.chi,
        prediction.lambda_star,
        prediction.f,
        prediction.coupling_lg,
        prediction.coupling_gl,
        prediction.g_min_predicted,
        prediction.valid,
        prediction.reason,
        prediction.validity_margin,
    )


def prediction_values(prediction: CrossingPrediction) -> dict[str, Any]:
    values = dict(zip(PREDICTION_HEADER, prediction_row(prediction)))
    values["E_G"] = prediction.global_level.energy
    values["E_L"] = prediction.local_level.energy
    values["N_G"] = prediction.global_level.superposition_norm
    values["N_L"] = prediction.local_level.superposition_norm
    values["lambda_c"] = prediction.lambda_c
    values["prefactor_lambda"] = prediction.prefactor_lambda
    return values


def compare_row(point: ComparePoint) -> tuple[Any, ...]:
    return (
        point.w_l,
        point.lambda_star_exact,
        point.g_min_exact,
        point.lambda_star_pert,
        point.g_min_pert,
        point.g_min_pert_exact_lambda,
        point.lambda_c,
        point.valid,
        point.reason if point.error is None else "error",
    )


def fig2_scan_row(row: Fig2ScanRow) -> tuple[Any, ...]:
    return (
        row.w_l,
        row.e_gap_closed,
        row.e_gap_pipeline,
        row.chi_g_closed,
        row.chi_g_pipeline,
        row.chi_l_closed,
        row.chi_l_pipeline,
        row.delta_u,
        row.lambda_c,
        row.lambda_star,
        row.f,
        row.g_min_pred,
        row.valid,
        row.reason if row.error is None else "error",
    )


def failure_comments(items: Iterable[ComparePoint | Fig2ScanRow]) -> list[str]:
    return [f"failed w_L={item.w_l:.17g}: {item.error}" for item in items if item.error]


def sweep_charts(result: SweepResult) -> tuple[LineChart, LineChart]:
    lambdas = result.lambdas.tolist()
    levels = LineChart(title="Lowest energy levels", x_label="λ", y_label="energy")
    for i in range(len(result.rows[0].energies) if result.rows else 0):
        levels.add(f"E{i}", lambdas, result.level(i).tolist())
    order = LineChart(title="Order parameters", x_label="λ", y_label="S, M")
    order.add("S", lambdas, result.column("S").tolist())
    order.add("M", lambdas, result.column("M").tolist())
    return levels, order


def compare_charts(points: Sequence[ComparePoint]) -> tuple[LineChart, LineChart]:
    w = [p.w_l for p in points]
    gmin = LineChart(title="Minimum gap", x_label="w_L", y_label="gap", log_y=True)
    gmin.add("exact", w, [p.g_min_exact for p in points])
    gmin.add("perturbative λ*", w, [p.g_min_pert for p in points])
    gmin.add("exact λ*", w, [p.g_min_pert_exact_lambda for p in points])
    lambdastar = LineChart(title="Anticrossing position", x_label="w_L", y_label="λ*")
    lambdastar.add("exact", w, [p.lambda_star_exact for p in points])
    lambdastar.add("perturbative", w, [p.lambda_star_pert for p in points])
    return gmin, lambdastar


def render_compare_markdown(report: dict[str, Any]) -> str:
    """Render the scan checks as a markdown table."""
    status = "PASS" if report.get("all_passed") else "FAIL"
    status_icon = "✅" if report.get("all_passed") else "❌"
    lines = [
        "### Anticrossing scan checks",
        f"- Result: {status_icon} {status}",
        f"- Checks: {report.get('passed_checks', 0)}/{report.get('total_checks', 0)} passed",
        "",
        "| Check | Description | Detail | Pass |",
        "| --- | --- | --- | --- |",
    ]
    for item in report.get("results", []):
        mark = "✅" if item.get("passed") else "❌"
        lines.append(
            f"| {item.get('id')} | {item.get('description')} | {item.get('detail')} | {mark} |"
        )
    return "\n".join(lines) + "\n"


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Mapping):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def build_machine_report(
    command: str,
    *,
    parameters: Mapping[str, Any],
    outputs: Sequence[Path],
    status: str = "ok",
    summary: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    return _json_safe(
        {
            "schema_version": "1",
            "tool_version": __version__,
            "command": command,
            "status": status,
            "parameters": dict(parameters),
            "summary": dict(summary or {}),
            "outputs": sorted(p.name for p in outputs),
        }
    )

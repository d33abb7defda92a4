"""
qpt-gap CLI - spectra, minima and anticrossing predictions for Ising instances.

Usage:
    qpt-gap sweep --fig2 1,1.8,2 --grid 401 -k 3 --out runs/sweep
    qpt-gap minima --instance problem.txt
    qpt-gap predict --fig2 1,1.8,2
    qpt-gap compare --fig2 1,1.8,2 --wl-range 1.5:1.98:0.02 --jobs 4
    qpt-gap fig2-scan --fig2 1,1.8,2 --wl-range 1.5:1.99:0.01
"""

from __future__ import annotations

import functools
import logging
import sys
from collections.abc import Callable
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.progress import Progress

from qpt_gap import __version__
from qpt_gap.errors import InputError, QptGapError, SolverError
from qpt_gap.ising_core import IsingProblem, load_instance
from qpt_gap.lanczos import SolverOptions
from qpt_gap.report import (
    ANTICROSSING_HEADER,
    CLUSTER_NOTE,
    COMPARE_HEADER,
    FIG2_SCAN_HEADER,
    MINIMA_HEADER,
    PREDICTION_HEADER,
    anticrossing_row,
    anticrossing_values,
    build_machine_report,
    compare_charts,
    compare_row,
    failure_comments,
    fig2_scan_row,
    minima_rows,
    prediction_row,
    prediction_values,
    render_compare_markdown,
    sweep_charts,
    sweep_header,
    sweep_rows,
    write_csv,
    write_json_artifact,
    write_key_values,
)
from qpt_gap.spectral import ScaleRule
from qpt_gap.wmis import Fig2Params, fig2_problem, is_graph_text, load_graph, to_ising
from qpt_gap.workflows import (
    Prefactor,
    Selection,
    deepest_gap,
    evaluate_compare,
    parse_range,
    run_compare,
    run_fig2_scan,
    run_minima,
    run_predict,
    run_sweep,
)

console = Console(soft_wrap=True, highlight=False)
err_console = Console(stderr=True, soft_wrap=True, highlight=False)

EXIT_INPUT = 2
EXIT_SOLVER = 3
MIN_GRID_POINTS = 11
GAP_COMMANDS = frozenset({"sweep", "compare"})
SCAN_COMMANDS = frozenset({"compare", "fig2-scan"})


@dataclass(frozen=True)
class RunConfig:
    command: str
    instance: Path | None = None
    fig2: Fig2Params | None = None
    delta: float | None = None
    grid: int = 401
    k: int = 3
    out: Path = Path(".")
    seed: int = 0
    refine: bool = False
    jobs: int = 1
    wl_values: tuple[float, ...] | None = None
    prefactor: Prefactor = "perturbative"
    select: Selection = "last"
    calE: float | None = None
    clusters: int = 1

    def __post_init__(self) -> None:
        if (self.instance is None) == (self.fig2 is None):
            raise InputError("give exactly one instance source: --instance or --fig2")
        if self.command in SCAN_COMMANDS and self.fig2 is None:
            raise InputError(f"{self.command} needs --fig2")
        gap_bearing = self.command in GAP_COMMANDS or (
            self.command == "predict" and self.prefactor == "exact"
        )
        if gap_bearing and self.k < 2:
            raise InputError(f"-k must be at least 2 for {self.command}, got {self.k}")
        if gap_bearing and self.grid < MIN_GRID_POINTS:
            raise InputError(f"--grid must be at least {MIN_GRID_POINTS}, got {self.grid}")
        if self.delta is not None and not self.delta > 0:
            raise InputError(f"--delta must be positive, got {self.delta}")
        if self.jobs < 1:
            raise InputError(f"--jobs must be at least 1, got {self.jobs}")
        if self.clusters < 1:
            raise InputError(f"--clusters must be at least 1, got {self.clusters}")

    @property
    def effective_delta(self) -> float:
        return 1.0 if self.delta is None else self.delta

    def solver_options(self) -> SolverOptions:
        return SolverOptions(seed=self.seed)

    def load_problem(self) -> IsingProblem:
        if self.fig2 is not None:
            return fig2_problem(self.fig2, self.effective_delta)
        assert self.instance is not None
        text = self.instance.read_text(encoding="utf-8")
        if is_graph_text(text):
            graph, j_uniform = load_graph(text)
            if j_uniform is None:
                raise InputError(f"{self.instance}: graph file needs a 'Juniform' line")
            return to_ising(graph, j_uniform, self.effective_delta)
        problem = load_instance(text)
        if self.delta is not None:
            problem = replace(problem, delta=self.delta)
        return problem

    def describe(self) -> dict[str, Any]:
        source: dict[str, Any]
        if self.fig2 is not None:
            source = {"fig2": [self.fig2.w_g, self.fig2.w_l, self.fig2.j]}
        else:
            source = {"instance": str(self.instance)}
        return {
            **source,
            "delta": self.effective_delta,
            "grid": self.grid,
            "k": self.k,
            "seed": self.seed,
            "refine": self.refine,
            "select": self.select,
            "prefactor": self.prefactor,
            "jobs": self.jobs,
        }


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def _fail(exc: BaseException, code: int) -> None:
    err_console.print(f"[red]Error:[/red] {escape(str(exc))}")
    sys.exit(code)


def _guarded(func: Callable[..., None]) -> Callable[..., None]:
    """Map library errors onto the CLI exit codes."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            func(*args, **kwargs)
        except SolverError as exc:
            _fail(exc, EXIT_SOLVER)
        except (QptGapError, OSError) as exc:
            _fail(exc, EXIT_INPUT)

    return wrapper


def _parse_fig2(
    ctx: click.Context, param: click.Parameter, value: str | None
) -> Fig2Params | None:
    if value is None:
        return None
    try:
        return Fig2Params.parse(value)
    except InputError as exc:
        raise click.BadParameter(str(exc), ctx=ctx, param=param) from exc


def _parse_wl_range(
    ctx: click.Context, param: click.Parameter, value: str | None
) -> tuple[float, ...] | None:
    if value is None:
        return None
    try:
        return tuple(parse_range(value))
    except InputError as exc:
        raise click.BadParameter(str(exc), ctx=ctx, param=param) from exc


def instance_options(func: Callable[..., None]) -> Callable[..., None]:
    """Options shared by every command: instance source, Δ, output, seed, logging."""
    decorators = [
        click.option(
            "--instance",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            default=None,
            help="Instance file (Ising 'n ...' format or graph 'nv ...' format).",
        ),
        click.option(
            "--fig2",
            callback=_parse_fig2,
            default=None,
            metavar="WG,WL,J",
            help="Use the 15-vertex two-cluster WMIS instance with these parameters.",
        ),
        click.option("--delta", type=float, default=None, help="Transverse field amplitude Δ."),
        click.option(
            "--out",
            type=click.Path(file_okay=False, path_type=Path),
            default=Path("."),
            show_default=True,
            help="Output directory.",
        ),
        click.option("--seed", type=int, default=0, show_default=True, help="Solver start seed."),
        click.option("--verbose", "-v", is_flag=True, help="Log progress to stderr."),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def _grid_option(func: Callable[..., None]) -> Callable[..., None]:
    return click.option(
        "--grid", type=int, default=401, show_default=True, help="Number of λ grid points."
    )(func)


def _k_option(func: Callable[..., None]) -> Callable[..., None]:
    return click.option(
        "-k", "k", type=int, default=3, show_default=True, help="Number of lowest levels."
    )(func)


def _select_option(func: Callable[..., None]) -> Callable[..., None]:
    return click.option(
        "--select",
        type=click.Choice(["last", "deepest"]),
        default="last",
        show_default=True,
        help="Which sampled gap minimum to refine.",
    )(func)


def _jobs_option(func: Callable[..., None]) -> Callable[..., None]:
    return click.option(
        "--jobs", type=int, default=1, show_default=True, help="Worker processes for scans."
    )(func)


def _wl_range_option(func: Callable[..., None]) -> Callable[..., None]:
    return click.option(
        "--wl-range",
        "wl_values",
        callback=_parse_wl_range,
        default=None,
        metavar="LO:HI:STEP",
        help="Inclusive w_L range; defaults to the w_L of --fig2.",
    )(func)


def _write_summary(config: RunConfig, files: list[Path], summary: dict[str, Any]) -> Path:
    path = config.out / "summary.json"
    files = [*files, path]
    report = build_machine_report(
        config.command, parameters=config.describe(), outputs=files, summary=summary
    )
    return write_json_artifact(path, report)


@click.group(context_settings={"auto_envvar_prefix": "QPT_GAP"})
@click.version_option(version=__version__, prog_name="qpt-gap")
def main() -> None:
    """Spectral-gap analysis of adiabatic transverse-field Ising interpolations."""


@main.command("sweep")
@instance_options
@_grid_option
@_k_option
@click.option("--refine/--no-refine", default=False, help="Golden-section refine one gap minimum.")
@_select_option
@_guarded
def sweep_command(**options: Any) -> None:
    """Lowest levels, gap, S and M on a uniform λ grid."""
    _configure_logging(options.pop("verbose"))
    config = RunConfig(command="sweep", **options)
    problem = config.load_problem()
    with Progress(console=err_console, transient=True) as bar:
        task = bar.add_task("sweep", total=config.grid)
        outcome = run_sweep(
            problem,
            grid_points=config.grid,
            k=config.k,
            options=config.solver_options(),
            refine=config.refine,
            select=config.select,
            progress=lambda done, total: bar.update(task, completed=done, total=total),
        )
    result = outcome.result
    files = [write_csv(config.out / "sweep.csv", sweep_header(result), sweep_rows(result))]
    levels, order = sweep_charts(result)
    files += [levels.write(config.out / "levels.svg"), order.write(config.out / "order.svg")]

    lam, gap = deepest_gap(result)
    summary: dict[str, Any] = {"points": len(result.rows), "smallest_gap": gap, "at_lambda": lam}
    summary.update(result.parameters)
    if outcome.anticrossing is not None:
        files.append(
            write_key_values(
                config.out / "anticrossing.txt", anticrossing_values(outcome.anticrossing)
            )
        )
        files.append(
            write_csv(
                config.out / "anticrossing.csv",
                ANTICROSSING_HEADER,
                [anticrossing_row(outcome.anticrossing)],
            )
        )
        summary["anticrossing"] = anticrossing_values(outcome.anticrossing)
    _write_summary(config, files, summary)
    console.print(
        f"sweep: {len(result.rows)} points, smallest sampled gap {gap:.6e} at λ={lam:.6f}"
        f" -> {config.out}"
    )


@main.command("minima")
@instance_options
@_guarded
def minima_command(**options: Any) -> None:
    """Clusters of degenerate classical local minima."""
    _configure_logging(options.pop("verbose"))
    config = RunConfig(command="minima", **options)
    rows = run_minima(config.load_problem())
    files = [
        write_csv(
            config.out / "minima.csv", MINIMA_HEADER, minima_rows(rows), comments=[CLUSTER_NOTE]
        )
    ]
    _write_summary(
        config,
        files,
        {"clusters": len(rows), "global_energy": rows[0].cluster.energy},
    )
    console.print(
        f"minima: {len(rows)} clusters, global energy {rows[0].cluster.energy:.12g}"
        f" -> {config.out}"
    )


@main.command("predict")
@instance_options
@click.option("--calE", "calE", type=float, default=None, help="Use this ℰ instead of the rule.")
@click.option(
    "--clusters",
    type=int,
    default=1,
    show_default=True,
    help="Number of local clusters to evaluate, lowest first.",
)
@click.option(
    "--prefactor",
    type=click.Choice(["perturbative", "exact"]),
    default="perturbative",
    show_default=True,
    help="λ* used in the coupling prefactor.",
)
@_grid_option
@_k_option
@_select_option
@_guarded
def predict_command(**options: Any) -> None:
    """Perturbative λ*, couplings and minimum gap."""
    _configure_logging(options.pop("verbose"))
    config = RunConfig(command="predict", **options)
    problem = config.load_problem()
    outcome = run_predict(
        problem,
        scale_rule=ScaleRule.MAX_LOCAL_SCALE if config.calE is None else ScaleRule.USER_SUPPLIED,
        calE=config.calE,
        candidates=config.clusters,
        prefactor=config.prefactor,
        grid_points=config.grid,
        k=config.k,
        options=config.solver_options(),
        select=config.select,
    )
    predictions = outcome.predictions
    comments = [] if predictions else ["reason=no_local_minima"]
    files = [
        write_csv(
            config.out / "prediction.csv",
            PREDICTION_HEADER,
            [prediction_row(p) for p in predictions],
            comments=comments,
        )
    ]
    if predictions:
        files.append(
            write_key_values(config.out / "prediction.txt", prediction_values(predictions[0]))
        )
    summary: dict[str, Any] = {"candidates": len(predictions)}
    if outcome.anticrossing is not None:
        summary["anticrossing"] = anticrossing_values(outcome.anticrossing)
    _write_summary(config, files, summary)

    if not predictions:
        console.print(f"predict: no local minima -> {config.out}")
        return
    first = predictions[0]
    lam = "none" if first.lambda_star is None else f"{first.lambda_star:.6f}"
    console.print(
        f"predict: {len(predictions)} candidates, λ*={lam} f={first.f} reason={first.reason}"
        f" -> {config.out}"
    )


@main.command("compare")
@instance_options
@_wl_range_option
@_grid_option
@_k_option
@_select_option
@_jobs_option
@_guarded
def compare_command(**options: Any) -> None:
    """Exact against perturbative anticrossings over a w_L range."""
    _configure_logging(options.pop("verbose"))
    config = RunConfig(command="compare", **options)
    assert config.fig2 is not None
    w_values = config.wl_values or (config.fig2.w_l,)
    points = run_compare(
        config.fig2,
        w_values,
        delta=config.effective_delta,
        grid_points=config.grid,
        k=config.k,
        select=config.select,
        options=config.solver_options(),
        jobs=config.jobs,
    )
    files = [
        write_csv(
            config.out / "compare.csv",
            COMPARE_HEADER,
            [compare_row(p) for p in points],
            comments=failure_comments(points),
        )
    ]
    gmin, lambdastar = compare_charts(points)
    files += [gmin.write(config.out / "gmin.svg"), lambdastar.write(config.out / "lambdastar.svg")]
    checks = evaluate_compare(points)
    markdown = config.out / "compare.md"
    markdown.write_text(render_compare_markdown(checks), encoding="utf-8")
    files.append(markdown)
    failed = sum(1 for p in points if p.error is not None)
    _write_summary(config, files, {"points": len(points), "failed": failed, "checks": checks})
    console.print(
        f"compare: {len(points)} points, {failed} failed, checks "
        f"{checks['passed_checks']}/{checks['total_checks']} -> {config.out}"
    )


@main.command("fig2-scan")
@instance_options
@_wl_range_option
@_jobs_option
@_guarded
def fig2_scan_command(**options: Any) -> None:
    """Closed forms against the perturbative pipeline, without diagonalization."""
    _configure_logging(options.pop("verbose"))
    config = RunConfig(command="fig2-scan", **options)
    assert config.fig2 is not None
    rows = run_fig2_scan(
        config.fig2,
        config.wl_values or (config.fig2.w_l,),
        delta=config.effective_delta,
        jobs=config.jobs,
    )
    files = [
        write_csv(
            config.out / "fig2_scan.csv",
            FIG2_SCAN_HEADER,
            [fig2_scan_row(r) for r in rows],
            comments=failure_comments(rows),
        )
    ]
    failed = sum(1 for r in rows if r.error is not None)
    _write_summary(config, files, {"points": len(rows), "failed": failed})
    console.print(f"fig2-scan: {len(rows)} points, {failed} failed -> {config.out}")


if __name__ == "__main__":
    main()

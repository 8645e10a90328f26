"""
Command-line front end.

    resource-action solve --config FILE [--out FILE] [--csv FILE] [--method M] [--grid N] [--seed S] [--plot PNG]
    resource-action sweep --config FILE --param NAME --values V1,V2,... --out-dir DIR [--jobs J] [--plot PNG]

Exit codes: 0 success, 1 malformed configuration, 2 solver did not converge,
3 an output file could not be written.
"""

import argparse
import json
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from resource_action import __version__
from resource_action.config import Config, ProblemConfig
from resource_action.errors import ConfigError, ResourceActionError
from resource_action.output.plots import (
    create_cross_table_heatmap,
    create_path_chart,
    create_resource_chart,
    export_chart,
)
from resource_action.output.results import (
    cross_table,
    node_table,
    result_document,
    summary_row,
    summary_table,
    write_node_csv,
    write_result,
)
from resource_action.quantum.qmath import set_max_dim
from resource_action.solver.shooting import solve_shooting
from resource_action.solver.transcription import solve_transcription
from resource_action.utils.helpers import format_float, setup_logging

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_OUTPUT = 3


def solve_problem(problem, settings):
    """Dispatch to the solver named in the settings."""
    if settings.method == "shooting":
        return solve_shooting(problem, settings.grid_n, settings)
    return solve_transcription(problem, settings.grid_n, settings=settings)


def _execute(config):
    """
    Solve one configuration.

    Returns:
        tuple: (document, node table), or (None, None) when the solver failed outright.
    """
    problem = config.build_problem()
    settings = config.settings()
    try:
        result = solve_problem(problem, settings)
    except ResourceActionError as e:
        log.error("Solver failed: %s", e)
        return None, None
    table = node_table(problem, result.path)
    return result_document(config, result, table), table


def _write_outputs(document, table, output_path, csv_path, plot_path, app_config):
    if output_path is None:
        sys.stdout.write(json.dumps(document, indent=2, sort_keys=True) + "\n")
    else:
        write_result(output_path, document)
    if csv_path is not None:
        write_node_csv(csv_path, table, app_config.get("csv_float_format", "%.17g"))
    if plot_path is not None:
        dpi = app_config.get("plot_dpi", 300)
        plot_path = Path(plot_path)
        export_chart(create_path_chart(table), plot_path, dpi)
        export_chart(
            create_resource_chart(table),
            plot_path.with_name(f"{plot_path.stem}_resources{plot_path.suffix}"),
            dpi,
        )


def run(config_path, output_path=None, overrides=None, csv_path=None, plot_path=None, app_config=None):
    """
    Solve the problem in ``config_path`` and write its result document.

    Args:
        config_path: Problem configuration (JSON).
        output_path: Result document destination; printed to stdout when None.
        overrides (dict): Dotted config paths to replace, e.g. {"solver.grid_n": 200}.
        csv_path: Optional node-table CSV destination.
        plot_path: Optional chart destination; the resource chart gets a ``_resources`` suffix.
        app_config (Config): Application settings; loaded from disk when None.

    Returns:
        int: Process exit code.
    """
    app_config = app_config or Config()
    try:
        config = ProblemConfig.load(config_path).with_overrides(overrides)
    except ConfigError as e:
        log.error("Invalid configuration %s: %s", config_path, e)
        return EXIT_CONFIG

    document, table = _execute(config)
    if document is None:
        return EXIT_NOT_CONVERGED

    try:
        _write_outputs(document, table, output_path, csv_path, plot_path, app_config)
    except OSError as e:
        log.error("Could not write results: %s", e)
        return EXIT_OUTPUT

    accumulated = document["accumulated"]
    app_config.add_run_history(
        {
            "config": str(config_path),
            "method": document["method"],
            "action": document["action"],
            "accumulated": accumulated,
            "converged": document["converged"],
        }
    )
    log.info(
        "Accumulated E=%s F=%s Q=%s",
        format_float(accumulated["E"]),
        format_float(accumulated["F"]),
        format_float(accumulated["Q"]),
    )
    if not document["converged"]:
        log.warning("Solver did not converge; result written and flagged")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _value_slug(value):
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", str(value)).strip("_") or "value"


def _sweep_one(job):
    config, parameter, value, output_dir, max_dim = job
    set_max_dim(max_dim)
    try:
        config = config.with_override(parameter, value)
    except ConfigError as e:
        log.error("Invalid value %r for %s: %s", value, parameter, e)
        return value, None, EXIT_CONFIG
    document, _ = _execute(config)
    if document is None:
        return value, None, EXIT_NOT_CONVERGED
    try:
        write_result(Path(output_dir) / f"{_value_slug(parameter)}={_value_slug(value)}.json", document)
    except OSError as e:
        log.error("Could not write result for %s=%r: %s", parameter, value, e)
        return value, document, EXIT_OUTPUT
    return value, document, EXIT_OK if document["converged"] else EXIT_NOT_CONVERGED


def sweep(config_path, parameter, values, output_dir, jobs=1, plot_path=None, app_config=None):
    """
    Solve once per value of one scalar configuration field.

    Writes one result document per value and ``summary.csv`` with columns
    value, action, E, F, Q, converged.

    Returns:
        int: 1 on a malformed configuration or value, 3 if an output could not
        be written, 2 if any solve failed to converge, else 0.
    """
    app_config = app_config or Config()
    try:
        config = ProblemConfig.load(config_path)
    except ConfigError as e:
        log.error("Invalid configuration %s: %s", config_path, e)
        return EXIT_CONFIG

    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        log.error("Cannot create output directory %s: %s", output_dir, e)
        return EXIT_OUTPUT
    max_dim = app_config.get("max_dim", 64)
    work = [(config, parameter, value, output_dir, max_dim) for value in values]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_one, work))
    else:
        outcomes = [_sweep_one(job) for job in work]

    rows = [summary_row(value, document) for value, document, _ in outcomes if document is not None]
    summary = summary_table(rows)
    codes = [code for _, _, code in outcomes]
    try:
        write_node_csv(output_dir / "summary.csv", summary, app_config.get("csv_float_format", "%.17g"))
        if plot_path is not None:
            if parameter == "potential" and rows:
                export_chart(create_cross_table_heatmap(cross_table(rows)), plot_path, app_config.get("plot_dpi", 300))
            else:
                log.warning("Cross-table chart needs a sweep over 'potential'; no chart written")
    except OSError as e:
        log.error("Could not write sweep summary: %s", e)
        codes.append(EXIT_OUTPUT)

    if EXIT_CONFIG in codes:
        return EXIT_CONFIG
    if EXIT_OUTPUT in codes:
        return EXIT_OUTPUT
    if EXIT_NOT_CONVERGED in codes:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def parse_values(text):
    """Split "100,200,400" or "entanglement,coherence"; JSON scalars are decoded, anything else stays a string."""
    values = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            values.append(json.loads(token))
        except json.JSONDecodeError:
            values.append(token)
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="resource-action",
        description="Least-action paths of parametrized unitaries against quantum-resource potentials.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", help="solve one configuration")
    solve.add_argument("--config", required=True, help="problem configuration (JSON)")
    solve.add_argument("--out", help="result document; stdout when omitted")
    solve.add_argument("--csv", help="also export the node table as CSV")
    solve.add_argument("--method", choices=["transcription", "shooting"], help="override solver.method")
    solve.add_argument("--grid", type=int, help="override solver.grid_n")
    solve.add_argument("--seed", type=int, help="override solver.seed")
    solve.add_argument("--plot", help="write path and resource charts (PNG, PDF, SVG)")
    solve.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    sweep_parser = subparsers.add_parser("sweep", help="solve once per value of one parameter")
    sweep_parser.add_argument("--config", required=True, help="problem configuration (JSON)")
    sweep_parser.add_argument("--param", required=True, help="dotted field, e.g. solver.grid_n or boundary.lambda_B[1]")
    sweep_parser.add_argument("--values", required=True, help="comma-separated values")
    sweep_parser.add_argument("--out-dir", required=True, help="directory for result documents and summary.csv")
    sweep_parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    sweep_parser.add_argument("--plot", help="cross-table heatmap when sweeping 'potential'")
    sweep_parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    app_config = Config()
    setup_logging(args.log_level or app_config.get("log_level", "INFO"))
    set_max_dim(app_config.get("max_dim", 64))

    if args.command == "solve":
        overrides = {}
        if args.method is not None:
            overrides["solver.method"] = args.method
        if args.grid is not None:
            overrides["solver.grid_n"] = args.grid
        if args.seed is not None:
            overrides["solver.seed"] = args.seed
        return run(args.config, args.out, overrides, args.csv, args.plot, app_config)

    return sweep(
        args.config,
        args.param,
        parse_values(args.values),
        args.out_dir,
        jobs=args.jobs,
        plot_path=args.plot,
        app_config=app_config,
    )

"""Result documents, node tables and CSV export."""

import json
import logging
from pathlib import Path as FilePath

import pandas as pd

from resource_action import __version__
from resource_action.solver.problem import lagrangian_batch, node_velocities, resource_profile
from resource_action.utils.helpers import to_jsonable

log = logging.getLogger(__name__)

SCHEMA_VERSION = "resource-action.result/1"
RESOURCE_COLUMNS = ["E", "F", "Q"]
SUMMARY_COLUMNS = ["value", "action", "E", "F", "Q", "converged"]


def node_table(problem, path):
    """
    One row per grid node, columns in fixed order:
    s, lambda_0 .. lambda_{m-1}, E, F, Q, L.
    """
    table = pd.DataFrame({"s": path.grid})
    for mu in range(path.nodes.shape[1]):
        table[f"lambda_{mu}"] = path.nodes[:, mu]
    profile = resource_profile(problem, path)
    for name in RESOURCE_COLUMNS:
        table[name] = profile[name]
    lagrange, _, _ = lagrangian_batch(problem, path.nodes, node_velocities(path))
    table["L"] = lagrange
    return table


def result_document(config, result, table):
    """
    Assemble the schema-versioned result document.

    Args:
        config (ProblemConfig): Echoed verbatim so it re-parses to the same problem.
        result (SolveResult): Solver output.
        table (pandas.DataFrame): Node table from ``node_table``.
    """
    document = {
        "schema_version": SCHEMA_VERSION,
        "generator": f"resource_action {__version__}",
        "config": config.to_dict(),
        "method": result.method,
        "init": result.init,
        "converged": result.converged,
        "iterations": result.iterations,
        "action": result.action,
        "el_residual_max": result.el_residual_max,
        "accumulated": result.accumulated,
        "baseline": result.baseline,
        "diagnostics": result.diagnostics,
        "columns": list(table.columns),
        "nodes": table.to_numpy().tolist(),
    }
    return to_jsonable(document)


def write_result(path, document):
    """Write a result document as JSON (sorted keys, NaN as null)."""
    path = FilePath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w") as f:
            json.dump(to_jsonable(document), f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
    except OSError as e:
        raise OSError(f"Failed to write result document {path}.\nDetails: {e}") from e
    log.info("Result written to %s", path)


def read_result(path):
    with open(path) as f:
        return json.load(f)


def write_node_csv(path, table, float_format="%.17g"):
    """Export the node table; missing resources are left empty."""
    path = FilePath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=float_format, na_rep="")
    log.info("Node table (%d rows) exported to %s", len(table), path)


def summary_row(value, document):
    accumulated = document["accumulated"]
    return {
        "value": value,
        "action": document["action"],
        "E": accumulated["E"],
        "F": accumulated["F"],
        "Q": accumulated["Q"],
        "converged": document["converged"],
    }


def summary_table(rows):
    """Sweep summary with columns value, action, E, F, Q, converged."""
    table = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    for name in ("action", *RESOURCE_COLUMNS):
        table[name] = table[name].astype(float)
    return table


def cross_table(rows):
    """Potential × resource matrix from a sweep over ``potential``."""
    table = summary_table(rows).set_index("value")[RESOURCE_COLUMNS]
    table.index.name = "potential"
    return table

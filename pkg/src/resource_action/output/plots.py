"""Static charts of optimal paths, resource profiles and sweep cross-tables."""

import logging

import seaborn as sns
from matplotlib.figure import Figure

log = logging.getLogger(__name__)

RESOURCE_LABELS = {"E": "entanglement E", "F": "anti-flatness F", "Q": "coherence Q"}


def create_path_chart(table, palette=None):
    """Parameter components λ_μ(s) along the path."""
    fig = Figure(figsize=(8, 6), dpi=100, tight_layout=True)
    ax = fig.add_subplot(111)
    sns.set_style("whitegrid")

    columns = [c for c in table.columns if c.startswith("lambda_")]
    colors = sns.color_palette(palette, len(columns))
    for color, column in zip(colors, columns):
        ax.plot(table["s"], table[column], label=column.replace("lambda_", "λ_"), color=color, linewidth=2)
    ax.set_xlabel("s", fontsize=12)
    ax.set_ylabel("λ(s)", fontsize=12)
    ax.set_title("Optimal path", fontsize=14)
    ax.legend()
    return fig


def create_resource_chart(table, palette=None):
    """E, F, Q and the Lagrangian along the path, side by side."""
    fig = Figure(figsize=(12, 5), dpi=100, tight_layout=True)
    sns.set_style("whitegrid")
    ax_resources = fig.add_subplot(121)
    ax_lagrangian = fig.add_subplot(122)

    colors = sns.color_palette(palette, 3)
    for color, name in zip(colors, RESOURCE_LABELS):
        if table[name].notna().all():
            ax_resources.plot(table["s"], table[name], label=RESOURCE_LABELS[name], color=color)
    ax_resources.set_xlabel("s", fontsize=12)
    ax_resources.set_title("Resources along the path", fontsize=14)
    ax_resources.legend()

    ax_lagrangian.plot(table["s"], table["L"], color=sns.color_palette(palette, 1)[0])
    ax_lagrangian.set_xlabel("s", fontsize=12)
    ax_lagrangian.set_title("Lagrangian", fontsize=14)
    return fig


def create_cross_table_heatmap(cross, cmap="viridis"):
    """Accumulated resources (columns) for each driving potential (rows)."""
    fig = Figure(figsize=(8, 6), dpi=100, tight_layout=True)
    ax = fig.add_subplot(111)
    sns.set_style("whitegrid")

    sns.heatmap(
        cross.astype(float),
        annot=True,
        fmt=".6g",
        cmap=cmap,
        ax=ax,
        square=True,
        linewidths=0.5,
    )
    ax.set_xlabel("accumulated resource", fontsize=12)
    ax.set_ylabel("potential", fontsize=12)
    ax.set_title("Accumulated resource by potential", fontsize=14)
    return fig


def export_chart(fig, file_path, dpi=300):
    """Save a figure; format follows the file extension."""
    try:
        fig.savefig(file_path, dpi=dpi, bbox_inches="tight")
    except (OSError, ValueError) as e:
        raise OSError(f"Failed to export chart to {file_path}.\nDetails: {e}") from e
    log.info("Chart exported to %s", file_path)

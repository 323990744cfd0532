"""Render figures from scan and accumulation CSV files.

The renderer is file-based only: it validates the CSV header against the
declared schema, reshapes grid scans into (theta, phi) maps, and writes a
raster image.  Three figure kinds are supported: the squared-overlap map with
zero markers, the post-projection log-negativity map with maximum markers,
and the accumulation trend line with step-count annotations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCAN_COLUMNS = ("theta", "phi", "overlap", "p_up", "p_down", "entropy",
                "post_logneg", "branch_prob")
TREND_COLUMNS = ("iteration", "steps", "logneg", "probability")

KINDS = ("overlap_map", "logneg_map", "accumulation_trend")

ZERO_MARK_CUT = 1e-9    # overlap below this marks a transfer-candidate zero
MAX_MARK_CUT = 1e-6     # log-negativity within this of 1 marks a maximum


class SchemaError(ValueError):
    """CSV does not match the expected column schema."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    kind: str
    output_image: str
    annotations: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def load_table(path: str, columns) -> dict[str, np.ndarray]:
    """Read a CSV with an exact expected header into named float arrays."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected columns {','.join(columns)}")
        if tuple(h.strip() for h in header) != tuple(columns):
            expected = set(columns)
            got = {h.strip() for h in header}
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            parts = []
            if missing:
                parts.append(f"missing column(s) {', '.join(missing)}")
            if extra:
                parts.append(f"unexpected column(s) {', '.join(extra)}")
            if not parts:
                parts.append("columns out of order")
            raise SchemaError(f"{path}: bad header: " + "; ".join(parts))
        rows = []
        for i, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(columns):
                raise SchemaError(f"{path}:{i}: expected {len(columns)} fields, got {len(row)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                bad = next(c for c, x in zip(columns, row) if not _is_float(x))
                raise SchemaError(f"{path}:{i}: non-numeric value in column {bad!r}") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return {c: data[:, j] for j, c in enumerate(columns)}


def _is_float(x: str) -> bool:
    try:
        float(x)
        return True
    except ValueError:
        return False


def _to_grid(table) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    thetas = np.unique(table["theta"])
    phis = np.unique(table["phi"])
    n = len(thetas) * len(phis)
    if len(table["theta"]) != n:
        raise SchemaError(
            f"rows do not form a full theta x phi grid: {len(table['theta'])} != {n}")
    shaped = {k: v.reshape(len(thetas), len(phis)) for k, v in table.items()}
    return thetas, phis, shaped


def _render_map(spec: FigureSpec, column: str, mark) -> None:
    table = load_table(spec.input_csv, SCAN_COLUMNS)
    thetas, phis, g = _to_grid(table)
    fig, ax = plt.subplots(figsize=(7, 4), dpi=120)
    mesh = ax.pcolormesh(phis, thetas, g[column], shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=column)
    if spec.annotations:
        ii, jj = np.nonzero(mark(g))
        if len(ii):
            ax.plot(phis[jj], thetas[ii], "o", color="black", markersize=4,
                    markerfacecolor="none" if column == "post_logneg" else "black")
    ax.set_xlabel("phi [rad]")
    ax.set_ylabel("theta [rad]")
    ax.set_title(column.replace("_", " "))
    fig.tight_layout()
    fig.savefig(spec.output_image)
    plt.close(fig)


def _render_trend(spec: FigureSpec) -> None:
    table = load_table(spec.input_csv, TREND_COLUMNS)
    it = table["iteration"]
    fig, ax = plt.subplots(figsize=(6, 4), dpi=120)
    ax.plot(it, table["logneg"], "o-", label="log-negativity")
    ax.plot(it, it, "--", color="gray", linewidth=1, label="one ebit per iteration")
    if spec.annotations:
        for x, y, steps in zip(it, table["logneg"], table["steps"]):
            ax.annotate(f"{int(steps)}", (x, y), textcoords="offset points",
                        xytext=(6, -10), fontsize=9)
    ax.set_xlabel("iteration")
    ax.set_ylabel("walker-walker log-negativity")
    ax.set_xticks(it)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output_image)
    plt.close(fig)


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path."""
    if spec.kind == "overlap_map":
        _render_map(spec, "overlap", lambda g: g["overlap"] < ZERO_MARK_CUT)
    elif spec.kind == "logneg_map":
        _render_map(spec, "post_logneg",
                    lambda g: g["post_logneg"] >= 1.0 - MAX_MARK_CUT)
    else:
        _render_trend(spec)
    return spec.output_image

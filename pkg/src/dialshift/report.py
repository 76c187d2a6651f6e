"""Report rendering: wide metric tables, long-form curve CSV, and figures.

The wide table mirrors the evaluation grid: one row per shift level, one
column group per method holding Acc, Brier, and ECE. The long CSV holds
the same numbers as (shift_level, method, metric, value) rows for
downstream tooling, and each metric additionally gets a line chart per
shift family rendered to a PNG next to the delimited outputs.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import SchemaError
from .jsonl import atomic_write_text
from .metrics import MetricsRow

CANONICAL_METHODS = ("vanilla", "temp-scaling", "dropout", "ensemble")
SPECIAL_TAGS = ("dev", "test")
METRIC_NAMES = ("acc", "brier", "ece")

_AXIS_LABELS = {
    "uw:r": "replacement ratio (unknown words)",
    "kw:r": "replacement ratio (known words)",
    "uw:b": "importance bucket (unknown words)",
    "kw:b": "importance bucket (known words)",
    "ic:r": "deleted context prefix",
    "sr:t": "genuine context turns",
}

_METRIC_LABELS = {"acc": "recall@1/10", "brier": "Brier score", "ece": "ECE"}


def split_tag(tag: str) -> tuple[str | None, str]:
    """Family and level of a shift tag; dev/test rows have no family."""
    if tag in SPECIAL_TAGS:
        return None, tag
    family, sep, level = tag.partition("=")
    if not sep:
        return tag, ""
    return family, level


def level_sort_key(family: str, level: str):
    try:
        if family.endswith(":t"):
            # Short-context controls run from long contexts to short ones.
            return (0, -int(level))
        if family.endswith(":b"):
            return (0, int(level))
        if "/" in level:
            return (0, Fraction(level))
        return (0, float(level))
    except (ValueError, ZeroDivisionError):
        return (1, level)


def method_order(methods: Sequence[str]) -> list[str]:
    known = [m for m in CANONICAL_METHODS if m in methods]
    extra = sorted(m for m in methods if m not in CANONICAL_METHODS)
    return known + extra


@dataclass
class WideTable:
    family: str
    methods: list[str]
    row_tags: list[str]  # dev/test first, then levels in family order
    cells: dict[tuple[str, str], MetricsRow]  # (tag, method) -> row


def build_wide_tables(rows: Sequence[MetricsRow]) -> list[WideTable]:
    """Group metric rows into one wide table per shift family.

    Within a family every method must cover the same shift levels;
    duplicate (method, tag) pairs are rejected.
    """
    cells: dict[tuple[str, str], MetricsRow] = {}
    for row in rows:
        key = (row.shift_tag, row.method)
        if key in cells:
            raise SchemaError(f"duplicate metrics row for {key}")
        cells[key] = row

    families: dict[str, dict[str, set[str]]] = {}
    specials: dict[str, set[str]] = {}
    for row in rows:
        family, _ = split_tag(row.shift_tag)
        if family is None:
            specials.setdefault(row.shift_tag, set()).add(row.method)
        else:
            families.setdefault(family, {}).setdefault(row.method, set()).add(
                row.shift_tag
            )

    tables: list[WideTable] = []
    for family in sorted(families):
        per_method = families[family]
        level_sets = {frozenset(tags) for tags in per_method.values()}
        if len(level_sets) > 1:
            raise SchemaError(
                f"family {family!r}: methods cover different shift levels; "
                "every method needs a row at every level"
            )
        levels = sorted(
            next(iter(level_sets)),
            key=lambda tag: level_sort_key(family, split_tag(tag)[1]),
        )
        row_tags = [t for t in SPECIAL_TAGS if t in specials] + levels
        methods = method_order(list(per_method))
        tables.append(
            WideTable(family=family, methods=methods, row_tags=row_tags, cells=cells)
        )
    if not tables and specials:
        methods = method_order(sorted({m for ms in specials.values() for m in ms}))
        row_tags = [t for t in SPECIAL_TAGS if t in specials]
        tables.append(
            WideTable(family="unshifted", methods=methods, row_tags=row_tags, cells=cells)
        )
    return tables


def _cell_values(table: WideTable, tag: str, method: str) -> list[str]:
    row = table.cells.get((tag, method))
    if row is None:
        return ["-"] * len(METRIC_NAMES)
    return [f"{getattr(row, m):.3f}" for m in METRIC_NAMES]


def render_markdown(table: WideTable) -> str:
    header = ["shift"]
    for method in table.methods:
        header += [f"{method} Acc", f"{method} Brier", f"{method} ECE"]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    for tag in table.row_tags:
        _, level = split_tag(tag)
        cells = [level or tag]
        for method in table.methods:
            cells += _cell_values(table, tag, method)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_csv_table(table: WideTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["shift"]
    for method in table.methods:
        header += [f"{method}_acc", f"{method}_brier", f"{method}_ece"]
    writer.writerow(header)
    for tag in table.row_tags:
        _, level = split_tag(tag)
        row = [level or tag]
        for method in table.methods:
            cell = table.cells.get((tag, method))
            row += (
                ["", "", ""]
                if cell is None
                else [repr(getattr(cell, m)) for m in METRIC_NAMES]
            )
        writer.writerow(row)
    return buf.getvalue()


def render_long_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["shift_level", "method", "metric", "value"])
    for row in rows:
        for metric in METRIC_NAMES:
            writer.writerow([row.shift_tag, row.method, metric, repr(getattr(row, metric))])
    return buf.getvalue()


def render_figures(rows: Sequence[MetricsRow], out_dir: str | Path) -> list[Path]:
    """One line chart per (family, metric): shift level on x, one line per
    method. dev/test rows carry no level and stay out of the charts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = [t for t in build_wide_tables(rows) if t.family != "unshifted"]
    written: list[Path] = []
    for table in tables:
        levels = [t for t in table.row_tags if t not in SPECIAL_TAGS]
        if not levels:
            continue
        labels = [split_tag(t)[1] for t in levels]
        xs = range(len(levels))
        for metric in METRIC_NAMES:
            fig, ax = plt.subplots(figsize=(5.4, 3.4), dpi=150)
            for method in table.methods:
                ys = [getattr(table.cells[(t, method)], metric) for t in levels]
                ax.plot(xs, ys, marker="o", linewidth=1.5, label=method)
            ax.set_xticks(list(xs))
            ax.set_xticklabels(labels, rotation=45 if len(labels) > 6 else 0)
            ax.set_xlabel(_AXIS_LABELS.get(table.family, table.family))
            ax.set_ylabel(_METRIC_LABELS[metric])
            ax.grid(alpha=0.3)
            ax.legend(fontsize=8)
            fig.tight_layout()
            name = f"fig_{table.family.replace(':', '_')}_{metric}.png"
            path = out_dir / name
            tmp = path.with_name(path.name + ".tmp")
            fig.savefig(tmp, format="png", metadata={"Software": "dialshift"})
            os.replace(tmp, path)
            plt.close(fig)
            written.append(path)
    return written


def write_report(
    rows: Sequence[MetricsRow], out_dir: str | Path, fmt: str = "md"
) -> list[Path]:
    """Write per-family tables, the long-form curve CSV, and figures."""
    if fmt not in ("md", "csv"):
        raise ValueError(f"format must be 'md' or 'csv', got {fmt!r}")
    if not rows:
        raise SchemaError("no metric rows to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for table in build_wide_tables(rows):
        stem = f"table_{table.family.replace(':', '_')}"
        if fmt == "md":
            path = out_dir / f"{stem}.md"
            atomic_write_text(path, render_markdown(table))
        else:
            path = out_dir / f"{stem}.csv"
            atomic_write_text(path, render_csv_table(table))
        written.append(path)
    curves = out_dir / "curves.csv"
    atomic_write_text(curves, render_long_csv(rows))
    written.append(curves)
    written.extend(render_figures(rows, out_dir))
    return written

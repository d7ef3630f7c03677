from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .types import BlochGenerator, Scenario


def format_float(value: float) -> str:
    """17 significant digits so every float survives a text round trip."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return "%.17g" % value


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, int):
        return str(value)
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            writer.writerow([format_cell(value) for value in row])
    return path


def generator_rows(g: BlochGenerator) -> list[list[float]]:
    return [[float(v) for v in row] for row in g.matrix]


def utc_timestamp(ts: float) -> str:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.isoformat().replace("+00:00", "Z")


def _manifest_value(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(format_cell(v) for v in value)
    return format_cell(value)


def format_manifest(items: Iterable[tuple[str, Any]]) -> str:
    return "".join(f"{key} = {_manifest_value(value)}\n" for key, value in items)


def write_manifest(path: Path, items: Iterable[tuple[str, Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_manifest(items), encoding="utf-8", newline="\n")
    return path


_PLOTS: dict[Scenario, str] = {
    Scenario.FIG1_SCAN: (
        "set xlabel 'r1'\nset ylabel 'r2'\nset view map\n"
        "splot '{csv}' using 1:2:3 with points palette pt 5 ps 0.4 title 'sigma redfield', \\\n"
        "      '{csv}' using 1:2:4 with points pt 7 ps 0.2 lc rgb 'black' title 'sigma cp'\n"
    ),
    Scenario.TIMESERIES: (
        "set xlabel 't [1/delta]'\nset ylabel 'sigma'\n"
        "plot '{csv}' using 1:2 with lines title 'redfield', \\\n"
        "     '{csv}' using 1:3 with lines lc rgb 'black' title 'completely positive', \\\n"
        "     0 notitle lc rgb 'gray'\n"
    ),
    Scenario.SWEEP: (
        "set xlabel 'Omega/delta'\nset ylabel 'negative fraction at t=0'\nset logscale x\n"
        "plot '{csv}' using 2:3 with points pt 7 title 'redfield', \\\n"
        "     '{csv}' using 2:4 with points pt 6 lc rgb 'black' title 'completely positive'\n"
    ),
    Scenario.TABULATE_BATH: (
        "set xlabel 'u [1/delta]'\nset ylabel 'G(u)'\n"
        "plot '{csv}' using 1:2 with lines title 'Re G', '{csv}' using 1:3 with lines title 'Im G'\n"
    ),
}


def plot_script(scenario: Scenario, csv_name: str) -> str | None:
    """gnuplot script for the scenario's main CSV; None when there is nothing to plot."""
    body = _PLOTS.get(scenario)
    if body is None:
        return None
    header = f"set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,700\nset output '{scenario.value}.png'\n"
    return header + body.format(csv=csv_name)

"""Aligned plain-text rendering of result tables."""
from __future__ import annotations

import math
from typing import Any, Mapping, Optional, Sequence

from constraint_eval.conditions import ALL_CONDITIONS

MISSING = "-"


def pct(x: Optional[float], digits: int = 1) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return MISSING
    return f"{100 * x:.{digits}f}"


def num(x: Any, digits: int = 3) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return MISSING
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if x != 0 and abs(x) < 10 ** -digits:
            return f"{x:.2e}"
        return f"{x:.{digits}f}"
    return str(x)


def render(headers: Sequence[str], rows: Sequence[Sequence[str]], title: str = "") -> str:
    """Left-align the first column, right-align the rest."""
    cols = len(headers)
    widths = [len(h) for h in headers]
    for r in rows:
        for i in range(cols):
            widths[i] = max(widths[i], len(r[i]))

    def line(cells: Sequence[str]) -> str:
        parts = [cells[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join(parts).rstrip()

    out = []
    if title:
        out.append(title)
    out.append(line(headers))
    out.append("  ".join("-" * w for w in widths))
    out.extend(line(r) for r in rows)
    return "\n".join(out)


def _conditions_in(records: Sequence[Mapping]) -> list[str]:
    present = {r["condition"] for r in records}
    return [c.value for c in ALL_CONDITIONS if c.value in present]


def accuracy_grid(records: Sequence[Mapping], row_key: str, title: str = "") -> str:
    """Accuracy (%) with n per cell, one row per task type or model."""
    conds = _conditions_in(records)
    rows: dict[str, dict[str, Mapping]] = {}
    for r in records:
        rows.setdefault(r[row_key], {})[r["condition"]] = r
    body = []
    for key, cells in rows.items():
        body.append([key] + [
            f"{pct(cells[c]['accuracy'])} ({cells[c]['n']})" if c in cells and cells[c]["n"] else MISSING
            for c in conds
        ])
    return render([row_key] + conds, body, title)


def mean_grid(records: Sequence[Mapping], value_key: str, row_key: str = "task_type",
              title: str = "", digits: int = 1) -> str:
    conds = _conditions_in(records)
    rows: dict[str, dict[str, Mapping]] = {}
    for r in records:
        rows.setdefault(r[row_key], {})[r["condition"]] = r
    body = [[k] + [num(v.get(c, {}).get(value_key), digits) for c in conds] for k, v in rows.items()]
    return render([row_key] + conds, body, title)


def records_table(records: Sequence[Mapping], columns: Sequence[tuple[str, str]],
                  title: str = "", digits: int = 3) -> str:
    """One row per record; ``columns`` is a list of (header, key) pairs."""
    body = [[num(r.get(key), digits) for _, key in columns] for r in records]
    return render([h for h, _ in columns], body, title)


def matrix(labels: Sequence[str], values: Mapping[tuple[str, str], Optional[float]],
           title: str = "") -> str:
    body = [[a] + [num(values.get((a, b)), 2) for b in labels] for a in labels]
    return render([""] + list(labels), body, title)

"""Readers and writers for the on-disk formats.

* hierarchy: JSON ``{"bottom": [...], "aggregates": [{"name", "children"}]}``
* panel / actuals: CSV with a header of series names, one row per time step
* residuals: like a panel, optionally preceded by ``#`` comment lines
* forecasts: long CSV ``series,h,mean``
* reconciled distributions: one JSON object per (method, h)
* scores: CSV ``method,h,replicate,energy_score,seed``

Floats are written with 17 significant digits so that they round-trip.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .basefc import BaseForecasts
from .covariance import ResidualMatrix
from .errors import ValidationError
from .hierarchy import (
    DEFAULT_TOL,
    SeriesPanel,
    aggregate_bottom,
    check_coherence,
    parse_hierarchy,
)
from .reconcile import ReconciledDistribution

__all__ = [
    "fmt",
    "read_hierarchy",
    "read_panel",
    "write_panel",
    "read_actuals",
    "read_residuals",
    "write_residuals",
    "read_forecasts",
    "write_forecasts",
    "ingest_base_forecasts",
    "write_reconciled",
    "read_reconciled",
    "write_scores",
    "read_scores",
]

RESIDUAL_HEADER = "# one-step in-sample residuals, convention: actual - forecast"


def fmt(x):
    return format(float(x), ".17g")


def _read_text(source):
    if hasattr(source, "read"):
        return source.read(), getattr(source, "name", "<stream>")
    path = Path(source)
    try:
        return path.read_text(), str(path)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def _parse_float(cell, where):
    try:
        value = float(cell)
    except ValueError:
        raise ValidationError(f"{where}: non-numeric cell {cell!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{where}: non-finite value {cell!r}")
    return value


def read_hierarchy(source):
    text, where = _read_text(source)
    try:
        return parse_hierarchy(text)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def _read_matrix_csv(source):
    text, where = _read_text(source)
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ValidationError(f"{where}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ValidationError(f"{where}: duplicate column names in header")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"{where}: data row {lineno} has {len(row)} cells, header has {len(header)}"
            )
        values.append(
            [_parse_float(c, f"{where} row {lineno} column {h!r}") for c, h in zip(row, header)]
        )
    return header, np.array(values, dtype=float).reshape(len(values), len(header)), where


def _reorder(header, values, names, where):
    missing = [n for n in names if n not in header]
    if missing:
        raise ValidationError(f"{where}: missing series {', '.join(missing)}")
    extra = [h for h in header if h not in names]
    if extra:
        raise ValidationError(f"{where}: unknown series {', '.join(extra)}")
    idx = [header.index(n) for n in names]
    return values[:, idx]


def read_panel(source, summing, tol=DEFAULT_TOL):
    """Read a panel CSV into hierarchy order.

    The header may list every series (checked for coherence at ``tol``) or the
    bottom series only, in which case the aggregates are computed.
    """
    header, values, where = _read_matrix_csv(source)
    if set(header) == set(summing.bottom_names) and len(header) == summing.n:
        bottoms = _reorder(header, values, summing.bottom_names, where)
        return aggregate_bottom(bottoms, summing)
    full = _reorder(header, values, summing.names, where)
    ok, violation = check_coherence(full, summing, tol)
    if not ok:
        raise ValidationError(
            f"{where}: panel is not coherent with the hierarchy (max violation {violation:.3e})"
        )
    return SeriesPanel(full, summing.names)


def write_panel(path, panel):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(panel.names)
        for row in np.asarray(panel.values):
            w.writerow([fmt(v) for v in row])


def read_actuals(source, names):
    """Actuals CSV (one row per horizon) with columns reordered to ``names``."""
    header, values, where = _read_matrix_csv(source)
    return _reorder(header, values, list(names), where)


def read_residuals(source, summing):
    header, values, where = _read_matrix_csv(source)
    values = _reorder(header, values, summing.names, where)
    if values.shape[0] < 2:
        raise ValidationError(
            f"{where}: {values.shape[0]} residual row(s); at least 2 are required"
        )
    return ResidualMatrix(values, summing.names)


def write_residuals(path, residuals):
    with open(path, "w", newline="") as fh:
        fh.write(RESIDUAL_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(residuals.names)
        for row in residuals.values:
            w.writerow([fmt(v) for v in row])


def read_forecasts(source, summing):
    text, where = _read_text(source)
    rows = list(csv.DictReader(ln for ln in text.splitlines() if ln.strip()))
    if not rows or set(rows[0].keys()) != {"series", "h", "mean"}:
        raise ValidationError(f"{where}: expected columns series,h,mean")
    cells = {}
    for lineno, row in enumerate(rows, start=2):
        name = row["series"].strip()
        try:
            h = int(row["h"])
        except ValueError:
            raise ValidationError(f"{where} row {lineno}: bad horizon {row['h']!r}") from None
        if h < 1:
            raise ValidationError(f"{where} row {lineno}: horizon must be >= 1")
        if (name, h) in cells:
            raise ValidationError(f"{where}: duplicate entry for series {name!r}, h={h}")
        cells[(name, h)] = _parse_float(row["mean"], f"{where} row {lineno}")
    present = {name for name, _ in cells}
    missing = [n for n in summing.names if n not in present]
    if missing:
        raise ValidationError(f"{where}: missing series {', '.join(missing)}")
    extra = sorted(present - set(summing.names))
    if extra:
        raise ValidationError(f"{where}: unknown series {', '.join(extra)}")
    horizons = {name: sorted(h for s, h in cells if s == name) for name in summing.names}
    H = len(horizons[summing.names[0]])
    for name, hs in horizons.items():
        if hs != list(range(1, H + 1)) or len(hs) != H:
            raise ValidationError(
                f"{where}: series {name!r} has horizons {hs}, expected 1..{H} for every series"
            )
    means = np.array([[cells[(n, h)] for n in summing.names] for h in range(1, H + 1)])
    return BaseForecasts(means, summing.names, summing.n_upper)


def write_forecasts(path, base):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "h", "mean"])
        for j, name in enumerate(base.names):
            for h in range(1, base.H + 1):
                w.writerow([name, h, fmt(base.means[h - 1, j])])


def ingest_base_forecasts(forecast_file, residual_file, summing):
    """Load externally produced base forecasts and residuals in hierarchy order."""
    return read_forecasts(forecast_file, summing), read_residuals(residual_file, summing)


def write_reconciled(path, dist):
    Path(path).write_text(json.dumps(dist.to_dict(), indent=1) + "\n")


def read_reconciled(source):
    text, where = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{where}: invalid JSON: {exc}") from exc
    try:
        return ReconciledDistribution.from_dict(doc)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


SCORE_COLUMNS = ("method", "h", "replicate", "energy_score", "seed")


def write_scores(path, rows):
    """``rows``: iterables of ``(method, h, replicate, energy_score, seed)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_COLUMNS)
        for method, h, rep, es, seed in rows:
            w.writerow([method, int(h), int(rep), fmt(es), int(seed)])


def read_scores(source):
    text, where = _read_text(source)
    out = []
    for row in csv.DictReader(text.splitlines()):
        out.append(
            (row["method"], int(row["h"]), int(row["replicate"]),
             float(row["energy_score"]), int(row["seed"]))
        )
    return out

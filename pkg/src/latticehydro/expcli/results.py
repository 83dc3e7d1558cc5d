"""Result rows, CSV persistence and convergence tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import LatticeHydroError

SCHEMA_VERSION = 1
COLUMNS = ("experiment", "eps", "tau", "kappa", "r", "z", "zp", "i", "j", "kind", "re", "im")
VALUE_KINDS = ("micro", "limit", "ns-limit", "err", "stderr")


class ResultsError(LatticeHydroError, ValueError):
    pass


def fmt(x):
    if x is None or x == "":
        return ""
    return format(float(x), ".17g")


def join(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return ";".join(fmt(c) if isinstance(c, float) else str(c) for c in np.atleast_1d(v).tolist())


@dataclass
class Row:
    experiment: str
    eps: float | None
    tau: float
    kappa: float
    r: tuple
    z: object
    zp: object
    i: int
    j: int
    kind: str
    re: float
    im: float = 0.0

    def cells(self):
        return [
            self.experiment,
            fmt(self.eps),
            fmt(self.tau),
            fmt(self.kappa),
            ";".join(fmt(c) for c in self.r),
            join(self.z),
            join(self.zp),
            str(self.i),
            str(self.j),
            self.kind,
            fmt(self.re),
            fmt(self.im),
        ]


@dataclass
class ResultTable:
    """Append-only rows plus header metadata."""

    rows: list = field(default_factory=list)
    config_hash: str = ""
    meta: dict = field(default_factory=dict)

    def append(self, row: Row):
        if row.kind not in VALUE_KINDS:
            raise ResultsError(f"unknown value kind {row.kind!r}")
        self.rows.append(row)

    def extend(self, rows):
        for r in rows:
            self.append(r)

    def __len__(self):
        return len(self.rows)

    def of_kind(self, kind):
        return [r for r in self.rows if r.kind == kind]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema={SCHEMA_VERSION} config={self.config_hash}")
        for k in sorted(self.meta):
            buf.write(f" {k}={self.meta[k]}")
        buf.write("\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path


def _opt_float(s):
    return float(s) if s != "" else None


def read_csv(path) -> ResultTable:
    path = Path(path)
    if not path.exists():
        raise ResultsError(f"{path}: file not found")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise ResultsError(f"{path}: missing schema header")
    header = dict(tok.split("=", 1) for tok in lines[0][2:].split() if "=" in tok)
    if int(header.get("schema", -1)) != SCHEMA_VERSION:
        raise ResultsError(f"{path}: unsupported schema {header.get('schema')}")
    reader = csv.reader(lines[1:])
    cols = next(reader, None)
    if tuple(cols or ()) != COLUMNS:
        raise ResultsError(f"{path}: unexpected columns {cols}")
    table = ResultTable(config_hash=header.get("config", ""))
    table.meta = {k: v for k, v in header.items() if k not in ("schema", "config")}
    for cells in reader:
        exp, eps, tau, kappa, r, z, zp, i, j, kind, re, im = cells
        table.append(
            Row(
                exp,
                _opt_float(eps),
                float(tau),
                float(kappa),
                tuple(float(c) for c in r.split(";") if c),
                z,
                zp,
                int(i),
                int(j),
                kind,
                float(re),
                float(im),
            )
        )
    return table


# --------------------------------------------------------------- convergence


@dataclass
class ConvergenceLine:
    eps: float
    max_err: float
    mean_err: float
    ratio: float | None


@dataclass
class Convergence:
    lines: list
    order: float

    @property
    def strictly_decreasing(self):
        errs = [ln.max_err for ln in self.lines]
        return all(b < a for a, b in zip(errs, errs[1:]))

    def text(self):
        out = [f"{'eps':>12} {'max err':>14} {'mean err':>14} {'ratio':>8}"]
        for ln in self.lines:
            ratio = "" if ln.ratio is None else f"{ln.ratio:8.4f}"
            out.append(f"{ln.eps:12.6g} {ln.max_err:14.6e} {ln.mean_err:14.6e} {ratio:>8}")
        out.append(f"fitted order: {self.order:.3f}")
        return "\n".join(out)


def convergence(results: ResultTable) -> Convergence:
    """Per-eps max/mean of the ``err`` rows, successive ratios and fitted order."""
    by_eps = {}
    for r in results.of_kind("err"):
        if r.eps is None:
            continue
        by_eps.setdefault(r.eps, []).append(math.hypot(r.re, r.im))
    if len(by_eps) < 2:
        raise ResultsError("convergence table needs err rows for at least two eps values")
    eps = sorted(by_eps, reverse=True)
    lines, prev = [], None
    for e in eps:
        vals = np.asarray(by_eps[e])
        mx = float(vals.max())
        lines.append(ConvergenceLine(e, mx, float(vals.mean()), None if prev is None else mx / prev))
        prev = mx
    x = np.log([ln.eps for ln in lines])
    y = np.log([max(ln.max_err, 1e-300) for ln in lines])
    order = float(np.polyfit(x, y, 1)[0])
    return Convergence(lines, order)


def convergence_table(results: ResultTable) -> str:
    return convergence(results).text()

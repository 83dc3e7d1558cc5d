"""SVG figures for result tables."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .results import ResultTable, convergence  # noqa: E402

log = logging.getLogger(__name__)


def _save(fig, path):
    # fixed metadata and id salt keep the SVG bytes reproducible
    with matplotlib.rc_context({"svg.hashsalt": "latticehydro"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def err_plot(results: ResultTable, path):
    conv = convergence(results)
    eps = [ln.eps for ln in conv.lines]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, [ln.max_err for ln in conv.lines], "o-", label="max")
    ax.loglog(eps, [ln.mean_err for ln in conv.lines], "s--", label="mean")
    ax.set_xlabel("eps")
    ax.set_ylabel("error")
    ax.set_title(f"fitted order {conv.order:.2f}")
    ax.legend()
    return _save(fig, path)


def _entry_series(results, kind, eps):
    rows = [r for r in results.rows if r.kind == kind and r.eps == eps and r.i == 0 and r.j == 0]
    return [f"{r.z}|{r.zp}" for r in rows], np.array([r.re for r in rows])


def overlay_plot(results: ResultTable, path):
    eps_vals = sorted({r.eps for r in results.rows if r.kind == "micro" and r.eps is not None})
    if not eps_vals:
        return None
    eps = eps_vals[0]
    labels, micro = _entry_series(results, "micro", eps)
    fig, ax = plt.subplots(figsize=(max(5, 0.25 * len(labels)), 4))
    x = np.arange(len(labels))
    ax.plot(x, micro, "o", label="micro")
    for kind, style in (("limit", "-"), ("ns-limit", "--")):
        _, vals = _entry_series(results, kind, eps)
        if len(vals) == len(micro) and len(vals):
            ax.plot(x, vals, style, label=kind)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_title(f"entry (0,0) at eps={eps:g}")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def _first(z):
    if isinstance(z, tuple):
        return float(z[0])
    return float(str(z).split(";")[0])


def heatmap(results: ResultTable, path):
    rows = [r for r in results.rows if r.kind == "limit" and r.i == 0 and r.j == 0 and r.zp == ""]
    if not rows:
        return None
    rs = sorted({r.r[0] for r in rows})
    ths = sorted({_first(r.z) for r in rows})
    if len(rs) < 2:
        return None
    grid = np.full((len(rs), len(ths)), np.nan)
    for r in rows:
        grid[rs.index(r.r[0]), ths.index(_first(r.z))] = r.re
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.pcolormesh(ths, rs, grid, shading="nearest")
    cb = fig.colorbar(im, ax=ax, label="W (0,0)")
    cb.ax.set_gid("colorbar")
    ax.set_xlabel("theta")
    ax.set_ylabel("r")
    return _save(fig, path)


def render_plots(results: ResultTable, outdir, prefix="result"):
    """Write the figures that the table supports; returns their paths."""
    if not len(results):
        log.warning("empty result table; no plots written")
        return []
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    eps_with_err = {r.eps for r in results.of_kind("err") if r.eps is not None}
    if len(eps_with_err) >= 2:
        paths.append(err_plot(results, outdir / f"{prefix}_err.svg"))
    p = overlay_plot(results, outdir / f"{prefix}_overlay.svg")
    if p:
        paths.append(p)
    if results.meta.get("kind") == "wigner":
        p = heatmap(results, outdir / f"{prefix}_heatmap.svg")
        if p:
            paths.append(p)
    return paths

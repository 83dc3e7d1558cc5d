"""Experiment execution: one epsilon sweep per configuration."""

from __future__ import annotations

import logging

import numpy as np

from ..conservation import energy_current_limit, energy_density_limit, microscopic_current, microscopic_energy
from ..covariance_flow import ScaledQuery, empirical_covariance, halfspace_covariance, propagate_covariance
from ..dispersion import build_nearest_neighbor, check_conditions
from ..errors import LatticeHydroError
from ..hydro_limits import position_limit
from ..random_fields import gibbs_spectral, make_profile_family, product_profile
from ..wigner_transport import wigner_empirical, wigner_exact, wigner_limit
from .config import ExperimentConfig
from .results import ResultTable, Row

log = logging.getLogger(__name__)

# limit kinds per experiment: (value kind, position_limit kind); the first is the reference for err rows
LIMITS = {
    "euler": [("limit", "euler")],
    "ns": [("ns-limit", "ns"), ("limit", "free")],
    "higher": [("limit", "higher"), ("ns-limit", "ns")],
    "halfspace-euler": [("limit", "halfspace-euler")],
    "halfspace-ns": [("ns-limit", "halfspace-ns"), ("limit", "halfspace-free")],
}


class ConditionsFailed(LatticeHydroError):
    def __init__(self, report):
        failed = [k for k, e in report.entries.items() if not e.passed]
        super().__init__(f"conditions failed: {', '.join(failed)}")
        self.report = report


def build_model(cfg: ExperimentConfig):
    V = build_nearest_neighbor(cfg.model.d, list(cfg.model.gamma), list(cfg.model.m))
    T = make_profile_family(cfg.profile.family, **cfg.profile.params)
    profile = product_profile(T, gibbs_spectral(V, cfg.profile.T0))
    return V, profile


def _block_rows(exp, eps, z, zp, kind, M):
    M = np.asarray(M)
    rows = []
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            v = complex(M[i, j])
            rows.append(Row(exp.id, eps, exp.tau, exp.kappa, exp.r, z, zp, i, j, kind, v.real, v.imag))
    return rows


def _err_rows(exp, eps, z, zp, diff):
    diff = np.abs(np.asarray(diff))
    return [
        Row(exp.id, eps, exp.tau, exp.kappa, exp.r, z, zp, i, j, "err", float(diff[i, j]), 0.0)
        for i in range(diff.shape[0])
        for j in range(diff.shape[1])
    ]


def _covariance_sweep(V, profile, cfg, table):
    exp = cfg.experiment
    kinds = LIMITS[exp.kind]
    for eps in exp.eps:
        q = ScaledQuery(exp.tau, exp.kappa, exp.r, exp.offsets, eps, anchor=exp.anchor)
        stderr = None
        if exp.nsamples:
            if exp.kind.startswith("halfspace"):
                raise LatticeHydroError("Monte Carlo is available for full-space experiments only")
            mc = empirical_covariance(V, profile, q, exp.nsamples, exp.seed, box=exp.box, jobs=exp.jobs)
            micro = {k: v[0] for k, v in mc.items()}
            stderr = {k: v[1] for k, v in mc.items()}
        elif exp.kind.startswith("halfspace"):
            micro = halfspace_covariance(V, profile, q, box=exp.box)
        else:
            micro = propagate_covariance(V, profile, q, box=exp.box)
        limits = [
            (vk, position_limit(V, profile, q, lk, resolution=exp.resolution, k=exp.k)) for vk, lk in kinds
        ]
        for z, zp in q.offsets:
            key = (z, zp)
            table.extend(_block_rows(exp, eps, z, zp, "micro", micro[key].data))
            if stderr is not None:
                table.extend(_block_rows(exp, eps, z, zp, "stderr", stderr[key].data))
            for vk, lim in limits:
                table.extend(_block_rows(exp, eps, z, zp, vk, lim[key].data))
            table.extend(_err_rows(exp, eps, z, zp, micro[key].data - limits[0][1][key].data))
        log.info("eps=%g done (%d offset pairs)", eps, len(q.offsets))


def _theta_panel(count, d):
    axis = -np.pi + 2 * np.pi * (np.arange(count) + 0.5) / count
    return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)


def _wigner_sweep(V, profile, cfg, table):
    exp = cfg.experiment
    th = _theta_panel(exp.theta, V.d)
    points = exp.r_sweep or (exp.r,)
    for r in points:
        lim = wigner_limit(V, profile, exp.tau, r, th)
        for eps in exp.eps:
            if exp.nsamples:
                W = wigner_empirical(
                    V, profile, eps, exp.tau, r, th, exp.nsamples, exp.seed, ymax=exp.ymax,
                    convention=exp.convention, box=exp.box, jobs=exp.jobs,
                )
            else:
                W = wigner_exact(V, profile, eps, exp.tau, r, th, ymax=exp.ymax, convention=exp.convention, box=exp.box)
            for it, t in enumerate(th):
                z = tuple(float(c) for c in t)
                rows = _block_rows(exp, eps, z, "", "micro", W.values[0, it])
                rows += _block_rows(exp, eps, z, "", "limit", lim[it])
                rows += _err_rows(exp, eps, z, "", W.values[0, it] - lim[it])
                if W.stderr is not None:
                    rows += _block_rows(exp, eps, z, "", "stderr", W.stderr[0, it])
                for row in rows:
                    row.r = tuple(r)
                table.extend(rows)


def _conservation_sweep(V, profile, cfg, table):
    exp = cfg.experiment
    e_lim = energy_density_limit(V, profile, exp.tau, exp.r)
    j_lim = energy_current_limit(V, profile, exp.tau, exp.r)
    for eps in exp.eps:
        e = microscopic_energy(V, profile, exp.tau, exp.r, eps, box=exp.box)
        vals = [(0, e, e_lim)]
        for k in range(V.d):
            vals.append((1 + k, microscopic_current(V, profile, exp.tau, exp.r, eps, k=k, box=exp.box), j_lim[k]))
        for i, micro, lim in vals:
            for kind, v in (("micro", micro), ("limit", lim), ("err", abs(micro - lim))):
                table.append(Row(exp.id, eps, exp.tau, exp.kappa, exp.r, "", "", i, 0, kind, float(v), 0.0))


def _conditions(V, cfg, table):
    exp = cfg.experiment
    report = check_conditions(V)
    for name, entry in report.entries.items():
        table.append(
            Row(exp.id, None, exp.tau, exp.kappa, exp.r, name, "", 0, 0, "err", 0.0 if entry.passed else 1.0, 0.0)
        )
    return report


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    """Run the configured sweep and return its result table (not yet written)."""
    V, profile = build_model(cfg)
    exp = cfg.experiment
    table = ResultTable(config_hash=cfg.config_hash)
    table.meta["kind"] = exp.kind
    table.meta["seed"] = exp.seed
    if exp.kind == "conditions":
        report = _conditions(V, cfg, table)
        table.meta["conditions"] = "pass" if report.all_passed else "fail"
        return table
    report = check_conditions(V)
    if not report.all_passed:
        if not exp.override_conditions:
            raise ConditionsFailed(report)
        table.meta["conditions"] = "overridden"
    if exp.kind in LIMITS:
        _covariance_sweep(V, profile, cfg, table)
    elif exp.kind == "wigner":
        _wigner_sweep(V, profile, cfg, table)
    elif exp.kind == "conservation":
        _conservation_sweep(V, profile, cfg, table)
    return table

"""Evaluate configured experiments and write CSV tables.

Every table starts with ``#`` lines recording the library version, the command
and the resolved configuration, followed by a header row and one row per grid
point.  Rows are produced in grid order whatever the number of workers, and
no wall-clock data is written, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .groups import check_closure, generate_group
from .liouville import DimensionError, build_embedding
from .metrics import (
    anticoherence_order, dicke_populations, equatorial_qfi, hs_distance_mms, isotropic_qfi_check,
    loglog_slope, multipole_norms, negativity, purity, qfi, symmetry_deviation, wigner_sphere,
)
from .models import (
    DEFAULTS, PRESET_GROUP, PresetError, coupling_operators, lindblad_limit_generator, preset,
    redfield_generator,
)
from .nogo import verify_nogo
from .spin import MAX_ISOMETRY_SPINS, SpinSystem, collective_spin_ops, ladder_ops
from .steady import SteadyStateError, solve_model, steady_state, uniqueness_certificate

log = logging.getLogger(__name__)

REDFIELD_NEG_TOL = 1e-6
N_DIRECTIONS = 50
SOLVER_ERRORS = (SteadyStateError, DimensionError, np.linalg.LinAlgError)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _m_label(m: float) -> str:
    f = Fraction(m).limit_denominator(2)
    return f"p_{'+' if f > 0 else ''}{f}"


def kappa_list(p: dict, n_couplings: int) -> list[float] | float | None:
    """Decay rates for a point: ``kappa_bar (1 + x t)`` with ``t`` evenly spaced in ``[-1, 1]``."""
    kappa = p["kappa"] if p["kappa"] is not None else DEFAULTS[p["preset"]]["kappa"]
    x = p["rate_imbalance"]
    if not x:
        return kappa
    ks = [float(kappa) * (1 + x * t) for t in np.linspace(-1, 1, n_couplings)]
    order = p.get("rate_order")
    if order is not None:
        if sorted(order) != list(range(n_couplings)):
            raise PresetError(f"rate_order must be a permutation of 0..{n_couplings - 1}")
        ks = [ks[i] for i in order]
    return ks


def build_point(p: dict):
    n = p["n_spins"] if p["n_spins"] is not None else DEFAULTS[p["preset"]]["n_spins"]
    n_e = len(coupling_operators(p["preset"], SpinSystem(n)))
    params = {k: p[k] for k in ("aux", "h", "omega", "gamma") if p[k] is not None}
    if isinstance(p["truncation"], int):
        params["truncation"] = p["truncation"]
    params["kappa"] = kappa_list(p, n_e)
    return preset(p["preset"], n, **params)


def solve_point(p: dict, *, tol: float = 1e-8, certify: bool = False, seed: int = 0):
    """Returns ``(preset_model, spin_state, info)``; solver errors propagate."""
    pm = build_point(p)
    info: dict = {}
    if p["generator"] == "embedding":
        trunc = "adaptive" if p["truncation"] == "adaptive" else pm.params["truncation"]
        rep = solve_model(pm.model, truncation=trunc, tol=tol, seed=seed)
        rho = rep.rho_spin
        info.update(truncation_used=rep.truncation_used, truncation_converged=rep.truncation_converged)
        if certify:
            m = pm.model if rep.truncation_used is None else pm.model.with_truncation(rep.truncation_used)
            info["unique"] = uniqueness_certificate(build_embedding(m), seed=seed)[0]
    else:
        L = lindblad_limit_generator(pm) if p["generator"] == "lindblad_limit" else redfield_generator(pm)
        neg = REDFIELD_NEG_TOL if p["generator"] == "redfield" else 1e-9
        rep = steady_state(L, neg_tol=neg, seed=seed)
        rho = rep.rho_ss
        if certify:
            info["unique"] = uniqueness_certificate(L, seed=seed)[0]
    info.update(nullity=rep.nullity, residual=rep.residual, method=rep.method)
    return pm, rho, info


def point_columns(p: dict, pm=None) -> dict:
    kappa = p["kappa"] if pm is None else pm.params["kappa"]
    kbar = float(np.mean(kappa)) if kappa is not None else None
    omega = p["omega"] if pm is None else pm.params["omega"]
    h = p["h"] if pm is None else pm.params["h"]
    row = {
        "preset": p["preset"],
        "n_spins": p["n_spins"] if pm is None else pm.sys.n_spins,
        "aux": p["aux"] if pm is None else pm.params["aux"],
        "generator": p["generator"],
        "h": h, "omega": omega,
        "gamma": p["gamma"] if pm is None else pm.params["gamma"],
        "kappa": kbar,
        "rate_imbalance": p["rate_imbalance"],
    }
    ok_num = omega not in (None, 0)
    row["h_over_omega"] = h / omega if ok_num and h is not None else None
    row["kappa_over_omega"] = kbar / omega if ok_num and kbar is not None else None
    return row


def metric_columns(rho: np.ndarray, pm, cfg_metrics, cut) -> dict:
    sys = pm.sys
    N = sys.n_spins
    out: dict = {}
    if "hs_dist_mms" in cfg_metrics:
        out["hs_dist_mms"] = hs_distance_mms(rho)
    if "purity" in cfg_metrics:
        out["purity"] = purity(rho)
    if "negativity" in cfg_metrics and 2 <= N <= MAX_ISOMETRY_SPINS:
        c = cut if cut is not None else N // 2
        if c < N:
            out[f"negativity_{c}_{N - c}"] = negativity(rho, sys, c)
    if "qfi_z" in cfg_metrics:
        out["qfi_z"] = qfi(rho, collective_spin_ops(sys)[2])
    if "qfi_equatorial" in cfg_metrics:
        mean, spread = equatorial_qfi(rho)
        out.update(F_perp=mean, F_perp_over_N=mean / N, F_perp_spread=spread)
    if "qfi_isotropic" in cfg_metrics:
        mean, spread = isotropic_qfi_check(rho, N_DIRECTIONS)
        out.update(F_iso=mean, F_iso_over_N=mean / N, F_iso_spread_rel=spread / mean if mean > 0 else 0.0)
    if "anticoherence" in cfg_metrics:
        out["anticoherence_order"] = anticoherence_order(rho, sys)
    if "multipoles" in cfg_metrics:
        for L, a in enumerate(multipole_norms(rho, sys), start=1):
            out[f"A_{L}"] = a
    if "delta_g" in cfg_metrics:
        out["delta_g"] = symmetry_deviation(rho, pm.group)
    if "populations" in cfg_metrics:
        p, off = dicke_populations(rho)
        for m, val in zip(sys.m_values(), p):
            out[_m_label(m)] = val
        out["offdiag_mass"] = off
    return out


def evaluate_point(args) -> dict:
    """One sweep row; solver failures become ``status=solver_failure``."""
    p, metrics, cut, tol, certify, seed = args
    try:
        pm, rho, info = solve_point(p, tol=tol, certify=certify, seed=seed)
    except SOLVER_ERRORS as exc:
        row = point_columns(p)
        row.update(status="solver_failure", error=str(exc))
        return row
    row = point_columns(p, pm)
    row.update(status="ok", error="")
    row.update(info)
    row.update(metric_columns(rho, pm, metrics, cut))
    return row


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_sweep(cfg: ExperimentConfig, certify: bool | None = None) -> list[dict]:
    certify = cfg.certify if certify is None else certify
    items = [(p, tuple(cfg.metrics), cfg.cut, cfg.tol, certify, cfg.seed) for p in cfg.grid_points()]
    return _map(evaluate_point, items, cfg.jobs)


def fit_lines(rows: list[dict], fit: dict | None) -> list[str]:
    """Log-log slopes of ``fit['y']`` against ``fit['x']`` per group of ``fit['by']`` columns."""
    if not fit:
        return []
    by = fit.get("by", [])
    groups: dict = {}
    for r in rows:
        x, y = r.get(fit["x"]), r.get(fit["y"])
        if r.get("status") != "ok" or x is None or y is None or x <= 0 or y <= 0:
            continue
        if x < fit.get("min_x", -np.inf):
            continue
        groups.setdefault(tuple(r.get(b) for b in by), []).append((x, y))
    lines = []
    for key, pts in groups.items():
        label = " ".join(f"{b}={k}" for b, k in zip(by, key))
        if len(pts) < 2:
            continue
        xs, ys = zip(*pts)
        lines.append(f"fit {fit['y']} ~ {fit['x']}^slope {label}: slope={_fmt(loglog_slope(xs, ys))} points={len(pts)}")
    return lines


def header_config(cfg: ExperimentConfig) -> dict:
    d = cfg.to_dict()
    # worker count and destination do not affect the table contents
    d.pop("jobs")
    d.pop("out")
    return d


def write_table(rows: list[dict], cfg: ExperimentConfig, command: str, footer: list[str] = (),
                stream=None) -> str:
    columns: list[str] = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    buf.write(f"# spinsteady {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# config: {json.dumps(header_config(cfg), sort_keys=True, separators=(',', ':'))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    for line in footer:
        buf.write(f"# {line}\n")
    text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    elif stream is not None:
        stream.write(text)
    return text


def run_wigner(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for p in cfg.grid_points():
        pm, rho, _ = solve_point(p, tol=cfg.tol, seed=cfg.seed)
        theta, phi, W = wigner_sphere(rho, pm.sys, tuple(cfg.grid))
        base = {"preset": p["preset"], "n_spins": pm.sys.n_spins, "h": pm.params["h"]}
        for i, t in enumerate(theta):
            for j, f in enumerate(phi):
                rows.append({**base, "theta": t, "phi": f, "W": W[i, j]})
    return rows


def _named_jumps(names, sys: SpinSystem):
    sx, sy, sz = collective_spin_ops(sys)
    splus, sminus = ladder_ops(sys)
    table = {"Sx": sx, "Sy": sy, "Sz": sz, "S+": splus, "S-": sminus}
    return [table[n] for n in names]


def run_closure(cfg: ExperimentConfig):
    """Rows of the closure table plus a summary ``(strict_ok, span_ok)``."""
    n = cfg.n_spins if cfg.n_spins is not None else DEFAULTS[cfg.preset]["n_spins"]
    sys = SpinSystem(n)
    group = generate_group(sys, cfg.group or PRESET_GROUP[cfg.preset], seed=cfg.seed)
    jumps = _named_jumps(cfg.jumps, sys) if cfg.jumps else coupling_operators(cfg.preset, sys)
    rep = check_closure(group, jumps)
    rows = [{"element": e.element, "label": group[e.element].label, "mu": e.mu, "nu": e.nu,
             "phase": e.phase, "match_error": e.error} for e in rep.table]
    return rows, rep


def run_nogo(cfg: ExperimentConfig):
    results = verify_nogo(cfg.n_spins_list, cfg.n_instances, cfg.seed, tuple(cfg.families))
    rows = [{"n_spins": r.instance.n_spins, "family": r.instance.family, "instance": r.instance.index,
             "independent": r.instance.independent, "hs_dist_mms": r.hs_dist_mms, "nullity": r.nullity,
             "commutator_sum": r.commutator_sum, "passed": r.passed} for r in results]
    return rows, results

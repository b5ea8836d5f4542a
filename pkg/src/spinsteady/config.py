"""Experiment configuration for the command-line front end.

A configuration is a flat JSON object.  Point parameters (``preset``,
``n_spins``, ``aux``, ``h``, ``omega``, ``gamma``, ``kappa``, ``truncation``,
``rate_imbalance``, ``generator``) describe one model; ``sweep`` lists axes
whose Cartesian product (first axis outermost) gives the grid.  An axis is
either ``{"param": p, "values": [...]}`` or
``{"param": p, "start": a, "stop": b, "count": n, "scale": "log"|"linear"}``.
"""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

import numpy as np

from .liouville import AUX_KINDS
from .models import DEFAULTS, PRESET_IDS
from .nogo import FAMILIES
from .groups import GROUP_NAMES

METRICS = ("hs_dist_mms", "purity", "negativity", "qfi_z", "qfi_equatorial", "qfi_isotropic",
           "anticoherence", "multipoles", "delta_g", "populations")
DEFAULT_METRICS = ("hs_dist_mms", "purity", "qfi_z", "qfi_equatorial", "anticoherence", "delta_g")
GENERATORS = ("embedding", "lindblad_limit", "redfield")
POINT_KEYS = ("preset", "n_spins", "aux", "h", "omega", "gamma", "kappa", "truncation",
              "rate_imbalance", "rate_order", "generator")
JUMP_NAMES = ("Sx", "Sy", "Sz", "S+", "S-")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


@dataclass
class ExperimentConfig:
    preset: str = "d2_minimal"
    n_spins: Optional[int] = None
    aux: Optional[str] = None
    h: Optional[float] = None
    omega: Optional[float] = None
    gamma: Optional[float] = None
    kappa: Any = None
    truncation: Any = None
    rate_imbalance: float = 0.0
    rate_order: Optional[list] = None
    generator: str = "embedding"
    sweep: list = field(default_factory=list)
    metrics: list = field(default_factory=lambda: list(DEFAULT_METRICS))
    cut: Optional[int] = None
    tol: float = 1e-8
    certify: bool = False
    grid: list = field(default_factory=lambda: [32, 64])
    fit: Optional[dict] = None
    # verify-nogo
    n_spins_list: list = field(default_factory=lambda: [2, 3, 4, 5, 6])
    n_instances: int = 50
    families: list = field(default_factory=lambda: list(FAMILIES))
    # closure-check
    group: Optional[str] = None
    jumps: Optional[list] = None
    # run control
    recipe: Optional[str] = None
    command: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    jobs: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    def point(self) -> dict:
        return {k: getattr(self, k) for k in POINT_KEYS}

    def grid_points(self) -> list[dict]:
        """Resolved point parameters for every grid point, in output order."""
        axes = [(ax["param"], axis_values(ax)) for ax in self.sweep]
        base = self.point()
        out = []
        for combo in itertools.product(*[v for _, v in axes]):
            p = dict(base)
            for (name, _), val in zip(axes, combo):
                p[name] = val
            out.append(p)
        return out


def axis_values(ax: dict) -> list:
    if "values" in ax:
        return list(ax["values"])
    a, b, n = float(ax["start"]), float(ax["stop"]), int(ax["count"])
    if ax.get("scale", "linear") == "log":
        vals = np.logspace(np.log10(a), np.log10(b), n)
    else:
        vals = np.linspace(a, b, n)
    return [float(v) for v in vals]


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_set(items) -> dict:
    """``["k=v", ...]`` to a dict; values are parsed as JSON when possible."""
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v.strip())
    return out


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def _check_point(p: dict, where: str) -> None:
    if p["preset"] not in PRESET_IDS:
        raise ConfigError(f"{where}: unknown preset {p['preset']!r} (expected one of {', '.join(PRESET_IDS)})")
    if p["n_spins"] is not None and not (isinstance(p["n_spins"], int) and not isinstance(p["n_spins"], bool)
                                         and p["n_spins"] >= 1):
        raise ConfigError(f"{where}: n_spins must be a positive integer")
    if p["aux"] is not None and p["aux"] not in AUX_KINDS:
        raise ConfigError(f"{where}: aux must be one of {AUX_KINDS}")
    for k in ("h", "omega"):
        if p[k] is not None and not _is_num(p[k]):
            raise ConfigError(f"{where}: {k} must be a number")
    if p["gamma"] is not None and not (_is_num(p["gamma"]) and p["gamma"] >= 0):
        raise ConfigError(f"{where}: gamma must be a non-negative number")
    k = p["kappa"]
    if k is not None:
        ks = k if isinstance(k, list) else [k]
        if not ks or not all(_is_num(x) and x > 0 for x in ks):
            raise ConfigError(f"{where}: kappa must be a positive number or a list of them")
    t = p["truncation"]
    if t is not None and t != "adaptive" and not (isinstance(t, int) and not isinstance(t, bool) and t >= 2):
        raise ConfigError(f"{where}: truncation must be an integer >= 2 or \"adaptive\"")
    if not (_is_num(p["rate_imbalance"]) and 0 <= p["rate_imbalance"] < 1):
        raise ConfigError(f"{where}: rate_imbalance must lie in [0, 1)")
    if p["rate_imbalance"] and isinstance(k, list):
        raise ConfigError(f"{where}: give either a kappa list or rate_imbalance, not both")
    if p["generator"] not in GENERATORS:
        raise ConfigError(f"{where}: generator must be one of {GENERATORS}")


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if not isinstance(cfg.sweep, list):
        raise ConfigError("sweep must be a list of axes")
    for ax in cfg.sweep:
        if not isinstance(ax, dict) or ax.get("param") not in POINT_KEYS:
            raise ConfigError(f"sweep axis {ax!r} must name one of {POINT_KEYS}")
        if "values" in ax:
            if not isinstance(ax["values"], list) or not ax["values"]:
                raise ConfigError(f"sweep axis {ax['param']}: values must be a non-empty list")
        else:
            try:
                a, b, n = float(ax["start"]), float(ax["stop"]), ax["count"]
            except (KeyError, TypeError, ValueError):
                raise ConfigError(f"sweep axis {ax['param']}: needs values or start/stop/count") from None
            if not isinstance(n, int) or n < 1:
                raise ConfigError(f"sweep axis {ax['param']}: count must be an integer >= 1")
            scale = ax.get("scale", "linear")
            if scale not in ("log", "linear"):
                raise ConfigError(f"sweep axis {ax['param']}: scale must be log or linear")
            if scale == "log" and (a <= 0 or b <= 0):
                raise ConfigError(f"sweep axis {ax['param']}: log grid needs positive bounds")
    for i, p in enumerate(cfg.grid_points()):
        _check_point(p, f"grid point {i}")
    bad = set(cfg.metrics) - set(METRICS)
    if bad:
        raise ConfigError(f"unknown metrics {sorted(bad)}; expected a subset of {METRICS}")
    if cfg.cut is not None and not (isinstance(cfg.cut, int) and cfg.cut >= 1):
        raise ConfigError("cut must be a positive integer")
    if not (isinstance(cfg.grid, list) and len(cfg.grid) == 2 and all(isinstance(g, int) for g in cfg.grid)
            and cfg.grid[0] >= 16 and cfg.grid[1] >= 32):
        raise ConfigError("grid must be [n_theta >= 16, n_phi >= 32]")
    if not (isinstance(cfg.jobs, int) and cfg.jobs >= 1):
        raise ConfigError("jobs must be a positive integer")
    if not (isinstance(cfg.seed, int) and cfg.seed >= 0):
        raise ConfigError("seed must be a non-negative integer")
    if not (_is_num(cfg.tol) and cfg.tol > 0):
        raise ConfigError("tol must be positive")
    if not all(isinstance(n, int) and n >= 1 for n in cfg.n_spins_list):
        raise ConfigError("n_spins_list must hold positive integers")
    if set(cfg.families) - set(FAMILIES):
        raise ConfigError(f"families must be a subset of {FAMILIES}")
    if not (isinstance(cfg.n_instances, int) and cfg.n_instances >= 1):
        raise ConfigError("n_instances must be a positive integer")
    if cfg.group is not None and cfg.group not in GROUP_NAMES:
        raise ConfigError(f"group must be one of {GROUP_NAMES}")
    if cfg.jumps is not None and (not cfg.jumps or set(cfg.jumps) - set(JUMP_NAMES)):
        raise ConfigError(f"jumps must be a non-empty list drawn from {JUMP_NAMES}")
    if cfg.fit is not None and not {"x", "y"} <= set(cfg.fit):
        raise ConfigError("fit needs keys x and y")
    return cfg


RECIPES: dict[str, dict] = {
    "fig2": dict(
        command="sweep", preset="d2_minimal", n_spins=5, h=10.0, omega=1.0, gamma=2.5, truncation=6, cut=2,
        metrics=["hs_dist_mms", "negativity", "purity"],
        sweep=[{"param": "aux", "values": ["fermion", "boson", "twolevel"]},
               {"param": "kappa", "start": 1.0, "stop": 1000.0, "count": 13, "scale": "log"}],
        fit={"x": "kappa_over_omega", "y": "hs_dist_mms", "by": ["aux"], "min_x": 100.0},
    ),
    "fig3": dict(
        command="sweep", preset="u1z2", n_spins=6, aux="boson", omega=1.0, gamma=1.0, truncation=6,
        metrics=["qfi_equatorial", "qfi_z", "populations", "hs_dist_mms"],
        sweep=[{"param": "h", "start": 0.0, "stop": 8.0, "count": 9, "scale": "linear"},
               {"param": "kappa", "start": 0.01, "stop": 1000.0, "count": 11, "scale": "log"}],
    ),
    "fig4a": dict(
        command="wigner", aux="boson", omega=1.0, gamma=0.5, kappa=0.5, truncation=4,
        sweep=[{"param": "preset", "values": ["tetra", "octa", "icosa"]}],
    ),
    "fig4b": dict(
        command="sweep", aux="boson", omega=1.0, gamma=0.5, kappa=0.5, truncation=4,
        metrics=["qfi_isotropic", "anticoherence", "hs_dist_mms", "purity"],
        sweep=[{"param": "preset", "values": ["tetra", "octa", "icosa"]},
               {"param": "h", "start": 0.05, "stop": 5.0, "count": 9, "scale": "log"}],
    ),
    "fig4c": dict(
        command="sweep", aux="boson", omega=1.0, gamma=0.5, kappa=0.5, truncation=4,
        metrics=["delta_g", "qfi_isotropic"],
        sweep=[{"param": "preset", "values": ["tetra", "octa", "icosa"]},
               {"param": "rate_imbalance", "start": 1e-3, "stop": 1e-1, "count": 6, "scale": "log"}],
        fit={"x": "rate_imbalance", "y": "delta_g", "by": ["preset"]},
    ),
    "sm-fig-s1": dict(
        command="wigner", preset="tetra", n_spins=5, aux="boson", h=1.0, omega=1.0, gamma=0.5, kappa=0.5,
        truncation=4, metrics=["anticoherence", "purity", "hs_dist_mms"],
    ),
}


def resolve(file_data: dict | None = None, *, recipe: str | None = None, preset: str | None = None,
            overrides: dict | None = None, out: str | None = None, seed: int | None = None,
            jobs: int | None = None) -> ExperimentConfig:
    """Merge recipe < config file < command-line flags and validate."""
    data: dict = {}
    file_data = dict(file_data or {})
    recipe = recipe or file_data.get("recipe")
    if recipe is not None:
        if recipe not in RECIPES:
            raise ConfigError(f"unknown recipe {recipe!r} (expected one of {', '.join(RECIPES)})")
        data.update(copy.deepcopy(RECIPES[recipe]))
        data["recipe"] = recipe
    data.update(file_data)
    flags = dict(overrides or {})
    for k, v in (("preset", preset), ("out", out), ("seed", seed), ("jobs", jobs)):
        if v is not None:
            flags[k] = v
    data.update(flags)
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
    cfg = validate(ExperimentConfig(**data))
    swept = {ax["param"] for ax in cfg.sweep}
    if "preset" not in swept:
        # record the preset defaults actually used
        for k, v in DEFAULTS[cfg.preset].items():
            if k not in swept and getattr(cfg, k) is None:
                setattr(cfg, k, copy.deepcopy(v))
    return cfg


def load_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data

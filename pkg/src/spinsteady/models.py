"""Preset embeddings and their reduced (Lindblad-limit and Redfield) generators.

All presets use the coupling ``g = sqrt(gamma kappa / 2N)`` so that the
auxiliaries can be eliminated for ``kappa -> inf``.  Energies are in units of
``omega`` unless overridden.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .groups import (
    ICOSA_AXES, TETRA_AXES, ClosureReport, SymmetryGroup, check_closure, generate_group,
)
from .liouville import AuxSpec, EmbeddingModel, SuperOperator, lindblad_superop
from .spin import SpinSystem, collective_spin_ops, ladder_ops, spin_component

PRESET_IDS = ("d2_minimal", "u1z2", "tetra", "tetra_axes", "octa", "icosa")

PRESET_GROUP = {
    "d2_minimal": "D2", "u1z2": "U1sampled", "tetra": "T",
    "tetra_axes": "T", "octa": "O", "icosa": "I",
}

DEFAULTS = {
    "d2_minimal": dict(n_spins=5, aux="twolevel", h=10.0, omega=1.0, gamma=2.5, kappa=10.0, truncation=4),
    "u1z2": dict(n_spins=6, aux="boson", h=2.0, omega=1.0, gamma=1.0, kappa=0.1, truncation=6),
    "tetra": dict(n_spins=4, aux="boson", h=1.0, omega=1.0, gamma=0.5, kappa=0.5, truncation=4),
    "tetra_axes": dict(n_spins=4, aux="boson", h=1.0, omega=1.0, gamma=0.5, kappa=0.5, truncation=3),
    "octa": dict(n_spins=6, aux="boson", h=1.0, omega=1.0, gamma=0.5, kappa=0.5, truncation=4),
    "icosa": dict(n_spins=6, aux="boson", h=1 / 6, omega=1.0, gamma=0.5, kappa=0.5, truncation=4),
}

PARAM_NAMES = ("n_spins", "aux", "h", "omega", "gamma", "kappa", "truncation")


class PresetError(ValueError):
    pass


@dataclass(frozen=True)
class PresetModel:
    id: str
    model: EmbeddingModel
    group: SymmetryGroup
    params: dict
    closure: ClosureReport = field(repr=False)

    @property
    def sys(self) -> SpinSystem:
        return self.model.sys


def spin_hamiltonian(preset_id: str, sys: SpinSystem, h: float) -> np.ndarray:
    N = sys.n_spins
    sx, sy, sz = collective_spin_ops(sys)
    sp_, sm = ladder_ops(sys)
    if preset_id in ("d2_minimal", "u1z2"):
        return (h / N) * sz @ sz
    if preset_id == "tetra":
        q = sp_ @ sp_ + sm @ sm
        return (h / N**2) * (q @ sz + sz @ q)
    if preset_id == "tetra_axes":
        return (h / N**2) * sum(np.linalg.matrix_power(spin_component(sys, n), 3) for n in TETRA_AXES)
    if preset_id == "octa":
        return (h / (N / 2) ** 3) * sum(np.linalg.matrix_power(s, 4) for s in (sx, sy, sz))
    if preset_id == "icosa":
        return (h / (N / 2) ** 5) * sum(np.linalg.matrix_power(spin_component(sys, n), 6) for n in ICOSA_AXES)
    raise PresetError(f"unknown preset {preset_id!r}; expected one of {PRESET_IDS}")


def coupling_operators(preset_id: str, sys: SpinSystem) -> list[np.ndarray]:
    sx, sy, sz = collective_spin_ops(sys)
    if preset_id == "d2_minimal":
        return [sx, sy]
    if preset_id == "u1z2":
        sp_, sm = ladder_ops(sys)
        return [sm, sp_]
    if preset_id == "tetra_axes":
        return [spin_component(sys, n) for n in TETRA_AXES]
    if preset_id in ("tetra", "octa", "icosa"):
        return [sx, sy, sz]
    raise PresetError(f"unknown preset {preset_id!r}; expected one of {PRESET_IDS}")


def coupling_strength(gamma: float, kappa: float, n_spins: int) -> float:
    return float(np.sqrt(gamma * kappa / (2 * n_spins)))


def preset(preset_id: str, n_spins: int | None = None, **params) -> PresetModel:
    """Build a preset model.

    ``params`` override :data:`DEFAULTS` (``aux``, ``h``, ``omega``, ``gamma``,
    ``kappa``, ``truncation``).  ``kappa`` may be a list with one rate per
    auxiliary; the coupling then uses the mean rate for every mode.
    """
    if preset_id not in PRESET_IDS:
        raise PresetError(f"unknown preset {preset_id!r}; expected one of {PRESET_IDS}")
    unknown = set(params) - set(PARAM_NAMES)
    if unknown:
        raise PresetError(f"unknown parameter(s) {sorted(unknown)} for preset {preset_id}")
    p = dict(DEFAULTS[preset_id])
    p.update({k: v for k, v in params.items() if v is not None})
    if n_spins is not None:
        p["n_spins"] = int(n_spins)

    sys = SpinSystem(p["n_spins"])
    h_s = spin_hamiltonian(preset_id, sys, float(p["h"]))
    couplings = coupling_operators(preset_id, sys)
    n_e = len(couplings)

    kappa = p["kappa"]
    kappas = [float(k) for k in kappa] if np.ndim(kappa) else [float(kappa)] * n_e
    if len(kappas) != n_e:
        raise PresetError(f"{preset_id} needs {n_e} decay rates, got {len(kappas)}")
    g = coupling_strength(float(p["gamma"]), float(np.mean(kappas)), sys.n_spins)
    aux = [AuxSpec(p["aux"], float(p["omega"]), k, g, int(p["truncation"])) for k in kappas]
    model = EmbeddingModel(sys, h_s, couplings, aux)

    group = generate_group(sys, PRESET_GROUP[preset_id])
    closure = check_closure(group, couplings)
    if not closure.ok:
        if not closure.span_ok:
            raise PresetError(f"{preset_id}: coupling set is not closed under {group.name}")
        if p["aux"] == "twolevel":
            raise PresetError(f"{preset_id}: {group.name} mixes the couplings; two-level auxiliaries "
                              "cannot compensate this (use boson or fermion)")
    worst = max(np.abs(el.act(h_s) - h_s).max() for el in group)
    if worst > 1e-9:
        raise PresetError(f"{preset_id}: Hamiltonian not invariant under {group.name} ({worst:.2e})")
    p["kappa"] = kappas if np.ndim(kappa) else kappas[0]
    return PresetModel(preset_id, model, group, p, closure)


def _gamma(pm: PresetModel) -> float:
    return float(pm.params["gamma"])


def lindblad_limit_generator(pm: PresetModel) -> SuperOperator:
    """Spin-only generator reached for ``kappa -> inf``: prefactor ``gamma/2N`` per coupling."""
    rate = _gamma(pm) / (2 * pm.sys.n_spins)
    return lindblad_superop(pm.model.h_s, [(L, rate) for L in pm.model.couplings])


def filtered_coupling(pm: PresetModel, mu: int) -> np.ndarray:
    """``Lbar_mu = int_0^inf alpha_mu(t) L_mu(-t) dt`` with ``L(-t) = e^{-iHt} L e^{iHt}``.

    In the eigenbasis of ``H_S``, ``(Lbar)_ab = L_ab |g|^2 / (kappa + i(omega + E_a - E_b))``.
    """
    a = pm.model.aux[mu]
    E, V = la.eigh(pm.model.h_s)
    L = V.conj().T @ pm.model.couplings[mu] @ V
    kernel = abs(a.g) ** 2 / (a.kappa + 1j * (a.omega + E[:, None] - E[None, :]))
    return V @ (L * kernel) @ V.conj().T


def redfield_generator(pm: PresetModel) -> SuperOperator:
    """``-i[H_S, .] + sum_mu ([Lbar rho, L^dag] + [L, rho Lbar^dag])``.

    Not completely positive in general.
    """
    H = pm.model.h_s
    d = H.shape[0]
    eye = np.eye(d)
    R = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for mu, L in enumerate(pm.model.couplings):
        Lb = filtered_coupling(pm, mu)
        Ld = L.conj().T
        R = R + np.kron(L.conj(), Lb) - np.kron(eye, Ld @ Lb)
        R = R + np.kron(Lb.conj(), L) - np.kron((Lb.conj().T @ L).T, eye)
    return SuperOperator(d, R)

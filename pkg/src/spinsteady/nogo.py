"""Randomised check that spin-only D2-symmetric generators relax to the MMS.

Jump sets compatible with the two pi-rotation weak symmetries come in a
handful of families: Hermitian collective components ``sqrt(g_a) S_a`` (one,
two or three of them), an equal-rate pair ``S_pm = c1 S_n1 +- c2 S_n2``, and a
Hermitian component together with such a pair.  For each family we draw
random rates, coefficients and a random D2-invariant Hamiltonian, solve the
generator densely, and record the distance to ``I/(N+1)`` and the nullity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .groups import generate_group, group_average_state
from .liouville import lindblad_superop
from .spin import SpinSystem, collective_spin_ops
from .steady import steady_state

FAMILIES = ("K1_hermitian", "K2_hermitian", "K2_pair", "K3_hermitian", "K3_mixed")
MMS_TOL = 1e-10
IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class NogoInstance:
    n_spins: int
    family: str
    index: int
    jumps: tuple
    h_s: np.ndarray
    independent: bool

    def describe(self) -> str:
        return f"N={self.n_spins} family={self.family} instance={self.index}"


@dataclass(frozen=True)
class NogoResult:
    instance: NogoInstance
    hs_dist_mms: float
    nullity: int
    commutator_sum: float
    passed: bool


@lru_cache(maxsize=None)
def _d2(n_spins: int):
    return generate_group(SpinSystem(n_spins), "D2")


def random_d2_hamiltonian(sys: SpinSystem, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random Hermitian operator averaged over the D2 rotations."""
    X = rng.standard_normal((sys.dim, sys.dim)) + 1j * rng.standard_normal((sys.dim, sys.dim))
    H = scale * (X + X.conj().T) / 2
    return group_average_state(H, _d2(sys.n_spins))


def _pair(S, rng):
    n1, n2 = sorted(rng.choice(3, size=2, replace=False))
    c1, c2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return c1 * S[n1] + c2 * S[n2], c1 * S[n1] - c2 * S[n2]


def random_instance(sys: SpinSystem, family: str, rng: np.random.Generator, index: int = 0) -> NogoInstance:
    """Draw one jump set of the given family (prefactors already folded in)."""
    S = collective_spin_ops(sys)
    rate = lambda: rng.uniform(0.1, 2.0)  # noqa: E731
    if family == "K1_hermitian":
        a = int(rng.integers(3))
        jumps = [np.sqrt(rate()) * S[a]]
    elif family == "K2_hermitian":
        a, b = list(combinations(range(3), 2))[int(rng.integers(3))]
        jumps = [np.sqrt(rate()) * S[a], np.sqrt(rate()) * S[b]]
    elif family == "K2_pair":
        g = np.sqrt(rate())
        jumps = [g * L for L in _pair(S, rng)]
    elif family == "K3_hermitian":
        jumps = [np.sqrt(rate()) * s for s in S]
    elif family == "K3_mixed":
        g = np.sqrt(rate())
        jumps = [np.sqrt(rate()) * S[int(rng.integers(3))]] + [g * L for L in _pair(S, rng)]
    else:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    H = random_d2_hamiltonian(sys, rng)
    flat = np.array([J.reshape(-1) for J in jumps])
    independent = len(jumps) >= 2 and np.linalg.matrix_rank(flat, tol=1e-10) >= 2
    return NogoInstance(sys.n_spins, family, index, tuple(jumps), H, bool(independent))


def check_instance(inst: NogoInstance) -> NogoResult:
    """Solve the instance; pass iff the MMS is stationary and, for independent jumps, unique."""
    sys = SpinSystem(inst.n_spins)
    L = lindblad_superop(inst.h_s, [(J, 1.0) for J in inst.jumps])
    mms = np.eye(sys.dim) / sys.dim
    stationary = np.linalg.norm(L(mms)) < MMS_TOL
    rep = steady_state(L, method="dense_eig")
    dist = float(np.linalg.norm(rep.rho_ss - mms))
    comm = float(np.linalg.norm(sum(J @ J.conj().T - J.conj().T @ J for J in inst.jumps)))
    ok = stationary and comm < IDENTITY_TOL
    if inst.independent:
        ok = ok and rep.nullity == 1 and dist < MMS_TOL
    return NogoResult(inst, dist, rep.nullity, comm, bool(ok))


def verify_nogo(n_spins_list=range(2, 7), n_instances: int = 50, seed: int = 0,
                families=FAMILIES) -> list[NogoResult]:
    """Run ``n_instances`` random draws of every family for every ``N``."""
    rng = np.random.default_rng(seed)
    out = []
    for n in n_spins_list:
        sys = SpinSystem(int(n))
        for fam in families:
            for i in range(n_instances):
                out.append(check_instance(random_instance(sys, fam, rng, i)))
    return out

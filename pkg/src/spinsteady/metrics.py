"""Diagnostics of spin steady states.

Every function takes a density matrix on the Dicke space (``(N+1) x (N+1)``)
and returns plain floats or arrays.  The quantum Fisher information uses the
convention in which a pure state gives ``4 Var(A)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
from scipy.special import sph_harm_y

from .groups import SymmetryGroup, group_average_state
from .spin import SpinSystem, collective_spin_ops, dicke_isometry, is_hermitian, multipole_coefficients

QFI_CUTOFF = 1e-12
ANTICOHERENCE_TOL = 1e-8


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.vdot(rho, rho)))


def hs_distance_mms(rho: np.ndarray) -> float:
    """Hilbert-Schmidt distance to ``I/d``."""
    d = rho.shape[0]
    return float(np.linalg.norm(rho - np.eye(d) / d))


def qfi(rho: np.ndarray, generator: np.ndarray, cutoff: float = QFI_CUTOFF) -> float:
    """``F = 2 sum (l_k - l_l)^2/(l_k + l_l) |<k|A|l>|^2`` over pairs with ``l_k + l_l > cutoff``."""
    if not is_hermitian(generator, atol=1e-10):
        raise ValueError("QFI generator must be Hermitian")
    lam, V = la.eigh((rho + rho.conj().T) / 2)
    A = V.conj().T @ generator @ V
    s = lam[:, None] + lam[None, :]
    num = (lam[:, None] - lam[None, :]) ** 2
    mask = s > cutoff
    w = np.zeros_like(s)
    w[mask] = num[mask] / s[mask]
    return float(max(2 * np.sum(w * np.abs(A) ** 2), 0.0))


def equatorial_qfi(rho: np.ndarray, n_angles: int = 16) -> tuple[float, float]:
    """Mean and spread (max - min) of ``F(rho, cos(phi) Sx + sin(phi) Sy)``."""
    if n_angles < 4:
        raise ValueError("n_angles must be at least 4")
    sx, sy, _ = collective_spin_ops(SpinSystem(rho.shape[0] - 1))
    phis = np.arange(n_angles) * 2 * np.pi / n_angles
    vals = np.array([qfi(rho, np.cos(p) * sx + np.sin(p) * sy) for p in phis])
    return float(vals.mean()), float(vals.max() - vals.min())


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` quasi-uniform unit vectors (golden-angle spiral), shape ``(n, 3)``."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z**2)
    phi = np.pi * (3 - np.sqrt(5)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def isotropic_qfi_check(rho: np.ndarray, n_directions: int = 50) -> tuple[float, float]:
    """Mean and spread of ``F(rho, n.S)`` over a Fibonacci lattice of directions."""
    if n_directions < 10:
        raise ValueError("n_directions must be at least 10")
    S = collective_spin_ops(SpinSystem(rho.shape[0] - 1))
    vals = np.array([qfi(rho, sum(c * s for c, s in zip(n, S))) for n in fibonacci_sphere(n_directions)])
    return float(vals.mean()), float(vals.max() - vals.min())


def _partial_transpose(rho: np.ndarray, n_qubits: int, cut: int) -> np.ndarray:
    da, db = 2**cut, 2 ** (n_qubits - cut)
    r = rho.reshape(da, db, da, db)
    return r.transpose(2, 1, 0, 3).reshape(da * db, da * db)


def negativity(rho_spin: np.ndarray, sys: SpinSystem, cut: int) -> float:
    """Negativity across the first ``cut`` qubits after embedding in the qubit space."""
    if not 1 <= cut < sys.n_spins:
        raise ValueError(f"cut must satisfy 1 <= cut < N={sys.n_spins}")
    full = dicke_isometry(sys.n_spins).embed(rho_spin)
    pt = _partial_transpose(full, sys.n_spins, cut)
    ev = la.eigvalsh((pt + pt.conj().T) / 2)
    return float(max(-ev[ev < 0].sum(), 0.0))


def multipole_norms(rho: np.ndarray, sys: SpinSystem) -> np.ndarray:
    """``A_L = sum_M |rho_LM|^2`` for ``L = 1..2j``; entry ``L-1`` holds rank ``L``."""
    c = multipole_coefficients(rho, sys)
    return np.array([float(np.sum(np.abs(c[L]) ** 2)) for L in range(1, sys.n_spins + 1)])


def anticoherence_order(rho: np.ndarray, sys: SpinSystem, tol: float = ANTICOHERENCE_TOL) -> int:
    """Largest ``t`` with ``A_L < tol`` for every ``L <= t``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    t = 0
    for a in multipole_norms(rho, sys):
        if a >= tol:
            break
        t += 1
    return t


def symmetry_deviation(rho: np.ndarray, group: SymmetryGroup) -> float:
    """``1 - Tr(rho rho_G)/Tr(rho^2)`` with ``rho_G`` the group average."""
    rg = group_average_state(rho, group)
    val = 1 - np.real(np.vdot(rho, rg)) / purity(rho)
    return float(min(max(val, 0.0), 1.0))


def dicke_populations(rho: np.ndarray) -> tuple[np.ndarray, float]:
    """Diagonal populations (basis order ``m = +j..-j``) and the off-diagonal HS mass."""
    p = np.real(np.diag(rho)).copy()
    off = rho - np.diag(np.diag(rho))
    return p, float(np.linalg.norm(off))


def population_asymmetry(p: np.ndarray) -> float:
    """``max |p_m - p_{-m}|``."""
    return float(np.abs(p - p[::-1]).max())


def wigner_sphere(rho: np.ndarray, sys: SpinSystem, grid: tuple[int, int] = (16, 32)):
    """Multipole Wigner function ``W = sum rho_LM Y_LM`` on a regular grid.

    ``theta`` runs over cell centres of ``[0, pi]`` and ``phi`` over
    ``[0, 2 pi)``.  Returns ``(theta, phi, W)`` with ``W`` of shape ``grid``.
    Orthonormal ``T_LM`` and ``Y_LM`` are used without extra prefactor, so the
    integral of ``W`` over the sphere is ``sqrt(4 pi / (2j+1))``.
    """
    nt, nphi = grid
    if nt < 16 or nphi < 32:
        raise ValueError("grid must be at least (16, 32)")
    theta = (np.arange(nt) + 0.5) * np.pi / nt
    phi = np.arange(nphi) * 2 * np.pi / nphi
    return theta, phi, wigner_at(rho, sys, *np.meshgrid(theta, phi, indexing="ij"))


def wigner_at(rho: np.ndarray, sys: SpinSystem, theta, phi) -> np.ndarray:
    """Wigner function at arbitrary polar angles (arrays broadcast together)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    W = np.zeros(theta.shape, dtype=complex)
    for L, c in multipole_coefficients(rho, sys).items():
        for M in range(-L, L + 1):
            W += c[M + L] * sph_harm_y(L, M, theta, phi)
    if np.abs(W.imag).max(initial=0) > 1e-10:
        raise ValueError("Wigner function has an imaginary part; is rho Hermitian?")
    return W.real


@dataclass(frozen=True)
class MetricBundle:
    purity: float
    hs_dist_mms: float
    dicke_populations: np.ndarray
    offdiag_mass: float
    qfi_z: float
    qfi_equatorial: float
    qfi_equatorial_spread: float
    qfi_isotropy_spread: float
    anticoherence_order: int
    multipole_norms: np.ndarray = field(repr=False)
    negativity: Optional[float] = None
    delta_g: Optional[float] = None


def metric_bundle(rho: np.ndarray, sys: SpinSystem, group: SymmetryGroup | None = None,
                  cut: int | None = None, n_directions: int = 50) -> MetricBundle:
    p, off = dicke_populations(rho)
    _, _, sz = collective_spin_ops(sys)
    fmean, fspread = equatorial_qfi(rho)
    imean, ispread = isotropic_qfi_check(rho, n_directions)
    return MetricBundle(
        purity=purity(rho), hs_dist_mms=hs_distance_mms(rho), dicke_populations=p, offdiag_mass=off,
        qfi_z=qfi(rho, sz), qfi_equatorial=fmean, qfi_equatorial_spread=fspread,
        qfi_isotropy_spread=ispread / imean if imean > 0 else 0.0,
        anticoherence_order=anticoherence_order(rho, sys), multipole_norms=multipole_norms(rho, sys),
        negativity=None if cut is None else negativity(rho, sys, cut),
        delta_g=None if group is None else symmetry_deviation(rho, group),
    )


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("need at least two positive points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])

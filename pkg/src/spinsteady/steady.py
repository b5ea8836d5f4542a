"""Steady states of Lindblad generators.

Three solvers share one post-processing step: a dense eigen-decomposition for
``d**2 <= DENSE_EIG_MAX``, GMRES on the jump-map fixed-point equation for
larger generators that carry their Lindblad form, and shift-invert inverse
iteration on a sparse LU factorisation for anything else.  :func:`evolve_oracle` integrates the master
equation directly and is used only as an independent cross-check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .liouville import (
    DEFAULT_MAX_DIM, SPARSE_THRESHOLD, DimensionError, EmbeddingModel, SuperOperator,
    build_embedding, partial_trace_aux, unvec, vec,
)

log = logging.getLogger(__name__)

NULL_RTOL = 1e-10
NEG_TOL = 1e-9
RESIDUAL_TOL = 1e-9
# adaptive truncation stops growing once the superoperator would exceed this
MAX_SUPEROP_DIM = 250_000
# largest superoperator size (d**2) solved by a full dense eigendecomposition
DENSE_EIG_MAX = 1024


class SteadyStateError(RuntimeError):
    """The solver did not produce an acceptable stationary state."""


class EvolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SteadyStateReport:
    rho_ss: np.ndarray
    nullity: int
    residual: float
    method: str
    truncation_used: Optional[int] = None
    truncation_converged: Optional[bool] = None
    truncation_change: Optional[float] = None
    rho_spin: Optional[np.ndarray] = None

    @property
    def unique(self) -> bool:
        return self.nullity == 1


def _postprocess(rho: np.ndarray, neg_tol: float) -> np.ndarray:
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    w, v = la.eigh(rho)
    if w[0] < -neg_tol:
        raise SteadyStateError(f"steady state has eigenvalue {w[0]:.3e} below -{neg_tol:g}")
    if w[0] < 0:
        w = np.clip(w, 0, None)
        rho = (v * w) @ v.conj().T
        rho = (rho + rho.conj().T) / 2
        rho = rho / np.trace(rho).real
    return rho


def _residual(superop: SuperOperator, rho: np.ndarray) -> float:
    return float(np.linalg.norm(superop.matrix @ vec(rho)))


def _scale(superop: SuperOperator) -> float:
    return max(superop.norm(), 1.0)


def _dense_null_space(superop: SuperOperator) -> np.ndarray:
    """Orthonormal basis of ``ker L``.

    The nullity is counted from the eigenvalues; the basis itself comes from
    block inverse iteration on a dense LU of the slightly shifted generator.
    """
    L = superop.dense()
    w = la.eigvals(L)
    scale = _scale(superop)
    k = int(np.sum(np.abs(w) < NULL_RTOL * scale))
    if k == 0:
        raise SteadyStateError(f"no zero eigenvalue (smallest |lambda| = {np.abs(w).min():.3e})")
    gap = np.sort(np.abs(w))[k] if k < len(w) else scale
    sigma = min(1e-8 * scale, 1e-3 * gap)
    lu = la.lu_factor(L - sigma * np.eye(L.shape[0]))
    rng = np.random.default_rng(0)
    X = rng.standard_normal((L.shape[0], k)) + 1j * rng.standard_normal((L.shape[0], k))
    for _ in range(4):
        X, _r = la.qr(la.lu_solve(lu, X), mode="economic")
    return X


def _dense_steady(superop: SuperOperator):
    Q = _dense_null_space(superop)
    x = Q @ (Q.conj().T @ vec(np.eye(superop.dim)))
    return unvec(x, superop.dim), Q.shape[1]


def _shift_factor(superop: SuperOperator):
    n = superop.shape[0]
    sigma = 1e-8 * _scale(superop)
    A = (superop.sparse() - sigma * sp.identity(n, dtype=complex, format="csr")).tocsc()
    return spla.splu(A, permc_spec="MMD_AT_PLUS_A")


def _inverse_iteration(lu, superop: SuperOperator, rng: np.random.Generator,
                       max_iter: int = 30, tol: float = 1e-13) -> np.ndarray:
    n = superop.shape[0]
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    for _ in range(max_iter):
        y = lu.solve(x)
        y /= np.linalg.norm(y)
        # align phases before measuring the change
        ph = np.vdot(y, x)
        if abs(ph) > 0:
            y *= np.conj(ph) / abs(ph)
        change = np.linalg.norm(y - x)
        x = y
        if change < tol:
            break
    rho = unvec(x, superop.dim)
    return rho / np.trace(rho)


class JumpMap:
    """Jump-to-jump channel ``T(X) = -Lyap_G^{-1}(sum 2c K X K^dag)``.

    For a generator ``-i[H,.] + sum c D_K`` the non-Hermitian drift is
    ``G = -iH - sum c K^dag K``.  When ``G`` is stable, ``T`` is completely
    positive and ``L[rho] = 0`` holds exactly when ``T(rho) = rho``, so the
    steady state is ``rho0 + X`` with ``(I - T) X = T(rho0) - rho0``.  Each
    application costs a few dense ``d x d`` products.
    """

    def __init__(self, superop: SuperOperator):
        if superop.form is None:
            raise ValueError("generator has no stored Lindblad form")
        h, diss = superop.form
        self.d = superop.dim
        H = h.toarray() if sp.issparse(h) else np.asarray(h)
        G = -1j * H
        for K, c in diss:
            G = G - c * (K.conj().T @ K).toarray()
        self.jumps = [(K, 2 * c) for K, c in diss]
        lam, V = la.eig(G)
        if lam.real.max() >= -1e-12 * _scale(superop):
            raise SteadyStateError("drift operator is not stable; jump map undefined")
        self.lam = lam
        self.V = V
        self.Vinv = la.inv(V)
        if np.linalg.cond(V) > 1e8:
            raise SteadyStateError("drift operator is too far from normal for the jump map")
        self.denom = lam[:, None] + lam.conj()[None, :]

    def lyap_solve(self, C: np.ndarray) -> np.ndarray:
        """``X`` with ``G X + X G^dag = C``."""
        Cp = self.Vinv @ C @ self.Vinv.conj().T
        return self.V @ (Cp / self.denom) @ self.V.conj().T

    def __call__(self, X: np.ndarray) -> np.ndarray:
        C = np.zeros(X.shape, dtype=complex)
        for K, c2 in self.jumps:
            KX = K @ X
            C -= c2 * (K @ KX.conj().T).conj().T
        return self.lyap_solve(C)


def _jump_map_steady(superop: SuperOperator, rho0: np.ndarray, rtol: float = 1e-13) -> np.ndarray:
    T = JumpMap(superop)
    d = superop.dim
    n = d * d

    def matvec(x):
        X = x.reshape(d, d)
        return (X - T(X)).reshape(-1)

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=complex)
    b = (T(rho0) - rho0).reshape(-1)
    if np.linalg.norm(b) == 0:
        return rho0
    x, info = spla.gmres(op, b, rtol=rtol, atol=0.0, restart=min(100, n), maxiter=20)
    if info != 0:
        raise SteadyStateError(f"GMRES on the jump map did not converge (info={info})")
    return rho0 + x.reshape(d, d)


def default_method(superop: SuperOperator) -> str:
    if superop.shape[0] <= DENSE_EIG_MAX:
        return "dense_eig"
    return "jump_map_gmres" if superop.form is not None else "sparse_shift_solve"


def steady_state(superop: SuperOperator, method: str | None = None, *, neg_tol: float = NEG_TOL,
                 residual_tol: float = RESIDUAL_TOL, seed: int | None = 0) -> SteadyStateReport:
    """Solve ``L[rho] = 0`` for a trace-one state.

    Methods:

    ``dense_eig``
        eigenvalues count the nullity; for a degenerate null space the result
        is the normalised projection of the identity onto it.
    ``sparse_shift_solve``
        inverse iteration with a sparse LU of ``L - sigma``.
    ``jump_map_gmres``
        GMRES on the fixed-point equation of :class:`JumpMap`; needs a generator
        built by :func:`lindblad_superop` and a stable drift.

    The two iterative paths report nullity 1 (a lower bound); see
    :func:`uniqueness_certificate`.
    """
    if method is None:
        method = default_method(superop)
    if method == "dense_eig":
        rho, nullity = _dense_steady(superop)
    elif method == "sparse_shift_solve":
        lu = _shift_factor(superop)
        rho, nullity = _inverse_iteration(lu, superop, np.random.default_rng(seed)), 1
    elif method == "jump_map_gmres":
        rho, nullity = _jump_map_steady(superop, np.eye(superop.dim) / superop.dim), 1
    else:
        raise ValueError(f"unknown method {method!r}")

    rho = _postprocess(rho, neg_tol)
    res = _residual(superop, rho)
    if res > residual_tol:
        raise SteadyStateError(f"residual {res:.3e} above {residual_tol:g} ({method})")
    return SteadyStateReport(rho_ss=rho, nullity=nullity, residual=res, method=method)


def uniqueness_certificate(superop: SuperOperator, seed: int | None = 0,
                           method: str | None = None) -> tuple[bool, int]:
    """``(unique, nullity)``; exact count on the dense path.

    The iterative paths solve from two independent random starts and call the
    state unique when both land within ``1e-7`` (HS norm).
    """
    if method is None:
        method = default_method(superop)
    if method == "dense_eig":
        try:
            n = _dense_null_space(superop).shape[1]
        except SteadyStateError:
            return False, 0
        return n == 1, n
    rng = np.random.default_rng(seed)
    if method == "sparse_shift_solve":
        lu = _shift_factor(superop)
        a = _inverse_iteration(lu, superop, rng)
        b = _inverse_iteration(lu, superop, rng)
    else:
        a = _jump_map_steady(superop, random_state(superop.dim, rng))
        b = _jump_map_steady(superop, random_state(superop.dim, rng))
        a, b = a / np.trace(a), b / np.trace(b)
    same = np.linalg.norm(a - b) < 1e-7
    return bool(same), 1 if same else 2


# ----------------------------------------------------------------------------
# model-level solve with adaptive boson truncation
# ----------------------------------------------------------------------------

def solve_model(model: EmbeddingModel, truncation: int | str = "adaptive", *, tol: float = 1e-8,
                start: int = 4, max_dim: int = DEFAULT_MAX_DIM, max_superop_dim: int = MAX_SUPEROP_DIM,
                method: str | None = None, seed: int | None = 0, neg_tol: float = NEG_TOL) -> SteadyStateReport:
    """Steady state of an embedding plus its reduced spin state.

    With ``truncation="adaptive"`` and bosonic auxiliaries, the Fock cutoff
    starts at ``start`` levels and grows by one until the reduced state moves
    by less than ``tol`` (HS norm).  Growth stops early at the dimension caps;
    ``truncation_converged`` is then ``False``.
    """
    has_boson = model.boson_truncation is not None

    def solve(m: EmbeddingModel) -> SteadyStateReport:
        if m.dim**2 > max_superop_dim:
            raise DimensionError(f"superoperator dimension {m.dim**2} exceeds cap {max_superop_dim}; "
                                 "lower the boson truncation or the number of spins")
        L = build_embedding(m, max_dim=max_dim)
        rep = steady_state(L, method=method, seed=seed, neg_tol=neg_tol)
        return replace(rep, rho_spin=partial_trace_aux(rep.rho_ss, m),
                       truncation_used=m.boson_truncation)

    if not has_boson:
        return solve(model)
    if truncation != "adaptive":
        return solve(model.with_truncation(int(truncation)))

    n = start
    current = solve(model.with_truncation(n))
    while True:
        nxt = model.with_truncation(n + 1)
        if nxt.dim > max_dim or nxt.dim**2 > max_superop_dim:
            log.info("truncation growth stopped at %d levels (dimension cap)", n)
            return replace(current, truncation_converged=False)
        new = solve(nxt)
        change = float(np.linalg.norm(new.rho_spin - current.rho_spin))
        n += 1
        current = replace(new, truncation_change=change)
        if change < tol:
            return replace(current, truncation_converged=True)


# ----------------------------------------------------------------------------
# time-evolution oracle
# ----------------------------------------------------------------------------

def evolve_oracle(superop: SuperOperator, rho0, t_final: float, dt_max: float = np.inf, *,
                  rtol: float = 1e-10, atol: float = 1e-13) -> np.ndarray:
    """Integrate ``d rho/dt = L[rho]`` with an adaptive 8th-order Runge-Kutta.

    ``rho0`` may be a single matrix or a stack of shape ``(k, d, d)``; the
    stack is propagated jointly and returned with the same shape.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    rho0 = np.asarray(rho0, dtype=complex)
    single = rho0.ndim == 2
    stack = rho0[None] if single else rho0
    k, d = stack.shape[0], superop.dim
    if stack.shape[1:] != (d, d):
        raise ValueError("initial state dimension does not match the generator")
    Y0 = np.stack([vec(r) for r in stack], axis=1)
    M = superop.matrix

    def rhs(_t, y):
        return np.asarray(M @ y.reshape(d * d, k)).reshape(-1)

    sol = solve_ivp(rhs, (0.0, float(t_final)), Y0.reshape(-1), method="DOP853",
                    rtol=rtol, atol=atol, max_step=dt_max, t_eval=[float(t_final)])
    if sol.status != 0:
        raise EvolutionError(f"integration failed: {sol.message}")
    Y = sol.y[:, -1].reshape(d * d, k)
    out = np.stack([unvec(Y[:, i], d) for i in range(k)])
    drift = np.abs(np.trace(out, axis1=1, axis2=2) - np.trace(stack, axis1=1, axis2=2)).max()
    if drift > 1e-9:
        raise EvolutionError(f"trace drift {drift:.2e} exceeds 1e-9")
    return out[0] if single else out


def random_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix (Ginibre ensemble)."""
    rank = dim if rank is None else rank
    G = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real

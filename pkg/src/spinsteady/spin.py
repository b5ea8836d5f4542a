"""Collective-spin algebra on the symmetric (Dicke) subspace.

All operators are dense ``complex128`` arrays of shape ``(N+1, N+1)``.  Row and
column ``k`` correspond to the Dicke state ``|j, m>`` with ``m = j - k``, so
index 0 is the stretched state ``|j, j>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

MAX_ISOMETRY_SPINS = 12
HERMITIAN_ATOL = 1e-12


@dataclass(frozen=True)
class SpinSystem:
    """``n_spins`` spin-1/2 particles restricted to total spin ``j = N/2``."""

    n_spins: int

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins!r}")

    @property
    def j(self) -> float:
        return self.n_spins / 2

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order (``+j`` first)."""
        return self.j - np.arange(self.dim)

    def index(self, m: float) -> int:
        k = self.j - m
        if abs(k - round(k)) > 1e-9 or not 0 <= round(k) < self.dim:
            raise ValueError(f"m={m} is not a valid projection for j={self.j}")
        return int(round(k))


def is_hermitian(op: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.allclose(op, op.conj().T, atol=atol, rtol=0)


def ladder_ops(sys: SpinSystem) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S+, S-)``."""
    j = sys.j
    m = sys.m_values()
    # <j, m+1| S+ |j, m> lives at row k-1, column k
    amp = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    sp = np.diag(amp, k=1).astype(complex)
    return sp, sp.conj().T.copy()


def collective_spin_ops(sys: SpinSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-j matrices ``(Sx, Sy, Sz)``."""
    sp, sm = ladder_ops(sys)
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    sz = np.diag(sys.m_values()).astype(complex)
    return sx, sy, sz


def spin_component(sys: SpinSystem, n) -> np.ndarray:
    """``n . S`` for a (possibly complex) 3-vector ``n``; no normalisation."""
    sx, sy, sz = collective_spin_ops(sys)
    n = np.asarray(n)
    return n[0] * sx + n[1] * sy + n[2] * sz


# ----------------------------------------------------------------------------
# Clebsch-Gordan coefficients
# ----------------------------------------------------------------------------

def _twice(x) -> int:
    t = round(2 * float(x))
    if abs(2 * float(x) - t) > 1e-9:
        raise ValueError(f"{x!r} is not a half-integer")
    return t


@lru_cache(maxsize=None)
def _cg_twice(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int, tM: int) -> float:
    if tm1 + tm2 != tM:
        return 0.0
    if not abs(tj1 - tj2) <= tJ <= tj1 + tj2:
        return 0.0
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        if abs(tm) > tj or (tj + tm) % 2:
            return 0.0
    if (tj1 + tj2 + tJ) % 2:
        return 0.0

    f = math.factorial
    # all of these are integers once the selection rules pass
    a = (tJ + tj1 - tj2) // 2
    b = (tJ - tj1 + tj2) // 2
    c = (tj1 + tj2 - tJ) // 2
    d = (tj1 + tj2 + tJ) // 2 + 1
    jm1, jp1 = (tj1 - tm1) // 2, (tj1 + tm1) // 2
    jm2, jp2 = (tj2 - tm2) // 2, (tj2 + tm2) // 2
    Jm, Jp = (tJ - tM) // 2, (tJ + tM) // 2
    e = (tJ - tj2 + tm1) // 2
    g = (tJ - tj1 - tm2) // 2

    pref = Fraction((tJ + 1) * f(a) * f(b) * f(c), f(d))
    pref *= f(Jp) * f(Jm) * f(jm1) * f(jp1) * f(jm2) * f(jp2)

    total = Fraction(0)
    kmin = max(0, -e, -g)
    kmax = min(c, jm1, jp2)
    for k in range(kmin, kmax + 1):
        den = f(k) * f(c - k) * f(jm1 - k) * f(jp2 - k) * f(e + k) * f(g + k)
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    sq = total * total * pref
    return math.copysign(math.sqrt(sq.numerator / sq.denominator), total)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """``<j1 m1; j2 m2 | J M>`` in the Condon-Shortley convention.

    Arguments are integers or half-integers (floats or ``Fraction``).  Any
    selection-rule violation returns exactly ``0.0``.
    """
    return _cg_twice(_twice(j1), _twice(m1), _twice(j2), _twice(m2), _twice(J), _twice(M))


# ----------------------------------------------------------------------------
# irreducible tensor operators
# ----------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _tensor_op_cached(n_spins: int, L: int, M: int) -> np.ndarray:
    sys = SpinSystem(n_spins)
    j, dim = sys.j, sys.dim
    out = np.zeros((dim, dim), dtype=complex)
    norm = math.sqrt((2 * L + 1) / (2 * j + 1))
    for col, m in enumerate(sys.m_values()):
        mp = m + M
        if abs(mp) > j + 1e-9:
            continue
        out[sys.index(mp), col] = norm * clebsch_gordan(j, m, L, M, j, mp)
    out.setflags(write=False)
    return out


def tensor_op(sys: SpinSystem, L: int, M: int) -> np.ndarray:
    """Irreducible tensor operator ``T_LM`` for spin ``j``.

    The set ``{T_LM : 0 <= L <= 2j, |M| <= L}`` is orthonormal under the
    Hilbert-Schmidt inner product.
    """
    if int(L) != L or int(M) != M:
        raise ValueError("L and M must be integers")
    if not 0 <= L <= sys.n_spins or abs(M) > L:
        raise ValueError(f"(L, M)=({L}, {M}) out of range for j={sys.j}")
    return _tensor_op_cached(sys.n_spins, int(L), int(M)).copy()


def tensor_basis(sys: SpinSystem):
    """Yield ``(L, M, T_LM)`` over the full basis, ``L`` ascending then ``M``."""
    for L in range(sys.n_spins + 1):
        for M in range(-L, L + 1):
            yield L, M, _tensor_op_cached(sys.n_spins, L, M)


def multipole_coefficients(rho: np.ndarray, sys: SpinSystem) -> dict[int, np.ndarray]:
    """``rho_LM = Tr(rho T_LM^dagger)`` grouped by rank, ``M = -L..L``."""
    out: dict[int, list[complex]] = {}
    for L, M, T in tensor_basis(sys):
        # Tr(rho T^dag) = sum conj(T) * rho
        out.setdefault(L, []).append(np.sum(T.conj() * rho))
    return {L: np.array(v) for L, v in out.items()}


def from_multipoles(coeffs: dict[int, np.ndarray], sys: SpinSystem) -> np.ndarray:
    rho = np.zeros((sys.dim, sys.dim), dtype=complex)
    for L, M, T in tensor_basis(sys):
        rho += coeffs[L][M + L] * T
    return rho


# ----------------------------------------------------------------------------
# Dicke isometry
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DickeIsometry:
    """Map from the Dicke basis into the ``2**N`` qubit space.

    Qubit state ``|0>`` is spin-up, so the column for ``m = j`` is ``|0...0>``
    and column ``k`` is the normalised symmetric sum of bit strings with ``k``
    ones.  Qubit 0 is the most significant bit.
    """

    n_spins: int
    map: np.ndarray

    def embed(self, rho: np.ndarray) -> np.ndarray:
        return self.map @ rho @ self.map.conj().T

    def pullback(self, op: np.ndarray) -> np.ndarray:
        return self.map.conj().T @ op @ self.map


def dicke_isometry(n_spins: int) -> DickeIsometry:
    if not 1 <= n_spins <= MAX_ISOMETRY_SPINS:
        raise ValueError(f"dicke_isometry supports 1 <= N <= {MAX_ISOMETRY_SPINS}, got {n_spins}")
    V = np.zeros((2**n_spins, n_spins + 1), dtype=complex)
    for k in range(n_spins + 1):
        amp = 1 / math.sqrt(math.comb(n_spins, k))
        for ones in combinations(range(n_spins), k):
            idx = sum(1 << (n_spins - 1 - q) for q in ones)
            V[idx, k] = amp
    V.setflags(write=False)
    return DickeIsometry(n_spins, V)

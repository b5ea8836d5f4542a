"""Lindblad superoperators, auxiliary-system embeddings and partial traces.

Vectorisation is column stacking, ``vec(A rho B) = (B^T kron A) vec(rho)``.
The dissipator convention is ``D_K[rho] = 2 K rho K^dag - {K^dag K, rho}``
with an explicit prefactor per dissipator, so the spin-only generator uses
``gamma/2`` and the embedding uses ``kappa`` literally.

Composite spaces are ordered spin first, then auxiliaries in list order.
Bosonic auxiliaries share a joint cap on the total number of excitations (see
:func:`aux_basis`); this keeps passive mode-mixing unitaries exact on the
truncated space, which the polyhedral constructions rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .spin import SpinSystem, is_hermitian

SPARSE_THRESHOLD = 4096  # switch to sparse storage when d**2 exceeds this
DEFAULT_MAX_DIM = 4096

AUX_KINDS = ("boson", "fermion", "twolevel")


class DimensionError(ValueError):
    """Raised when a composite space would exceed the configured size cap."""


# ----------------------------------------------------------------------------
# superoperators
# ----------------------------------------------------------------------------

def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.shape[0])))
    return v.reshape((dim, dim) + v.shape[1:], order="F")


@dataclass(frozen=True)
class SuperOperator:
    """Linear map on vectorised ``dim x dim`` matrices.

    ``matrix`` is either a dense ``ndarray`` or a ``scipy.sparse`` CSR matrix of
    shape ``(dim**2, dim**2)``.
    """

    dim: int
    matrix: Union[np.ndarray, sp.csr_matrix]
    # (H, [(K, prefactor), ...]) when the generator is known to be of Lindblad form
    form: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.apply(rho)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def sparse(self) -> sp.csr_matrix:
        return self.matrix.tocsr() if self.is_sparse else sp.csr_matrix(self.matrix)

    def norm(self) -> float:
        """Induced infinity norm (max absolute row sum); a cheap spectral scale."""
        if self.is_sparse:
            return float(abs(self.matrix).sum(axis=1).max())
        return float(np.abs(self.matrix).sum(axis=1).max())

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        m = self.matrix + other.matrix
        return SuperOperator(self.dim, m.tocsr() if sp.issparse(m) else np.asarray(m))


def _as_sparse(op) -> sp.csr_matrix:
    return op.tocsr() if sp.issparse(op) else sp.csr_matrix(np.asarray(op, dtype=complex))


def lindblad_superop(h, dissipators: Sequence[tuple], sparse: bool | None = None) -> SuperOperator:
    """Generator ``-i[h, .] + sum_k c_k D_{K_k}``.

    ``dissipators`` is a sequence of ``(K, c)`` pairs.  Storage is sparse when
    ``d**2 > SPARSE_THRESHOLD`` unless ``sparse`` forces a choice.
    """
    h = _as_sparse(h)
    d = h.shape[0]
    if h.shape != (d, d):
        raise ValueError("Hamiltonian must be square")
    if abs(h - h.conj().T).max() > 1e-12 * max(1.0, abs(h).max()):
        raise ValueError("Hamiltonian is not Hermitian")
    eye = sp.identity(d, dtype=complex, format="csr")

    terms = [-1j * (sp.kron(eye, h) - sp.kron(h.T, eye))]
    for K, rate in dissipators:
        if rate < 0:
            raise ValueError(f"negative dissipator prefactor {rate}")
        if rate == 0:
            continue
        K = _as_sparse(K)
        if K.shape != (d, d):
            raise ValueError("jump operator dimension mismatch")
        KdK = (K.conj().T @ K).tocsr()
        terms.append(rate * (2 * sp.kron(K.conj(), K) - sp.kron(eye, KdK) - sp.kron(KdK.T, eye)))

    kept = [(_as_sparse(K), float(r)) for K, r in dissipators if r > 0]
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    total = total.tocsr()
    total.sum_duplicates()
    total.sort_indices()
    if sparse is None:
        sparse = d * d > SPARSE_THRESHOLD
    return SuperOperator(d, total if sparse else total.toarray(), form=(h, kept))


def hamiltonian_superop(h, sparse: bool | None = None) -> SuperOperator:
    return lindblad_superop(h, [], sparse=sparse)


# ----------------------------------------------------------------------------
# auxiliary systems
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class AuxSpec:
    """One damped auxiliary system.

    ``truncation`` is the number of retained Fock levels for a boson and is
    ignored (fixed to 2) for fermions and two-level systems.
    """

    kind: str
    omega: float
    kappa: float
    g: float
    truncation: int = 4

    def __post_init__(self):
        if self.kind not in AUX_KINDS:
            raise ValueError(f"unknown auxiliary kind {self.kind!r}; expected one of {AUX_KINDS}")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.kind == "boson" and self.truncation < 2:
            raise ValueError("boson truncation must be >= 2")

    @property
    def levels(self) -> int:
        return self.truncation if self.kind == "boson" else 2


def aux_basis(aux: Sequence[AuxSpec]) -> np.ndarray:
    """Occupation tuples spanning the auxiliary space, shape ``(d_aux, N_E)``.

    Product states in lexicographic order (first auxiliary most significant),
    keeping those whose bosonic occupations sum to at most
    ``max(boson truncation) - 1``.  A single boson therefore keeps exactly
    ``truncation`` levels.
    """
    levels = [a.levels for a in aux]
    grids = np.indices(levels).reshape(len(levels), -1).T
    bosons = [i for i, a in enumerate(aux) if a.kind == "boson"]
    if bosons:
        cap = max(aux[i].levels for i in bosons) - 1
        grids = grids[grids[:, bosons].sum(axis=1) <= cap]
    return grids


def _local_lowering(levels: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, levels)), 1, shape=(levels, levels), format="csr", dtype=complex)


def aux_lowering_ops(aux: Sequence[AuxSpec]) -> list[sp.csr_matrix]:
    """Lowering operators ``A_mu`` on the (truncated) auxiliary space.

    Fermions carry Jordan-Wigner parity strings over the preceding fermionic
    modes, so ``A_2 = sigma_z (x) sigma_-`` for two fermions.
    """
    if not aux:
        raise ValueError("need at least one auxiliary system")
    levels = [a.levels for a in aux]
    basis = aux_basis(aux)
    full_index = np.ravel_multi_index(basis.T, levels)
    n_full = int(np.prod(levels))
    select = sp.csr_matrix((np.ones(len(full_index)), (np.arange(len(full_index)), full_index)),
                           shape=(len(full_index), n_full), dtype=complex)

    parity = sp.diags([1.0, -1.0], 0, format="csr", dtype=complex)
    ops = []
    for mu, a in enumerate(aux):
        factors = []
        for nu, b in enumerate(aux):
            if nu == mu:
                factors.append(_local_lowering(b.levels))
            elif nu < mu and a.kind == "fermion" and b.kind == "fermion":
                factors.append(parity)
            else:
                factors.append(sp.identity(b.levels, dtype=complex, format="csr"))
        full = factors[0]
        for f in factors[1:]:
            full = sp.kron(full, f, format="csr")
        ops.append((select @ full @ select.T).tocsr())
    return ops


@dataclass(frozen=True)
class EmbeddingModel:
    """Collective spin coupled linearly to damped auxiliary systems."""

    sys: SpinSystem
    h_s: np.ndarray
    couplings: tuple
    aux: tuple

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(np.asarray(c, dtype=complex) for c in self.couplings))
        object.__setattr__(self, "aux", tuple(self.aux))
        if len(self.couplings) == 0 or len(self.couplings) != len(self.aux):
            raise ValueError("need one auxiliary system per coupling operator (N_E >= 1)")
        if not is_hermitian(self.h_s):
            raise ValueError("spin Hamiltonian must be Hermitian")
        for c in self.couplings:
            if c.shape != (self.sys.dim, self.sys.dim):
                raise ValueError("coupling operator has wrong dimension")

    @property
    def n_aux(self) -> int:
        return len(self.aux)

    @property
    def aux_dim(self) -> int:
        return len(aux_basis(self.aux))

    @property
    def dim(self) -> int:
        return self.sys.dim * self.aux_dim

    @property
    def boson_truncation(self) -> int | None:
        t = [a.truncation for a in self.aux if a.kind == "boson"]
        return max(t) if t else None

    def with_truncation(self, levels: int) -> "EmbeddingModel":
        aux = tuple(replace(a, truncation=levels) if a.kind == "boson" else a for a in self.aux)
        return replace(self, aux=aux)

    def with_aux(self, **changes) -> "EmbeddingModel":
        return replace(self, aux=tuple(replace(a, **changes) for a in self.aux))


def embedding_hamiltonian(model: EmbeddingModel) -> sp.csr_matrix:
    """``H_S + sum w A^dag A + sum g (L A^dag + L^dag A)`` on spin (x) aux."""
    A = aux_lowering_ops(model.aux)
    d_a = A[0].shape[0]
    eye_a = sp.identity(d_a, dtype=complex, format="csr")
    eye_s = sp.identity(model.sys.dim, dtype=complex, format="csr")
    H = sp.kron(sp.csr_matrix(model.h_s), eye_a)
    for a, Amu, L in zip(model.aux, A, model.couplings):
        Ls = sp.csr_matrix(L)
        H = H + a.omega * sp.kron(eye_s, Amu.conj().T @ Amu)
        H = H + a.g * (sp.kron(Ls, Amu.conj().T) + sp.kron(Ls.conj().T, Amu))
    return H.tocsr()


def build_embedding(model: EmbeddingModel, max_dim: int = DEFAULT_MAX_DIM,
                    sparse: bool | None = None) -> SuperOperator:
    """Lindbladian of the enlarged spin + auxiliary state, dissipators ``kappa D_A``."""
    d = model.dim
    if d > max_dim:
        raise DimensionError(
            f"composite dimension {d} exceeds cap {max_dim}; lower the boson truncation "
            f"(currently {model.boson_truncation})")
    A = aux_lowering_ops(model.aux)
    eye_s = sp.identity(model.sys.dim, dtype=complex, format="csr")
    jumps = [(sp.kron(eye_s, Amu, format="csr"), a.kappa) for a, Amu in zip(model.aux, A)]
    return lindblad_superop(embedding_hamiltonian(model), jumps, sparse=sparse)


def partial_trace_aux(rho_total: np.ndarray, model: EmbeddingModel) -> np.ndarray:
    """Reduced spin state after tracing out every auxiliary system."""
    ds, da = model.sys.dim, model.aux_dim
    rho_total = np.asarray(rho_total)
    if rho_total.shape != (ds * da, ds * da):
        raise ValueError(f"state has shape {rho_total.shape}, model expects {(ds * da,) * 2}")
    return np.einsum("iaja->ij", rho_total.reshape(ds, da, ds, da))


def aux_vacuum(model: EmbeddingModel) -> np.ndarray:
    """Projector onto the auxiliary vacuum (basis state 0)."""
    vac = np.zeros((model.aux_dim, model.aux_dim), dtype=complex)
    vac[0, 0] = 1
    return vac


# ----------------------------------------------------------------------------
# bath correlation functions
# ----------------------------------------------------------------------------

def correlation_function(aux: AuxSpec, t):
    """Free correlation ``|g|^2 exp(-i w t - kappa t)`` of a zero-temperature mode."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("correlation function is defined for t >= 0")
    out = abs(aux.g) ** 2 * np.exp(-1j * aux.omega * t - aux.kappa * t)
    return out if out.ndim else complex(out)


def correlation_integral(aux: AuxSpec, shift: float = 0.0) -> complex:
    """``int_0^inf alpha(t) exp(-i shift t) dt = |g|^2 / (kappa + i (omega + shift))``."""
    return abs(aux.g) ** 2 / (aux.kappa + 1j * (aux.omega + shift))

"""Rotation groups in the spin-j representation and jump-set closure.

Rotations follow ``U = exp(-i angle n.S)``.  Each :class:`GroupElement` keeps
the 3x3 matrix ``R`` of its adjoint action, ``U S_a U^dag = sum_b R_ba S_b``,
which identifies the element independently of the ``+-1`` ambiguity of
half-integer spins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .liouville import EmbeddingModel, SuperOperator, aux_basis, aux_lowering_ops
from .spin import SpinSystem, collective_spin_ops

GOLDEN = (1 + np.sqrt(5)) / 2
GROUP_NAMES = ("D2", "T", "O", "I", "U1sampled")
GROUP_ORDERS = {"D2": 4, "T": 12, "O": 24, "I": 60}

# three-fold axes of the tetrahedron used by the tetrahedral presets
TETRA_AXES = np.array([
    [np.sqrt(2 / 3), 0, 1 / np.sqrt(3)],
    [-np.sqrt(2 / 3), 0, 1 / np.sqrt(3)],
    [0, np.sqrt(2 / 3), -1 / np.sqrt(3)],
    [0, -np.sqrt(2 / 3), -1 / np.sqrt(3)],
])
# five-fold axes of the icosahedron
ICOSA_AXES = np.array([
    [0, 1, GOLDEN], [0, 1, -GOLDEN], [1, GOLDEN, 0],
    [1, -GOLDEN, 0], [GOLDEN, 0, 1], [GOLDEN, 0, -1],
]) / np.sqrt(1 + GOLDEN**2)

MATCH_TOL = 1e-9
SO3_TOL = 1e-8


@dataclass(frozen=True)
class GroupElement:
    so3: np.ndarray
    u: np.ndarray
    label: str = ""

    def act(self, op: np.ndarray) -> np.ndarray:
        return self.u @ op @ self.u.conj().T


@dataclass(frozen=True)
class SymmetryGroup:
    name: str
    sys: SpinSystem
    elements: tuple

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i) -> GroupElement:
        return self.elements[i]

    def find(self, so3: np.ndarray, tol: float = SO3_TOL) -> int | None:
        for i, e in enumerate(self.elements):
            if np.abs(e.so3 - so3).max() < tol:
                return i
        return None


def rodrigues(axis, angle: float) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def rotation_unitary(sys: SpinSystem, axis, angle: float) -> np.ndarray:
    """``exp(-i angle (axis . S))`` for a unit ``axis``."""
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1) > 1e-12:
        raise ValueError(f"rotation axis must be a unit 3-vector, got {axis}")
    sx, sy, sz = collective_spin_ops(sys)
    return la.expm(-1j * angle * (axis[0] * sx + axis[1] * sy + axis[2] * sz))


def adjoint_so3(sys: SpinSystem, u: np.ndarray) -> np.ndarray:
    S = collective_spin_ops(sys)
    norm = np.trace(S[2] @ S[2]).real
    R = np.empty((3, 3))
    for a in range(3):
        rot = u @ S[a] @ u.conj().T
        for b in range(3):
            R[b, a] = np.trace(S[b] @ rot).real / norm
    return R


def _element(sys: SpinSystem, axis, angle: float, label: str = "") -> GroupElement:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    u = rotation_unitary(sys, axis, angle)
    return GroupElement(adjoint_so3(sys, u), u, label)


def _generators(sys: SpinSystem, name: str) -> list[GroupElement]:
    if name == "D2":
        return [_element(sys, [1, 0, 0], np.pi, "C2x"), _element(sys, [0, 0, 1], np.pi, "C2z")]
    if name == "T":
        # C3 axis n1 and C2 about z: the frame of the tetrahedral Hamiltonians
        return [_element(sys, TETRA_AXES[0], 2 * np.pi / 3, "C3n1"), _element(sys, [0, 0, 1], np.pi, "C2z")]
    if name == "O":
        return [_element(sys, [0, 0, 1], np.pi / 2, "C4z"), _element(sys, [1, 1, 1], 2 * np.pi / 3, "C3")]
    if name == "I":
        return [_element(sys, ICOSA_AXES[0], 2 * np.pi / 5, "C5n1"), _element(sys, [0, 0, 1], np.pi, "C2z")]
    raise ValueError(f"unknown group {name!r}; expected one of {GROUP_NAMES}")


def generate_group(sys: SpinSystem, name: str, seed: int = 0) -> SymmetryGroup:
    """Build a preset rotation group by closing its generators.

    ``U1sampled`` stands in for U(1) x Z2: rotations about z at 8 equally spaced
    and 4 random angles, each also composed with the pi rotation about x.
    """
    if name == "U1sampled":
        rng = np.random.default_rng(seed)
        angles = np.concatenate([np.arange(8) * 2 * np.pi / 8, rng.uniform(0, 2 * np.pi, 4)])
        flip = _element(sys, [1, 0, 0], np.pi, "C2x")
        elems = []
        for phi in angles:
            r = _element(sys, [0, 0, 1], phi, f"Rz({phi:.4f})")
            elems.append(r)
            u = r.u @ flip.u
            elems.append(GroupElement(r.so3 @ flip.so3, u, f"Rz({phi:.4f})C2x"))
        return SymmetryGroup(name, sys, tuple(elems))

    gens = _generators(sys, name)
    expected = GROUP_ORDERS[name]
    ident = GroupElement(np.eye(3), np.eye(sys.dim, dtype=complex), "E")
    elems = [ident]
    frontier = [ident]
    compositions = 0
    while frontier:
        nxt = []
        for e in frontier:
            for g in gens:
                compositions += 1
                if compositions > 10 * expected * len(gens):
                    raise RuntimeError(f"closure of {name} did not stabilise")
                R = g.so3 @ e.so3
                if any(np.abs(R - x.so3).max() < SO3_TOL for x in elems):
                    continue
                new = GroupElement(R, g.u @ e.u, f"{g.label}.{e.label}" if e.label != "E" else g.label)
                elems.append(new)
                nxt.append(new)
        frontier = nxt
    if len(elems) != expected:
        raise RuntimeError(f"{name} closed with {len(elems)} elements, expected {expected}")
    return SymmetryGroup(name, sys, tuple(elems))


# ----------------------------------------------------------------------------
# closure of jump sets
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosureEntry:
    element: int
    mu: int
    nu: int
    phase: float
    error: float


@dataclass(frozen=True)
class ClosureReport:
    """Per-element action of a group on a jump set.

    ``ok`` is the strict condition: every ``U L_mu U^dag`` equals a phase times
    a single ``L_nu`` and the induced permutations form a group action.
    ``span_ok`` is the weaker condition that ``U L_mu U^dag = sum_nu C_nu,mu L_nu``
    with a unitary mixing matrix ``C``; identical bosonic or fermionic
    auxiliaries can compensate any such ``C``.
    """

    group: SymmetryGroup
    ok: bool
    table: tuple
    mixing: tuple
    span_ok: bool
    span_error: float

    def rows(self, element: int) -> list[ClosureEntry]:
        return [r for r in self.table if r.element == element]

    def permutation(self, element: int) -> list[int]:
        return [r.nu for r in self.rows(element)]

    def is_monomial(self, element: int) -> bool:
        return all(r.error <= MATCH_TOL for r in self.rows(element))


def _hs(a, b) -> complex:
    return np.vdot(a, b)


def check_closure(group: SymmetryGroup, jumps: Sequence[np.ndarray]) -> ClosureReport:
    jumps = [np.asarray(L, dtype=complex) for L in jumps]
    if not jumps or any(np.linalg.norm(L) == 0 for L in jumps):
        raise ValueError("jump operators must be nonzero")
    norms = [np.linalg.norm(L) for L in jumps]
    B = np.stack([L.reshape(-1) for L in jumps], axis=1)

    table, mixing, perms = [], [], []
    span_err = 0.0
    unitary_mix = True
    for i, el in enumerate(group):
        C = np.zeros((len(jumps), len(jumps)), dtype=complex)
        perm = []
        for mu, L in enumerate(jumps):
            T = el.act(L)
            tn = np.linalg.norm(T)
            ov = np.array([_hs(Lnu, T) / (nnu * tn) for Lnu, nnu in zip(jumps, norms)])
            nu = int(np.argmax(np.abs(ov)))
            table.append(ClosureEntry(i, mu, nu, float(np.angle(ov[nu])), float(1 - abs(ov[nu]))))
            perm.append(nu)
            coef, *_ = np.linalg.lstsq(B, T.reshape(-1), rcond=None)
            C[:, mu] = coef
            span_err = max(span_err, float(np.linalg.norm(B @ coef - T.reshape(-1)) / tn))
        mixing.append(C)
        perms.append(perm)
        if np.abs(C.conj().T @ C - np.eye(len(jumps))).max() > MATCH_TOL:
            unitary_mix = False

    ok = all(r.error <= MATCH_TOL for r in table)
    ok = ok and all(sorted(p) == list(range(len(jumps))) for p in perms)
    if ok:
        # group-action check wherever the product lands inside the element set
        for a, ea in enumerate(group):
            for b, eb in enumerate(group):
                c = group.find(ea.so3 @ eb.so3)
                if c is None:
                    continue
                if [perms[a][perms[b][mu]] for mu in range(len(jumps))] != perms[c]:
                    ok = False
    span_ok = span_err <= MATCH_TOL and unitary_mix
    return ClosureReport(group, bool(ok), tuple(table), tuple(mixing), bool(span_ok), span_err)


def group_average_state(rho: np.ndarray, group: SymmetryGroup) -> np.ndarray:
    """``(1/|G|) sum_l U_l rho U_l^dag``."""
    return sum(el.act(rho) for el in group) / len(group)


def check_weak_symmetry(superop: SuperOperator, u: np.ndarray, n_probes: int = 20,
                        seed: int = 0) -> float:
    """Max over random Hermitian probes of ``||L[U p U^dag] - U L[p] U^dag|| / ||p||``."""
    u = np.asarray(u)
    d = superop.dim
    if u.shape != (d, d):
        raise ValueError(f"unitary of shape {u.shape} does not act on dimension {d}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        p = G + G.conj().T
        lhs = superop.apply(u @ p @ u.conj().T)
        rhs = u @ superop.apply(p) @ u.conj().T
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / np.linalg.norm(p)))
    return worst


def _same_aux(a, b) -> bool:
    return a == b


def _aux_permutation_unitary(model: EmbeddingModel, perm: list[int], phases: list[float]) -> np.ndarray:
    """``W`` with ``W A_mu W^dag = exp(i phases[mu]) A_perm[mu]`` for commuting factors."""
    basis = aux_basis(model.aux)
    lookup = {tuple(b): i for i, b in enumerate(basis)}
    phi = np.zeros(len(perm))
    for mu, nu in enumerate(perm):
        phi[nu] = phases[mu]
    W = np.zeros((len(basis), len(basis)), dtype=complex)
    for i, occ in enumerate(basis):
        new = np.empty_like(occ)
        new[perm] = occ
        j = lookup[tuple(new)]
        W[j, i] = np.exp(-1j * np.dot(phi, new))
    return W


def _aux_passive_unitary(model: EmbeddingModel, C: np.ndarray) -> np.ndarray:
    """``W = exp(-i A^dag G A)`` with ``exp(iG) = C^T``, so ``W A_mu W^dag = sum_nu C_nu,mu A_nu``."""
    T, Z = la.schur(C.T, output="complex")
    G = Z @ np.diag(np.angle(np.diag(T))) @ Z.conj().T
    A = [a.toarray() for a in aux_lowering_ops(model.aux)]
    X = sum(G[a, b] * A[a].conj().T @ A[b] for a in range(len(A)) for b in range(len(A)))
    return la.expm(-1j * X)


def embedding_symmetry_unitary(model: EmbeddingModel, element: GroupElement,
                               closure: ClosureReport) -> np.ndarray:
    """``U_S (x) W`` where ``W`` undoes the phases / relabelling of the couplings.

    Monomial actions on two-level or bosonic auxiliaries use a relabelling of
    tensor factors with phase rotations ``exp(-i theta A^dag A)``.  Fermions and
    genuine mixing use the passive quadratic unitary on the auxiliary modes,
    which is exact for fermions and for the joint bosonic excitation cap.
    """
    idx = closure.group.find(element.so3)
    if idx is None:
        raise ValueError("element does not belong to the closure report's group")
    if not (closure.ok or closure.span_ok):
        raise ValueError("jump set is not closed under the group")
    if len(model.couplings) != len(closure.permutation(idx)):
        raise ValueError("closure report was computed for a different jump set")
    C = closure.mixing[idx]
    kinds = {a.kind for a in model.aux}

    # every pair of auxiliaries mixed by C must be identical
    for mu in range(model.n_aux):
        for nu in range(model.n_aux):
            if abs(C[nu, mu]) > MATCH_TOL and not _same_aux(model.aux[mu], model.aux[nu]):
                raise ValueError(
                    f"element maps coupling {mu} onto {nu} but their auxiliary systems differ")

    monomial = closure.is_monomial(idx)
    if monomial and "fermion" not in kinds:
        rows = closure.rows(idx)
        W = _aux_permutation_unitary(model, [r.nu for r in rows], [r.phase for r in rows])
    else:
        if "twolevel" in kinds:
            raise ValueError("two-level auxiliaries cannot compensate a mixing of couplings")
        W = _aux_passive_unitary(model, C)
    return np.kron(element.u, W)

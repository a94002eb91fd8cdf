"""Generalised Gell-Mann decomposition of witnesses and commuting-term grouping."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

COMMUTATOR_TOLERANCE = 1e-10
DIAGONALISATION_TOLERANCE = 1e-8
RELATIVE_THRESHOLD = 1e-8


class NumericalError(RuntimeError):
    """A numerical post-condition failed (indicates a bug upstream)."""


@dataclass(frozen=True)
class BasisElement:
    index: int
    matrix: np.ndarray
    family: str  # identity | symmetric | antisymmetric | diagonal
    hs_norm2: float


@lru_cache(maxsize=None)
def _basis_cached(D: int) -> tuple[BasisElement, ...]:
    elements = [("identity", np.eye(D, dtype=complex))]
    pairs = [(j, k) for j in range(D) for k in range(j + 1, D)]
    for j, k in pairs:
        m = np.zeros((D, D), dtype=complex)
        m[j, k] = m[k, j] = 1.0
        elements.append(("symmetric", m))
    for j, k in pairs:
        m = np.zeros((D, D), dtype=complex)
        m[j, k] = -1j
        m[k, j] = 1j
        elements.append(("antisymmetric", m))
    for l in range(1, D):
        diag = np.zeros(D)
        diag[:l] = 1.0
        diag[l] = -l
        elements.append(("diagonal", np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex)))
    out = []
    for i, (family, m) in enumerate(elements):
        m.setflags(write=False)
        out.append(BasisElement(i, m, family, float(np.trace(m @ m).real)))
    return tuple(out)


def gell_mann_basis(D: int) -> list[BasisElement]:
    """Identity, symmetric, antisymmetric and diagonal generalised Gell-Mann matrices.

    Non-identity elements satisfy ``Tr(l_i l_j) = 2 delta_ij``. For ``D = 2``
    the list is ``[I, X, Y, Z]``.
    """
    if D < 2:
        raise ValueError("dimension must be >= 2")
    return list(_basis_cached(int(D)))


def basis_stack(D: int) -> np.ndarray:
    return np.stack([b.matrix for b in gell_mann_basis(D)])


class Term(NamedTuple):
    i: int
    j: int
    coefficient: float


@dataclass(frozen=True)
class WitnessDecomposition:
    """``W = sum_ij c_ij l_i (x) l_j`` restricted to coefficients above ``threshold``."""

    dimension: int
    terms: tuple[Term, ...]
    threshold: float
    kind: str = ""

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def total_weight(self) -> float:
        return float(sum(abs(t.coefficient) for t in self.terms))

    @property
    def identity_coefficient(self) -> float:
        for t in self.terms:
            if t.i == 0 and t.j == 0:
                return t.coefficient
        return 0.0

    @property
    def measured(self) -> tuple[Term, ...]:
        """Terms that need measuring: everything except identity (x) identity."""
        return tuple(t for t in self.terms if (t.i, t.j) != (0, 0))

    def operator(self, term: Term) -> np.ndarray:
        B = gell_mann_basis(self.dimension)
        return np.kron(B[term.i].matrix, B[term.j].matrix)

    def reconstruct(self) -> np.ndarray:
        B = basis_stack(self.dimension)
        D2 = self.dimension**2
        out = np.zeros((D2, D2), dtype=complex)
        for t in self.terms:
            out += t.coefficient * np.kron(B[t.i], B[t.j])
        return out

    def to_records(self) -> list[dict]:
        return [{"i": t.i, "j": t.j, "c_ij": t.coefficient} for t in self.terms]


def coefficient_matrix(W: np.ndarray, D: int) -> np.ndarray:
    """All ``D^2 x D^2`` projection coefficients ``Tr(W l_i(x)l_j) / (|l_i|^2 |l_j|^2)``."""
    B = basis_stack(D)
    norms = np.array([b.hs_norm2 for b in gell_mann_basis(D)])
    W4 = np.asarray(W).reshape(D, D, D, D)
    c = np.einsum("acbd,iba,jdc->ij", W4, B, B, optimize=True)
    if np.max(np.abs(c.imag)) > 1e-9:
        raise NumericalError("witness is not Hermitian: complex decomposition coefficients")
    return c.real / np.outer(norms, norms)


def decompose_witness(witness, epsilon: float | None = None) -> WitnessDecomposition:
    """Project a witness onto tensor products of Gell-Mann matrices.

    ``epsilon`` is an absolute cut on ``|c_ij|``; by default it is
    ``1e-8 * max |c_ij|``. Terms with ``|c_ij| <= epsilon`` are dropped.
    """
    W = getattr(witness, "matrix", witness)
    kind = getattr(witness, "kind", "")
    D = int(round(np.sqrt(W.shape[0])))
    c = coefficient_matrix(W, D)
    if epsilon is None:
        epsilon = RELATIVE_THRESHOLD * float(np.max(np.abs(c)))
    if epsilon < 0:
        raise ValueError("threshold must be >= 0")
    idx = np.argwhere(np.abs(c) > epsilon)
    terms = tuple(Term(int(i), int(j), float(c[i, j])) for i, j in idx)
    return WitnessDecomposition(dimension=D, terms=terms, threshold=float(epsilon), kind=kind)


# -- commutation ------------------------------------------------------------


@lru_cache(maxsize=None)
def _product_classes(D: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For every ordered pair of basis elements, classify ``X = l_i l_k``.

    Returns ``(magnitude, is_zero, phase)`` where ``X^dagger = phase * X``
    when such a unit phase exists and ``phase`` is NaN otherwise.
    """
    B = basis_stack(D)
    P = np.einsum("iab,kbc->ikac", B, B)
    n = B.shape[0]
    flat = P.reshape(n, n, -1)
    mag = np.abs(flat).max(axis=2)
    is_zero = mag < 1e-13
    dag = np.conj(P.transpose(0, 1, 3, 2)).reshape(n, n, -1)
    lead = np.abs(flat).argmax(axis=2)
    x = np.take_along_axis(flat, lead[..., None], axis=2)[..., 0]
    xd = np.take_along_axis(dag, lead[..., None], axis=2)[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        phase = np.where(is_zero, 1.0, xd / x)
    resid = np.abs(dag - phase[..., None] * flat).max(axis=2)
    proportional = is_zero | (resid <= 1e-12 * np.maximum(mag, 1.0))
    phase = np.where(proportional, phase, np.nan)
    return mag, is_zero, phase


def commutator_norms(D: int, left: list[tuple[int, int]], right: list[tuple[int, int]]) -> np.ndarray:
    """Max-abs entry of ``[l_i (x) l_j, l_k (x) l_l]`` for all term pairs.

    Uses ``[A(x)B, C(x)D] = X(x)Y - X^dag(x)Y^dag`` with ``X = AC``, ``Y = BD``.
    When both factors satisfy ``X^dag = a X`` and ``Y^dag = b Y`` the norm is
    ``|1 - a b| max|X| max|Y|``; when either is zero the commutator vanishes;
    otherwise the tensor product cannot be Hermitian and the pair does not
    commute (reported as ``inf``).
    """
    mag, is_zero, phase = _product_classes(D)
    li = np.array([t[0] for t in left])[:, None]
    lj = np.array([t[1] for t in left])[:, None]
    ri = np.array([t[0] for t in right])[None, :]
    rj = np.array([t[1] for t in right])[None, :]
    zero = is_zero[li, ri] | is_zero[lj, rj]
    a = phase[li, ri]
    b = phase[lj, rj]
    norm = np.abs(1 - a * b) * mag[li, ri] * mag[lj, rj]
    norm = np.where(np.isnan(norm), np.inf, norm)
    return np.where(zero, 0.0, norm)


@dataclass(frozen=True)
class CommutationGraph:
    """Vertices are the measured (non-identity) terms in decomposition order."""

    terms: tuple[Term, ...]
    adjacency: np.ndarray

    @property
    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        a, b = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(a.tolist(), b.tolist()))


def commutation_graph(decomp: WitnessDecomposition) -> CommutationGraph:
    terms = decomp.measured
    pairs = [(t.i, t.j) for t in terms]
    if not pairs:
        return CommutationGraph(terms=(), adjacency=np.zeros((0, 0), dtype=bool))
    adj = commutator_norms(decomp.dimension, pairs, pairs) < COMMUTATOR_TOLERANCE
    np.fill_diagonal(adj, False)
    return CommutationGraph(terms=terms, adjacency=adj)


# -- grouping ---------------------------------------------------------------


@dataclass
class MeasurementGroup:
    """Pairwise-commuting terms measured together in one shared eigenbasis.

    ``members`` index into the graph's vertex list (``decomp.measured``).
    ``eigenvalues[m, k]`` is member ``m``'s value on basis column ``k``.
    """

    members: tuple[int, ...]
    weight: float
    basis: np.ndarray | None = field(default=None, repr=False)
    eigenvalues: np.ndarray | None = field(default=None, repr=False)

    def to_record(self, terms) -> dict:
        return {
            "members": [{"i": terms[m].i, "j": terms[m].j} for m in self.members],
            "weight": self.weight,
        }


def _ldfc_order(graph: CommutationGraph, by_commuting: bool) -> list[int]:
    n = len(graph.terms)
    deg = graph.degree if by_commuting else (n - 1) - graph.degree
    # rounded so ties between equal-magnitude coefficients do not hinge on float noise
    w = np.round(np.array([abs(t.coefficient) for t in graph.terms]), 12)
    return sorted(range(n), key=lambda v: (-int(deg[v]), -w[v], v))


def group_terms_ldfc(
    graph: CommutationGraph,
    decomp: WitnessDecomposition,
    strategy: str = "ldfc",
    with_basis: bool = True,
) -> list[MeasurementGroup]:
    """Partition terms into commuting groups with a largest-degree-first greedy.

    ``strategy="ldfc"`` colours the non-commutation graph: vertices are
    visited in descending number of non-commuting partners and each joins
    the first existing group it commutes with entirely. ``strategy="clique"``
    instead seeds each new group with the unassigned term having the most
    commuting partners and fills it greedily in the same order. Ties go to
    larger ``|c_ij|`` and then to the lower term index.
    """
    n = len(graph.terms)
    if n == 0:
        return []
    adj = graph.adjacency
    if strategy == "ldfc":
        order = _ldfc_order(graph, by_commuting=False)
        members: list[list[int]] = []
        blocked: list[np.ndarray] = []  # blocked[g][v]: v fails to commute with some member of g
        for v in order:
            for g, mask in enumerate(blocked):
                if not mask[v]:
                    members[g].append(v)
                    mask |= ~adj[v]
                    mask[v] = True
                    break
            else:
                members.append([v])
                mask = ~adj[v]
                mask[v] = True
                blocked.append(mask)
    elif strategy == "clique":
        order = _ldfc_order(graph, by_commuting=True)
        assigned = np.zeros(n, dtype=bool)
        members = []
        for seed in order:
            if assigned[seed]:
                continue
            group = [seed]
            assigned[seed] = True
            ok = adj[seed].copy()
            for v in order:
                if not assigned[v] and ok[v]:
                    group.append(v)
                    assigned[v] = True
                    ok &= adj[v]
            members.append(group)
    else:
        raise ValueError(f"unknown grouping strategy {strategy!r}")

    groups = []
    for g in members:
        g = tuple(sorted(g))
        weight = float(sum(abs(graph.terms[m].coefficient) for m in g))
        groups.append(MeasurementGroup(members=g, weight=weight))
    if with_basis:
        B = basis_stack(decomp.dimension)
        for group in groups:
            ops = [np.kron(B[graph.terms[m].i], B[graph.terms[m].j]) for m in group.members]
            group.basis, group.eigenvalues = joint_eigenbasis(ops)
    return groups


def _cluster(values: np.ndarray, tol: float) -> list[np.ndarray]:
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return np.split(np.arange(values.size), breaks)


def _simultaneous(ops: list[np.ndarray], rng: np.random.Generator) -> np.ndarray:
    if len(ops) == 1:
        return np.linalg.eigh(ops[0])[1]
    n = ops[0].shape[0]
    weights = rng.uniform(0.5, 1.5, size=len(ops))
    H = sum(w * op for w, op in zip(weights, ops))
    evals, V = np.linalg.eigh((H + H.conj().T) / 2)
    scale = max(1.0, float(np.max(np.abs(evals))))
    U = np.empty((n, n), dtype=complex)
    # generous clustering: merged distinct values are split again below
    for block in _cluster(evals, 1e-6 * scale):
        sub = V[:, block]
        if block.size > 1:
            restricted = [sub.conj().T @ op @ sub for op in ops]
            restricted = [r for r in restricted if np.max(np.abs(r - np.diag(np.diag(r)))) > 1e-11]
            if restricted:
                sub = sub @ _simultaneous(restricted, rng)
        U[:, block] = sub
    return U


def joint_eigenbasis(ops: list[np.ndarray], seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Unitary whose columns diagonalise every operator in ``ops`` at once.

    A random positive combination of the operators is diagonalised and any
    degenerate eigenspace is split recursively by the operators restricted
    to it. Returns ``(U, eigenvalues)`` with ``eigenvalues[m] = diag(U^dag A_m U)``.
    """
    if not ops:
        raise ValueError("empty group")
    if len(ops) == 1:
        evals, U = np.linalg.eigh(ops[0])
        return U, evals[None, :]
    U = _simultaneous(list(ops), np.random.default_rng(seed))
    eigenvalues = np.empty((len(ops), U.shape[1]))
    for m, op in enumerate(ops):
        conj = U.conj().T @ op @ U
        off = conj - np.diag(np.diag(conj))
        if np.max(np.abs(off)) > DIAGONALISATION_TOLERANCE:
            raise NumericalError("operators in group are not simultaneously diagonalisable")
        eigenvalues[m] = np.diag(conj).real
    return U, eigenvalues

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density_matrix
from qgem.basis import (
    NumericalError,
    basis_stack,
    commutation_graph,
    commutator_norms,
    decompose_witness,
    gell_mann_basis,
    group_terms_ldfc,
    joint_eigenbasis,
)
from qgem.config import ExperimentConfig
from qgem.entanglement import build_witness
from qgem.states import pure_state

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def witness(D, kind="ppt", setup="parallel"):
    c = getattr(ExperimentConfig, setup)(dimension=D)
    return build_witness(kind, pure_state(c), c.hold_time)


@pytest.mark.parametrize("D", [2, 3, 4, 5, 6])
def test_gell_mann_orthogonality(D):
    B = basis_stack(D)
    assert len(B) == D * D
    gram = np.einsum("iab,jba->ij", B, B)
    expected = 2 * np.eye(D * D)
    expected[0, 0] = D
    np.testing.assert_allclose(gram, expected, atol=1e-12)
    for b in B:
        np.testing.assert_allclose(b, b.conj().T)
    for b in B[1:]:
        assert abs(np.trace(b)) < 1e-12


def test_qubit_basis_is_pauli():
    B = basis_stack(2)
    for got, want in zip(B, [np.eye(2), X, Y, Z]):
        np.testing.assert_allclose(got, want)


def test_family_order():
    fam = [b.family for b in gell_mann_basis(3)]
    assert fam == ["identity"] + ["symmetric"] * 3 + ["antisymmetric"] * 3 + ["diagonal"] * 2


def test_coefficients_match_explicit_traces():
    W = witness(3).matrix
    B = gell_mann_basis(3)
    d = decompose_witness(W, epsilon=0.0)
    lookup = {(t.i, t.j): t.coefficient for t in d.terms}
    for i, j in itertools.product(range(9), repeat=2):
        op = np.kron(B[i].matrix, B[j].matrix)
        c = np.trace(W @ op).real / (B[i].hs_norm2 * B[j].hs_norm2)
        assert lookup.get((i, j), 0.0) == pytest.approx(c, abs=1e-15)


def test_qubit_decomposition_coefficients():
    d = decompose_witness(witness(2))
    got = {(t.i, t.j): t.coefficient for t in d.terms}
    # I=0, X=1, Y=2, Z=3
    assert got.keys() == {(0, 0), (1, 1), (3, 2), (2, 3)}
    for key, value in {(0, 0): 0.25, (1, 1): -0.25, (3, 2): -0.25, (2, 3): -0.25}.items():
        assert got[key] == pytest.approx(value, abs=1e-9)
    assert d.identity_coefficient == pytest.approx(0.25)
    assert len(d.measured) == 3


@given(D=st.integers(2, 4), seed=st.integers(0, 2**32 - 1))
def test_full_decomposition_reconstructs(D, seed):
    H = random_density_matrix(np.random.default_rng(seed), D * D) - 1 / (D * D)
    d = decompose_witness(H, epsilon=0.0)
    assert np.abs(d.reconstruct() - H).max() < 1e-10


def test_threshold_is_relative_to_largest_coefficient():
    d = decompose_witness(witness(4))
    cmax = max(abs(t.coefficient) for t in d.terms)
    assert d.threshold == pytest.approx(1e-8 * cmax)
    assert all(abs(t.coefficient) > d.threshold for t in d.terms)


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        decompose_witness(witness(2), epsilon=-1.0)


def brute_commutes(D, a, b):
    B = basis_stack(D)
    A = np.kron(B[a[0]], B[a[1]])
    C = np.kron(B[b[0]], B[b[1]])
    return np.abs(A @ C - C @ A).max() < 1e-10


@pytest.mark.parametrize("D", [2, 3])
def test_factorised_commutation_matches_brute_force(D):
    pairs = list(itertools.product(range(D * D), repeat=2))
    fast = commutator_norms(D, pairs, pairs) < 1e-10
    for x in range(len(pairs)):
        for y in range(len(pairs)):
            assert fast[x, y] == brute_commutes(D, pairs[x], pairs[y])


@given(seed=st.integers(0, 2**32 - 1))
def test_factorised_commutation_matches_brute_force_sampled(seed):
    rng = np.random.default_rng(seed)
    D = int(rng.integers(4, 7))
    left = [tuple(rng.integers(0, D * D, 2)) for _ in range(10)]
    right = [tuple(rng.integers(0, D * D, 2)) for _ in range(10)]
    fast = commutator_norms(D, left, right) < 1e-10
    for x, a in enumerate(left):
        for y, b in enumerate(right):
            assert fast[x, y] == brute_commutes(D, a, b)


def test_pauli_commutation_graph():
    g = commutation_graph(decompose_witness(witness(2)))
    # XX, ZY, YZ pairwise commute
    assert g.adjacency.sum() == 6
    assert g.edges() == [(0, 1), (0, 2), (1, 2)]


@pytest.mark.parametrize("strategy", ["ldfc", "clique"])
@pytest.mark.parametrize("D", [2, 3, 4])
def test_groups_partition_terms_and_commute(D, strategy):
    d = decompose_witness(witness(D))
    g = commutation_graph(d)
    groups = group_terms_ldfc(g, d, strategy=strategy)
    members = sorted(m for grp in groups for m in grp.members)
    assert members == list(range(len(d.measured)))
    B = basis_stack(D)
    for grp in groups:
        ops = [np.kron(B[d.measured[m].i], B[d.measured[m].j]) for m in grp.members]
        for a, b in itertools.combinations(ops, 2):
            assert np.abs(a @ b - b @ a).max() < 1e-10
        # the shared basis diagonalises every member with the stated eigenvalues
        U = grp.basis
        np.testing.assert_allclose(U.conj().T @ U, np.eye(D * D), atol=1e-10)
        for op, ev in zip(ops, grp.eigenvalues):
            np.testing.assert_allclose(U.conj().T @ op @ U, np.diag(ev), atol=1e-8)
        assert grp.weight == pytest.approx(sum(abs(d.measured[m].coefficient) for m in grp.members))


def test_qubit_terms_form_one_group():
    d = decompose_witness(witness(2))
    assert len(group_terms_ldfc(commutation_graph(d), d)) == 1


def test_grouping_is_deterministic():
    d = decompose_witness(witness(4))
    g = commutation_graph(d)
    a = [grp.members for grp in group_terms_ldfc(g, d, with_basis=False)]
    b = [grp.members for grp in group_terms_ldfc(g, d, with_basis=False)]
    assert a == b


def test_unknown_strategy():
    d = decompose_witness(witness(2))
    with pytest.raises(ValueError):
        group_terms_ldfc(commutation_graph(d), d, strategy="random")


def test_joint_eigenbasis_rejects_non_commuting():
    with pytest.raises(NumericalError):
        joint_eigenbasis([np.kron(X, np.eye(2)), np.kron(Z, np.eye(2))])


def test_joint_eigenbasis_of_degenerate_commuting_set():
    ops = [np.kron(X, X), np.kron(Y, Y), np.kron(Z, Z)]
    U, ev = joint_eigenbasis(ops)
    for op, e in zip(ops, ev):
        np.testing.assert_allclose(U.conj().T @ op @ U, np.diag(e), atol=1e-10)
    # Bell basis: the three products multiply to -1 on every outcome
    np.testing.assert_allclose(ev.prod(axis=0), -1.0, atol=1e-10)

"""Entanglement entropy and witness construction for two-qudit states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .states import DensityMatrix, JointPureState, density_matrix

EIGEN_ZERO = 1e-12
IMAG_RESIDUE_TOLERANCE = 1e-8

WitnessKind = Literal["ppt", "vicinity"]


class UnsupportedStateError(ValueError):
    """Entropy requested for a state that is not pure."""


@dataclass(frozen=True)
class Witness:
    """Hermitian witness operator on the joint ``D^2``-dimensional space.

    ``negative_eigenvalue`` is set for PPT witnesses (the most negative
    eigenvalue of the generating state's partial transpose); ``schmidt_max``
    is the squared largest Schmidt coefficient used by vicinity witnesses.
    """

    matrix: np.ndarray
    kind: WitnessKind
    dimension: int
    negative_eigenvalue: float | None = None
    schmidt_max: float | None = None
    built_from: dict = field(default_factory=dict)


def _as_array(rho) -> tuple[np.ndarray, int]:
    if isinstance(rho, DensityMatrix):
        return rho.rho, rho.dimension
    arr = np.asarray(rho)
    D = int(round(np.sqrt(arr.shape[0])))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or D * D != arr.shape[0]:
        raise ValueError(f"expected a D^2 x D^2 matrix, got shape {arr.shape}")
    return arr, D


def partial_trace(rho, subsystem: int) -> np.ndarray:
    """Trace out qudit ``subsystem`` (1 or 2) and return the other qudit's state."""
    arr, D = _as_array(rho)
    t = arr.reshape(D, D, D, D)
    if subsystem == 1:
        return np.einsum("abad->bd", t)
    if subsystem == 2:
        return np.einsum("abcb->ac", t)
    raise ValueError("subsystem must be 1 or 2")


def partial_transpose(rho, subsystem: int = 2) -> np.ndarray:
    """Transpose the indices of one qudit: ``((p,q),(p',q')) -> ((p,q'),(p',q))`` for qudit 2."""
    arr, D = _as_array(rho)
    t = arr.reshape(D, D, D, D)
    if subsystem == 2:
        out = t.transpose(0, 3, 2, 1)
    elif subsystem == 1:
        out = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError("subsystem must be 1 or 2")
    return out.reshape(D * D, D * D)


def von_neumann_entropy(probabilities: np.ndarray) -> float:
    """Shannon entropy in bits of a spectrum; eigenvalues below 1e-12 count as zero."""
    p = np.asarray(probabilities, dtype=float)
    p = p[p > EIGEN_ZERO]
    return float(-(p * np.log2(p)).sum())


def entanglement_entropy(rho: DensityMatrix, traced: int = 1) -> float:
    """Entropy of the reduced state of a pure two-qudit state, in bits.

    Mixed states are refused: classical mixing would register as entanglement.
    """
    if not rho.is_pure:
        raise UnsupportedStateError("entanglement entropy is only defined here for pure states")
    reduced = partial_trace(rho, traced)
    evals = np.linalg.eigvalsh((reduced + reduced.conj().T) / 2)
    S = von_neumann_entropy(evals)
    if S <= 0.0:
        return 0.0  # also turns -0.0 into 0.0
    return min(S, float(np.log2(rho.dimension)))


def schmidt_coefficients(state: JointPureState) -> np.ndarray:
    """Squared Schmidt coefficients in descending order."""
    return np.linalg.svd(state.amplitudes, compute_uv=False) ** 2


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(vec) > 1e-12)
    if nz.size == 0:
        return vec
    lead = vec[nz[0]]
    return vec * (abs(lead) / lead)


def build_ppt_witness(rho: DensityMatrix, built_from: dict | None = None) -> Witness | None:
    """Witness ``(|l><l|)^{T_2}`` from the most negative partial-transpose eigenvector.

    ``rho`` should be the decoherence-free state the witness is tailored to.
    Returns ``None`` when the partial transpose has no negative eigenvalue.
    """
    pt = partial_transpose(rho, 2)
    pt = (pt + pt.conj().T) / 2
    evals, evecs = np.linalg.eigh(pt)
    if evals[0] >= -EIGEN_ZERO:
        return None
    vec = _fix_phase(evecs[:, 0])
    projector = np.outer(vec, vec.conj())
    W = partial_transpose(projector, 2)
    W = (W + W.conj().T) / 2
    return Witness(
        matrix=W,
        kind="ppt",
        dimension=rho.dimension,
        negative_eigenvalue=float(evals[0]),
        built_from=dict(built_from or {}),
    )


def build_vicinity_witness(state: JointPureState, built_from: dict | None = None) -> Witness:
    """``lambda_m^2 I - |psi><psi|`` with ``lambda_m`` the largest Schmidt coefficient."""
    lam2 = float(schmidt_coefficients(state)[0])
    v = state.vector
    n = v.size
    W = lam2 * np.eye(n, dtype=complex) - np.outer(v, v.conj())
    return Witness(matrix=W, kind="vicinity", dimension=state.dimension, schmidt_max=lam2, built_from=dict(built_from or {}))


def witness_expectation(witness: Witness | np.ndarray, rho) -> float:
    W = witness.matrix if isinstance(witness, Witness) else np.asarray(witness)
    arr, _ = _as_array(rho)
    if W.shape != arr.shape:
        raise ValueError(f"witness shape {W.shape} does not match state shape {arr.shape}")
    # Tr(W rho) without forming the product
    value = np.einsum("ij,ji->", W, arr)
    if abs(value.imag) > IMAG_RESIDUE_TOLERANCE:
        raise ArithmeticError(f"witness expectation has imaginary part {value.imag:.3g}; operator not Hermitian")
    return float(value.real)


def build_witness(kind: WitnessKind, state: JointPureState, hold_time: float = 0.0, built_from: dict | None = None):
    """Dispatch on witness kind; the input is always the decoherence-free state."""
    if kind == "ppt":
        return build_ppt_witness(density_matrix(state, hold_time=hold_time), built_from)
    if kind == "vicinity":
        return build_vicinity_witness(state, built_from)
    raise ValueError(f"unknown witness kind {kind!r}")

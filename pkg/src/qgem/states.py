"""Gravitational phases, the joint two-qudit state and dephasing.

Joint basis labels ``(p, q)`` are flattened row-major: index ``p * D + q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .geometry import DistanceMatrix, distance_matrix

NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PhaseMatrix:
    phi: np.ndarray

    @property
    def dimension(self) -> int:
        return self.phi.shape[0]


@dataclass(frozen=True)
class JointPureState:
    """Amplitudes ``psi[p, q]`` of ``sum_pq psi[p, q] |p>|q>``."""

    amplitudes: np.ndarray

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray
    dimension: int
    is_pure: bool = False
    decoherence_rate: float = 0.0
    hold_time: float = 0.0


def phase_matrix(dist: DistanceMatrix, config: ExperimentConfig) -> PhaseMatrix:
    """Phase ``G m1 m2 tau / (hbar C_pq)`` picked up by each instance pair."""
    scale = config.gravitational_constant * config.mass_1 * config.mass_2 * config.hold_time / config.reduced_planck
    return PhaseMatrix(phi=scale / dist.C)


def superposed_state(phases: PhaseMatrix) -> JointPureState:
    D = phases.dimension
    return JointPureState(amplitudes=np.exp(1j * phases.phi) / D)


def density_matrix(state: JointPureState, hold_time: float = 0.0) -> DensityMatrix:
    v = state.vector
    norm = np.vdot(v, v).real
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"state is not normalised (norm^2 = {norm!r})")
    return DensityMatrix(rho=np.outer(v, v.conj()), dimension=state.dimension, is_pure=True, hold_time=hold_time)


def dephasing_mask(dimension: int, factor: float) -> np.ndarray:
    """Tensor product of two single-qudit masks with ``factor`` off the diagonal."""
    single = np.full((dimension, dimension), factor)
    np.fill_diagonal(single, 1.0)
    return np.kron(single, single)


def apply_decoherence(rho: DensityMatrix, gamma: float, tau: float) -> DensityMatrix:
    """Damp every positional coherence of each qudit by ``exp(-gamma * tau)``.

    Element ``((p, q), (p', q'))`` is scaled by ``x**[p != p'] * x**[q != q']``.
    The mask is a tensor product of positive semidefinite matrices, so the
    entrywise product keeps ``rho`` a valid state.
    """
    if gamma < 0:
        raise ValueError("decoherence rate must be >= 0")
    if tau < 0:
        raise ValueError("hold time must be >= 0")
    if gamma == 0 or tau == 0:
        return DensityMatrix(rho.rho.copy(), rho.dimension, rho.is_pure, rho.decoherence_rate, tau or rho.hold_time)
    x = np.exp(-gamma * tau)
    return DensityMatrix(
        rho=rho.rho * dephasing_mask(rho.dimension, x),
        dimension=rho.dimension,
        is_pure=False,
        decoherence_rate=gamma,
        hold_time=tau,
    )


def pure_state(config: ExperimentConfig) -> JointPureState:
    """State at the end of the hold time, before any decoherence."""
    return superposed_state(phase_matrix(distance_matrix(config), config))


def final_state(config: ExperimentConfig) -> DensityMatrix:
    """Density matrix after the hold time with the configured decoherence applied."""
    rho = density_matrix(pure_state(config), hold_time=config.hold_time)
    return apply_decoherence(rho, config.decoherence_rate, config.hold_time)

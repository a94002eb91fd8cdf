"""Inter-instance distances for two rotated interferometers.

Qudit 1 has instances ``p = 0..D-1`` placed along its arm at distance
``A_p = (D-1-p) * s`` from its innermost instance; qudit 2 has instances
``q`` at distance ``q * s`` from its own innermost instance, ``s = dx/(D-1)``.
The innermost instances sit ``d`` apart. Distances follow from the law of
cosines applied twice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig

ARCSIN_TOLERANCE = 1e-12
GEOMETRY_TOLERANCE = 1e-12  # metres


class GeometryError(ValueError):
    """The trigonometric construction produced an inconsistent angle."""


@dataclass(frozen=True)
class DistanceMatrix:
    """``C[p, q]`` plus the intermediates used to build it (all in metres/radians)."""

    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    theta3: np.ndarray

    @property
    def dimension(self) -> int:
        return self.C.shape[0]


def distance_matrix(config: ExperimentConfig) -> DistanceMatrix:
    """Distance between instance ``p`` of qudit 1 and instance ``q`` of qudit 2.

    ``B_q`` is the distance from qudit 1's innermost instance to instance
    ``q`` of qudit 2, and ``theta3`` the angle between qudit 1's arm and that
    line of sight. The line-of-sight angle is taken with ``arctan2`` so it
    stays on the correct branch when qudit 2's arm folds back past qudit 1
    (``d + q s cos(theta2) < 0``); elsewhere it equals the ``arcsin`` form.
    """
    D = config.dimension
    s = config.spacing
    d = config.min_distance
    t1, t2 = config.theta_1, config.theta_2

    idx = np.arange(D, dtype=float)
    A = (D - 1 - idx) * s
    offset = idx * s
    B = np.sqrt(d**2 + offset**2 - 2 * d * offset * np.cos(np.pi - t2))

    # B_q = 0 only when an instance of qudit 2 lands on qudit 1's innermost one
    arg = np.divide(offset * np.sin(t2), B, out=np.zeros(D), where=B > 0)
    if np.any(np.abs(arg) > 1 + ARCSIN_TOLERANCE):
        raise GeometryError(f"line-of-sight sine outside [-1, 1]: {arg}")
    sight = np.arctan2(offset * np.sin(t2), d + offset * np.cos(t2))
    theta3 = np.pi - t1 + sight

    sq = A[:, None] ** 2 + B[None, :] ** 2 - 2 * A[:, None] * B[None, :] * np.cos(theta3)[None, :]
    C = np.sqrt(np.clip(sq, 0.0, None))
    return DistanceMatrix(C=C, A=A, B=B, theta3=theta3)


def validate_geometry(dist: DistanceMatrix, config: ExperimentConfig) -> tuple[bool, list[tuple[int, int]]]:
    """Check that no pair of instances comes closer than the minimum distance.

    Returns ``(ok, offending)`` where ``offending`` lists ``(p, q)`` pairs
    with ``C[p, q] < d``.
    """
    bound = config.min_distance - GEOMETRY_TOLERANCE
    bad = np.argwhere(dist.C < bound)
    offending = [(int(p), int(q)) for p, q in bad]
    return not offending, offending


def is_valid_geometry(config: ExperimentConfig) -> bool:
    return validate_geometry(distance_matrix(config), config)[0]

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgem.config import ExperimentConfig
from qgem.geometry import distance_matrix, is_valid_geometry, validate_geometry

angles = st.floats(0.0, 2 * math.pi, exclude_max=True)


def planar_distances(config):
    """Place every instance in the plane and measure Euclidean distances.

    Qudit 1's instances lie on a ray from the origin (its innermost instance)
    at angle ``theta_1 + pi``; qudit 2's lie on a ray from ``(d, 0)`` at
    angle ``theta_2``. Index ``p = D-1`` of qudit 1 and ``q = 0`` of qudit 2
    are the innermost instances.
    """
    D, s, d = config.dimension, config.spacing, config.min_distance
    p = np.arange(D)
    r1 = (D - 1 - p) * s
    P = np.stack([-r1 * np.cos(config.theta_1), -r1 * np.sin(config.theta_1)], axis=1)
    Q = np.stack([d + p * s * np.cos(config.theta_2), p * s * np.sin(config.theta_2)], axis=1)
    return np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=-1)


def arcsin_distances(config):
    """Law-of-cosines form with the line-of-sight angle taken from arcsin."""
    D, s, d = config.dimension, config.spacing, config.min_distance
    t1, t2 = config.theta_1, config.theta_2
    C = np.empty((D, D))
    for p in range(D):
        for q in range(D):
            A = (D - 1 - p) * s
            B = math.sqrt(d * d + (q * s) ** 2 + 2 * d * q * s * math.cos(t2))
            beta = 0.0 if B == 0 else math.asin(q * s * math.sin(t2) / B)
            t3 = math.pi - t1 + beta
            C[p, q] = math.sqrt(max(A * A + B * B - 2 * A * B * math.cos(t3), 0.0))
    return C


def test_parallel_qubits_by_hand():
    c = ExperimentConfig.parallel()
    C = distance_matrix(c).C
    dx, d = 250e-6, 200e-6
    # aligned pairs at distance d, crossed pairs on the diagonal
    assert C[1, 0] == pytest.approx(d, rel=1e-12)
    assert C[0, 1] == pytest.approx(d, rel=1e-12)
    assert C[0, 0] == pytest.approx(math.hypot(d, dx), rel=1e-12)
    assert C[1, 1] == pytest.approx(math.hypot(d, dx), rel=1e-12)


def test_linear_qubits_by_hand():
    C = distance_matrix(ExperimentConfig.linear()).C
    dx, d = 250e-6, 200e-6
    assert C == pytest.approx(np.array([[d + dx, d + 2 * dx], [d, d + dx]]), rel=1e-12)


@pytest.mark.parametrize("D", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("setup", ["parallel", "linear"])
def test_presets_match_planar_placement(D, setup):
    c = getattr(ExperimentConfig, setup)(dimension=D)
    np.testing.assert_allclose(distance_matrix(c).C, planar_distances(c), rtol=1e-12)
    assert is_valid_geometry(c)


@given(t1=angles, t2=angles, D=st.integers(2, 6))
def test_random_angles_match_planar_placement(t1, t2, D):
    c = ExperimentConfig(dimension=D, theta_1=t1, theta_2=t2)
    np.testing.assert_allclose(distance_matrix(c).C, planar_distances(c), rtol=1e-11, atol=1e-18)


@given(t1=angles, t2=st.floats(0.0, math.pi / 2), D=st.integers(2, 6))
def test_agrees_with_arcsin_form_where_that_is_unambiguous(t1, t2, D):
    # with theta_2 in [0, pi/2] the line-of-sight angle never exceeds pi/2
    c = ExperimentConfig(dimension=D, theta_1=t1, theta_2=t2)
    np.testing.assert_allclose(distance_matrix(c).C, arcsin_distances(c), rtol=1e-10, atol=1e-18)


@given(t1=st.floats(1e-9, 2 * math.pi - 1e-9), t2=st.floats(1e-9, 2 * math.pi - 1e-9), D=st.integers(2, 6))
def test_mirror_symmetry(t1, t2, D):
    a = distance_matrix(ExperimentConfig(dimension=D, theta_1=t1, theta_2=t2)).C
    b = distance_matrix(ExperimentConfig(dimension=D, theta_1=2 * math.pi - t1, theta_2=2 * math.pi - t2)).C
    np.testing.assert_allclose(a, b, rtol=1e-10)


@given(t1=angles, t2=angles, D=st.integers(2, 6))
def test_distances_bounded_by_triangle_inequality(t1, t2, D):
    c = ExperimentConfig(dimension=D, theta_1=t1, theta_2=t2)
    C = distance_matrix(c).C
    assert np.all(C >= 0)
    assert np.all(C <= c.min_distance + 2 * c.superposition_width + 1e-15)


def test_folded_arms_are_invalid():
    c = ExperimentConfig(theta_1=math.pi, theta_2=math.pi)
    ok, bad = validate_geometry(distance_matrix(c), c)
    assert not ok and bad
    assert not is_valid_geometry(c)


def test_perpendicular_arms_touch_the_minimum_distance_only():
    # theta = (pi/2, pi/2): both arms point the same way, closest pair is exactly d
    c = ExperimentConfig(theta_1=math.pi / 2, theta_2=math.pi / 2)
    assert distance_matrix(c).C.min() == pytest.approx(c.min_distance, rel=1e-12)
    assert is_valid_geometry(c)


def test_zero_width_collapses_to_min_distance():
    c = ExperimentConfig(dimension=4, superposition_width=0.0)
    np.testing.assert_allclose(distance_matrix(c).C, c.min_distance, rtol=1e-12)


@pytest.mark.parametrize("D", [2, 3, 4, 5, 6])
def test_linear_closed_form(D):
    c = ExperimentConfig.linear(dimension=D)
    p, q = np.meshgrid(np.arange(D), np.arange(D), indexing="ij")
    expected = c.min_distance + (D - 1 - p + q) * c.superposition_width / (D - 1)
    np.testing.assert_allclose(distance_matrix(c).C, expected, rtol=1e-15)


@pytest.mark.parametrize("D", [2, 3, 4, 5, 6])
def test_parallel_is_symmetric(D):
    C = distance_matrix(ExperimentConfig.parallel(dimension=D)).C
    np.testing.assert_allclose(C, C.T, rtol=1e-12)


@given(D=st.integers(2, 6), a=st.floats(1e-6, 1e-3), b=st.floats(1e-6, 1e-3))
def test_parallel_distances_grow_with_width(D, a, b):
    small, large = sorted((a, b))
    c = ExperimentConfig.parallel(dimension=D)
    Cs = distance_matrix(c.replace(superposition_width=small)).C
    Cl = distance_matrix(c.replace(superposition_width=large)).C
    assert np.all(Cl >= Cs * (1 - 1e-12))

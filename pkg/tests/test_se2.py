"""
Tests for the planar rigid-motion algebra.
"""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gaittracks.se2 import (
    BodyVelocity,
    GroupElement,
    between,
    cf4_step,
    compose,
    exp,
    integrate_trajectory,
    inverse,
    log,
    trajectory_poses,
    transform_point,
    wrap_angle,
)


def homogeneous(g: GroupElement) -> np.ndarray:
    c, s = math.cos(g.theta), math.sin(g.theta)
    return np.array([[c, -s, g.x], [s, c, g.y], [0.0, 0.0, 1.0]])


def from_homogeneous(m: np.ndarray) -> GroupElement:
    return GroupElement(m[0, 2], m[1, 2], math.atan2(m[1, 0], m[0, 0]))


def random_element(rng) -> GroupElement:
    x, y = rng.uniform(-5, 5, size=2)
    return GroupElement(float(x), float(y), wrap_angle(float(rng.uniform(-4, 4))))


def assert_pose_close(a: GroupElement, b: GroupElement, tol: float):
    assert abs(a.x - b.x) < tol
    assert abs(a.y - b.y) < tol
    assert abs(wrap_angle(a.theta - b.theta)) < tol


def pose_ode(xi_of_t):
    def rhs(t, state):
        vx, vy, w = xi_of_t(t)
        c, s = math.cos(state[2]), math.sin(state[2])
        return [c * vx - s * vy, s * vx + c * vy, w]

    return rhs


def wavy_twist(t):
    return (
        1.0 + 0.3 * math.sin(2 * math.pi * t),
        0.2 * math.cos(2 * math.pi * t),
        0.8 * math.sin(2 * math.pi * t + 0.4),
    )


@pytest.mark.unit
class TestWrapAngle:
    """Test angle normalization."""

    @pytest.mark.parametrize(
        "theta, expected",
        [(0.0, 0.0), (math.pi, math.pi), (-math.pi, math.pi), (3 * math.pi, math.pi), (2.5 * math.pi, 0.5 * math.pi)],
    )
    def test_known_values(self, theta, expected):
        """Test that angles land in (-π, π]."""
        assert wrap_angle(theta) == pytest.approx(expected, abs=1e-12)

    def test_range_for_random_angles(self, rng):
        """Test the canonical range over many random angles."""
        for theta in rng.uniform(-100, 100, size=1000):
            wrapped = wrap_angle(float(theta))
            assert -math.pi < wrapped <= math.pi
            assert math.isclose(math.cos(wrapped), math.cos(theta), abs_tol=1e-9)


@pytest.mark.unit
class TestCompose:
    """Test the group product."""

    def test_identity_on_the_left(self):
        """Test that the identity leaves an element unchanged."""
        g = compose(GroupElement(), GroupElement(1.0, 2.0, 0.3))
        assert_pose_close(g, GroupElement(1.0, 2.0, 0.3), 1e-15)

    def test_quarter_turn_then_step(self):
        """Test that a quarter turn maps a unit +x step to +y."""
        g = compose(GroupElement(1.0, 0.0, math.pi / 2), GroupElement(1.0, 0.0, 0.0))
        assert_pose_close(g, GroupElement(1.0, 1.0, math.pi / 2), 1e-12)

    def test_matches_homogeneous_matrix_product(self):
        """Test a generic product against 3x3 matrix multiplication."""
        g, h = GroupElement(0.5, 0.2, 0.1), GroupElement(0.3, -0.1, 0.2)
        expected = from_homogeneous(homogeneous(g) @ homogeneous(h))
        assert_pose_close(compose(g, h), expected, 1e-12)
        assert_pose_close(g @ h, expected, 1e-12)

    def test_associativity(self, rng):
        """Test (ab)c = a(bc) for random elements."""
        for _ in range(1000):
            a, b, c = (random_element(rng) for _ in range(3))
            assert_pose_close(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-10)

    def test_inverse_gives_identity(self, rng):
        """Test g·g⁻¹ = e for random elements."""
        for _ in range(1000):
            g = random_element(rng)
            assert_pose_close(compose(g, inverse(g)), GroupElement(), 1e-12)
            assert_pose_close(compose(inverse(g), g), GroupElement(), 1e-12)

    def test_theta_is_normalized(self):
        """Test that the heading stays in (-π, π] after composition."""
        g = compose(GroupElement(0, 0, 3.0), GroupElement(0, 0, 3.0))
        assert -math.pi < g.theta <= math.pi
        assert g.theta == pytest.approx(6.0 - 2 * math.pi)

    def test_between_recovers_relative_motion(self, rng):
        """Test that g·between(g, h) = h."""
        for _ in range(1000):
            g, h = random_element(rng), random_element(rng)
            assert_pose_close(compose(g, between(g, h)), h, 1e-12)


@pytest.mark.unit
class TestExp:
    """Test the constant-twist exponential."""

    def test_zero_twist(self):
        """Test that a zero twist stays at the identity."""
        assert_pose_close(exp(BodyVelocity(), 1.0), GroupElement(), 0.0 + 1e-15)

    def test_pure_rotation(self):
        """Test a pure half-turn."""
        assert_pose_close(exp((0.0, 0.0, math.pi), 1.0), GroupElement(0, 0, math.pi), 1e-12)

    def test_arc(self):
        """Test a quarter-circle arc against the closed form."""
        g = exp(BodyVelocity(1.0, 0.0, math.pi / 2), 1.0)
        assert_pose_close(g, GroupElement(2 / math.pi, 2 / math.pi, math.pi / 2), 1e-12)

    def test_arc_matches_fine_integration(self):
        """Test the arc formula against an adaptive ODE solution."""
        twist = (0.7, -0.2, 1.3)
        sol = solve_ivp(pose_ode(lambda t: twist), (0, 1.5), [0, 0, 0], method="DOP853", rtol=1e-12, atol=1e-12)
        expected = GroupElement.from_array(sol.y[:, -1])
        assert_pose_close(exp(twist, 1.5), expected, 1e-9)

    def test_one_parameter_subgroup(self, rng):
        """Test exp(ξ, a)·exp(ξ, b) = exp(ξ, a + b)."""
        for _ in range(1000):
            xi = rng.normal(size=3)
            a, b = rng.uniform(0, 2, size=2)
            assert_pose_close(compose(exp(xi, a), exp(xi, b)), exp(xi, a + b), 1e-10)

    def test_small_angle_branch_is_continuous(self):
        """Test that the series branch agrees with the arc formula near the threshold."""
        below = exp((1.0, 0.5, 0.9e-8), 1.0)
        above = exp((1.0, 0.5, 1.1e-8), 1.0)
        assert_pose_close(below, above, 1e-8)

    def test_negative_duration_rejected(self):
        """Test that dt < 0 raises."""
        with pytest.raises(ValueError):
            exp((1.0, 0.0, 0.0), -0.1)

    def test_log_inverts_exp(self, rng):
        """Test exp(log(g), 1) = g."""
        for _ in range(1000):
            g = random_element(rng)
            assert_pose_close(exp(log(g), 1.0), g, 1e-10)


@pytest.mark.unit
class TestBodyVelocity:
    """Test the body-velocity value type."""

    def test_rejects_non_finite(self):
        """Test that NaN components are refused."""
        with pytest.raises(ValueError):
            BodyVelocity(float("nan"), 0.0, 0.0)

    def test_array_round_trip(self):
        """Test conversion to and from arrays."""
        xi = BodyVelocity(1.0, -2.0, 0.5)
        assert BodyVelocity.from_array(xi.as_array()) == xi


@pytest.mark.unit
class TestIntegrateTrajectory:
    """Test accumulation of per-step exponentials."""

    def test_empty_series_returns_start(self):
        """Test that no steps leaves the pose unchanged."""
        g0 = GroupElement(1.0, 2.0, 0.5)
        assert integrate_trajectory(g0, [], 0.01) == g0

    def test_constant_twist_matches_exp(self):
        """Test that N constant steps equal one long exponential."""
        xi = (0.4, 0.1, 0.9)
        series = np.tile(xi, (500, 1))
        assert_pose_close(integrate_trajectory(GroupElement(), series, 0.002), exp(xi, 1.0), 1e-10)

    def test_starts_from_g0(self):
        """Test left composition onto the initial pose."""
        g0 = GroupElement(1.0, -1.0, 0.7)
        xi = (0.4, 0.1, 0.9)
        result = integrate_trajectory(g0, [xi], 0.5)
        assert_pose_close(result, compose(g0, exp(xi, 0.5)), 1e-12)

    def test_poses_end_at_integrated_pose(self, rng):
        """Test that trajectory_poses ends where integrate_trajectory does."""
        series = rng.normal(size=(50, 3))
        poses = trajectory_poses(GroupElement(), series, 0.01)
        assert poses.shape == (51, 3)
        assert_pose_close(GroupElement.from_array(poses[-1]), integrate_trajectory(GroupElement(), series, 0.01), 1e-12)

    def test_midpoint_sampling_matches_ode_oracle(self):
        """Test a sinusoidal twist against an adaptive ODE solution."""
        dt = 1e-3
        mids = (np.arange(1000) + 0.5) * dt
        series = np.array([wavy_twist(t) for t in mids])
        sol = solve_ivp(pose_ode(wavy_twist), (0, 1), [0, 0, 0], method="DOP853", rtol=1e-12, atol=1e-12)
        expected = GroupElement.from_array(sol.y[:, -1])
        assert_pose_close(integrate_trajectory(GroupElement(), series, dt), expected, 1e-5)

    def test_first_order_convergence(self):
        """Test that halving dt shrinks the left-sampled error."""
        sol = solve_ivp(pose_ode(wavy_twist), (0, 0.7), [0, 0, 0], method="DOP853", rtol=1e-12, atol=1e-12)
        truth = sol.y[:, -1]
        errors = []
        for n in (200, 400):
            dt = 0.7 / n
            series = np.array([wavy_twist(k * dt) for k in range(n)])
            final = integrate_trajectory(GroupElement(), series, dt).as_array()
            errors.append(np.linalg.norm(final - truth))
        assert errors[1] < 0.6 * errors[0]

    def test_non_positive_dt_rejected(self):
        """Test that dt <= 0 raises."""
        with pytest.raises(ValueError):
            integrate_trajectory(GroupElement(), [(1, 0, 0)], 0.0)


@pytest.mark.unit
class TestCommutatorFreeStep:
    """Test the fourth-order Lie-group step."""

    def test_equal_nodes_reduce_to_exp(self):
        """Test that a constant twist gives exp(ξ, dt)."""
        xi = (0.3, -0.4, 1.1)
        assert_pose_close(cf4_step(GroupElement(), xi, xi, 0.1), exp(xi, 0.1), 1e-13)

    def test_matches_ode_oracle(self):
        """Test the Gauss-node step on a time-varying twist."""
        n = 100
        dt = 1.0 / n
        nodes = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
        g = GroupElement()
        for k in range(n):
            g = cf4_step(g, wavy_twist((k + nodes[0]) * dt), wavy_twist((k + nodes[1]) * dt), dt)
        sol = solve_ivp(pose_ode(wavy_twist), (0, 1), [0, 0, 0], method="DOP853", rtol=1e-12, atol=1e-12)
        assert_pose_close(g, GroupElement.from_array(sol.y[:, -1]), 1e-8)


@pytest.mark.unit
class TestTransformPoint:
    """Test body-to-world point mapping."""

    def test_quarter_turn(self):
        """Test a rotated and translated point."""
        point = transform_point(GroupElement(1.0, 2.0, math.pi / 2), (1.0, 0.0))
        np.testing.assert_allclose(point, [1.0, 3.0], atol=1e-12)

"""
Tests for the Purcell swimmer physics.
"""

import numpy as np
import pytest
from pydantic import ValidationError

import gaittracks.swimmer as swimmer
from gaittracks.errors import DimensionMismatchError, NumericalSingularityError
from gaittracks.gait import Gait, seed_gait
from gaittracks.swimmer import (
    SwimmerParams,
    body_velocity,
    body_velocity_array,
    centroid,
    centroid_displacements,
    cycle_displacements,
    link_frames,
    local_connection,
    simulate_cycle,
    steps_per_cycle,
)

QUADRATURE_POINTS = 4000


def link_endpoints(r, n_links, length):
    """Chain links outward from the middle one, which lies on the x axis."""
    mid = n_links // 2
    angles = np.zeros(n_links)
    for i in range(mid + 1, n_links):
        angles[i] = angles[i - 1] + r[i - 1]
    for i in range(mid - 1, -1, -1):
        angles[i] = angles[i + 1] - r[i]
    tangents = np.column_stack((np.cos(angles), np.sin(angles)))
    starts = np.zeros((n_links, 2))
    starts[mid] = (-0.5 * length, 0.0)
    for i in range(mid + 1, n_links):
        starts[i] = starts[i - 1] + length * tangents[i - 1]
    for i in range(mid - 1, -1, -1):
        starts[i] = starts[i + 1] - length * tangents[i]
    return starts, tangents


def sample_points(r, n_links, length):
    starts, tangents = link_endpoints(r, n_links, length)
    u = (np.arange(QUADRATURE_POINTS) + 0.5) / QUADRATURE_POINTS * length
    points = starts[:, None, :] + u[None, :, None] * tangents[:, None, :]
    return points, tangents


def wrench(points, tangents, velocities, params):
    """Net drag force and torque by midpoint quadrature along every link."""
    ds = params.link_length / QUADRATURE_POINTS
    normals = np.column_stack((-tangents[:, 1], tangents[:, 0]))
    along = np.einsum("nqi,ni->nq", velocities, tangents)
    across = np.einsum("nqi,ni->nq", velocities, normals)
    force = -params.c_tangential * ds * (
        along[..., None] * tangents[:, None, :] + params.drag_ratio * across[..., None] * normals[:, None, :]
    )
    total = force.sum(axis=(0, 1))
    torque = np.sum(points[..., 0] * force[..., 1] - points[..., 1] * force[..., 0])
    return np.array([total[0], total[1], torque])


def quadrature_body_velocity(r, r_dot, params, eps=1e-6):
    """Zero-wrench body velocity assembled from sampled drag, independent of the package."""
    r, r_dot = np.asarray(r, float), np.asarray(r_dot, float)
    points, tangents = sample_points(r, params.n_links, params.link_length)
    plus, _ = sample_points(r + eps * r_dot, params.n_links, params.link_length)
    minus, _ = sample_points(r - eps * r_dot, params.n_links, params.link_length)
    shape_velocity = (plus - minus) / (2 * eps)

    columns = []
    for unit in np.eye(3):
        rigid = np.empty_like(points)
        rigid[..., 0] = unit[0] - unit[2] * points[..., 1]
        rigid[..., 1] = unit[1] + unit[2] * points[..., 0]
        columns.append(wrench(points, tangents, rigid, params))
    omega_xi = np.column_stack(columns)
    rhs = wrench(points, tangents, shape_velocity, params)
    return -np.linalg.solve(omega_xi, rhs)


def random_gait(rng, n_joints, order=2, scale=0.3):
    coefficients = rng.uniform(-scale, scale, size=(n_joints, 2 * order + 1))
    return Gait(coefficients, 1.0)


@pytest.mark.unit
class TestSwimmerParams:
    """Test parameter validation."""

    def test_defaults(self):
        """Test the classic defaults."""
        params = SwimmerParams()
        assert (params.n_links, params.link_length, params.c_tangential, params.drag_ratio) == (3, 1.0, 1.0, 2.0)
        assert params.shape_dim == 2

    @pytest.mark.parametrize("n_links", [1, 2, 4, 6])
    def test_rejects_bad_link_counts(self, n_links):
        """Test that fewer than three or an even number of links is refused."""
        with pytest.raises(ValidationError):
            SwimmerParams(n_links=n_links)

    @pytest.mark.parametrize(
        "field, value", [("link_length", 0.0), ("c_tangential", -1.0), ("drag_ratio", 0.5)]
    )
    def test_rejects_out_of_range_values(self, field, value):
        """Test positivity and k >= 1."""
        with pytest.raises(ValidationError):
            SwimmerParams(**{field: value})

    def test_rejects_unknown_fields(self):
        """Test that unknown keys are refused."""
        with pytest.raises(ValidationError):
            SwimmerParams(links=3)


@pytest.mark.unit
class TestLinkFrames:
    """Test body-frame link geometry."""

    def test_straight_body(self):
        """Test that zero joint angles give collinear links."""
        frames = link_frames(np.zeros(4), SwimmerParams(n_links=5))
        np.testing.assert_allclose(frames.centers[:, 0], [-2, -1, 0, 1, 2], atol=1e-12)
        np.testing.assert_allclose(frames.centers[:, 1], 0.0, atol=1e-12)
        np.testing.assert_allclose(frames.angles, 0.0)

    def test_centers_match_independent_chain(self, rng):
        """Test link centers against an independent forward-kinematics chain."""
        for n_links in (3, 5, 9):
            params = SwimmerParams(n_links=n_links, link_length=0.7)
            r = rng.uniform(-1, 1, size=n_links - 1)
            starts, tangents = link_endpoints(r, n_links, 0.7)
            frames = link_frames(r, params)
            np.testing.assert_allclose(frames.centers, starts + 0.35 * tangents, atol=1e-12)
            np.testing.assert_allclose(frames.tangents, tangents, atol=1e-12)

    def test_center_jacobian_matches_finite_differences(self, rng):
        """Test the analytic center jacobian."""
        params = SwimmerParams(n_links=5)
        r = rng.uniform(-1, 1, size=4)
        frames = link_frames(r, params)
        eps = 1e-6
        for j in range(4):
            step = np.zeros(4)
            step[j] = eps
            numeric = (link_frames(r + step, params).centers - link_frames(r - step, params).centers) / (2 * eps)
            np.testing.assert_allclose(frames.center_jacobian[:, :, j], numeric, atol=1e-8)

    def test_centroid_of_straight_body_is_origin(self, params3):
        """Test the centroid of a straight swimmer."""
        np.testing.assert_allclose(centroid(np.zeros(2), params3), [0.0, 0.0], atol=1e-12)

    def test_wrong_dimension(self, params3):
        """Test that a mismatched shape vector raises."""
        with pytest.raises(DimensionMismatchError):
            link_frames(np.zeros(3), params3)


@pytest.mark.unit
class TestLocalConnection:
    """Test the resistive-force-theory connection."""

    def test_quadrature_oracle_three_links(self):
        """Test the classic configuration r = (0.5, -0.5), k = 2."""
        params = SwimmerParams(n_links=3, drag_ratio=2.0)
        r = np.array([0.5, -0.5])
        connection = local_connection(r, params)
        for j in range(2):
            r_dot = np.eye(2)[j]
            expected = quadrature_body_velocity(r, r_dot, params)
            np.testing.assert_allclose(-connection[:, j], expected, rtol=1e-6, atol=1e-9)

    def test_body_velocity_matches_quadrature(self):
        """Test ξ for r = (0.5, -0.5), ṙ = (1, 0), k = 2."""
        params = SwimmerParams(n_links=3, drag_ratio=2.0)
        xi = body_velocity_array([0.5, -0.5], [1.0, 0.0], params)
        expected = quadrature_body_velocity([0.5, -0.5], [1.0, 0.0], params)
        np.testing.assert_allclose(xi, expected, rtol=1e-6, atol=1e-9)

    def test_quadrature_oracle_random_shapes(self, rng):
        """Test random shapes, drag ratios and link counts."""
        for n_links in (3, 5, 9):
            for _ in range(100):
                params = SwimmerParams(
                    n_links=n_links,
                    drag_ratio=float(rng.uniform(1.0, 5.0)),
                    link_length=float(rng.uniform(0.5, 2.0)),
                )
                r = rng.uniform(-1.2, 1.2, size=n_links - 1)
                r_dot = rng.normal(size=n_links - 1)
                xi = body_velocity_array(r, r_dot, params)
                expected = quadrature_body_velocity(r, r_dot, params)
                assert np.linalg.norm(xi - expected) <= 1e-6 * np.linalg.norm(expected) + 1e-12

    def test_scale_invariance_in_drag_coefficient(self, rng):
        """Test that c_t cancels from the force balance."""
        r = rng.uniform(-1, 1, size=4)
        base = local_connection(r, SwimmerParams(n_links=5))
        for scale in (0.01, 3.0, 250.0):
            scaled = local_connection(r, SwimmerParams(n_links=5, c_tangential=scale))
            np.testing.assert_allclose(scaled, base, rtol=1e-12, atol=1e-14)

    def test_singularity_guard(self, params3, monkeypatch):
        """Test that conditioning above the limit raises a distinct error."""
        monkeypatch.setattr(swimmer, "CONDITION_LIMIT", 1.0)
        with pytest.raises(NumericalSingularityError):
            local_connection(np.array([0.3, 0.1]), params3)


@pytest.mark.unit
class TestBodyVelocity:
    """Test ξ = -A(r)·ṙ."""

    def test_no_shape_motion(self, params3):
        """Test that ṙ = 0 gives ξ = 0."""
        xi = body_velocity(np.array([0.4, -0.2]), np.zeros(2), params3)
        assert xi.as_array() == pytest.approx([0.0, 0.0, 0.0], abs=1e-15)

    def test_linearity(self, rng, params5):
        """Test linearity in the shape velocity."""
        r = rng.uniform(-1, 1, size=4)
        u, v = rng.normal(size=4), rng.normal(size=4)
        a, b = 1.7, -0.4
        combined = body_velocity_array(r, a * u + b * v, params5)
        separate = a * body_velocity_array(r, u, params5) + b * body_velocity_array(r, v, params5)
        np.testing.assert_allclose(combined, separate, atol=1e-10)

    def test_wrong_velocity_dimension(self, params3):
        """Test that a mismatched shape velocity raises."""
        with pytest.raises(DimensionMismatchError):
            body_velocity(np.zeros(2), np.zeros(4), params3)


@pytest.mark.unit
class TestStepsPerCycle:
    """Test the step-count helper."""

    def test_divisible(self):
        """Test the default 200 steps per unit period."""
        assert steps_per_cycle(1.0, 1.0 / 200) == 200

    def test_not_divisible(self):
        """Test that a step not dividing the period raises."""
        with pytest.raises(ValueError):
            steps_per_cycle(1.0, 0.3)


@pytest.mark.integration
class TestSimulateCycle:
    """Test trajectory rollout."""

    def test_record_shapes(self, gait3, params3):
        """Test the per-step arrays of a two-cycle rollout."""
        segment = simulate_cycle(gait3, params3, 1.0 / 200, cycles=2)
        assert segment.t.shape == (400,)
        assert segment.r.shape == segment.r_dot.shape == (400, 2)
        assert segment.xi.shape == (400, 3)
        assert segment.poses.shape == (401, 3)
        assert segment.n_cycles == 2
        assert np.all((segment.phi >= 0) & (segment.phi < 2 * np.pi))

    def test_zero_amplitude_gait_does_not_move(self, params3):
        """Test that a static gait leaves the pose at the origin."""
        gait = Gait(np.zeros((2, 3)), 1.0)
        segment = simulate_cycle(gait, params3, 1.0 / 200)
        np.testing.assert_allclose(segment.poses, 0.0, atol=1e-15)

    def test_seed_gait_moves_forward(self, gait3, params3):
        """Test strictly positive forward displacement per cycle at k = 2."""
        segment = simulate_cycle(gait3, params3, 1.0 / 200, cycles=3)
        displacements = cycle_displacements(segment)
        assert np.all(displacements[:, 0] > 0)

    def test_larger_drag_ratio_moves_farther(self, gait3):
        """Test that k = 4 beats k = 2 per cycle."""
        moves = [
            cycle_displacements(simulate_cycle(gait3, SwimmerParams(n_links=3, drag_ratio=k), 1.0 / 200))[0, 0]
            for k in (2.0, 4.0)
        ]
        assert moves[1] > moves[0] > 0

    @pytest.mark.parametrize("n_links", [3, 5])
    def test_isotropic_drag_has_no_net_centroid_motion(self, rng, n_links):
        """Test that k = 1 cannot displace the centroid over a closed loop."""
        params = SwimmerParams(n_links=n_links, drag_ratio=1.0)
        for _ in range(20):
            gait = random_gait(rng, n_links - 1)
            segment = simulate_cycle(gait, params, 1.0 / 200)
            assert np.linalg.norm(centroid_displacements(segment)[0]) < 1e-6

    def test_rate_independence(self, params3):
        """Test that a slower traversal of the same loop gives the same displacement."""
        coefficients = seed_gait(3).coefficients
        fast = simulate_cycle(Gait(coefficients, 1.0), params3, 1.0 / 200)
        slow = simulate_cycle(Gait(coefficients, 2.0), params3, 2.0 / 200)
        np.testing.assert_allclose(cycle_displacements(slow), cycle_displacements(fast), atol=1e-8)

    def test_mismatched_gait(self, params5, gait3):
        """Test that a gait for another swimmer is refused."""
        with pytest.raises(DimensionMismatchError):
            simulate_cycle(gait3, params5, 1.0 / 200)

    def test_continuation_matches_single_rollout(self, gait3, params3):
        """Test that chaining one-cycle rollouts reproduces a multi-cycle rollout."""
        whole = simulate_cycle(gait3, params3, 1.0 / 200, cycles=2)
        first = simulate_cycle(gait3, params3, 1.0 / 200)
        second = simulate_cycle(gait3, params3, 1.0 / 200, g0=first.final_pose, t0=1.0)
        np.testing.assert_allclose(second.poses[-1], whole.poses[-1], atol=1e-12)
        np.testing.assert_allclose(second.t, whole.t[200:], atol=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcar.core import (AckermannDrive, Pose2D, RandomStream, VehicleParams,
                          normalize_angle, pose_compose, pose_inverse)

from oracles import matrix_pose, pose_matrix

finite_angles = st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False, allow_infinity=False)


class TestNormalizeAngle:
    def test_identity(self):
        assert normalize_angle(0.0) == 0.0

    def test_three_pi(self):
        assert normalize_angle(3 * math.pi) == pytest.approx(math.pi)

    def test_negative_pi_maps_to_positive(self):
        assert normalize_angle(-math.pi) == pytest.approx(math.pi)

    def test_result_in_half_open_interval(self):
        for a in np.linspace(-50, 50, 1001):
            r = normalize_angle(a)
            assert -math.pi < r <= math.pi
            # congruent mod 2pi
            assert math.isclose(math.fmod(r - a, 2 * math.pi), 0.0,
                                abs_tol=1e-9) or \
                math.isclose(abs(math.fmod(r - a, 2 * math.pi)), 2 * math.pi,
                             rel_tol=1e-9)

    @given(finite_angles)
    def test_idempotent(self, a):
        r = normalize_angle(a)
        assert normalize_angle(r) == r

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            normalize_angle(bad)


class TestPoseCompose:
    def test_identity_element(self):
        p = Pose2D(1.2, -3.4, 0.7)
        q = pose_compose(Pose2D(), p)
        assert (q.x, q.y, q.theta) == pytest.approx((p.x, p.y, p.theta))

    def test_quarter_turn_sends_x_to_y(self):
        q = pose_compose(Pose2D(1, 0, math.pi / 2), Pose2D(1, 0, 0))
        assert (q.x, q.y, q.theta) == pytest.approx((1, 1, math.pi / 2))

    def test_inverse_is_identity(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            p = Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi))
            q = pose_compose(p, pose_inverse(p))
            assert abs(q.x) < 1e-12 and abs(q.y) < 1e-12
            assert abs(normalize_angle(q.theta)) < 1e-12

    def test_matches_matrix_composition(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a = Pose2D(*rng.uniform(-5, 5, 2), rng.uniform(-3, 3))
            b = Pose2D(*rng.uniform(-5, 5, 2), rng.uniform(-3, 3))
            got = pose_compose(a, b)
            want = matrix_pose(pose_matrix(a) @ pose_matrix(b))
            assert (got.x, got.y) == pytest.approx((want.x, want.y), abs=1e-12)
            assert normalize_angle(got.theta - want.theta) == pytest.approx(0, abs=1e-12)

    def test_associative(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b, c = (Pose2D(*rng.uniform(-5, 5, 2), rng.uniform(-3, 3))
                       for _ in range(3))
            lhs = pose_compose(pose_compose(a, b), c)
            rhs = pose_compose(a, pose_compose(b, c))
            assert (lhs.x, lhs.y) == pytest.approx((rhs.x, rhs.y), abs=1e-12)
            assert normalize_angle(lhs.theta - rhs.theta) == pytest.approx(0, abs=1e-12)

    def test_theta_always_normalized(self):
        p = Pose2D(0, 0, 7.0)
        assert -math.pi < p.theta <= math.pi

    def test_non_finite_position_rejected(self):
        with pytest.raises(ValueError):
            Pose2D(math.nan, 0, 0)


class TestAckermannDrive:
    def test_clamped(self):
        params = VehicleParams()
        c = AckermannDrive(5.0, -1.0).clamped(params)
        assert c.speed == params.speed_limit
        assert c.steering_angle == -params.steering_limit


class TestVehicleParams:
    @pytest.mark.parametrize("field", ["wheelbase", "footprint_length",
                                       "footprint_width", "steering_limit",
                                       "speed_limit"])
    def test_positive_required(self, field):
        with pytest.raises(ValueError):
            VehicleParams(**{field: 0.0})


class TestRandomStream:
    def test_equal_seeds_equal_draws(self):
        a = RandomStream(123456789)
        b = RandomStream(123456789)
        assert np.array_equal(a.uniform(size=1_000_000),
                              b.uniform(size=1_000_000))

    def test_different_seeds_differ(self):
        assert not np.array_equal(RandomStream(1).uniform(size=100),
                                  RandomStream(2).uniform(size=100))

    def test_child_streams_deterministic_and_independent(self):
        a = RandomStream(9).child("motion")
        b = RandomStream(9).child("motion")
        c = RandomStream(9).child("scan")
        assert np.array_equal(a.normal(size=1000), b.normal(size=1000))
        assert c.seed != a.seed

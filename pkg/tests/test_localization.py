import math

import numpy as np
import pytest

from gridcar.core import AckermannDrive, Pose2D, RandomStream, VehicleParams
from gridcar.localization import (DistanceField, InitializationError,
                                  ParticleSet, SensorModelParams,
                                  build_distance_field, estimate, initialize,
                                  motion_update, resample, sensor_update,
                                  should_resample)
from gridcar.mapio import FREE, OCCUPIED, grid_from_array
from gridcar.sim import NoiseParams, ScanParams, simulate_scan, step_kinematics

from conftest import add_block, box_room, room_grid
from oracles import brute_force_distance_field

PARAMS = VehicleParams()


def make_set(poses, weights):
    poses = np.asarray(poses, float)
    return ParticleSet(poses[:, 0].copy(), poses[:, 1].copy(),
                       poses[:, 2].copy(), np.asarray(weights, float))


class TestInitialize:
    def test_single_particle_zero_variance(self, small_room):
        ps = initialize(small_room, 1, RandomStream(0),
                        around=Pose2D(3, 2, 0.5), sigma_xy=0, sigma_theta=0)
        assert ps.n == 1
        assert (ps.x[0], ps.y[0], ps.theta[0]) == (3.0, 2.0, 0.5)
        assert ps.weights[0] == 1.0

    def test_global_particles_on_free_cells(self, small_room):
        ps = initialize(small_room, 1000, RandomStream(1))
        for x, y in zip(ps.x, ps.y):
            cell = small_room.world_to_grid(x, y)
            assert cell is not None
            assert small_room.cells[cell[1], cell[0]] == FREE
        assert ps.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_global_deterministic(self, small_room):
        a = initialize(small_room, 1000, RandomStream(5))
        b = initialize(small_room, 1000, RandomStream(5))
        assert np.array_equal(a.x, b.x) and np.array_equal(a.theta, b.theta)

    def test_around_resamples_off_map_draws(self, small_room):
        # pose near a corner: many Gaussian draws land in walls, all
        # survivors must be on free cells
        ps = initialize(small_room, 500, RandomStream(2),
                        around=Pose2D(0.3, 0.3, 0.0), sigma_xy=0.5,
                        sigma_theta=0.2)
        for x, y in zip(ps.x, ps.y):
            cell = small_room.world_to_grid(x, y)
            assert cell is not None and small_room.cells[cell[1], cell[0]] == FREE

    def test_no_free_cells_errors(self):
        g = grid_from_array(np.full((5, 5), OCCUPIED, np.uint8), 0.1)
        with pytest.raises(InitializationError):
            initialize(g, 10, RandomStream(0))


class TestMotionUpdate:
    def test_zero_noise_is_pure_kinematics(self):
        ps = make_set([[1, 2, 0.3]] * 5, [0.2] * 5)
        cmd = AckermannDrive(1.0, 0.2)
        out = motion_update(ps, cmd, 0.1, PARAMS, NoiseParams(0, 0),
                            RandomStream(0))
        want = step_kinematics(Pose2D(1, 2, 0.3), cmd, 0.1, PARAMS)
        assert out.x == pytest.approx(want.x)
        assert out.y == pytest.approx(want.y)
        assert out.theta == pytest.approx(want.theta)
        assert np.array_equal(out.weights, ps.weights)

    def test_zero_speed_annihilates_steering_noise(self):
        ps = make_set([[1, 2, 0.3]] * 100, [0.01] * 100)
        out = motion_update(ps, AckermannDrive(0.0, 0.0), 0.1, PARAMS,
                            NoiseParams(0.0, 0.5), RandomStream(3))
        assert np.array_equal(out.x, ps.x) and np.array_equal(out.y, ps.y)

    def test_speed_noise_monte_carlo_expectation(self):
        n = 10_000
        ps = make_set([[0, 0, 0]] * n, [1 / n] * n)
        out = motion_update(ps, AckermannDrive(1.0, 0.0), 1.0, PARAMS,
                            NoiseParams(0.1, 0.0), RandomStream(11))
        dist = np.hypot(out.x - 0, out.y - 0)
        assert abs(dist.mean() - 1.0) < 0.01


class TestDistanceField:
    def test_all_occupied_all_zero(self):
        g = grid_from_array(np.full((8, 8), OCCUPIED, np.uint8), 0.5)
        df = build_distance_field(g)
        assert (df.meters == 0).all()

    def test_three_four_five(self):
        cells = np.full((10, 10), FREE, np.uint8)
        cells[0, 0] = OCCUPIED
        g = grid_from_array(cells, 1.0)
        df = build_distance_field(g)
        assert df.meters[4, 3] == pytest.approx(5.0)

    def test_matches_brute_force_on_random_grids(self):
        rng = np.random.default_rng(8)
        for _ in range(3):
            cells = np.where(rng.random((30, 30)) < 0.08, OCCUPIED,
                             FREE).astype(np.uint8)
            g = grid_from_array(cells, 0.2)
            got = build_distance_field(g).meters
            want = brute_force_distance_field(g)
            assert np.allclose(got, want, atol=1e-9)


def asymmetric_room():
    """6x4 m room with a block in one corner so scans disambiguate pose."""
    cells = box_room(6.0, 4.0, 0.05)
    add_block(cells, 0.05, 4.5, 2.8, 5.5, 3.6)
    return grid_from_array(cells, 0.05)


class TestSensorUpdate:
    SP = ScanParams(beam_count=60, angle_min=-math.pi,
                    angle_max=math.pi - 2 * math.pi / 60, range_max=10.0)

    def test_single_particle_renormalizes_to_one(self):
        g = asymmetric_room()
        scan = simulate_scan(g, Pose2D(3, 2, 0.0), self.SP)
        ps = make_set([[1.0, 1.0, 2.0]], [1.0])
        out = sensor_update(ps, scan, g, SensorModelParams(beam_stride=1),
                            build_distance_field(g))
        assert out.weights[0] == pytest.approx(1.0)

    def test_true_pose_beats_off_pose(self):
        g = asymmetric_room()
        truth = Pose2D(2.0, 1.5, 0.3)
        scan = simulate_scan(g, truth, self.SP)
        ps = make_set([[2.0, 1.5, 0.3], [4.0, 1.5, 0.3]], [0.5, 0.5])
        out = sensor_update(ps, scan, g, SensorModelParams(beam_stride=1),
                            build_distance_field(g))
        assert out.weights[0] > out.weights[1]

    def test_matches_direct_formula_evaluation(self):
        # independent evaluation of the likelihood-field scoring formula
        g = asymmetric_room()
        truth = Pose2D(2.0, 1.5, 0.3)
        smp = SensorModelParams(beam_stride=5)
        scan = simulate_scan(g, truth, self.SP)
        df = build_distance_field(g)
        poses = [(2.0, 1.5, 0.3), (4.0, 1.5, 0.3), (2.5, 2.5, -1.0)]
        ps = make_set(poses, [1 / 3] * 3)
        out = sensor_update(ps, scan, g, smp, df)

        logliks = []
        for (x, y, th) in poses:
            ll = 0.0
            bearings = self.SP.bearings()[::smp.beam_stride]
            ranges = scan.ranges[::smp.beam_stride]
            for b, r in zip(bearings, ranges):
                if r >= self.SP.range_max - 1e-9:
                    continue
                ex = x + r * math.cos(th + b)
                ey = y + r * math.sin(th + b)
                cell = g.world_to_grid(ex, ey)
                d = df.meters[cell[1], cell[0]] if cell else math.inf
                lik = (smp.z_hit * math.exp(-d * d / (2 * smp.sigma_hit ** 2))
                       + smp.z_rand / self.SP.range_max)
                ll += math.log(lik)
            logliks.append(ll)
        w = np.exp(np.array(logliks) - max(logliks))
        want = w / w.sum()
        assert out.weights == pytest.approx(want, abs=1e-9)

    def test_zero_z_hit_gives_uniform_weights(self):
        g = asymmetric_room()
        scan = simulate_scan(g, Pose2D(3, 2, 0), self.SP)
        ps = make_set([[1, 1, 0], [2, 2, 1], [3, 3, 2], [4, 2, 3]],
                      [0.25] * 4)
        out = sensor_update(ps, scan, g,
                            SensorModelParams(z_hit=0.0, z_rand=1.0),
                            build_distance_field(g))
        assert out.weights == pytest.approx([0.25] * 4)

    def test_weights_sum_to_one_and_nonnegative(self):
        g = asymmetric_room()
        rng = RandomStream(4)
        ps = initialize(g, 200, rng)
        scan = simulate_scan(g, Pose2D(3, 2, 0), self.SP)
        out = sensor_update(ps, scan, g, SensorModelParams(),
                            build_distance_field(g))
        assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)
        assert (out.weights >= 0).all()

    def test_total_underflow_resets_uniform_with_flag(self):
        # z_rand = 0 removes the likelihood floor; particles far outside the
        # map score exp(-inf) on every beam
        g = asymmetric_room()
        scan = simulate_scan(g, Pose2D(3, 2, 0), self.SP)
        ps = make_set([[50, 50, 0], [60, 60, 0]], [0.5, 0.5])
        out = sensor_update(ps, scan, g,
                            SensorModelParams(z_hit=1.0, z_rand=0.0),
                            build_distance_field(g))
        assert out.degenerate
        assert out.weights == pytest.approx([0.5, 0.5])

    def test_likelihood_monotone_in_distance(self):
        smp = SensorModelParams()
        floor = smp.z_rand / 10.0
        liks = [smp.z_hit * math.exp(-d * d / (2 * smp.sigma_hit ** 2)) + floor
                for d in np.linspace(0, 2, 50)]
        assert all(a >= b for a, b in zip(liks, liks[1:]))


class TestResample:
    def test_uniform_weights_identity_multiset(self):
        ps = make_set([[i, 0, 0] for i in range(8)], [1 / 8] * 8)
        out = resample(ps, RandomStream(0))
        assert sorted(out.x) == sorted(ps.x)
        assert (out.weights == 1 / 8).all()

    def test_degenerate_mass(self):
        ps = make_set([[i, 0, 0] for i in range(4)], [1, 0, 0, 0])
        out = resample(ps, RandomStream(1))
        assert (out.x == 0).all()

    def test_bracket_property(self):
        weights = np.array([0.5, 0.3, 0.2])
        ps = make_set([[0, 0, 0], [1, 0, 0], [2, 0, 0]], weights)
        for seed in range(200):
            out = resample(ps, RandomStream(seed))
            counts = np.bincount(out.x.astype(int), minlength=3)
            for i, w in enumerate(weights):
                assert math.floor(3 * w) <= counts[i] <= math.ceil(3 * w)

    def test_copy_count_statistics(self):
        weights = np.array([0.5, 0.3, 0.2])
        ps = make_set([[0, 0, 0], [1, 0, 0], [2, 0, 0]], weights)
        rng = RandomStream(42)
        totals = np.zeros(3)
        trials = 20_000
        for _ in range(trials):
            out = resample(ps, rng)
            totals += np.bincount(out.x.astype(int), minlength=3)
        assert totals / trials == pytest.approx([1.5, 0.9, 0.6], abs=0.02)

    def test_preserves_n_and_uniform_weights(self):
        rng = np.random.default_rng(2)
        w = rng.random(50)
        w /= w.sum()
        ps = make_set(rng.random((50, 3)), w)
        out = resample(ps, RandomStream(9))
        assert out.n == 50
        assert (out.weights == 1 / 50).all()


class TestShouldResample:
    def test_uniform_never(self):
        ps = make_set([[0, 0, 0]] * 10, [0.1] * 10)
        assert not should_resample(ps)

    def test_point_mass_always(self):
        ps = make_set([[0, 0, 0]] * 10, [1.0] + [0.0] * 9)
        assert should_resample(ps)

    def test_boundary_is_strict(self):
        ps = make_set([[0, 0, 0]] * 4, [0.5, 0.5, 0.0, 0.0])
        assert not should_resample(ps, 0.5)  # ESS = 2 = 0.5 * 4 exactly


class TestEstimate:
    def test_single_particle(self):
        ps = make_set([[1.5, -2.0, 0.7]], [1.0])
        est = estimate(ps)
        assert (est.x, est.y, est.theta) == pytest.approx((1.5, -2.0, 0.7))

    def test_circular_mean_across_pi(self):
        ps = make_set([[0, 0, 3 * math.pi / 4], [0, 0, -3 * math.pi / 4]],
                      [0.5, 0.5])
        assert abs(estimate(ps).theta) == pytest.approx(math.pi)

    def test_matches_stated_formulas(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = 20
            w = rng.random(n)
            w /= w.sum()
            poses = np.column_stack([rng.uniform(-5, 5, n),
                                     rng.uniform(-5, 5, n),
                                     rng.uniform(-math.pi, math.pi, n)])
            est = estimate(make_set(poses, w))
            assert est.x == pytest.approx(float(w @ poses[:, 0]), abs=1e-12)
            assert est.y == pytest.approx(float(w @ poses[:, 1]), abs=1e-12)
            want_th = math.atan2(float(w @ np.sin(poses[:, 2])),
                                 float(w @ np.cos(poses[:, 2])))
            assert est.theta == pytest.approx(want_th, abs=1e-12)


class TestPipelineDeterminism:
    def test_fixed_seed_fixed_estimates(self):
        g = asymmetric_room()

        def run():
            root = RandomStream(31)
            ps = initialize(g, 300, root.child("init"),
                            around=Pose2D(2, 2, 0), sigma_xy=0.3,
                            sigma_theta=0.1)
            df = build_distance_field(g)
            pose = Pose2D(2, 2, 0)
            ests = []
            for _ in range(10):
                pose = step_kinematics(pose, AckermannDrive(0.5, 0.1), 0.1,
                                       PARAMS)
                ps = motion_update(ps, AckermannDrive(0.5, 0.1), 0.1, PARAMS,
                                   NoiseParams(0.05, 0.02),
                                   root.child("motion"))
                scan = simulate_scan(g, pose, self.SP)
                ps = sensor_update(ps, scan, g, SensorModelParams(), df)
                if should_resample(ps):
                    ps = resample(ps, root.child("resample"))
                e = estimate(ps)
                ests.append((e.x, e.y, e.theta))
            return ests

        self.SP = ScanParams(beam_count=60, range_max=10.0)
        assert run() == run()

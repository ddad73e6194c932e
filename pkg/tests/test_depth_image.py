import numpy as np
import pytest

from dronepose.depth_image import ProjectionParams, project, to_ascii_pgm, unproject


@pytest.fixture
def params():
    return ProjectionParams(resolution=128, half_fov=np.deg2rad(60.0))


class TestParams:
    def test_focal(self):
        p = ProjectionParams(resolution=512, half_fov=np.deg2rad(60.0))
        assert p.focal == pytest.approx(256.0 / np.tan(np.deg2rad(60.0)), abs=1e-9)

    def test_rejects_odd_or_small_resolution(self):
        with pytest.raises(ValueError):
            ProjectionParams(resolution=63)
        with pytest.raises(ValueError):
            ProjectionParams(resolution=32)

    def test_rejects_bad_fov(self):
        with pytest.raises(ValueError):
            ProjectionParams(half_fov=np.pi / 2)

    def test_default_basis_is_world_axes(self):
        p = ProjectionParams()
        assert np.allclose(p.u_axis, [1, 0, 0])
        assert np.allclose(p.v_axis, [0, 1, 0])
        assert np.allclose(p.w_axis, [0, 0, 1])


class TestProject:
    def test_on_axis_point_hits_center_pixel(self, params):
        n = params.resolution
        img = project([(0.0, 0.0, 10.0)], params)
        assert img.data[n // 2, n // 2] == 10.0
        assert np.count_nonzero(img.data) == 1

    def test_min_depth_wins_per_pixel(self, params):
        n = params.resolution
        img = project([(0.0, 0.0, 12.0), (0.0, 0.0, 10.0)], params)
        assert img.data[n // 2, n // 2] == 10.0

    def test_point_outside_fov_dropped(self, params):
        off = np.tan(np.deg2rad(61.0)) * 10.0
        img = project([(off, 0.0, 10.0)], params)
        assert np.count_nonzero(img.data) == 0

    def test_point_behind_plane_dropped(self, params):
        img = project([(0.0, 0.0, -5.0)], params)
        assert np.count_nonzero(img.data) == 0

    def test_monotone_occlusion(self, params, rng):
        pts = [(0.1, -0.2, 10.0)]
        base = project(pts, params)
        farther = project(pts + [(0.1, -0.2, 20.0)], params)
        nearer = project(pts + [(0.1, -0.2, 5.0)], params)
        assert np.array_equal(base.data, farther.data)
        assert not np.array_equal(base.data, nearer.data)

    def test_sparsity(self, params, rng):
        pts = rng.uniform(-3, 3, size=(200, 3)) + [0, 0, 10]
        img = project(pts, params)
        assert np.count_nonzero(img.data) <= len(pts)


class TestUnproject:
    def test_center_pixel_depth(self, params):
        n = params.resolution
        p = unproject((n // 2, n // 2), 10.0, params)
        assert p @ params.w_axis == pytest.approx(10.0, abs=1e-12)
        # pixel center sits half a pixel off the principal point
        assert abs(p[0]) <= 10.0 / params.focal
        assert abs(p[1]) <= 10.0 / params.focal

    def test_rejects_bad_input(self, params):
        with pytest.raises(ValueError):
            unproject((0, 0), 0.0, params)
        with pytest.raises(ValueError):
            unproject((-1, 0), 1.0, params)

    def test_round_trip_identity(self, params, rng):
        n = params.resolution
        for _ in range(1000):
            u = int(rng.integers(0, n))
            v = int(rng.integers(0, n))
            d = float(rng.uniform(0.5, 80.0))
            pt = unproject((u, v), d, params)
            img = project([pt], params)
            assert img.data[v, u] == pytest.approx(d, abs=1e-9)
            assert np.count_nonzero(img.data) == 1

    def test_corner_ray_angle(self, params):
        n = params.resolution
        pt = unproject((n - 1, n - 1), 5.0, params)
        expected = np.arctan(np.sqrt(2.0) * np.tan(params.half_fov) * (1.0 - 1.0 / n))
        got = np.arccos(pt @ params.w_axis / np.linalg.norm(pt))
        assert got == pytest.approx(expected, abs=1e-12)


class TestTiltedView:
    def test_round_trip_with_tilted_axis(self, rng):
        p = ProjectionParams(resolution=128, half_fov=np.deg2rad(50.0),
                             view_direction=(0.3, -0.1, 1.0))
        for _ in range(100):
            u = int(rng.integers(0, 128))
            v = int(rng.integers(0, 128))
            d = float(rng.uniform(1.0, 50.0))
            pt = unproject((u, v), d, p)
            img = project([pt], p)
            assert img.data[v, u] == pytest.approx(d, abs=1e-9)


class TestAsciiDump:
    def test_structure_and_values(self):
        p = ProjectionParams(resolution=64, half_fov=np.deg2rad(45.0))
        img = project([(0.0, 0.0, 2.5), (1.0, 1.0, 5.0)], p)
        text = to_ascii_pgm(img)
        lines = text.splitlines()
        assert lines[0] == "P2"
        assert lines[1] == "64 64"
        assert lines[2] == "5000"
        grid = np.array([[int(c) for c in row.split()] for row in lines[3:]])
        assert grid.shape == (64, 64)
        assert grid[32, 32] == 2500
        assert grid.sum() == 2500 + 5000

    def test_golden_file(self, tmp_path):
        p = ProjectionParams(resolution=64, half_fov=np.deg2rad(45.0))
        rng = np.random.default_rng(7)
        pts = np.column_stack([rng.uniform(-4, 4, 20), rng.uniform(-4, 4, 20),
                               rng.uniform(2, 30, 20)])
        text = to_ascii_pgm(project(pts, p))
        import pathlib

        golden = pathlib.Path(__file__).parent / "data" / "depth_64.pgm"
        assert text == golden.read_text()

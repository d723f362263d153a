import numpy as np
import pytest

from mirage import scenes
from mirage.lidar import LidarConfig, PointCloud, scan
from mirage.occupancy import (
    FREE,
    OCCUPIED,
    UNKNOWN,
    GridConfig,
    build_grid,
    occupied_area,
    read_grid,
    write_grid,
)

FOOTPRINT = dict(x_min=-0.3, x_max=0.3, y_min=3.8, y_max=4.2)


def cloud_of(xyz):
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    n = xyz.shape[0]
    return PointCloud(xyz=xyz, intensity=np.full(n, 0.5),
                      tag=np.zeros(n, dtype=np.uint8),
                      source=np.full(n, -1, dtype=np.int32))


class TestGridConfig:
    def test_shape_exact_division(self):
        cfg = GridConfig(cell_size=0.2, extent_x=20.0, extent_y=10.0)
        assert cfg.shape == (50, 100)

    def test_non_divisible_extent_rejected(self):
        with pytest.raises(ValueError):
            GridConfig(cell_size=0.3, extent_x=20.0)

    def test_positive_thresholds(self):
        with pytest.raises(ValueError):
            GridConfig(occupied_count=0)
        with pytest.raises(ValueError):
            GridConfig(cell_size=-0.1)


class TestBuildGrid:
    def test_flat_ground_all_observed_free(self, kernel_impl):
        from mirage.geometry import Ground, Scene

        scene = Scene()
        scene.add(Ground())
        cfg = scenes.ora_lidar_config()
        cloud = scan(scene, cfg, impl=kernel_impl)
        grid = build_grid([cloud], GridConfig(sensor_height=0.8))
        observed = grid.cells != UNKNOWN
        assert observed.any()
        assert np.all(grid.cells[observed] == FREE)
        assert occupied_area(grid) == 0.0

    def test_single_occupied_cell_area(self):
        pts = cloud_of([[0.05, 0.05, 0.0]] * 3)  # z=0 sensor frame -> 2.2 m high
        grid = build_grid([pts], GridConfig())
        assert occupied_area(grid) == pytest.approx(0.04)

    def test_occupied_requires_count_threshold(self):
        pts = cloud_of([[0.05, 0.05, 0.0]] * 2)
        grid = build_grid([pts], GridConfig(occupied_count=3))
        assert occupied_area(grid) == 0.0

    def test_integration_window_limits_frames(self):
        one = cloud_of([[0.05, 0.05, 0.0]])
        cfg = GridConfig(occupied_count=3, integration_frames=2)
        # three frames of single evidence, but only the last two integrate
        grid = build_grid([one, one, one], cfg)
        assert grid.state_at(0.05, 0.05) != OCCUPIED
        grid = build_grid([one, one, one], GridConfig(occupied_count=3,
                                                      integration_frames=5))
        assert grid.state_at(0.05, 0.05) == OCCUPIED

    def test_evidence_monotonicity(self, rng):
        # adding points never flips an occupied cell back to free
        base = cloud_of(rng.uniform([-5, -5, -1], [5, 5, 1], size=(400, 3)))
        extra = cloud_of(rng.uniform([-5, -5, -1], [5, 5, 1], size=(200, 3)))
        g1 = build_grid([base], GridConfig())
        both = cloud_of(np.vstack([base.xyz, extra.xyz]))
        g2 = build_grid([both], GridConfig())
        was_occupied = g1.cells == OCCUPIED
        assert np.all(g2.cells[was_occupied] == OCCUPIED)

    def test_determinism(self, rng):
        pts = cloud_of(rng.uniform(-5, 5, size=(500, 3)))
        a = build_grid([pts, pts], GridConfig())
        b = build_grid([pts, pts], GridConfig())
        assert np.array_equal(a.cells, b.cells)

    def test_empty_frame_list_rejected(self):
        with pytest.raises(ValueError):
            build_grid([], GridConfig())


class TestAttackSignatures:
    def test_baseline_cone_occupied(self, kernel_impl):
        cfg = scenes.ora_lidar_config()
        cloud = scan(scenes.ora_scene(with_panel=False), cfg, impl=kernel_impl)
        grid = build_grid([cloud] * 5, GridConfig(sensor_height=0.8))
        assert grid.occupied_in_box(**FOOTPRINT) >= 1

    @pytest.mark.parametrize("tilt", [0.0, 15.0, 30.0, 45.0])
    def test_removal_scene_erases_cone(self, tilt, kernel_impl):
        cfg = scenes.ora_lidar_config()
        cloud = scan(scenes.ora_scene(tilt), cfg, impl=kernel_impl)
        grid = build_grid([cloud] * 5, GridConfig(sensor_height=0.8))
        assert grid.occupied_in_box(**FOOTPRINT) == 0

    def test_removal_scene_marks_footprint_free(self, kernel_impl):
        # deflected-to-ground returns fold into false free-space evidence
        cfg = scenes.ora_lidar_config()
        cloud = scan(scenes.ora_scene(30.0), cfg, impl=kernel_impl)
        grid = build_grid([cloud] * 5, GridConfig(sensor_height=0.8))
        assert grid.state_at(0.0, 4.0) == FREE

    def test_addition_scene_area_strictly_increases(self, kernel_impl):
        cfg = LidarConfig()
        grid_cfg = GridConfig()
        baseline = scan(scenes.oaa_scene(0.18, 30.0, with_panel=False), cfg,
                        impl=kernel_impl)
        area0 = occupied_area(build_grid([baseline] * 5, grid_cfg))
        areas = []
        for area in (0.18, 0.36, 0.60):
            cloud = scan(scenes.oaa_scene(area, 30.0), cfg, impl=kernel_impl)
            areas.append(occupied_area(build_grid([cloud] * 5, grid_cfg)))
        assert area0 < areas[0] < areas[1] < areas[2]


class TestGridFile:
    def test_round_trip_bit_identical(self, tmp_path, rng):
        pts = cloud_of(rng.uniform(-5, 5, size=(300, 3)))
        grid = build_grid([pts], GridConfig())
        p1 = tmp_path / "a.txt"
        p2 = tmp_path / "b.txt"
        write_grid(p1, grid)
        loaded = read_grid(p1)
        assert np.array_equal(loaded.cells, grid.cells)
        write_grid(p2, loaded)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_row_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("width 3\nheight 1\nresolution 0.2\norigin 0 0\nFX U\n")
        with pytest.raises(Exception):
            read_grid(path)

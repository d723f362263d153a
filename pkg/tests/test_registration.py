import math

import numpy as np
import pytest

from mirage.registration import best_fit_transform, icp_align


def rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def sample_cloud(rng, n=400):
    # a structured, non-degenerate cloud: two walls plus scattered volume
    wall = np.column_stack([rng.uniform(-2, 2, n // 2),
                            np.full(n // 2, 3.0) + rng.normal(0, 0.01, n // 2),
                            rng.uniform(0, 2, n // 2)])
    blob = rng.uniform([-3, 0, 0], [3, 6, 2.5], size=(n - n // 2, 3))
    return np.vstack([wall, blob])


class TestBestFitTransform:
    def test_recovers_known_transform(self, rng):
        src = sample_cloud(rng)
        rot = rot_z(0.3)
        t = np.array([0.5, -0.2, 0.1])
        tgt = src @ rot.T + t
        r_est, t_est = best_fit_transform(src, tgt)
        assert np.allclose(r_est, rot, atol=1e-12)
        assert np.allclose(t_est, t, atol=1e-12)


class TestIcp:
    def test_identity_alignment(self, rng):
        cloud = sample_cloud(rng)
        res = icp_align(cloud, cloud)
        assert res.residual == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(res.rotation, np.eye(3), atol=1e-9)
        assert np.allclose(res.translation, 0.0, atol=1e-9)

    def test_recovers_small_transform(self, rng):
        src = sample_cloud(rng)
        rot = rot_z(math.radians(2.0))
        tgt = src @ rot.T + np.array([0.05, 0.03, 0.0])
        res = icp_align(src, tgt)
        angle = math.atan2(res.rotation[1, 0], res.rotation[0, 0])
        assert abs(angle - math.radians(2.0)) <= 1e-3
        assert np.abs(res.translation - [0.05, 0.03, 0.0]).max() <= 1e-3

    def test_outliers_tolerated_by_trimming(self, rng):
        src = sample_cloud(rng, n=600)
        rot = rot_z(math.radians(1.0))
        t = np.array([0.04, -0.02, 0.01])
        tgt = src @ rot.T + t
        n_out = len(src) // 20  # 5 % junk points far off
        junk = rng.uniform(8, 12, size=(n_out, 3))
        src_noisy = np.vstack([src, junk])
        res = icp_align(src_noisy, tgt, trim_fraction=0.10)
        aligned = res.transform(src)
        assert np.abs(aligned - tgt).max() <= 1e-2
        assert res.residual < 0.5

    def test_residual_non_increasing(self, rng):
        src = sample_cloud(rng)
        tgt = src @ rot_z(math.radians(4.0)).T + np.array([0.2, 0.1, 0.0])
        res = icp_align(src, tgt)
        hist = np.array(res.residual_history)
        assert np.all(np.diff(hist) <= 1e-12)

    def test_requires_three_points(self):
        with pytest.raises(ValueError):
            icp_align(np.zeros((2, 3)), np.zeros((5, 3)))
        with pytest.raises(ValueError):
            icp_align(np.zeros((5, 3)), np.zeros((1, 3)))

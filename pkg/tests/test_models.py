import math

import numpy as np
import pytest

from mirage import fileio
from mirage.models import (
    ArtifactClampWarning,
    ArtifactModelParams,
    MirrorState,
    TiltDomainError,
    appearance_probability,
    lateral_offset,
    point_count,
    point_count_value,
    predict_features,
    radial_distance,
    window_bounds,
)

P = ArtifactModelParams()


def st(d, theta, area=0.18):
    return MirrorState(d=d, theta_deg=theta, area=area)


class TestLateralOffset:
    def test_zero_tilt_collapses_to_bias(self):
        assert lateral_offset(st(3.0, 0.0)) == pytest.approx(-0.05, abs=1e-12)
        assert lateral_offset(st(11.0, 0.0)) == pytest.approx(-0.05, abs=1e-12)

    def test_worked_value_5m_30deg(self):
        assert lateral_offset(st(5.0, 30.0)) == pytest.approx(8.437, abs=1e-3)

    def test_linear_in_distance(self):
        x1 = lateral_offset(st(2.0, 20.0)) - P.deltaX
        x2 = lateral_offset(st(4.0, 20.0)) - P.deltaX
        assert x2 == pytest.approx(2.0 * x1, abs=1e-9)

    def test_collinearity_of_three_points(self):
        d = np.array([1.0, 3.0, 7.0])
        x = np.array([lateral_offset(st(v, 25.0)) for v in d]) - P.deltaX
        slope_a = (x[1] - x[0]) / (d[1] - d[0])
        slope_b = (x[2] - x[1]) / (d[2] - d[1])
        assert slope_a == pytest.approx(slope_b, abs=1e-9)

    def test_domain_error_at_singularity(self):
        with pytest.raises(TiltDomainError) as err:
            lateral_offset(st(3.0, 44.9))
        assert "44.9" in str(err.value)
        with pytest.raises(TiltDomainError):
            lateral_offset(st(3.0, 60.0))

    def test_area_has_no_effect(self):
        assert lateral_offset(st(4.0, 30.0, 0.18)) == lateral_offset(st(4.0, 30.0, 0.60))


class TestRadialDistance:
    def test_unit_distance_anchor(self):
        assert radial_distance(st(1.0, 0.0)) == pytest.approx(1.02, abs=1e-12)

    def test_worked_value_4m_30deg(self):
        assert radial_distance(st(4.0, 30.0)) == pytest.approx(3.801, abs=1e-3)

    def test_sub_linearity(self):
        r1 = radial_distance(st(1.0, 0.0))
        r4 = radial_distance(st(4.0, 0.0))
        assert r4 / r1 == pytest.approx(4.0**0.88, rel=1e-9)
        assert r4 / r1 < 4.0

    def test_area_has_no_effect(self):
        assert radial_distance(st(4.0, 30.0, 0.18)) == radial_distance(st(4.0, 30.0, 0.60))


class TestPointCount:
    def test_peak_anchor(self):
        assert point_count(MirrorState(3.0, 0.0, 1.0)) == 2500

    def test_worked_value(self):
        # 2500 * 0.18^1.25 * cos(30)^3.5 * exp(-0.36/4.5) = 163.55
        assert point_count(st(2.4, 30.0)) == 163

    def test_gaussian_symmetry_about_mu(self):
        for delta in (0.3, 1.0, 2.2):
            lo = point_count_value(st(3.0 - delta, 10.0))
            hi = point_count_value(st(3.0 + delta, 10.0))
            assert lo == pytest.approx(hi, rel=1e-12)

    def test_strictly_increasing_in_area(self, rng):
        for _ in range(200):
            d = rng.uniform(0.5, 6.0)
            theta = rng.uniform(0.0, 80.0)
            a1, a2 = sorted(rng.uniform(0.05, 1.0, size=2))
            if a1 == a2:
                continue
            assert point_count_value(st(d, theta, a1)) < point_count_value(st(d, theta, a2))

    def test_strictly_decreasing_in_tilt(self, rng):
        for _ in range(200):
            d = rng.uniform(0.5, 6.0)
            area = rng.uniform(0.05, 1.0)
            t1, t2 = sorted(rng.uniform(1.0, 89.0, size=2))
            if t1 == t2:
                continue
            assert point_count_value(st(d, t1, area)) > point_count_value(st(d, t2, area))


class TestAppearanceWindow:
    def test_boundary_worked_values(self):
        d_min, d_max = window_bounds(st(1.0, 30.0, 0.18))
        assert d_min == pytest.approx(1.255, abs=1e-3)
        assert d_max == pytest.approx(3.498, abs=1e-3)

    def test_probability_saturates_inside_window(self):
        assert appearance_probability(st(2.4, 30.0)) == pytest.approx(1.0, abs=1e-4)

    def test_probability_negligible_far_outside(self):
        assert appearance_probability(st(10.0, 30.0)) < 1e-10

    def test_rising_edge_midpoint(self):
        d_min, _ = window_bounds(st(1.0, 30.0, 0.18))
        p = appearance_probability(st(d_min, 30.0))
        falling = 1.0 / (1.0 + math.exp(P.k * (d_min - window_bounds(st(1.0, 30.0, 0.18))[1])))
        assert p == pytest.approx(0.5 * falling, rel=1e-9)

    def test_strictly_inside_unit_interval(self, rng):
        for _ in range(500):
            s = st(rng.uniform(0.05, 20.0), rng.uniform(0.0, 89.0),
                   rng.uniform(0.05, 1.0))
            p = appearance_probability(s)
            assert 0.0 < p < 1.0

    def test_unimodal_in_distance(self):
        # increasing then decreasing whenever d_min < d_max
        state0 = st(1.0, 30.0, 0.18)
        d_min, d_max = window_bounds(state0)
        assert d_min < d_max
        ds = np.linspace(0.2, 8.0, 400)
        ps = np.array([appearance_probability(st(d, 30.0)) for d in ds])
        peak = int(np.argmax(ps))
        assert np.all(np.diff(ps[: peak + 1]) > 0)
        assert np.all(np.diff(ps[peak:]) < 0)


class TestPredictFeatures:
    def test_axis_aligned_case(self):
        f = predict_features(st(2.0, 0.0))
        assert f.x_artifact == pytest.approx(P.deltaX)
        assert f.r_artifact == pytest.approx(1.02 * 2.0**0.88, rel=1e-9)
        assert f.r_artifact >= abs(f.x_artifact)

    def test_in_window_count(self):
        # the 30 deg location models conflict here, so the clamp fires too
        with pytest.warns(ArtifactClampWarning):
            f = predict_features(st(2.4, 30.0))
        assert f.p_app == pytest.approx(1.0, abs=1e-4)
        assert f.n_artifact == 163

    def test_far_state_suppressed(self):
        with pytest.warns(ArtifactClampWarning):
            f = predict_features(st(10.0, 30.0))
        assert f.p_app < 1e-10
        assert f.n_artifact < 1

    def test_clamp_emits_warning_and_bounds_offset(self):
        # inside the 30 deg window the offset model exceeds the radial model
        with pytest.warns(ArtifactClampWarning):
            f = predict_features(st(3.4, 30.0))
        assert abs(f.x_artifact) == pytest.approx(f.r_artifact)

    def test_domain_error_propagates(self):
        with pytest.raises(TiltDomainError):
            predict_features(st(3.0, 50.0))


class TestStateValidation:
    def test_invalid_states_rejected(self):
        with pytest.raises(ValueError):
            MirrorState(0.0, 30.0, 0.18)
        with pytest.raises(ValueError):
            MirrorState(3.0, 90.0, 0.18)
        with pytest.raises(ValueError):
            MirrorState(3.0, -1.0, 0.18)
        with pytest.raises(ValueError):
            MirrorState(3.0, 30.0, 0.0)

    def test_param_invariants(self):
        with pytest.raises(ValueError):
            ArtifactModelParams(sigma=0.0)
        with pytest.raises(ValueError):
            ArtifactModelParams(n_d=1.5)
        with pytest.raises(ValueError):
            ArtifactModelParams(c0=-5.0)


class TestParamsFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "params.txt"
        custom = P.replace(c0=1234.5, deltaX=-0.075)
        fileio.save_params(path, custom)
        loaded = fileio.load_params(path)
        assert loaded == custom

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "params.txt"
        fileio.save_params(path, P)
        path.write_text(path.read_text() + "bogus=1\n")
        with pytest.raises(fileio.FileFormatError) as err:
            fileio.load_params(path)
        assert "bogus" in str(err.value)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "params.txt"
        fileio.save_params(path, P)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[1:]) + "\n")
        with pytest.raises(fileio.FileFormatError) as err:
            fileio.load_params(path)
        assert "missing" in str(err.value)

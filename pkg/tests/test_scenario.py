import math

import numpy as np
import pytest

from mirage.scenario import (
    EVENT_ATTACK,
    EVENT_COLLISION,
    EVENT_EGO_BRAKE,
    EVENT_FOLLOWER_BRAKE,
    ScenarioConfig,
    collision_predicted,
    kmh,
    run,
    ttc,
    write_log_csv,
)


class TestTtc:
    def test_simple_closing(self):
        assert ttc(10.0, 0.0, 5.0) == pytest.approx(2.0)

    def test_not_closing_is_infinite(self):
        assert ttc(10.0, 6.0, 5.0) == math.inf
        assert ttc(10.0, 5.0, 5.0) == math.inf

    def test_contact_is_zero_when_closing(self):
        assert ttc(0.0, 0.0, 3.0) == 0.0


class TestNullScenario:
    def test_no_attack_no_events(self):
        cfg = ScenarioConfig(attack="none", duration=6.0)
        log = run(cfg)
        assert log.events == {}
        assert all(not r.events for r in log.rows)
        assert all(math.isinf(r.ttc) for r in log.rows)
        assert not log.collision

    def test_clean_ground_returns_never_brake(self):
        # perception runs on a full ray-traced ground scan every tick
        cfg = ScenarioConfig(attack="none", native="ground", duration=4.0)
        log = run(cfg)
        assert EVENT_EGO_BRAKE not in log.events
        v0 = kmh(25.0)
        assert all(r.v_ego == pytest.approx(v0) for r in log.rows)


@pytest.fixture(scope="module")
def default_attack_log():
    return run(ScenarioConfig())


class TestDefaultAttack:
    @pytest.fixture
    def log(self, default_attack_log):
        return default_attack_log

    def test_ordered_event_chain(self, log):
        for ev in (EVENT_ATTACK, EVENT_EGO_BRAKE, EVENT_FOLLOWER_BRAKE,
                   EVENT_COLLISION):
            assert ev in log.events
        assert (log.events[EVENT_ATTACK] <= log.events[EVENT_EGO_BRAKE]
                <= log.events[EVENT_FOLLOWER_BRAKE] < log.events[EVENT_COLLISION])

    def test_ego_stops_within_a_second(self, log):
        stop = log.ego_stop_duration()
        assert stop == pytest.approx(kmh(25.0) / 8.0, abs=1e-9)
        assert abs(stop - 0.87) <= ScenarioConfig().tick

    def test_ttc_crosses_critical_threshold(self, log):
        t_coll = log.events[EVENT_COLLISION]
        finite = [r.ttc for r in log.rows if r.t < t_coll and math.isfinite(r.ttc)]
        assert min(finite) < 3.0
        assert max(finite) > 3.0  # it crossed, not started, below
        last = [r for r in log.rows if r.t >= t_coll]
        assert any(r.ttc == 0.0 for r in last)

    def test_gap_reaches_zero(self, log):
        assert min(r.gap for r in log.rows) <= 0.0

    def test_collision_iff_gap_nonpositive(self, log):
        for row in log.rows:
            if row.gap <= 0:
                assert log.events[EVENT_COLLISION] <= row.t

    def test_speeds_never_negative(self, log):
        assert all(r.v_ego >= 0 and r.v_follower >= 0 for r in log.rows)

    def test_gap_continuous(self, log):
        gaps = np.array([ScenarioConfig().initial_gap]
                        + [r.gap for r in log.rows])
        v_max = kmh(25.0)
        assert np.abs(np.diff(gaps)).max() <= v_max * ScenarioConfig().tick + 1e-9

    def test_determinism(self, log):
        again = run(ScenarioConfig())
        assert [r.gap for r in again.rows] == [r.gap for r in log.rows]
        assert again.events == log.events


class TestOracleEquivalence:
    def test_hundred_point_sweep_exact_agreement(self):
        v0 = kmh(25.0)
        base = dict(attack="model", native="empty", duration=12.0)
        mismatches = []
        for a_f in np.linspace(3.0, 9.5, 10):
            for delay in np.linspace(0.2, 1.6, 10):
                cfg = ScenarioConfig(follower_decel=float(a_f),
                                     follower_delay=float(delay), **base)
                log = run(cfg)
                assert EVENT_EGO_BRAKE in log.events

                predicted = collision_predicted(v0, cfg.initial_gap,
                                                cfg.ego_decel, float(a_f),
                                                float(delay))
                if predicted != log.collision:
                    mismatches.append((a_f, delay))
        assert mismatches == []

    def test_generous_follower_avoids_collision(self):
        cfg = ScenarioConfig(follower_delay=0.0, follower_decel=8.0,
                             native="empty", duration=12.0)
        log = run(cfg)
        assert EVENT_EGO_BRAKE in log.events
        assert not log.collision
        assert min(r.gap for r in log.rows) > 0.0


class TestSteepTiltRuns:
    def test_model_mode_rejects_singular_tilt(self):
        with pytest.raises(ValueError):
            ScenarioConfig(attack="model", mirror_theta_deg=45.0)

    @pytest.mark.parametrize("theta,area", [(45.0, 0.36), (60.0, 0.60)])
    def test_raytraced_attack_collides(self, theta, area):
        cfg = ScenarioConfig(attack="raytrace", mirror_theta_deg=theta,
                             mirror_area=area, mirror_lateral=1.2,
                             duration=25.0)
        log = run(cfg)
        for ev in (EVENT_ATTACK, EVENT_EGO_BRAKE, EVENT_FOLLOWER_BRAKE,
                   EVENT_COLLISION):
            assert ev in log.events
        assert log.collision

    def test_model_mode_table_config_collides(self):
        # the 30 deg fitted-model phantom skirts the corridor edge; the
        # pinned seed reproduces the documented event chain deterministically
        cfg = ScenarioConfig(attack="model", mirror_theta_deg=30.0,
                             mirror_area=0.18, mirror_lateral=1.0, seed=3,
                             duration=25.0)
        log = run(cfg)
        assert log.collision


class TestLogCsv:
    def test_header_and_infinities(self, tmp_path):
        log = run(ScenarioConfig(attack="none", duration=1.0))
        path = tmp_path / "log.csv"
        write_log_csv(path, log)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,v_ego,v_follower,gap,ttc,n_injected,event"
        assert all(",inf," in line for line in lines[1:])

    def test_events_column(self, tmp_path):
        log = run(ScenarioConfig(duration=10.0))
        path = tmp_path / "log.csv"
        write_log_csv(path, log)
        text = path.read_text()
        assert "attack-trigger" in text
        assert "collision" in text


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        from mirage import fileio
        from mirage.scenario import load_scenario_config

        path = tmp_path / "scen.txt"
        fileio.write_kv(path, [("attack", "none"), ("duration", 3.0),
                               ("follower_decel", 7.5)])
        cfg = load_scenario_config(path)
        assert cfg.attack == "none"
        assert cfg.follower_decel == 7.5
        assert cfg.tick == 0.05  # defaults preserved

    def test_unknown_key_rejected(self, tmp_path):
        from mirage import fileio
        from mirage.fileio import FileFormatError
        from mirage.scenario import load_scenario_config

        path = tmp_path / "scen.txt"
        fileio.write_kv(path, [("warp_speed", 9)])
        with pytest.raises(FileFormatError):
            load_scenario_config(path)

"""Two-vehicle longitudinal scenario: a lead vehicle whose perception can be
fooled into emergency braking, and a follower with a reaction delay.

Dynamics are 1-D along the route.  Within each tick the kinematics are
integrated exactly (piecewise-constant acceleration, with analytic handling
of brake onsets, standstill, and gap zero-crossings), so the collision
outcome agrees with the closed-form stopping-distance predicate for every
constant-parameter configuration.

Attack modes:
    none      no artifacts; perception sees only native returns
    model     per-tick model-driven injection from the mirror state d(t)
    raytrace  full per-tick scan of a scene holding a physical panel plus a
              reflecting side wall (used for tilts beyond the lateral-offset
              model's domain)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields

import numpy as np

from mirage import fileio, segmentation
from mirage.geometry import Box, Ground, Scene
from mirage.injection import InjectionConfig, inject
from mirage.lidar import TAG_VIRTUAL, LidarConfig, PointCloud, scan
from mirage.models import (THETA_LIMIT_DEG, ArtifactClampWarning,
                           ArtifactModelParams, MirrorState)
from mirage.scenes import panel_dims, yawed_panel

EVENT_ATTACK = "attack-trigger"
EVENT_EGO_BRAKE = "ego-brake"
EVENT_FOLLOWER_BRAKE = "follower-brake"
EVENT_COLLISION = "collision"


def kmh(v):
    return v / 3.6


def ttc(gap, ego_speed, follower_speed):
    """Time to collision: gap over closing speed, infinite when not closing."""
    closing = follower_speed - ego_speed
    if closing <= 0:
        return math.inf
    return max(gap, 0.0) / closing


def collision_predicted(speed, gap, ego_decel, follower_decel, delay):
    """Closed-form rear-end predicate for simultaneous-speed initial
    conditions: follower stopping distance vs gap plus ego stopping
    distance."""
    follower_needs = speed * delay + speed * speed / (2.0 * follower_decel)
    available = gap + speed * speed / (2.0 * ego_decel)
    return follower_needs > available


@dataclass
class VehicleState:
    position: float
    speed: float
    accel_command: float = 0.0  # negative when braking


@dataclass
class ScenarioConfig:
    tick: float = 0.05
    ego_speed_kmh: float = 25.0
    follower_speed_kmh: float = 25.0
    initial_gap: float = 8.0
    ego_decel: float = 8.0
    follower_decel: float = 6.0
    follower_delay: float = 1.2
    follower_trigger_decel: float = 2.0
    min_cluster_points: int = 15
    corridor_half_width: float = 2.0
    lookahead: float = 15.0
    cluster_radius: float = 0.5
    ground_threshold: float = 0.15
    attack: str = "model"  # none | model | raytrace
    mirror_route_pos: float = 30.0
    mirror_lateral: float = 0.8
    mirror_theta_deg: float = 15.0
    mirror_area: float = 0.36
    mirror_height: float = 1.2
    wall_offset: float = 1.2
    native: str = "ground"  # ground | empty
    seed: int = 0
    duration: float = 20.0
    post_event_time: float = 2.0
    lidar_channels: int = 64
    lidar_azimuth_step_deg: float = 0.5
    lidar_mount_height: float = 2.2

    def __post_init__(self):
        if self.tick <= 0:
            raise ValueError("tick must be positive")
        if self.initial_gap <= 0:
            raise ValueError("initial gap must be positive")
        if self.ego_decel <= 0 or self.follower_decel <= 0:
            raise ValueError("deceleration magnitudes must be positive")
        if self.attack not in ("none", "model", "raytrace"):
            raise ValueError("attack must be one of none, model, raytrace")
        if self.native not in ("ground", "empty"):
            raise ValueError("native must be 'ground' or 'empty'")
        if self.attack == "model" and self.mirror_theta_deg >= THETA_LIMIT_DEG:
            raise ValueError(
                f"tilt angle {self.mirror_theta_deg:g} deg is at or beyond the "
                f"{THETA_LIMIT_DEG} deg lateral-offset singularity; use the "
                "ray-traced attack mode for steeper mirrors")

    def lidar_config(self):
        return LidarConfig(channels=self.lidar_channels,
                           azimuth_step_deg=self.lidar_azimuth_step_deg,
                           mount_height=self.lidar_mount_height)


@dataclass
class LogRow:
    t: float
    v_ego: float
    v_follower: float
    gap: float
    ttc: float
    n_injected: int
    events: tuple = ()


@dataclass
class ScenarioLog:
    rows: list = field(default_factory=list)
    events: dict = field(default_factory=dict)
    config: ScenarioConfig | None = None

    @property
    def collision(self):
        return EVENT_COLLISION in self.events

    def min_ttc(self, before=None):
        """Minimum finite TTC over rows (optionally only t < `before`)."""
        vals = [r.ttc for r in self.rows
                if math.isfinite(r.ttc) and (before is None or r.t < before)]
        return min(vals) if vals else math.inf

    def ego_stop_duration(self):
        """Exact braking time of the ego (speed at brake onset / decel)."""
        if EVENT_EGO_BRAKE not in self.events or self.config is None:
            return None
        return self._brake_speed / self.config.ego_decel

    _brake_speed: float = 0.0


class Perception:
    """Cluster-count-in-corridor obstacle stub (no learned detector).

    Returns whether any cluster of at least `min_cluster_points` above-ground
    returns lies inside the forward corridor.  Ground-truth tags are never
    consulted; ground returns are excluded purely by height.
    """

    def __init__(self, config):
        self.config = config

    def obstacle(self, cloud):
        cfg = self.config
        z_cut = cfg.ground_threshold - cfg.lidar_mount_height
        xyz = cloud.xyz
        mask = ((xyz[:, 2] > z_cut)
                & (np.abs(xyz[:, 0]) <= cfg.corridor_half_width)
                & (xyz[:, 1] > 0.0) & (xyz[:, 1] <= cfg.lookahead))
        pts = xyz[mask]
        if pts.shape[0] < cfg.min_cluster_points:
            return False
        clusters = segmentation.cluster(pts, radius=cfg.cluster_radius,
                                        min_points=cfg.min_cluster_points)
        return len(clusters) > 0


def _advance(pos, speed, decel, span):
    """Exact constant-deceleration advance over `span` seconds."""
    if decel <= 0.0 or speed <= 0.0:
        return pos + speed * span, speed
    t_stop = speed / decel
    if t_stop >= span:
        return pos + speed * span - 0.5 * decel * span * span, speed - decel * span
    return pos + 0.5 * speed * t_stop, 0.0


def _gap_crossing(g0, rel_v, rel_a, span):
    """Earliest tau in (0, span] with g0 + rel_v*tau + 0.5*rel_a*tau^2 <= 0."""
    if g0 <= 0.0:
        return 0.0
    a = 0.5 * rel_a
    if abs(a) < 1e-15:
        if rel_v >= 0.0:
            return None
        tau = -g0 / rel_v
        return tau if tau <= span else None
    disc = rel_v * rel_v - 4.0 * a * g0
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    roots = sorted(((-rel_v - sq) / (2.0 * a), (-rel_v + sq) / (2.0 * a)))
    for tau in roots:
        if 1e-15 < tau <= span:
            return tau
    return None


class ScenarioWorld:
    """Steppable two-vehicle world wired to perception and injection."""

    def __init__(self, config, params=None, injection_config=None, impl=None):
        self.config = config
        self.params = params or ArtifactModelParams()
        self.t = 0.0
        v0 = kmh(config.ego_speed_kmh)
        self.ego = VehicleState(position=config.initial_gap, speed=v0)
        self.follower = VehicleState(position=0.0,
                                     speed=kmh(config.follower_speed_kmh))
        self.ego_braking = False
        self.follower_braking = False
        self.follower_onset = None
        self.collision_time = None
        self.events = {}
        self.frame = 0
        self.clamp_warnings = 0
        self.perception = Perception(config)
        self.rng = np.random.default_rng(config.seed)
        self.impl = impl
        self._lidar = config.lidar_config()
        self.injection = injection_config or InjectionConfig(
            params=self.params, mount_height=config.lidar_mount_height,
            seed=config.seed)
        self._native = self._build_native()
        self._scene = self._build_scene() if config.attack == "raytrace" else None
        self._brake_speed = 0.0

    def _build_native(self):
        if self.config.native == "empty":
            return PointCloud()
        # Infinite flat ground is translation invariant along the route, so
        # one scan serves every tick.
        scene = Scene()
        scene.add(Ground(albedo=0.2))
        return scan(scene, self._lidar, impl=self.impl)

    def _build_scene(self):
        cfg = self.config
        scene = Scene()
        scene.add(Ground(albedo=0.2))
        w, h = panel_dims(cfg.mirror_area)
        scene.add(yawed_panel([cfg.mirror_lateral, cfg.mirror_route_pos,
                               cfg.mirror_height], cfg.mirror_theta_deg, w, h))
        wall_x = cfg.mirror_lateral + w / 2 + cfg.wall_offset
        scene.add(Box(center=[wall_x + 0.1, cfg.mirror_route_pos, 1.5],
                      size=[0.2, 16.0 + 2.0 * cfg.mirror_route_pos, 3.0],
                      albedo=0.4, label="wall"))
        return scene

    # -- per-tick sensing -------------------------------------------------

    def _sense(self):
        """Produce the tick's cloud; returns (cloud, n_injected, triggered)."""
        cfg = self.config
        if cfg.attack == "raytrace":
            cloud = scan(self._scene, self._lidar,
                         position=[0.0, self.ego.position, cfg.lidar_mount_height],
                         frame=self.frame, impl=self.impl)
            n_virtual = int(np.count_nonzero(cloud.tag == TAG_VIRTUAL))
            return cloud, n_virtual, n_virtual > 0
        if cfg.attack == "model":
            forward = cfg.mirror_route_pos - self.ego.position
            if forward > 0.0:
                d = math.hypot(forward, cfg.mirror_lateral)
                state = MirrorState(d=d, theta_deg=cfg.mirror_theta_deg,
                                    area=cfg.mirror_area)
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", ArtifactClampWarning)
                    cloud, report = inject(self._native, state, self.injection,
                                           self.rng)
                self.clamp_warnings += sum(
                    1 for w in caught if issubclass(w.category, ArtifactClampWarning))
                return cloud, report.n_injected, report.triggered
        return self._native, 0, False

    # -- stepping ----------------------------------------------------------

    def step(self):
        """Advance one tick; returns the LogRow describing it."""
        cfg = self.config
        events = []

        cloud, n_injected, triggered = self._sense()
        self.frame += 1
        if triggered and EVENT_ATTACK not in self.events:
            self.events[EVENT_ATTACK] = self.t
            events.append(EVENT_ATTACK)

        if not self.ego_braking and self.perception.obstacle(cloud):
            self.ego_braking = True
            self._brake_speed = self.ego.speed
            self.events[EVENT_EGO_BRAKE] = self.t
            events.append(EVENT_EGO_BRAKE)
            if cfg.ego_decel > cfg.follower_trigger_decel:
                self.follower_onset = self.t + cfg.follower_delay

        collision_tau = self._integrate(cfg.tick)
        if collision_tau is not None and self.collision_time is None:
            self.collision_time = self.t + collision_tau
            self.events[EVENT_COLLISION] = self.collision_time
            events.append(EVENT_COLLISION)
        if (self.follower_onset is not None and not self.follower_braking
                and self.t + cfg.tick >= self.follower_onset - 1e-12):
            self.follower_braking = True
            self.events[EVENT_FOLLOWER_BRAKE] = self.follower_onset
            events.append(EVENT_FOLLOWER_BRAKE)

        self.t += cfg.tick
        gap = self.ego.position - self.follower.position
        row = LogRow(
            t=self.t,
            v_ego=self.ego.speed,
            v_follower=self.follower.speed,
            gap=gap,
            ttc=0.0 if self.collision_time is not None and gap <= 0
            else ttc(gap, self.ego.speed, self.follower.speed),
            n_injected=n_injected,
            events=tuple(events),
        )
        self.ego.accel_command = -cfg.ego_decel if self.ego_braking and self.ego.speed > 0 else 0.0
        self.follower.accel_command = (-cfg.follower_decel
                                       if self.follower_braking and self.follower.speed > 0
                                       else 0.0)
        return row

    def _integrate(self, dt):
        """Exact tick integration; returns the in-tick collision offset."""
        cfg = self.config
        t_abs = self.t
        remaining = dt
        offset = 0.0
        collision = None
        while remaining > 1e-15:
            follower_active = (self.follower_onset is not None
                               and t_abs + offset >= self.follower_onset - 1e-12)
            a_e = cfg.ego_decel if self.ego_braking and self.ego.speed > 0 else 0.0
            a_f = (cfg.follower_decel
                   if follower_active and self.follower.speed > 0 else 0.0)
            span = remaining
            if (self.follower_onset is not None and not follower_active
                    and t_abs + offset + span > self.follower_onset):
                span = self.follower_onset - (t_abs + offset)
            if a_e > 0:
                span = min(span, self.ego.speed / a_e)
            if a_f > 0:
                span = min(span, self.follower.speed / a_f)
            span = max(span, 1e-12)

            if collision is None and self.collision_time is None:
                g0 = self.ego.position - self.follower.position
                rel_v = self.ego.speed - self.follower.speed
                rel_a = a_f - a_e
                tau = _gap_crossing(g0, rel_v, rel_a, span)
                if tau is not None:
                    collision = offset + tau

            self.ego.position, self.ego.speed = _advance(
                self.ego.position, self.ego.speed, a_e, span)
            self.follower.position, self.follower.speed = _advance(
                self.follower.position, self.follower.speed, a_f, span)
            offset += span
            remaining -= span
        return collision

    @property
    def both_stopped(self):
        return self.ego.speed <= 0.0 and self.follower.speed <= 0.0


def run(config, params=None, injection_config=None, impl=None):
    """Run a scenario to completion and return its log."""
    world = ScenarioWorld(config, params=params,
                          injection_config=injection_config, impl=impl)
    log = ScenarioLog(config=config)
    while world.t < config.duration - 1e-12:
        row = world.step()
        log.rows.append(row)
        if world.collision_time is not None and \
                world.t >= world.collision_time + config.post_event_time:
            break
        if world.both_stopped:
            break
    log.events = dict(world.events)
    log._brake_speed = world._brake_speed
    return log


# ---------------------------------------------------------------------------
# Serialization

LOG_HEADER = "t,v_ego,v_follower,gap,ttc,n_injected,event"


def write_log_csv(path, log):
    from mirage.fileio import g9

    with open(path, "w", newline="\n") as fh:
        fh.write(LOG_HEADER + "\n")
        for row in log.rows:
            ttc_txt = "inf" if math.isinf(row.ttc) else g9(row.ttc)
            fh.write(f"{g9(row.t)},{g9(row.v_ego)},{g9(row.v_follower)},"
                     f"{g9(row.gap)},{ttc_txt},{row.n_injected},"
                     f"{';'.join(row.events)}\n")


_SCHEMA = {}
for f in fields(ScenarioConfig):
    if f.name in ("min_cluster_points", "seed", "lidar_channels"):
        _SCHEMA[f.name] = int
    elif f.name in ("attack", "native"):
        _SCHEMA[f.name] = str
    else:
        _SCHEMA[f.name] = float


def load_scenario_config(path):
    values = fileio.coerce_kv(fileio.parse_kv(path), _SCHEMA, path=path)
    try:
        return ScenarioConfig(**values)
    except ValueError as exc:
        raise fileio.FileFormatError(str(exc), path=path) from None

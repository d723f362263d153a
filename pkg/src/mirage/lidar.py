"""Spinning-LiDAR scan synthesis over a Scene.

Beams are ideal rays on a regular (channel, azimuth) grid.  A beam either
returns from the nearest diffuse/ground surface, is lost when a mirror
deflects it out of the scene (data omission), or produces a fabricated
return when the deflected beam strikes a diffuse surface: the sensor then
reports a point along the original emission direction at the folded range
(data fabrication).

Received power follows a 1/R^4 law normalized so that a 1 m^2 unit-albedo
target at 10 m returns exactly 1.0; returns below the configured detection
threshold are dropped.  The normalization is a stand-in for the real
sensor's (unpublished) intensity scaling and is documented as non-physical.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from mirage import kernels

# Calibration constant of the power law: unit cross-section, unit albedo at
# 10 m gives power 1.0.
POWER_CALIBRATION = 1.0e4

TAG_DIRECT = 0
TAG_VIRTUAL = 1
TAG_GROUND = 2
TAG_NAMES = {TAG_DIRECT: "direct", TAG_VIRTUAL: "virtual", TAG_GROUND: "ground"}
TAG_CODES = {v: k for k, v in TAG_NAMES.items()}


def received_power(path_length, effective_cross_section=1.0, albedo=1.0):
    """Normalized received power for a one-way range, clamped to [0, 1]."""
    if path_length <= 0:
        raise ValueError("path_length must be positive")
    if effective_cross_section < 0 or albedo < 0:
        raise ValueError("cross-section and albedo must be non-negative")
    p = POWER_CALIBRATION * albedo * effective_cross_section / path_length**4
    return min(max(p, 0.0), 1.0)


@dataclass
class LidarConfig:
    channels: int = 128
    vfov_min_deg: float = -22.5
    vfov_max_deg: float = 22.5
    azimuth_step_deg: float = 360.0 / 1024.0  # 1024 columns per revolution
    max_range: float = 120.0
    scan_rate_hz: float = 10.0
    mount_height: float = 2.2
    detection_threshold: float = 2.0e-4

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if self.vfov_min_deg >= self.vfov_max_deg:
            raise ValueError("vertical FOV must have min < max")
        cols = 360.0 / self.azimuth_step_deg
        if abs(cols - round(cols)) > 1e-6:
            raise ValueError("azimuth step must divide 360 degrees")
        if self.max_range <= 0:
            raise ValueError("max range must be positive")
        if self.scan_rate_hz <= 0:
            raise ValueError("scan rate must be positive")
        if not 0.0 < self.detection_threshold < 1.0:
            raise ValueError("detection threshold must lie in (0, 1)")

    @property
    def azimuth_count(self):
        return int(round(360.0 / self.azimuth_step_deg))


LidarPoint = namedtuple("LidarPoint", "position intensity tag source")


@dataclass
class PointCloud:
    """One LiDAR frame in the sensor frame (x right, y forward, z up).

    Columns are stored as flat arrays; `source_labels` maps the integer
    `source` column to scene-object labels (ground-truth provenance, never
    consumed by perception code).
    """

    frame: int = 0
    t: float = 0.0
    xyz: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    intensity: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tag: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    source: np.ndarray = field(default_factory=lambda: np.full(0, -1, dtype=np.int32))
    source_labels: tuple = ()

    def __len__(self):
        return self.xyz.shape[0]

    def __getitem__(self, i):
        label = self.source_labels[self.source[i]] if self.source[i] >= 0 else ""
        return LidarPoint(self.xyz[i].copy(), float(self.intensity[i]),
                          TAG_NAMES[int(self.tag[i])], label)

    @property
    def points(self):
        return [self[i] for i in range(len(self))]

    def tagged(self, tag_name):
        return self.xyz[self.tag == TAG_CODES[tag_name]]

    def count_source(self, label, tag_name=None):
        """Number of points whose provenance is the scene object `label`."""
        if label not in self.source_labels:
            return 0
        mask = self.source == self.source_labels.index(label)
        if tag_name is not None:
            mask &= self.tag == TAG_CODES[tag_name]
        return int(np.count_nonzero(mask))

    def replace(self, **kw):
        args = dict(frame=self.frame, t=self.t, xyz=self.xyz, intensity=self.intensity,
                    tag=self.tag, source=self.source, source_labels=self.source_labels)
        args.update(kw)
        return PointCloud(**args)


def _beam_grid(config):
    """Unit beam directions in canonical order: channel-major, then azimuth.

    Azimuth 0 points along +y (forward) and increases toward +x (right).
    """
    elev = np.linspace(math.radians(config.vfov_min_deg),
                       math.radians(config.vfov_max_deg), config.channels)
    az = np.arange(config.azimuth_count) * math.radians(config.azimuth_step_deg)
    ce = np.cos(elev)[:, None]
    se = np.sin(elev)[:, None]
    sa = np.sin(az)[None, :]
    ca = np.cos(az)[None, :]
    dirs = np.empty((config.channels, az.size, 3))
    dirs[:, :, 0] = ce * sa
    dirs[:, :, 1] = ce * ca
    dirs[:, :, 2] = np.broadcast_to(se, (config.channels, az.size))
    return dirs.reshape(-1, 3)


_GRID_CACHE = {}


def beam_directions(config):
    key = (config.channels, config.vfov_min_deg, config.vfov_max_deg,
           config.azimuth_step_deg)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = _beam_grid(config)
    return _GRID_CACHE[key]


def scan(scene, config=None, *, position=None, yaw=0.0, frame=0, t=None, impl=None):
    """Synthesize one full revolution and return the PointCloud.

    `position` defaults to (0, 0, mount_height).  `yaw` rotates the sensor
    about +z (positive toward +x).  Output ordering is canonical
    (channel-major, then azimuth) regardless of how beams are evaluated, and
    point positions are expressed in the sensor frame.
    """
    config = config or LidarConfig()
    if position is None:
        position = np.array([0.0, 0.0, config.mount_height])
    else:
        position = np.asarray(position, dtype=float)
    dirs_sensor = beam_directions(config)
    if yaw:
        c, s = math.cos(yaw), math.sin(yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        dirs_world = dirs_sensor @ rot
    else:
        dirs_world = dirs_sensor

    sa = scene.arrays()
    status, rng, obj, panel, albedo = kernels.trace_beams(
        position, dirs_world, sa, config.max_range, impl=impl)

    hit = status > 0
    power = np.zeros(status.shape)
    r4 = np.where(hit, rng, 1.0) ** 4
    power[hit] = POWER_CALIBRATION * albedo[hit] / r4[hit]
    virt = status >= 3
    if virt.any():
        power[virt] *= sa.pan_refl[panel[virt]] ** 2
    np.clip(power, 0.0, 1.0, out=power)
    keep = hit & (power >= config.detection_threshold)

    tag = np.empty(status.shape, dtype=np.uint8)
    tag[status == 1] = TAG_GROUND
    tag[status == 2] = TAG_DIRECT
    tag[virt] = TAG_VIRTUAL

    labels = tuple(s.label for s in sa.solids) + ("ground",)
    ground_code = len(labels) - 1
    source = np.where(obj >= 0, obj, ground_code).astype(np.int32)

    if t is None:
        t = frame / config.scan_rate_hz
    return PointCloud(
        frame=frame,
        t=float(t),
        xyz=dirs_sensor[keep] * rng[keep, None],
        intensity=power[keep],
        tag=tag[keep],
        source=source[keep],
        source_labels=labels,
    )


def ora_sweep(tilt_angles_deg, *, scene_builder, config, label="cone", impl=None):
    """Count direct returns from the occluded object across panel tilts.

    `scene_builder(tilt_deg)` must produce a scene in which the panel fully
    covers the target object from the sensor's viewpoint; the count of
    direct returns sourced from `label` is reported per angle (all zero for
    full coverage).
    """
    counts = []
    for angle in tilt_angles_deg:
        cloud = scan(scene_builder(angle), config, impl=impl)
        counts.append(cloud.count_source(label, tag_name="direct"))
    return counts

"""Model-driven artifact injection: probabilistic trigger, cluster
synthesis, and point-cloud merge.

Each frame, a uniform draw against the appearance probability gates the
attack; when it fires, the point-count model sizes a Gaussian cluster
centered on the location models' centroid, and the cluster is appended to
the native scan (native points are never touched).  All stochasticity lives
in the trigger and the scatter; the point count is deterministic given the
state.  Results are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mirage.lidar import TAG_VIRTUAL, PointCloud
from mirage.models import (
    ArtifactModelParams,
    MirrorState,
    appearance_probability,
    point_count,
    predict_features,
)

INJECTED_LABEL = "injected"
# Injected points carry no modeled intensity; a fixed sentinel marks them.
INJECTED_INTENSITY = 0.5


@dataclass
class InjectionConfig:
    params: ArtifactModelParams = field(default_factory=ArtifactModelParams)
    # per-axis standard deviations of the cluster scatter [m]
    spread: tuple = (0.10, 0.10, 0.25)
    centroid_height: float = 1.0   # above ground [m]
    mount_height: float = 2.2      # sensor above ground [m]
    seed: int = 0

    def __post_init__(self):
        if len(self.spread) != 3 or any(s <= 0 for s in self.spread):
            raise ValueError("spread must be three positive per-axis sigmas")


@dataclass
class InjectionReport:
    frame: int
    triggered: bool
    r: float
    n_injected: int
    centroid: np.ndarray | None
    rng_name: str = ""


def extract_state(sensor_position, sensor_forward, panel):
    """Geometric state of a panel relative to the sensor.

    d is the Euclidean distance to the panel center; theta the angle between
    the panel normal and the reversed line of sight (0 deg = facing the
    sensor head-on); A the reflective area.
    """
    position = np.asarray(sensor_position, dtype=float)
    forward = np.asarray(sensor_forward, dtype=float)
    to_panel = panel.center - position
    d = float(np.linalg.norm(to_panel))
    if d <= 0:
        raise ValueError("panel center coincides with the sensor")
    if float(forward @ to_panel) <= 0:
        raise ValueError("panel lies behind the sensor")
    los = to_panel / d
    cos_theta = float(np.clip(panel.normal @ (-los), -1.0, 1.0))
    return MirrorState(d=d, theta_deg=math.degrees(math.acos(cos_theta)),
                       area=panel.area)


def convert_to_3d(r_artifact, x_artifact, config):
    """Sensor-frame centroid from (radial distance, lateral offset).

    The residual range goes entirely to the forward axis; the configured
    height is applied afterwards without re-normalizing R (error <= 2 %
    beyond 4 m).
    """
    if r_artifact < abs(x_artifact):
        raise ValueError("radial distance must be >= |lateral offset|")
    y = math.sqrt(r_artifact * r_artifact - x_artifact * x_artifact)
    z = config.centroid_height - config.mount_height
    return np.array([x_artifact, y, z])


def inject(native, state, config, rng=None):
    """Run one injection round against a native scan.

    Returns (possibly augmented scan, report).  Native points keep their
    order; injected points are appended, tagged virtual, with sentinel
    intensity.  Deterministic given (native, state, config, seed).
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    rng_name = type(rng.bit_generator).__name__
    p_app = appearance_probability(state, config.params)
    r = float(rng.random())
    if r >= p_app:
        return native, InjectionReport(frame=native.frame, triggered=False, r=r,
                                       n_injected=0, centroid=None,
                                       rng_name=rng_name)

    n = point_count(state, config.params)
    feats = predict_features(state, config.params)
    centroid = convert_to_3d(feats.r_artifact, feats.x_artifact, config)
    offsets = rng.normal(0.0, 1.0, size=(n, 3)) * np.asarray(config.spread)
    pts = centroid + offsets

    if INJECTED_LABEL in native.source_labels:
        labels = native.source_labels
        code = labels.index(INJECTED_LABEL)
    else:
        labels = native.source_labels + (INJECTED_LABEL,)
        code = len(labels) - 1

    merged = PointCloud(
        frame=native.frame,
        t=native.t,
        xyz=np.vstack([native.xyz, pts]),
        intensity=np.concatenate([native.intensity,
                                  np.full(n, INJECTED_INTENSITY)]),
        tag=np.concatenate([native.tag,
                            np.full(n, TAG_VIRTUAL, dtype=np.uint8)]),
        source=np.concatenate([native.source, np.full(n, code, dtype=np.int32)]),
        source_labels=labels,
    )
    return merged, InjectionReport(frame=native.frame, triggered=True, r=r,
                                   n_injected=n, centroid=centroid,
                                   rng_name=rng_name)


REPORT_HEADER = "frame,triggered,r,N,cx,cy,cz"


def write_report_csv(path, reports):
    from mirage.fileio import g9

    with open(path, "w", newline="\n") as fh:
        fh.write(REPORT_HEADER + "\n")
        for rep in reports:
            if rep.centroid is None:
                cx = cy = cz = "nan"
            else:
                cx, cy, cz = (g9(v) for v in rep.centroid)
            fh.write(f"{rep.frame},{int(rep.triggered)},{g9(rep.r)},"
                     f"{rep.n_injected},{cx},{cy},{cz}\n")


def read_report_csv(path):
    from mirage.fileio import FileFormatError

    reports = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line == REPORT_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise FileFormatError(f"expected 7 fields, got {len(parts)}",
                                      path=path, line=lineno)
            centroid = np.array([float(parts[4]), float(parts[5]), float(parts[6])])
            triggered = bool(int(parts[1]))
            reports.append(InjectionReport(
                frame=int(parts[0]), triggered=triggered, r=float(parts[2]),
                n_injected=int(parts[3]),
                centroid=centroid if triggered else None))
    return reports

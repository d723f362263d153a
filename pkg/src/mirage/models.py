"""Fitted artifact models: location, point count, and appearance window.

Four closed-form models predict the reflected-artifact features from the
instantaneous mirror state (distance d, tilt theta, area A):

    lateral offset   X = cX * d * tan(2 theta) + deltaX
    radial distance  R = cR * d^n_d * (1 + a1 theta + a2 theta^2)
    point count      N = c0 * A^beta * cos^gamma(theta) * exp(-(d-mu)^2 / (2 sigma^2))
    appearance       P = sigmoid(k (d - d_min)) * sigmoid(-k (d - d_max))
                     d_min = b0_min + b1 theta + b2 A
                     d_max = b0_max + c1 theta + c2 A

Unit conventions (asserted by unit tests on worked values): theta enters all
trigonometric terms and the radial polynomial in radians, but the window
boundary equations in degrees; coefficient units follow from these choices.
The envelope center mu is a scalar; no angular dependence is modeled.

The lateral model has a pole at theta = 45 degrees (tan(2 theta)); it is
restricted to theta < 44.9 degrees and steeper configurations must use the
ray-traced simulator instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

THETA_LIMIT_DEG = 44.9

PARAM_FIELDS = ("c0", "beta", "gamma", "mu", "sigma",
                "k", "b0_min", "b1", "b2", "b0_max", "c1", "c2",
                "cX", "deltaX", "cR", "n_d", "a1", "a2")


@dataclass(frozen=True)
class MirrorState:
    """Instantaneous attack geometry: sensor-to-mirror distance [m], tilt
    angle [deg], reflective area [m^2]."""

    d: float
    theta_deg: float
    area: float

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("distance must be positive")
        if not 0.0 <= self.theta_deg < 90.0:
            raise ValueError("tilt angle must lie in [0, 90) degrees")
        if self.area <= 0:
            raise ValueError("area must be positive")

    @property
    def theta_rad(self):
        return math.radians(self.theta_deg)


@dataclass(frozen=True)
class ArtifactModelParams:
    """The 18 fitted coefficients driving the four models (defaults are the
    fitted values)."""

    # point count
    c0: float = 2500.0
    beta: float = 1.25
    gamma: float = 3.5
    mu: float = 3.0          # m
    sigma: float = 1.5       # m
    # appearance window
    k: float = 15.0
    b0_min: float = -2.858
    b1: float = 0.1389       # per degree
    b2: float = -0.3003      # per m^2
    b0_max: float = -0.946
    c1: float = 0.1389       # per degree
    c2: float = 1.5390       # per m^2
    # lateral offset
    cX: float = 0.98
    deltaX: float = -0.05    # m
    # radial distance
    cR: float = 1.02
    n_d: float = 0.88
    a1: float = 0.15         # per radian
    a2: float = 0.08         # per radian^2

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if not 0.0 < self.n_d <= 1.0:
            raise ValueError("n_d must lie in (0, 1]")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return ArtifactModelParams(**d)


assert tuple(f.name for f in fields(ArtifactModelParams)) == PARAM_FIELDS


@dataclass(frozen=True)
class ArtifactFeatures:
    """Per-cluster feature bundle: centroid radial distance and lateral
    offset [m], point count, appearance probability."""

    r_artifact: float
    x_artifact: float
    n_artifact: float
    p_app: float


class TiltDomainError(ValueError):
    """Tilt angle at or beyond the tan(2 theta) pole of the lateral model."""


class ArtifactClampWarning(UserWarning):
    """Lateral offset exceeded the radial distance and was clamped."""


def _check_tilt(state):
    if state.theta_deg >= THETA_LIMIT_DEG:
        raise TiltDomainError(
            f"tilt angle {state.theta_deg:g} deg is at or beyond the "
            f"{THETA_LIMIT_DEG} deg singularity of the lateral-offset model "
            "(tan(2 theta) diverges at 45 deg); use the ray-traced simulator "
            "for steeper mirrors")


def lateral_offset(state, params=ArtifactModelParams()):
    """Sideways displacement of the artifact centroid [m]."""
    _check_tilt(state)
    return params.cX * state.d * math.tan(2.0 * state.theta_rad) + params.deltaX


def radial_distance(state, params=ArtifactModelParams()):
    """Apparent range of the artifact centroid [m]; sub-linear in d."""
    f_theta = 1.0 + params.a1 * state.theta_rad + params.a2 * state.theta_rad**2
    return params.cR * state.d**params.n_d * f_theta


def point_count_value(state, params=ArtifactModelParams()):
    """Real-valued point-count model (before integer truncation)."""
    envelope = math.exp(-((state.d - params.mu) ** 2) / (2.0 * params.sigma**2))
    return (params.c0 * state.area**params.beta
            * math.cos(state.theta_rad) ** params.gamma * envelope)


def point_count(state, params=ArtifactModelParams()):
    """Number of artifact points for one frame (floor of the model value)."""
    return int(math.floor(point_count_value(state, params)))


def window_bounds(state, params=ArtifactModelParams()):
    """(d_min, d_max) of the appearance window [m]; theta in degrees here."""
    d_min = params.b0_min + params.b1 * state.theta_deg + params.b2 * state.area
    d_max = params.b0_max + params.c1 * state.theta_deg + params.c2 * state.area
    return d_min, d_max


def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def appearance_probability(state, params=ArtifactModelParams()):
    """Probability that the artifact registers at all: a soft distance
    window with a rising edge at d_min and a falling edge at d_max."""
    d_min, d_max = window_bounds(state, params)
    return (_sigmoid(params.k * (state.d - d_min))
            * _sigmoid(-params.k * (state.d - d_max)))


def predict_features(state, params=ArtifactModelParams()):
    """Evaluate all four models; clamps |X| <= R since the independently
    fitted location models can mildly conflict at extreme theta*d."""
    x = lateral_offset(state, params)
    r = radial_distance(state, params)
    if abs(x) > r:
        warnings.warn(
            f"lateral offset {x:.3f} m exceeds radial distance {r:.3f} m "
            f"at {state}; clamping", ArtifactClampWarning, stacklevel=2)
        x = math.copysign(r, x)
    return ArtifactFeatures(
        r_artifact=r,
        x_artifact=x,
        n_artifact=float(point_count(state, params)),
        p_app=appearance_probability(state, params),
    )

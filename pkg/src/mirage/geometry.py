"""Exact geometric primitives: rays, planar mirror panels, solid obstacles.

All vectors are plain numpy arrays of shape (3,) in a right-handed, z-up
world frame (ground plane z = 0).  The sensor frame uses x lateral (right
positive), y forward, z up.  Direction vectors are unit length to within
UNIT_TOL; constructors and operations that require unit inputs raise
ValueError on violations rather than silently renormalizing.

The scalar routines here (`intersect`, `reflect`, `fold_path`) are the
reference implementation; the batched kernels in `mirage.kernels` must agree
with them and are cross-checked in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-9
# Minimum ray parameter accepted by intersection tests; rejects self-hits
# when a secondary ray starts exactly on a surface.
T_MIN = 1e-9


def vec3(x, y, z):
    return np.array([float(x), float(y), float(z)])


def norm(v):
    return float(np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))


def normalize(v):
    v = np.asarray(v, dtype=float)
    n = norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def is_unit(v, tol=UNIT_TOL):
    return abs(norm(np.asarray(v, dtype=float)) - 1.0) <= tol


def _require_unit(v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    if not is_unit(v):
        raise ValueError(f"{name} must be unit length (|{name}| = {norm(v):.12g})")
    return v


def reflect(v_in, n):
    """Specular reflection of unit direction `v_in` about unit normal `n`.

    Returns v_in - 2 (v_in . n) n.  The exit angle about the normal equals
    the incidence angle; applying the operation twice returns the input.
    """
    v_in = _require_unit(v_in, "v_in")
    n = _require_unit(n, "n")
    return v_in - 2.0 * float(v_in @ n) * n


def mirror_point(p, plane_point, plane_normal):
    """Reflect point `p` across the plane through `plane_point` with unit
    normal `plane_normal` (the classic plane-mirror image)."""
    p = np.asarray(p, dtype=float)
    n = _require_unit(plane_normal, "plane_normal")
    return p - 2.0 * float((p - np.asarray(plane_point, dtype=float)) @ n) * n


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "direction", _require_unit(self.direction, "direction"))

    def at(self, t):
        return self.origin + float(t) * self.direction


@dataclass
class MirrorPanel:
    """Zero-thickness one-sided rectangular mirror.

    `normal` is the front-face normal; rays approaching from behind pass
    through.  `up` spans the height axis and must be orthogonal to `normal`;
    the width axis is right = up x normal.
    """

    center: np.ndarray
    normal: np.ndarray
    up: np.ndarray
    width: float
    height: float
    reflectivity: float = 0.95
    label: str = "mirror"

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.normal = _require_unit(self.normal, "normal")
        self.up = _require_unit(self.up, "up")
        if abs(float(self.normal @ self.up)) > UNIT_TOL:
            raise ValueError("panel up axis must be orthogonal to its normal")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("panel width and height must be positive")
        if not 0.0 < self.reflectivity <= 1.0:
            raise ValueError("reflectivity must lie in (0, 1]")

    @property
    def right(self):
        return np.cross(self.up, self.normal)

    @property
    def area(self):
        return self.width * self.height


@dataclass
class Box:
    """Rectangular solid with a yaw about the vertical axis.

    `size` is the full extent along the box's own (x, y, z) axes.
    """

    center: np.ndarray
    size: np.ndarray
    yaw: float = 0.0
    albedo: float = 0.4
    label: str = "box"

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.size = np.asarray(self.size, dtype=float)
        if np.any(self.size <= 0):
            raise ValueError("box dimensions must be positive")
        if not 0.0 < self.albedo <= 1.0:
            raise ValueError("albedo must lie in (0, 1]")


@dataclass
class Cylinder:
    """Vertical cylinder standing on `base_center`; lateral surface plus top cap."""

    base_center: np.ndarray
    radius: float
    height: float
    albedo: float = 0.5
    label: str = "cylinder"

    def __post_init__(self):
        self.base_center = np.asarray(self.base_center, dtype=float)
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("cylinder dimensions must be positive")
        if not 0.0 < self.albedo <= 1.0:
            raise ValueError("albedo must lie in (0, 1]")


@dataclass
class Cone:
    """Vertical cone, apex up, standing on `base_center`."""

    base_center: np.ndarray
    base_radius: float
    height: float
    albedo: float = 0.5
    label: str = "cone"

    def __post_init__(self):
        self.base_center = np.asarray(self.base_center, dtype=float)
        if self.base_radius <= 0 or self.height <= 0:
            raise ValueError("cone dimensions must be positive")
        if not 0.0 < self.albedo <= 1.0:
            raise ValueError("albedo must lie in (0, 1]")


@dataclass
class Ground:
    """Infinite diffuse ground plane at z = 0."""

    albedo: float = 0.2
    label: str = "ground"

    def __post_init__(self):
        if not 0.0 < self.albedo <= 1.0:
            raise ValueError("albedo must lie in (0, 1]")


SOLID_TYPES = (Box, Cylinder, Cone)


@dataclass
class Hit:
    point: np.ndarray
    distance: float
    kind: str  # "mirror" | "diffuse" | "ground"
    obj: object  # MirrorPanel, solid, or Ground


@dataclass(frozen=True)
class VirtualPoint:
    """A fabricated return: the folded two-hop range re-projected along the
    original emission direction."""

    position: np.ndarray
    range: float


@dataclass
class Scene:
    panels: list = field(default_factory=list)
    solids: list = field(default_factory=list)
    ground: Ground | None = None
    _arrays: object = field(default=None, repr=False, compare=False)

    def add(self, obj):
        if isinstance(obj, MirrorPanel):
            self.panels.append(obj)
        elif isinstance(obj, SOLID_TYPES):
            self.solids.append(obj)
        elif isinstance(obj, Ground):
            self.ground = obj
        else:
            raise TypeError(f"unsupported scene object {type(obj).__name__}")
        self._arrays = None
        return obj

    def without_panels(self):
        return Scene(panels=[], solids=list(self.solids), ground=self.ground)

    def arrays(self):
        """Packed numpy representation consumed by the ray kernels (cached)."""
        if self._arrays is None:
            self._arrays = SceneArrays.pack(self)
        return self._arrays


@dataclass
class SceneArrays:
    """Struct-of-arrays scene layout shared by both kernel backends.

    Solids are flattened into one table (boxes, then cylinders, then cones)
    so a single int32 index identifies any diffuse surface; index -1 means
    the ground plane.
    """

    ground_present: bool
    ground_albedo: float
    pan_center: np.ndarray
    pan_normal: np.ndarray
    pan_up: np.ndarray
    pan_right: np.ndarray
    pan_half_w: np.ndarray
    pan_half_h: np.ndarray
    pan_refl: np.ndarray
    box_center: np.ndarray
    box_half: np.ndarray
    box_cos: np.ndarray
    box_sin: np.ndarray
    box_albedo: np.ndarray
    box_index: np.ndarray
    cyl_base: np.ndarray
    cyl_radius: np.ndarray
    cyl_height: np.ndarray
    cyl_albedo: np.ndarray
    cyl_index: np.ndarray
    cone_base: np.ndarray
    cone_radius: np.ndarray
    cone_height: np.ndarray
    cone_albedo: np.ndarray
    cone_index: np.ndarray
    solids: list
    panels: list

    @classmethod
    def pack(cls, scene):
        boxes = [s for s in scene.solids if isinstance(s, Box)]
        cyls = [s for s in scene.solids if isinstance(s, Cylinder)]
        cones = [s for s in scene.solids if isinstance(s, Cone)]
        solid_order = boxes + cyls + cones
        idx = {id(s): i for i, s in enumerate(solid_order)}

        def stack(items, getter, width=3):
            if not items:
                return np.zeros((0, width)) if width > 1 else np.zeros(0)
            rows = [getter(it) for it in items]
            return np.asarray(rows, dtype=float)

        panels = list(scene.panels)
        return cls(
            ground_present=scene.ground is not None,
            ground_albedo=scene.ground.albedo if scene.ground else 0.0,
            pan_center=stack(panels, lambda p: p.center),
            pan_normal=stack(panels, lambda p: p.normal),
            pan_up=stack(panels, lambda p: p.up),
            pan_right=stack(panels, lambda p: p.right),
            pan_half_w=stack(panels, lambda p: 0.5 * p.width, width=1),
            pan_half_h=stack(panels, lambda p: 0.5 * p.height, width=1),
            pan_refl=stack(panels, lambda p: p.reflectivity, width=1),
            box_center=stack(boxes, lambda b: b.center),
            box_half=stack(boxes, lambda b: 0.5 * b.size),
            box_cos=stack(boxes, lambda b: math.cos(b.yaw), width=1),
            box_sin=stack(boxes, lambda b: math.sin(b.yaw), width=1),
            box_albedo=stack(boxes, lambda b: b.albedo, width=1),
            box_index=np.asarray([idx[id(b)] for b in boxes], dtype=np.int32),
            cyl_base=stack(cyls, lambda c: c.base_center),
            cyl_radius=stack(cyls, lambda c: c.radius, width=1),
            cyl_height=stack(cyls, lambda c: c.height, width=1),
            cyl_albedo=stack(cyls, lambda c: c.albedo, width=1),
            cyl_index=np.asarray([idx[id(c)] for c in cyls], dtype=np.int32),
            cone_base=stack(cones, lambda c: c.base_center),
            cone_radius=stack(cones, lambda c: c.base_radius, width=1),
            cone_height=stack(cones, lambda c: c.height, width=1),
            cone_albedo=stack(cones, lambda c: c.albedo, width=1),
            cone_index=np.asarray([idx[id(c)] for c in cones], dtype=np.int32),
            solids=solid_order,
            panels=panels,
        )


# ---------------------------------------------------------------------------
# Scalar reference intersection tests


def _hit_ground(ray, tmin):
    dz = ray.direction[2]
    if dz >= -1e-15:
        return None
    t = -ray.origin[2] / dz
    return t if t > tmin else None


def _hit_panel(ray, panel, tmin):
    denom = float(ray.direction @ panel.normal)
    if denom >= -1e-15:  # back face or parallel: pass through
        return None
    t = float((panel.center - ray.origin) @ panel.normal) / denom
    if t <= tmin:
        return None
    p = ray.at(t)
    d = p - panel.center
    if abs(float(d @ panel.right)) > 0.5 * panel.width:
        return None
    if abs(float(d @ panel.up)) > 0.5 * panel.height:
        return None
    return t


def _hit_box(ray, box, tmin):
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    # rotate into the box frame (inverse yaw)
    rel = ray.origin - box.center
    ox = c * rel[0] + s * rel[1]
    oy = -s * rel[0] + c * rel[1]
    oz = rel[2]
    dx = c * ray.direction[0] + s * ray.direction[1]
    dy = -s * ray.direction[0] + c * ray.direction[1]
    dz = ray.direction[2]
    t0, t1 = -math.inf, math.inf
    for o, d, h in ((ox, dx, 0.5 * box.size[0]), (oy, dy, 0.5 * box.size[1]), (oz, dz, 0.5 * box.size[2])):
        if abs(d) < 1e-15:
            if abs(o) > h:
                return None
            continue
        ta = (-h - o) / d
        tb = (h - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    if t0 > tmin:
        return t0
    if t1 > tmin:  # origin inside the box
        return t1
    return None


def _hit_cylinder(ray, cyl, tmin):
    ox = ray.origin[0] - cyl.base_center[0]
    oy = ray.origin[1] - cyl.base_center[1]
    z0 = cyl.base_center[2]
    z1 = z0 + cyl.height
    dx, dy, dz = ray.direction
    best = None
    a = dx * dx + dy * dy
    if a > 1e-15:
        b = 2.0 * (ox * dx + oy * dy)
        cc = ox * ox + oy * oy - cyl.radius * cyl.radius
        disc = b * b - 4.0 * a * cc
        if disc >= 0.0:
            sq = math.sqrt(disc)
            for t in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
                if t > tmin and (best is None or t < best):
                    z = ray.origin[2] + t * dz
                    if z0 <= z <= z1:
                        best = t
    if abs(dz) > 1e-15:  # top cap
        t = (z1 - ray.origin[2]) / dz
        if t > tmin and (best is None or t < best):
            px = ox + t * dx
            py = oy + t * dy
            if px * px + py * py <= cyl.radius * cyl.radius:
                best = t
    return best


def _hit_cone(ray, cone, tmin):
    # Infinite double cone about the apex, clamped to the physical height.
    apex = cone.base_center + np.array([0.0, 0.0, cone.height])
    k = cone.base_radius / cone.height  # radius growth per unit drop below apex
    ox = ray.origin[0] - apex[0]
    oy = ray.origin[1] - apex[1]
    oz = ray.origin[2] - apex[2]
    dx, dy, dz = ray.direction
    k2 = k * k
    a = dx * dx + dy * dy - k2 * dz * dz
    b = 2.0 * (ox * dx + oy * dy - k2 * oz * dz)
    c = ox * ox + oy * oy - k2 * oz * oz
    best = None
    if abs(a) < 1e-15:
        if abs(b) > 1e-15:
            ts = [-c / b]
        else:
            ts = []
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return None
        sq = math.sqrt(disc)
        ts = [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
    for t in ts:
        if t > tmin and (best is None or t < best):
            z = oz + t * dz
            if -cone.height <= z <= 0.0:  # below apex, above base
                best = t
    return best


def intersect(ray, scene, max_range=math.inf, tmin=T_MIN):
    """Nearest intersection of `ray` with the scene, or None.

    Mirror panels register only front-face hits inside their rectangle;
    back-face hits pass through.  This is the slow scalar reference used to
    validate the batched kernels.
    """
    best_t = max_range
    best = None
    if scene.ground is not None:
        t = _hit_ground(ray, tmin)
        if t is not None and t < best_t:
            best_t, best = t, ("ground", scene.ground)
    for solid in scene.solids:
        if isinstance(solid, Box):
            t = _hit_box(ray, solid, tmin)
        elif isinstance(solid, Cylinder):
            t = _hit_cylinder(ray, solid, tmin)
        else:
            t = _hit_cone(ray, solid, tmin)
        if t is not None and t < best_t:
            best_t, best = t, ("diffuse", solid)
    for panel in scene.panels:
        t = _hit_panel(ray, panel, tmin)
        if t is not None and t < best_t:
            best_t, best = t, ("mirror", panel)
    if best is None:
        return None
    kind, obj = best
    return Hit(point=ray.at(best_t), distance=best_t, kind=kind, obj=obj)


def fold_path(sensor, mirror_hit, secondary_hit):
    """Construct the fabricated return for a two-hop path.

    The sensor attributes the whole travel time to the original emission
    direction, so the virtual point sits at range d_LM + d_MS along the
    sensor->mirror direction.  Geometrically this is the plane-mirror image
    of the secondary point.
    """
    if mirror_hit.kind != "mirror":
        raise ValueError("mirror_hit must be a mirror-surface hit")
    sensor = np.asarray(sensor, dtype=float)
    panel = mirror_hit.obj
    behind = float((secondary_hit.point - mirror_hit.point) @ panel.normal)
    if behind < -UNIT_TOL:
        raise ValueError("secondary hit lies behind the mirror plane")
    d_lm = norm(mirror_hit.point - sensor)
    d_ms = norm(secondary_hit.point - mirror_hit.point)
    direction = (mirror_hit.point - sensor) / d_lm
    total = d_lm + d_ms
    return VirtualPoint(position=sensor + direction * total, range=total)

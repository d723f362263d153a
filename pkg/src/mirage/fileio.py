"""Text file formats: point-cloud CSV, flat key=value configs, model
parameter files, scene descriptions, and state schedules.

All floats are printed with 9 significant digits ('%.9g'); reading a file
written by this module and writing it again reproduces it byte-for-byte.
Parsers report the offending line number on malformed input.
"""

from __future__ import annotations

import math
from dataclasses import fields

import numpy as np

from mirage import geometry
from mirage.lidar import TAG_CODES, TAG_NAMES, LidarConfig, PointCloud
from mirage.models import PARAM_FIELDS, ArtifactModelParams, MirrorState


class FileFormatError(ValueError):
    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}: "
        elif path is not None:
            loc += " "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


def g9(x):
    """Format a float with 9 significant digits."""
    return format(float(x), ".9g")


# ---------------------------------------------------------------------------
# Point-cloud CSV

CLOUD_HEADER = "frame,t,x,y,z,intensity,tag"


def write_cloud_csv(path, clouds):
    """Write one or more frames as `frame,t,x,y,z,intensity,tag` rows."""
    if isinstance(clouds, PointCloud):
        clouds = [clouds]
    with open(path, "w", newline="\n") as fh:
        fh.write(CLOUD_HEADER + "\n")
        for cloud in clouds:
            t = g9(cloud.t)
            for i in range(len(cloud)):
                x, y, z = cloud.xyz[i]
                fh.write(f"{cloud.frame},{t},{g9(x)},{g9(y)},{g9(z)},"
                         f"{g9(cloud.intensity[i])},{TAG_NAMES[int(cloud.tag[i])]}\n")


def read_cloud_csv(path):
    """Read a point-cloud CSV back into a list of PointCloud frames.

    Provenance labels are not serialized, so `source` comes back as -1.
    """
    frames = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line == CLOUD_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise FileFormatError(f"expected 7 fields, got {len(parts)}",
                                      path=path, line=lineno)
            try:
                frame = int(parts[0])
                t = float(parts[1])
                xyz = (float(parts[2]), float(parts[3]), float(parts[4]))
                intensity = float(parts[5])
                tag = TAG_CODES[parts[6]]
            except (ValueError, KeyError) as exc:
                raise FileFormatError(f"bad point row: {exc}", path=path,
                                      line=lineno) from None
            frames.setdefault(frame, {"t": t, "rows": []})["rows"].append(
                (xyz, intensity, tag))
    clouds = []
    for frame in sorted(frames):
        rows = frames[frame]["rows"]
        clouds.append(PointCloud(
            frame=frame,
            t=frames[frame]["t"],
            xyz=np.array([r[0] for r in rows]).reshape(-1, 3),
            intensity=np.array([r[1] for r in rows]),
            tag=np.array([r[2] for r in rows], dtype=np.uint8),
            source=np.full(len(rows), -1, dtype=np.int32),
            source_labels=(),
        ))
    return clouds


# ---------------------------------------------------------------------------
# Flat key=value files

def parse_kv(path):
    """Parse `key = value` lines; '#' starts a comment.  Returns an ordered
    {key: (value_string, lineno)} mapping; duplicate keys are rejected."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FileFormatError("expected key=value", path=path, line=lineno)
            key, value = line.split("=", 1)
            key = key.strip()
            if key in out:
                raise FileFormatError(f"duplicate key '{key}'", path=path, line=lineno)
            out[key] = (value.strip(), lineno)
    return out


def coerce_kv(raw, schema, path=None, *, require_all=False):
    """Typecast a parse_kv result against {key: type}; unknown keys and (when
    require_all) missing keys are rejected."""
    values = {}
    for key, (text, lineno) in raw.items():
        if key not in schema:
            raise FileFormatError(f"unknown key '{key}'", path=path, line=lineno)
        typ = schema[key]
        try:
            if typ is bool:
                if text.lower() not in ("true", "false", "0", "1"):
                    raise ValueError("expected true/false")
                values[key] = text.lower() in ("true", "1")
            else:
                values[key] = typ(text)
        except ValueError as exc:
            raise FileFormatError(f"bad value for '{key}': {exc}",
                                  path=path, line=lineno) from None
    if require_all:
        missing = [k for k in schema if k not in values]
        if missing:
            raise FileFormatError(f"missing keys: {', '.join(missing)}", path=path)
    return values


def write_kv(path, items):
    with open(path, "w", newline="\n") as fh:
        for key, value in items:
            if isinstance(value, float):
                value = g9(value)
            fh.write(f"{key}={value}\n")


# ---------------------------------------------------------------------------
# Model parameter files

def save_params(path, params):
    write_kv(path, [(name, getattr(params, name)) for name in PARAM_FIELDS])


def load_params(path):
    raw = parse_kv(path)
    schema = {name: float for name in PARAM_FIELDS}
    values = coerce_kv(raw, schema, path=path, require_all=True)
    return ArtifactModelParams(**values)


# ---------------------------------------------------------------------------
# LiDAR config files

_LIDAR_SCHEMA = {f.name: (int if f.name == "channels" else float)
                 for f in fields(LidarConfig)}


def load_lidar_config(path):
    values = coerce_kv(parse_kv(path), _LIDAR_SCHEMA, path=path)
    return LidarConfig(**values)


# ---------------------------------------------------------------------------
# Mirror-state schedules (one state per frame)

def load_schedule(path):
    """Read `d=.. theta=.. area=..` lines into a list of MirrorState."""
    states = []
    schema = {"d": float, "theta": float, "area": float}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            entry = {}
            for tok in line.split():
                if "=" not in tok:
                    raise FileFormatError("expected d=.. theta=.. area=..",
                                          path=path, line=lineno)
                key, value = tok.split("=", 1)
                if key not in schema:
                    raise FileFormatError(f"unknown key '{key}'", path=path, line=lineno)
                try:
                    entry[key] = schema[key](value)
                except ValueError:
                    raise FileFormatError(f"bad value for '{key}': {value!r}",
                                          path=path, line=lineno) from None
            if set(entry) != set(schema):
                raise FileFormatError("each line needs d, theta and area",
                                      path=path, line=lineno)
            try:
                states.append(MirrorState(d=entry["d"], theta_deg=entry["theta"],
                                          area=entry["area"]))
            except ValueError as exc:
                raise FileFormatError(str(exc), path=path, line=lineno) from None
    return states


def save_schedule(path, states):
    with open(path, "w", newline="\n") as fh:
        for s in states:
            fh.write(f"d={g9(s.d)} theta={g9(s.theta_deg)} area={g9(s.area)}\n")


# ---------------------------------------------------------------------------
# Scene files: one object per line, `kind key=value ...`

def _parse_vec(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"expected x,y,z triple, got {text!r}")
    return np.array([float(p) for p in parts])


def _build_panel(**kw):
    if "theta" in kw:
        th = math.radians(float(kw.pop("theta")))
        kw["normal"] = np.array([math.sin(th), -math.cos(th), 0.0])
        kw.setdefault("up", np.array([0.0, 0.0, 1.0]))
    if "normal" not in kw:
        kw["normal"] = np.array([0.0, -1.0, 0.0])
        kw.setdefault("up", np.array([0.0, 0.0, 1.0]))
    return geometry.MirrorPanel(**kw)


_SCENE_KINDS = {
    "ground": (geometry.Ground, {"albedo": float, "label": str}),
    "panel": (_build_panel, {"center": _parse_vec, "normal": _parse_vec,
                             "up": _parse_vec, "theta": float, "width": float,
                             "height": float, "reflectivity": float, "label": str}),
    "box": (geometry.Box, {"center": _parse_vec, "size": _parse_vec, "yaw": float,
                           "albedo": float, "label": str}),
    "cylinder": (geometry.Cylinder, {"base": _parse_vec, "radius": float,
                                     "height": float, "albedo": float, "label": str}),
    "cone": (geometry.Cone, {"base": _parse_vec, "radius": float, "height": float,
                             "albedo": float, "label": str}),
}

_FIELD_RENAME = {
    ("cylinder", "base"): "base_center",
    ("cone", "base"): "base_center",
    ("cone", "radius"): "base_radius",
}


def load_scene(path):
    scene = geometry.Scene()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            kind = tokens[0]
            if kind not in _SCENE_KINDS:
                raise FileFormatError(
                    f"unknown object kind '{kind}' (expected one of "
                    f"{', '.join(sorted(_SCENE_KINDS))})", path=path, line=lineno)
            ctor, schema = _SCENE_KINDS[kind]
            kw = {}
            for tok in tokens[1:]:
                if "=" not in tok:
                    raise FileFormatError(f"expected key=value, got {tok!r}",
                                          path=path, line=lineno)
                key, value = tok.split("=", 1)
                if key not in schema:
                    raise FileFormatError(f"unknown key '{key}' for {kind}",
                                          path=path, line=lineno)
                try:
                    parsed = schema[key](value)
                except ValueError as exc:
                    raise FileFormatError(f"bad value for '{key}': {exc}",
                                          path=path, line=lineno) from None
                kw[_FIELD_RENAME.get((kind, key), key)] = parsed
            try:
                scene.add(ctor(**kw))
            except (TypeError, ValueError) as exc:
                raise FileFormatError(f"invalid {kind}: {exc}", path=path,
                                      line=lineno) from None
    return scene

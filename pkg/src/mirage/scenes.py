"""Canonical experiment scenes: cone-occlusion (object removal) and
tile-array reflection (object addition) setups.

The removal scene mounts the sensor at 0.8 m: with the default 2.2 m roof
mount and a +/-22.5 degree vertical FOV the near ground (and a half-metre
cone at 4 m) would sit below the bottom beam, so the canonical test scene
uses a tripod-height sensor for which the geometry closes.  See the module
tests for the coverage check.
"""

from __future__ import annotations

import math

import numpy as np

from mirage.geometry import Box, Cone, Ground, MirrorPanel, Scene
from mirage.lidar import LidarConfig

# Tile-array panel dimensions (width, height) per reflective area: a
# portrait two-tile stack, a 2x2 grid, and the six-tile surface.  The
# headline 0.60 m^2 figure uses a 1.0 x 0.6 rectangle (a literal 3x2 grid of
# 30 cm tiles is only 0.54 m^2).
PANEL_DIMS = {0.18: (0.3, 0.6), 0.36: (0.6, 0.6), 0.60: (1.0, 0.6)}


def panel_dims(area):
    if area in PANEL_DIMS:
        return PANEL_DIMS[area]
    w = math.sqrt(2.0 * area)
    return (w, area / w)


def yawed_panel(center, theta_deg, width, height, reflectivity=0.95, label="mirror"):
    """Panel facing -y (toward a sensor looking +y), yawed by theta about +z.

    Positive theta turns the normal toward +x, so reflections of forward
    beams deflect to the sensor's right.
    """
    th = math.radians(theta_deg)
    normal = np.array([math.sin(th), -math.cos(th), 0.0])
    return MirrorPanel(center=np.asarray(center, dtype=float), normal=normal,
                       up=np.array([0.0, 0.0, 1.0]), width=width, height=height,
                       reflectivity=reflectivity, label=label)


def ora_lidar_config(**overrides):
    kw = dict(mount_height=0.8)
    kw.update(overrides)
    return LidarConfig(**kw)


def ora_scene(tilt_deg=0.0, *, with_panel=True, cone_distance=4.0,
              panel_distance=3.0, panel_width=0.4, panel_height=0.6):
    """Traffic cone behind a portrait-mounted panel that fully covers it.

    The 60x40 cm panel is mounted portrait (0.4 wide, 0.6 tall) with its
    bottom edge just above the ground; this blocks every sensor-to-cone
    sightline for tilts up to 45 degrees with the 0.8 m sensor mount.
    """
    scene = Scene()
    scene.add(Ground(albedo=0.2))
    scene.add(Cone(base_center=[0.0, cone_distance, 0.0], base_radius=0.145,
                   height=0.5, albedo=0.5, label="cone"))
    if with_panel:
        center = [0.0, panel_distance, 0.01 + 0.5 * panel_height]
        scene.add(yawed_panel(center, tilt_deg, panel_width, panel_height))
    return scene


def oaa_scene(area=0.18, theta_deg=30.0, *, distance=3.0, with_panel=True,
              panel_center_height=1.2, wall_offset=1.2, wall_albedo=0.4,
              lateral=0.0):
    """Elevated tile-array panel that reflects forward beams onto a side wall.

    The wall runs parallel to the sensor's forward axis on the +x side and
    is long enough to catch the deflected beams for tilts from 15 to 60
    degrees; every deflected beam that strikes it folds into a virtual
    return behind the panel.
    """
    scene = Scene()
    scene.add(Ground(albedo=0.2))
    wall_x = lateral + max(panel_dims(a)[0] for a in PANEL_DIMS) / 2 + wall_offset
    scene.add(Box(center=[wall_x + 0.1, distance, 1.5],
                  size=[0.2, 8.0 + 2.0 * distance, 3.0],
                  albedo=wall_albedo, label="wall"))
    if with_panel:
        w, h = panel_dims(area)
        scene.add(yawed_panel([lateral, distance, panel_center_height], theta_deg, w, h))
    return scene

"""Cross-checks between the batched kernels and the scalar reference."""

import math

import numpy as np
import pytest

from mirage import kernels
from mirage.geometry import (
    Box,
    Cone,
    Cylinder,
    Ground,
    MirrorPanel,
    Ray,
    Scene,
    intersect,
    reflect,
)
from tests.conftest import random_unit


def random_scene(rng):
    scene = Scene()
    if rng.random() < 0.8:
        scene.add(Ground(albedo=0.2))
    for _ in range(rng.integers(0, 3)):
        scene.add(Box(center=[rng.uniform(-6, 6), rng.uniform(1, 9), rng.uniform(0.5, 2)],
                      size=rng.uniform(0.3, 3.0, size=3), yaw=rng.uniform(0, math.pi),
                      albedo=0.4))
    for _ in range(rng.integers(0, 2)):
        scene.add(Cylinder(base_center=[rng.uniform(-5, 5), rng.uniform(1, 8), 0.0],
                           radius=rng.uniform(0.1, 0.6), height=rng.uniform(0.3, 2.0)))
    for _ in range(rng.integers(0, 2)):
        scene.add(Cone(base_center=[rng.uniform(-5, 5), rng.uniform(1, 8), 0.0],
                       base_radius=rng.uniform(0.1, 0.5), height=rng.uniform(0.3, 1.0)))
    for _ in range(rng.integers(1, 3)):
        th = rng.uniform(-1.0, 1.0)
        normal = np.array([math.sin(th), -math.cos(th), 0.0])
        scene.add(MirrorPanel(center=[rng.uniform(-3, 3), rng.uniform(2, 6),
                                      rng.uniform(0.3, 1.5)],
                              normal=normal, up=[0.0, 0.0, 1.0],
                              width=rng.uniform(0.3, 1.2),
                              height=rng.uniform(0.3, 1.2)))
    return scene


def reference_trace(origin, direction, scene, max_range):
    """Scalar two-hop tracing mirroring the kernel contract."""
    hit = intersect(Ray(origin, direction), scene, max_range=max_range)
    if hit is None:
        return 0, 0.0
    if hit.kind == "ground":
        return 1, hit.distance
    if hit.kind == "diffuse":
        return 2, hit.distance
    refl = reflect(direction, hit.obj.normal)
    second = intersect(Ray(hit.point, refl), scene,
                       max_range=max_range - hit.distance)
    if second is None or second.kind == "mirror":
        return 0, 0.0
    status = 3 if second.kind == "ground" else 4
    return status, hit.distance + second.distance


def test_kernels_match_scalar_reference(kernel_impl, rng):
    origin = np.array([0.0, 0.0, 1.5])
    for trial in range(8):
        scene = random_scene(rng)
        dirs = random_unit(rng, 400)
        status, dist, obj, panel, albedo = kernels.trace_beams(
            origin, dirs, scene.arrays(), 60.0, impl=kernel_impl)
        for i in range(dirs.shape[0]):
            ref_status, ref_dist = reference_trace(origin, dirs[i], scene, 60.0)
            assert status[i] == ref_status, f"trial {trial} beam {i}"
            if ref_status:
                assert dist[i] == pytest.approx(ref_dist, abs=1e-9)


def test_backends_agree_exactly(rng):
    mods = kernels.available_backends()
    if len(mods) < 2:
        pytest.skip("compiled backend not built")
    origin = np.array([0.2, -0.1, 1.8])
    for _ in range(5):
        scene = random_scene(rng)
        dirs = random_unit(rng, 2000)
        results = {name: kernels.trace_beams(origin, dirs, scene.arrays(), 80.0,
                                             impl=mod)
                   for name, mod in mods.items()}
        a = results["python"]
        b = results["cython"]
        assert np.array_equal(a[0], b[0])
        assert np.allclose(a[1], b[1], atol=1e-12, rtol=0.0)
        assert np.array_equal(a[2], b[2])
        assert np.array_equal(a[3], b[3])
        assert np.array_equal(a[4], b[4])


def test_virtual_ranges_exceed_panel_range(kernel_impl, rng):
    scene = random_scene(rng)
    dirs = random_unit(rng, 1500)
    origin = np.array([0.0, 0.0, 1.2])
    sa = scene.arrays()
    status, dist, obj, panel, albedo = kernels.trace_beams(
        origin, dirs, sa, 60.0, impl=kernel_impl)
    virt = status >= 3
    if not virt.any():
        pytest.skip("no virtual returns in this draw")
    for i in np.nonzero(virt)[0]:
        first = intersect(Ray(origin, dirs[i]), scene, max_range=60.0)
        assert first.kind == "mirror"
        assert dist[i] > first.distance

#!/usr/bin/env python3
"""Benchmark the ray-kernel backends on representative scenes.

Times full-resolution scans (128 channels x 1024 azimuth steps) through the
compiled extension and the numpy fallback, printing beams/second and the
speedup.  Run after `pip install -e .`:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

from mirage import kernels, scenes
from mirage.lidar import LidarConfig, scan


def time_scan(scene, config, impl, repeats):
    scan(scene, config, impl=impl)  # warm-up (grid cache, scene arrays)
    t0 = time.perf_counter()
    for _ in range(repeats):
        cloud = scan(scene, config, impl=impl)
    dt = (time.perf_counter() - t0) / repeats
    return dt, len(cloud)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    config = LidarConfig()
    n_beams = config.channels * config.azimuth_count
    cases = {
        "removal (cone + panel + ground)": (scenes.ora_scene(30.0),
                                            scenes.ora_lidar_config()),
        "addition (tiles + wall + ground)": (scenes.oaa_scene(0.36, 30.0),
                                             config),
    }
    backends = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}; "
          f"{n_beams} beams/frame, {args.repeats} repeats\n")
    for label, (scene, cfg) in cases.items():
        print(f"-- {label}")
        times = {}
        for name, mod in sorted(backends.items()):
            dt, n_points = time_scan(scene, cfg, mod, args.repeats)
            times[name] = dt
            rate = cfg.channels * cfg.azimuth_count / dt
            print(f"   {name:7s} {dt * 1e3:8.2f} ms/scan "
                  f"({rate / 1e6:6.2f} M beams/s, {n_points} returns)")
        if "cython" in times and "python" in times:
            print(f"   speedup {times['python'] / times['cython']:.2f}x\n")
        else:
            print("   (compiled backend unavailable; numpy fallback only)\n")


if __name__ == "__main__":
    main()

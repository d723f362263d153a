"""Batch command-line front-end.

Subcommands: scan (ray-trace a scene), inject (model-driven artifact
injection over a recording), fit (re-fit artifact models from a campaign),
scenario (two-vehicle attack simulation), occupancy (grid construction).
Every command writes a manifest into its output directory recording the
exact invocation, inputs, seed, tool version, and a parameter hash, so runs
are reproducible from the manifest alone.

Exit codes: 0 success, 2 input error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import glob as globlib
import hashlib
import os
import sys

import numpy as np

import mirage
from mirage import campaign as campaign_mod
from mirage import fileio, fitting, injection, occupancy, scenario
from mirage.fileio import FileFormatError
from mirage.lidar import LidarConfig, scan
from mirage.models import THETA_LIMIT_DEG, ArtifactModelParams

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class InputError(Exception):
    pass


def _hash_files(paths):
    digest = hashlib.sha256()
    for path in paths:
        if path and os.path.exists(path):
            with open(path, "rb") as fh:
                digest.update(fh.read())
    return digest.hexdigest()


def _write_manifest(out_dir, args, config_paths, seed):
    rows = [
        ("command", " ".join(sys.argv) if sys.argv else "mirage"),
        ("subcommand", args.command),
        ("version", mirage.__version__),
        ("seed", seed if seed is not None else ""),
        ("output", os.path.abspath(out_dir)),
        ("parameter_hash", _hash_files(config_paths)),
    ]
    for i, path in enumerate(config_paths):
        if path:
            rows.append((f"input_{i}", os.path.abspath(path)))
    fileio.write_kv(os.path.join(out_dir, "manifest.txt"), rows)


def _load_params(path):
    return fileio.load_params(path) if path else ArtifactModelParams()


def _load_lidar(path):
    return fileio.load_lidar_config(path) if path else LidarConfig()


def _expand_frames(pattern):
    paths = sorted(globlib.glob(pattern))
    if not paths:
        raise InputError(f"no files match --frames pattern '{pattern}'")
    clouds = []
    for path in paths:
        clouds.extend(fileio.read_cloud_csv(path))
    return clouds, paths


# ---------------------------------------------------------------------------
# Subcommands


def cmd_scan(args):
    scene = fileio.load_scene(args.scene)
    config = _load_lidar(args.config)
    os.makedirs(args.out, exist_ok=True)
    for frame in range(args.n_frames):
        cloud = scan(scene, config, frame=frame)
        fileio.write_cloud_csv(
            os.path.join(args.out, f"frame_{frame:04d}.csv"), cloud)
    _write_manifest(args.out, args, [args.scene, args.config], None)
    print(f"scanned {args.n_frames} frame(s) -> {args.out}")
    return EXIT_OK


def cmd_inject(args):
    clouds, _ = _expand_frames(args.frames)
    states = fileio.load_schedule(args.schedule)
    if len(states) != len(clouds):
        raise InputError(
            f"schedule has {len(states)} states but input has "
            f"{len(clouds)} frames")
    for i, state in enumerate(states):
        if state.theta_deg >= THETA_LIMIT_DEG:
            raise InputError(
                f"schedule entry {i}: tilt angle {state.theta_deg:g} deg is at "
                f"or beyond the {THETA_LIMIT_DEG} deg lateral-offset "
                "singularity (tan(2 theta) diverges at 45 deg); the "
                "model-driven injector is undefined there")
    params = _load_params(args.params)
    config = injection.InjectionConfig(params=params, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out, exist_ok=True)
    reports = []
    for i, (cloud, state) in enumerate(zip(clouds, states)):
        attacked, report = injection.inject(cloud, state, config, rng)
        fileio.write_cloud_csv(
            os.path.join(args.out, f"attacked_{i:04d}.csv"), attacked)
        reports.append(report)
    injection.write_report_csv(os.path.join(args.out, "report.csv"), reports)
    _write_manifest(args.out, args, [args.schedule, args.params], args.seed)
    triggered = sum(1 for r in reports if r.triggered)
    print(f"injected {triggered}/{len(reports)} frame(s) -> {args.out}")
    return EXIT_OK


def cmd_fit(args):
    camp = campaign_mod.load_manifest(args.campaign)
    location, window = campaign_mod.extract_samples(camp)
    samples = window if args.model == "window" else location
    base = _load_params(args.params)
    try:
        result = fitting.fit_models(samples, args.model, base_params=base)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    fileio.save_params(os.path.join(args.out, "params.txt"),
                       result.merged_params(base))

    def fmt_r2(value):
        return "undefined" if value is None else fileio.g9(value)

    lines = ["scope,n_samples,r_squared,rmse,converged,iterations,message"]
    lines.append(f"global,{len(samples)},{fmt_r2(result.r_squared)},"
                 f"{fileio.g9(result.rmse)},{int(result.converged)},"
                 f"{result.iterations},{result.message}")
    for key in sorted({(s.theta_deg, s.area) for s, _ in samples}):
        subset = [p for p in samples
                  if (p[0].theta_deg, p[0].area) == key]
        if len(subset) < 2:
            continue
        r2 = fitting.r_squared_subset(result, subset, base_params=base)
        lines.append(f"theta{key[0]:g}_area{key[1]:g},{len(subset)},"
                     f"{fmt_r2(r2)},,,,")
    with open(os.path.join(args.out, "fit.csv"), "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_manifest(args.out, args, [args.campaign, args.params], None)
    print(f"fit {args.model}: converged={result.converged} "
          f"r2={fmt_r2(result.r_squared)} -> {args.out}")
    return EXIT_OK if result.converged else EXIT_NUMERIC


def cmd_scenario(args):
    config = scenario.load_scenario_config(args.config) if args.config \
        else scenario.ScenarioConfig()
    if args.no_attack:
        config.attack = "none"
    if args.seed is not None:
        config.seed = args.seed
    params = _load_params(args.params)
    log = scenario.run(config, params=params)
    os.makedirs(args.out, exist_ok=True)
    scenario.write_log_csv(os.path.join(args.out, "log.csv"), log)
    stop = log.ego_stop_duration()
    min_ttc = log.min_ttc(before=log.events.get(scenario.EVENT_COLLISION))
    fileio.write_kv(os.path.join(args.out, "summary.txt"), [
        ("collision", str(log.collision).lower()),
        ("min_ttc", "inf" if min_ttc == float("inf") else fileio.g9(min_ttc)),
        ("ego_stop_duration", "" if stop is None else fileio.g9(stop)),
        ("events", ";".join(f"{k}@{fileio.g9(v)}" for k, v in
                            sorted(log.events.items(), key=lambda kv: kv[1]))),
    ])
    _write_manifest(args.out, args, [args.config, args.params], config.seed)
    print(f"scenario: collision={log.collision} events={len(log.events)} "
          f"-> {args.out}")
    return EXIT_OK


def cmd_occupancy(args):
    clouds, paths = _expand_frames(args.frames)
    if args.config:
        values = fileio.coerce_kv(
            fileio.parse_kv(args.config),
            {f.name: (int if f.name in ("occupied_count", "integration_frames")
                      else float)
             for f in occupancy.GridConfig.__dataclass_fields__.values()},
            path=args.config)
        grid_config = occupancy.GridConfig(**values)
    else:
        grid_config = occupancy.GridConfig()
    grid = occupancy.build_grid(clouds, grid_config)
    os.makedirs(args.out, exist_ok=True)
    occupancy.write_grid(os.path.join(args.out, "grid.txt"), grid)
    fileio.write_kv(os.path.join(args.out, "summary.txt"), [
        ("frames", len(clouds)),
        ("occupied_area", occupancy.occupied_area(grid)),
    ])
    _write_manifest(args.out, args, [args.config] + paths, None)
    print(f"occupancy: {occupancy.occupied_area(grid):.2f} m^2 occupied "
          f"-> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mirage",
        description="Mirror-induced LiDAR artifact simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="ray-trace a scene into point-cloud CSVs")
    p.add_argument("--scene", required=True)
    p.add_argument("--config", help="LiDAR config (key=value)")
    p.add_argument("--n-frames", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("inject", help="model-driven artifact injection")
    p.add_argument("--frames", required=True, help="input cloud CSV glob")
    p.add_argument("--schedule", required=True, help="per-frame mirror states")
    p.add_argument("--params", help="model parameter file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("fit", help="re-fit artifact models from a campaign")
    p.add_argument("--campaign", required=True, help="campaign manifest")
    p.add_argument("--model", required=True,
                   choices=["offset", "radial", "count", "window"])
    p.add_argument("--params", help="base parameter file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("scenario", help="two-vehicle attack scenario")
    p.add_argument("--config", help="scenario config (key=value)")
    p.add_argument("--params", help="model parameter file")
    p.add_argument("--seed", type=int)
    p.add_argument("--no-attack", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("occupancy", help="build an occupancy grid from frames")
    p.add_argument("--frames", required=True, help="cloud CSV glob")
    p.add_argument("--config", help="grid config (key=value)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_occupancy)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

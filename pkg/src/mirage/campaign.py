"""Frame campaigns: paired baseline/attacked recordings annotated with the
mirror state, plus the segmentation pipeline that turns them into fit
samples.

A campaign manifest is line-oriented text; each line names one frame pair:

    d=2.4 theta=30 area=0.18 baseline=base.csv attacked=hit.csv frame=3

`frame` selects the frame index inside multi-frame CSVs (defaults to the
line's ordinal).  Appearance-probability targets are empirical trigger
frequencies, so campaigns should repeat each state across several frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mirage import fileio, registration, segmentation
from mirage.fileio import FileFormatError
from mirage.injection import InjectionConfig, inject
from mirage.lidar import PointCloud
from mirage.models import ArtifactFeatures, MirrorState


@dataclass
class CampaignFrame:
    state: MirrorState
    baseline: PointCloud
    attacked: PointCloud


@dataclass
class FrameCampaign:
    frames: list = field(default_factory=list)

    def __len__(self):
        return len(self.frames)


@dataclass
class SegmentationConfig:
    align: bool = True
    diff_radius: float = 0.10
    cluster_radius: float = 0.5
    min_cluster_points: int = 5


def load_manifest(path):
    """Read a campaign manifest; CSV paths are resolved relative to it."""
    import os

    base_dir = os.path.dirname(os.path.abspath(path))
    cache = {}

    def frames_of(csv_path, lineno):
        full = csv_path if os.path.isabs(csv_path) else os.path.join(base_dir, csv_path)
        if full not in cache:
            try:
                cache[full] = fileio.read_cloud_csv(full)
            except OSError as exc:
                raise FileFormatError(f"cannot read '{csv_path}': {exc}",
                                      path=path, line=lineno) from None
        return cache[full]

    schema = {"d": float, "theta": float, "area": float,
              "baseline": str, "attacked": str, "frame": int}
    campaign = FrameCampaign()
    ordinal = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            entry = {}
            for tok in line.split():
                if "=" not in tok:
                    raise FileFormatError(f"expected key=value, got {tok!r}",
                                          path=path, line=lineno)
                key, value = tok.split("=", 1)
                if key not in schema:
                    raise FileFormatError(f"unknown key '{key}'", path=path,
                                          line=lineno)
                try:
                    entry[key] = schema[key](value)
                except ValueError:
                    raise FileFormatError(f"bad value for '{key}': {value!r}",
                                          path=path, line=lineno) from None
            missing = {"d", "theta", "area", "baseline", "attacked"} - set(entry)
            if missing:
                raise FileFormatError(f"missing keys: {', '.join(sorted(missing))}",
                                      path=path, line=lineno)
            idx = entry.get("frame", ordinal)
            try:
                state = MirrorState(d=entry["d"], theta_deg=entry["theta"],
                                    area=entry["area"])
            except ValueError as exc:
                raise FileFormatError(str(exc), path=path, line=lineno) from None

            def pick(csv_path):
                frames = frames_of(csv_path, lineno)
                for cloud in frames:
                    if cloud.frame == idx:
                        return cloud
                raise FileFormatError(f"frame {idx} not found in '{csv_path}'",
                                      path=path, line=lineno)

            campaign.frames.append(CampaignFrame(
                state=state, baseline=pick(entry["baseline"]),
                attacked=pick(entry["attacked"])))
            ordinal += 1
    if not campaign.frames:
        raise FileFormatError("campaign manifest is empty", path=path)
    return campaign


def write_manifest(path, rows):
    """rows: iterables of (state, baseline_path, attacked_path, frame_idx)."""
    with open(path, "w", newline="\n") as fh:
        for state, base, attacked, idx in rows:
            fh.write(f"d={fileio.g9(state.d)} theta={fileio.g9(state.theta_deg)} "
                     f"area={fileio.g9(state.area)} baseline={base} "
                     f"attacked={attacked} frame={idx}\n")


def segment_frame(frame, config=SegmentationConfig()):
    """Difference one frame pair and return the artifact cluster features
    (None when no cluster survives)."""
    baseline_xyz = frame.baseline.xyz
    if config.align and len(frame.baseline) >= 3 and len(frame.attacked) >= 3:
        result = registration.icp_align(frame.baseline, frame.attacked)
        baseline_xyz = result.transform(baseline_xyz)
    extra = segmentation.frame_difference(frame.attacked, baseline_xyz,
                                          radius=config.diff_radius)
    clusters = segmentation.cluster(extra, radius=config.cluster_radius,
                                    min_points=config.min_cluster_points)
    if not clusters:
        return None
    largest = max(clusters, key=len)
    return segmentation.extract_features(extra.xyz[largest], frame.state)


def extract_samples(campaign, config=SegmentationConfig()):
    """Run segmentation across a campaign.

    Returns (location_samples, window_samples): the first holds one
    (state, features) pair per frame with a detected artifact; the second
    one pair per distinct state with the empirical trigger frequency in
    p_app (and mean N over triggered frames in n_artifact).
    """
    location = []
    by_state = {}
    for frame in campaign.frames:
        feats = segment_frame(frame, config)
        key = (frame.state.d, frame.state.theta_deg, frame.state.area)
        hits = by_state.setdefault(key, [])
        if feats is None:
            hits.append(None)
        else:
            hits.append(feats)
            location.append((frame.state, feats))
    window = []
    for key in sorted(by_state):
        hits = by_state[key]
        detected = [f for f in hits if f is not None]
        freq = len(detected) / len(hits)
        mean_n = float(np.mean([f.n_artifact for f in detected])) if detected else 0.0
        state = MirrorState(d=key[0], theta_deg=key[1], area=key[2])
        window.append((state, ArtifactFeatures(
            r_artifact=float(np.mean([f.r_artifact for f in detected])) if detected else 0.0,
            x_artifact=float(np.mean([f.x_artifact for f in detected])) if detected else 0.0,
            n_artifact=mean_n, p_app=freq)))
    return location, window


def synthesize_campaign(states, repeats=20, *, injection_config=None,
                        native=None, seed=0):
    """Generate an in-memory campaign by running the injector against a
    shared native frame, `repeats` times per state with independent draws."""
    config = injection_config or InjectionConfig()
    if native is None:
        native = PointCloud(frame=0, t=0.0)
    rng = np.random.default_rng(seed)
    campaign = FrameCampaign()
    idx = 0
    for state in states:
        for _ in range(repeats):
            base = native.replace(frame=idx, t=idx * 0.1)
            attacked, _ = inject(base, state, config, rng)
            campaign.frames.append(CampaignFrame(state=state, baseline=base,
                                                 attacked=attacked))
            idx += 1
    return campaign

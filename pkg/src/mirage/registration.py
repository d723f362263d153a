"""Rigid point-cloud registration (trimmed point-to-point ICP).

Nearest-neighbor pairing uses a KD-tree; each iteration drops the worst
10 % of pairs by default so stray artifact points cannot hijack the
alignment, then solves the closed-form rigid fit (centroids + SVD).  The
trimmed RMS residual is non-increasing across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


@dataclass
class IcpResult:
    rotation: np.ndarray     # 3x3
    translation: np.ndarray  # (3,)
    residual: float          # final trimmed RMS pair distance
    iterations: int
    converged: bool
    residual_history: list

    def transform(self, points):
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation


def best_fit_transform(source, target):
    """Least-squares rigid transform mapping `source` onto `target`
    (paired rows), via centroid removal and an orthogonal factorization."""
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    cs = source.mean(axis=0)
    ct = target.mean(axis=0)
    h = (source - cs).T @ (target - ct)
    u, _, vt = np.linalg.svd(h)
    rot = vt.T @ u.T
    if np.linalg.det(rot) < 0:  # reflection guard
        vt[-1, :] *= -1
        rot = vt.T @ u.T
    return rot, ct - rot @ cs


def icp_align(source, target, max_iterations=50, tolerance=1e-8,
              trim_fraction=0.10):
    """Align `source` onto `target`; both are (N,3) arrays or PointClouds.

    Iterates nearest-neighbor pairing and the closed-form rigid fit until
    the trimmed RMS residual changes by less than `tolerance` or the
    iteration cap is reached.
    """
    src = source.xyz if hasattr(source, "xyz") else np.asarray(source, dtype=float)
    tgt = target.xyz if hasattr(target, "xyz") else np.asarray(target, dtype=float)
    src = src.reshape(-1, 3)
    tgt = tgt.reshape(-1, 3)
    if src.shape[0] < 3 or tgt.shape[0] < 3:
        raise ValueError("ICP needs at least 3 points in each cloud")
    if not 0.0 <= trim_fraction < 1.0:
        raise ValueError("trim fraction must lie in [0, 1)")

    tree = cKDTree(tgt)
    current = src.copy()
    keep = max(3, int(round(src.shape[0] * (1.0 - trim_fraction))))
    prev = None
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        dists, idx = tree.query(current)
        order = np.argsort(dists)[:keep]
        # RMS over the trimmed pairs: the quantity the rigid fit provably
        # never increases.
        residual = float(np.sqrt(np.mean(dists[order] ** 2)))
        history.append(residual)
        if prev is not None and abs(prev - residual) < tolerance:
            converged = True
            break
        prev = residual
        rot, t = best_fit_transform(current[order], tgt[idx[order]])
        current = current @ rot.T + t

    rot, t = best_fit_transform(src, current)
    return IcpResult(rotation=rot, translation=t, residual=history[-1],
                     iterations=iterations, converged=converged,
                     residual_history=history)

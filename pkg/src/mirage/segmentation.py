"""Artifact segmentation: frame differencing, radius clustering, and
per-cluster feature extraction.

Neighbor queries run on a KD-tree; single-linkage clusters come from the
connected components of the radius graph.  Both are exact (no approximate
neighbors), so results are deterministic and order-stable.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from mirage.models import ArtifactFeatures


def frame_difference(attacked, baseline_xyz, radius=0.10):
    """Points of the attacked frame with no baseline point within `radius`.

    `attacked` is a PointCloud (returned filtered, metadata preserved);
    `baseline_xyz` an (N,3) array of the aligned baseline positions.
    A zero radius keeps every attacked point (degenerate threshold).
    """
    baseline_xyz = np.asarray(baseline_xyz, dtype=float).reshape(-1, 3)
    n = len(attacked)
    if radius <= 0 or baseline_xyz.shape[0] == 0 or n == 0:
        keep = np.ones(n, dtype=bool)
    else:
        tree = cKDTree(baseline_xyz)
        dist, _ = tree.query(attacked.xyz, k=1, distance_upper_bound=radius)
        keep = dist > radius  # unmatched queries come back as inf
    return attacked.replace(xyz=attacked.xyz[keep],
                            intensity=attacked.intensity[keep],
                            tag=attacked.tag[keep],
                            source=attacked.source[keep])


def cluster(points, radius=0.5, min_points=5):
    """Single-linkage radius clustering.

    `points` is an (N,3) array or PointCloud; returns a list of index arrays
    (ascending first-member order), dropping clusters smaller than
    `min_points`.
    """
    xyz = points.xyz if hasattr(points, "xyz") else np.asarray(points, dtype=float)
    xyz = xyz.reshape(-1, 3)
    if radius <= 0:
        raise ValueError("cluster radius must be positive")
    n = xyz.shape[0]
    if n == 0:
        return []
    pairs = cKDTree(xyz).query_pairs(radius, output_type="ndarray")
    graph = sparse.csr_matrix(
        (np.ones(pairs.shape[0], dtype=np.int8), (pairs[:, 0], pairs[:, 1])),
        shape=(n, n))
    _, labels = sparse.csgraph.connected_components(graph, directed=False)
    clusters = []
    for label in np.unique(labels):
        members = np.nonzero(labels == label)[0]
        if members.size >= min_points:
            clusters.append(members)
    clusters.sort(key=lambda m: int(m[0]))
    return clusters


def extract_features(cluster_xyz, state=None):
    """Centroid-based features of one artifact cluster.

    R is the magnitude of the centroid vector (apparent sensor distance), X
    its lateral (x) component, N the member count.  The appearance flag for
    an observed cluster is 1; per-state frequencies are assembled at the
    campaign level.
    """
    xyz = cluster_xyz.xyz if hasattr(cluster_xyz, "xyz") else np.asarray(cluster_xyz, dtype=float)
    xyz = xyz.reshape(-1, 3)
    if xyz.shape[0] == 0:
        raise ValueError("cannot extract features from an empty cluster")
    centroid = xyz.mean(axis=0)
    return ArtifactFeatures(
        r_artifact=float(np.linalg.norm(centroid)),
        x_artifact=float(centroid[0]),
        n_artifact=float(xyz.shape[0]),
        p_app=1.0,
    )

"""Mirror-induced LiDAR artifact simulation and analysis toolkit."""

__version__ = "0.1.0"

from mirage.geometry import (
    Box,
    Cone,
    Cylinder,
    Ground,
    Hit,
    MirrorPanel,
    Ray,
    Scene,
    VirtualPoint,
    fold_path,
    intersect,
    reflect,
)
from mirage.injection import InjectionConfig, InjectionReport, extract_state, inject
from mirage.lidar import LidarConfig, LidarPoint, PointCloud, received_power, scan
from mirage.models import (
    ArtifactFeatures,
    ArtifactModelParams,
    MirrorState,
    appearance_probability,
    lateral_offset,
    point_count,
    predict_features,
    radial_distance,
)

__all__ = [
    "ArtifactFeatures",
    "ArtifactModelParams",
    "Box",
    "Cone",
    "Cylinder",
    "Ground",
    "Hit",
    "InjectionConfig",
    "InjectionReport",
    "LidarConfig",
    "LidarPoint",
    "MirrorPanel",
    "MirrorState",
    "PointCloud",
    "Ray",
    "Scene",
    "VirtualPoint",
    "appearance_probability",
    "extract_state",
    "fold_path",
    "inject",
    "intersect",
    "lateral_offset",
    "point_count",
    "predict_features",
    "radial_distance",
    "received_power",
    "reflect",
    "scan",
    "__version__",
]

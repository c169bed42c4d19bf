"""Relative-angle point features for surface-defect segmentation.

The relative angle is a one-channel stand-in for three-channel normal
vectors: the angle between each point's normal and the mean normal of its
cloud. The package covers normalisation, KD-tree neighbourhoods, normal and
angle estimation, subset extraction, entropy evaluation, storage accounting,
segmentation scoring and a synthetic data generator.
"""

from ._kernels import BACKEND
from ._types import CloudData, NormalField, RelativeAngleField
from .features import average_normal, estimate_normals, relative_angles
from .normalization import normalize, rotate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CloudData",
    "NormalField",
    "RelativeAngleField",
    "average_normal",
    "estimate_normals",
    "normalize",
    "relative_angles",
    "rotate",
]

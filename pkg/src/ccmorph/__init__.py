"""Corpus callosum morphometry from segmentation masks and AC/PC landmarks.

Mid-sagittal plane estimation by centroid point-cloud registration,
sub-voxel contour meshing, Laplace-based thickness profiles, shape metrics,
geometric sub-segmentation, and group statistics.
"""

from .config import RunConfig
from .contour import Mask2D, Polyline, extract_contour, smooth_mask
from .evalstats import bh_correct, dice, hausdorff95, ols_fit, wilcoxon_ranksum
from .fem import (
    divergence,
    extract_level_set,
    gradient,
    rotate90,
    solve_dirichlet,
    solve_poisson,
    stiffness_matrix,
)
from .mesh import TriMesh2D
from .midplane import label_centroids, midsagittal_plane, plane_disagreement, resample_slab
from .morphometry import (
    EndpointPair,
    Landmarks2D,
    ShapeSummary,
    ThicknessProfile,
    cc_index,
    corrected_volume,
    find_endpoints,
    intercallosal_line,
    length_and_curvature,
    shape_summary,
    thickness_profile,
)
from .subseg import SubsegResult, SubsegScheme, default_fractions, subsegment
from .transforms import Landmarks, Plane, RigidTransform, acpc_standardize, kabsch_rigid
from .triangulate import triangulate
from .volume import Volume, load_volume, save_volume

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "Mask2D",
    "Polyline",
    "extract_contour",
    "smooth_mask",
    "bh_correct",
    "dice",
    "hausdorff95",
    "ols_fit",
    "wilcoxon_ranksum",
    "divergence",
    "extract_level_set",
    "gradient",
    "rotate90",
    "solve_dirichlet",
    "solve_poisson",
    "stiffness_matrix",
    "TriMesh2D",
    "label_centroids",
    "midsagittal_plane",
    "plane_disagreement",
    "resample_slab",
    "EndpointPair",
    "Landmarks2D",
    "ShapeSummary",
    "ThicknessProfile",
    "cc_index",
    "corrected_volume",
    "find_endpoints",
    "intercallosal_line",
    "length_and_curvature",
    "shape_summary",
    "thickness_profile",
    "SubsegResult",
    "SubsegScheme",
    "default_fractions",
    "subsegment",
    "Landmarks",
    "Plane",
    "RigidTransform",
    "acpc_standardize",
    "kabsch_rigid",
    "triangulate",
    "Volume",
    "load_volume",
    "save_volume",
    "__version__",
]

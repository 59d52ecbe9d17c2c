"""thermomorph: background suppression and anomaly segmentation for scalar fields.

Suppresses non-uniform backgrounds in scalar-field images (thermal
surveys in particular) by iterative grayscale morphological
reconstruction, then segments the residual anomalies with threshold or
k-means back-ends and scores them against ground-truth masks.
"""

from .background import (
    BackgroundConfig,
    BackgroundResult,
    estimate_background,
    residual,
)
from .errors import ThermomorphError
from .grid import Connectivity, ScalarGrid, StructuringElement
from .gridio import (
    RenderInfo,
    RenderSpec,
    read_grid,
    read_mask,
    render,
    write_grid,
    write_mask,
)
from .morpho import (
    ReconstructionMethod,
    dilate,
    erode,
    geodesic_dilate,
    h_dome,
    reconstruct_by_dilation,
    regional_maxima,
)
from .segment import (
    Condition,
    ConditionMask,
    DetectionReport,
    LabelMask,
    Region,
    classify_levels,
    connected_components,
    evaluate,
    kmeans_segment,
    threshold_segment,
)
from .synth import Blob, RectROI, SceneSpec, gen_scene, gen_signal_1d

__version__ = "0.1.0"

__all__ = [
    "BackgroundConfig",
    "BackgroundResult",
    "Blob",
    "Condition",
    "ConditionMask",
    "Connectivity",
    "DetectionReport",
    "LabelMask",
    "ReconstructionMethod",
    "RectROI",
    "Region",
    "RenderInfo",
    "RenderSpec",
    "ScalarGrid",
    "SceneSpec",
    "StructuringElement",
    "ThermomorphError",
    "classify_levels",
    "connected_components",
    "dilate",
    "erode",
    "estimate_background",
    "evaluate",
    "gen_scene",
    "gen_signal_1d",
    "geodesic_dilate",
    "h_dome",
    "kmeans_segment",
    "read_grid",
    "read_mask",
    "reconstruct_by_dilation",
    "regional_maxima",
    "render",
    "residual",
    "threshold_segment",
    "write_grid",
    "write_mask",
]

"""Multi-ellipse blood-cell detection via differential evolution."""

from .de import Candidate, DEConfig, InsufficientEdges, Population
from .detector import DetectionReport, DetectorConfig, detect, detect_on_edges
from .edgemap import EdgeMap
from .fitness import PENALTY, EdgeObjective, FitnessValue, edge_hit, evaluate
from .geometry import (
    Conic,
    DegenerateConic,
    Ellipse,
    NotAnEllipse,
    conic_from_5_points,
    ellipse_from_5_points,
    ellipse_params,
)
from .imaging import BinaryImage, GrayImage, PnmError, RgbImage, load_image, overlay_ellipses, save_image
from .raster import EmptyPerimeter, PerimeterSet, midpoint_sign, rasterize
from .segmentation import ClassMap, SegmentationConfig, morphological_edges, segment, wbc_mask

__version__ = "0.1.0"

__all__ = [
    "BinaryImage",
    "Candidate",
    "ClassMap",
    "Conic",
    "DEConfig",
    "DegenerateConic",
    "DetectionReport",
    "DetectorConfig",
    "EdgeMap",
    "EdgeObjective",
    "Ellipse",
    "EmptyPerimeter",
    "FitnessValue",
    "GrayImage",
    "InsufficientEdges",
    "NotAnEllipse",
    "PENALTY",
    "PerimeterSet",
    "PnmError",
    "Population",
    "RgbImage",
    "SegmentationConfig",
    "conic_from_5_points",
    "detect",
    "detect_on_edges",
    "edge_hit",
    "ellipse_from_5_points",
    "ellipse_params",
    "evaluate",
    "load_image",
    "midpoint_sign",
    "morphological_edges",
    "overlay_ellipses",
    "rasterize",
    "save_image",
    "segment",
    "wbc_mask",
]

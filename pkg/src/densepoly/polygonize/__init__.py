"""Skeleton-graph polygonization of interior, edge and frame-field rasters."""
from .acm import AcmEnergy, AcmParams, acm_refine
from .corners import detect_corners, rdp, split_and_simplify
from .faces import PlanarityError, ScoredPolygon, check_planar, extract_polygons, face_cycles, filter_polygons, find_crossings
from .pipeline import PipelineParams, PolygonizeParams, chains, merge_nodes, polygonize, prune, simplify_graph, untangle
from .skeleton import SkeletonGraph, pixel_graph, skeletonize, zhang_suen

__all__ = [
    "AcmEnergy", "AcmParams", "acm_refine",
    "detect_corners", "rdp", "split_and_simplify",
    "PlanarityError", "ScoredPolygon", "check_planar", "extract_polygons", "face_cycles", "filter_polygons", "find_crossings",
    "PipelineParams", "PolygonizeParams", "chains", "merge_nodes", "polygonize", "prune", "simplify_graph", "untangle",
    "SkeletonGraph", "pixel_graph", "skeletonize", "zhang_suen",
]

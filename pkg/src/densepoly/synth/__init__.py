"""Synthetic dense building scenes with exact ground truth."""
from .prng import Xoshiro256, normal_array, splitmix64
from .raster import GroundTruth, corrupt, pixel_centers_inside, rasterize
from .scene import DensityError, SceneConfig, generate_scene, ring_area

__all__ = [
    "DensityError", "GroundTruth", "SceneConfig", "Xoshiro256", "corrupt", "generate_scene",
    "normal_array", "pixel_centers_inside", "rasterize", "ring_area", "splitmix64",
]

"""Channel prediction from partially explored indoor maps."""
from .envmap import (CellClass, EnvironmentMap, FloorplanParams, ObservedRegion, WorldPoint, fill_free_space,
                     generate_floorplan, point_is_indoor)
from .explorer import ExplorationRun, explore, explore_to_coverage
from .features import FeatureVector, extract_features
from .kernels import BACKEND
from .predictor import ChannelModel, ChannelPrediction, load_model, predict, save_model
from .raytrace import LinkState, MapKind, PathSet, TracerConfig, link_state, omni_gain, trace

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CellClass", "ChannelModel", "ChannelPrediction", "EnvironmentMap", "ExplorationRun",
    "FeatureVector", "FloorplanParams", "LinkState", "MapKind", "ObservedRegion", "PathSet", "TracerConfig",
    "WorldPoint", "explore", "explore_to_coverage", "extract_features", "fill_free_space", "generate_floorplan",
    "link_state", "load_model", "omni_gain", "point_is_indoor", "predict", "save_model", "trace",
]

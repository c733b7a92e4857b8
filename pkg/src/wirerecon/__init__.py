"""Reconstruct 3D wireframes from orthographic line drawings.

A small network scores how plausible each three-edge corner of a candidate
reconstruction looks; a genetic search over vertex depths minimizes the
summed score and a hill climber polishes the result.
"""

from .datagen import build_training_set, displacement_grid, make_shape, random_prism
from .features import FEATURE_ORDER, CornerGeometry, FeatureVector, canonical_edge_order, compute_features
from .mlp import Network, TrainConfig, TrainingSet, fit, forward, load_model, save_model, train
from .search import (
    Fitness,
    GaConfig,
    HillClimbSchedule,
    Individual,
    crossover,
    evolve,
    fitness_of,
    hill_climb,
    mutate,
    reconstruct,
)
from .wireframe import (
    Corner,
    Wireframe,
    aligned_depth_error,
    enumerate_corners,
    export_obj,
    normalize,
    parse_obj,
    parse_wireframe,
    project,
)

__version__ = "0.1.0"

"""Ego-aware safety and comfort scores for motion predictions.

The package scores predicted occupancy against ground truth over the space
the ego vehicle could plausibly reach in the next few seconds.
"""

from .beelines import DistributionConfig, TrajectoryEnsemble, generate_beelines, reach_density, reach_probability
from .footprints import Footprints
from .kernels import BACKEND
from .metrics import MetricConfig, MetricResult, evaluate_metrics, grad_p_lambda, p_lambda, p_lambda_actor, p_zeta
from .occupancy import (
    ActorClass,
    ActorTrack,
    EgoState,
    GridSpec,
    OccupancyField,
    OrientedBox,
    PredictionMode,
    PredictionSet,
    Scenario,
)
from .path_frame import NominalPath, build_curvilinear_mesh, project_to_path, unproject_points

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ActorClass",
    "ActorTrack",
    "DistributionConfig",
    "EgoState",
    "Footprints",
    "GridSpec",
    "MetricConfig",
    "MetricResult",
    "NominalPath",
    "OccupancyField",
    "OrientedBox",
    "PredictionMode",
    "PredictionSet",
    "Scenario",
    "TrajectoryEnsemble",
    "build_curvilinear_mesh",
    "evaluate_metrics",
    "generate_beelines",
    "grad_p_lambda",
    "p_lambda",
    "p_lambda_actor",
    "p_zeta",
    "project_to_path",
    "reach_density",
    "reach_probability",
    "unproject_points",
]

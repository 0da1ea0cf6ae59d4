"""Radio SLAM with Dirichlet-process mapping of virtual anchors and scatterers.

The package is organised bottom-up:

``world``     ground truth, propagation geometry and measurement synthesis
``motion``    EKF over the 7D vehicle state
``birth``     measurement to landmark-position hypotheses
``dpmap``     streaming DP clustering of birth points into VA/SP maps
``metrics``   GOSPA and MAE/RMSE aggregation
``harness``   seeded Monte-Carlo runner and CSV artifacts
"""

from dpslam.config import DPConfig, GospaConfig, ScenarioConfig, load_config
from dpslam.errors import (
    ConfigError,
    DegenerateGeometry,
    DPSlamError,
    NegativeRange,
    SingularCovariance,
    SingularInnovation,
)

__all__ = [
    "ConfigError",
    "DPConfig",
    "DPSlamError",
    "DegenerateGeometry",
    "GospaConfig",
    "NegativeRange",
    "ScenarioConfig",
    "SingularCovariance",
    "SingularInnovation",
    "load_config",
]

__version__ = "0.1.0"

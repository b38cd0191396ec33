"""Time-domain enclosure method: wave simulation, Laplace-in-time indicators
and distance / boundary-coefficient extraction."""

from .extraction import (DistanceFit, ExtractionError, RecoveryReport, classify_sign,
                         estimate_distance, recover_gamma_beta_1d)
from .geometry import (AxisBox, Ball, ConfigurationError, GeometryError, HalfLine1D,
                       Interval1D, SceneSpec, broken_path_length, dist_sets,
                       min_observation_time)
from .indicator import IndicatorCurve, backscatter_indicator, surface_indicator
from .pipeline import indicator_curves_1d, indicator_curves_3d
from .sources import SourceBall, eval_grad_v, eval_v, eval_v_1d, source_moment
from .transform import LaplaceField, default_tau_grid, laplace_in_time

__version__ = "0.1.0"

__all__ = [
    "AxisBox",
    "Ball",
    "ConfigurationError",
    "DistanceFit",
    "ExtractionError",
    "GeometryError",
    "HalfLine1D",
    "IndicatorCurve",
    "Interval1D",
    "LaplaceField",
    "RecoveryReport",
    "SceneSpec",
    "SourceBall",
    "backscatter_indicator",
    "broken_path_length",
    "classify_sign",
    "default_tau_grid",
    "dist_sets",
    "estimate_distance",
    "eval_grad_v",
    "eval_v",
    "eval_v_1d",
    "indicator_curves_1d",
    "indicator_curves_3d",
    "laplace_in_time",
    "min_observation_time",
    "recover_gamma_beta_1d",
    "source_moment",
    "surface_indicator",
]

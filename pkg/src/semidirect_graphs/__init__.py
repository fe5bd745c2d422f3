"""Prescribed mean curvature graphs in metric Lie groups R^2 x_A R."""

from .lie_algebra import GroupMatrix, GroupPoint, exp_Az, metric_jet, normalize_trace

__version__ = "0.1.0"

__all__ = ["GroupMatrix", "GroupPoint", "exp_Az", "metric_jet", "normalize_trace"]

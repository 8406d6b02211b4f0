"""Alternating Halpern-Mann iterations in geodesic spaces, with exact quantitative rates."""

from .errors import NumericError, RateOverflow, UsageError
from .geometry import (
    EuclideanSpace,
    HyperboloidPlane,
    Point,
    SpiderTree,
    combine,
    dist,
    euclidean,
    quasilin,
    tree_point,
)
from .schemes import HMProblem, Schedule, harmonic_schedule, run_halpern, run_hm, run_hm_errors

__version__ = "0.1.0"

__all__ = [
    "EuclideanSpace",
    "HMProblem",
    "HyperboloidPlane",
    "NumericError",
    "Point",
    "RateOverflow",
    "Schedule",
    "SpiderTree",
    "UsageError",
    "combine",
    "dist",
    "euclidean",
    "harmonic_schedule",
    "quasilin",
    "run_halpern",
    "run_hm",
    "run_hm_errors",
    "tree_point",
]

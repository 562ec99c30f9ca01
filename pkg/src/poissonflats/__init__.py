"""Simulation and verification engine for stationary Poisson k-flat
processes with k < d/2: exact flat geometry, closed-form theory constants,
process sampling, the pairwise-distance point process, chaos-kernel
quadrature oracles, and replication experiments checking the limit laws.
"""

from ._paircore import backend_name
from .closedform import ModelParams, Window
from .geometry import AffineFlat, ClosestPair
from .process import FlatProcessSample, SampleRegion
from .proximity import DistanceRecord, OrderedDistances

__version__ = "0.1.0"

__all__ = [
    "AffineFlat", "ClosestPair", "DistanceRecord", "FlatProcessSample",
    "ModelParams", "OrderedDistances", "SampleRegion", "Window",
    "backend_name", "__version__",
]

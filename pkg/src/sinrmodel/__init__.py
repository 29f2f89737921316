"""Exact downlink SINR distributions for cellular layouts with log-normal shadowing."""

__version__ = "0.1.0"

from .deployment import (AntennaPattern, Deployment, PropagationModel, Sector, Site, build_hex_grid,
                         evaluation_triangle, paper12)
from .griddist import DbGrid, Gridded, NumericalAccuracyError, PointMass
from .model import (GridSpec, NoiseModel, ShadowingModel, SinrDistribution, area_sinr, association_probabilities,
                    build_link_ensemble, sinr_best_server, sinr_distribution, sinr_fixed_association)
from .montecarlo import EmpiricalCdf, SimConfig, ks_distance

__all__ = [
    "AntennaPattern", "DbGrid", "Deployment", "EmpiricalCdf", "GridSpec", "Gridded", "NoiseModel",
    "NumericalAccuracyError", "PointMass", "PropagationModel", "Sector", "ShadowingModel", "SimConfig",
    "SinrDistribution", "Site", "area_sinr", "association_probabilities", "build_hex_grid",
    "build_link_ensemble", "evaluation_triangle", "ks_distance", "paper12", "sinr_best_server",
    "sinr_distribution", "sinr_fixed_association",
]

"""Stochastic six-vertex model and exclusion-process simulation toolkit."""
from __future__ import annotations

from .analytics import (OddsPair, StepConstants, admissible, characteristic_point, expected_height,
                        invert_beta, limit_shape, rains_ejs_mgf, stationary_pair, step_constants, x0_of_y, y0_of_x)
from .model import (BoundarySpec, ModelParams, PathEnsemble, Segment, derive_params, dump_ensemble,
                    height_flux, load_ensemble, sample_ensemble, text_grid)
from .noise import GENERATOR_VERSION, Channel, NoiseField

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec", "Channel", "GENERATOR_VERSION", "ModelParams", "NoiseField", "OddsPair", "PathEnsemble",
    "Segment", "StepConstants", "admissible", "characteristic_point", "derive_params", "dump_ensemble",
    "expected_height", "height_flux", "invert_beta", "limit_shape", "load_ensemble", "rains_ejs_mgf", "sample_ensemble",
    "stationary_pair", "step_constants", "text_grid", "x0_of_y", "y0_of_x",
]

"""slabwave: spectral solver and verification toolkit for stationary and
slowly traveling free-boundary Stokes waves in a horizontally periodic slab."""

from .grid import (Grid, BulkField, SurfaceField, make_grid, transform_forward,
                   transform_inverse, cheb_diff, apply_multiplier)
from .params import Params, StressForce

__version__ = "0.1.0"

"""Least gradient solutions on convex planar domains.

Chord constructions for boundary data on arcs, circles and rectangles, the
dual flux of minimal mass, and a discrete total variation minimizer used to
cross-check them.
"""

from .errors import GeometryError, ValidationError
from .runner import run_scenario
from .scenarios import build, load_scenario

__version__ = "0.1.0"

__all__ = ["GeometryError", "ValidationError", "build", "load_scenario", "run_scenario", "__version__"]

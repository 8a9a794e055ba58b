"""Numerical Teukolsky-mode machinery for the non-extreme Kerr exterior."""

from .geometry import KerrParams, GeometryCache, horizon_radius, delta
from .geometry import regge_wheeler_u, regge_wheeler_r

__version__ = "0.1.0"

"""Physical constants and data carriers shared across the solver layers."""

from __future__ import annotations

from dataclasses import dataclass

from .spaces import SobolevIndex

__all__ = ["Params", "StressForce"]


@dataclass(frozen=True)
class Params:
    """Physical constants and diagnostic Sobolev indices.

    Strict positivity of gravity, viscosity, surface tension, and depth is
    structural (the solvability theory uses all four); the fluid density is
    normalized to 1 throughout.  ``wave_speed`` is the traveling frame speed
    gamma and may take any sign.
    """

    gravity: float = 1.0
    viscosity: float = 1.0
    surface_tension: float = 1.0
    depth: float = 1.0
    wave_speed: float = 0.0
    sobolev: SobolevIndex = SobolevIndex(4, 1.5)

    def __post_init__(self):
        for name in ("gravity", "viscosity", "surface_tension", "depth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class StressForce:
    """Stress tensor and bulk force as callables on R^3.

    T is a 3x3 nest of callables (no symmetry imposed), F a length-3 nest;
    each callable accepts numpy arrays (x1, x2, x3) and returns samples.
    """

    T: tuple
    F: tuple

    @staticmethod
    def zero():
        z = lambda x1, x2, x3: 0.0 * x1
        return StressForce(T=tuple(tuple(z for _ in range(3)) for _ in range(3)),
                           F=(z, z, z))

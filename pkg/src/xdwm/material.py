"""Physical constants and ferromagnet parameters."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from math import pi


@dataclass(frozen=True)
class PhysicalConstants:
    mu0: float = 4e-7 * pi          # T m / A
    muB: float = 9.2740100783e-24   # J / T
    e: float = 1.602176634e-19      # C
    hbar: float = 1.054571817e-34   # J s
    gamma: float = 1.7595e11        # rad / (s T)

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be strictly positive")

    @property
    def gamma0(self) -> float:
        """Gyromagnetic ratio times mu0, for fields in A/m."""
        return self.gamma * self.mu0


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class MaterialParams:
    """Magnetic and electrical parameters of the nanowire ferromagnet.

    Defaults are the Co/CoFeB-class PMA values used throughout the XDWM
    studies; ``rho`` is not a measured value but a permalloy-class
    placeholder that mostly sets absolute currents.
    """

    A: float = 1.0e-11      # J/m
    alpha: float = 0.02
    beta: float = 0.04
    Ms: float = 6.0e5       # A/m
    Ku: float = 0.59e6      # J/m^3, easy axis +z
    P: float = 0.72
    rho: float = 2.0e-7     # Ohm m
    AMRc: float = 0.014

    def __post_init__(self):
        checks = {
            "A": self.A > 0,
            "Ms": self.Ms > 0,
            "Ku": self.Ku >= 0,
            "P": 0 < self.P <= 1,
            "alpha": self.alpha > 0,
            "beta": self.beta >= 0,
            "rho": self.rho > 0,
            "AMRc": 0 <= self.AMRc < 1,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"invalid material parameters: {', '.join(bad)}")

    def with_(self, **changes) -> "MaterialParams":
        return replace(self, **changes)

    def k_eff(self, c: PhysicalConstants = CONSTANTS) -> float:
        """Thin-film effective anisotropy Ku - mu0 Ms^2 / 2."""
        return self.Ku - 0.5 * c.mu0 * self.Ms**2

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
